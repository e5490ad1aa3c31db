// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// `photoapp` command-line entry point. run() never exits the process, so the
// test suite drives it in-process.
//
// Exit codes: 0 success, 1 runtime error (message on stderr), 2 usage error.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "photoapp/parallel.hpp"
#include "photoapp/pipeline.hpp"
#include "photoapp/service.hpp"

namespace photoapp::cli {

inline constexpr int kExitOk      = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage   = 2;

struct Options
{
    int threads = 0;

    // relight / resample / edit
    std::string stack, env, basis, out, input, checkpoint, manifest, pairs, config, set;
    double      exposure = kDefaultExposure;
    double      gamma    = kDefaultGamma;
    double      yaw = 0.0, pitch = 0.0, roll = 0.0;
    int         p = 0, q = 0;

    // synth-world / make-pairs / eval
    std::uint64_t seed  = 0;
    int           size  = 64;
    int           count = kPairsPerIdentity;

    // serve
    int         port = 8080;
    std::string host = "127.0.0.1";
};

namespace detail {

inline LightBasis basis_or_default(const std::string& path)
{
    if (path.empty())
        return fibonacci_basis();
    return parse_basis_text(read_text(path));
}

inline int cmd_relight(const Options& o, std::ostream& out)
{
    const auto basis = basis_or_default(o.basis);
    const auto stack = load_olat_stack(o.stack, basis.size());
    const auto img   = relight(stack, load_env_weights(o.env, basis));
    save_image(o.out, img, o.exposure, o.gamma);
    out << o.out << '\n';
    return kExitOk;
}

inline int cmd_resample(const Options& o, std::ostream& out)
{
    const auto basis = basis_or_default(o.basis);
    const auto w     = resample_to_basis(LatLongEnvMap(load_hdr(o.env)), basis);
    write_text_atomic(o.out, weights_to_json(w).dump() + "\n");
    out << o.out << '\n';
    return kExitOk;
}

inline int cmd_synth_world(const Options& o, std::ostream& out)
{
    ToyWorldConfig cfg;
    cfg.seed       = o.seed;
    cfg.resolution = o.size;
    auto ds        = make_toy_dataset(cfg);
    out << save_dataset(o.out, ds).string() << '\n';
    return kExitOk;
}

inline int cmd_make_pairs(const Options& o, std::ostream& out)
{
    const auto m     = DatasetManifest::load(o.manifest);
    const auto pairs = make_training_pairs(m, o.count, o.seed);
    write_text_atomic(o.out, pairs_to_json(pairs).dump(1) + "\n");
    out << pairs.size() << " pairs -> " << o.out << '\n';
    return kExitOk;
}

inline int cmd_train(const Options& o, std::ostream& out)
{
    const auto cfg   = TrainConfig::from_json(nlohmann::json::parse(read_text(o.config)));
    const auto m     = DatasetManifest::load(o.manifest);
    const auto pairs = pairs_from_json(nlohmann::json::parse(read_text(o.pairs)));
    const auto ds    = load_dataset(m, m.train);
    for (const auto& [key, stack] : ds.stacks)
        if (stack.images.front().width != cfg.image_size || stack.images.front().height != cfg.image_size)
            throw ConfigurationError("dataset images are " + std::to_string(stack.images.front().width) +
                                     " wide but the config's image_size is " + std::to_string(cfg.image_size));

    const auto gen   = make_generator(cfg.generator_spec());
    auto       cache = projected_cache(ds, gen);
    const auto ex    = examples_from_pairs(pairs, cache);

    const fs::path dir = o.out;
    fs::create_directories(dir);
    write_text_atomic(dir / "config.json", cfg.to_json().dump(2) + "\n");
    PyramidFeatures phi;
    auto            result = train(ex, *gen, cfg, phi,
                                   [&](const Checkpoint& ck)
                                   {
                                       char name[32];
                                       std::snprintf(name, sizeof name, "step_%06llu.panv",
                                                     static_cast<unsigned long long>(ck.step));
                                       write_checkpoint_file(dir / name, ck);
                                   });
    write_checkpoint_file(dir / "checkpoint.panv", result.checkpoint);
    write_text_atomic(dir / "loss_log.csv", loss_log_csv(result.log));
    out << "trained " << result.checkpoint.step << " steps -> " << (dir / "checkpoint.panv").string() << '\n';
    return kExitOk;
}

inline int cmd_edit(const Options& o, std::ostream& out)
{
    const auto ck  = read_checkpoint_file(o.checkpoint);
    const auto gen = make_generator(ck.generator);

    ConditionVector cond;
    cond.env  = load_env_weights(o.env, fibonacci_basis(ck.net.shape.env_dim / 3));
    cond.pose = CameraPose{o.yaw, o.pitch, o.roll};
    cond.p    = o.p;
    cond.q    = o.q;

    const auto source = load_edit_source(o.input);
    if (lower_extension(o.out) == ".json")
    {
        auto latent = edit_latent(ck.net, ck.params, source_latent(*gen, source), cond);
        write_text_atomic(o.out, latent_to_json(latent).dump() + "\n");
    }
    else
        save_image(o.out, edit(*gen, ck.net, ck.params, source, cond), 1.0, 1.0);
    out << o.out << '\n';
    return kExitOk;
}

inline int cmd_eval(const Options& o, std::ostream& out)
{
    const auto ck    = read_checkpoint_file(o.checkpoint);
    const auto m     = DatasetManifest::load(o.manifest);
    const auto sets  = make_eval_sets(m, o.seed);
    const auto ds    = load_dataset(m, m.test);
    const auto gen   = make_generator(ck.generator);
    auto       cache = projected_cache(ds, gen);
    const bool one   = o.set == "set1";
    auto       rep   = evaluate_pairs(cache, *gen, ck.net, ck.params, one ? sets.set1 : sets.set2, one ? "Set1" : "Set2");
    if (lower_extension(o.out) == ".csv")
        write_text_atomic(o.out, rep.to_csv());
    else
        write_text_atomic(o.out, rep.to_json().dump(2) + "\n");
    out << rep.to_csv();
    return kExitOk;
}

inline int cmd_serve(const Options& o, std::ostream& out)
{
    ServiceOptions so;
    if (!o.checkpoint.empty())
        so.checkpoint = read_checkpoint_file(o.checkpoint);
    if (!o.manifest.empty())
        so.manifest = DatasetManifest::load(o.manifest);
    EditService     svc(std::move(so));
    httplib::Server server;
    svc.install(server);
    if (!server.bind_to_port(o.host, o.port))
        throw IoError("cannot listen on " + o.host + ":" + std::to_string(o.port));
    out << "listening on http://" << o.host << ':' << o.port << "/api/v1/" << std::endl;
    server.listen_after_bind();
    return kExitOk;
}

} // namespace detail

/// Runs one subcommand. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    Options  o;
    CLI::App app{"Portrait OLAT relighting and latent editing", "photoapp"};
    app.require_subcommand(1);
    app.add_option("--threads", o.threads, "Worker thread cap (0 = hardware)")->check(CLI::NonNegativeNumber);

    auto* relight_cmd = app.add_subcommand("relight", "Relight an OLAT stack with an environment map");
    relight_cmd->add_option("--stack", o.stack, "OLAT stack directory")->required();
    relight_cmd->add_option("--env", o.env, "Environment map (.hdr) or weights (.json)")->required();
    relight_cmd->add_option("--basis", o.basis, "Light basis text file");
    relight_cmd->add_option("--out", o.out, "Output image (.hdr or .png)")->required();
    relight_cmd->add_option("--exposure", o.exposure, "PNG exposure")->check(CLI::PositiveNumber);
    relight_cmd->add_option("--gamma", o.gamma, "PNG gamma")->check(CLI::PositiveNumber);

    auto* resample_cmd = app.add_subcommand("resample", "Resample an environment map onto a light basis");
    resample_cmd->add_option("--env", o.env, "Environment map (.hdr)")->required();
    resample_cmd->add_option("--basis", o.basis, "Light basis text file")->required();
    resample_cmd->add_option("--out", o.out, "Output weights (.json)")->required();

    auto* synth_cmd = app.add_subcommand("synth-world", "Write a synthetic Lambertian dataset");
    synth_cmd->add_option("--seed", o.seed, "World seed")->required();
    synth_cmd->add_option("--size", o.size, "Image resolution")->required()->check(CLI::Range(16, 4096));
    synth_cmd->add_option("--out", o.out, "Output directory")->required();

    auto* pairs_cmd = app.add_subcommand("make-pairs", "Sample training pairs from a manifest");
    pairs_cmd->add_option("--manifest", o.manifest, "Dataset manifest")->required();
    pairs_cmd->add_option("--count", o.count, "Pairs per identity")->required()->check(CLI::PositiveNumber);
    pairs_cmd->add_option("--seed", o.seed, "Sampling seed")->required();
    pairs_cmd->add_option("--out", o.out, "Output pairs (.json)")->required();

    auto* train_cmd = app.add_subcommand("train", "Train the editing network");
    train_cmd->add_option("--manifest", o.manifest, "Dataset manifest")->required();
    train_cmd->add_option("--pairs", o.pairs, "Training pairs (.json)")->required();
    train_cmd->add_option("--config", o.config, "Training config (.json)")->required();
    train_cmd->add_option("--out", o.out, "Output directory")->required();

    auto* edit_cmd = app.add_subcommand("edit", "Edit an image or latent code");
    edit_cmd->add_option("--checkpoint", o.checkpoint, "Network checkpoint")->required();
    edit_cmd->add_option("--input", o.input, "Source image (.png/.hdr) or latent code (.json)")->required();
    edit_cmd->add_option("--env", o.env, "Target environment map (.hdr) or weights (.json)")->required();
    edit_cmd->add_option("--yaw", o.yaw, "Target yaw (radians)")->required();
    edit_cmd->add_option("--pitch", o.pitch, "Target pitch (radians)")->required();
    edit_cmd->add_option("--roll", o.roll, "Target roll (radians)")->required();
    edit_cmd->add_option("--p", o.p, "Pose-change flag")->check(CLI::Range(0, 1));
    edit_cmd->add_option("--q", o.q, "Illumination-change flag")->check(CLI::Range(0, 1));
    edit_cmd->add_option("--out", o.out, "Output image (.png/.hdr) or latent (.json)")->required();

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on Set1 or Set2");
    eval_cmd->add_option("--checkpoint", o.checkpoint, "Network checkpoint")->required();
    eval_cmd->add_option("--manifest", o.manifest, "Dataset manifest")->required();
    eval_cmd->add_option("--set", o.set, "Evaluation set")->required()->check(CLI::IsMember({"set1", "set2"}));
    eval_cmd->add_option("--seed", o.seed, "Pair sampling seed");
    eval_cmd->add_option("--out", o.out, "Report (.json or .csv)")->required();

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP editing service");
    serve_cmd->add_option("--checkpoint", o.checkpoint, "Network checkpoint for latent sessions");
    serve_cmd->add_option("--port", o.port, "TCP port")->required()->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--manifest", o.manifest, "Dataset manifest for the environment catalog");
    serve_cmd->add_option("--host", o.host, "Bind address");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try
    {
        app.parse(reversed);
    }
    catch (const CLI::CallForHelp&)
    {
        out << app.help();
        return kExitOk;
    }
    catch (const CLI::CallForAllHelp&)
    {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    }
    catch (const CLI::ParseError& e)
    {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    set_max_threads(o.threads);
    try
    {
        if (relight_cmd->parsed())
            return detail::cmd_relight(o, out);
        if (resample_cmd->parsed())
            return detail::cmd_resample(o, out);
        if (synth_cmd->parsed())
            return detail::cmd_synth_world(o, out);
        if (pairs_cmd->parsed())
            return detail::cmd_make_pairs(o, out);
        if (train_cmd->parsed())
            return detail::cmd_train(o, out);
        if (edit_cmd->parsed())
            return detail::cmd_edit(o, out);
        if (eval_cmd->parsed())
            return detail::cmd_eval(o, out);
        if (serve_cmd->parsed())
            return detail::cmd_serve(o, out);
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

} // namespace photoapp::cli
