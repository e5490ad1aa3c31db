// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Dataset manifests, in-memory datasets, and source/target pair generation.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "photoapp/envmap.hpp"
#include "photoapp/error.hpp"
#include "photoapp/file_io.hpp"
#include "photoapp/olat.hpp"
#include "photoapp/radiance_io.hpp"
#include "photoapp/synth_world.hpp"
#include "photoapp/tonemap.hpp"

namespace photoapp {

namespace fs = std::filesystem;
using json   = nlohmann::json;

struct CameraRecord
{
    std::string id;
    CameraPose  pose;
    fs::path    olat_dir; ///< relative to the manifest root
};

struct IdentityRecord
{
    std::string               id;
    std::vector<CameraRecord> cameras;

    const CameraRecord& camera(const std::string& camera_id) const
    {
        for (const auto& c : cameras)
            if (c.id == camera_id)
                return c;
        throw ConfigurationError("identity '" + id + "' has no camera '" + camera_id + "'");
    }
};

struct EnvRecord
{
    std::string id;
    fs::path    path; ///< relative to the manifest root
};

struct DatasetManifest
{
    fs::path                    root;
    std::optional<fs::path>     basis_file;
    std::vector<IdentityRecord> identities;
    std::vector<EnvRecord>      envmaps;
    std::vector<std::string>    train;
    std::vector<std::string>    test;

    const IdentityRecord& identity(const std::string& id) const
    {
        for (const auto& r : identities)
            if (r.id == id)
                return r;
        throw ConfigurationError("manifest has no identity '" + id + "'");
    }

    const EnvRecord& envmap(const std::string& id) const
    {
        for (const auto& e : envmaps)
            if (e.id == id)
                return e;
        throw ConfigurationError("manifest has no environment map '" + id + "'");
    }

    /// Structural checks; with `check_files`, every referenced file must exist.
    void validate(bool check_files) const
    {
        std::set<std::string> ids;
        for (const auto& r : identities)
        {
            if (!ids.insert(r.id).second)
                throw ConfigurationError("duplicate identity id '" + r.id + "'");
            std::set<std::string> cams;
            for (const auto& c : r.cameras)
                if (!cams.insert(c.id).second)
                    throw ConfigurationError("duplicate camera id '" + c.id + "' for identity '" + r.id + "'");
        }
        std::set<std::string> env_ids;
        for (const auto& e : envmaps)
            if (!env_ids.insert(e.id).second)
                throw ConfigurationError("duplicate environment map id '" + e.id + "'");
        std::set<std::string> train_set(train.begin(), train.end());
        for (const auto& t : test)
            if (train_set.count(t))
                throw ConfigurationError("identity '" + t + "' is in both train and test splits");
        for (const auto* split : {&train, &test})
            for (const auto& id : *split)
                if (!ids.count(id))
                    throw ConfigurationError("split references unknown identity '" + id + "'");
        if (!check_files)
            return;
        auto require = [&](const fs::path& rel)
        {
            if (!fs::exists(root / rel))
                throw IoError("manifest references missing file '" + (root / rel).string() + "'");
        };
        if (basis_file)
            require(*basis_file);
        for (const auto& e : envmaps)
            require(e.path);
        for (const auto& r : identities)
            for (const auto& c : r.cameras)
                for (int i = 0; i < kBasisLightCount; ++i)
                    require(olat_image_path(c.olat_dir, i));
    }

    json to_json() const
    {
        json j;
        j["basis_file"] = basis_file ? json(basis_file->generic_string()) : json(nullptr);
        j["identities"] = json::array();
        for (const auto& r : identities)
        {
            json cams = json::array();
            for (const auto& c : r.cameras)
                cams.push_back({{"id", c.id},
                                {"pose", {{"yaw", c.pose.yaw}, {"pitch", c.pose.pitch}, {"roll", c.pose.roll}}},
                                {"olat_dir", c.olat_dir.generic_string()}});
            j["identities"].push_back({{"id", r.id}, {"cameras", cams}});
        }
        j["envmaps"] = json::array();
        for (const auto& e : envmaps)
            j["envmaps"].push_back({{"id", e.id}, {"path", e.path.generic_string()}});
        j["split"] = {{"train", train}, {"test", test}};
        return j;
    }

    static DatasetManifest from_json(const json& j, fs::path root)
    {
        DatasetManifest m;
        m.root = std::move(root);
        try
        {
            if (j.contains("basis_file") && !j.at("basis_file").is_null())
                m.basis_file = fs::path(j.at("basis_file").get<std::string>());
            for (const auto& r : j.at("identities"))
            {
                IdentityRecord rec;
                rec.id = r.at("id").get<std::string>();
                for (const auto& c : r.at("cameras"))
                {
                    CameraRecord cam;
                    cam.id       = c.at("id").get<std::string>();
                    const auto& p = c.at("pose");
                    cam.pose      = CameraPose{p.at("yaw").get<double>(), p.at("pitch").get<double>(),
                                          p.at("roll").get<double>()}
                                   .normalized();
                    cam.olat_dir = fs::path(c.at("olat_dir").get<std::string>());
                    rec.cameras.push_back(std::move(cam));
                }
                m.identities.push_back(std::move(rec));
            }
            for (const auto& e : j.at("envmaps"))
                m.envmaps.push_back({e.at("id").get<std::string>(), fs::path(e.at("path").get<std::string>())});
            m.train = j.at("split").at("train").get<std::vector<std::string>>();
            m.test  = j.at("split").at("test").get<std::vector<std::string>>();
        }
        catch (const json::exception& e)
        {
            throw FormatError(std::string("malformed dataset manifest: ") + e.what());
        }
        m.validate(false);
        return m;
    }

    static DatasetManifest load(const fs::path& path)
    {
        json j;
        try
        {
            j = json::parse(read_text(path));
        }
        catch (const json::parse_error& e)
        {
            throw FormatError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
        }
        auto m = from_json(j, path.parent_path());
        m.validate(true);
        return m;
    }
};

/// A manifest plus the images it references, held in memory.
struct Dataset
{
    DatasetManifest                                          manifest;
    LightBasis                                               basis;
    std::map<std::pair<std::string, std::string>, OlatStack> stacks; ///< keyed by (identity, camera)
    std::map<std::string, LatLongEnvMap>                     envmaps;
    std::map<std::string, LightWeights>                      env_weights;

    const OlatStack& stack(const std::string& identity, const std::string& camera) const
    {
        auto it = stacks.find({identity, camera});
        if (it == stacks.end())
            throw ConfigurationError("no OLAT stack for identity '" + identity + "' camera '" + camera + "'");
        return it->second;
    }

    const LightWeights& weights(const std::string& env_id) const
    {
        auto it = env_weights.find(env_id);
        if (it == env_weights.end())
            throw ConfigurationError("no environment map '" + env_id + "'");
        return it->second;
    }

    CameraPose pose(const std::string& identity, const std::string& camera) const
    {
        return manifest.identity(identity).camera(camera).pose;
    }

    void compute_env_weights()
    {
        env_weights.clear();
        for (const auto& [id, env] : envmaps)
            env_weights.emplace(id, resample_to_basis(env, basis));
    }
};

inline LightBasis load_basis(const DatasetManifest& m)
{
    if (!m.basis_file)
        return fibonacci_basis(kBasisLightCount);
    return parse_basis_text(read_text(m.root / *m.basis_file));
}

/// Loads everything a manifest references. `identities` restricts which stacks
/// are read (empty = all).
inline Dataset load_dataset(const DatasetManifest& manifest, const std::vector<std::string>& identities = {})
{
    manifest.validate(true);
    Dataset ds;
    ds.manifest = manifest;
    ds.basis    = load_basis(manifest);
    if (ds.basis.size() != kBasisLightCount)
        throw ConfigurationError("light basis must have " + std::to_string(kBasisLightCount) + " lights");
    for (const auto& r : manifest.identities)
    {
        if (!identities.empty() && std::find(identities.begin(), identities.end(), r.id) == identities.end())
            continue;
        for (const auto& c : r.cameras)
        {
            auto stack        = load_olat_stack(manifest.root / c.olat_dir);
            stack.identity_id = r.id;
            stack.camera_id   = c.id;
            stack.pose        = c.pose;
            ds.stacks.emplace(std::make_pair(r.id, c.id), std::move(stack));
        }
    }
    for (const auto& e : manifest.envmaps)
        ds.envmaps.emplace(e.id, LatLongEnvMap(load_hdr(manifest.root / e.path)));
    ds.compute_env_weights();
    return ds;
}

struct ToyWorldConfig
{
    std::uint64_t seed            = 1;
    int           resolution      = 64;
    int           train_identities = 3;
    int           test_identities  = 1;
    int           cameras         = 4;
    int           envmaps         = 16;
    int           env_width       = 64;
    int           env_height      = 32;
};

/// Camera rig spread over the frontal hemisphere.
inline std::vector<CameraPose> toy_camera_rig(int cameras)
{
    std::vector<CameraPose> rig;
    for (int k = 0; k < cameras; ++k)
    {
        double t = cameras == 1 ? 0.0 : -1.0 + 2.0 * k / (cameras - 1);
        rig.push_back(CameraPose{0.6 * t, 0.15 * std::sin(2.0 * k + 1.0), 0.0}.normalized());
    }
    return rig;
}

/// Builds a complete synthetic dataset in memory with the on-disk layout that
/// `save_dataset` writes.
inline Dataset make_toy_dataset(const ToyWorldConfig& cfg)
{
    if (cfg.train_identities < 1 || cfg.cameras < 1 || cfg.envmaps < 1)
        throw ConfigurationError("toy world needs at least one identity, camera and environment map");
    Dataset ds;
    ds.basis           = fibonacci_basis(kBasisLightCount);
    ds.manifest.basis_file = fs::path("basis.txt");
    const auto rig     = toy_camera_rig(cfg.cameras);
    const int  total   = cfg.train_identities + cfg.test_identities;
    for (int i = 0; i < total; ++i)
    {
        IdentityRecord rec;
        rec.id = "id" + std::to_string(i);
        const std::uint64_t identity_seed = cfg.seed * 1000003ULL + static_cast<std::uint64_t>(i) * 7919ULL + 17ULL;
        for (int c = 0; c < cfg.cameras; ++c)
        {
            CameraRecord cam{"cam" + std::to_string(c), rig[static_cast<std::size_t>(c)],
                             fs::path("olat") / rec.id / ("cam" + std::to_string(c))};
            auto world              = synth_lambertian_world(identity_seed, cfg.resolution, ds.basis, cam.pose);
            world.stack.identity_id = rec.id;
            world.stack.camera_id   = cam.id;
            ds.stacks.emplace(std::make_pair(rec.id, cam.id), std::move(world.stack));
            rec.cameras.push_back(std::move(cam));
        }
        (i < cfg.train_identities ? ds.manifest.train : ds.manifest.test).push_back(rec.id);
        ds.manifest.identities.push_back(std::move(rec));
    }
    for (int e = 0; e < cfg.envmaps; ++e)
    {
        char id[16];
        std::snprintf(id, sizeof(id), "env%02d", e);
        ds.manifest.envmaps.push_back({id, fs::path("envmaps") / (std::string(id) + ".hdr")});
        ds.envmaps.emplace(id, synth_env_map(cfg.seed * 31ULL + static_cast<std::uint64_t>(e) * 104729ULL + 5ULL,
                                             cfg.env_width, cfg.env_height));
    }
    ds.compute_env_weights();
    return ds;
}

/// Writes stacks, environment maps, the basis file and manifest.json under `dir`.
inline fs::path save_dataset(const fs::path& dir, Dataset& ds)
{
    ds.manifest.root = dir;
    fs::create_directories(dir);
    if (!ds.manifest.basis_file)
        ds.manifest.basis_file = fs::path("basis.txt");
    write_text_atomic(dir / *ds.manifest.basis_file, format_basis_text(ds.basis));
    for (const auto& r : ds.manifest.identities)
        for (const auto& c : r.cameras)
            save_olat_stack(dir / c.olat_dir, ds.stack(r.id, c.id));
    for (const auto& e : ds.manifest.envmaps)
        save_hdr(dir / e.path, ds.envmaps.at(e.id).image);
    auto manifest_path = dir / "manifest.json";
    write_text_atomic(manifest_path, ds.manifest.to_json().dump(2));
    return manifest_path;
}

// ---------------------------------------------------------------------------
// source / target pairs

struct PairEnd
{
    std::string camera;
    std::string env;

    friend bool operator==(const PairEnd&, const PairEnd&) = default;
};

/// A source view and an edit target of the same identity. p marks a camera
/// change, q an illumination change.
struct TrainingPair
{
    std::string identity;
    PairEnd     source;
    PairEnd     target;
    int         p = 0;
    int         q = 0;

    void validate() const
    {
        if ((p != 0) != (source.camera != target.camera))
            throw StructuralError("pair flag p does not match the camera change");
        if ((q != 0) != (source.env != target.env))
            throw StructuralError("pair flag q does not match the environment change");
    }

    friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

inline TrainingPair make_pair_record(std::string identity, PairEnd source, PairEnd target)
{
    TrainingPair pr{std::move(identity), std::move(source), std::move(target), 0, 0};
    pr.p = pr.source.camera != pr.target.camera ? 1 : 0;
    pr.q = pr.source.env != pr.target.env ? 1 : 0;
    return pr;
}

inline json pair_to_json(const TrainingPair& pr)
{
    return {{"identity", pr.identity},
            {"source", {{"camera", pr.source.camera}, {"env", pr.source.env}}},
            {"target", {{"camera", pr.target.camera}, {"env", pr.target.env}}},
            {"p", pr.p},
            {"q", pr.q}};
}

inline TrainingPair pair_from_json(const json& j)
{
    try
    {
        TrainingPair pr{j.at("identity").get<std::string>(),
                        {j.at("source").at("camera").get<std::string>(), j.at("source").at("env").get<std::string>()},
                        {j.at("target").at("camera").get<std::string>(), j.at("target").at("env").get<std::string>()},
                        j.at("p").get<int>(),
                        j.at("q").get<int>()};
        pr.validate();
        return pr;
    }
    catch (const json::exception& e)
    {
        throw FormatError(std::string("malformed pair record: ") + e.what());
    }
}

inline json pairs_to_json(const std::vector<TrainingPair>& pairs)
{
    json arr = json::array();
    for (const auto& p : pairs)
        arr.push_back(pair_to_json(p));
    return {{"pairs", arr}};
}

inline std::vector<TrainingPair> pairs_from_json(const json& j)
{
    std::vector<TrainingPair> out;
    const json&               arr = j.is_array() ? j : j.at("pairs");
    for (const auto& e : arr)
        out.push_back(pair_from_json(e));
    return out;
}

namespace detail {
template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v)
{
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

inline std::vector<std::string> camera_ids(const IdentityRecord& r)
{
    std::vector<std::string> ids;
    for (const auto& c : r.cameras)
        ids.push_back(c.id);
    return ids;
}

inline std::vector<std::string> env_ids(const DatasetManifest& m)
{
    std::vector<std::string> ids;
    for (const auto& e : m.envmaps)
        ids.push_back(e.id);
    return ids;
}
} // namespace detail

inline constexpr int kPairsPerIdentity = 300;

/// Per training identity: ceil(count/4) pairs keep the source camera, the rest
/// move to a different camera (when the rig has more than one). Environment
/// maps for source and target are drawn independently and uniformly.
inline std::vector<TrainingPair> make_training_pairs(const DatasetManifest& m, int count_per_identity,
                                                     std::uint64_t seed)
{
    if (m.train.empty())
        throw ConfigurationError("manifest has no training identities");
    if (m.envmaps.empty())
        throw ConfigurationError("manifest has no environment maps");
    if (count_per_identity < 1)
        throw ParameterError("pair count per identity must be positive");

    std::mt19937_64           rng(seed);
    const auto                envs = detail::env_ids(m);
    std::vector<TrainingPair> out;
    for (const auto& id : m.train)
    {
        const auto cams = detail::camera_ids(m.identity(id));
        if (cams.empty())
            throw ConfigurationError("identity '" + id + "' has no cameras");
        const int same_view = (count_per_identity + 3) / 4;
        std::vector<TrainingPair> batch;
        for (int k = 0; k < count_per_identity; ++k)
        {
            PairEnd src{detail::pick(rng, cams), detail::pick(rng, envs)};
            PairEnd dst{src.camera, detail::pick(rng, envs)};
            if (k >= same_view && cams.size() > 1)
            {
                std::vector<std::string> others;
                for (const auto& c : cams)
                    if (c != src.camera)
                        others.push_back(c);
                dst.camera = detail::pick(rng, others);
            }
            batch.push_back(make_pair_record(id, std::move(src), std::move(dst)));
        }
        std::shuffle(batch.begin(), batch.end(), rng);
        out.insert(out.end(), batch.begin(), batch.end());
    }
    return out;
}

struct EvalSets
{
    std::vector<TrainingPair> set1; ///< same viewpoint, different illumination
    std::vector<TrainingPair> set2; ///< same illumination, different viewpoint
};

/// Test-identity pairs for the two evaluation protocols.
inline EvalSets make_eval_sets(const DatasetManifest& m, std::uint64_t seed, int pairs_per_identity = 16)
{
    if (m.test.empty())
        throw ConfigurationError("manifest has no test identities");
    const auto envs = detail::env_ids(m);
    if (envs.size() < 2)
        throw ConfigurationError("Set1 needs at least two environment maps");
    std::mt19937_64 rng(seed);
    EvalSets        sets;
    for (const auto& id : m.test)
    {
        const auto cams = detail::camera_ids(m.identity(id));
        if (cams.size() < 2)
            throw ConfigurationError("Set2 needs at least two cameras for identity '" + id + "'");
        for (int k = 0; k < pairs_per_identity; ++k)
        {
            const auto& cam = detail::pick(rng, cams);
            const auto& e1  = detail::pick(rng, envs);
            std::string e2;
            do
                e2 = detail::pick(rng, envs);
            while (e2 == e1);
            sets.set1.push_back(make_pair_record(id, {cam, e1}, {cam, e2}));
        }
        for (int k = 0; k < pairs_per_identity; ++k)
        {
            const auto& env = detail::pick(rng, envs);
            const auto& c1  = detail::pick(rng, cams);
            std::string c2;
            do
                c2 = detail::pick(rng, cams);
            while (c2 == c1);
            sets.set2.push_back(make_pair_record(id, {c1, env}, {c2, env}));
        }
    }
    return sets;
}

/// Memoized network-facing renders: relight, then auto-exposure + gamma.
class RelitCache
{
public:
    using PostProcess = std::function<HdrImage(const HdrImage&)>;

    /// `post` (optional) is applied to every render, e.g. a projection onto a
    /// generator's range.
    explicit RelitCache(const Dataset& ds, PostProcess post = {}) : m_ds(&ds), m_post(std::move(post)) {}

    const HdrImage& image(const std::string& identity, const std::string& camera, const std::string& env)
    {
        std::lock_guard lock(m_mutex);
        auto            key = std::make_tuple(identity, camera, env);
        auto            it  = m_cache.find(key);
        if (it == m_cache.end())
        {
            auto img = to_network_ldr(relight(m_ds->stack(identity, camera), m_ds->weights(env)));
            it       = m_cache.emplace(key, m_post ? m_post(img) : std::move(img)).first;
        }
        return it->second;
    }

    const Dataset& dataset() const { return *m_ds; }

private:
    const Dataset*                                                         m_ds;
    PostProcess                                                            m_post;
    std::mutex                                                             m_mutex;
    std::map<std::tuple<std::string, std::string, std::string>, HdrImage> m_cache;
};

} // namespace photoapp
