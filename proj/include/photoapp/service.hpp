// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// HTTP editing sessions. OLAT sessions re-render by relighting a stack;
// latent sessions re-render through the editing network and the generator.
//
//   POST /api/v1/sessions             {"source": {...}}          -> 201 {session_id, render_url}
//   POST /api/v1/sessions/{id}/edit   {field: value, ...}        -> {render_url, timing_ms}
//   GET  /api/v1/sessions/{id}        current edit state
//   GET  /api/v1/sessions/{id}/image  PNG of the last render
//   GET  /api/v1/envmaps              environment catalog
//   GET  /api/v1/healthz              "ok"

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <shared_mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "photoapp/pipeline.hpp"
#include "photoapp/synth_world.hpp"

// Last: <resolv.h> from httplib defines _res, which clashes with Eigen.
#include <httplib.h>

namespace photoapp {

namespace service_detail {

/// Status-carrying error raised by request handling.
struct HttpError : Error
{
    int status;
    HttpError(int s, const std::string& what) : Error(what), status(s) {}
};

inline std::vector<std::uint8_t> base64_decode(const std::string& in)
{
    static const auto table = []
    {
        std::array<int, 256> t{};
        t.fill(-1);
        const char* alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
        for (int i = 0; i < 64; ++i)
            t[static_cast<unsigned char>(alphabet[i])] = i;
        return t;
    }();
    std::vector<std::uint8_t> out;
    std::uint32_t             acc  = 0;
    int                       bits = 0;
    for (char ch : in)
    {
        if (ch == '=' || ch == '\n' || ch == '\r')
            continue;
        int v = table[static_cast<unsigned char>(ch)];
        if (v < 0)
            throw HttpError(400, "invalid base64 data");
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8)
        {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
        }
    }
    return out;
}

template <typename T>
T field(const nlohmann::json& j, const char* key)
{
    try
    {
        return j.at(key).get<T>();
    }
    catch (const nlohmann::json::exception&)
    {
        throw HttpError(400, std::string("missing or invalid field '") + key + "'");
    }
}

inline double finite_number(const nlohmann::json& v, const std::string& key)
{
    if (!v.is_number())
        throw HttpError(400, "field '" + key + "' must be a number");
    double d = v.get<double>();
    if (!std::isfinite(d))
        throw HttpError(400, "field '" + key + "' must be finite");
    return d;
}

inline int flag(const nlohmann::json& v, const std::string& key)
{
    if (v.is_boolean())
        return v.get<bool>() ? 1 : 0;
    if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1))
        throw HttpError(400, "field '" + key + "' must be 0 or 1");
    return v.get<int>();
}

} // namespace service_detail

struct ServiceOptions
{
    std::optional<Checkpoint>        checkpoint;
    std::shared_ptr<const Generator> generator; ///< defaults to the checkpoint's generator
    std::optional<DatasetManifest>   manifest;  ///< env catalog and manifest-backed sources
    LightBasis                       basis = fibonacci_basis();
};

/// Edit state of one session. Pose and flags only affect latent sessions.
struct EditState
{
    std::string                 env_id;
    std::optional<LightWeights> env_weights; ///< explicit weights override env_id
    double                      env_yaw  = 0.0;
    CameraPose                  pose;
    double                      exposure = 1.0;
    int                         p        = 0;
    int                         q        = 0;

    nlohmann::json to_json() const
    {
        nlohmann::json j{{"env_id", env_id},   {"env_yaw", env_yaw},   {"yaw", pose.yaw}, {"pitch", pose.pitch},
                         {"roll", pose.roll},  {"exposure", exposure}, {"p", p},          {"q", q}};
        if (env_weights)
            j["env_weights"] = env_weights->values;
        return j;
    }
};

class EditService
{
public:
    explicit EditService(ServiceOptions opt) : m_opt(std::move(opt))
    {
        m_opt.basis.validate();
        if (m_opt.checkpoint && !m_opt.generator)
            m_opt.generator = make_generator(m_opt.checkpoint->generator);
        if (m_opt.manifest)
        {
            m_opt.manifest->validate(false);
            for (const auto& e : m_opt.manifest->envmaps)
                m_envs.emplace_back(e.id, LatLongEnvMap(load_hdr(m_opt.manifest->root / e.path)));
        }
        else
        {
            for (int k = 0; k < 4; ++k)
                m_envs.emplace_back("synthetic-" + std::to_string(k), synth_env_map(static_cast<std::uint64_t>(k) + 1));
        }
        std::random_device rd;
        m_prefix = std::to_string(rd() % 100000);
    }

    EditService(const EditService&)            = delete;
    EditService& operator=(const EditService&) = delete;

    void install(httplib::Server& server)
    {
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
        server.Get("/api/v1/healthz", [](const httplib::Request&, httplib::Response& res)
                   { res.set_content("ok", "text/plain"); });
        server.Get("/api/v1/envmaps", [this](const httplib::Request&, httplib::Response& res)
                   { respond(res, [&] { return std::make_pair(200, catalog()); }); });
        server.Post("/api/v1/sessions", [this](const httplib::Request& req, httplib::Response& res)
                    { respond(res, [&] { return std::make_pair(201, create_session(parse_body(req.body))); }); });
        server.Post("/api/v1/sessions/:id/edit", [this](const httplib::Request& req, httplib::Response& res)
                    { respond(res, [&] { return std::make_pair(200, apply_edit(req.path_params.at("id"), parse_body(req.body))); }); });
        server.Get("/api/v1/sessions/:id", [this](const httplib::Request& req, httplib::Response& res)
                   { respond(res, [&] { return std::make_pair(200, state(req.path_params.at("id"))); }); });
        server.Get("/api/v1/sessions/:id/image",
                   [this](const httplib::Request& req, httplib::Response& res)
                   {
                       try
                       {
                           auto png = image(req.path_params.at("id"));
                           res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
                       }
                       catch (const service_detail::HttpError& e)
                       {
                           fail(res, e.status, e.what());
                       }
                   });
    }

    nlohmann::json catalog() const
    {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& [id, env] : m_envs)
            list.push_back({{"id", id}, {"width", env.width()}, {"height", env.height()}});
        return {{"envmaps", list}};
    }

    nlohmann::json create_session(const nlohmann::json& body)
    {
        using service_detail::HttpError;
        if (!body.is_object() || !body.contains("source") || !body["source"].is_object())
            throw HttpError(400, "request needs a 'source' object");
        const auto& src  = body["source"];
        const auto  type = service_detail::field<std::string>(src, "type");

        auto s = std::make_shared<Session>();
        if (!m_envs.empty())
            s->state.env_id = m_envs.front().first;
        if (type == "stack" || type == "manifest" || type == "synthetic")
        {
            s->stack = load_stack(type, src);
            s->state.pose = s->stack->pose;
        }
        else if (type == "latent" || type == "image")
        {
            if (!m_opt.checkpoint)
                throw HttpError(422, "latent editing needs a loaded checkpoint");
            if (type == "latent")
                s->latent = load_latent(src);
            else
            {
                if (!m_opt.generator->has_encoder())
                    throw HttpError(422, "the generator has no encoder; upload a latent code instead");
                s->latent = source_latent(*m_opt.generator, load_upload(src));
            }
            if (src.contains("pose"))
                s->state.pose = parse_pose(src["pose"]);
        }
        else
            throw HttpError(400, "unknown source type '" + type + "'");

        render(*s, s->state);
        std::string id = m_prefix + "-" + std::to_string(++m_counter);
        {
            std::unique_lock lock(m_sessions_mutex);
            m_sessions.emplace(id, s);
        }
        return {{"session_id", id}, {"render_url", render_url(id)}, {"timing_ms", s->timing_ms}};
    }

    nlohmann::json apply_edit(const std::string& id, const nlohmann::json& delta)
    {
        auto             s = session(id);
        std::scoped_lock lock(s->mutex);
        EditState        next = apply_delta(s->state, delta);
        render(*s, next);
        s->state = std::move(next);
        return {{"render_url", render_url(id)}, {"timing_ms", s->timing_ms}, {"revision", s->revision}};
    }

    nlohmann::json state(const std::string& id)
    {
        auto             s = session(id);
        std::scoped_lock lock(s->mutex);
        return {{"session_id", id},
                {"kind", s->stack ? "olat" : "latent"},
                {"state", s->state.to_json()},
                {"revision", s->revision},
                {"timing_ms", s->timing_ms}};
    }

    Bytes image(const std::string& id)
    {
        auto             s = session(id);
        std::scoped_lock lock(s->mutex);
        return s->png;
    }

    std::size_t session_count() const
    {
        std::shared_lock lock(m_sessions_mutex);
        return m_sessions.size();
    }

private:
    struct Session
    {
        std::mutex                       mutex;
        std::shared_ptr<const OlatStack> stack;
        std::optional<LatentCode<float>> latent;
        EditState                        state;
        Bytes                            png;
        double                           timing_ms = 0.0;
        std::uint64_t                    revision  = 0;
    };

    static nlohmann::json parse_body(const std::string& body)
    {
        try
        {
            return body.empty() ? nlohmann::json::object() : nlohmann::json::parse(body);
        }
        catch (const nlohmann::json::exception& e)
        {
            throw service_detail::HttpError(400, std::string("malformed JSON: ") + e.what());
        }
    }

    static void fail(httplib::Response& res, int status, const std::string& msg)
    {
        res.status = status;
        res.set_content(nlohmann::json{{"error", msg}}.dump(), "application/json");
    }

    template <typename Fn>
    static void respond(httplib::Response& res, Fn&& fn)
    {
        try
        {
            auto [status, body] = fn();
            res.status          = status;
            res.set_content(body.dump(), "application/json");
        }
        catch (const service_detail::HttpError& e)
        {
            fail(res, e.status, e.what());
        }
        catch (const CapabilityError& e)
        {
            fail(res, 422, e.what());
        }
        catch (const Error& e)
        {
            fail(res, 400, e.what());
        }
        catch (const std::exception& e)
        {
            fail(res, 500, e.what());
        }
    }

    static std::string render_url(const std::string& id) { return "/api/v1/sessions/" + id + "/image"; }

    std::shared_ptr<Session> session(const std::string& id) const
    {
        std::shared_lock lock(m_sessions_mutex);
        auto             it = m_sessions.find(id);
        if (it == m_sessions.end())
            throw service_detail::HttpError(404, "no session '" + id + "'");
        return it->second;
    }

    static CameraPose parse_pose(const nlohmann::json& j)
    {
        if (!j.is_object())
            throw service_detail::HttpError(400, "pose must be an object");
        CameraPose p;
        for (const auto& [k, v] : j.items())
        {
            double d = service_detail::finite_number(v, k);
            if (k == "yaw")
                p.yaw = d;
            else if (k == "pitch")
                p.pitch = d;
            else if (k == "roll")
                p.roll = d;
            else
                throw service_detail::HttpError(400, "unknown pose field '" + k + "'");
        }
        return p;
    }

    std::shared_ptr<const OlatStack> load_stack(const std::string& type, const nlohmann::json& src) const
    {
        using service_detail::field;
        if (type == "synthetic")
        {
            auto res  = src.value("resolution", 64);
            auto seed = src.value("seed", std::uint64_t{1});
            if (res < 16 || res > 2048)
                throw service_detail::HttpError(400, "synthetic resolution must be in [16, 2048]");
            auto world = synth_lambertian_world(seed, res, m_opt.basis);
            return std::make_shared<const OlatStack>(std::move(world.stack));
        }
        fs::path   dir;
        CameraPose pose;
        if (type == "stack")
            dir = field<std::string>(src, "path");
        else
        {
            if (!m_opt.manifest)
                throw service_detail::HttpError(400, "the service was started without a manifest");
            const auto& cam = m_opt.manifest->identity(field<std::string>(src, "identity"))
                                  .camera(field<std::string>(src, "camera"));
            dir  = m_opt.manifest->root / cam.olat_dir;
            pose = cam.pose;
        }
        if (!fs::is_directory(dir))
            throw service_detail::HttpError(400, "no OLAT stack directory '" + dir.string() + "'");
        auto stack = load_olat_stack(dir, m_opt.basis.size());
        stack.pose = pose;
        return std::make_shared<const OlatStack>(std::move(stack));
    }

    LatentCode<float> load_latent(const nlohmann::json& src) const
    {
        LatentCode<float> l;
        if (src.contains("values"))
        {
            l.values = service_detail::field<std::vector<float>>(src, "values");
            l.validate();
        }
        else
            l = latent_from_json<float>(nlohmann::json::parse(read_text(service_detail::field<std::string>(src, "path"))));
        if (l.blocks != m_opt.generator->latent_blocks() || l.dim != m_opt.generator->latent_dim())
            throw service_detail::HttpError(400, "latent shape does not match the generator");
        return l;
    }

    HdrImage load_upload(const nlohmann::json& src) const
    {
        HdrImage img;
        if (src.contains("png_base64"))
            img = ldr_to_float(read_png(service_detail::base64_decode(service_detail::field<std::string>(src, "png_base64"))));
        else
            img = load_display_image(service_detail::field<std::string>(src, "path"));
        if (img.width != m_opt.generator->width() || img.height != m_opt.generator->height())
            throw service_detail::HttpError(400, "image must be " + std::to_string(m_opt.generator->width()) + "x" +
                                                     std::to_string(m_opt.generator->height()));
        return img;
    }

    EditState apply_delta(const EditState& cur, const nlohmann::json& delta) const
    {
        using service_detail::HttpError;
        if (!delta.is_object())
            throw HttpError(400, "edit body must be a JSON object");
        EditState next = cur;
        for (const auto& [key, v] : delta.items())
        {
            if (key == "env_id")
            {
                if (!v.is_string() || !find_env(v.get<std::string>()))
                    throw HttpError(400, "unknown env_id");
                next.env_id = v.get<std::string>();
                next.env_weights.reset();
            }
            else if (key == "env_weights")
            {
                LightWeights w;
                try
                {
                    w = weights_from_json(v);
                }
                catch (const Error& e)
                {
                    throw HttpError(400, e.what());
                }
                if (w.light_count() != m_opt.basis.size())
                    throw HttpError(400, "env_weights needs " + std::to_string(3 * m_opt.basis.size()) + " values");
                next.env_weights = std::move(w);
            }
            else if (key == "env_yaw")
                next.env_yaw = service_detail::finite_number(v, key);
            else if (key == "yaw")
                next.pose.yaw = service_detail::finite_number(v, key);
            else if (key == "pitch")
                next.pose.pitch = service_detail::finite_number(v, key);
            else if (key == "roll")
                next.pose.roll = service_detail::finite_number(v, key);
            else if (key == "exposure")
            {
                next.exposure = service_detail::finite_number(v, key);
                if (!(next.exposure > 0.0))
                    throw HttpError(400, "exposure must be positive");
            }
            else if (key == "p")
                next.p = service_detail::flag(v, key);
            else if (key == "q")
                next.q = service_detail::flag(v, key);
            else
                throw HttpError(400, "unknown edit field '" + key + "'");
        }
        return next;
    }

    const LatLongEnvMap* find_env(const std::string& id) const
    {
        for (const auto& [eid, env] : m_envs)
            if (eid == id)
                return &env;
        return nullptr;
    }

    LightWeights weights_for(const EditState& st)
    {
        if (st.env_weights)
            return *st.env_weights;
        if (st.env_id.empty())
            throw service_detail::HttpError(400, "no environment selected");
        std::scoped_lock lock(m_weights_mutex);
        auto             key = std::make_pair(st.env_id, st.env_yaw);
        auto             it  = m_weights.find(key);
        if (it == m_weights.end())
        {
            const auto* env = find_env(st.env_id);
            if (!env)
                throw service_detail::HttpError(400, "unknown env_id");
            if (m_weights.size() > 256)
                m_weights.clear();
            it = m_weights.emplace(key, resample_to_basis(rotate_env(*env, st.env_yaw), m_opt.basis)).first;
        }
        return it->second;
    }

    void render(Session& s, const EditState& st)
    {
        auto     t0 = std::chrono::steady_clock::now();
        LdrImage ldr;
        if (s.stack)
            ldr = tonemap(relight(*s.stack, weights_for(st)), st.exposure, kDefaultGamma);
        else
        {
            const auto&     ck = *m_opt.checkpoint;
            ConditionVector cond;
            cond.env  = weights_for(st);
            cond.pose = st.pose;
            cond.p    = st.p;
            cond.q    = st.q;
            auto out  = m_opt.generator->decode_image(edit_latent(ck.net, ck.params, *s.latent, cond));
            ldr       = tonemap(out, st.exposure, 1.0);
        }
        s.png       = write_png(ldr, true);
        s.timing_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        ++s.revision;
    }

    ServiceOptions                                         m_opt;
    std::vector<std::pair<std::string, LatLongEnvMap>>     m_envs;
    std::string                                            m_prefix;
    std::atomic<std::uint64_t>                             m_counter{0};
    mutable std::shared_mutex                              m_sessions_mutex;
    std::map<std::string, std::shared_ptr<Session>>        m_sessions;
    std::mutex                                             m_weights_mutex;
    std::map<std::pair<std::string, double>, LightWeights> m_weights;
};

} // namespace photoapp
