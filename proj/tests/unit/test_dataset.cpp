// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "photoapp/dataset.hpp"

using namespace photoapp;

namespace {

DatasetManifest small_manifest(int identities, int cameras, int envs, int test = 0)
{
    DatasetManifest m;
    for (int i = 0; i < identities + test; ++i)
    {
        IdentityRecord r;
        r.id = "p" + std::to_string(i);
        for (int c = 0; c < cameras; ++c)
            r.cameras.push_back({"c" + std::to_string(c), CameraPose{0.1 * c, 0, 0}, "olat/" + r.id + "/c" + std::to_string(c)});
        (i < identities ? m.train : m.test).push_back(r.id);
        m.identities.push_back(r);
    }
    for (int e = 0; e < envs; ++e)
        m.envmaps.push_back({"e" + std::to_string(e), "env/e" + std::to_string(e) + ".hdr"});
    return m;
}

Dataset tiny_toy()
{
    ToyWorldConfig cfg;
    cfg.resolution = 16;
    cfg.envmaps    = 4;
    cfg.env_width  = 16;
    cfg.env_height = 8;
    return make_toy_dataset(cfg);
}

} // namespace

TEST(Pairs, QuarterRule)
{
    auto m = small_manifest(3, 4, 16);
    for (int count : {300, 4, 5, 7, 1})
    {
        auto pairs = make_training_pairs(m, count, 17);
        ASSERT_EQ(pairs.size(), static_cast<std::size_t>(3 * count));
        std::map<std::string, int> same, total;
        for (const auto& p : pairs)
        {
            ++total[p.identity];
            same[p.identity] += p.source.camera == p.target.camera ? 1 : 0;
        }
        for (const auto& id : m.train)
        {
            EXPECT_EQ(total[id], count);
            EXPECT_EQ(same[id], (count + 3) / 4) << "count " << count;
        }
    }
}

TEST(Pairs, OneIdentityFourPairs)
{
    auto pairs = make_training_pairs(small_manifest(1, 3, 2), 4, 1);
    int  p0    = 0;
    for (const auto& p : pairs)
        p0 += p.p == 0 ? 1 : 0;
    EXPECT_EQ(p0, 1);
}

TEST(Pairs, FlagsEncodeEquality)
{
    auto pairs = make_training_pairs(small_manifest(2, 4, 3), 300, 2);
    int  q0    = 0;
    for (const auto& p : pairs)
    {
        EXPECT_EQ(p.p == 0, p.source.camera == p.target.camera);
        EXPECT_EQ(p.q == 0, p.source.env == p.target.env);
        EXPECT_NO_THROW(p.validate());
        q0 += p.q == 0 ? 1 : 0;
    }
    // Envs are drawn independently, so about a third keep the source env.
    EXPECT_GT(q0, 120);
    EXPECT_LT(q0, 280);
}

TEST(Pairs, UniformOverCamerasAndEnvs)
{
    auto pairs = make_training_pairs(small_manifest(1, 4, 4), 4000, 3);
    std::map<std::string, int> src_cam, dst_env;
    for (const auto& p : pairs)
    {
        ++src_cam[p.source.camera];
        ++dst_env[p.target.env];
    }
    for (const auto& [k, n] : src_cam)
        EXPECT_NEAR(n, 1000, 150) << k;
    for (const auto& [k, n] : dst_env)
        EXPECT_NEAR(n, 1000, 150) << k;
}

TEST(Pairs, DeterministicAndSeedSensitive)
{
    auto m = small_manifest(2, 3, 5);
    EXPECT_EQ(make_training_pairs(m, 50, 9), make_training_pairs(m, 50, 9));
    EXPECT_NE(make_training_pairs(m, 50, 9), make_training_pairs(m, 50, 10));
}

TEST(Pairs, SingleCameraRigKeepsView)
{
    auto pairs = make_training_pairs(small_manifest(1, 1, 3), 20, 1);
    for (const auto& p : pairs)
        EXPECT_EQ(p.p, 0);
}

TEST(Pairs, Errors)
{
    auto m = small_manifest(1, 2, 2);
    EXPECT_THROW(make_training_pairs(m, 0, 1), ParameterError);
    auto no_env = m;
    no_env.envmaps.clear();
    EXPECT_THROW(make_training_pairs(no_env, 4, 1), ConfigurationError);
    auto no_train = m;
    no_train.train.clear();
    EXPECT_THROW(make_training_pairs(no_train, 4, 1), ConfigurationError);
}

TEST(Pairs, JsonRoundTripAndValidation)
{
    auto pairs = make_training_pairs(small_manifest(2, 3, 3), 10, 4);
    EXPECT_EQ(pairs_from_json(pairs_to_json(pairs)), pairs);
    auto j          = pair_to_json(pairs.front());
    j["p"]          = 1 - pairs.front().p;
    EXPECT_THROW(pair_from_json(j), StructuralError);
    EXPECT_THROW(pair_from_json(nlohmann::json{{"identity", "x"}}), FormatError);
}

TEST(EvalSets, Constraints)
{
    auto m    = small_manifest(3, 4, 6, 2);
    auto sets = make_eval_sets(m, 5);
    ASSERT_FALSE(sets.set1.empty());
    ASSERT_FALSE(sets.set2.empty());
    std::set<std::string> test(m.test.begin(), m.test.end());
    for (const auto& p : sets.set1)
    {
        EXPECT_EQ(p.source.camera, p.target.camera);
        EXPECT_NE(p.source.env, p.target.env);
        EXPECT_TRUE(test.count(p.identity));
    }
    for (const auto& p : sets.set2)
    {
        EXPECT_EQ(p.source.env, p.target.env);
        EXPECT_NE(p.source.camera, p.target.camera);
        EXPECT_TRUE(test.count(p.identity));
    }
    EXPECT_THROW(make_eval_sets(small_manifest(2, 3, 3, 0), 1), ConfigurationError);
    EXPECT_THROW(make_eval_sets(small_manifest(1, 1, 3, 1), 1), ConfigurationError);
    EXPECT_THROW(make_eval_sets(small_manifest(1, 2, 1, 1), 1), ConfigurationError);
}

TEST(Manifest, JsonRoundTrip)
{
    auto m       = small_manifest(2, 2, 3, 1);
    m.basis_file = "basis.txt";
    auto back    = DatasetManifest::from_json(m.to_json(), "/data");
    EXPECT_EQ(back.to_json(), m.to_json());
    EXPECT_EQ(back.root, std::filesystem::path("/data"));
    EXPECT_EQ(back.identity("p1").camera("c1").pose, (CameraPose{0.1, 0, 0}));
}

TEST(Manifest, StructuralValidation)
{
    auto overlap = small_manifest(2, 1, 1);
    overlap.test.push_back(overlap.train.front());
    EXPECT_THROW(overlap.validate(false), ConfigurationError);
    auto unknown = small_manifest(1, 1, 1);
    unknown.train.push_back("ghost");
    EXPECT_THROW(unknown.validate(false), ConfigurationError);
    auto dup = small_manifest(1, 1, 2);
    dup.envmaps[1].id = dup.envmaps[0].id;
    EXPECT_THROW(dup.validate(false), ConfigurationError);
    EXPECT_THROW(small_manifest(1, 1, 1).validate(true), IoError);
    EXPECT_THROW(DatasetManifest::from_json(nlohmann::json{{"identities", 3}}, "."), FormatError);
}

TEST(ToyWorld, LayoutAndDiskRoundTrip)
{
    auto ds = tiny_toy();
    EXPECT_EQ(ds.manifest.train.size(), 3u);
    EXPECT_EQ(ds.manifest.test.size(), 1u);
    EXPECT_EQ(ds.stacks.size(), 16u);
    EXPECT_EQ(ds.env_weights.size(), 4u);
    EXPECT_EQ(ds.weights("env00").light_count(), 150);

    auto dir = std::filesystem::temp_directory_path() / "photoapp_toy_roundtrip";
    std::filesystem::remove_all(dir);
    auto path   = save_dataset(dir, ds);
    auto m      = DatasetManifest::load(path);
    auto loaded = load_dataset(m, {"id1"});
    EXPECT_EQ(loaded.stacks.size(), 4u);
    EXPECT_EQ(loaded.pose("id1", "cam2"), ds.pose("id1", "cam2"));
    const auto& a = loaded.stack("id1", "cam2").images[40];
    const auto& b = ds.stack("id1", "cam2").images[40];
    for (std::size_t k = 0; k < a.data.size(); ++k)
        EXPECT_NEAR(a.data[k], b.data[k], b.data[k] / 128.0 + 1e-12);
    // The basis round-trips through text at full precision.
    EXPECT_EQ(loaded.basis.directions[7], ds.basis.directions[7]);
    EXPECT_THROW(loaded.stack("id0", "cam0"), ConfigurationError);
    std::filesystem::remove_all(dir);
}

TEST(ToyWorld, CameraRigAndDeterminism)
{
    auto rig = toy_camera_rig(4);
    ASSERT_EQ(rig.size(), 4u);
    EXPECT_NEAR(rig[0].yaw, -0.6, 1e-12);
    EXPECT_NEAR(rig[3].yaw, 0.6, 1e-12);
    auto a = tiny_toy(), b = tiny_toy();
    EXPECT_EQ(a.stack("id2", "cam1").images[3], b.stack("id2", "cam1").images[3]);
    EXPECT_EQ(a.weights("env03"), b.weights("env03"));
}

TEST(RelitCache, MemoizesAndPostProcesses)
{
    auto       ds    = tiny_toy();
    int        calls = 0;
    RelitCache cache(ds,
                     [&](const HdrImage& img)
                     {
                         ++calls;
                         return img;
                     });
    const auto& a = cache.image("id0", "cam0", "env01");
    const auto& b = cache.image("id0", "cam0", "env01");
    EXPECT_EQ(&a, &b);
    EXPECT_EQ(calls, 1);
    EXPECT_EQ(a, to_network_ldr(relight(ds.stack("id0", "cam0"), ds.weights("env01"))));
    for (float v : a.data)
    {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
    }
}
