#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "mnn/run_config.hpp"

using namespace mnn;

namespace {

ConfigValues parsed(const std::string& text) {
    ConfigValues v;
    std::istringstream in(text);
    v.parse(in, "run.cfg");
    return v;
}

std::string config_error(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.what();
    }
    ADD_FAILURE() << "no ConfigError";
    return {};
}

} // namespace

TEST(Config, DefaultsBuildAValidRun) {
    const RunConfig c = RunConfig::from(ConfigValues{});
    EXPECT_EQ(c.kind, NetworkKind::RandomMesh);
    EXPECT_EQ(c.dims, MeshDims{});
    EXPECT_EQ(c.mlp_layers(), (std::vector<std::uint32_t>{512, 128, 64, 32, 16, 3}));
    EXPECT_EQ(c.celegans.total(), 240U);
    EXPECT_EQ(c.evolution.mutation_count, 40U);
    EXPECT_EQ(c.evolution.mutation_std, 1.0);
    EXPECT_EQ(c.evolution.random_std, 0.2);
    EXPECT_EQ(c.grid.size(), 750U);
    EXPECT_EQ(c.report_decay, 0.9);
    EXPECT_EQ(c.stopwords, default_stopwords());
}

TEST(Config, SectionsDottedKeysAndComments) {
    const auto v = parsed(
        "# top comment\n"
        "[evolution]\n"
        "generations = 7   # trailing\n"
        "run.seed = 42\n"
        "\n"
        "[ run ]\n"
        "kind = celegans_rigid\n");
    const RunConfig c = RunConfig::from(v);
    EXPECT_EQ(c.evolution.generations, 7U);
    EXPECT_EQ(c.seed, 42U);
    EXPECT_EQ(c.evolution.rng_seed, 42U);
    EXPECT_EQ(c.kind, NetworkKind::CElegansRigid);
}

TEST(Config, OverridesWin) {
    auto v = parsed("[evolution]\ngenerations = 7\n");
    v.apply_override("evolution.generations=9");
    v.apply_override(" data.stopwords = The,A ");
    const RunConfig c = RunConfig::from(v);
    EXPECT_EQ(c.evolution.generations, 9U);
    EXPECT_EQ(c.stopwords, (std::unordered_set<std::string>{"the", "a"}));
    EXPECT_FALSE(config_error([&] { v.apply_override("novalue"); }).empty());
}

TEST(Config, ErrorsNameOriginAndField) {
    const auto unknown = config_error([] { parsed("[evolution]\nmutations = 3\n"); });
    EXPECT_NE(unknown.find("run.cfg:2"), std::string::npos);
    EXPECT_NE(unknown.find("evolution.mutations"), std::string::npos);

    const auto bad = config_error([] { RunConfig::from(parsed("\n[run]\nseed = twelve\n")); });
    EXPECT_NE(bad.find("run.cfg:3"), std::string::npos);
    EXPECT_NE(bad.find("'run.seed'"), std::string::npos);
    EXPECT_NE(bad.find("twelve"), std::string::npos);

    EXPECT_NE(config_error([] { parsed("[run\n"); }).find("run.cfg:1"), std::string::npos);
    EXPECT_NE(config_error([] { parsed("just words\n"); }).find("run.cfg:1"), std::string::npos);
    EXPECT_FALSE(config_error([] { ConfigValues v; v.load_file("/nonexistent.cfg"); }).empty());
}

TEST(Config, FieldValidation) {
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"run.kind=worm", "run.kind"},
        {"run.threads=0", "run.threads"},
        {"dims.classes=4", "dims.classes"},
        {"dims.settle_steps=0", "dims.settle_steps"},
        {"data.split=0.5,0.5", "data.split"},
        {"data.split=0.5,0.4,0.2", "data.split"},
        {"mlp.hidden=", "mlp.hidden"},
        {"mlp.epochs=0", "mlp.epochs"},
        {"mlp.learning_rate=-1", "mlp.learning_rate"},
        {"random.polarity=0.5,0.5", "random.polarity"},
        {"celegans.p_fanin=2", "celegans.p_fanin"},
        {"celegans.motor=0", "celegans.motor"},
        {"evolution.breed_count=45", "evolution.breed_count"},
        {"evolution.mutation_std=0", "evolution.mutation_std"},
        {"sweep.random_std=0.2,-1", "sweep.random_std"},
        {"sweep.record_time=maybe", "sweep.record_time"},
        {"report.decay=0", "report.decay"},
        {"report.format=xml", "report.format"},
    };
    for (const auto& [kv, field] : cases) {
        ConfigValues v;
        v.apply_override(kv);
        const auto msg = config_error([&] { RunConfig::from(v); });
        EXPECT_NE(msg.find("'" + field + "'"), std::string::npos) << kv << " -> " << msg;
    }
}

TEST(Config, EffectiveConfigRoundTrips) {
    ConfigValues v;
    v.apply_override("run.kind=celegans_dnn_seeded");
    v.apply_override("sweep.mutation_count=10,20");
    v.apply_override("data.path=/tmp/x.jsonl");
    const std::string text = v.to_text();
    EXPECT_EQ(text.rfind("[run]\nkind = celegans_dnn_seeded\n", 0), 0U);
    const ConfigValues again = parsed(text);
    EXPECT_EQ(again.to_text(), text);
    const RunConfig a = RunConfig::from(v), b = RunConfig::from(again);
    EXPECT_EQ(a.kind, b.kind);
    EXPECT_EQ(a.grid.mutation_counts, b.grid.mutation_counts);
    EXPECT_EQ(a.data_path, b.data_path);
}

TEST(Config, DerivedSeeds) {
    ConfigValues v;
    v.apply_override("run.seed=5");
    v.apply_override("evolution.random_std=0.6");
    const RunConfig c = RunConfig::from(v);
    EXPECT_EQ(c.train.rng_seed, 5U);
    EXPECT_EQ(c.celegans.sigma_rand, 0.6);
    v.apply_override("run.seed=6");
    EXPECT_NE(RunConfig::from(v).celegans.rng_seed, c.celegans.rng_seed);
}
