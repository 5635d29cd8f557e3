#include <gtest/gtest.h>

#include <map>

#include "psychat/config.hpp"
#include "support/e2e_fixtures.hpp"

using namespace psychat;
using namespace psychat::testing;

namespace {

EnvLookup fake_env(std::map<std::string, std::string> vars) {
    return [vars = std::move(vars)](std::string_view name) -> std::optional<std::string> {
        auto it = vars.find(std::string(name));
        if (it == vars.end()) return std::nullopt;
        return it->second;
    };
}

} // namespace

TEST(Config, ShippedMockConfigLoadsAndResolvesPaths) {
    const auto cfg = PipelineConfig::load(asset("psychat.mock.json").string(), fake_env({}));
    EXPECT_EQ(std::filesystem::path(cfg.vocab_path), (asset("vocab.json")).lexically_normal());
    EXPECT_EQ(std::filesystem::path(cfg.index_path), (source_dir() / "data/sample/validation.idx").lexically_normal());
    EXPECT_EQ(cfg.generation.num_candidates, 10);
    EXPECT_DOUBLE_EQ(cfg.generation.temperature, 0.8);
    EXPECT_EQ(cfg.backend(BackendRole::embedder).resolved_dim(), 8u);
    EXPECT_EQ(cfg.backend(BackendRole::ranker).ranker_variant, "length");
    EXPECT_NO_THROW(cfg.validate(false));
}

TEST(Config, EnvOverrides) {
    auto cfg = PipelineConfig::from_json(e2e_config_json(), "/base");
    EXPECT_EQ(cfg.index_path, "/base/demo.idx");
    apply_env_overrides(cfg, fake_env({{"PSYCHAT_NUM_CANDIDATES", "4"},
                                       {"PSYCHAT_TOP_P", "0.5"},
                                       {"PSYCHAT_INDEX", "/x.idx"},
                                       {"PSYCHAT_GENERATOR_KIND", "http"},
                                       {"PSYCHAT_GENERATOR_ENDPOINT", "http://127.0.0.1:9"},
                                       {"PSYCHAT_RANKER_VARIANT", "random"}}));
    EXPECT_EQ(cfg.generation.num_candidates, 4);
    EXPECT_DOUBLE_EQ(cfg.generation.top_p, 0.5);
    EXPECT_EQ(cfg.index_path, "/x.idx");
    EXPECT_EQ(cfg.backend(BackendRole::generator).kind, BackendKind::http);
    EXPECT_EQ(cfg.backend(BackendRole::generator).endpoint, "http://127.0.0.1:9");
    EXPECT_EQ(cfg.backend(BackendRole::ranker).ranker_variant, "random");
    EXPECT_EQ(cfg.backend(BackendRole::embedder).seed, 1); // untouched
    EXPECT_THROW(apply_env_overrides(cfg, fake_env({{"PSYCHAT_TEMPERATURE", "warm"}})), ConfigError);
    EXPECT_THROW(apply_env_overrides(cfg, fake_env({{"PSYCHAT_EMBEDDER_DIM", "8x"}})), ConfigError);
}

TEST(Config, ValidationErrors) {
    auto j = e2e_config_json();
    j["backends"].erase("ranker");
    EXPECT_THROW(PipelineConfig::from_json(j, source_dir().string()).validate(false), ConfigError);
    j = e2e_config_json();
    j["backends"]["nonsense"] = {{"kind", "mock"}};
    EXPECT_THROW(PipelineConfig::from_json(j, ""), ConfigError);
    j = e2e_config_json();
    j["generation"]["top_p"] = 2.0;
    EXPECT_THROW(PipelineConfig::from_json(j, "").validate(false), ConfigError);
    j = e2e_config_json();
    j["vocab"] = "/does/not/exist.json";
    EXPECT_THROW(PipelineConfig::from_json(j, "").validate(false), ConfigError);
    EXPECT_THROW(PipelineConfig::from_json(e2e_config_json("nope.idx"), "/tmp").validate(true), ConfigError);
    EXPECT_THROW(PipelineConfig::from_json(nlohmann::json::array(), ""), ConfigError);
    EXPECT_THROW(PipelineConfig::load("/does/not/exist.json"), ConfigError);
    TempDir dir;
    write_file(dir / "bad.json", "{");
    EXPECT_THROW(PipelineConfig::load((dir / "bad.json").string()), ConfigError);
}

TEST(Config, MakeBackendsWiresMockGeneratorToTemplate) {
    const auto cfg = PipelineConfig::from_json(e2e_config_json(), "");
    const auto vocab = LabelVocabulary::load(cfg.vocab_path);
    const auto tmpl = PromptTemplate::load(cfg.template_path);
    const auto b = make_backends(cfg, vocab, tmpl);
    ASSERT_TRUE(b.behavior_classifier && b.strategy_classifier && b.embedder && b.generator && b.ranker);
    EXPECT_EQ(b.embedder->dim(), 8u);
    PlaceholderValues v;
    for (auto name : kPlaceholderNames) v[std::string(name)] = "x";
    v["NEW_CLIENT_UTT"] = "第一句。第二句？";
    GenerationParams p;
    p.num_candidates = 2;
    EXPECT_EQ(b.generator->generate(tmpl.render(v), p), (std::vector<std::string>{"echo:第二句？#1", "echo:第二句？#2"}));
    EXPECT_EQ(b.ranker->rank("[client] abc", "abcdefghijklm"), -1.0); // last line is 12 code points
}

TEST(Config, HttpBackendsNeedEndpoints) {
    auto j = e2e_config_json();
    j["backends"]["generator"] = {{"kind", "http"}};
    EXPECT_THROW(PipelineConfig::from_json(j, "").validate(false), ConfigError);
}
