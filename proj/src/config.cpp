#include "psychat/config.hpp"

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "psychat/http_backends.hpp"

namespace psychat {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr BackendRole kAllRoles[] = {BackendRole::classifier_behavior, BackendRole::classifier_strategy,
                                     BackendRole::embedder, BackendRole::generator, BackendRole::ranker};

std::string resolve(const std::string &base_dir, const std::string &p) {
    if (p.empty() || fs::path(p).is_absolute() || base_dir.empty()) return p;
    return (fs::path(base_dir) / p).lexically_normal().string();
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto &c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

template <class T>
T parse_number(const std::string &name, const std::string &value) {
    try {
        std::size_t used = 0;
        T out;
        if constexpr (std::is_same_v<T, double>)
            out = std::stod(value, &used);
        else
            out = static_cast<T>(std::stoll(value, &used));
        if (used != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception &) {
        throw ConfigError(name + ": not a number: '" + value + "'");
    }
}

BackendDescriptor descriptor_from_json(BackendRole role, const json &j, int timeout_ms, int retries) {
    if (!j.is_object()) throw ConfigError("backend " + std::string(to_string(role)) + " must be an object");
    BackendDescriptor d;
    d.role = role;
    d.timeout_ms = timeout_ms;
    d.retries = retries;
    try {
        d.kind = backend_kind_from_string(j.value("kind", std::string("mock")));
        if (j.contains("endpoint")) d.endpoint = j.at("endpoint").get<std::string>();
        if (j.contains("seed")) d.seed = j.at("seed").get<std::int64_t>();
        if (j.contains("dim")) d.dim = j.at("dim").get<std::size_t>();
        if (j.contains("variant")) d.ranker_variant = j.at("variant").get<std::string>();
        if (j.contains("target")) d.ranker_target = j.at("target").get<std::string>();
        if (j.contains("timeout_ms")) d.timeout_ms = j.at("timeout_ms").get<int>();
        if (j.contains("retries")) d.retries = j.at("retries").get<int>();
    } catch (const json::exception &e) {
        throw ConfigError("backend " + std::string(to_string(role)) + ": " + e.what());
    }
    return d;
}

} // namespace

std::optional<std::string> process_env(std::string_view name) {
    const char *v = std::getenv(std::string(name).c_str());
    if (!v) return std::nullopt;
    return std::string(v);
}

PipelineConfig PipelineConfig::from_json(const json &j, const std::string &base_dir) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    PipelineConfig cfg;
    try {
        cfg.vocab_path = resolve(base_dir, j.value("vocab", std::string()));
        cfg.template_path = resolve(base_dir, j.value("template", std::string()));
        cfg.index_path = resolve(base_dir, j.value("index", std::string()));
        if (j.contains("generation")) {
            const auto &g = j.at("generation");
            cfg.generation.num_candidates = g.value("num_candidates", cfg.generation.num_candidates);
            cfg.generation.temperature = g.value("temperature", cfg.generation.temperature);
            cfg.generation.top_p = g.value("top_p", cfg.generation.top_p);
            cfg.generation.max_sequence_length = g.value("max_sequence_length", cfg.generation.max_sequence_length);
        }
        const int timeout_ms = j.value("timeout_ms", 30000);
        const int retries = j.value("retries", 0);
        if (j.contains("backends")) {
            for (const auto &[name, body] : j.at("backends").items()) {
                const auto role = backend_role_from_string(name);
                cfg.backends[role] = descriptor_from_json(role, body, timeout_ms, retries);
            }
        }
    } catch (const json::exception &e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::string &path, const EnvLookup &env) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error &e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    auto cfg = from_json(j, fs::path(path).parent_path().string());
    if (env) apply_env_overrides(cfg, env);
    return cfg;
}

const BackendDescriptor &PipelineConfig::backend(BackendRole role) const {
    auto it = backends.find(role);
    if (it == backends.end()) throw ConfigError("no backend configured for role " + std::string(to_string(role)));
    return it->second;
}

void PipelineConfig::validate(bool require_index) const {
    for (auto role : kAllRoles) backend(role).validate();
    generation.validate();
    auto must_exist = [](const std::string &what, const std::string &p) {
        if (p.empty()) throw ConfigError(what + " path is not configured");
        if (!fs::exists(p)) throw ConfigError(what + " file does not exist: " + p);
    };
    must_exist("vocabulary", vocab_path);
    must_exist("template", template_path);
    if (require_index) must_exist("index", index_path);
}

void apply_env_overrides(PipelineConfig &cfg, const EnvLookup &env) {
    if (auto v = env("PSYCHAT_VOCAB")) cfg.vocab_path = *v;
    if (auto v = env("PSYCHAT_TEMPLATE")) cfg.template_path = *v;
    if (auto v = env("PSYCHAT_INDEX")) cfg.index_path = *v;
    if (auto v = env("PSYCHAT_NUM_CANDIDATES")) cfg.generation.num_candidates = parse_number<int>("PSYCHAT_NUM_CANDIDATES", *v);
    if (auto v = env("PSYCHAT_TEMPERATURE")) cfg.generation.temperature = parse_number<double>("PSYCHAT_TEMPERATURE", *v);
    if (auto v = env("PSYCHAT_TOP_P")) cfg.generation.top_p = parse_number<double>("PSYCHAT_TOP_P", *v);
    if (auto v = env("PSYCHAT_MAX_SEQUENCE_LENGTH"))
        cfg.generation.max_sequence_length = parse_number<int>("PSYCHAT_MAX_SEQUENCE_LENGTH", *v);

    for (auto role : kAllRoles) {
        const std::string prefix = "PSYCHAT_" + upper(to_string(role)) + "_";
        auto find = [&](const char *key) { return env(prefix + key); };
        const bool any = find("KIND") || find("ENDPOINT") || find("SEED") || find("DIM") || find("VARIANT") ||
                         find("TARGET") || find("TIMEOUT_MS") || find("RETRIES");
        if (!any) continue;
        auto &d = cfg.backends[role];
        d.role = role;
        if (auto v = env(prefix + "KIND")) d.kind = backend_kind_from_string(*v);
        if (auto v = env(prefix + "ENDPOINT")) d.endpoint = *v;
        if (auto v = env(prefix + "SEED")) d.seed = parse_number<std::int64_t>(prefix + "SEED", *v);
        if (auto v = env(prefix + "DIM")) d.dim = parse_number<std::size_t>(prefix + "DIM", *v);
        if (auto v = env(prefix + "VARIANT")) d.ranker_variant = *v;
        if (auto v = env(prefix + "TARGET")) d.ranker_target = *v;
        if (auto v = env(prefix + "TIMEOUT_MS")) d.timeout_ms = parse_number<int>(prefix + "TIMEOUT_MS", *v);
        if (auto v = env(prefix + "RETRIES")) d.retries = parse_number<int>(prefix + "RETRIES", *v);
    }
}

BackendSet make_backends(const PipelineConfig &cfg, const LabelVocabulary &vocab, const PromptTemplate &tmpl) {
    BackendSet b;
    auto classifier = [&](BackendRole role) -> std::shared_ptr<const Classifier> {
        const auto &d = cfg.backend(role);
        if (d.kind == BackendKind::http) return std::make_shared<HttpClassifier>(d);
        return make_mock_classifier(d, vocab);
    };
    b.behavior_classifier = classifier(BackendRole::classifier_behavior);
    b.strategy_classifier = classifier(BackendRole::classifier_strategy);

    const auto &emb = cfg.backend(BackendRole::embedder);
    b.embedder = emb.kind == BackendKind::http ? std::shared_ptr<const Embedder>(std::make_shared<HttpEmbedder>(emb))
                                               : make_mock_embedder(emb);

    const auto &gen = cfg.backend(BackendRole::generator);
    if (gen.kind == BackendKind::http) {
        b.generator = std::make_shared<HttpGenerator>(gen);
    } else {
        b.generator = make_mock_generator(gen, [tmpl](std::string_view packed) { return last_client_sentence(tmpl, packed); });
    }

    const auto &rk = cfg.backend(BackendRole::ranker);
    b.ranker = rk.kind == BackendKind::http ? std::shared_ptr<const Ranker>(std::make_shared<HttpRanker>(rk))
                                            : make_mock_ranker(rk);
    return b;
}

} // namespace psychat
