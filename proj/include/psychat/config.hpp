#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "psychat/backends.hpp"
#include "psychat/packer.hpp"

namespace psychat {

using EnvLookup = std::function<std::optional<std::string>(std::string_view name)>;

/// Reads the process environment.
std::optional<std::string> process_env(std::string_view name);

/// Service and pipeline configuration. JSON layout:
///   {
///     "vocab": "vocab.json", "template": "prompt_template_v1.txt", "index": "validation.idx",
///     "generation": {"num_candidates": 10, "temperature": 0.8, "top_p": 0.8, "max_sequence_length": 8192},
///     "timeout_ms": 30000, "retries": 0,
///     "backends": {
///       "classifier_behavior": {"kind": "mock", "seed": 1},
///       "classifier_strategy": {"kind": "http", "endpoint": "http://127.0.0.1:9000"},
///       "embedder":  {"kind": "mock", "seed": 1, "dim": 8},
///       "generator": {"kind": "mock", "seed": 1},
///       "ranker":    {"kind": "mock", "seed": 1, "variant": "length"}
///     }
///   }
/// Relative paths resolve against the config file's directory.
struct PipelineConfig {
    std::string vocab_path;
    std::string template_path;
    std::string index_path;
    std::map<BackendRole, BackendDescriptor> backends;
    GenerationParams generation;

    static PipelineConfig from_json(const nlohmann::json &j, const std::string &base_dir);
    /// Loads the file, then applies PSYCHAT_* overrides from `env`.
    static PipelineConfig load(const std::string &path, const EnvLookup &env = process_env);

    const BackendDescriptor &backend(BackendRole role) const;

    /// Every backend role present and valid, generation params in range,
    /// referenced files present (index only when `require_index`).
    void validate(bool require_index = true) const;
};

/// Overrides: PSYCHAT_VOCAB, PSYCHAT_TEMPLATE, PSYCHAT_INDEX, PSYCHAT_NUM_CANDIDATES,
/// PSYCHAT_TEMPERATURE, PSYCHAT_TOP_P, PSYCHAT_MAX_SEQUENCE_LENGTH and per backend
/// PSYCHAT_<ROLE>_{KIND,ENDPOINT,SEED,DIM,VARIANT,TARGET,TIMEOUT_MS,RETRIES}
/// with ROLE one of CLASSIFIER_BEHAVIOR, CLASSIFIER_STRATEGY, EMBEDDER, GENERATOR, RANKER.
void apply_env_overrides(PipelineConfig &cfg, const EnvLookup &env);

/// Instantiates http or mock backends. Mock generators echo the last client
/// sentence recovered from the packed prompt via `tmpl`.
BackendSet make_backends(const PipelineConfig &cfg, const LabelVocabulary &vocab, const PromptTemplate &tmpl);

} // namespace psychat
