#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "psychat/backends.hpp"
#include "psychat/config.hpp"
#include "psychat/packer.hpp"
#include "psychat/recognition.hpp"
#include "psychat/retrieval.hpp"
#include "psychat/selection.hpp"

namespace psychat {

/// Stage names, in execution order.
inline constexpr std::string_view kStageBehaviorRecognition = "behavior_recognition";
inline constexpr std::string_view kStageStrategySelection = "strategy_selection";
inline constexpr std::string_view kStageInputPacking = "input_packing";
inline constexpr std::string_view kStageResponseGeneration = "response_generation";
inline constexpr std::string_view kStageResponseSelection = "response_selection";

/// A pipeline stage failed; `stage()` names it and what() carries the cause.
class PipelineError : public Error {
  public:
    PipelineError(std::string stage, const std::string &cause)
        : Error(stage + ": " + cause), stage_(std::move(stage)) {}
    const std::string &stage() const noexcept { return stage_; }

  private:
    std::string stage_;
};

struct StageTiming {
    std::string stage;
    double ms = 0.0;
};

struct PipelineResult {
    std::vector<BehaviorAnnotation> behaviors;
    std::uint32_t demonstration_id = 0;
    double retrieval_distance = 0.0;
    std::vector<LabelId> strategies;
    PackedInput packed_input;
    RankedCandidates candidates;
    std::string response_text;
    std::vector<StageTiming> timings;
};

/// Everything but the timings is deterministic for deterministic backends.
nlohmann::json to_json(const PipelineResult &r, bool with_timings = true);

/// Loaded, read-only pipeline resources. Safe to share across threads.
struct PipelineContext {
    LabelVocabulary vocab;
    PromptTemplate tmpl;
    std::shared_ptr<const RetrievalIndex> index;
    BackendSet backends;
    GenerationParams generation;

    /// Loads vocabulary, template and index named by `cfg` and instantiates its backends.
    /// The index must match the embedder's dim and fingerprint.
    static PipelineContext from_config(const PipelineConfig &cfg);
};

/// behavior recognition -> nearest demonstration -> adopt its strategies ->
/// pack -> generate N candidates -> select. Any failure raises PipelineError.
PipelineResult respond(const std::vector<Utterance> &history, const PipelineContext &ctx);

/// Writes one {"input", "target"} JSON line per session of every dialogue,
/// packed against its nearest demonstration. Returns the record count.
std::size_t export_finetune_dataset(const std::vector<Dialogue> &corpus, const RetrievalIndex &index,
                                    const Embedder &embedder, const LabelVocabulary &vocab,
                                    const PromptTemplate &tmpl, std::ostream &out);

/// Sidecar metadata for the external trainer: stage, record count and the
/// parameter-efficient fine-tuning settings.
nlohmann::json finetune_metadata(int stage, std::size_t record_count);

} // namespace psychat
