#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "psychat/backends.hpp"
#include "psychat/core.hpp"

namespace psychat {

/// Per-sentence label with the classifier's score distribution. Tagged by the
/// speaker whose vocabulary the label belongs to.
template <Speaker Role>
struct Annotation {
    std::size_t sentence_index = 0;
    LabelId label;
    std::vector<double> scores;

    bool operator==(const Annotation &) const = default;
};

using BehaviorAnnotation = Annotation<Speaker::client>;
using StrategyAnnotation = Annotation<Speaker::counselor>;

/// Splits after runs of 。！？!?… (plus any closing quotes/brackets right after
/// them). Whitespace following a split point stays with the preceding segment,
/// so concatenating the result reproduces `text` exactly.
std::vector<std::string> segment_sentences(std::string_view text);

/// Unlabeled utterance whose sentences come from segment_sentences.
Utterance make_utterance(Speaker speaker, std::string_view text);

/// One annotation per sentence of the final client utterance; the classifier
/// sees the preceding utterances as context.
std::vector<BehaviorAnnotation> recognize_behaviors(const std::vector<Utterance> &session_history,
                                                    const Classifier &classifier, const LabelVocabulary &vocab);

/// One annotation per sentence of `response`, with the whole history as context.
std::vector<StrategyAnnotation> recognize_strategies(const std::vector<Utterance> &history, const Utterance &response,
                                                     const Classifier &classifier, const LabelVocabulary &vocab);

/// Labels in sentence order with duplicates removed (first occurrence wins).
template <Speaker Role>
std::vector<LabelId> aggregate_labels(const std::vector<Annotation<Role>> &annotations) {
    std::vector<LabelId> out;
    for (const auto &a : annotations) {
        bool seen = false;
        for (const auto &l : out) seen = seen || l == a.label;
        if (!seen) out.push_back(a.label);
    }
    return out;
}

/// Fills every missing sentence label. Existing labels are kept.
std::vector<Dialogue> pseudo_label_corpus(const std::vector<Dialogue> &dialogues, const Classifier &behavior_classifier,
                                          const Classifier &strategy_classifier, const LabelVocabulary &vocab);

} // namespace psychat
