#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "psychat/core.hpp"
#include "psychat/retrieval.hpp"

namespace psychat {

inline constexpr std::array<std::string_view, 9> kPlaceholderNames = {
    "DEMO_DIALOGUE", "DEMO_CLIENT_UTT", "DEMO_BEHAVIORS", "DEMO_STRATEGIES", "DEMO_RESPONSE",
    "NEW_DIALOGUE",  "NEW_CLIENT_UTT",  "NEW_BEHAVIORS",  "NEW_STRATEGIES",
};

inline constexpr std::string_view kSectionDivider = "----";
inline constexpr std::string_view kLabelJoiner = "、";

using PlaceholderValues = std::map<std::string, std::string, std::less<>>;

/// A prompt template with `{NAME}` placeholders. Every name in kPlaceholderNames
/// appears exactly once, DEMO_* before the single "----" divider line and NEW_*
/// after it, and two placeholders are never adjacent.
class PromptTemplate {
  public:
    static PromptTemplate from_text(std::string text);
    static PromptTemplate load(const std::string &path);

    const std::string &text() const noexcept { return text_; }

    /// Substitutes every placeholder. Throws PreconditionError when a value is
    /// missing or would make the output unparsable.
    std::string render(const PlaceholderValues &values) const;

    /// Recovers the placeholder values from rendered text; throws PreconditionError on mismatch.
    PlaceholderValues parse(std::string_view rendered) const;

  private:
    struct Piece {
        bool placeholder = false;
        std::string text; // literal text or placeholder name
    };

    explicit PromptTemplate(std::string text);

    std::string text_;
    std::vector<Piece> pieces_;
};

struct PackedInput {
    std::string text;
    std::uint32_t demonstration_id = 0;
    std::vector<LabelId> behaviors_new;
    std::vector<LabelId> strategies_new;
    std::vector<LabelId> behaviors_demo;
    std::vector<LabelId> strategies_demo;

    bool operator==(const PackedInput &) const = default;
};

/// Renders the demonstration section and the brand-new dialogue section.
PackedInput pack(const PromptTemplate &tmpl, const RetrievalRecord &demo, const std::vector<Utterance> &new_history,
                 const std::vector<LabelId> &behaviors_new, const std::vector<LabelId> &strategies_new,
                 const LabelVocabulary &vocab);

/// Inference packing: the new section reuses the demonstration's strategies.
PackedInput pack_for_inference(const PromptTemplate &tmpl, const RetrievalRecord &demo,
                               const std::vector<Utterance> &new_history, const std::vector<LabelId> &behaviors_new,
                               const LabelVocabulary &vocab);

struct TrainingPair {
    std::string input;
    std::string target;
};

/// Training packing: the new section carries the session's own (ground-truth)
/// behaviors and strategies; the target is the golden response text.
TrainingPair pack_training_pair(const PromptTemplate &tmpl, const DialogueSession &session, const RetrievalRecord &demo,
                                const LabelVocabulary &vocab);

/// Last sentence of the new client utterance in a packed prompt, trailing whitespace removed.
std::string last_client_sentence(const PromptTemplate &tmpl, std::string_view packed_text);

} // namespace psychat
