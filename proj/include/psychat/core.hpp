#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psychat/error.hpp"

namespace psychat {

using LabelId = std::string;

inline constexpr std::string_view kSeparatorToken = "[SEP]";
inline constexpr std::string_view kClientToken = "[client]";
inline constexpr std::string_view kCounselorToken = "[counselor]";

enum class Speaker { client, counselor };

std::string_view to_string(Speaker s) noexcept;
Speaker speaker_from_string(std::string_view s);
std::string_view speaker_token(Speaker s) noexcept;

struct Sentence {
    std::string text;
    std::optional<LabelId> label;

    bool operator==(const Sentence &) const = default;
};

struct Utterance {
    Speaker speaker = Speaker::client;
    std::vector<Sentence> sentences;

    /// Concatenation of the sentence texts in order.
    std::string text() const;
    bool fully_labeled() const;
    /// Sentence labels in order, first occurrence kept.
    std::vector<LabelId> distinct_labels() const;

    bool operator==(const Utterance &) const = default;
};

struct Dialogue {
    std::string id;
    std::vector<Utterance> utterances;

    bool operator==(const Dialogue &) const = default;
};

/// A history that ends with the client, paired with the counselor reply that followed it.
struct DialogueSession {
    std::vector<Utterance> history;
    Utterance golden_response;

    bool fully_labeled() const;

    bool operator==(const DialogueSession &) const = default;
};

struct Label {
    LabelId id;
    std::string name;

    bool operator==(const Label &) const = default;
};

class LabelVocabulary {
  public:
    LabelVocabulary(std::vector<Label> behavior_labels, std::vector<Label> strategy_labels);

    static LabelVocabulary from_json_text(std::string_view text);
    static LabelVocabulary load(const std::string &path);
    std::string to_json_text() const;

    const std::vector<Label> &behavior_labels() const noexcept { return behaviors_; }
    const std::vector<Label> &strategy_labels() const noexcept { return strategies_; }

    /// Behavior labels for client sentences, strategy labels for counselor sentences.
    const std::vector<Label> &labels_for(Speaker s) const noexcept {
        return s == Speaker::client ? behaviors_ : strategies_;
    }

    bool contains(Speaker s, std::string_view id) const noexcept;
    /// Index of `id` within the role's list; nullopt when absent.
    std::optional<std::size_t> index_of(Speaker s, std::string_view id) const noexcept;
    /// Display name for `id`; throws PreconditionError when the id is unknown.
    const std::string &display_name(Speaker s, std::string_view id) const;

    bool operator==(const LabelVocabulary &) const = default;

  private:
    std::vector<Label> behaviors_;
    std::vector<Label> strategies_;
};

struct ClassificationExample {
    std::string input_text;
    LabelId gold_label;
    Speaker role = Speaker::client;
};

/// Parses line-delimited corpus records. Blank lines are skipped.
std::vector<Dialogue> parse_corpus(std::istream &in, const LabelVocabulary &vocab);
std::vector<Dialogue> parse_corpus_text(std::string_view text, const LabelVocabulary &vocab);
std::vector<Dialogue> load_corpus(const std::string &path, const LabelVocabulary &vocab);

/// Checks text, alternation and label invariants; throws CorpusError with `line`.
void validate_dialogue(const Dialogue &d, const LabelVocabulary &vocab, std::size_t line = 0);

/// One JSON record, no trailing newline.
std::string serialize_dialogue(const Dialogue &d);
void write_corpus(std::ostream &out, const std::vector<Dialogue> &dialogues);

std::vector<DialogueSession> split_sessions(const Dialogue &d);

/// Builds one labeled example per sentence of the target utterance.
/// Client role: target is the final history utterance, context is everything before it.
/// Counselor role: target is the golden response, context is the whole history.
std::vector<ClassificationExample> build_classification_examples(const DialogueSession &s, Speaker role);

/// Classifier input for one target sentence: rendered context, separator, sentence.
std::string classification_input(const std::vector<Utterance> &context, std::string_view sentence);

/// Utterance texts joined by '\n', optionally prefixed by their speaker token and a space.
std::string render_history_string(const std::vector<Utterance> &history, bool with_speaker_tokens);

} // namespace psychat
