#include "psychat/recognition.hpp"

#include "psychat/text.hpp"

namespace psychat {

namespace {

bool is_terminal_mark(char32_t c) {
    switch (c) {
    case U'。':
    case U'！':
    case U'？':
    case U'!':
    case U'?':
    case U'…':
        return true;
    default:
        return false;
    }
}

bool is_closing_quote(char32_t c) {
    switch (c) {
    case U'”':
    case U'’':
    case U'"':
    case U'」':
    case U'』':
    case U'）':
    case U')':
    case U'】':
        return true;
    default:
        return false;
    }
}

bool is_space(char32_t c) { return c == U' ' || c == U'\t' || c == U'\r' || c == U'\n' || c == U'　'; }

template <Speaker Role>
std::vector<Annotation<Role>> annotate(const std::vector<Utterance> &context, const Utterance &target,
                                       const Classifier &classifier, const LabelVocabulary &vocab) {
    std::vector<Annotation<Role>> out;
    out.reserve(target.sentences.size());
    for (std::size_t i = 0; i < target.sentences.size(); ++i) {
        auto c = classifier.classify(classification_input(context, target.sentences[i].text), Role);
        validate_classification(c, vocab, Role);
        out.push_back({i, std::move(c.label), std::move(c.scores)});
    }
    return out;
}

} // namespace

std::vector<std::string> segment_sentences(std::string_view text) {
    const auto chars = text::utf8_chars(text);
    std::vector<std::string> out;
    std::string current;
    std::size_t i = 0;
    while (i < chars.size()) {
        if (!is_terminal_mark(text::decode_utf8(chars[i]))) {
            current += chars[i++];
            continue;
        }
        while (i < chars.size() && is_terminal_mark(text::decode_utf8(chars[i]))) current += chars[i++];
        while (i < chars.size() && is_closing_quote(text::decode_utf8(chars[i]))) current += chars[i++];
        while (i < chars.size() && is_space(text::decode_utf8(chars[i]))) current += chars[i++];
        out.push_back(std::move(current));
        current.clear();
    }
    if (!current.empty()) {
        if (text::is_blank(current) && !out.empty())
            out.back() += current;
        else
            out.push_back(std::move(current));
    }
    return out;
}

Utterance make_utterance(Speaker speaker, std::string_view text) {
    if (text.empty()) throw PreconditionError("utterance text is empty");
    if (text.find('\n') != std::string_view::npos) throw PreconditionError("utterance text contains a newline");
    Utterance u;
    u.speaker = speaker;
    for (auto &s : segment_sentences(text)) u.sentences.push_back({std::move(s), std::nullopt});
    return u;
}

std::vector<BehaviorAnnotation> recognize_behaviors(const std::vector<Utterance> &session_history,
                                                    const Classifier &classifier, const LabelVocabulary &vocab) {
    if (session_history.empty()) throw PreconditionError("recognize_behaviors: empty history");
    if (session_history.back().speaker != Speaker::client)
        throw PreconditionError("recognize_behaviors: history must end with a client utterance");
    const std::vector<Utterance> context(session_history.begin(), session_history.end() - 1);
    return annotate<Speaker::client>(context, session_history.back(), classifier, vocab);
}

std::vector<StrategyAnnotation> recognize_strategies(const std::vector<Utterance> &history, const Utterance &response,
                                                     const Classifier &classifier, const LabelVocabulary &vocab) {
    if (response.speaker != Speaker::counselor)
        throw PreconditionError("recognize_strategies: response must be spoken by the counselor");
    return annotate<Speaker::counselor>(history, response, classifier, vocab);
}

std::vector<Dialogue> pseudo_label_corpus(const std::vector<Dialogue> &dialogues, const Classifier &behavior_classifier,
                                          const Classifier &strategy_classifier, const LabelVocabulary &vocab) {
    std::vector<Dialogue> out;
    out.reserve(dialogues.size());
    for (const auto &d : dialogues) {
        Dialogue labeled = d;
        for (std::size_t i = 0; i < labeled.utterances.size(); ++i) {
            auto &u = labeled.utterances[i];
            if (u.fully_labeled()) continue;
            const std::vector<Utterance> context(d.utterances.begin(), d.utterances.begin() + static_cast<std::ptrdiff_t>(i));
            const Classifier &cls = u.speaker == Speaker::client ? behavior_classifier : strategy_classifier;
            for (auto &s : u.sentences) {
                if (s.label) continue;
                auto c = cls.classify(classification_input(context, s.text), u.speaker);
                validate_classification(c, vocab, u.speaker);
                s.label = std::move(c.label);
            }
        }
        validate_dialogue(labeled, vocab);
        out.push_back(std::move(labeled));
    }
    return out;
}

} // namespace psychat
