#include "psychat/core.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "psychat/json_io.hpp"
#include "psychat/text.hpp"

namespace psychat {

using nlohmann::json;

std::string_view to_string(Speaker s) noexcept { return s == Speaker::client ? "client" : "counselor"; }

Speaker speaker_from_string(std::string_view s) {
    if (s == "client") return Speaker::client;
    if (s == "counselor") return Speaker::counselor;
    throw PreconditionError("unknown speaker '" + std::string(s) + "'");
}

std::string_view speaker_token(Speaker s) noexcept {
    return s == Speaker::client ? kClientToken : kCounselorToken;
}

std::string Utterance::text() const {
    std::string out;
    for (const auto &s : sentences) out += s.text;
    return out;
}

bool Utterance::fully_labeled() const {
    for (const auto &s : sentences)
        if (!s.label) return false;
    return true;
}

std::vector<LabelId> Utterance::distinct_labels() const {
    std::vector<LabelId> out;
    for (const auto &s : sentences) {
        if (!s.label) continue;
        if (std::find(out.begin(), out.end(), *s.label) == out.end()) out.push_back(*s.label);
    }
    return out;
}

bool DialogueSession::fully_labeled() const {
    for (const auto &u : history)
        if (!u.fully_labeled()) return false;
    return golden_response.fully_labeled();
}

// --- vocabulary -------------------------------------------------------------

namespace {

void check_label_list(const std::vector<Label> &labels, const char *which) {
    if (labels.empty()) throw ConfigError(std::string(which) + " must not be empty");
    std::set<std::string_view> seen;
    for (const auto &l : labels) {
        if (l.id.empty()) throw ConfigError(std::string(which) + ": empty label id");
        if (!seen.insert(l.id).second) throw ConfigError(std::string(which) + ": duplicate label id '" + l.id + "'");
    }
}

std::vector<Label> labels_from_json(const json &j, const char *key) {
    if (!j.contains(key) || !j.at(key).is_array()) throw ConfigError(std::string("vocabulary: missing array '") + key + "'");
    std::vector<Label> out;
    for (const auto &e : j.at(key)) {
        if (!e.is_object() || !e.contains("id") || !e.at("id").is_string())
            throw ConfigError(std::string("vocabulary: malformed entry in '") + key + "'");
        Label l;
        l.id = e.at("id").get<std::string>();
        l.name = e.contains("name") && e.at("name").is_string() ? e.at("name").get<std::string>() : l.id;
        out.push_back(std::move(l));
    }
    return out;
}

} // namespace

LabelVocabulary::LabelVocabulary(std::vector<Label> behavior_labels, std::vector<Label> strategy_labels)
    : behaviors_(std::move(behavior_labels)), strategies_(std::move(strategy_labels)) {
    check_label_list(behaviors_, "behavior_labels");
    check_label_list(strategies_, "strategy_labels");
}

LabelVocabulary LabelVocabulary::from_json_text(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ConfigError(std::string("vocabulary: ") + e.what());
    }
    return LabelVocabulary(labels_from_json(j, "behavior_labels"), labels_from_json(j, "strategy_labels"));
}

LabelVocabulary LabelVocabulary::load(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open vocabulary file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string LabelVocabulary::to_json_text() const {
    auto list = [](const std::vector<Label> &labels) {
        json arr = json::array();
        for (const auto &l : labels) arr.push_back({{"id", l.id}, {"name", l.name}});
        return arr;
    };
    return json{{"behavior_labels", list(behaviors_)}, {"strategy_labels", list(strategies_)}}.dump();
}

std::optional<std::size_t> LabelVocabulary::index_of(Speaker s, std::string_view id) const noexcept {
    const auto &labels = labels_for(s);
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i].id == id) return i;
    return std::nullopt;
}

bool LabelVocabulary::contains(Speaker s, std::string_view id) const noexcept { return index_of(s, id).has_value(); }

const std::string &LabelVocabulary::display_name(Speaker s, std::string_view id) const {
    auto idx = index_of(s, id);
    if (!idx)
        throw PreconditionError("label '" + std::string(id) + "' has no display name in the " +
                                (s == Speaker::client ? "behavior" : "strategy") + " vocabulary");
    return labels_for(s)[*idx].name;
}

// --- corpus ---------------------------------------------------------------------

void validate_dialogue(const Dialogue &d, const LabelVocabulary &vocab, std::size_t line) {
    const std::string who = "dialogue '" + d.id + "': ";
    if (d.utterances.empty()) throw CorpusError(line, who + "empty dialogue");
    if (d.utterances.size() < 2) throw CorpusError(line, who + "needs at least 2 utterances");
    for (std::size_t i = 0; i < d.utterances.size(); ++i) {
        const auto &u = d.utterances[i];
        const Speaker expected = i % 2 == 0 ? Speaker::client : Speaker::counselor;
        if (u.speaker != expected) {
            if (i == 0) throw CorpusError(line, who + "first utterance must be spoken by the client");
            throw CorpusError(line, who + "speakers do not alternate at utterance " + std::to_string(i));
        }
        if (u.sentences.empty()) throw CorpusError(line, who + "utterance " + std::to_string(i) + " has no sentences");
        for (const auto &s : u.sentences) {
            if (s.text.empty()) throw CorpusError(line, who + "empty sentence text in utterance " + std::to_string(i));
            if (s.text.find('\n') != std::string::npos)
                throw CorpusError(line, who + "sentence text contains a newline in utterance " + std::to_string(i));
            if (s.label && !vocab.contains(u.speaker, *s.label))
                throw CorpusError(line, who + "unknown " +
                                            (u.speaker == Speaker::client ? "behavior" : "strategy") + " label '" +
                                            *s.label + "' in utterance " + std::to_string(i));
        }
    }
}

namespace {

[[noreturn]] void malformed(std::size_t line, const std::string &msg) {
    throw CorpusError(line, "malformed record: " + msg);
}

Dialogue dialogue_from_json(const json &j, std::size_t line) {
    if (!j.is_object()) malformed(line, "not a JSON object");
    if (!j.contains("id") || !j.at("id").is_string()) malformed(line, "missing string 'id'");
    if (!j.contains("utterances") || !j.at("utterances").is_array()) malformed(line, "missing array 'utterances'");
    Dialogue d;
    d.id = j.at("id").get<std::string>();
    d.utterances = utterances_from_json(j.at("utterances"), line);
    return d;
}

} // namespace

Utterance utterance_from_json(const json &ju, std::size_t line) {
    if (!ju.is_object() || !ju.contains("speaker") || !ju.at("speaker").is_string())
        malformed(line, "utterance without speaker");
    Utterance u;
    const auto sp = ju.at("speaker").get<std::string>();
    if (sp == "client")
        u.speaker = Speaker::client;
    else if (sp == "counselor")
        u.speaker = Speaker::counselor;
    else
        malformed(line, "unknown speaker '" + sp + "'");
    if (!ju.contains("sentences") || !ju.at("sentences").is_array()) malformed(line, "utterance without 'sentences' array");
    for (const auto &js : ju.at("sentences")) {
        if (!js.is_object() || !js.contains("text") || !js.at("text").is_string()) malformed(line, "sentence without text");
        Sentence s;
        s.text = js.at("text").get<std::string>();
        if (js.contains("label") && !js.at("label").is_null()) {
            if (!js.at("label").is_string()) malformed(line, "label must be a string or null");
            s.label = js.at("label").get<std::string>();
        }
        u.sentences.push_back(std::move(s));
    }
    return u;
}

std::vector<Utterance> utterances_from_json(const json &j, std::size_t line) {
    if (!j.is_array()) malformed(line, "utterances must be an array");
    std::vector<Utterance> out;
    for (const auto &ju : j) out.push_back(utterance_from_json(ju, line));
    return out;
}

json utterance_to_json(const Utterance &u) {
    json js = json::array();
    for (const auto &s : u.sentences) js.push_back({{"text", s.text}, {"label", s.label ? json(*s.label) : json(nullptr)}});
    return {{"speaker", std::string(to_string(u.speaker))}, {"sentences", std::move(js)}};
}

json utterances_to_json(const std::vector<Utterance> &us) {
    json arr = json::array();
    for (const auto &u : us) arr.push_back(utterance_to_json(u));
    return arr;
}

std::vector<Dialogue> parse_corpus(std::istream &in, const LabelVocabulary &vocab) {
    std::vector<Dialogue> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::is_blank(line)) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error &e) {
            throw CorpusError(lineno, std::string("malformed record: ") + e.what());
        }
        Dialogue d = dialogue_from_json(j, lineno);
        validate_dialogue(d, vocab, lineno);
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<Dialogue> parse_corpus_text(std::string_view text, const LabelVocabulary &vocab) {
    std::istringstream in{std::string(text)};
    return parse_corpus(in, vocab);
}

std::vector<Dialogue> load_corpus(const std::string &path, const LabelVocabulary &vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError(0, "cannot open corpus file " + path);
    return parse_corpus(in, vocab);
}

std::string serialize_dialogue(const Dialogue &d) {
    return json{{"id", d.id}, {"utterances", utterances_to_json(d.utterances)}}.dump();
}

void write_corpus(std::ostream &out, const std::vector<Dialogue> &dialogues) {
    for (const auto &d : dialogues) out << serialize_dialogue(d) << '\n';
}

// --- sessions and classifier inputs ---------------------------------------------

std::vector<DialogueSession> split_sessions(const Dialogue &d) {
    std::vector<DialogueSession> out;
    for (std::size_t i = 1; i < d.utterances.size(); ++i) {
        if (d.utterances[i].speaker != Speaker::counselor) continue;
        DialogueSession s;
        s.history.assign(d.utterances.begin(), d.utterances.begin() + static_cast<std::ptrdiff_t>(i));
        s.golden_response = d.utterances[i];
        out.push_back(std::move(s));
    }
    return out;
}

std::string render_history_string(const std::vector<Utterance> &history, bool with_speaker_tokens) {
    if (history.empty()) throw PreconditionError("render_history_string: empty history");
    std::string out;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (i) out += '\n';
        if (with_speaker_tokens) {
            out += speaker_token(history[i].speaker);
            out += ' ';
        }
        out += history[i].text();
    }
    return out;
}

std::string classification_input(const std::vector<Utterance> &context, std::string_view sentence) {
    std::string out = context.empty() ? std::string() : render_history_string(context, true);
    if (out.find(kSeparatorToken) != std::string::npos || sentence.find(kSeparatorToken) != std::string_view::npos)
        throw PreconditionError("classifier input text must not contain the separator token");
    out += kSeparatorToken;
    out += sentence;
    return out;
}

std::vector<ClassificationExample> build_classification_examples(const DialogueSession &s, Speaker role) {
    if (s.history.empty()) throw PreconditionError("session history is empty");
    std::vector<Utterance> context;
    const Utterance *target = nullptr;
    if (role == Speaker::client) {
        if (s.history.back().speaker != Speaker::client)
            throw PreconditionError("session history must end with a client utterance");
        context.assign(s.history.begin(), s.history.end() - 1);
        target = &s.history.back();
    } else {
        if (s.golden_response.speaker != Speaker::counselor)
            throw PreconditionError("golden response must be spoken by the counselor");
        context = s.history;
        target = &s.golden_response;
    }
    std::vector<ClassificationExample> out;
    out.reserve(target->sentences.size());
    for (std::size_t i = 0; i < target->sentences.size(); ++i) {
        const auto &sent = target->sentences[i];
        if (!sent.label) throw PreconditionError("sentence " + std::to_string(i) + " has no gold label");
        out.push_back({classification_input(context, sent.text), *sent.label, role});
    }
    return out;
}

} // namespace psychat
