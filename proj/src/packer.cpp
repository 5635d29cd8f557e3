#include "psychat/packer.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "psychat/recognition.hpp"
#include "psychat/text.hpp"

namespace psychat {

namespace {

bool is_placeholder_char(char c) { return (c >= 'A' && c <= 'Z') || c == '_'; }

std::size_t count_divider_lines(std::string_view s) {
    std::size_t n = 0;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find('\n', start);
        if (end == std::string_view::npos) end = s.size();
        if (s.substr(start, end - start) == kSectionDivider) ++n;
        start = end + 1;
    }
    return n;
}

std::string names_of(const std::vector<LabelId> &ids, Speaker role, const LabelVocabulary &vocab) {
    std::vector<std::string> names;
    names.reserve(ids.size());
    for (const auto &id : ids) names.push_back(vocab.display_name(role, id));
    return text::join(names, kLabelJoiner);
}

} // namespace

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
    std::string literal;
    std::size_t i = 0;
    while (i < text_.size()) {
        if (text_[i] == '{') {
            std::size_t j = i + 1;
            while (j < text_.size() && is_placeholder_char(text_[j])) ++j;
            if (j < text_.size() && text_[j] == '}' && j > i + 1) {
                if (!literal.empty() || pieces_.empty()) pieces_.push_back({false, std::move(literal)});
                literal.clear();
                pieces_.push_back({true, text_.substr(i + 1, j - i - 1)});
                i = j + 1;
                continue;
            }
        }
        literal += text_[i++];
    }
    pieces_.push_back({false, std::move(literal)});

    std::set<std::string, std::less<>> seen;
    bool divider_seen = false;
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
        const auto &p = pieces_[k];
        if (!p.placeholder) {
            if (count_divider_lines(p.text) > 0) divider_seen = true;
            continue;
        }
        if (std::find(kPlaceholderNames.begin(), kPlaceholderNames.end(), p.text) == kPlaceholderNames.end())
            throw ConfigError("template: unknown placeholder {" + p.text + "}");
        if (!seen.insert(p.text).second) throw ConfigError("template: placeholder {" + p.text + "} used twice");
        const bool demo = p.text.rfind("DEMO_", 0) == 0;
        if (demo == divider_seen)
            throw ConfigError("template: {" + p.text + "} is on the wrong side of the section divider");
        if (k + 1 < pieces_.size() && pieces_[k + 1].placeholder)
            throw ConfigError("template: placeholders {" + p.text + "} and {" + pieces_[k + 1].text + "} are adjacent");
    }
    if (seen.size() != kPlaceholderNames.size()) throw ConfigError("template: not every placeholder is present");
    if (count_divider_lines(text_) != 1) throw ConfigError("template: expected exactly one '----' divider line");
}

PromptTemplate PromptTemplate::from_text(std::string text) { return PromptTemplate(std::move(text)); }

PromptTemplate PromptTemplate::load(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open template file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return PromptTemplate(ss.str());
}

std::string PromptTemplate::render(const PlaceholderValues &values) const {
    std::string out;
    for (const auto &p : pieces_) {
        if (!p.placeholder) {
            out += p.text;
            continue;
        }
        auto it = values.find(p.text);
        if (it == values.end()) throw PreconditionError("template: no value for {" + p.text + "}");
        out += it->second;
    }
    for (auto name : kPlaceholderNames) {
        if (out.find("{" + std::string(name) + "}") != std::string::npos)
            throw PreconditionError("packed text still contains the marker {" + std::string(name) + "}");
    }
    if (count_divider_lines(out) != 1) throw PreconditionError("a placeholder value contains a '----' divider line");
    PlaceholderValues recovered;
    try {
        recovered = parse(out);
    } catch (const PreconditionError &) {
        throw PreconditionError("placeholder values make the packed text ambiguous");
    }
    for (const auto &[name, value] : recovered) {
        if (values.at(name) != value)
            throw PreconditionError("value of {" + name + "} contains the text that follows it in the template");
    }
    return out;
}

PlaceholderValues PromptTemplate::parse(std::string_view rendered) const {
    PlaceholderValues out;
    std::size_t pos = 0;
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
        const auto &p = pieces_[k];
        if (!p.placeholder) {
            if (rendered.substr(pos, p.text.size()) != p.text)
                throw PreconditionError("packed text does not match the template near byte " + std::to_string(pos));
            pos += p.text.size();
            continue;
        }
        std::size_t end = rendered.size();
        if (k + 1 < pieces_.size()) {
            const auto &next = pieces_[k + 1].text;
            // The last literal anchors at the end of the text; inner ones at their first occurrence.
            end = k + 2 == pieces_.size() ? rendered.rfind(next) : rendered.find(next, pos);
            if (end == std::string_view::npos || end < pos)
                throw PreconditionError("packed text does not match the template after {" + p.text + "}");
        }
        out.emplace(p.text, std::string(rendered.substr(pos, end - pos)));
        pos = end;
    }
    if (pos != rendered.size()) throw PreconditionError("packed text has trailing content");
    return out;
}

PackedInput pack(const PromptTemplate &tmpl, const RetrievalRecord &demo, const std::vector<Utterance> &new_history,
                 const std::vector<LabelId> &behaviors_new, const std::vector<LabelId> &strategies_new,
                 const LabelVocabulary &vocab) {
    if (new_history.empty()) throw PreconditionError("pack: empty history");
    if (new_history.back().speaker != Speaker::client)
        throw PreconditionError("pack: history must end with a client utterance");
    if (strategies_new.empty()) throw PreconditionError("pack: no strategies for the new dialogue");

    PlaceholderValues v;
    v["DEMO_DIALOGUE"] = demo.history_string;
    v["DEMO_CLIENT_UTT"] = demo.client_utterance.text();
    v["DEMO_BEHAVIORS"] = names_of(demo.behaviors, Speaker::client, vocab);
    v["DEMO_STRATEGIES"] = names_of(demo.strategies, Speaker::counselor, vocab);
    v["DEMO_RESPONSE"] = demo.golden_response.text();
    v["NEW_DIALOGUE"] = render_history_string(new_history, true);
    v["NEW_CLIENT_UTT"] = new_history.back().text();
    v["NEW_BEHAVIORS"] = names_of(behaviors_new, Speaker::client, vocab);
    v["NEW_STRATEGIES"] = names_of(strategies_new, Speaker::counselor, vocab);

    PackedInput out;
    out.text = tmpl.render(v);
    out.demonstration_id = demo.record_id;
    out.behaviors_new = behaviors_new;
    out.strategies_new = strategies_new;
    out.behaviors_demo = demo.behaviors;
    out.strategies_demo = demo.strategies;
    return out;
}

PackedInput pack_for_inference(const PromptTemplate &tmpl, const RetrievalRecord &demo,
                               const std::vector<Utterance> &new_history, const std::vector<LabelId> &behaviors_new,
                               const LabelVocabulary &vocab) {
    return pack(tmpl, demo, new_history, behaviors_new, demo.strategies, vocab);
}

TrainingPair pack_training_pair(const PromptTemplate &tmpl, const DialogueSession &session, const RetrievalRecord &demo,
                                const LabelVocabulary &vocab) {
    if (session.history.empty()) throw PreconditionError("pack_training_pair: empty history");
    if (!session.fully_labeled()) throw PreconditionError("pack_training_pair: session is not fully labeled");
    const auto packed = pack(tmpl, demo, session.history, session.history.back().distinct_labels(),
                             session.golden_response.distinct_labels(), vocab);
    return {packed.text, session.golden_response.text()};
}

std::string last_client_sentence(const PromptTemplate &tmpl, std::string_view packed_text) {
    const auto values = tmpl.parse(packed_text);
    auto segments = segment_sentences(values.at("NEW_CLIENT_UTT"));
    if (segments.empty()) return {};
    std::string last = std::move(segments.back());
    while (!last.empty() && (last.back() == ' ' || last.back() == '\t' || last.back() == '\r')) last.pop_back();
    return last;
}

} // namespace psychat
