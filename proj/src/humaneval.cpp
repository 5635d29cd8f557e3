#include "psychat/humaneval.hpp"

#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "psychat/error.hpp"
#include "psychat/rng.hpp"
#include "psychat/text.hpp"

namespace psychat::humaneval {

using nlohmann::json;

namespace {

template <class F>
void for_each_line(const std::string &jsonl, F &&f) {
    std::istringstream in(jsonl);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::is_blank(line)) continue;
        try {
            f(json::parse(line));
        } catch (const json::exception &e) {
            throw CorpusError(lineno, std::string("malformed record: ") + e.what());
        }
    }
}

} // namespace

Bundle build_humaneval_bundle(const std::vector<Sample> &samples, std::uint64_t seed) {
    std::set<std::string> ids;
    for (const auto &s : samples)
        if (!ids.insert(s.id).second) throw PreconditionError("duplicate sample id '" + s.id + "'");

    Bundle b;
    for (const auto &s : samples) {
        SeededRng rng(text::splitmix64(seed) ^ text::fnv1a64(s.id));
        std::vector<std::size_t> perm{0, 1, 2};
        rng.shuffle(perm);
        BlindedEntry be{s.id, s.history, {}};
        KeyEntry ke{s.id, {}, {}};
        for (std::size_t k = 0; k < 3; ++k) {
            be.options[k] = s.responses[perm[k]].text;
            ke.permutation[k] = perm[k];
            ke.sources[k] = s.responses[perm[k]].source;
        }
        b.blinded.push_back(std::move(be));
        b.key.push_back(std::move(ke));
    }
    return b;
}

std::vector<Sample> unblind(const std::vector<BlindedEntry> &blinded, const std::vector<KeyEntry> &key) {
    std::map<std::string, const KeyEntry *> by_id;
    for (const auto &k : key) by_id[k.id] = &k;
    std::vector<Sample> out;
    for (const auto &be : blinded) {
        auto it = by_id.find(be.id);
        if (it == by_id.end()) throw PreconditionError("no key entry for sample '" + be.id + "'");
        const KeyEntry &k = *it->second;
        Sample s{be.id, be.history, {}};
        std::array<bool, 3> filled{};
        for (std::size_t pos = 0; pos < 3; ++pos) {
            const auto orig = k.permutation[pos];
            if (orig > 2 || filled[orig]) throw PreconditionError("key entry for '" + be.id + "' is not a permutation");
            filled[orig] = true;
            s.responses[orig] = {k.sources[pos], be.options[pos]};
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Sample> parse_samples(const std::string &jsonl) {
    std::vector<Sample> out;
    for_each_line(jsonl, [&](const json &j) {
        Sample s;
        s.id = j.at("id").get<std::string>();
        s.history = j.at("history").get<std::string>();
        const auto &rs = j.at("responses");
        if (!rs.is_array() || rs.size() != 3)
            throw PreconditionError("sample '" + s.id + "' must have exactly 3 responses");
        for (std::size_t k = 0; k < 3; ++k)
            s.responses[k] = {rs[k].at("source").get<std::string>(), rs[k].at("text").get<std::string>()};
        out.push_back(std::move(s));
    });
    return out;
}

std::string blinded_to_jsonl(const std::vector<BlindedEntry> &entries) {
    std::string out;
    for (const auto &e : entries) {
        out += json{{"id", e.id}, {"history", e.history}, {"options", e.options}}.dump();
        out += '\n';
    }
    return out;
}

std::string key_to_jsonl(const std::vector<KeyEntry> &entries) {
    std::string out;
    for (const auto &e : entries) {
        out += json{{"id", e.id}, {"permutation", e.permutation}, {"sources", e.sources}}.dump();
        out += '\n';
    }
    return out;
}

std::vector<BlindedEntry> parse_blinded(const std::string &jsonl) {
    std::vector<BlindedEntry> out;
    for_each_line(jsonl, [&](const json &j) {
        out.push_back({j.at("id").get<std::string>(), j.at("history").get<std::string>(),
                       j.at("options").get<std::array<std::string, 3>>()});
    });
    return out;
}

std::vector<KeyEntry> parse_key(const std::string &jsonl) {
    std::vector<KeyEntry> out;
    for_each_line(jsonl, [&](const json &j) {
        out.push_back({j.at("id").get<std::string>(), j.at("permutation").get<std::array<std::size_t, 3>>(),
                       j.at("sources").get<std::array<std::string, 3>>()});
    });
    return out;
}

} // namespace psychat::humaneval
