#include "psychat/metrics.hpp"

#include <cmath>
#include <map>
#include <set>

#include "psychat/error.hpp"
#include "psychat/text.hpp"

namespace psychat::metrics {

namespace {

bool is_latin_or_digit(char32_t c) {
    return (c >= U'0' && c <= U'9') || (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') ||
           (c >= 0xC0 && c <= 0x24F && c != 0xD7 && c != 0xF7);
}

bool is_whitespace(char32_t c) {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' || c == 0x3000 ||
           c == 0xA0;
}

std::string ngram_key(const Tokens &t, std::size_t start, std::size_t n) {
    std::string key;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) key += '\x1f';
        key += t[start + i];
    }
    return key;
}

std::map<std::string, std::size_t> ngram_counts(const Tokens &t, std::size_t n) {
    std::map<std::string, std::size_t> out;
    if (t.size() < n) return out;
    for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[ngram_key(t, i, n)];
    return out;
}

void require_nonempty(const Tokens &candidate, const Tokens &reference, const char *who) {
    if (candidate.empty() || reference.empty()) throw PreconditionError(std::string(who) + ": empty candidate or reference");
}

} // namespace

Tokens tokenize(std::string_view s) {
    Tokens out;
    std::string run;
    for (auto ch : text::utf8_chars(s)) {
        const char32_t c = text::decode_utf8(ch);
        if (is_latin_or_digit(c)) {
            run += ch;
            continue;
        }
        if (!run.empty()) {
            out.push_back(std::move(run));
            run.clear();
        }
        if (!is_whitespace(c)) out.emplace_back(ch);
    }
    if (!run.empty()) out.push_back(std::move(run));
    return out;
}

Tokens tokenize_whitespace(std::string_view s) {
    Tokens out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

double bleu_n(const Tokens &candidate, const Tokens &reference, int n) {
    if (n < 1) throw PreconditionError("bleu_n: n must be >= 1");
    require_nonempty(candidate, reference, "bleu_n");
    double log_sum = 0.0;
    int orders = 0;
    for (int k = 1; k <= n; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        if (candidate.size() < uk) continue;
        const std::size_t total = candidate.size() - uk + 1;
        const auto cand = ngram_counts(candidate, uk);
        const auto ref = ngram_counts(reference, uk);
        std::size_t matched = 0;
        for (const auto &[g, c] : cand) {
            auto it = ref.find(g);
            if (it != ref.end()) matched += std::min(c, it->second);
        }
        const double p = matched > 0 ? static_cast<double>(matched) / static_cast<double>(total)
                                     : 1.0 / (2.0 * static_cast<double>(total));
        log_sum += std::log(p);
        ++orders;
    }
    const double c = static_cast<double>(candidate.size());
    const double r = static_cast<double>(reference.size());
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
    return bp * std::exp(log_sum / orders);
}

std::size_t lcs_length(const Tokens &a, const Tokens &b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double rouge_l(const Tokens &candidate, const Tokens &reference) {
    require_nonempty(candidate, reference, "rouge_l");
    const auto lcs = static_cast<double>(lcs_length(candidate, reference));
    if (lcs == 0.0) return 0.0;
    const double p = lcs / static_cast<double>(candidate.size());
    const double r = lcs / static_cast<double>(reference.size());
    return 2.0 * p * r / (p + r);
}

double distinct_n(const std::vector<Tokens> &corpus, int n) {
    if (n < 1) throw PreconditionError("distinct_n: n must be >= 1");
    const auto un = static_cast<std::size_t>(n);
    std::set<std::string> unique;
    std::size_t total = 0;
    for (const auto &t : corpus) {
        if (t.size() < un) continue;
        for (std::size_t i = 0; i + un <= t.size(); ++i) {
            unique.insert(ngram_key(t, i, un));
            ++total;
        }
    }
    if (total == 0) throw PreconditionError("distinct_n: every sequence is shorter than n");
    return static_cast<double>(unique.size()) / static_cast<double>(total);
}

double meteor_simplified(const Tokens &candidate, const Tokens &reference) {
    require_nonempty(candidate, reference, "meteor_simplified");
    // Greedy monotone alignment: each candidate token takes the earliest unused
    // reference position after the previous match.
    std::vector<std::pair<std::size_t, std::size_t>> matches;
    std::size_t next_ref = 0;
    for (std::size_t i = 0; i < candidate.size() && next_ref < reference.size(); ++i) {
        for (std::size_t j = next_ref; j < reference.size(); ++j) {
            if (candidate[i] == reference[j]) {
                matches.emplace_back(i, j);
                next_ref = j + 1;
                break;
            }
        }
    }
    const auto m = static_cast<double>(matches.size());
    if (matches.empty()) return 0.0;
    std::size_t chunks = 1;
    for (std::size_t k = 1; k < matches.size(); ++k) {
        const bool contiguous =
            matches[k].first == matches[k - 1].first + 1 && matches[k].second == matches[k - 1].second + 1;
        if (!contiguous) ++chunks;
    }
    const double p = m / static_cast<double>(candidate.size());
    const double r = m / static_cast<double>(reference.size());
    const double fmean = 10.0 * p * r / (r + 9.0 * p);
    const double frag = static_cast<double>(chunks) / m;
    const double penalty = 0.5 * frag * frag * frag;
    return fmean * (1.0 - penalty);
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto &p : per_pair)
        pairs.push_back({{"meteor", p.meteor}, {"bleu1", p.bleu1}, {"bleu2", p.bleu2}, {"bleu3", p.bleu3}, {"rouge_l", p.rouge_l}});
    return {{"pair_count", pair_count},
            {"meteor", meteor},
            {"bleu1", bleu1},
            {"bleu2", bleu2},
            {"bleu3", bleu3},
            {"rouge_l", rouge_l},
            {"distinct1", distinct1},
            {"distinct2", distinct2},
            {"per_pair", std::move(pairs)}};
}

EvalReport evaluate(const std::vector<TextPair> &pairs, const Tokenizer &tokenizer) {
    if (pairs.empty()) throw PreconditionError("evaluate: no pairs");
    EvalReport rep;
    rep.pair_count = pairs.size();
    std::vector<Tokens> candidates;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto cand = tokenizer(pairs[i].candidate);
        const auto ref = tokenizer(pairs[i].reference);
        if (cand.empty() || ref.empty()) throw PreconditionError("evaluate: pair " + std::to_string(i) + " has no tokens");
        PairScores s;
        s.meteor = meteor_simplified(cand, ref);
        s.bleu1 = bleu_n(cand, ref, 1);
        s.bleu2 = bleu_n(cand, ref, 2);
        s.bleu3 = bleu_n(cand, ref, 3);
        s.rouge_l = rouge_l(cand, ref);
        rep.meteor += s.meteor;
        rep.bleu1 += s.bleu1;
        rep.bleu2 += s.bleu2;
        rep.bleu3 += s.bleu3;
        rep.rouge_l += s.rouge_l;
        rep.per_pair.push_back(s);
        candidates.push_back(cand);
    }
    const double n = static_cast<double>(pairs.size());
    rep.meteor /= n;
    rep.bleu1 /= n;
    rep.bleu2 /= n;
    rep.bleu3 /= n;
    rep.rouge_l /= n;
    rep.distinct1 = distinct_n(candidates, 1);
    rep.distinct2 = distinct_n(candidates, 2);
    return rep;
}

} // namespace psychat::metrics
