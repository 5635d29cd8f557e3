#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace psychat::metrics {

using Tokens = std::vector<std::string>;
using Tokenizer = std::function<Tokens(std::string_view)>;

/// Default tokenizer: one token per CJK (or other non-Latin) character or
/// punctuation mark; contiguous Latin letter/digit runs stay whole; whitespace
/// separates tokens and is dropped.
Tokens tokenize(std::string_view text);

/// Whitespace-split tokenizer for word-level evaluation.
Tokens tokenize_whitespace(std::string_view text);

/// Sentence BLEU over orders 1..n: brevity penalty times the geometric mean of
/// clipped n-gram precisions. A zero-match order contributes 1/(2 * #candidate
/// n-grams); orders for which the candidate has no n-grams are left out.
double bleu_n(const Tokens &candidate, const Tokens &reference, int n);

/// Length of the longest common subsequence.
std::size_t lcs_length(const Tokens &a, const Tokens &b);

/// LCS-based F1.
double rouge_l(const Tokens &candidate, const Tokens &reference);

/// Corpus-level unique n-grams / total n-grams.
double distinct_n(const std::vector<Tokens> &corpus, int n);

/// Exact-match METEOR: greedy in-order unigram alignment, F_mean = 10PR/(R+9P),
/// fragmentation penalty 0.5 * (chunks/m)^3.
double meteor_simplified(const Tokens &candidate, const Tokens &reference);

struct PairScores {
    double meteor = 0, bleu1 = 0, bleu2 = 0, bleu3 = 0, rouge_l = 0;
};

struct EvalReport {
    std::size_t pair_count = 0;
    double meteor = 0, bleu1 = 0, bleu2 = 0, bleu3 = 0, rouge_l = 0;
    double distinct1 = 0, distinct2 = 0;
    std::vector<PairScores> per_pair;

    nlohmann::json to_json() const;
};

struct TextPair {
    std::string candidate;
    std::string reference;
};

/// Means of the per-pair scores; Distinct-1/2 over all candidates.
EvalReport evaluate(const std::vector<TextPair> &pairs, const Tokenizer &tokenizer = tokenize);

} // namespace psychat::metrics
