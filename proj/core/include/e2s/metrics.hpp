#pragma once

#include <string>
#include <vector>

namespace e2s {

using TokenSeq = std::vector<std::string>;

inline constexpr double kBleuEpsilon = 1e-9;

/// Sentence BLEU: geometric mean of the 1..max_order modified n-gram
/// precisions times the brevity penalty. A zero precision (including an order
/// longer than the candidate) is replaced by `epsilon`. The reference length
/// is the one closest to the candidate, shorter on ties.
double bleu(const TokenSeq& candidate, const std::vector<TokenSeq>& references, int max_order = 4,
            double epsilon = kBleuEpsilon);
double bleu4(const TokenSeq& candidate, const std::vector<TokenSeq>& references);

/// Corpus BLEU: clipped counts and lengths pooled over all segments before
/// taking precisions and the brevity penalty.
double corpus_bleu(const std::vector<TokenSeq>& candidates,
                   const std::vector<std::vector<TokenSeq>>& references, int max_order = 4,
                   double epsilon = kBleuEpsilon);

/// ROUGE-N F1 scaled to [0, 100]. 0 when either side has no n-grams.
double rouge_n_f1(const TokenSeq& candidate, const TokenSeq& reference, int n);
double rouge4_f1(const TokenSeq& candidate, const TokenSeq& reference);
/// Mean sentence ROUGE-4 F1 over aligned pairs.
double mean_rouge4_f1(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references);

/// 2 to the entropy (bits) of the empirical unigram distribution of all tokens.
/// This scores the text itself, not a model. Throws on empty text.
double corpus_perplexity(const std::vector<TokenSeq>& sentences);

double avg_sentence_length(const std::vector<TokenSeq>& sentences);

struct MetricReport {
  std::string name;
  double perplexity = 0.0;       // of the predictions
  double gold_perplexity = 0.0;  // of the references
  double bleu4 = 0.0;
  double rouge4_f1 = 0.0;
  double avg_length = 0.0;
  std::size_t count = 0;
};

/// Scores predictions against aligned single references.
MetricReport evaluate(const std::string& name, const std::vector<TokenSeq>& predictions,
                      const std::vector<TokenSeq>& references);

/// Fixed-width text table, one row per report.
std::string format_metric_table(const std::vector<MetricReport>& rows);
std::string format_metric_csv(const std::vector<MetricReport>& rows);

}  // namespace e2s
