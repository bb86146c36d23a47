#include "e2s/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include "e2s/common.hpp"

namespace e2s {

namespace {

using NGramCounts = std::map<TokenSeq, std::size_t>;

NGramCounts ngrams(const TokenSeq& tokens, std::size_t n) {
  NGramCounts out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++out[TokenSeq(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

struct BleuStats {
  std::vector<double> matches;
  std::vector<double> totals;
  double candidate_length = 0.0;
  double reference_length = 0.0;

  explicit BleuStats(int max_order)
      : matches(static_cast<std::size_t>(max_order), 0.0),
        totals(static_cast<std::size_t>(max_order), 0.0) {}

  void add(const TokenSeq& candidate, const std::vector<TokenSeq>& references) {
    for (std::size_t n = 1; n <= matches.size(); ++n) {
      const auto cand = ngrams(candidate, n);
      NGramCounts max_ref;
      for (const auto& ref : references)
        for (const auto& [g, c] : ngrams(ref, n)) max_ref[g] = std::max(max_ref[g], c);
      for (const auto& [g, c] : cand) {
        auto it = max_ref.find(g);
        if (it != max_ref.end()) matches[n - 1] += static_cast<double>(std::min(c, it->second));
        totals[n - 1] += static_cast<double>(c);
      }
    }
    candidate_length += static_cast<double>(candidate.size());
    // Closest reference length; the shorter one on ties.
    std::size_t best = references.front().size();
    for (const auto& ref : references) {
      const auto d = [&](std::size_t len) {
        return std::abs(static_cast<long>(len) - static_cast<long>(candidate.size()));
      };
      if (d(ref.size()) < d(best) || (d(ref.size()) == d(best) && ref.size() < best))
        best = ref.size();
    }
    reference_length += static_cast<double>(best);
  }

  double score(double epsilon) const {
    if (candidate_length == 0.0) return 0.0;
    double log_sum = 0.0;
    for (std::size_t i = 0; i < matches.size(); ++i) {
      const double p = (totals[i] > 0.0 && matches[i] > 0.0) ? matches[i] / totals[i] : epsilon;
      log_sum += std::log(p);
    }
    const double bp = candidate_length > reference_length
                          ? 1.0
                          : std::exp(1.0 - reference_length / candidate_length);
    return bp * std::exp(log_sum / static_cast<double>(matches.size()));
  }
};

void check_order(int max_order) {
  if (max_order < 1) throw Error("InvalidArgument", "BLEU order must be at least 1");
}

}  // namespace

double bleu(const TokenSeq& candidate, const std::vector<TokenSeq>& references, int max_order,
            double epsilon) {
  check_order(max_order);
  if (references.empty()) throw Error("InvalidArgument", "BLEU needs at least one reference");
  BleuStats stats(max_order);
  stats.add(candidate, references);
  return stats.score(epsilon);
}

double bleu4(const TokenSeq& candidate, const std::vector<TokenSeq>& references) {
  return bleu(candidate, references, 4);
}

double corpus_bleu(const std::vector<TokenSeq>& candidates,
                   const std::vector<std::vector<TokenSeq>>& references, int max_order,
                   double epsilon) {
  check_order(max_order);
  if (candidates.size() != references.size())
    throw Error("InvalidArgument", "corpus BLEU: candidate and reference counts differ");
  BleuStats stats(max_order);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (references[i].empty()) throw Error("InvalidArgument", "BLEU needs at least one reference");
    stats.add(candidates[i], references[i]);
  }
  return stats.score(epsilon);
}

double rouge_n_f1(const TokenSeq& candidate, const TokenSeq& reference, int n) {
  if (n < 1) throw Error("InvalidArgument", "ROUGE order must be at least 1");
  const auto cand = ngrams(candidate, static_cast<std::size_t>(n));
  const auto ref = ngrams(reference, static_cast<std::size_t>(n));
  if (cand.empty() || ref.empty()) return 0.0;
  double overlap = 0.0, cand_total = 0.0, ref_total = 0.0;
  for (const auto& [g, c] : cand) {
    cand_total += static_cast<double>(c);
    auto it = ref.find(g);
    if (it != ref.end()) overlap += static_cast<double>(std::min(c, it->second));
  }
  for (const auto& [g, c] : ref) ref_total += static_cast<double>(c);
  if (overlap == 0.0) return 0.0;
  const double p = overlap / cand_total;
  const double r = overlap / ref_total;
  return 100.0 * 2.0 * p * r / (p + r);
}

double rouge4_f1(const TokenSeq& candidate, const TokenSeq& reference) {
  return rouge_n_f1(candidate, reference, 4);
}

double mean_rouge4_f1(const std::vector<TokenSeq>& candidates,
                      const std::vector<TokenSeq>& references) {
  if (candidates.size() != references.size())
    throw Error("InvalidArgument", "ROUGE: candidate and reference counts differ");
  if (candidates.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) sum += rouge4_f1(candidates[i], references[i]);
  return sum / static_cast<double>(candidates.size());
}

double corpus_perplexity(const std::vector<TokenSeq>& sentences) {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& s : sentences)
    for (const auto& t : s) {
      ++counts[t];
      ++total;
    }
  if (total == 0) throw Error("InvalidArgument", "perplexity of empty text");
  double entropy = 0.0;
  for (const auto& [t, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    entropy -= p * std::log2(p);
  }
  return std::exp2(entropy);
}

double avg_sentence_length(const std::vector<TokenSeq>& sentences) {
  if (sentences.empty()) throw Error("InvalidArgument", "average length of no sentences");
  double sum = 0.0;
  for (const auto& s : sentences) sum += static_cast<double>(s.size());
  return sum / static_cast<double>(sentences.size());
}

MetricReport evaluate(const std::string& name, const std::vector<TokenSeq>& predictions,
                      const std::vector<TokenSeq>& references) {
  if (predictions.size() != references.size())
    throw FormatError("prediction count " + std::to_string(predictions.size()) +
                      " differs from reference count " + std::to_string(references.size()));
  if (predictions.empty()) throw EmptyCorpus("nothing to evaluate");
  MetricReport r;
  r.name = name;
  r.count = predictions.size();
  r.perplexity = corpus_perplexity(predictions);
  r.gold_perplexity = corpus_perplexity(references);
  std::vector<std::vector<TokenSeq>> refs;
  refs.reserve(references.size());
  for (const auto& ref : references) refs.push_back({ref});
  r.bleu4 = corpus_bleu(predictions, refs, 4);
  r.rouge4_f1 = mean_rouge4_f1(predictions, references);
  r.avg_length = avg_sentence_length(predictions);
  return r;
}

std::string format_metric_table(const std::vector<MetricReport>& rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %12s %12s %10s %10s %10s\n", "Model", "Perplexity",
                "Gold ppl", "BLEU-4", "ROUGE-4", "Length");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-28s %12.3f %12.3f %10.4f %10.2f %10.2f\n", r.name.c_str(),
                  r.perplexity, r.gold_perplexity, r.bleu4, r.rouge4_f1, r.avg_length);
    out << line;
  }
  return out.str();
}

std::string format_metric_csv(const std::vector<MetricReport>& rows) {
  std::ostringstream out;
  out << "model,perplexity,gold_perplexity,bleu4,rouge4_f1,avg_length,count\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%zu\n", r.name.c_str(),
                  r.perplexity, r.gold_perplexity, r.bleu4, r.rouge4_f1, r.avg_length, r.count);
    out << line;
  }
  return out.str();
}

}  // namespace e2s
