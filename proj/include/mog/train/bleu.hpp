#pragma once

#include <string>
#include <vector>

namespace mog::train {

using Sentence = std::vector<std::string>;

struct BleuStats {
  double score = 0.0;  // 0..100
  double brevity_penalty = 0.0;
  std::size_t hyp_len = 0, ref_len = 0;
  std::size_t matches[4] = {}, totals[4] = {};
};

/// Corpus BLEU-4: clipped n-gram precisions summed over the corpus, geometric
/// mean with uniform weights, brevity penalty exp(1 - r/c) when c < r. Any
/// zero precision gives 0.
BleuStats bleu_stats(const std::vector<Sentence>& hypotheses, const std::vector<Sentence>& references);
double bleu(const std::vector<Sentence>& hypotheses, const std::vector<Sentence>& references);

}  // namespace mog::train
