#pragma once

#include <vector>

#include "mog/nn/encoder.hpp"

namespace mog::train {

struct Hypothesis {
  std::vector<int> tokens;  // without <bos>; ends in <eos> unless cut at the length limit
  double log_prob = 0.0;
  double score = 0.0;  // log_prob / len^alpha
};

struct DecodeOptions {
  int bos = 2, eos = 3, pad = 0;
  std::size_t beam = 1;
  double alpha = 0.0;
  /// Output limit is min(extra + 2 * source length, model max_len - 1).
  std::size_t extra = 10;
};

std::size_t output_limit(const nn::Seq2Seq& model, std::size_t src_len, const DecodeOptions& opts);

/// Argmax decoding of many sources at once. Ties go to the lowest token id.
std::vector<Hypothesis> greedy_decode(const nn::Seq2Seq& model, const std::vector<std::vector<int>>& sources,
                                      const DecodeOptions& opts);

/// Beam search over one source. Each step keeps the `beam` best expansions
/// by accumulated log-probability; those ending in <eos> retire. The result is
/// the retired hypothesis with the highest length-normalised score.
Hypothesis beam_search(const nn::Seq2Seq& model, const std::vector<int>& source, const DecodeOptions& opts);

/// Greedy for beam 1, beam search otherwise. <eos> is stripped from the result.
std::vector<std::vector<int>> decode_all(const nn::Seq2Seq& model, const std::vector<std::vector<int>>& sources,
                                         const DecodeOptions& opts, std::size_t batch = 64);

}  // namespace mog::train
