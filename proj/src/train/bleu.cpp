#include "mog/train/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace mog::train {

namespace {

std::map<Sentence, std::size_t> ngrams(const Sentence& s, std::size_t n) {
  std::map<Sentence, std::size_t> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[Sentence(s.begin() + i, s.begin() + i + n)];
  return out;
}

}  // namespace

BleuStats bleu_stats(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs) {
  if (hyps.size() != refs.size()) throw std::invalid_argument("bleu: hypothesis and reference counts differ");
  if (hyps.empty()) throw std::invalid_argument("bleu: empty corpus");
  BleuStats st;
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    st.hyp_len += hyps[k].size();
    st.ref_len += refs[k].size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto h = ngrams(hyps[k], n), r = ngrams(refs[k], n);
      for (const auto& [gram, c] : h) {
        auto it = r.find(gram);
        if (it != r.end()) st.matches[n - 1] += std::min(c, it->second);
        st.totals[n - 1] += c;
      }
    }
  }
  if (st.hyp_len == 0) return st;
  st.brevity_penalty = st.hyp_len < st.ref_len ? std::exp(1.0 - double(st.ref_len) / double(st.hyp_len)) : 1.0;
  double log_p = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (st.matches[n] == 0) return st;
    log_p += std::log(double(st.matches[n]) / double(st.totals[n]));
  }
  st.score = 100.0 * st.brevity_penalty * std::exp(log_p / 4.0);
  return st;
}

double bleu(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs) {
  return bleu_stats(hyps, refs).score;
}

}  // namespace mog::train
