#include "mog/train/decode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mog::train {

using nn::Batch;
using nn::Binder;
using nn::EncoderOutput;
using num::Tape;
using num::Tensor;

namespace {

double normalised(double log_prob, std::size_t len, double alpha) {
  return alpha == 0.0 ? log_prob : log_prob / std::pow(double(std::max<std::size_t>(len, 1)), alpha);
}

// Log-probabilities of the next token for every prefix (all of equal length).
Tensor next_log_probs(const nn::Seq2Seq& model, Binder& p, const EncoderOutput& mem,
                      const std::vector<std::vector<int>>& prefixes) {
  const Batch in = Batch::pack(prefixes, 0);
  const Tensor logits = model.decode(p, mem, in, {}).value();
  const std::size_t len = in.layout.len, v = logits.cols();
  Tensor last({prefixes.size(), v});
  for (std::size_t b = 0; b < prefixes.size(); ++b) {
    const auto row = logits.row(b * len + len - 1);
    std::copy(row.begin(), row.end(), last.row(b).begin());
  }
  return num::log_softmax_rows(last);
}

}  // namespace

std::size_t output_limit(const nn::Seq2Seq& model, std::size_t src_len, const DecodeOptions& opts) {
  return std::min(opts.extra + 2 * src_len, model.config().max_len - 1);
}

std::vector<Hypothesis> greedy_decode(const nn::Seq2Seq& model, const std::vector<std::vector<int>>& sources,
                                      const DecodeOptions& opts) {
  if (sources.empty()) return {};
  Tape tape;
  Binder p(tape, model.params(), false);
  const EncoderOutput mem = model.encode(p, Batch::pack(sources, opts.pad), {});
  std::vector<Hypothesis> out(sources.size());
  std::vector<std::vector<int>> prefixes(sources.size(), std::vector<int>{opts.bos});
  std::vector<bool> done(sources.size(), false);
  std::size_t limit = 0;
  for (const auto& s : sources) limit = std::max(limit, output_limit(model, s.size(), opts));
  for (std::size_t step = 0; step < limit; ++step) {
    const Tensor logp = next_log_probs(model, p, mem, prefixes);
    bool any = false;
    for (std::size_t b = 0; b < sources.size(); ++b) {
      const auto row = logp.row(b);
      const int tok = int(std::max_element(row.begin(), row.end()) - row.begin());
      prefixes[b].push_back(tok);
      if (done[b] || step >= output_limit(model, sources[b].size(), opts)) continue;
      out[b].tokens.push_back(tok);
      out[b].log_prob += row[std::size_t(tok)];
      if (tok == opts.eos || step + 1 >= output_limit(model, sources[b].size(), opts)) done[b] = true;
      any = any || !done[b];
    }
    if (!any) break;
  }
  for (auto& h : out) h.score = normalised(h.log_prob, h.tokens.size(), opts.alpha);
  return out;
}

Hypothesis beam_search(const nn::Seq2Seq& model, const std::vector<int>& source, const DecodeOptions& opts) {
  if (opts.beam == 0) throw std::invalid_argument("beam width must be >= 1");
  const std::size_t limit = output_limit(model, source.size(), opts);
  struct Alive {
    std::vector<int> tokens;
    double log_prob;
  };
  struct Candidate {
    double log_prob;
    std::size_t parent;
    int token;
  };
  std::vector<Alive> alive{{{}, 0.0}};
  std::vector<Hypothesis> finished;
  for (std::size_t step = 0; step < limit && !alive.empty(); ++step) {
    Tape tape;
    Binder p(tape, model.params(), false);
    // the memory is re-encoded to match the number of live hypotheses
    const EncoderOutput mem =
        model.encode(p, Batch::pack(std::vector<std::vector<int>>(alive.size(), source), opts.pad), {});
    std::vector<std::vector<int>> prefixes;
    for (const auto& a : alive) {
      prefixes.push_back({opts.bos});
      prefixes.back().insert(prefixes.back().end(), a.tokens.begin(), a.tokens.end());
    }
    const Tensor logp = next_log_probs(model, p, mem, prefixes);
    std::vector<Candidate> cands;
    for (std::size_t h = 0; h < alive.size(); ++h)
      for (std::size_t v = 0; v < logp.cols(); ++v) cands.push_back({alive[h].log_prob + logp.at(h, v), h, int(v)});
    const std::size_t keep = std::min(opts.beam, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.token < b.token;
    });
    std::vector<Alive> next;
    for (std::size_t i = 0; i < keep; ++i) {
      Alive a{alive[cands[i].parent].tokens, cands[i].log_prob};
      a.tokens.push_back(cands[i].token);
      if (cands[i].token == opts.eos)
        finished.push_back({a.tokens, a.log_prob, normalised(a.log_prob, a.tokens.size(), opts.alpha)});
      else
        next.push_back(std::move(a));
    }
    alive = std::move(next);
  }
  for (auto& a : alive) finished.push_back({a.tokens, a.log_prob, normalised(a.log_prob, a.tokens.size(), opts.alpha)});
  return *std::max_element(finished.begin(), finished.end(),
                           [](const Hypothesis& a, const Hypothesis& b) { return a.score < b.score; });
}

std::vector<std::vector<int>> decode_all(const nn::Seq2Seq& model, const std::vector<std::vector<int>>& sources,
                                         const DecodeOptions& opts, std::size_t batch) {
  std::vector<std::vector<int>> out;
  out.reserve(sources.size());
  auto strip = [&](std::vector<int> t) {
    if (!t.empty() && t.back() == opts.eos) t.pop_back();
    return t;
  };
  if (opts.beam <= 1) {
    for (std::size_t i = 0; i < sources.size(); i += batch) {
      std::vector<std::vector<int>> chunk(sources.begin() + i, sources.begin() + std::min(sources.size(), i + batch));
      for (auto& h : greedy_decode(model, chunk, opts)) out.push_back(strip(std::move(h.tokens)));
    }
  } else {
    for (const auto& s : sources) out.push_back(strip(beam_search(model, s, opts).tokens));
  }
  return out;
}

}  // namespace mog::train
