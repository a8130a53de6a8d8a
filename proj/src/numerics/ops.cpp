#include "mog/numerics/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

namespace mog::num {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using Strided = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStrided = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

ConstMapMat view(const Tensor& t) { return ConstMapMat(t.data().data(), t.rows(), t.cols()); }
MapMat view(Tensor& t) { return MapMat(t.data().data(), t.rows(), t.cols()); }

Shape matrix_shape(std::size_t rows, std::size_t cols) { return {rows, cols}; }

Tape& same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw std::invalid_argument("operands live on different tapes");
  return a.tape();
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  Tensor out(matrix_shape(a.rows(), b.cols()));
  view(out).noalias() = view(a) * view(b);
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out(matrix_shape(a.cols(), a.rows()));
  view(out) = view(a).transpose();
  return out;
}

Tensor log_softmax_rows(const Tensor& a) {
  Tensor out(a.shape());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto in = a.row(r);
    auto dst = out.row(r);
    double m = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (double v : in) s += std::exp(v - m);
    double lse = m + std::log(s);
    for (std::size_t c = 0; c < in.size(); ++c) dst[c] = in[c] - lse;
  }
  return out;
}

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  Tensor out = matmul(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record("matmul", std::move(out), a.requires_grad() || b.requires_grad(),
                     [ia, ib](Tape& t, std::size_t self) {
                       auto g = view(t.upstream(self));
                       if (t.requires_grad(ia)) {
                         Tensor& ga = t.grad_slot(ia);
                         auto gv = MapMat(ga.data().data(), ga.rows(), ga.cols());
                         gv.noalias() += g * view(t.value(ib)).transpose();
                       }
                       if (t.requires_grad(ib)) {
                         Tensor& gb = t.grad_slot(ib);
                         auto gv = MapMat(gb.data().data(), gb.rows(), gb.cols());
                         gv.noalias() += view(t.value(ia)).transpose() * g;
                       }
                     });
}

Var transpose(Var a) {
  Tensor out = transpose(a.value());
  const std::size_t ia = a.id();
  return a.tape().record("transpose", std::move(out), a.requires_grad(), [ia](Tape& t, std::size_t self) {
    Tensor& ga = t.grad_slot(ia);
    MapMat(ga.data().data(), ga.rows(), ga.cols()) += view(t.upstream(self)).transpose();
  });
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out += b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record("add", std::move(out), a.requires_grad() || b.requires_grad(),
                     [ia, ib](Tape& t, std::size_t self) {
                       t.accumulate(ia, t.upstream(self));
                       t.accumulate(ib, t.upstream(self));
                     });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const Tensor& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record("sub", std::move(out), a.requires_grad() || b.requires_grad(),
                     [ia, ib](Tape& t, std::size_t self) {
                       const Tensor& g = t.upstream(self);
                       t.accumulate(ia, g);
                       if (t.requires_grad(ib)) {
                         Tensor& gb = t.grad_slot(ib);
                         for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                       }
                     });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record("mul", std::move(out), a.requires_grad() || b.requires_grad(),
                     [ia, ib](Tape& t, std::size_t self) {
                       const Tensor& g = t.upstream(self);
                       if (t.requires_grad(ia)) {
                         Tensor& ga = t.grad_slot(ia);
                         const Tensor& yv = t.value(ib);
                         for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * yv[i];
                       }
                       if (t.requires_grad(ib)) {
                         Tensor& gb = t.grad_slot(ib);
                         const Tensor& xv = t.value(ia);
                         for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * xv[i];
                       }
                     });
}

Var scale(Var a, double factor) { return affine(a, factor, 0.0); }

Var affine(Var a, double alpha, double beta) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = alpha * x[i] + beta;
  const std::size_t ia = a.id();
  return a.tape().record("affine", std::move(out), a.requires_grad(), [ia, alpha](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    Tensor& ga = t.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += alpha * g[i];
  });
}

Var add_row(Var a, Var row) {
  Tape& tape = same_tape(a, row);
  const Tensor& x = a.value();
  const Tensor& r = row.value();
  if (r.size() != x.cols()) {
    throw DimensionError("add_row: row of " + std::to_string(r.size()) + " does not match " + to_string(x.shape()));
  }
  Tensor out = x;
  const std::size_t n = x.cols();
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < n; ++c) out[i * n + c] += r[c];
  const std::size_t ia = a.id(), ir = row.id();
  return tape.record("add_row", std::move(out), a.requires_grad() || row.requires_grad(),
                     [ia, ir](Tape& t, std::size_t self) {
                       const Tensor& g = t.upstream(self);
                       t.accumulate(ia, g);
                       if (t.requires_grad(ir)) {
                         Tensor& gr = t.grad_slot(ir);
                         const std::size_t n = g.cols();
                         for (std::size_t i = 0; i < g.rows(); ++i)
                           for (std::size_t c = 0; c < n; ++c) gr[c] += g[i * n + c];
                       }
                     });
}

Var linear(Var x, Var weight, Var bias) { return add_row(matmul(x, weight), bias); }

Var sigmoid(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
  const std::size_t ia = a.id();
  return a.tape().record("sigmoid", std::move(out), a.requires_grad(), [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
  const std::size_t ia = a.id();
  return a.tape().record("tanh", std::move(out), a.requires_grad(), [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var relu(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  const std::size_t ia = a.id();
  return a.tape().record("relu", std::move(out), a.requires_grad(), [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    const Tensor& x = t.value(ia);
    Tensor& ga = t.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] > 0.0) ga[i] += g[i];
  });
}

Var softmax(Var a, int axis) {
  if (axis == 0) return transpose(softmax(transpose(a), 1));
  if (axis != 1 && axis != -1) throw DimensionError("softmax: axis must be 0, 1 or -1");
  const Tensor& x = a.value();
  Tensor out(x.shape());
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto dst = out.row(r);
    double m = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += (dst[c] = std::exp(in[c] - m));
    for (std::size_t c = 0; c < n; ++c) dst[c] /= s;
  }
  const std::size_t ia = a.id();
  return a.tape().record("softmax", std::move(out), a.requires_grad(), [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad_slot(ia);
    const std::size_t n = y.cols();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += g[r * n + c] * y[r * n + c];
      for (std::size_t c = 0; c < n; ++c) ga[r * n + c] += y[r * n + c] * (g[r * n + c] - dot);
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double epsilon) {
  Tape& tape = same_tape(x, gain);
  const Tensor& in = x.value();
  const std::size_t n = in.cols();
  if (gain.value().size() != n || bias.value().size() != n) {
    throw DimensionError("layer_norm: gain/bias width does not match " + to_string(in.shape()));
  }
  Tensor out(in.shape());
  Tensor normed(in.shape());
  std::vector<double> inv_std(in.rows());
  const Tensor& g = gain.value();
  const Tensor& b = bias.value();
  for (std::size_t r = 0; r < in.rows(); ++r) {
    auto row = in.row(r);
    double mu = 0.0;
    for (double v : row) mu += v;
    mu /= double(n);
    double var = 0.0;
    for (double v : row) var += (v - mu) * (v - mu);
    var /= double(n);
    inv_std[r] = 1.0 / std::sqrt(var + epsilon);
    for (std::size_t c = 0; c < n; ++c) {
      double xh = (row[c] - mu) * inv_std[r];
      normed[r * n + c] = xh;
      out[r * n + c] = xh * g[c] + b[c];
    }
  }
  const std::size_t ix = x.id(), ig = gain.id(), ib = bias.id();
  const bool needs = x.requires_grad() || gain.requires_grad() || bias.requires_grad();
  return tape.record("layer_norm", std::move(out), needs,
                     [ix, ig, ib, normed = std::move(normed), inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
                       const Tensor& dy = t.upstream(self);
                       const Tensor& gv = t.value(ig);
                       const std::size_t n = dy.cols();
                       if (t.requires_grad(ig) || t.requires_grad(ib)) {
                         Tensor dg(gv.shape()), db(gv.shape());
                         for (std::size_t r = 0; r < dy.rows(); ++r)
                           for (std::size_t c = 0; c < n; ++c) {
                             dg[c] += dy[r * n + c] * normed[r * n + c];
                             db[c] += dy[r * n + c];
                           }
                         t.accumulate(ig, dg);
                         t.accumulate(ib, db);
                       }
                       if (!t.requires_grad(ix)) return;
                       Tensor& dx = t.grad_slot(ix);
                       std::vector<double> dxh(n);
                       for (std::size_t r = 0; r < dy.rows(); ++r) {
                         double m1 = 0.0, m2 = 0.0;
                         for (std::size_t c = 0; c < n; ++c) {
                           dxh[c] = dy[r * n + c] * gv[c];
                           m1 += dxh[c];
                           m2 += dxh[c] * normed[r * n + c];
                         }
                         m1 /= double(n);
                         m2 /= double(n);
                         for (std::size_t c = 0; c < n; ++c)
                           dx[r * n + c] += inv_std[r] * (dxh[c] - m1 - normed[r * n + c] * m2);
                       }
                     });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no parts");
  Tape& tape = parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  bool needs = false;
  std::vector<std::size_t> ids, widths;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw DimensionError("concat_cols: row counts differ");
    cols += p.cols();
    needs = needs || p.requires_grad();
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  Tensor out(matrix_shape(rows, cols));
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.row(r).begin(), v.cols(), out.row(r).begin() + offset);
    offset += v.cols();
  }
  return tape.record("concat_cols", std::move(out), needs, [ids, widths](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.requires_grad(ids[k])) {
        Tensor& gk = t.grad_slot(ids[k]);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < widths[k]; ++c) gk[r * widths[k] + c] += g[r * g.cols() + offset + c];
      }
      offset += widths[k];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no parts");
  Tape& tape = parts.front().tape();
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  bool needs = false;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw DimensionError("concat_rows: column counts differ");
    rows += p.rows();
    needs = needs || p.requires_grad();
    ids.push_back(p.id());
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const Var& p : parts) data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  return tape.record("concat_rows", Tensor(matrix_shape(rows, cols), std::move(data)), needs,
                     [ids](Tape& t, std::size_t self) {
                       const Tensor& g = t.upstream(self);
                       std::size_t offset = 0;
                       for (std::size_t id : ids) {
                         const std::size_t n = t.value(id).size();
                         if (t.requires_grad(id)) {
                           Tensor& gk = t.grad_slot(id);
                           for (std::size_t i = 0; i < n; ++i) gk[i] += g[offset + i];
                         }
                         offset += n;
                       }
                     });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  if (count == 0 || begin + count > x.cols()) throw DimensionError("slice_cols: range outside " + to_string(x.shape()));
  Tensor out(matrix_shape(x.rows(), count));
  for (std::size_t r = 0; r < x.rows(); ++r) std::copy_n(x.row(r).begin() + begin, count, out.row(r).begin());
  const std::size_t ia = a.id();
  return a.tape().record("slice_cols", std::move(out), a.requires_grad(), [ia, begin, count](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    Tensor& ga = t.grad_slot(ia);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < count; ++c) ga[r * ga.cols() + begin + c] += g[r * count + c];
  });
}

Var dropout(Var a, double rate, bool training, std::mt19937_64& rng) {
  if (!training || rate <= 0.0) return a;
  if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be below 1");
  const Tensor& x = a.value();
  Tensor mask(x.shape());
  std::bernoulli_distribution keep(1.0 - rate);
  const double inv = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = keep(rng) ? inv : 0.0;
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * mask[i];
  const std::size_t ia = a.id();
  return a.tape().record("dropout", std::move(out), a.requires_grad(), [ia, mask = std::move(mask)](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    Tensor& ga = t.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id();
  return a.tape().record("sum", Tensor({1}, s), a.requires_grad(), [ia](Tape& t, std::size_t self) {
    const double g = t.upstream(self)[0];
    Tensor& ga = t.grad_slot(ia);
    for (double& v : ga.data()) v += g;
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / double(a.value().size())); }

Var embedding(Var table, std::span<const int> ids) {
  const Tensor& tab = table.value();
  const std::size_t d = tab.cols();
  Tensor out(matrix_shape(ids.size(), d));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || std::size_t(ids[i]) >= tab.rows()) {
      throw std::out_of_range("embedding: id " + std::to_string(ids[i]) + " outside table of " +
                              std::to_string(tab.rows()));
    }
    std::copy_n(tab.row(std::size_t(ids[i])).begin(), d, out.row(i).begin());
  }
  const std::size_t it = table.id();
  std::vector<int> idv(ids.begin(), ids.end());
  return table.tape().record("embedding", std::move(out), table.requires_grad(),
                             [it, idv = std::move(idv)](Tape& t, std::size_t self) {
                               const Tensor& g = t.upstream(self);
                               Tensor& gt = t.grad_slot(it);
                               const std::size_t d = g.cols();
                               for (std::size_t i = 0; i < idv.size(); ++i)
                                 for (std::size_t c = 0; c < d; ++c) gt[std::size_t(idv[i]) * d + c] += g[i * d + c];
                             });
}

Var cross_entropy(Var logits, std::span<const int> targets, int ignore_id) {
  const Tensor& x = logits.value();
  if (targets.size() != x.rows()) throw DimensionError("cross_entropy: one target per row required");
  Tensor logp = log_softmax_rows(x);
  const std::size_t v = x.cols();
  double loss = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (targets[r] == ignore_id) continue;
    if (targets[r] < 0 || std::size_t(targets[r]) >= v) throw std::out_of_range("cross_entropy: target out of range");
    loss -= logp[r * v + std::size_t(targets[r])];
    ++count;
  }
  if (count == 0) throw std::invalid_argument("cross_entropy: every target is ignored");
  loss /= double(count);
  const std::size_t il = logits.id();
  std::vector<int> tv(targets.begin(), targets.end());
  return logits.tape().record(
      "cross_entropy", Tensor({1}, loss), logits.requires_grad(),
      [il, ignore_id, count, tv = std::move(tv), logp = std::move(logp)](Tape& t, std::size_t self) {
        const double g = t.upstream(self)[0] / double(count);
        Tensor& gl = t.grad_slot(il);
        const std::size_t v = gl.cols();
        for (std::size_t r = 0; r < tv.size(); ++r) {
          if (tv[r] == ignore_id) continue;
          for (std::size_t c = 0; c < v; ++c) gl[r * v + c] += g * std::exp(logp[r * v + c]);
          gl[r * v + std::size_t(tv[r])] -= g;
        }
      });
}

Var interleave_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("interleave_rows: no parts");
  Tape& tape = parts.front().tape();
  const Shape shape = parts.front().value().shape();
  const std::size_t n = parts.front().rows(), d = parts.front().cols(), k = parts.size();
  bool needs = false;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    if (p.rows() != n || p.cols() != d) throw DimensionError("interleave_rows: parts differ in shape");
    needs = needs || p.requires_grad();
    ids.push_back(p.id());
  }
  Tensor out(matrix_shape(n * k, d));
  for (std::size_t j = 0; j < k; ++j) {
    const Tensor& v = parts[j].value();
    for (std::size_t r = 0; r < n; ++r) std::copy_n(v.row(r).begin(), d, out.row(r * k + j).begin());
  }
  return tape.record("interleave_rows", std::move(out), needs, [ids, n, d](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    const std::size_t k = ids.size();
    for (std::size_t j = 0; j < k; ++j) {
      if (!t.requires_grad(ids[j])) continue;
      Tensor& gj = t.grad_slot(ids[j]);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) gj[r * d + c] += g[(r * k + j) * d + c];
    }
  });
}

Var group_sum_rows(Var a, std::size_t group) {
  const Tensor& x = a.value();
  if (group == 0 || x.rows() % group != 0) throw DimensionError("group_sum_rows: rows not divisible by group");
  const std::size_t n = x.rows() / group, d = x.cols();
  Tensor out(matrix_shape(n, d));
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) out[(r / group) * d + c] += x[r * d + c];
  const std::size_t ia = a.id();
  return a.tape().record("group_sum_rows", std::move(out), a.requires_grad(), [ia, group](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    Tensor& ga = t.grad_slot(ia);
    const std::size_t d = g.cols();
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t c = 0; c < d; ++c) ga[r * d + c] += g[(r / group) * d + c];
  });
}

Var attention_core(Var q, Var k, Var v, const AttentionLayout& layout) {
  Tape& tape = same_tape(q, k);
  const std::size_t B = layout.batch, Lq = layout.query_len, Lk = layout.key_len, H = layout.heads;
  const std::size_t D = q.cols();
  if (q.rows() != B * Lq || k.rows() != B * Lk || v.rows() != B * Lk) {
    throw DimensionError("attention_core: row counts do not match batch layout");
  }
  if (k.cols() != D || v.cols() != D) throw DimensionError("attention_core: q/k/v widths differ");
  if (H == 0 || D % H != 0) throw DimensionError("attention_core: width not divisible by heads");
  if (!layout.key_lengths.empty() && layout.key_lengths.size() != B) {
    throw DimensionError("attention_core: key_lengths must have one entry per batch row");
  }
  const std::size_t dh = D / H;
  const double s = layout.scale != 0.0 ? layout.scale : 1.0 / std::sqrt(double(dh));

  // probs[b][h] is Lq x Lk, stored contiguously.
  std::vector<double> probs(B * H * Lq * Lk);
  Tensor out(matrix_shape(B * Lq, D));
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t valid = layout.key_lengths.empty() ? Lk : layout.key_lengths[b];
    if (valid == 0 || valid > Lk) throw DimensionError("attention_core: key length outside [1, key_len]");
    for (std::size_t h = 0; h < H; ++h) {
      ConstStrided qb(q.value().data().data() + b * Lq * D + h * dh, Lq, dh, Eigen::OuterStride<>(D));
      ConstStrided kb(k.value().data().data() + b * Lk * D + h * dh, Lk, dh, Eigen::OuterStride<>(D));
      ConstStrided vb(v.value().data().data() + b * Lk * D + h * dh, Lk, dh, Eigen::OuterStride<>(D));
      MapMat p(probs.data() + (b * H + h) * Lq * Lk, Lq, Lk);
      p.noalias() = s * (qb * kb.transpose());
      for (std::size_t i = 0; i < Lq; ++i) {
        for (std::size_t j = 0; j < Lk; ++j)
          if (j >= valid || (layout.causal && j > i)) p(i, j) = neg_inf;
        double m = p.row(i).maxCoeff();
        double total = 0.0;
        for (std::size_t j = 0; j < Lk; ++j) total += (p(i, j) = std::exp(p(i, j) - m));
        p.row(i) /= total;
      }
      Strided ob(out.data().data() + b * Lq * D + h * dh, Lq, dh, Eigen::OuterStride<>(D));
      ob.noalias() = p * vb;
    }
  }
  const std::size_t iq = q.id(), ik = k.id(), iv = v.id();
  const bool needs = q.requires_grad() || k.requires_grad() || v.requires_grad();
  return tape.record(
      "attention", std::move(out), needs,
      [iq, ik, iv, B, Lq, Lk, H, D, dh, s, probs = std::move(probs)](Tape& t, std::size_t self) {
        const Tensor& g = t.upstream(self);
        const Tensor& qv = t.value(iq);
        const Tensor& kv = t.value(ik);
        const Tensor& vv = t.value(iv);
        Tensor* gq = t.requires_grad(iq) ? &t.grad_slot(iq) : nullptr;
        Tensor* gk = t.requires_grad(ik) ? &t.grad_slot(ik) : nullptr;
        Tensor* gv = t.requires_grad(iv) ? &t.grad_slot(iv) : nullptr;
        RowMat dp(Lq, Lk), ds(Lq, Lk);
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t h = 0; h < H; ++h) {
            ConstMapMat p(probs.data() + (b * H + h) * Lq * Lk, Lq, Lk);
            ConstStrided gb(g.data().data() + b * Lq * D + h * dh, Lq, dh, Eigen::OuterStride<>(D));
            ConstStrided qb(qv.data().data() + b * Lq * D + h * dh, Lq, dh, Eigen::OuterStride<>(D));
            ConstStrided kb(kv.data().data() + b * Lk * D + h * dh, Lk, dh, Eigen::OuterStride<>(D));
            ConstStrided vb(vv.data().data() + b * Lk * D + h * dh, Lk, dh, Eigen::OuterStride<>(D));
            if (gv) {
              Strided out(gv->data().data() + b * Lk * D + h * dh, Lk, dh, Eigen::OuterStride<>(D));
              out.noalias() += p.transpose() * gb;
            }
            if (!gq && !gk) continue;
            dp.noalias() = gb * vb.transpose();
            for (std::size_t i = 0; i < Lq; ++i) {
              double dot = p.row(i).dot(dp.row(i));
              ds.row(i) = (p.row(i).array() * (dp.row(i).array() - dot)).matrix();
            }
            ds *= s;
            if (gq) {
              Strided out(gq->data().data() + b * Lq * D + h * dh, Lq, dh, Eigen::OuterStride<>(D));
              out.noalias() += ds * kb;
            }
            if (gk) {
              Strided out(gk->data().data() + b * Lk * D + h * dh, Lk, dh, Eigen::OuterStride<>(D));
              out.noalias() += ds.transpose() * qb;
            }
          }
        }
      });
}

}  // namespace mog::num
