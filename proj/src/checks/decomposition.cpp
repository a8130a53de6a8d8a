#include "mog/checks/decomposition.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "mog/numerics/ops.hpp"

namespace mog::checks {

namespace {

DecompositionReport compare(std::string claim, const Tensor& lhs, const Tensor& rhs, double tolerance,
                            std::string instance) {
  DecompositionReport r;
  r.claim = std::move(claim);
  r.tolerance = tolerance;
  r.instance = std::move(instance);
  r.max_abs_error = num::max_abs_diff(lhs, rhs);
  const double scale = num::max_abs(lhs);
  r.max_rel_error = scale > 0.0 ? r.max_abs_error / scale : (r.max_abs_error > 0.0 ? INFINITY : 0.0);
  r.pass = r.max_rel_error <= tolerance;
  return r;
}

Tensor sum_of(const std::vector<Tensor>& parts, const char* what) {
  if (parts.empty()) throw std::invalid_argument(std::string(what) + ": part list is empty");
  Tensor total = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    num::require_same_shape(total, parts[i], what);
    total += parts[i];
  }
  return total;
}

Tensor scaled(Tensor t, double f) {
  for (double& x : t.data()) x *= f;
  return t;
}

Tensor column(const Tensor& v) { return v.reshaped({v.size(), 1}); }

Tensor apply(const Tensor& m, const Tensor& v) { return num::matmul(m, column(v)).reshaped({v.size()}); }

Tensor project(const Tensor& x, const Tensor& w) { return w.empty() ? x : num::matmul(x, w); }

Tensor scores(const Tensor& a, const Tensor& b, const Tensor& wq, const Tensor& wk) {
  return num::matmul(project(a, wq), num::transpose(project(b, wk)));
}

std::string shape_note(std::size_t seed, std::size_t n, std::size_t m, const Tensor& part) {
  return "seed=" + std::to_string(seed) + " n=" + std::to_string(n) + " m=" + std::to_string(m) +
         " shape=" + num::to_string(part.shape());
}

Tensor random_tensor(num::Shape shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& x : t.data()) x = u(rng);
  return t;
}

std::vector<Tensor> random_parts(std::size_t count, const num::Shape& shape, std::mt19937_64& rng) {
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_tensor(shape, rng));
  return out;
}

}  // namespace

nlohmann::json DecompositionReport::to_json() const {
  nlohmann::json j{{"claim", claim},
                   {"max_abs_error", max_abs_error},
                   {"max_rel_error", max_rel_error},
                   {"tolerance", tolerance},
                   {"pass", pass},
                   {"expect_pass", expect_pass},
                   {"instance", instance}};
  if (non_commutative) j["non_commutative"] = *non_commutative;
  return j;
}

DecompositionReport check_gate_linearity(const Tensor& w, const Tensor& u, const Tensor& b,
                                         const std::vector<Tensor>& s, const std::vector<Tensor>& t,
                                         double tolerance) {
  const Tensor ra = sum_of(s, "check_gate_linearity"), rb = sum_of(t, "check_gate_linearity");
  Tensor lhs = apply(w, ra);
  lhs += apply(u, rb);
  lhs += b;
  const double n = double(s.size()), m = double(t.size());
  Tensor rhs = Tensor::zeros_like(lhs);
  for (const Tensor& si : s) {
    for (const Tensor& tj : t) {
      rhs += apply(w, scaled(si, 1.0 / m));
      rhs += apply(u, scaled(tj, 1.0 / n));
    }
  }
  rhs += b;
  return compare("gate_linearity", lhs, rhs, tolerance, shape_note(0, s.size(), t.size(), ra));
}

DecompositionReport check_bilinear_expansion(const std::vector<Tensor>& a, const std::vector<Tensor>& b,
                                             double tolerance) {
  const Tensor ra = sum_of(a, "check_bilinear_expansion"), rb = sum_of(b, "check_bilinear_expansion");
  if (ra.cols() != rb.cols()) throw num::DimensionError("check_bilinear_expansion: part widths differ");
  const Tensor lhs = num::matmul(ra, num::transpose(rb));
  Tensor rhs = Tensor::zeros_like(lhs);
  for (const Tensor& si : a)
    for (const Tensor& tj : b) rhs += num::matmul(si, num::transpose(tj));
  return compare("bilinear_expansion", lhs, rhs, tolerance, shape_note(0, a.size(), b.size(), ra));
}

DecompositionReport check_four_part(const Tensor& prev, const Tensor& incr, const Tensor& wq, const Tensor& wk,
                                    double tolerance) {
  num::require_same_shape(prev, incr, "check_four_part");
  Tensor full = prev;
  full += incr;
  const Tensor lhs = scores(full, full, wq, wk);
  Tensor rhs = scores(prev, prev, wq, wk);
  rhs += scores(prev, incr, wq, wk);
  rhs += scores(incr, prev, wq, wk);
  rhs += scores(incr, incr, wq, wk);
  return compare("four_part", lhs, rhs, tolerance, "shape=" + num::to_string(prev.shape()));
}

DecompositionReport check_distribution_law(const RelationFn& f, const std::vector<Tensor>& a,
                                           const std::vector<Tensor>& b, const Tensor& weights, bool scale_parts,
                                           std::uint64_t seed, double tolerance) {
  const Tensor ra = sum_of(a, "check_distribution_law"), rb = sum_of(b, "check_distribution_law");
  const std::size_t n = a.size(), m = b.size();
  if (!weights.empty() && (weights.rows() != n || weights.cols() != m))
    throw num::DimensionError("check_distribution_law: weights must be [n x m]");
  const Tensor lhs = f(ra, rb);
  Tensor rhs = Tensor::zeros_like(lhs);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const Tensor ai = scale_parts ? scaled(a[i], 1.0 / double(m)) : a[i];
      const Tensor bj = scale_parts ? scaled(b[j], 1.0 / double(n)) : b[j];
      rhs += scaled(f(ai, bj), weights.empty() ? 1.0 : weights.at(i, j));
    }
  }
  DecompositionReport r = compare("distribution_law", lhs, rhs, tolerance, shape_note(seed, n, m, ra));
  std::mt19937_64 rng(seed);
  const Tensor x = random_tensor(ra.shape(), rng), y = random_tensor(rb.shape(), rng);
  const Tensor fxy = f(x, y), fyx = f(y, x);
  r.non_commutative = fxy.shape() != fyx.shape() || num::max_abs_diff(fxy, fyx) > tolerance * std::max(1.0, num::max_abs(fxy));
  return r;
}

std::vector<DecompositionReport> run_suite(const std::string& suite, std::size_t seeds) {
  const bool all = suite == "all";
  if (!all && suite != "gate" && suite != "bilinear" && suite != "four-part" && suite != "distlaw")
    throw std::invalid_argument("unknown check suite '" + suite + "' (expected all, gate, bilinear, four-part or distlaw)");
  std::vector<DecompositionReport> out;
  auto tag = [](DecompositionReport r, const std::string& claim, const std::string& instance) {
    r.claim = claim;
    r.instance = instance;
    return r;
  };
  const std::size_t d = 8;

  if (all || suite == "gate") {
    for (std::size_t s = 0; s < seeds; ++s) {
      std::mt19937_64 rng(s);
      const std::size_t n = 1 + rng() % 4, m = 1 + rng() % 4;
      Tensor w = random_tensor({d, d}, rng), u = random_tensor({d, d}, rng), b = random_tensor({d}, rng);
      auto sp = random_parts(n, {d}, rng), tp = random_parts(m, {d}, rng);
      out.push_back(tag(check_gate_linearity(w, u, b, sp, tp), "gate", shape_note(s, n, m, sp[0])));
    }
    std::mt19937_64 rng(seeds);
    Tensor w = random_tensor({d, d}, rng), u = random_tensor({d, d}, rng);
    out.push_back(tag(check_gate_linearity(w, u, Tensor({d}), {Tensor({d}), Tensor({d})}, {Tensor({d})}), "gate",
                      "zero parts, zero bias"));
    auto one_s = random_parts(1, {d}, rng), one_t = random_parts(1, {d}, rng);
    out.push_back(tag(check_gate_linearity(w, u, random_tensor({d}, rng), one_s, one_t), "gate", "n=m=1"));
  }

  if (all || suite == "bilinear") {
    for (std::size_t s = 0; s < seeds; ++s) {
      std::mt19937_64 rng(1000 + s);
      const std::size_t n = 1 + rng() % 4, m = 1 + rng() % 4, la = 1 + rng() % 6, lb = 1 + rng() % 6;
      auto ap = random_parts(n, {la, d}, rng), bp = random_parts(m, {lb, d}, rng);
      out.push_back(tag(check_bilinear_expansion(ap, bp), "bilinear", shape_note(s, n, m, ap[0])));
    }
    std::mt19937_64 rng(1000 + seeds);
    out.push_back(tag(check_bilinear_expansion({Tensor({3, d}), random_tensor({3, d}, rng)}, {Tensor({2, d})}),
                      "bilinear", "one side zero"));
  }

  if (all || suite == "four-part") {
    const std::size_t len = 5, width = 16;
    for (std::size_t s = 0; s < seeds; ++s) {
      std::mt19937_64 rng(2000 + s);
      Tensor prev = random_tensor({len, width}, rng), incr = random_tensor({len, width}, rng);
      Tensor wq = random_tensor({width, width}, rng), wk = random_tensor({width, width}, rng);
      out.push_back(tag(check_four_part(prev, incr, wq, wk), "four-part", "seed=" + std::to_string(s) + " L=5 d=16"));
      // degenerate splits of the same instance
      if (s % 10 == 0) {
        out.push_back(tag(check_four_part(Tensor({len, width}), incr, wq, wk), "four-part", "prev=0 seed=" + std::to_string(s)));
        out.push_back(tag(check_four_part(prev, Tensor({len, width}), wq, wk), "four-part", "incr=0 seed=" + std::to_string(s)));
      }
    }
  }

  if (all || suite == "distlaw") {
    for (std::size_t s = 0; s < seeds; ++s) {
      std::mt19937_64 rng(3000 + s);
      const std::size_t n = 2 + rng() % 3, m = 2 + rng() % 3;
      Tensor w = random_tensor({d, d}, rng), u = random_tensor({d, d}, rng);
      auto ap = random_parts(n, {d}, rng), bp = random_parts(m, {d}, rng);
      RelationFn gate = [w, u](const Tensor& x, const Tensor& y) {
        Tensor r = apply(w, x);
        r += apply(u, y);
        return r;
      };
      Tensor wq = random_tensor({d, d}, rng), wk = random_tensor({d, d}, rng);
      RelationFn dot = [wq, wk](const Tensor& x, const Tensor& y) {
        return num::matmul(num::matmul(x.reshaped({1, x.size()}), wq), apply(num::transpose(wk), y).reshaped({x.size(), 1}));
      };
      RelationFn squash = [](const Tensor& x, const Tensor& y) {
        Tensor r = x;
        r += y;
        for (double& v : r.data()) v = std::tanh(v);
        return r;
      };
      const std::string note = shape_note(s, n, m, ap[0]);
      out.push_back(tag(check_distribution_law(gate, ap, bp, {}, true, s), "distlaw:gate", note));
      out.push_back(tag(check_distribution_law(dot, ap, bp, {}, false, s), "distlaw:dot", note));
      DecompositionReport nl = tag(check_distribution_law(squash, ap, bp, {}, false, s), "distlaw:tanh_sum", note);
      nl.expect_pass = false;
      out.push_back(nl);
    }
  }
  return out;
}

}  // namespace mog::checks
