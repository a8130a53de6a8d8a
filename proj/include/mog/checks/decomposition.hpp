#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mog/numerics/tensor.hpp"

namespace mog::checks {

using num::Tensor;

inline constexpr double kIdentityTolerance = 1e-10;

/// Outcome of comparing the two sides of an identity. Errors are taken over
/// the whole result: relative = max|lhs - rhs| / max|lhs| (0 when both vanish).
struct DecompositionReport {
  std::string claim;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  double tolerance = kIdentityTolerance;
  bool pass = false;
  std::string instance;
  /// Distribution-law runs only: whether f(a,b) != f(b,a) on a random pair.
  std::optional<bool> non_commutative;
  /// Whether this instance is meant to satisfy the identity (witness suites
  /// include known failures).
  bool expect_pass = true;

  nlohmann::json to_json() const;
};

/// W r_a + U r_b + b against sum_ij (W s_i / m + U t_j / n) + b, where
/// r_a = sum of the n parts s_i and r_b = sum of the m parts t_j.
DecompositionReport check_gate_linearity(const Tensor& w, const Tensor& u, const Tensor& b,
                                         const std::vector<Tensor>& s, const std::vector<Tensor>& t,
                                         double tolerance = kIdentityTolerance);

/// (sum s_i)(sum t_j)^T against sum_ij s_i t_j^T. Parts are [rows x width].
DecompositionReport check_bilinear_expansion(const std::vector<Tensor>& a, const std::vector<Tensor>& b,
                                             double tolerance = kIdentityTolerance);

/// Pre-softmax scores of full = prev + incr under shared projections against the
/// four blocks prev.prev + prev.incr + incr.prev + incr.incr. Empty projection
/// tensors mean identity.
DecompositionReport check_four_part(const Tensor& prev, const Tensor& incr, const Tensor& wq = {},
                                    const Tensor& wk = {}, double tolerance = kIdentityTolerance);

using RelationFn = std::function<Tensor(const Tensor&, const Tensor&)>;

/// f(sum a_i, sum b_j) against sum_ij w_ij f(a_i', b_j'), where a_i' = a_i / m and
/// b_j' = b_j / n when `scale_parts` is set (the gate form) and the raw parts
/// otherwise. `weights` is [n x m]; empty means all ones.
DecompositionReport check_distribution_law(const RelationFn& f, const std::vector<Tensor>& a,
                                           const std::vector<Tensor>& b, const Tensor& weights = {},
                                           bool scale_parts = false, std::uint64_t seed = 0,
                                           double tolerance = kIdentityTolerance);

/// Random instances for one suite: "gate", "bilinear", "four-part", "distlaw" or "all".
/// Each seed yields one random instance; degenerate instances are appended.
std::vector<DecompositionReport> run_suite(const std::string& suite, std::size_t seeds);

}  // namespace mog::checks
