#pragma once

// Self-checks shipped with the library: the finite-difference gradient suite and
// a plain Sinkhorn-Knopp reference used to cross-check the log-domain solver.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "msinet/grad_check.hpp"
#include "msinet/ot_attention.hpp"

namespace msinet::verify {

inline constexpr double kPrimitiveTolerance = 1e-4;
inline constexpr double kEndToEndTolerance = 1e-3;

struct GradCheckCase {
  std::string name;
  GradCheckReport report;
  double tolerance = kPrimitiveTolerance;

  bool passed() const { return report.max_rel_error < tolerance; }
};

/// Primitives and attention blocks, then a tiny end-to-end model (one block,
/// width 8, 8x16 input, x4, full training loss). `on_case` sees each result as
/// soon as it is available.
std::vector<GradCheckCase> gradcheck_suite(std::uint64_t seed,
                                           const std::function<void(const GradCheckCase&)>& on_case = {});

struct OracleResult {
  BasicTensor<double> plan;
  std::size_t iterations = 0;
  ot::MarginalViolation violation;
  bool converged = false;
};

/// Linear-domain Sinkhorn-Knopp on exp(M) with unit row and column sums. Stops
/// once every column sum is within `tol` of 1 or after `max_iters` sweeps.
OracleResult sinkhorn_oracle(const BasicTensor<double>& m, double tol = 1e-9, std::size_t max_iters = 10000);

/// Largest entrywise |a - b|.
double max_abs_gap(const BasicTensor<double>& a, const BasicTensor<double>& b);

}  // namespace msinet::verify
