#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "msinet/tape.hpp"

namespace msinet {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t param = 0;  // worst coordinate
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Builds a scalar loss on the given tape from one Var per parameter.
using LossBuilder = std::function<ad::Var<double>(ad::GradTape<double>&, std::span<const ad::Var<double>>)>;

/// Compares reverse-mode gradients with central differences in 64-bit:
/// max over coordinates of |analytic - numeric| / max(1, |analytic|, |numeric|).
GradCheckReport grad_check(const LossBuilder& f, std::span<const BasicTensor<double>> params, double eps = 1e-3);

}  // namespace msinet
