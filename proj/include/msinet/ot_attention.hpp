#pragma once

// Dual-view epipolar attention. Cross-view scores along each rectified row are
// normalized into a transport plan by entropic optimal transport (log-domain
// Sinkhorn with uniform marginals) instead of a row softmax.
//
// Cost volumes and plans are stored as rank-4 tensors of shape (n, H, W, W):
// entry (b, h, i, j) relates left column i to right column j on row h.

#include <cstddef>
#include <string>
#include <vector>

#include "msinet/attention.hpp"
#include "msinet/autodiff.hpp"
#include "msinet/weights.hpp"

namespace msinet::ot {

inline constexpr std::size_t kDefaultSinkhornIters = 10;

struct SinkhornConfig {
  std::size_t iters = kDefaultSinkhornIters;
};

/// M[b, h] = U_L[b, h] * U_R[b, h]^T / sqrt(C), with U[b, h] the W x C matrix of row h.
template <class T>
BasicTensor<T> cost_matrix(const BasicTensor<T>& u_l, const BasicTensor<T>& u_r);

/// Log-domain Sinkhorn on every W x W slice. Duals start at zero; each iteration
/// updates the column duals, then the row duals. The returned coupling is scaled
/// by W so rows sum to 1 (exactly, up to rounding) and columns converge to 1.
template <class T>
BasicTensor<T> sinkhorn(const BasicTensor<T>& m, const SinkhornConfig& cfg);

struct MarginalViolation {
  double max_row = 0.0;
  double max_col = 0.0;
};

/// Largest |row sum - 1| and |column sum - 1| over every slice of a plan.
template <class T>
MarginalViolation marginal_violation(const BasicTensor<T>& plan);

template <class T>
ad::Var<T> cost_matrix(ad::Var<T> u_l, ad::Var<T> u_r);

/// Differentiates through all unrolled iterations.
template <class T>
ad::Var<T> sinkhorn(ad::Var<T> m, const SinkhornConfig& cfg);

template <class T>
struct DeamParams {
  ad::Var<T> norm_l_gain;
  ad::Var<T> norm_l_shift;
  ad::Var<T> norm_r_gain;
  ad::Var<T> norm_r_shift;
  blocks::ConvParams<T> u_l;
  blocks::ConvParams<T> u_r;
  blocks::ConvParams<T> v_l;
  blocks::ConvParams<T> v_r;
  ad::Var<T> gamma_l;
  ad::Var<T> gamma_r;
};

/// gamma_l / gamma_r are zero-initialized.
void append_deam_specs(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t width);

template <class T>
DeamParams<T> bind_deam(const ParamBinding<T>& params, const std::string& prefix);

template <class T>
struct FusedViews {
  ad::Var<T> left;
  ad::Var<T> right;
};

/// F_L = gamma_l * (T V_R) + X_L and F_R = gamma_r * (T^T V_L) + X_R, row by row.
template <class T>
FusedViews<T> fuse_views(ad::Var<T> x_l, ad::Var<T> x_r, ad::Var<T> v_l, ad::Var<T> v_r, ad::Var<T> plan,
                         ad::Var<T> gamma_l, ad::Var<T> gamma_r);

template <class T>
struct DeamOutput {
  ad::Var<T> f_l;
  ad::Var<T> f_r;
  ad::Var<T> plan;
};

template <class T>
DeamOutput<T> deam_forward(ad::Var<T> x_l, ad::Var<T> x_r, const DeamParams<T>& p, const SinkhornConfig& cfg);

}  // namespace msinet::ot
