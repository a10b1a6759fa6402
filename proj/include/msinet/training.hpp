#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "msinet/network.hpp"

namespace msinet::train {

inline constexpr double kDefaultFrequencyWeight = 0.01;

struct LossConfig {
  double lambda = kDefaultFrequencyWeight;
};

/// Spatial MSE over both views plus lambda times the mean absolute difference of
/// the unnormalized 2-D spectra, where the real and imaginary parts of every bin
/// are separate terms of the mean. Both views form one batch.
template <class T>
ad::Var<T> loss_total(StereoVars<T> sr, const BasicStereoPair<T>& hr, const LossConfig& cfg);

double loss_total(const StereoPair& sr, const StereoPair& hr, const LossConfig& cfg);

struct LionConfig {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double weight_decay = 0.0;
};

struct LionState {
  LionConfig config;
  std::vector<Tensor> momentum;  // aligned with the weight store entries
};

LionState make_lion_state(const WeightStore& weights, const LionConfig& cfg = {});

/// u = sign(b1*m + (1-b1)*g); w -= lr*(u + wd*w); m = b2*m + (1-b2)*g. sign(0) = 0.
void lion_step(WeightStore& weights, std::span<const Tensor> grads, LionState& state, double lr);

struct ScheduleConfig {
  double lr_max = 3e-4;
  double lr_min = 1e-8;
  std::size_t total_steps = 1;
};

/// lr_min + (lr_max - lr_min) * (1 + cos(pi * step / T)) / 2, clamped to lr_min past T.
double cosine_lr(std::size_t step, const ScheduleConfig& cfg);

struct StepLog {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double psnr_left = 0.0;
  double psnr_right = 0.0;
};

/// step<TAB>lr<TAB>loss<TAB>psnr_left<TAB>psnr_right
std::string format_log_line(const StepLog& entry);

class NumericError : public std::runtime_error {
 public:
  NumericError(std::size_t step, const std::string& what) : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct OverfitOptions {
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  LossConfig loss;
  LionConfig lion;
  double lr_max = 3e-4;
  double lr_min = 1e-8;
  std::function<void(const StepLog&)> on_step;
};

struct OverfitResult {
  WeightStore weights;
  /// One entry per optimizer step (loss before the update), then a final
  /// evaluation entry with step == steps.
  std::vector<StepLog> log;
};

/// Trains a freshly initialized model on one stereo pair.
OverfitResult overfit(const StereoPair& lr, const StereoPair& hr, const ModelConfig& cfg,
                      const OverfitOptions& options);

/// Same, starting from the given weights.
OverfitResult overfit(const StereoPair& lr, const StereoPair& hr, const ModelConfig& cfg, WeightStore weights,
                      const OverfitOptions& options);

}  // namespace msinet::train
