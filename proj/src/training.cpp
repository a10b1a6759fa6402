#include "msinet/training.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "msinet/dft.hpp"
#include "msinet/metrics.hpp"

namespace msinet::train {

template <class T>
ad::Var<T> loss_total(StereoVars<T> sr, const BasicStereoPair<T>& hr, const LossConfig& cfg) {
  if (cfg.lambda < 0.0) throw std::invalid_argument("loss_total: lambda must be >= 0");
  require_same_shape(sr.left.shape(), hr.left.shape(), "loss_total left view");
  require_same_shape(sr.right.shape(), hr.right.shape(), "loss_total right view");
  auto& tape = sr.left.tape();
  const T count = static_cast<T>(hr.left.numel() + hr.right.numel());

  auto spatial = [&](ad::Var<T> s, const BasicTensor<T>& h) { return ad::sum(ad::square(ad::sub(s, tape.constant(h)))); };
  auto mse = ad::scale(ad::add(spatial(sr.left, hr.left), spatial(sr.right, hr.right)), T(1) / count);
  if (cfg.lambda == 0.0) return mse;

  auto spectral = [&](ad::Var<T> s, const BasicTensor<T>& h) {
    const auto ref = msinet::dft2(h);
    const auto out = ad::dft2(s);
    return ad::add(ad::sum(ad::abs(ad::sub(out.real, tape.constant(ref.real)))),
                   ad::sum(ad::abs(ad::sub(out.imag, tape.constant(ref.imag)))));
  };
  auto freq = ad::scale(ad::add(spectral(sr.left, hr.left), spectral(sr.right, hr.right)), T(1) / (T(2) * count));
  return ad::add(mse, ad::scale(freq, static_cast<T>(cfg.lambda)));
}

double loss_total(const StereoPair& sr, const StereoPair& hr, const LossConfig& cfg) {
  ad::GradTape<double> tape;
  StereoVars<double> vars{tape.constant(sr.left.cast<double>()), tape.constant(sr.right.cast<double>())};
  const BasicStereoPair<double> ref{hr.left.cast<double>(), hr.right.cast<double>()};
  return loss_total(vars, ref, cfg).value()[0];
}

LionState make_lion_state(const WeightStore& weights, const LionConfig& cfg) {
  LionState state{cfg, {}};
  state.momentum.reserve(weights.size());
  for (const auto& e : weights.entries()) state.momentum.emplace_back(e.value.shape());
  return state;
}

void lion_step(WeightStore& weights, std::span<const Tensor> grads, LionState& state, double lr) {
  auto entries = weights.entries();
  if (grads.size() != entries.size() || state.momentum.size() != entries.size()) {
    throw std::invalid_argument("lion_step: gradients/momentum not aligned with parameters");
  }
  const float b1 = static_cast<float>(state.config.beta1);
  const float b2 = static_cast<float>(state.config.beta2);
  const float wd = static_cast<float>(state.config.weight_decay);
  const float step = static_cast<float>(lr);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    Tensor& w = entries[k].value;
    Tensor& m = state.momentum[k];
    const Tensor& g = grads[k];
    require_same_shape(g.shape(), w.shape(), ("lion_step gradient for " + entries[k].name).c_str());
    for (std::size_t i = 0; i < w.numel(); ++i) {
      const float c = b1 * m[i] + (1.0f - b1) * g[i];
      const float u = c > 0.0f ? 1.0f : (c < 0.0f ? -1.0f : 0.0f);
      if (wd != 0.0f) {
        w[i] -= step * (u + wd * w[i]);
      } else {
        w[i] -= step * u;
      }
      m[i] = b2 * m[i] + (1.0f - b2) * g[i];
    }
  }
}

double cosine_lr(std::size_t step, const ScheduleConfig& cfg) {
  if (cfg.lr_min > cfg.lr_max) throw std::invalid_argument("cosine_lr: lr_min exceeds lr_max");
  if (cfg.total_steps == 0 || step >= cfg.total_steps) return cfg.lr_min;
  if (step == 0) return cfg.lr_max;
  const double phase = std::numbers::pi * static_cast<double>(step) / static_cast<double>(cfg.total_steps);
  return cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) * (1.0 + std::cos(phase));
}

std::string format_log_line(const StepLog& e) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu\t%.6e\t%.8e\t%.4f\t%.4f", e.step, e.lr, e.loss, e.psnr_left, e.psnr_right);
  return buf;
}

namespace {

StepLog evaluate_step(const ad::Var<float>& loss, const StereoVars<float>& sr, const StereoPair& hr,
                      std::size_t step, double lr) {
  StepLog entry;
  entry.step = step;
  entry.lr = lr;
  entry.loss = loss.value()[0];
  entry.psnr_left = metrics::psnr(sr.left.value(), hr.left);
  entry.psnr_right = metrics::psnr(sr.right.value(), hr.right);
  if (!std::isfinite(entry.loss)) {
    throw NumericError(step, "non-finite loss at step " + std::to_string(step));
  }
  return entry;
}

}  // namespace

OverfitResult overfit(const StereoPair& lr, const StereoPair& hr, const ModelConfig& cfg,
                      const OverfitOptions& options) {
  return overfit(lr, hr, cfg, init_model(cfg, options.seed), options);
}

OverfitResult overfit(const StereoPair& lr, const StereoPair& hr, const ModelConfig& cfg, WeightStore weights,
                      const OverfitOptions& options) {
  cfg.validate();
  const Shape& ls = lr.left.shape();
  const Shape expected{ls.n, ls.c, ls.h * cfg.scale, ls.w * cfg.scale};
  require_same_shape(hr.left.shape(), expected, "overfit: HR left view vs scale x LR");
  require_same_shape(hr.right.shape(), expected, "overfit: HR right view vs scale x LR");

  const ScheduleConfig schedule{options.lr_max, options.lr_min, options.steps};
  LionState state = make_lion_state(weights, options.lion);
  OverfitResult result;

  for (std::size_t step = 0; step <= options.steps; ++step) {
    const bool training = step < options.steps;
    ad::GradTape<float> tape;
    ParamBinding<float> params(tape, weights, training);
    auto sr = forward(params, cfg, StereoVars<float>{tape.constant(lr.left), tape.constant(lr.right)});
    auto loss = loss_total(sr, hr, options.loss);
    const double rate = cosine_lr(step, schedule);
    const StepLog entry = evaluate_step(loss, sr, hr, step, rate);
    result.log.push_back(entry);
    if (options.on_step) options.on_step(entry);
    if (!training) break;
    const auto grads = tape.backward(loss);
    lion_step(weights, grads, state, rate);
  }
  result.weights = std::move(weights);
  return result;
}

template ad::Var<float> loss_total(StereoVars<float>, const BasicStereoPair<float>&, const LossConfig&);
template ad::Var<double> loss_total(StereoVars<double>, const BasicStereoPair<double>&, const LossConfig&);

}  // namespace msinet::train
