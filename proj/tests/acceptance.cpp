// Desk-scale acceptance run: one PASS/FAIL line per criterion.
// Usage: acceptance [--skip-overfit]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>

#include "msinet/image.hpp"
#include "msinet/metrics.hpp"
#include "msinet/network.hpp"
#include "msinet/ot_attention.hpp"
#include "msinet/rng.hpp"
#include "msinet/training.hpp"
#include "msinet/verify.hpp"
#include "support.hpp"

using namespace msinet;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. rows within 5e-6 after 10 iterations, columns within 1e-5 after 200
Outcome sinkhorn_marginals() {
  Rng rng(101);
  double row10 = 0, col200 = 0;
  for (int v = 0; v < 100; ++v) {
    const Tensor m = rng.normal_tensor<float>(Shape{1, 2, 32, 32});
    row10 = std::max(row10, ot::marginal_violation(ot::sinkhorn(m, ot::SinkhornConfig{})).max_row);
    col200 = std::max(col200, ot::marginal_violation(ot::sinkhorn(m, ot::SinkhornConfig{200})).max_col);
  }
  return {row10 < 5e-6 && col200 < 1e-5, fmt("max row dev @10 = %.2e (< 5e-6), max col dev @200 = %.2e (< 1e-5)", row10, col200)};
}

// 2. 10 iterations vs the 1000-iteration oracle, and converged agreement
Outcome sinkhorn_oracle() {
  Rng rng(202);
  double gap10 = 0, gap_conv = 0;
  for (int t = 0; t < 50; ++t) {
    const Tensor m = rng.normal_tensor<float>(Shape{1, 1, 8, 8});
    const auto fixed = verify::sinkhorn_oracle(m.cast<double>(), 0.0, 1000);
    gap10 = std::max(gap10, verify::max_abs_gap(ot::sinkhorn(m, ot::SinkhornConfig{}).cast<double>(), fixed.plan));
    const auto conv = verify::sinkhorn_oracle(m.cast<double>(), 1e-12);
    if (!conv.converged) return {false, "oracle failed to converge"};
    gap_conv = std::max(gap_conv, verify::max_abs_gap(ot::sinkhorn(m, ot::SinkhornConfig{1000}).cast<double>(), conv.plan));
  }
  return {gap10 < 0.05 && gap_conv < 1e-6, fmt("gap @10 = %.3e (< 0.05), converged gap = %.2e (< 1e-6)", gap10, gap_conv)};
}

// 3. zero fusion scales leave both views untouched
Outcome deam_identity() {
  const std::size_t c = 16;
  std::vector<ParamSpec> specs;
  ot::append_deam_specs(specs, "d", c);
  const WeightStore store = init_params(specs, 303);
  ad::GradTape<float> tape;
  ParamBinding<float> binding(tape, store, false);
  const auto p = ot::bind_deam(binding, "d");
  Rng rng(304);
  bool ok = true;
  for (int t = 0; t < 10; ++t) {
    const auto xl = tape.constant(rng.normal_tensor<float>(Shape{2, c, 6, 20}, 3.0));
    const auto xr = tape.constant(rng.normal_tensor<float>(Shape{2, c, 6, 20}, 3.0));
    const auto out = ot::deam_forward(xl, xr, p, ot::SinkhornConfig{});
    ok = ok && out.f_l.value().bit_equal(xl.value()) && out.f_r.value().bit_equal(xr.value());
  }
  return {ok, ok ? "bit-identical on 10 random feature pairs" : "output differs from input"};
}

// 4. finite-difference suite
Outcome gradient_suite() {
  const auto start = std::chrono::steady_clock::now();
  double worst_prim = 0, end_to_end = 0;
  bool ok = true;
  std::string failed;
  for (const auto& c : verify::gradcheck_suite(404)) {
    ok = ok && c.passed();
    if (!c.passed()) failed += " " + c.name;
    if (c.tolerance == verify::kEndToEndTolerance) end_to_end = std::max(end_to_end, c.report.max_rel_error);
    else worst_prim = std::max(worst_prim, c.report.max_rel_error);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ok = ok && secs < 120.0;
  return {ok, fmt("worst primitive %.2e (< 1e-4), end-to-end %.2e (< 1e-3), %.0f s (< 120 s)%s", worst_prim,
                  end_to_end, secs, failed.empty() ? "" : (" failed:" + failed).c_str())};
}

// 5. tiny model overfits one pair
Outcome overfit_convergence() {
  ModelConfig cfg;
  cfg.n_blocks = 2;
  cfg.width = 16;
  cfg.scale = 4;
  const StereoPair hr = msinet::testing::synthetic_pair(96, 288);
  const StereoPair lr{bicubic_downsample(hr.left, 4), bicubic_downsample(hr.right, 4)};
  const double base = 0.5 * (metrics::psnr(bilinear_upsample(lr.left, 4), hr.left) +
                             metrics::psnr(bilinear_upsample(lr.right, 4), hr.right));
  train::OverfitOptions opts;
  opts.steps = 2000;
  opts.seed = 505;
  const auto start = std::chrono::steady_clock::now();
  const auto res = train::overfit(lr, hr, cfg, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto& first = res.log.front();
  const auto& last = res.log.back();
  const double ratio = last.loss / first.loss;
  const double gain = 0.5 * (last.psnr_left + last.psnr_right) - base;
  return {ratio <= 0.1 && gain >= 10.0,
          fmt("loss %.3e -> %.3e (ratio %.4f <= 0.1), PSNR %.2f vs bilinear %.2f (gain %.2f dB >= 10), %.0f s",
              first.loss, last.loss, ratio, base + gain, base, gain, secs)};
}

// 6. shipped defaults
Outcome shipped_constants() {
  const bool ok = train::LossConfig{}.lambda == 0.01 && ModelConfig{}.sinkhorn_iters == 10 &&
                  ot::SinkhornConfig{}.iters == 10 && train::OverfitOptions{}.lr_max == 3e-4 &&
                  train::OverfitOptions{}.lr_min == 1e-8 && train::ScheduleConfig{}.lr_max == 3e-4 &&
                  train::ScheduleConfig{}.lr_min == 1e-8 && train::LionConfig{}.weight_decay == 0.0;
  return {ok, "lambda 0.01, sinkhorn iterations 10, lr 3e-4 -> 1e-8, weight decay 0"};
}

// 7. shape and identity laws
Outcome shape_identity() {
  ModelConfig cfg;
  cfg.n_blocks = 2;
  cfg.width = 8;
  WeightStore w = init_model(cfg, 707);
  Rng rng(708);
  const StereoPair lr{rng.uniform_tensor<float>(Shape{1, 3, 5, 9}, 0, 1), rng.uniform_tensor<float>(Shape{1, 3, 5, 9}, 0, 1)};
  const StereoPair out = forward(lr, w, cfg);
  const bool shape = out.left.shape() == Shape{1, 3, 20, 36} && out.right.shape() == Shape{1, 3, 20, 36};

  for (auto& v : w.at("head.weight").data()) v = 0.0f;
  const StereoPair zeroed = forward(lr, w, cfg);
  const bool bilinear = zeroed.left.bit_equal(bilinear_upsample(lr.left, 4)) &&
                        zeroed.right.bit_equal(bilinear_upsample(lr.right, 4));

  std::vector<ParamSpec> specs;
  blocks::append_mscab_specs(specs, "b", 8, default_lska_branches());
  WeightStore block = init_params(specs, 709);
  for (auto& v : block.at("b.mscam.beta").data()) v = 0.0f;
  for (auto& v : block.at("b.sffn.psi").data()) v = 0.0f;
  ad::GradTape<float> tape;
  ParamBinding<float> binding(tape, block, false);
  const auto params = blocks::bind_mscab(binding, "b", 8, default_lska_branches());
  const auto x = tape.constant(rng.normal_tensor<float>(Shape{2, 8, 7, 11}));
  const bool mscab = blocks::mscab_forward(x, params).value().bit_equal(x.value());
  return {shape && bilinear && mscab, fmt("output (3, 4H, 4W): %s, zero head == bilinear: %s, zero-scale MSCAB == identity: %s",
                                          shape ? "yes" : "no", bilinear ? "yes" : "no", mscab ? "yes" : "no")};
}

// 8. weight file round trip and header rejection
Outcome serialization() {
  ModelConfig cfg;
  cfg.n_blocks = 2;
  cfg.width = 8;
  WeightStore w = init_model(cfg, 808);
  Rng rng(809);
  for (auto& e : w.entries()) e.value = rng.normal_tensor<float>(e.value.shape());
  msinet::testing::TempDir dir("acceptance");
  save_weights(w, cfg, dir / "w.msin");
  const LoadedWeights back = load_weights(dir / "w.msin");
  const bool round = back.weights.bit_equal(w) && back.config == cfg;

  const auto good = serialize_weights(w, cfg);
  int rejected = 0, tried = 0;
  auto expect_reject = [&](std::vector<unsigned char> bytes) {
    ++tried;
    try {
      deserialize_weights(bytes);
    } catch (const FormatError&) {
      ++rejected;
    }
  };
  for (std::size_t i = 0; i < 8; ++i) {
    auto b = good;
    b[i] ^= 0x5A;
    expect_reject(b);
  }
  expect_reject({good.begin(), good.begin() + 6});
  expect_reject({good.begin(), good.end() - 1});
  return {round && rejected == tried, fmt("round trip bit-exact: %s, corrupted headers rejected %d/%d",
                                          round ? "yes" : "no", rejected, tried)};
}

// 9. metric closed forms and a second SSIM implementation
Outcome metric_checks() {
  Rng rng(909);
  const Tensor a = rng.uniform_tensor<float>(Shape{1, 3, 32, 48}, 0.1, 0.8);
  Tensor b = a;
  for (auto& v : b.data()) v += 0.1f;
  const std::string psnr = fmt("%.2f", metrics::psnr(a, b));
  const double self = metrics::ssim(a, a);
  Tensor noisy = a;
  for (auto& v : noisy.data()) v = std::clamp(v + static_cast<float>(0.05 * rng.normal()), 0.0f, 1.0f);
  const double gap = std::abs(metrics::ssim(a, noisy) - msinet::testing::ssim_direct(a, noisy));
  return {psnr == "20.00" && self == 1.0 && gap < 1e-6,
          fmt("PSNR(0.1 error) = %s dB, SSIM(x, x) = %.17g, SSIM gap vs direct = %.2e (< 1e-6)", psnr.c_str(), self, gap)};
}

}  // namespace

int main(int argc, char** argv) {
  bool skip_overfit = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--skip-overfit") == 0) {
      skip_overfit = true;
    } else {
      std::fprintf(stderr, "usage: %s [--skip-overfit]\n", argv[0]);
      return 2;
    }
  }
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"sinkhorn marginals", sinkhorn_marginals},
      {"sinkhorn oracle agreement", sinkhorn_oracle},
      {"deam identity at init", deam_identity},
      {"gradient suite", gradient_suite},
      {"overfit convergence", overfit_convergence},
      {"shipped constants", shipped_constants},
      {"shape and identity laws", shape_identity},
      {"serialization", serialization},
      {"metrics", metric_checks},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    if (index == 5 && skip_overfit) {
      std::printf("[%d] SKIP %s\n", index, name);
      continue;
    }
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%d] %s %s: %s\n", index, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
