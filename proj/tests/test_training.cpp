#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "msinet/grad_check.hpp"
#include "msinet/rng.hpp"
#include "msinet/training.hpp"
#include "support.hpp"

using namespace msinet;
using namespace msinet::train;

namespace {

StereoPair random_pair(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  return {rng.uniform_tensor<float>(s, 0, 1), rng.uniform_tensor<float>(s, 0, 1)};
}

StereoPair offset(const StereoPair& p, float k) {
  StereoPair out = p;
  for (auto& v : out.left.data()) v += k;
  for (auto& v : out.right.data()) v += k;
  return out;
}

// Direct evaluation from the definition with an O(N^2) transform.
double loss_direct(const StereoPair& sr, const StereoPair& hr, double lambda) {
  double sq = 0, ab = 0;
  std::size_t count = 0;
  for (int view = 0; view < 2; ++view) {
    const Tensor& s = view == 0 ? sr.left : sr.right;
    const Tensor& h = view == 0 ? hr.left : hr.right;
    const Shape sh = s.shape();
    for (std::size_t i = 0; i < s.numel(); ++i) {
      const double d = double(s.data()[i]) - double(h.data()[i]);
      sq += d * d;
    }
    count += s.numel();
    for (std::size_t n = 0; n < sh.n; ++n)
      for (std::size_t c = 0; c < sh.c; ++c) {
        std::vector<double> diff(sh.h * sh.w);
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = double(s.plane(n, c)[i]) - double(h.plane(n, c)[i]);
        for (const auto& z : msinet::testing::dft_direct(diff.data(), sh.h, sh.w)) ab += std::abs(z.real()) + std::abs(z.imag());
      }
  }
  return sq / double(count) + lambda * ab / (2.0 * double(count));
}

ModelConfig tiny() {
  ModelConfig cfg;
  cfg.n_blocks = 1;
  cfg.width = 4;
  return cfg;
}

}  // namespace

TEST_CASE("shipped training constants") {
  CHECK(kDefaultFrequencyWeight == 0.01);
  CHECK(LossConfig{}.lambda == 0.01);
  const LionConfig lion;
  CHECK(lion.beta1 == 0.9);
  CHECK(lion.beta2 == 0.99);
  CHECK(lion.weight_decay == 0.0);
  const ScheduleConfig sched;
  CHECK(sched.lr_max == 3e-4);
  CHECK(sched.lr_min == 1e-8);
  const OverfitOptions opts;
  CHECK(opts.lr_max == 3e-4);
  CHECK(opts.lr_min == 1e-8);
  CHECK(ModelConfig{}.sinkhorn_iters == 10);
}

TEST_CASE("loss examples") {
  const StereoPair hr = random_pair(Shape{1, 3, 4, 6}, 1);
  CHECK(loss_total(hr, hr, LossConfig{}) == 0.0);

  const StereoPair shifted = offset(hr, 0.1f);
  CHECK(loss_total(shifted, hr, LossConfig{0.0}) == doctest::Approx(0.01).epsilon(1e-6));
  // a constant offset k puts k*H*W in the DC bin of every plane only
  const double freq_only = (loss_total(shifted, hr, LossConfig{1.0}) - loss_total(shifted, hr, LossConfig{0.0}));
  CHECK(freq_only == doctest::Approx(0.05).epsilon(1e-5));
  CHECK(loss_total(shifted, hr, LossConfig{}) == doctest::Approx(0.01 + 0.01 * 0.05).epsilon(1e-5));

  const StereoPair sr = random_pair(Shape{1, 3, 4, 6}, 2);
  StereoPair doubled = hr;
  for (std::size_t i = 0; i < hr.left.numel(); ++i) {
    doubled.left.data()[i] = hr.left.data()[i] + 2 * (sr.left.data()[i] - hr.left.data()[i]);
    doubled.right.data()[i] = hr.right.data()[i] + 2 * (sr.right.data()[i] - hr.right.data()[i]);
  }
  CHECK(loss_total(doubled, hr, LossConfig{0.0}) == doctest::Approx(4 * loss_total(sr, hr, LossConfig{0.0})).epsilon(1e-5));

  const StereoPair other = random_pair(Shape{1, 3, 4, 5}, 3);
  CHECK_THROWS_AS(loss_total(other, hr, LossConfig{}), ShapeError);
  CHECK_THROWS(loss_total(sr, hr, LossConfig{-1.0}));
}

TEST_CASE("loss matches a direct evaluation") {
  for (const double lambda : {0.0, 0.01, 1.0}) {
    const StereoPair hr = random_pair(Shape{2, 3, 5, 7}, 4);
    const StereoPair sr = random_pair(Shape{2, 3, 5, 7}, 5);
    const double expect = loss_direct(sr, hr, lambda);
    CHECK(loss_total(sr, hr, LossConfig{lambda}) == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("loss gradient matches finite differences") {
  Rng rng(6);
  const Shape s{1, 2, 4, 5};
  const BasicStereoPair<double> hr{rng.uniform_tensor<double>(s, 0, 1), rng.uniform_tensor<double>(s, 0, 1)};
  const std::vector<BasicTensor<double>> params{rng.uniform_tensor<double>(s, 0, 1), rng.uniform_tensor<double>(s, 0, 1)};
  const auto report = grad_check(
      [&](ad::GradTape<double>&, std::span<const ad::Var<double>> p) {
        return loss_total(StereoVars<double>{p[0], p[1]}, hr, LossConfig{0.5});
      },
      params, 1e-6);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("lion update examples") {
  WeightStore w;
  w.insert("p", Tensor(Shape{1, 1, 1, 3}, std::vector<float>{0.5f, 0.5f, 0.5f}));
  LionState state = make_lion_state(w);
  CHECK(state.momentum.size() == 1);

  const std::vector<Tensor> g0{Tensor(Shape{1, 1, 1, 3}, std::vector<float>{2.0f, 0.0f, -3.0f})};
  lion_step(w, g0, state, 0.1);
  CHECK(w.at("p").data()[0] == 0.5f - 0.1f);
  CHECK(w.at("p").data()[1] == 0.5f);  // sign(0) = 0
  CHECK(w.at("p").data()[2] == 0.5f + 0.1f);
  CHECK(state.momentum[0].data()[0] == doctest::Approx(0.02));
  CHECK(state.momentum[0].data()[2] == doctest::Approx(-0.03));

  // 0.9 * 0.02 + 0.1 * (-2) < 0 flips the direction
  const std::vector<Tensor> g1{Tensor(Shape{1, 1, 1, 3}, std::vector<float>{-2.0f, 0.0f, 0.1f})};
  const Tensor before = w.at("p");
  lion_step(w, g1, state, 0.05);
  CHECK(w.at("p").data()[0] == before.data()[0] + 0.05f);
  // 0.9 * (-0.03) + 0.1 * 0.1 < 0 keeps moving up
  CHECK(w.at("p").data()[2] == before.data()[2] + 0.05f);

  const std::vector<Tensor> wrong{Tensor(Shape{1, 1, 1, 2})};
  CHECK_THROWS(lion_step(w, wrong, state, 0.1));
  CHECK_THROWS(lion_step(w, std::vector<Tensor>{}, state, 0.1));
}

TEST_CASE("lion step size equals the learning rate") {
  Rng rng(7);
  WeightStore w;
  w.insert("a", rng.normal_tensor<float>(Shape{2, 3, 3, 3}));
  w.insert("b", rng.normal_tensor<float>(Shape{1, 5, 1, 1}));
  LionState state = make_lion_state(w);
  for (int step = 0; step < 5; ++step) {
    std::vector<Tensor> grads;
    for (const auto& e : w.entries()) grads.push_back(rng.normal_tensor<float>(e.value.shape()));
    std::vector<Tensor> before;
    for (const auto& e : w.entries()) before.push_back(e.value);
    const double lr = 1e-3;
    lion_step(w, grads, state, lr);
    std::size_t k = 0;
    for (const auto& e : w.entries()) {
      for (std::size_t i = 0; i < e.value.numel(); ++i) {
        CHECK(std::abs(double(e.value.data()[i]) - double(before[k].data()[i])) == doctest::Approx(lr).epsilon(1e-3));
      }
      ++k;
    }
  }
}

TEST_CASE("lion decoupled weight decay") {
  WeightStore w;
  w.insert("p", Tensor(Shape{1, 1, 1, 1}, 1.0f));
  LionState state = make_lion_state(w, LionConfig{0.9, 0.99, 0.1});
  lion_step(w, std::vector<Tensor>{Tensor(Shape{1, 1, 1, 1})}, state, 0.1);
  CHECK(w.at("p").data()[0] == doctest::Approx(0.99));
}

TEST_CASE("cosine schedule") {
  const ScheduleConfig cfg{3e-4, 1e-8, 100};
  CHECK(cosine_lr(0, cfg) == 3e-4);
  CHECK(cosine_lr(100, cfg) == 1e-8);
  CHECK(cosine_lr(250, cfg) == 1e-8);
  CHECK(cosine_lr(50, cfg) == doctest::Approx((3e-4 + 1e-8) / 2));
  const double quarter = 1e-8 + (3e-4 - 1e-8) * (1 + std::cos(std::numbers::pi / 4)) / 2;
  CHECK(cosine_lr(25, cfg) == doctest::Approx(quarter));
  for (std::size_t s = 1; s <= 100; ++s) CHECK(cosine_lr(s, cfg) <= cosine_lr(s - 1, cfg));
  CHECK(cosine_lr(0, ScheduleConfig{3e-4, 1e-8, 0}) == 1e-8);
  CHECK_THROWS(cosine_lr(0, ScheduleConfig{1e-8, 3e-4, 10}));
}

TEST_CASE("log line format") {
  const StepLog entry{12, 3e-4, 0.0123456789, 31.23456, 100.0};
  CHECK(format_log_line(entry) == "12\t3.000000e-04\t1.23456789e-02\t31.2346\t100.0000");
}

TEST_CASE("overfit with zero steps returns the initialization") {
  const ModelConfig cfg = tiny();
  const StereoPair lr = random_pair(Shape{1, 3, 3, 4}, 8);
  const StereoPair hr = random_pair(Shape{1, 3, 12, 16}, 9);
  OverfitOptions opts;
  opts.seed = 3;
  const OverfitResult res = overfit(lr, hr, cfg, opts);
  CHECK(res.weights.bit_equal(init_model(cfg, 3)));
  REQUIRE(res.log.size() == 1);
  CHECK(res.log[0].step == 0);
  CHECK(res.log[0].loss > 0.0);

  const StereoPair wrong = random_pair(Shape{1, 3, 6, 8}, 10);
  CHECK_THROWS_AS(overfit(lr, wrong, cfg, opts), ShapeError);
}

TEST_CASE("overfit is deterministic and reduces the loss") {
  const ModelConfig cfg = tiny();
  const StereoPair hr = random_pair(Shape{1, 3, 8, 16}, 11);
  StereoPair lr;
  lr.left = Tensor(Shape{1, 3, 2, 4});
  lr.right = Tensor(Shape{1, 3, 2, 4});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t x = 0; x < 4; ++x) {
        lr.left.at(0, c, y, x) = hr.left.at(0, c, 4 * y + 1, 4 * x + 1);
        lr.right.at(0, c, y, x) = hr.right.at(0, c, 4 * y + 1, 4 * x + 1);
      }
  OverfitOptions opts;
  opts.steps = 30;
  opts.seed = 4;
  opts.lr_max = 2e-3;
  std::size_t seen = 0;
  opts.on_step = [&](const StepLog&) { ++seen; };
  const OverfitResult a = overfit(lr, hr, cfg, opts);
  const OverfitResult b = overfit(lr, hr, cfg, opts);
  CHECK(seen == 2 * 31);
  REQUIRE(a.log.size() == 31);
  CHECK(a.weights.bit_equal(b.weights));
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].step == i);
    CHECK(a.log[i].loss == b.log[i].loss);
  }
  CHECK(a.log.front().lr == 2e-3);
  CHECK(a.log.back().lr == 1e-8);
  CHECK(a.log.back().loss < a.log.front().loss);
}

TEST_CASE("non-finite loss raises a numeric error") {
  const ModelConfig cfg = tiny();
  StereoPair lr = random_pair(Shape{1, 3, 2, 2}, 12);
  lr.left.data()[0] = std::numeric_limits<float>::quiet_NaN();
  const StereoPair hr = random_pair(Shape{1, 3, 8, 8}, 13);
  OverfitOptions opts;
  opts.steps = 3;
  try {
    overfit(lr, hr, cfg, opts);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.step() == 0);
  }
}
