#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <iterator>
#include <set>

#include "msinet/network.hpp"
#include "msinet/rng.hpp"
#include "support.hpp"

using namespace msinet;
using msinet::testing::TempDir;

namespace {

ModelConfig tiny(std::size_t blocks = 2, std::size_t width = 8) {
  ModelConfig cfg;
  cfg.n_blocks = blocks;
  cfg.width = width;
  return cfg;
}

StereoPair random_pair(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  return {rng.uniform_tensor<float>(s, 0, 1), rng.uniform_tensor<float>(s, 0, 1)};
}

std::vector<unsigned char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("model config defaults and validation") {
  const ModelConfig cfg;
  CHECK(cfg.n_blocks == 32);
  CHECK(cfg.width == 48);
  CHECK(cfg.scale == 4);
  CHECK(cfg.sinkhorn_iters == 10);
  CHECK(cfg.share_view_weights);
  CHECK_FALSE(cfg.single_interaction);
  CHECK(cfg.global_residual);
  CHECK(cfg.lska_branches == default_lska_branches());
  CHECK_NOTHROW(cfg.validate());

  ModelConfig bad = tiny();
  bad.width = 7;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny();
  bad.scale = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny();
  bad.n_blocks = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("config text round trip") {
  ModelConfig cfg = tiny(3, 12);
  cfg.scale = 2;
  cfg.lska_branches = {{3, 5, 2}, {7, 3, 4}};
  cfg.single_interaction = true;
  cfg.global_residual = false;
  CHECK(parse_model_config(format_model_config(cfg)) == cfg);

  const ModelConfig parsed = parse_model_config("# tiny\nn_blocks = 2\n  width=16  # comment\n\n");
  CHECK(parsed.n_blocks == 2);
  CHECK(parsed.width == 16);
  CHECK(parsed.scale == 4);

  CHECK_THROWS_AS(parse_model_config("n_blocks = 2\nlearning_rate = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_model_config("width = sixteen\n"), ConfigError);
  CHECK_THROWS_AS(parse_model_config("width 16\n"), ConfigError);
  CHECK_THROWS_AS(parse_model_config("lska_branches = 3:3\n"), ConfigError);
  CHECK_THROWS_AS(parse_model_config("share_view_weights = maybe\n"), ConfigError);
}

TEST_CASE("init_model is deterministic and follows the init rules") {
  const ModelConfig cfg = tiny();
  const WeightStore a = init_model(cfg, 7);
  CHECK(a.bit_equal(init_model(cfg, 7)));
  CHECK_FALSE(a.bit_equal(init_model(cfg, 8)));

  std::size_t gammas = 0;
  for (const auto& e : a.entries()) {
    const bool gamma = e.name.find(".gamma_") != std::string::npos;
    const bool scale = e.name.ends_with(".beta") || e.name.ends_with(".psi") || e.name.ends_with(".gain");
    const bool zero = gamma || e.name.ends_with(".bias") || e.name.ends_with(".shift");
    gammas += gamma;
    for (float v : e.value.data()) {
      if (zero) CHECK(v == 0.0f);
      if (scale) CHECK(v == 1.0f);
    }
    if (e.name.ends_with(".weight")) {
      const Shape s = e.value.shape();
      const double k = 1.0 / std::sqrt(double(s.c * s.h * s.w));
      for (float v : e.value.data()) CHECK(std::abs(v) <= k * (1 + 1e-6));
    }
  }
  CHECK(gammas == 2 * cfg.n_blocks);
}

TEST_CASE("parameter layout variants") {
  ModelConfig cfg = tiny(3);
  std::set<std::string> names;
  for (const auto& s : model_param_specs(cfg)) CHECK(names.insert(s.name).second);
  CHECK(names.count("shallow.weight") == 1);
  CHECK(names.count("block.2.mscam.expand.weight") == 1);
  CHECK(names.count("deam.0.gamma_l") == 1);
  CHECK(names.count("head.weight") == 1);

  cfg.single_interaction = true;
  std::size_t deams = 0;
  for (const auto& s : model_param_specs(cfg)) deams += s.name.ends_with(".gamma_l");
  CHECK(deams == 1);
  CHECK(has_interaction(cfg, 2));
  CHECK_FALSE(has_interaction(cfg, 0));

  cfg.share_view_weights = false;
  std::set<std::string> split;
  for (const auto& s : model_param_specs(cfg)) split.insert(s.name);
  CHECK(split.count("block.0.left.sffn.psi") == 1);
  CHECK(split.count("block.0.right.sffn.psi") == 1);
  CHECK(split.count("block.0.sffn.psi") == 0);
}

TEST_CASE("parameter count of the default configuration") {
  const WeightStore store = init_model(ModelConfig{}, 0);
  const double millions = double(store.param_count()) / 1e6;
  MESSAGE("default model parameters: " << store.param_count());
  CHECK(store.param_count() == 1097328);
  // order-of-magnitude band around 2.04M
  CHECK(millions > 0.5);
  CHECK(millions < 4.0);
}

TEST_CASE("bilinear_upsample examples") {
  Rng rng(1);
  const Tensor x = rng.uniform_tensor<float>(Shape{1, 3, 4, 5}, 0, 1);
  CHECK(bilinear_upsample(x, 1).bit_equal(x));
  const Tensor c = bilinear_upsample(Tensor(Shape{1, 2, 3, 3}, 0.25f), 4);
  CHECK(c.shape() == Shape{1, 2, 12, 12});
  for (float v : c.data()) CHECK(v == 0.25f);
  const Tensor col = bilinear_upsample(Tensor(Shape{1, 1, 2, 1}, std::vector<float>{0, 1}), 2);
  REQUIRE(col.shape() == Shape{1, 1, 4, 2});
  const float expect[] = {0.0f, 0.25f, 0.75f, 1.0f};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(col.at(0, 0, i, 0) == expect[i]);
    CHECK(col.at(0, 0, i, 1) == expect[i]);
  }
  CHECK_THROWS(bilinear_upsample(x, 0));
}

TEST_CASE("forward shape law") {
  const ModelConfig cfg = tiny();
  const WeightStore w = init_model(cfg, 2);
  for (const Shape s : {Shape{1, 3, 4, 6}, Shape{2, 3, 5, 3}}) {
    const StereoPair out = forward(random_pair(s, 3), w, cfg);
    CHECK(out.left.shape() == Shape{s.n, 3, 4 * s.h, 4 * s.w});
    CHECK(out.right.shape() == out.left.shape());
    CHECK(out.left.all_finite());
  }
  const StereoPair bad = random_pair(Shape{1, 4, 4, 4}, 4);
  CHECK_THROWS_AS(forward(bad, w, cfg), ShapeError);
}

TEST_CASE("zeroed head reduces the network to bilinear upsampling") {
  const ModelConfig cfg = tiny();
  WeightStore w = init_model(cfg, 5);
  for (auto& v : w.at("head.weight").data()) v = 0.0f;
  const StereoPair lr = random_pair(Shape{1, 3, 5, 7}, 6);
  const StereoPair out = forward(lr, w, cfg);
  CHECK(out.left.bit_equal(bilinear_upsample(lr.left, 4)));
  CHECK(out.right.bit_equal(bilinear_upsample(lr.right, 4)));
}

TEST_CASE("interaction stages are inert at initialization") {
  const ModelConfig cfg = tiny(3);
  const WeightStore w = init_model(cfg, 9);
  const StereoPair lr = random_pair(Shape{1, 3, 4, 8}, 10);
  ad::GradTape<float> tape;
  ParamBinding<float> binding(tape, w, false);
  const StereoVars<float> in{tape.constant(lr.left), tape.constant(lr.right)};
  const auto with = forward(binding, cfg, in, true);
  const auto without = forward(binding, cfg, in, false);
  CHECK(with.left.value().bit_equal(without.left.value()));
  CHECK(with.right.value().bit_equal(without.right.value()));
}

TEST_CASE("swapping the views swaps the outputs") {
  ModelConfig cfg = tiny(2);
  cfg.sinkhorn_iters = 200;
  WeightStore w = init_model(cfg, 11);
  Rng rng(12);
  for (std::size_t i = 0; i < cfg.n_blocks; ++i) {
    const std::string p = deam_prefix(i);
    w.at(p + ".u_r.weight") = w.at(p + ".u_l.weight");
    w.at(p + ".v_r.weight") = w.at(p + ".v_l.weight");
    w.at(p + ".gamma_l") = rng.uniform_tensor<float>(Shape{1, cfg.width, 1, 1}, 0.2, 0.8);
    w.at(p + ".gamma_r") = w.at(p + ".gamma_l");
  }
  const StereoPair lr = random_pair(Shape{1, 3, 3, 6}, 13);
  const StereoPair a = forward(lr, w, cfg);
  const StereoPair b = forward(StereoPair{lr.right, lr.left}, w, cfg);
  CHECK(msinet::testing::max_abs_diff(a.left, b.right) < 1e-4);
  CHECK(msinet::testing::max_abs_diff(a.right, b.left) < 1e-4);
}

TEST_CASE("forward is deterministic") {
  const ModelConfig cfg = tiny();
  WeightStore w = init_model(cfg, 14);
  Rng rng(15);
  for (std::size_t i = 0; i < cfg.n_blocks; ++i) w.at(deam_prefix(i) + ".gamma_l") = rng.normal_tensor<float>(Shape{1, cfg.width, 1, 1});
  const StereoPair lr = random_pair(Shape{1, 3, 4, 6}, 16);
  const StereoPair a = forward(lr, w, cfg);
  const StereoPair b = forward(lr, w, cfg);
  CHECK(a.left.bit_equal(b.left));
  CHECK(a.right.bit_equal(b.right));
}

TEST_CASE("global residual can be disabled") {
  ModelConfig cfg = tiny();
  cfg.global_residual = false;
  WeightStore w = init_model(cfg, 17);
  for (auto& v : w.at("head.weight").data()) v = 0.0f;
  const StereoPair out = forward(random_pair(Shape{1, 3, 3, 3}, 18), w, cfg);
  for (float v : out.left.data()) CHECK(v == 0.0f);
}

TEST_CASE("weights round trip bit-exactly") {
  TempDir dir("weights");
  ModelConfig cfg = tiny(2, 8);
  cfg.single_interaction = true;
  cfg.sinkhorn_iters = 7;
  WeightStore w = init_model(cfg, 19);
  Rng rng(20);
  w.at("deam.1.gamma_r") = rng.normal_tensor<float>(Shape{1, cfg.width, 1, 1});
  const auto path = dir / "model.msin";
  save_weights(w, cfg, path);
  const LoadedWeights loaded = load_weights(path);
  CHECK(loaded.weights.bit_equal(w));
  CHECK(loaded.config == cfg);
  std::vector<std::string> order;
  for (const auto& e : loaded.weights.entries()) order.push_back(e.name);
  std::size_t i = 0;
  for (const auto& e : w.entries()) CHECK(order[i++] == e.name);

  // header + config + count, then per tensor: u16 + name + u8 rank + 4 dims + payload
  std::size_t expected = 4 + 4 + 4 * 4 + cfg.lska_branches.size() * 12 + 4 + 4 + 4;
  for (const auto& e : w.entries()) expected += 2 + e.name.size() + 1 + 16 + 4 * e.value.numel();
  CHECK(std::filesystem::file_size(path) == expected);
  CHECK(serialize_weights(w, cfg) == read_bytes(path));
}

TEST_CASE("corrupted weight files are rejected") {
  TempDir dir("corrupt");
  const ModelConfig cfg = tiny(1, 4);
  const WeightStore w = init_model(cfg, 21);
  const auto good = serialize_weights(w, cfg);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_weights(bad_magic), FormatError);

  auto bad_version = good;
  bad_version[4] = 9;
  CHECK_THROWS_AS(deserialize_weights(bad_version), FormatError);

  for (std::size_t cut : {std::size_t(3), std::size_t(20), good.size() / 2, good.size() - 1}) {
    const std::vector<unsigned char> truncated(good.begin(), good.begin() + static_cast<long>(cut));
    CHECK_THROWS_AS(deserialize_weights(truncated), FormatError);
  }

  auto trailing = good;
  trailing.push_back(0);
  CHECK_THROWS_AS(deserialize_weights(trailing), FormatError);

  // rename the second tensor to the first one's name (same length)
  WeightStore dup;
  dup.insert("aa", Tensor(Shape{1, 1, 1, 2}));
  dup.insert("ab", Tensor(Shape{1, 1, 1, 2}));
  auto bytes = serialize_weights(dup, cfg);
  const std::string needle = "ab";
  auto it = std::search(bytes.begin(), bytes.end(), needle.begin(), needle.end());
  REQUIRE(it != bytes.end());
  *(it + 1) = 'a';
  CHECK_THROWS_AS(deserialize_weights(bytes), FormatError);

  const auto path = dir / "bad.msin";
  write_bytes(path, bad_magic);
  CHECK_THROWS_AS(load_weights(path), FormatError);
  CHECK_THROWS(load_weights(dir / "missing.msin"));
}

TEST_CASE("weight store rejects duplicate names") {
  WeightStore w;
  w.insert("x", Tensor(Shape{1, 1, 1, 1}));
  CHECK_THROWS(w.insert("x", Tensor(Shape{1, 1, 1, 1})));
  CHECK(w.param_count() == 1);
}
