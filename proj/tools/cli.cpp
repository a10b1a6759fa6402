#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>

#include "msinet/config.hpp"
#include "msinet/image.hpp"
#include "msinet/metrics.hpp"
#include "msinet/network.hpp"
#include "msinet/ot_attention.hpp"
#include "msinet/rng.hpp"
#include "msinet/training.hpp"
#include "msinet/verify.hpp"
#include "msinet/weights.hpp"

namespace msinet::cli {
namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IoError("no such file: " + path.string());
}

StereoPair load_pair(const fs::path& left, const fs::path& right) {
  require_file(left);
  require_file(right);
  StereoPair pair{to_tensor(load_png(left)), to_tensor(load_png(right))};
  if (pair.left.shape() != pair.right.shape()) {
    throw IoError("left and right views differ in size: " + pair.left.shape().str() + " vs " +
                  pair.right.shape().str());
  }
  return pair;
}

struct InferArgs {
  std::string left, right, weights, out_dir;
  std::size_t scale = 4;
};

int infer(const InferArgs& a, std::ostream& out) {
  require_file(a.weights);
  const LoadedWeights loaded = load_weights(a.weights);
  if (loaded.config.scale != a.scale) {
    throw UsageError("--scale " + std::to_string(a.scale) + " does not match the weights (scale " +
                     std::to_string(loaded.config.scale) + ")");
  }
  const StereoPair lr = load_pair(a.left, a.right);
  const StereoPair sr = forward(lr, loaded.weights, loaded.config);
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw IoError("cannot create " + a.out_dir + ": " + ec.message());
  const fs::path dir(a.out_dir);
  save_png(from_tensor(sr.left), dir / "left_sr.png");
  save_png(from_tensor(sr.right), dir / "right_sr.png");
  out << "wrote " << (dir / "left_sr.png").string() << " and " << (dir / "right_sr.png").string() << " ("
      << sr.left.shape().w << "x" << sr.left.shape().h << ")\n";
  return kOk;
}

struct OverfitArgs {
  std::string left, right, config, out, log;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  bool verbose = false;
};

int overfit(const OverfitArgs& a, std::ostream& out) {
  require_file(a.config);
  const ModelConfig cfg = load_model_config(a.config);
  const StereoPair hr = load_pair(a.left, a.right);
  const StereoPair lr{bicubic_downsample(hr.left, cfg.scale), bicubic_downsample(hr.right, cfg.scale)};

  const std::string log_path = a.log.empty() ? a.out + ".log" : a.log;
  std::ofstream log(log_path);
  if (!log) throw IoError("cannot write " + log_path);

  train::OverfitOptions opts;
  opts.steps = a.steps;
  opts.seed = a.seed;
  opts.on_step = [&](const train::StepLog& e) {
    const std::string line = train::format_log_line(e);
    log << line << '\n';
    if (a.verbose) out << line << '\n';
  };
  const train::OverfitResult result = train::overfit(lr, hr, cfg, opts);
  save_weights(result.weights, cfg, a.out);

  const auto& first = result.log.front();
  const auto& last = result.log.back();
  const StereoPair base{bilinear_upsample(lr.left, cfg.scale), bilinear_upsample(lr.right, cfg.scale)};
  out << std::fixed << std::setprecision(2);
  out << "loss " << std::scientific << std::setprecision(4) << first.loss << " -> " << last.loss << '\n';
  out << std::fixed << std::setprecision(2);
  out << "psnr left " << last.psnr_left << " dB, right " << last.psnr_right << " dB (bilinear "
      << metrics::psnr(base.left, hr.left) << " / " << metrics::psnr(base.right, hr.right) << ")\n";
  out << "wrote " << a.out << " and " << log_path << '\n';
  return kOk;
}

int gradcheck(std::uint64_t seed, std::ostream& out) {
  bool ok = true;
  out << std::scientific << std::setprecision(3);
  verify::gradcheck_suite(seed, [&](const verify::GradCheckCase& c) {
    ok = ok && c.passed();
    out << std::left << std::setw(28) << c.name << ' ' << c.report.max_rel_error << "  (tol " << c.tolerance
        << ", " << c.report.coordinates << " coords)  " << (c.passed() ? "ok" : "FAIL") << std::endl;
  });
  return ok ? kOk : kNumericFailure;
}

struct DemoArgs {
  std::size_t width = 8;
  std::size_t iters = ot::kDefaultSinkhornIters;
  std::uint64_t seed = 0;
};

int sinkhorn_demo(const DemoArgs& a, std::ostream& out) {
  if (a.width == 0) throw UsageError("--width must be positive");
  if (a.iters == 0) throw UsageError("--iters must be positive");
  Rng rng(a.seed);
  const Tensor cost = rng.normal_tensor<float>(Shape{1, 1, a.width, a.width});
  const Tensor plan = ot::sinkhorn(cost, ot::SinkhornConfig{a.iters});
  const auto viol = ot::marginal_violation(plan);
  const auto oracle = verify::sinkhorn_oracle(cost.cast<double>());
  const double gap = verify::max_abs_gap(plan.cast<double>(), oracle.plan);
  if (!plan.all_finite()) throw train::NumericError(0, "transport plan is not finite");

  out << std::fixed << std::setprecision(6);
  for (std::size_t i = 0; i < a.width; ++i) {
    for (std::size_t j = 0; j < a.width; ++j) out << (j ? " " : "") << plan[i * a.width + j];
    out << '\n';
  }
  out << std::scientific << std::setprecision(3);
  out << "row violation " << viol.max_row << '\n';
  out << "column violation " << viol.max_col << '\n';
  out << "oracle gap " << gap << " (oracle " << oracle.iterations << " iterations)\n";
  return kOk;
}

int metrics_cmd(const std::string& ref, const std::string& test, std::ostream& out) {
  require_file(ref);
  require_file(test);
  const Tensor a = to_tensor(load_png(ref));
  const Tensor b = to_tensor(load_png(test));
  if (a.shape() != b.shape()) {
    throw IoError("image sizes differ: " + a.shape().str() + " vs " + b.shape().str());
  }
  out << std::fixed << std::setprecision(2) << "PSNR " << metrics::psnr(a, b) << '\n';
  out << std::fixed << std::setprecision(4) << "SSIM " << metrics::ssim(a, b) << '\n';
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stereo image super-resolution with optimal-transport cross-view attention", "msinet"};
  app.require_subcommand(1);

  InferArgs infer_args;
  auto* infer_cmd = app.add_subcommand("infer", "Super-resolve a stereo pair");
  infer_cmd->add_option("--left", infer_args.left, "Left view PNG")->required();
  infer_cmd->add_option("--right", infer_args.right, "Right view PNG")->required();
  infer_cmd->add_option("--weights", infer_args.weights, "Weight file")->required();
  infer_cmd->add_option("--out-dir", infer_args.out_dir, "Output directory")->required();
  infer_cmd->add_option("--scale", infer_args.scale, "Upscaling factor (must match the weights)")
      ->capture_default_str();

  OverfitArgs overfit_args;
  auto* overfit_cmd = app.add_subcommand("overfit", "Train on one high-resolution stereo pair");
  overfit_cmd->add_option("--left", overfit_args.left, "Left view PNG (high resolution)")->required();
  overfit_cmd->add_option("--right", overfit_args.right, "Right view PNG (high resolution)")->required();
  overfit_cmd->add_option("--config", overfit_args.config, "Model config file")->required();
  overfit_cmd->add_option("--steps", overfit_args.steps, "Optimizer steps")->required();
  overfit_cmd->add_option("--seed", overfit_args.seed, "Initialization seed")->capture_default_str();
  overfit_cmd->add_option("--out", overfit_args.out, "Output weight file")->required();
  overfit_cmd->add_option("--log", overfit_args.log, "Loss log path (default: <out>.log)");
  overfit_cmd->add_flag("-v,--verbose", overfit_args.verbose, "Echo the loss log");

  std::uint64_t gc_seed = 0;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gc_cmd->add_option("--seed", gc_seed, "Seed for the random inputs")->capture_default_str();

  DemoArgs demo_args;
  auto* demo_cmd = app.add_subcommand("sinkhorn-demo", "Transport plan of a random cost matrix");
  demo_cmd->add_option("--width", demo_args.width, "Matrix width")->capture_default_str();
  demo_cmd->add_option("--iters", demo_args.iters, "Sinkhorn iterations")->capture_default_str();
  demo_cmd->add_option("--seed", demo_args.seed, "Seed")->capture_default_str();

  std::string ref, test;
  auto* metrics_sub = app.add_subcommand("metrics", "PSNR and SSIM between two PNGs");
  metrics_sub->add_option("--ref", ref, "Reference PNG")->required();
  metrics_sub->add_option("--test", test, "Test PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*infer_cmd) return infer(infer_args, out);
    if (*overfit_cmd) return overfit(overfit_args, out);
    if (*gc_cmd) return gradcheck(gc_seed, out);
    if (*demo_cmd) return sinkhorn_demo(demo_args, out);
    if (*metrics_sub) return metrics_cmd(ref, test, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const train::NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const ImageError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::ios_base::failure& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  return kUsage;
}

}  // namespace msinet::cli
