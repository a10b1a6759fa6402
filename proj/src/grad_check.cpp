#include "msinet/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace msinet {
namespace {

double evaluate(const LossBuilder& f, const std::vector<BasicTensor<double>>& params) {
  ad::GradTape<double> tape;
  std::vector<ad::Var<double>> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.constant(p));
  const auto loss = f(tape, vars);
  if (loss.value().numel() != 1) throw std::invalid_argument("grad_check: loss must be a scalar");
  return loss.value()[0];
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& f, std::span<const BasicTensor<double>> params, double eps) {
  std::vector<BasicTensor<double>> analytic;
  {
    ad::GradTape<double> tape;
    std::vector<ad::Var<double>> vars;
    for (const auto& p : params) vars.push_back(tape.leaf(p));
    const auto loss = f(tape, vars);
    analytic = tape.backward(loss);
    analytic.resize(params.size());
  }

  GradCheckReport report;
  std::vector<BasicTensor<double>> work(params.begin(), params.end());
  for (std::size_t p = 0; p < work.size(); ++p) {
    for (std::size_t i = 0; i < work[p].numel(); ++i) {
      const double saved = work[p][i];
      work[p][i] = saved + eps;
      const double plus = evaluate(f, work);
      work[p][i] = saved - eps;
      const double minus = evaluate(f, work);
      work[p][i] = saved;

      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic[p][i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      ++report.coordinates;
      if (err > report.max_rel_error || report.coordinates == 1) {
        report.max_rel_error = err;
        report.param = p;
        report.index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace msinet
