#include "obsvlab/gramian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "obsvlab/kernels.hpp"

namespace obsvlab {

GramianReport empirical_gramian(const ControlAffineSystem& sys, std::span<const double> x0,
                                const InputSignal& u, double eps, double t_end, double dt) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  const std::size_t d = sys.dim();
  if (x0.size() != d) throw std::invalid_argument("state dimension mismatch");

  // sensitivities[i] is the flattened (time, output) series for direction i.
  std::vector<std::vector<double>> sensitivities(d);
  bool all_small = true;
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<double> plus(x0.begin(), x0.end());
    std::vector<double> minus = plus;
    plus[i] += eps;
    minus[i] -= eps;
    const auto tp = integrate(sys, plus, u, t_end, dt);
    const auto tm = integrate(sys, minus, u, t_end, dt);
    auto& series = sensitivities[i];
    series.reserve(tp.size() * sys.num_outputs());
    for (std::size_t k = 0; k < tp.size(); ++k)
      for (std::size_t j = 0; j < sys.num_outputs(); ++j)
        series.push_back((tp.outputs[k][j] - tm.outputs[k][j]) / (2.0 * eps));
    const std::vector<double> zero(series.size(), 0.0);
    if (kernels::max_abs_diff(series, zero) > kSensitivityFloor) all_small = false;
  }

  GramianReport r;
  r.base_state.assign(x0.begin(), x0.end());
  r.input = u.describe();
  r.eps = eps;
  r.horizon = t_end;
  r.dt = dt;
  r.low_sensitivity = all_small;
  r.gramian.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      const double w = kernels::dot(sensitivities[i], sensitivities[j]) * dt;
      r.gramian(i, j) = w;
      r.gramian(j, i) = w;
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r.gramian);
  r.singular_values = svd.singularValues();
  r.sigma_min = r.singular_values.size() ? r.singular_values(r.singular_values.size() - 1) : 0.0;
  const double sigma_max = r.singular_values.size() ? r.singular_values(0) : 0.0;
  r.condition = r.sigma_min > 0.0 ? sigma_max / r.sigma_min : std::numeric_limits<double>::infinity();
  return r;
}

std::vector<RankedGramian> input_sweep(const ControlAffineSystem& sys, std::span<const double> x0,
                                       const std::vector<InputSignal>& inputs, double eps,
                                       double t_end, double dt) {
  if (inputs.empty()) throw std::invalid_argument("input sweep needs at least one input");
  std::vector<RankedGramian> out;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    out.push_back({i, empirical_gramian(sys, x0, inputs[i], eps, t_end, dt)});
  std::stable_sort(out.begin(), out.end(), [](const RankedGramian& a, const RankedGramian& b) {
    return a.report.sigma_min > b.report.sigma_min;
  });
  return out;
}

std::string_view gramian_class(double sigma_min) {
  if (sigma_min > kGramianObservable) return "observable";
  if (sigma_min <= kGramianSingular) return "singular";
  return "weak";
}

}  // namespace obsvlab
