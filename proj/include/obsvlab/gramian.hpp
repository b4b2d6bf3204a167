#pragma once

// Empirical local observability Gramian. This is a practical measure of how
// well a given input excites the sensors around a base state; it is not a
// certificate of observability.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "obsvlab/model.hpp"
#include "obsvlab/sim.hpp"

namespace obsvlab {

inline constexpr double kDefaultEps = 1e-4;
inline constexpr double kGramianObservable = 1e-6;
inline constexpr double kGramianSingular = 1e-12;
inline constexpr double kSensitivityFloor = 1e-13;

struct GramianReport {
  std::vector<double> base_state;
  std::string input;
  double eps = kDefaultEps;
  double horizon = 0.0;
  double dt = 0.0;
  Eigen::MatrixXd gramian;
  Eigen::VectorXd singular_values;  // nonincreasing
  double sigma_min = 0.0;
  double condition = 0.0;           // sigma_max / sigma_min, +inf if singular
  bool low_sensitivity = false;     // every direction below the noise floor
};

// W_ij = sum_k dy_i(t_k) . dy_j(t_k) * dt with central-difference sensitivities
// dy_i = (y(x0 + eps e_i) - y(x0 - eps e_i)) / (2 eps).
GramianReport empirical_gramian(const ControlAffineSystem& sys, std::span<const double> x0,
                                const InputSignal& u, double eps = kDefaultEps,
                                double t_end = kDefaultTEnd, double dt = kDefaultDt);

struct RankedGramian {
  std::size_t input_index;
  GramianReport report;
};

// Sorted by sigma_min descending, ties by input index.
std::vector<RankedGramian> input_sweep(const ControlAffineSystem& sys, std::span<const double> x0,
                                       const std::vector<InputSignal>& inputs,
                                       double eps = kDefaultEps, double t_end = kDefaultTEnd,
                                       double dt = kDefaultDt);

// `observable` above 1e-6, `singular` at or below 1e-12, otherwise `weak`.
std::string_view gramian_class(double sigma_min);

}  // namespace obsvlab
