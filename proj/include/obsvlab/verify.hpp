#pragma once

// Seeded self-checks of the analysis pipeline on random cascade systems.
// Each property compares two independent routes to the same quantity.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "obsvlab/model.hpp"
#include "obsvlab/random.hpp"
#include "obsvlab/report.hpp"

namespace obsvlab {

// Sensor functions that are analytic and finite on [-1.5, 1.5].
const std::vector<std::string>& sensor_catalog();

// n in [1, max_n], gamma_i from the catalog, F_i random, |b_i| in [0.2, 3].
CascadeSystem random_cascade(Rng& rng, int max_n = 3);

// x_i in [-1.5, 1.5], z_i in [-2, 2].
std::vector<double> random_cascade_state(Rng& rng, int n);

// |a - b| <= rel * max(|a|, |b|) + abs_floor
bool close_values(double a, double b, double rel = 1e-8, double abs_floor = 1e-12);

struct PropertyResult {
  std::string name;
  bool passed = true;
  int cases = 0;
  int failures = 0;
  double max_error = 0.0;
  std::string first_failure;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  int cases = 20;
  int max_order = 5;
  std::optional<CascadeSystem> system;  // also check this system when set
};

struct VerifyReport {
  VerifyOptions options;
  std::vector<PropertyResult> properties;
  bool passed() const;
};

VerifyReport run_verify(const VerifyOptions& options);

Json to_json(const VerifyReport& report);

}  // namespace obsvlab
