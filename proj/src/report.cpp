#include "obsvlab/report.hpp"

#include <cmath>

namespace obsvlab {

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

Json numbers(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

Json matrix(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Json to_json(const CascadeSystem& sys) {
  Json j;
  j["n"] = sys.n;
  Json gamma = Json::array();
  for (const auto& g : sys.gamma) gamma.push_back(to_string(g));
  Json drift = Json::array();
  for (const auto& f : sys.drift) drift.push_back(to_string(f));
  j["gamma"] = gamma;
  j["F"] = drift;
  j["b"] = numbers(sys.b);
  if (!sys.description.empty()) j["description"] = sys.description;
  return j;
}

Json to_json(const std::vector<Violation>& violations) {
  Json a = Json::array();
  for (const auto& v : violations) a.push_back({{"index", v.index}, {"message", v.message}});
  return a;
}

Json to_json(const ObservableWord& w) {
  return {{"j", w.output + 1}, {"mu", w.mu}, {"text", to_string(w)}};
}

Json to_json(const Mismatch& m) {
  return {{"r", number(m.r)},
          {"s", number(m.s)},
          {"k", m.k},
          {"value_r", number(m.value_r)},
          {"value_s", number(m.value_s)}};
}

Json to_json(const PeriodicityVerdict& v) {
  Json j;
  j["classification"] = std::string(to_string(v.classification));
  j["period"] = v.period ? number(*v.period) : Json(nullptr);
  j["constant"] = v.constant;
  j["reason"] = v.reason;
  Json cands = Json::array();
  for (const auto& c : v.candidates) {
    Json cj{{"period", number(c.period)}, {"residual", number(c.residual)}, {"accepted", c.accepted}};
    cj["mismatch"] = c.mismatch ? to_json(*c.mismatch) : Json(nullptr);
    cands.push_back(std::move(cj));
  }
  j["candidates"] = cands;
  Json probes = Json::array();
  for (const auto& m : v.probe_evidence) probes.push_back(to_json(m));
  j["probe_evidence"] = probes;
  return j;
}

Json to_json(const SystemPeriodicity& v) {
  Json j;
  j["overall"] = std::string(to_string(v.overall));
  j["observable"] = v.overall == Periodicity::Aperiodic   ? Json(true)
                    : v.overall == Periodicity::Periodic ? Json(false)
                                                         : Json(nullptr);
  Json sensors = Json::array();
  for (const auto& s : v.per_sensor) sensors.push_back(to_json(s));
  j["sensors"] = sensors;
  return j;
}

Json to_json(const SeparationCertificate& c) {
  Json j;
  j["verdict"] = std::string(to_string(c.verdict));
  j["witness"] = c.witness ? to_json(*c.witness) : Json(nullptr);
  j["family"] = c.family.empty() ? Json(nullptr) : Json(c.family);
  j["order"] = c.order >= 0 ? Json(c.order) : Json(nullptr);
  j["value0"] = number(c.value0);
  j["value1"] = number(c.value1);
  j["shift"] = c.shift ? numbers(*c.shift) : Json(nullptr);
  j["bounds"] = {{"kmax", c.max_order}, {"sep_tol", number(c.sep_tol)}};
  return j;
}

Json to_json(const RankReport& r) {
  Json j;
  j["rank"] = r.rank;
  j["dim"] = r.dim;
  j["locally_observable"] = r.full_rank();
  Json rows = Json::array();
  for (std::size_t i = 0; i < r.words.size(); ++i) {
    Json row = to_json(r.words[i]);
    Json g = Json::array();
    for (Eigen::Index c = 0; c < r.gradients.cols(); ++c)
      g.push_back(number(r.gradients(static_cast<Eigen::Index>(i), c)));
    row["gradient"] = g;
    rows.push_back(std::move(row));
  }
  j["rows"] = rows;
  j["singular_values"] = numbers(r.singular_values);
  return j;
}

Json to_json(const GramianReport& g) {
  Json j;
  j["measure"] = "empirical local observability Gramian";
  j["base_state"] = numbers(g.base_state);
  j["input"] = g.input;
  j["eps"] = number(g.eps);
  j["horizon"] = number(g.horizon);
  j["dt"] = number(g.dt);
  j["gramian"] = matrix(g.gramian);
  j["singular_values"] = numbers(g.singular_values);
  j["sigma_min"] = number(g.sigma_min);
  j["condition"] = number(g.condition);
  j["class"] = std::string(gramian_class(g.sigma_min));
  j["thresholds"] = {{"observable", kGramianObservable}, {"singular", kGramianSingular}};
  j["low_sensitivity"] = g.low_sensitivity;
  return j;
}

Json to_json(const ShiftExperiment& e) {
  Json runs = Json::array();
  for (std::size_t i = 0; i < e.gaps.size(); ++i)
    runs.push_back({{"input", e.inputs[i]}, {"gap", number(e.gaps[i])}});
  return {{"shift", numbers(e.shift)}, {"runs", runs}};
}

Json to_json(const DistinguishResult& d) {
  return {{"gap", number(d.gap)},
          {"first_divergence", d.first_divergence ? number(*d.first_divergence) : Json(nullptr)},
          {"classification", std::string(to_string(d.classification))}};
}

Json to_json(const PeriodOptions& o) {
  return {{"window", {number(o.window.lo), number(o.window.hi)}},
          {"grid", o.grid},
          {"per_tol", number(o.per_tol)},
          {"near_tol", number(o.near_tol)},
          {"k_check", o.k_check},
          {"kmax", o.max_order},
          {"probes", o.probes},
          {"seed", o.seed}};
}

}  // namespace obsvlab
