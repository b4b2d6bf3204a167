// obsv-lab: observability analysis of cascade systems with high-pass outputs.
//
// Exit codes: 0 success or positive verdict, 1 negative verdict, 2 input
// error, 3 undetermined, 4 numeric failure.

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "obsvlab/gramian.hpp"
#include "obsvlab/kernels.hpp"
#include "obsvlab/obsv.hpp"
#include "obsvlab/report.hpp"
#include "obsvlab/sim.hpp"
#include "obsvlab/verify.hpp"

using namespace obsvlab;

namespace {

enum Exit { kOk = 0, kNegative = 1, kInputError = 2, kUndetermined = 3, kNumeric = 4 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string subcommand;
  std::string system_path;
  std::string preset_name;
  std::string state_text;
  std::string state2_text;
  std::vector<std::string> inputs;
  double t_end = kDefaultTEnd;
  double dt = kDefaultDt;
  int kmax = kDefaultMaxDerivativeOrder;
  int lmax = kDefaultMaxWordLength;
  std::uint64_t seed = 0;
  std::string format = "text";
  std::string out;

  double per_tol = 1e-8;
  double near_tol = 1e-4;
  int k_check = 6;
  int grid = 4096;
  double window_lo = -20.0;
  double window_hi = 20.0;
  double sep_tol = 1e-9;
  double rank_tol = 1e-10;
  bool input_words = false;
  double dist_tol = kDistTol;
  double eps = kDefaultEps;
  int cases = 20;
};

Json config_json(const RunConfig& c) {
  Json j;
  j["subcommand"] = c.subcommand;
  j["system"] = c.system_path.empty() ? Json(nullptr) : Json(c.system_path);
  j["preset"] = c.preset_name.empty() ? Json(nullptr) : Json(c.preset_name);
  j["kmax"] = c.kmax;
  j["lmax"] = c.lmax;
  j["seed"] = c.seed;
  j["t_end"] = c.t_end;
  j["dt"] = c.dt;
  j["per_tol"] = c.per_tol;
  j["near_tol"] = c.near_tol;
  j["k_check"] = c.k_check;
  j["grid"] = c.grid;
  j["window"] = {c.window_lo, c.window_hi};
  j["sep_tol"] = c.sep_tol;
  j["rank_tol"] = c.rank_tol;
  j["input_words"] = c.input_words;
  j["dist_tol"] = c.dist_tol;
  j["eps"] = c.eps;
  j["isa"] = std::string(kernels::isa_name(kernels::active_isa()));
  return j;
}

void check_config(const RunConfig& c) {
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw UsageError("--dt must be positive");
  if (!(c.t_end >= c.dt) || !std::isfinite(c.t_end))
    throw UsageError("--t-end must be at least --dt");
  if (c.kmax < 0 || c.kmax > 40) throw UsageError("--kmax must be in [0, 40]");
  if (c.lmax < 0 || c.lmax > 24) throw UsageError("--lmax must be in [0, 24]");
  if (c.k_check < 0 || c.k_check > c.kmax) throw UsageError("--k-check must be in [0, kmax]");
  if (c.grid < 64) throw UsageError("--grid must be at least 64");
  if (!(c.window_hi > c.window_lo)) throw UsageError("--window must have lo < hi");
  for (double tol : {c.per_tol, c.near_tol, c.sep_tol, c.rank_tol, c.dist_tol, c.eps})
    if (!(tol > 0.0) || !std::isfinite(tol)) throw UsageError("tolerances must be positive");
  if (c.near_tol < c.per_tol) throw UsageError("--near-tol must be at least --per-tol");
  if (c.cases < 1) throw UsageError("--cases must be positive");
}

PeriodOptions period_options(const RunConfig& c) {
  PeriodOptions o;
  o.window = {c.window_lo, c.window_hi};
  o.grid = c.grid;
  o.per_tol = c.per_tol;
  o.near_tol = c.near_tol;
  o.k_check = c.k_check;
  o.max_order = c.kmax;
  o.seed = c.seed;
  return o;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CascadeSystem load_system(const RunConfig& c) {
  if (!c.system_path.empty() && !c.preset_name.empty())
    throw UsageError("give either --system or --preset, not both");
  if (!c.preset_name.empty()) return preset(c.preset_name);
  if (c.system_path.empty()) throw UsageError("missing --system or --preset");
  return parse_system_file(read_file(c.system_path));
}

CascadeSystem load_valid_system(const RunConfig& c) {
  auto sys = load_system(c);
  if (auto v = validate(sys); !v.empty()) throw ValidationError(std::move(v));
  return sys;
}

std::vector<double> parse_state(const std::string& text, int n, const char* flag) {
  if (text.empty()) throw UsageError(std::string("missing ") + flag);
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw UsageError(std::string(flag) + ": empty entry");
    item = item.substr(b, e - b + 1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || p != item.data() + item.size() || !std::isfinite(v))
      throw UsageError(std::string(flag) + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.size() != static_cast<std::size_t>(2 * n))
    throw UsageError(std::string(flag) + ": expected " + std::to_string(2 * n) +
                     " values (x1..xn, z1..zn), got " + std::to_string(out.size()));
  return out;
}

std::vector<InputSignal> parse_inputs(const RunConfig& c, const std::vector<std::string>& fallback) {
  const auto& texts = c.inputs.empty() ? fallback : c.inputs;
  std::vector<InputSignal> out;
  for (const auto& t : texts) {
    try {
      out.push_back(InputSignal::parse(t));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--input: ") + e.what());
    }
  }
  return out;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

struct Output {
  Json json;
  std::string text;
  std::string csv;
  int code = kOk;
};

void emit(const RunConfig& c, const Output& o) {
  std::string body;
  if (c.format == "json") {
    body = o.json.dump(2) + "\n";
  } else if (c.format == "csv") {
    if (o.csv.empty()) throw UsageError("--format csv is not available for " + c.subcommand);
    body = o.csv;
  } else {
    body = o.text;
  }
  if (c.out.empty()) {
    std::cout << body;
  } else {
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + c.out + "'");
    f << body;
  }
}

Json envelope(const RunConfig& c, const char* result_key, Json result) {
  Json j;
  j["config"] = config_json(c);
  j[result_key] = std::move(result);
  return j;
}

// ---------------------------------------------------------------------------

Output cmd_validate(const RunConfig& c) {
  const auto sys = load_system(c);
  const auto v = validate(sys);
  Output o;
  o.code = v.empty() ? kOk : kNegative;
  Json r;
  r["valid"] = v.empty();
  r["system"] = to_json(sys);
  r["violations"] = to_json(v);
  o.json = envelope(c, "validation", r);
  if (v.empty()) {
    o.text = "valid: n=" + std::to_string(sys.n) + "\n";
  } else {
    o.text = "invalid:\n";
    for (const auto& x : v) o.text += "  " + x.message + "\n";
  }
  return o;
}

Output cmd_observable(const RunConfig& c) {
  const auto sys = load_valid_system(c);
  const auto verdict = is_aperiodic_system(sys, period_options(c));
  Output o;
  Json r = to_json(verdict);
  r["system"] = to_json(sys);
  o.json = envelope(c, "observability", r);
  switch (verdict.overall) {
    case Periodicity::Aperiodic:
      o.code = kOk;
      o.text = "observable (all γ aperiodic)\n";
      break;
    case Periodicity::Periodic: {
      o.code = kNegative;
      std::string which;
      for (std::size_t i = 0; i < verdict.per_sensor.size(); ++i) {
        const auto& s = verdict.per_sensor[i];
        if (s.classification != Periodicity::Periodic) continue;
        if (!which.empty()) which += ", ";
        which += "γ_" + std::to_string(i + 1) + " periodic";
        if (s.period) which += ", T≈" + fmt(*s.period, 5);
      }
      o.text = "not observable (" + which + ")\n";
      break;
    }
    case Periodicity::Undetermined: {
      o.code = kUndetermined;
      o.text = "undetermined";
      for (std::size_t i = 0; i < verdict.per_sensor.size(); ++i) {
        const auto& s = verdict.per_sensor[i];
        if (s.classification == Periodicity::Undetermined)
          o.text += " (γ_" + std::to_string(i + 1) + ": " + s.reason + ")";
      }
      o.text += "\n";
      break;
    }
  }
  for (std::size_t i = 0; i < verdict.per_sensor.size(); ++i)
    o.text += "  γ_" + std::to_string(i + 1) + ": " +
              std::string(to_string(verdict.per_sensor[i].classification)) + "\n";
  return o;
}

Output cmd_separate(const RunConfig& c) {
  const auto sys = load_valid_system(c);
  const auto s0 = parse_state(c.state_text, sys.n, "--state");
  const auto s1 = parse_state(c.state2_text, sys.n, "--state2");
  if (s0 == s1) throw UsageError("--state and --state2 are equal");
  SeparationOptions so;
  so.max_order = c.kmax;
  so.sep_tol = c.sep_tol;
  so.period = period_options(c);
  const auto cert = find_separating_observable(sys, s0, s1, so);
  Output o;
  Json r = to_json(cert);
  r["state0"] = s0;
  r["state1"] = s1;
  o.json = envelope(c, "separation", r);
  o.text = std::string(to_string(cert.verdict));
  switch (cert.verdict) {
    case SeparationVerdict::Separated:
      o.code = kOk;
      o.text += " by " + to_string(*cert.witness) + " (" + cert.family + ", k=" +
                std::to_string(cert.order) + "): " + fmt(cert.value0, 10) + " vs " +
                fmt(cert.value1, 10);
      break;
    case SeparationVerdict::IndistinguishableByConstruction:
      o.code = kNegative;
      o.text += " (periodic shift)";
      break;
    case SeparationVerdict::NotSeparatedWithinBounds:
      o.code = kUndetermined;
      o.text += " (kmax=" + std::to_string(c.kmax) + ")";
      break;
  }
  o.text += "\n";
  return o;
}

Output cmd_rank(const RunConfig& c) {
  const auto sys = load_valid_system(c);
  const auto s0 = parse_state(c.state_text, sys.n, "--state");
  RankOptions ro;
  ro.max_length = c.lmax;
  ro.rank_tol = c.rank_tol;
  ro.include_input_words = c.input_words;
  const auto rep = local_rank(as_control_affine(sys), s0, ro);
  Output o;
  o.code = rep.full_rank() ? kOk : kNegative;
  Json r = to_json(rep);
  r["state"] = s0;
  o.json = envelope(c, "rank", r);
  o.text = "rank " + std::to_string(rep.rank) + "/" + std::to_string(rep.dim) +
           (rep.full_rank() ? " (locally observable)" : " (rank deficient)") + "\n";
  for (Eigen::Index i = 0; i < rep.singular_values.size(); ++i)
    o.text += "  sigma_" + std::to_string(i + 1) + " = " + fmt(rep.singular_values(i), 10) + "\n";
  std::ostringstream csv;
  csv.precision(17);
  csv << "index,singular_value\n";
  for (Eigen::Index i = 0; i < rep.singular_values.size(); ++i)
    csv << i + 1 << "," << rep.singular_values(i) << "\n";
  o.csv = csv.str();
  return o;
}

Output cmd_simulate(const RunConfig& c) {
  const auto sys = load_valid_system(c);
  const auto s0 = parse_state(c.state_text, sys.n, "--state");
  const auto inputs = parse_inputs(c, {"zero"});
  if (inputs.size() != 1) throw UsageError("simulate takes a single --input");
  const auto traj = integrate(as_control_affine(sys), s0, inputs[0], c.t_end, c.dt);
  Output o;
  o.csv = trajectory_csv(traj, cascade_state_names(sys.n), static_cast<std::size_t>(sys.n));
  Json r;
  r["input"] = inputs[0].describe();
  r["state0"] = s0;
  r["samples"] = traj.size();
  r["final_state"] = traj.states.back();
  r["final_output"] = traj.outputs.back();
  o.json = envelope(c, "simulation", r);
  o.text = o.csv;
  return o;
}

Output cmd_distinguish(const RunConfig& c) {
  const auto sys = load_valid_system(c);
  const auto s0 = parse_state(c.state_text, sys.n, "--state");
  const auto s1 = parse_state(c.state2_text, sys.n, "--state2");
  const auto inputs = parse_inputs(c, {"zero"});
  Output o;
  Json runs = Json::array();
  bool diverged = false;
  bool inconclusive = false;
  for (const auto& u : inputs) {
    const auto d = distinguishability_experiment(sys, s0, s1, u, c.t_end, c.dt, c.dist_tol);
    Json r = to_json(d);
    r["input"] = u.describe();
    runs.push_back(r);
    diverged = diverged || d.classification == GapClass::Diverged;
    inconclusive = inconclusive || d.classification == GapClass::Inconclusive;
    o.text += u.describe() + ": gap " + fmt(d.gap, 6) + " (" + std::string(to_string(d.classification)) +
              ")\n";
  }
  o.code = diverged ? kOk : inconclusive ? kUndetermined : kNegative;
  Json r;
  r["state0"] = s0;
  r["state1"] = s1;
  r["runs"] = runs;
  o.json = envelope(c, "distinguish", r);
  return o;
}

Output cmd_gramian(const RunConfig& c) {
  const auto sys = load_valid_system(c);
  const auto s0 = parse_state(c.state_text, sys.n, "--state");
  const auto inputs = parse_inputs(c, {"zero"});
  const auto ranked = input_sweep(as_control_affine(sys), s0, inputs, c.eps, c.t_end, c.dt);
  Output o;
  Json reps = Json::array();
  std::ostringstream csv;
  csv.precision(17);
  csv << "input,index,singular_value\n";
  for (const auto& rg : ranked) {
    Json r = to_json(rg.report);
    r["input_index"] = rg.input_index + 1;
    reps.push_back(r);
    o.text += rg.report.input + ": sigma_min " + fmt(rg.report.sigma_min, 6) + " (" +
              std::string(gramian_class(rg.report.sigma_min)) + ")\n";
    for (Eigen::Index i = 0; i < rg.report.singular_values.size(); ++i)
      csv << '"' << rg.report.input << "\"," << i + 1 << "," << rg.report.singular_values(i) << "\n";
  }
  o.csv = csv.str();
  o.json = envelope(c, "gramian", reps);
  const auto best = gramian_class(ranked.front().report.sigma_min);
  o.code = best == "observable" ? kOk : best == "singular" ? kNegative : kUndetermined;
  return o;
}

Output cmd_verify(const RunConfig& c) {
  VerifyOptions vo;
  vo.seed = c.seed;
  vo.cases = c.cases;
  vo.max_order = std::min(c.kmax, 5);
  if (!c.system_path.empty() || !c.preset_name.empty()) vo.system = load_valid_system(c);
  const auto rep = run_verify(vo);
  Output o;
  o.code = rep.passed() ? kOk : kNegative;
  o.json = envelope(c, "verify", to_json(rep));
  for (const auto& p : rep.properties) {
    o.text += std::string(p.passed ? "PASS " : "FAIL ") + p.name + " (" + std::to_string(p.cases) +
              " cases, max rel error " + fmt(p.max_error, 3) + ")";
    if (!p.passed) o.text += ": " + p.first_failure;
    o.text += "\n";
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observability analysis of cascade systems with high-pass outputs"};
  app.require_subcommand(1);
  RunConfig c;

  auto add_system = [&](CLI::App* s) {
    s->add_option("--system", c.system_path, "System file");
    s->add_option("--preset", c.preset_name, "Built-in system");
  };
  auto add_common = [&](CLI::App* s) {
    s->add_option("--format", c.format, "Output format")
        ->check(CLI::IsMember({"json", "csv", "text"}))
        ->capture_default_str();
    s->add_option("--out", c.out, "Write the report to a file");
    s->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    s->add_option("--kmax", c.kmax, "Derivative order cap")->capture_default_str();
    s->add_option("--lmax", c.lmax, "Word length cap")->capture_default_str();
  };
  auto add_period = [&](CLI::App* s) {
    s->add_option("--per-tol", c.per_tol, "Relative residual accepted as periodic")->capture_default_str();
    s->add_option("--near-tol", c.near_tol, "Residual band reported as undetermined")->capture_default_str();
    s->add_option("--k-check", c.k_check, "Derivative orders checked per candidate")->capture_default_str();
    s->add_option("--grid", c.grid, "Samples on the period-search window")->capture_default_str();
    s->add_option("--window-lo", c.window_lo, "Period-search window start")->capture_default_str();
    s->add_option("--window-hi", c.window_hi, "Period-search window end")->capture_default_str();
  };
  auto add_sim = [&](CLI::App* s) {
    s->add_option("--input", c.inputs, "zero | const:<c> | sin:<a>,<w>,<phi> (repeatable)");
    s->add_option("--t-end", c.t_end, "Horizon")->capture_default_str();
    s->add_option("--dt", c.dt, "RK4 step")->capture_default_str();
  };
  const char* state_help = "State as x1,..,xn,z1,..,zn";

  std::map<std::string, Output (*)(const RunConfig&)> handlers;
  auto sub = [&](const char* name, const char* help, Output (*fn)(const RunConfig&)) {
    auto* s = app.add_subcommand(name, help);
    add_system(s);
    add_common(s);
    handlers[name] = fn;
    return s;
  };

  sub("validate", "Check a system description", cmd_validate);
  add_period(sub("observable", "Global observability via sensor periodicity", cmd_observable));
  {
    auto* s = sub("separate", "Find an observable separating two states", cmd_separate);
    s->add_option("--state", c.state_text, state_help);
    s->add_option("--state2", c.state2_text, state_help);
    s->add_option("--sep-tol", c.sep_tol, "Relative separation threshold")->capture_default_str();
    add_period(s);
  }
  {
    auto* s = sub("rank", "Rank of the observability codistribution", cmd_rank);
    s->add_option("--state", c.state_text, state_help);
    s->add_option("--rank-tol", c.rank_tol, "Relative singular-value threshold")->capture_default_str();
    s->add_flag("--input-words", c.input_words, "Also use words containing the input field");
  }
  {
    auto* s = sub("simulate", "Integrate one trajectory", cmd_simulate);
    s->add_option("--state", c.state_text, state_help);
    add_sim(s);
  }
  {
    auto* s = sub("distinguish", "Compare outputs from two initial states", cmd_distinguish);
    s->add_option("--state", c.state_text, state_help);
    s->add_option("--state2", c.state2_text, state_help);
    s->add_option("--dist-tol", c.dist_tol, "Output gap treated as identical")->capture_default_str();
    add_sim(s);
  }
  {
    auto* s = sub("gramian", "Empirical observability Gramian per input", cmd_gramian);
    s->add_option("--state", c.state_text, state_help);
    s->add_option("--eps", c.eps, "Finite-difference perturbation")->capture_default_str();
    add_sim(s);
  }
  {
    auto* s = sub("verify", "Run the seeded self-check suite", cmd_verify);
    s->add_option("--cases", c.cases, "Random cases per property")->capture_default_str();
  }
  app.add_subcommand("presets", "List built-in systems")->callback([] {
    for (const auto& p : preset_catalog()) std::cout << p.name << "  " << p.description << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  const auto* chosen = app.get_subcommands().front();
  c.subcommand = chosen->get_name();
  auto it = handlers.find(c.subcommand);
  if (it == handlers.end()) return kOk;

  try {
    check_config(c);
    const Output o = it->second(c);
    emit(c, o);
    return o.code;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const ValidationError& e) {
    std::cerr << "invalid system:\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v.message << "\n";
    return kInputError;
  } catch (const SystemFileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const PremiseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const DomainError& e) {
    std::cerr << "numeric failure: " << e.what() << " in " << e.subexpression() << "\n";
    return kNumeric;
  } catch (const IntegrationError& e) {
    std::cerr << "numeric failure: " << e.what() << " at t=" << e.time() << "\n";
    return kNumeric;
  } catch (const OrderExceeded& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const WordTooLong& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  }
}
