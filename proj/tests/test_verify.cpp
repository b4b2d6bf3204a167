#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "obsvlab/report.hpp"
#include "obsvlab/verify.hpp"

using namespace obsvlab;

TEST(Generators, RandomCascadesAreValid) {
  Rng rng(71);
  for (int c = 0; c < 200; ++c) {
    const auto sys = random_cascade(rng);
    EXPECT_GE(sys.n, 1);
    EXPECT_LE(sys.n, 3);
    EXPECT_TRUE(validate(sys).empty());
    for (double b : sys.b) {
      EXPECT_GE(std::fabs(b), 0.2);
      EXPECT_LE(std::fabs(b), 3.0);
    }
    const auto s = random_cascade_state(rng, sys.n);
    ASSERT_EQ(s.size(), static_cast<std::size_t>(2 * sys.n));
    for (int i = 0; i < sys.n; ++i) EXPECT_LE(std::fabs(s[i]), 1.5);
  }
}

TEST(Generators, Deterministic) {
  Rng a(5), b(5);
  for (int i = 0; i < 20; ++i)
    EXPECT_EQ(to_json(random_cascade(a)).dump(), to_json(random_cascade(b)).dump());
}

TEST(CloseValues, RelativeWithFloor) {
  EXPECT_TRUE(close_values(1.0, 1.0 + 1e-9));
  EXPECT_FALSE(close_values(1.0, 1.0 + 1e-7));
  EXPECT_TRUE(close_values(0.0, 1e-13));
  EXPECT_FALSE(close_values(0.0, 1e-11));
  EXPECT_FALSE(close_values(NAN, NAN));
}

TEST(Verify, SeedZeroPasses) {
  const auto r = run_verify({});
  EXPECT_TRUE(r.passed());
  ASSERT_EQ(r.properties.size(), 5u);
  for (const auto& p : r.properties) {
    EXPECT_TRUE(p.passed) << p.name << ": " << p.first_failure;
    EXPECT_GT(p.cases, 0) << p.name;
  }
}

TEST(Verify, ReportsAreByteIdentical) {
  EXPECT_EQ(to_json(run_verify({})).dump(2), to_json(run_verify({})).dump(2));
  VerifyOptions other;
  other.seed = 1;
  EXPECT_NE(to_json(run_verify({})).dump(), to_json(run_verify(other)).dump());
}

TEST(Verify, OptionalSystemAddsProperty) {
  VerifyOptions o;
  o.cases = 3;
  o.system = preset("pair-gauss-sin");
  const auto r = run_verify(o);
  EXPECT_EQ(r.properties.back().name, "closed_form_observables_on_system");
  EXPECT_TRUE(r.passed());
}

TEST(Report, WordsAndNonFiniteValues) {
  const Json w = to_json(ObservableWord{1, {1, 0}});
  EXPECT_EQ(w["j"], 2);
  EXPECT_EQ(w["mu"], Json::array({1, 0}));
  EXPECT_EQ(w["text"], "j=2; mu=[1,0]");

  GramianReport g;
  g.condition = std::numeric_limits<double>::infinity();
  g.gramian = Eigen::MatrixXd::Zero(1, 1);
  g.singular_values = Eigen::VectorXd::Zero(1);
  EXPECT_TRUE(to_json(g)["condition"].is_null());
  EXPECT_EQ(to_json(g)["class"], "singular");
}

TEST(Report, CertificateEchoesBounds) {
  const auto c = find_separating_observable(preset("periodic-sin"), std::vector<double>{0, 0},
                                            std::vector<double>{2.0 * std::numbers::pi, 0});
  const Json j = to_json(c);
  EXPECT_EQ(j["verdict"], "indistinguishable-by-construction");
  EXPECT_EQ(j["bounds"]["kmax"], 12);
  EXPECT_EQ(j["bounds"]["sep_tol"], 1e-9);
  EXPECT_TRUE(j["witness"].is_null());
  EXPECT_EQ(j["shift"].size(), 1u);
}

TEST(Report, PeriodicityVerdict) {
  const Json j = to_json(is_aperiodic_system(preset("pair-gauss-sin")));
  EXPECT_EQ(j["overall"], "periodic");
  EXPECT_EQ(j["observable"], false);
  EXPECT_EQ(j["sensors"].size(), 2u);
  EXPECT_EQ(j["sensors"][0]["classification"], "aperiodic");
  EXPECT_FALSE(j["sensors"][0]["probe_evidence"].empty());
}

TEST(Report, RankRowsCarryGradients) {
  const auto r = local_rank(as_control_affine(preset("fish-1d-gauss")), std::vector<double>{0.0, 1.0});
  const Json j = to_json(r);
  EXPECT_EQ(j["rank"], 2);
  EXPECT_EQ(j["rows"].size(), r.words.size());
  EXPECT_EQ(j["rows"][0]["gradient"].size(), 2u);
  EXPECT_EQ(j["rows"][0]["mu"], Json::array());
}
