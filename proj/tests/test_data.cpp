#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "twophase/data.hpp"

using namespace twophase;

namespace {

Schema basic_schema() {
  Schema s;
  s.treatment = "A";
  s.outcome = "Y";
  s.delta = "Delta";
  s.w1 = {"W1"};
  s.w2 = {"W2"};
  return s;
}

Dataset parse(const std::string& text, const Schema& schema = basic_schema()) {
  std::istringstream in(text);
  return read_csv(in, schema);
}

bool same_records(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const auto ra = a.record(i), rb = b.record(i);
    if (ra.a != rb.a || ra.delta != rb.delta || ra.y != rb.y || ra.w1 != rb.w1) return false;
    if (ra.w2.has_value() != rb.w2.has_value()) return false;
    if (ra.w2 && *ra.w2 != *rb.w2) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("four-row file with two phase-2 rows") {
  const auto ds = parse("W1,W2,A,Y,Delta\n0.5,1.5,1,1,1\n-0.2,,0,0,0\n1.1,0.3,0,1,1\n2,,1,0,0\n");
  CHECK(ds.size() == 4);
  CHECK(ds.phase2().size() == 2);
  CHECK(ds.record(0).w2.has_value());
  CHECK_FALSE(ds.record(1).w2.has_value());
  CHECK(ds.w2_dim() == 1);
  CHECK(std::isnan(ds.w2()(1, 0)));
}

TEST_CASE("columns may appear in any order and quoted") {
  const auto ds = parse("Delta,\"Y\",A,W2,W1\n1,0,1,2.5,\"3\"\n0,1,0,,4\n");
  CHECK(ds.record(0).w1(0) == 3.0);
  CHECK((*ds.record(0).w2)(0) == 2.5);
  CHECK(ds.record(1).y == 1.0);
}

TEST_CASE("filled phase-2 cell on a delta=0 row is rejected") {
  CHECK_THROWS_WITH_AS(parse("W1,W2,A,Y,Delta\n0.5,1.5,1,1,1\n0.1,0.7,0,0,0\n"), doctest::Contains("row 2"),
                       DataError);
}

TEST_CASE("empty phase-2 cell on a delta=1 row is rejected") {
  CHECK_THROWS_AS(parse("W1,W2,A,Y,Delta\n0.5,,1,1,1\n"), DataError);
}

TEST_CASE("non-binary treatment or delta is rejected") {
  CHECK_THROWS_AS(parse("W1,W2,A,Y,Delta\n0.5,1,2,1,1\n"), DataError);
  CHECK_THROWS_AS(parse("W1,W2,A,Y,Delta\n0.5,1,1,1,0.5\n"), DataError);
}

TEST_CASE("malformed rows report their index") {
  CHECK_THROWS_WITH_AS(parse("W1,W2,A,Y,Delta\n0.5,1,1,1,1\n0.5,1,1\n"), doctest::Contains("row 2"), DataError);
  CHECK_THROWS_WITH_AS(parse("W1,W2,A,Y,Delta\n0.5,1,1,1,1\n0.5,1,1,abc,1\n"), doctest::Contains("row 2"), DataError);
  CHECK_THROWS_AS(parse("W1,W2,A,Y,Delta\n\"0.5,1,1,1,1\n"), DataError);
}

TEST_CASE("schema naming an absent column is rejected") {
  Schema s = basic_schema();
  s.delta = "R";
  CHECK_THROWS_AS(parse("W1,W2,A,Y,Delta\n0.5,1,1,1,1\n", s), DataError);
}

TEST_CASE("dataset invariants") {
  ObservedRecord r{Eigen::VectorXd::Ones(1), 1, 1.0, 0, std::nullopt};
  SUBCASE("no phase-2 record") { CHECK_THROWS_AS(Dataset({r}, OutcomeKind::binary), DataError); }
  SUBCASE("binary outcome must be 0/1") {
    r.delta = 1;
    r.w2 = Eigen::VectorXd::Ones(1);
    r.y = 0.5;
    CHECK_THROWS_AS(Dataset({r}, OutcomeKind::binary), DataError);
  }
  SUBCASE("mismatched w1 dimension") {
    ObservedRecord s = r;
    s.delta = 1;
    s.w2 = Eigen::VectorXd::Ones(1);
    s.w1 = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(Dataset({s, r}, OutcomeKind::binary), DataError);
  }
  SUBCASE("outcome outside declared bounds") {
    r.delta = 1;
    r.w2 = Eigen::VectorXd::Ones(1);
    r.y = 11.0;
    CHECK_THROWS_AS(Dataset({r}, OutcomeKind::continuous, Bounds{0.0, 10.0}), DataError);
  }
}

TEST_CASE("write then read reproduces the records exactly") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    testing::RandomDataOptions opt;
    opt.n = 50;
    opt.kind = seed % 2 ? OutcomeKind::binary : OutcomeKind::continuous;
    const Dataset ds = testing::random_dataset(seed, opt);
    std::ostringstream out;
    write_csv(ds, out);
    Schema s;
    s.treatment = "A";
    s.outcome = "Y";
    s.delta = "Delta";
    s.w1 = {"W1", "W2"};
    s.w2 = {"W3"};
    s.y_kind = opt.kind;
    s.y_bounds = ds.y_bounds();
    std::istringstream in(out.str());
    const Dataset back = read_csv(in, s);
    CHECK(same_records(ds, back));
    std::ostringstream again;
    write_csv(back, again);
    CHECK(again.str() == out.str());
  }
}

TEST_CASE("scale_outcome") {
  auto make = [](std::vector<double> ys, std::optional<Bounds> b) {
    std::vector<ObservedRecord> recs;
    for (double y : ys) recs.push_back({Eigen::VectorXd::Zero(1), 0, y, 1, Eigen::VectorXd::Zero(1)});
    return Dataset(recs, OutcomeKind::continuous, b);
  };
  SUBCASE("midpoint and endpoints") {
    const auto s = scale_outcome(make({5.0, 0.0, 10.0}, Bounds{0.0, 10.0}));
    CHECK(s.y()(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.y()(1) == 0.0);
    CHECK(s.y()(2) == 1.0);
    CHECK(s.effect_scale() == 10.0);
  }
  SUBCASE("inverse transform recovers y") {
    const Bounds b{-3.0, 7.5};
    const auto raw = make({-3.0, -1.25, 0.0, 2.2, 7.5}, b);
    const auto s = scale_outcome(raw);
    for (Eigen::Index i = 0; i < raw.size(); ++i)
      CHECK(std::abs(s.y()(i) * (b.hi - b.lo) + b.lo - raw.y()(i)) < 1e-12);
  }
  SUBCASE("binary data are unchanged") {
    const auto ds = testing::random_dataset(3);
    const auto s = scale_outcome(ds);
    CHECK(s.y() == ds.y());
    CHECK_FALSE(s.outcome_scale().has_value());
    CHECK(s.effect_scale() == 1.0);
  }
  SUBCASE("default bounds widen the observed range") {
    const auto ds = make({2.0, 4.0}, std::nullopt);
    CHECK(ds.y_bounds().lo < 2.0);
    CHECK(ds.y_bounds().hi > 4.0);
    CHECK(ds.y_bounds().hi - 4.0 == doctest::Approx(2e-6).epsilon(1e-6));
    const auto s = scale_outcome(ds);
    CHECK(s.y().minCoeff() > 0.0);
    CHECK(s.y().maxCoeff() < 1.0);
  }
}
