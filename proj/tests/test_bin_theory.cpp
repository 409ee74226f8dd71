#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "generators.hpp"
#include "parkdyn/bin_theory.hpp"

using namespace parkdyn;
using namespace parkdyn::theory;

namespace {

// Independent oracle: plain enumeration of the two-bin speed, written from
// the model definition and not through two_bin_speed.
double oracle_speed(double k1, double k2, double vf, double vc, double kj, bool cruising) {
  auto gs = [&](double k) { return std::max(0.0, vf * (1.0 - k / kj)); };
  const double v1 = gs(k1);
  const double v2 = cruising ? std::min(vc, gs(k2)) : gs(k2);
  if (k1 + k2 == 0.0) return vf;
  return (k1 * v1 + k2 * v2) / (k1 + k2);
}

std::pair<double, double> oracle_envelope(double K, double vf, double vc, double kj,
                                          bool cruising, int n = 20000) {
  const double lo = std::max(0.0, 2 * K - kj), hi = std::min(kj, 2 * K);
  double vmax = -1e300, vmin = 1e300;
  for (int i = 0; i <= n; ++i) {
    const double k1 = lo + (hi - lo) * i / n;
    const double v = oracle_speed(k1, 2 * K - k1, vf, vc, kj, cruising);
    vmax = std::max(vmax, v);
    vmin = std::min(vmin, v);
  }
  return {vmax, vmin};
}

BinParams params(double vc) { return {50.0, vc, 100.0}; }

}  // namespace

TEST_SUITE("bin_theory") {

TEST_CASE("critical density") {
  CHECK(critical_density(params(50)) == 0.0);
  CHECK(critical_density(params(10)) == doctest::Approx(80.0));
  CHECK(critical_density(params(25)) == doctest::Approx(50.0));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(critical_density({50, 0, 100}), std::invalid_argument);
  CHECK_THROWS_AS(critical_density({50, 60, 100}), std::invalid_argument);
  CHECK_THROWS_AS(critical_density({50, 10, 0}), std::invalid_argument);
  CHECK_THROWS_AS(unstable_area({50, 10, -1}, true), std::invalid_argument);
}

TEST_CASE("two-bin speed") {
  const auto p = params(10);
  CHECK(two_bin_speed(30, 30, p, false) == doctest::Approx(35.0));
  CHECK(two_bin_speed(20, 40, p, false) == doctest::Approx(100.0 / 3.0));
  CHECK(two_bin_speed(0, 30, p, true) == doctest::Approx(10.0));
  CHECK(two_bin_speed(0, 0, p, false) == 50.0);
  CHECK_THROWS_AS(two_bin_speed(-1, 10, p, false), std::invalid_argument);
  CHECK_THROWS_AS(two_bin_speed(10, 101, p, false), std::invalid_argument);
}

TEST_CASE("two-bin speed equals the closed form without cruising") {
  testing::Gen g(5);
  const auto p = params(50);
  for (int i = 0; i < 500; ++i) {
    const double k1 = g.uniform(0, 100), k2 = g.uniform(0, 100);
    const double K = 0.5 * (k1 + k2);
    const double closed = 50.0 - (50.0 / 100.0) * (2 * K - k1 * k2 / K);
    CHECK(two_bin_speed(k1, k2, p, false) == doctest::Approx(closed).epsilon(1e-12));
  }
}

TEST_CASE("no-cruising envelope values") {
  const auto p = params(50);
  CHECK(envelope_no_cruising(50, p).v_min == doctest::Approx(0.0));
  const auto jam = envelope_no_cruising(100, p);
  CHECK(jam.v_max == doctest::Approx(0.0));
  CHECK(jam.v_min == doctest::Approx(0.0));
  CHECK(envelope_no_cruising(75, p).v_min == doctest::Approx(25.0 / 3.0));
  CHECK(envelope_no_cruising(20, p).v_max == doctest::Approx(40.0));
  CHECK_THROWS_AS(envelope_no_cruising(-0.1, p), std::invalid_argument);
  CHECK_THROWS_AS(envelope_no_cruising(100.1, p), std::invalid_argument);
}

TEST_CASE("with-cruising envelope values") {
  const auto p = params(10);
  CHECK(envelope_with_cruising(30, p).v_min == doctest::Approx(10.0));
  CHECK(envelope_with_cruising(40, p).v_max == doctest::Approx(20.0));
  CHECK(envelope_with_cruising(90, p).v_max == doctest::Approx(5.0));
  // oracle cross-check for the K = 40 example
  const auto [vmax, vmin] = oracle_envelope(40, 50, 10, 100, true);
  CHECK(vmax == doctest::Approx(20.0).epsilon(1e-6));
  CHECK(vmin == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("brute force envelope basics") {
  const auto p = params(30);
  const auto zero = brute_force_envelope(0, p, false, 0.01);
  CHECK(zero.v_max == 50.0);
  CHECK(zero.v_min == 50.0);
  CHECK(brute_force_envelope(50, p, false, 0.01).v_min == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS_AS(brute_force_envelope(50, p, false, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(brute_force_envelope(120, p, false, 0.01), std::invalid_argument);
}

TEST_CASE("property: formulas match the enumeration oracle") {
  for (double vc : {10.0, 20.0, 30.0, 40.0, 50.0}) {
    const auto p = params(vc);
    // K = 0 is excluded: the empty network reports v_f, the cruising formula its limit v_c.
    for (double K = 2.5; K <= 100.0 + 1e-9; K += 2.5) {
      const auto f = envelope_with_cruising(K, p);
      const auto [omax, omin] = oracle_envelope(K, 50, vc, 100, true);
      CHECK(std::abs(f.v_max - omax) <= 0.02);
      CHECK(std::abs(f.v_min - omin) <= 0.02);
      const auto g = envelope_no_cruising(K, p);
      const auto [nmax, nmin] = oracle_envelope(K, 50, vc, 100, false);
      CHECK(std::abs(g.v_max - nmax) <= 0.02);
      CHECK(std::abs(g.v_min - nmin) <= 0.02);
    }
  }
}

TEST_CASE("property: every split lies between the envelopes") {
  testing::Gen g(99);
  for (int i = 0; i < 3000; ++i) {
    const double vc = g.uniform(1, 50);
    const auto p = params(vc);
    const double K = g.uniform(0, 100);
    const double lo = std::max(0.0, 2 * K - 100), hi = std::min(100.0, 2 * K);
    const double k1 = g.uniform(lo, hi);
    const double k2 = std::clamp(2 * K - k1, 0.0, 100.0);
    for (bool cruising : {false, true}) {
      const auto e = cruising ? envelope_with_cruising(K, p) : envelope_no_cruising(K, p);
      const double v = two_bin_speed(k1, k2, p, cruising);
      CHECK(v <= e.v_max + 1e-9);
      CHECK(v >= e.v_min - 1e-9);
    }
  }
}

TEST_CASE("property: envelopes are continuous at branch points") {
  for (double vc : {5.0, 10.0, 20.0, 25.0, 30.0, 40.0, 45.0}) {
    const auto p = params(vc);
    for (bool cruising : {false, true}) {
      for (double b : branch_points(p, cruising)) {
        if (b <= 0.0 || b >= 100.0) continue;
        const double eps = 1e-11;
        const auto l = cruising ? envelope_with_cruising(b - eps, p) : envelope_no_cruising(b - eps, p);
        const auto r = cruising ? envelope_with_cruising(b + eps, p) : envelope_no_cruising(b + eps, p);
        CHECK(std::abs(l.v_max - r.v_max) <= 1e-9);
        CHECK(std::abs(l.v_min - r.v_min) <= 1e-9);
      }
    }
  }
}

TEST_CASE("cruising at free-flow speed reduces to the no-cruising case") {
  const auto p = params(50);
  for (double K = 0; K <= 100; K += 0.5) {
    const auto a = envelope_with_cruising(K, p);
    const auto b = envelope_no_cruising(K, p);
    CHECK(a.v_max == doctest::Approx(b.v_max).epsilon(1e-12));
    CHECK(a.v_min == doctest::Approx(b.v_min).epsilon(1e-12));
  }
  CHECK(unstable_area(p, true) == doctest::Approx(unstable_area(p, false)).epsilon(1e-9));
}

TEST_CASE("unstable area grows as cruisers slow down") {
  const double a10 = unstable_area(params(10), true);
  const double a30 = unstable_area(params(30), true);
  const double a45 = unstable_area(params(45), true);
  CHECK(a10 > a30);
  CHECK(a30 > a45);
}

TEST_CASE("unstable area matches a trapezoid oracle") {
  for (double vc : {10.0, 30.0}) {
    const int n = 200000;
    double area = 0.0;
    for (int i = 0; i < n; ++i) {
      const double K0 = 100.0 * i / n, K1 = 100.0 * (i + 1) / n;
      const auto e0 = envelope_with_cruising(K0, params(vc));
      const auto e1 = envelope_with_cruising(K1, params(vc));
      area += 0.5 * (K1 - K0) * ((e0.v_max - e0.v_min) + (e1.v_max - e1.v_min));
    }
    CHECK(unstable_area(params(vc), true) == doctest::Approx(area).epsilon(1e-6));
  }
}

TEST_CASE("parallel sweep equals the serial reference") {
  std::vector<double> Ks;
  for (int i = 0; i <= 200; ++i) Ks.push_back(0.5 * i);
  const auto a = sweep_envelopes(Ks, params(20), true, 0.05);
  const auto b = sweep_envelopes_serial(Ks, params(20), true, 0.05);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].K == b[i].K);
    CHECK(a[i].formula.v_max == b[i].formula.v_max);
    CHECK(a[i].brute.v_min == b[i].brute.v_min);
  }
  const std::vector<double> bad{10.0, 150.0};
  CHECK_THROWS_AS(sweep_envelopes(bad, params(20), true, 0.05), std::invalid_argument);
}

}  // TEST_SUITE
