#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bubblelab/concentration.hpp"
#include "bubblelab/report.hpp"

using namespace bubblelab;

namespace {

// Energy of the standard bubble from the Sobolev constant:
// 2 (n(n-2)/4)^{n/2} |S^n|.
double lambda0_closed_form(int n) {
  return 2.0 * std::pow(n * (n - 2.0) / 4.0, 0.5 * n) * sphere_area(n + 1);
}

ConcentrationSequence tower(int n, int count, Point centre = {}) {
  if (centre.empty()) centre.assign(n, 0.0);
  std::vector<SequenceEntry> e;
  const double bases[] = {4.0, 16.0, 64.0};
  for (int i = 0; i < count; ++i) e.push_back({centre, {1.0, bases[i]}, 1});
  return make_sequence(n, e);
}

double lambda0(int n) { return bubble_constant(n).value; }

}  // namespace

TEST_CASE("bubble constant") {
  for (int n = 3; n <= 6; ++n) {
    const BubbleConstant a = bubble_constant(n, 128);
    const BubbleConstant b = bubble_constant(n, 256);
    CAPTURE(n);
    CHECK(a.value > 0.0);
    CHECK(std::abs(a.value - b.value) <= 1e-6 * a.value);
    CHECK(a.error_bound < 1e-10 * a.value);
    CHECK(a.value == doctest::Approx(lambda0_closed_form(n)).epsilon(1e-12));
  }
  // radial integral by adaptive Gauss-Kronrod as a second oracle
  const int n = 4;
  const double c = bubble_amplitude(n);
  const auto density = [&](double r) {
    const double q = 1.0 + r * r;
    const double grad = (n - 2.0) * c * r * std::pow(q, -0.5 * n);
    const double u = c * std::pow(q, -0.5 * (n - 2));
    return sphere_area(n) * std::pow(r, n - 1) * (grad * grad + std::pow(u, 2.0 * n / (n - 2)));
  };
  const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      density, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-13);
  CHECK(bubble_constant(n).value == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(standard_ball_energy(3, 1e6) == doctest::Approx(lambda0(3)).epsilon(1e-5));
}

TEST_CASE("make_sequence examples") {
  const Point o(3, 0.0);
  const ConcentrationSequence one = make_sequence(3, {{o, {1.0, 4.0}, 1}});
  CHECK(one.entries.size() == 1);
  CHECK(one.entries[0].schedule.at(2) == 1.0 / 16);
  const ConcentrationSequence two = make_sequence(3, {{o, {1.0, 4.0}, 1}, {o, {1.0, 16.0}, 1}});
  CHECK(two.bubbles(3).size() == 2);
  CHECK(two.bubbles(3)[1].scale == std::pow(16.0, -3));
  CHECK_THROWS_AS(make_sequence(3, {{o, {1.0, 1.0}, 1}}), InputError);
  CHECK_THROWS_AS(make_sequence(3, {{o, {1.0, 0.5}, 1}}), InputError);
  CHECK_THROWS_AS(make_sequence(3, {{o, {1.0, 4.0}, 2}}), InputError);
  CHECK_THROWS_AS(make_sequence(3, {{o, {1.0, 4.0}, 1}, {o, {1.0, 4.0}, 1}}), InputError);
  CHECK_THROWS_AS(make_sequence(3, {{o, {1.0, 4.0}, 1}}, 1.0), InputError);
  const ConcentrationSequence budgeted = make_sequence(3, {{o, {1.0, 4.0}, 1}}, 100.0);
  CHECK(budgeted.measured_budget <= 100.0);
  CHECK(budgeted.measured_budget > 0.0);
  const ConcentrationSequence empty = make_sequence(3, {});
  CHECK(empty.empty());
  CHECK(empty.field(4)(o) == 0.0);
}

TEST_CASE("energy_in examples") {
  const int n = 3;
  const Point o(n, 0.0);
  RuleOptions opt;
  opt.graded = true;
  opt.graded_min_radius = 1e-8;
  CHECK(energy_in(zero_field(n), build_ball_rule(n, o, 1.0, opt)) == 0.0);

  const ScalarField u = aubin_talenti(n, 1.0);
  double prev = 0.0;
  for (double R : {10.0, 100.0, 1000.0}) {
    const double e = energy_in(u, build_ball_rule(n, o, R, opt), EnergyDensity::Eta);
    CHECK(e > prev);
    prev = e;
  }
  CHECK(prev == doctest::Approx(lambda0(n) * (n - 1.0) / (2.0 * n)).epsilon(2e-3));

  const ScalarField v = aubin_talenti(n, 1e-3);
  const double small = energy_in(v, build_ball_rule(n, o, 0.1, opt));
  const double large = energy_in(v, build_ball_rule(n, o, 1.0, opt));
  CHECK(std::abs(large - small) <= 1e-2 * large);
  // closed-form tail: the difference is the shell energy 0.1 < |x| < 1
  CHECK(large - small <= bubble_tail_bound(n, 1e-3, 0.1));
  const ScalarField w = aubin_talenti(n, 1e-5);
  CHECK(std::abs(energy_in(w, build_ball_rule(n, o, 1.0, opt)) -
                 energy_in(w, build_ball_rule(n, o, 0.1, opt))) <= 1e-4 * lambda0(n));
}

TEST_CASE("detection") {
  const int n = 3;
  DetectionOptions opt;
  opt.epsilon0 = lambda0(n) / 10.0;

  CHECK(detect_sigma(make_sequence(n, {}), opt).empty());

  const auto single = detect_sigma(tower(n, 1), opt);
  REQUIRE(single.size() == 1);
  CHECK(single[0].declared);
  CHECK(norm2(single[0].x) == 0.0);

  const ConcentrationSequence pair =
      make_sequence(n, {{Point{0.5, 0, 0}, {1.0, 4.0}, 1}, {Point{-0.5, 0, 0}, {1.0, 4.0}, 1}});
  const auto two = detect_sigma(pair, opt);
  REQUIRE(two.size() == 2);
  CHECK(std::abs(std::abs(two[0].x[0]) - 0.5) < 1e-12);
  CHECK(std::abs(std::abs(two[1].x[0]) - 0.5) < 1e-12);
  CHECK(two[0].x[0] * two[1].x[0] < 0.0);
}

TEST_CASE("detected set is stable under halving the threshold") {
  for (int n = 3; n <= 5; ++n)
    for (int count = 1; count <= 2; ++count) {
      const ConcentrationSequence seq = tower(n, count, Point(n, 0.0));
      DetectionOptions hi, lo;
      hi.epsilon0 = lambda0(n) / (4.0 * n);
      lo.epsilon0 = lambda0(n) / (8.0 * n);
      const auto a = detect_sigma(seq, hi);
      const auto b = detect_sigma(seq, lo);
      CAPTURE(n);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].x == b[i].x);
      CHECK(a.size() == 1);
    }
}

TEST_CASE("bubble energy limit") {
  for (int n = 3; n <= 5; ++n) {
    const ConcentrationSequence seq = tower(n, 1);
    const double ref = bubble_energy_limit(seq, 10.0, 2);
    for (int k : {4, 6, 8}) CHECK(std::abs(bubble_energy_limit(seq, 10.0, k) - ref) <= 1e-8 * ref);
    double prev = 0.0;
    for (double R : {1.0, 10.0, 100.0}) {
      const double e = bubble_energy_limit(seq, R, 5);
      CHECK(e >= prev);
      prev = e;
    }
    const double e10 = bubble_energy_limit(seq, 10.0, 5), e100 = bubble_energy_limit(seq, 100.0, 5);
    const double analytic = standard_ball_energy(n, 100.0) - standard_ball_energy(n, 10.0);
    CHECK(e100 - e10 == doctest::Approx(analytic).epsilon(1e-6));
    CHECK(e10 == doctest::Approx(standard_ball_energy(n, 10.0)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(bubble_energy_limit(tower(3, 1), 0.0, 3), InputError);
  CHECK_THROWS_AS(bubble_energy_limit(tower(3, 1), 1.0, 3, 1), InputError);
}

TEST_CASE("neck energy") {
  const int n = 3;
  const Point o(n, 0.0);
  CHECK(neck_energy(zero_field(n), o, 0.1, 0.5).total == 0.0);
  CHECK_THROWS_AS(neck_energy(zero_field(n), o, 0.5, 0.5), InputError);

  const ConcentrationSequence seq = make_sequence(n, {{o, {1.0, 1000.0}, 1}});
  const double l0 = lambda0(n);
  double prev = INFINITY, prev_max_shell = INFINITY;
  for (double R : {10.0, 30.0, 100.0}) {
    const NeckEnergy ne = neck_energy(seq, 1, R, 0.5);
    CHECK(ne.total < prev);
    prev = ne.total;
    double max_shell = 0.0;
    for (const NeckShell& s : ne.shells) {
      CHECK(s.energy <= s.tail_bound);
      max_shell = std::max(max_shell, s.energy);
    }
    CHECK(max_shell < prev_max_shell);
    prev_max_shell = max_shell;
  }
  CHECK(prev < 0.01 * l0);
  // a lone bubble's neck is the shell R < |x|/delta_k < 1/(2 delta_k) of the standard
  // profile, so at fixed R it grows with k towards the tail outside B(0, R)
  const ConcentrationSequence slow = tower(n, 1);
  double last = 0.0;
  for (int k : {3, 6, 9}) {
    const double e = neck_energy(slow, k, 10.0, 0.5).total;
    const double shell = standard_ball_energy(n, 0.5 * std::pow(4.0, k)) - standard_ball_energy(n, 10.0);
    CHECK(e == doctest::Approx(shell).epsilon(1e-6));
    CHECK(e > last);
    last = e;
  }
}

TEST_CASE("theta") {
  const int n = 3;
  const ThetaEstimate one = theta_estimate(tower(n, 1), Point(n, 0.0), 0.1, 10);
  CHECK(one.stable);
  CHECK(one.weak_limit_energy == 0.0);
  CHECK(one.value / lambda0(n) >= 0.95);
  CHECK(one.value / lambda0(n) <= 1.05);
  const ThetaEstimate two = theta_estimate(tower(n, 2), Point(n, 0.0), 0.1, 10);
  CHECK(two.value / lambda0(n) >= 1.9);
  CHECK(two.value / lambda0(n) <= 2.1);
  CHECK(two.radii.size() == 3);
}

TEST_CASE("scaled measure") {
  for (int n = 3; n <= 5; ++n) {
    const Point y(n, 0.1);
    const ScalarField u = aubin_talenti(n, 0.01, y);
    CHECK(scaled_measure(u, Point(n, 0.0), 1.0, 0.5) ==
          doctest::Approx(ball_energy(u, Point(n, 0.0), 0.5)).epsilon(1e-12));
    CHECK(scaled_measure(u, y, 0.01, 3.0) == doctest::Approx(standard_ball_energy(n, 3.0)).epsilon(1e-8));
    CHECK(scaled_measure(u, y, 0.2, 0.5) == doctest::Approx(ball_energy(u, y, 0.1)).epsilon(1e-8));
    // constant in r at fixed lambda r
    const double ref = scaled_measure(u, y, 0.04, 1.0);
    for (double r : {2.0, 4.0}) CHECK(std::abs(scaled_measure(u, y, 0.04 / r, r) - ref) < 1e-8 * ref);
    CHECK(scaled_measure(zero_field(n), y, 0.3, 1.0) == 0.0);
  }
  CHECK_THROWS_AS(scaled_measure(zero_field(3), Point(3, 0.0), 0.0, 1.0), InputError);
}

TEST_CASE("quantization recovers towers of one, two and three bubbles") {
  const int n = 3;
  for (int count = 1; count <= 3; ++count) {
    const DefectReport rep = quantization_report(tower(n, count));
    CAPTURE(count);
    REQUIRE(rep.points.size() == 1);
    const PointReport& p = rep.points[0];
    CHECK(p.n_hat == count);
    CHECK(std::abs(p.ratio - count) <= 0.05);
    CHECK(p.theta.value >= 0.0);
    CHECK_FALSE(p.fit_failed);
    double sum = 0.0;
    for (const BubbleRecord& b : p.inventory) {
      sum += b.energy;
      CHECK(b.converged);
    }
    CHECK(std::abs(p.theta.value - sum) <= p.tolerance + 1e-12);
    CHECK(p.necks.size() == 6);
  }
  const DefectReport none = quantization_report(make_sequence(n, {}));
  CHECK(none.points.empty());
  CHECK(report_json(none).find("\"sigma_points\": []") != std::string::npos);
}

TEST_CASE("quantization separates two points") {
  const ConcentrationSequence pair =
      make_sequence(3, {{Point{0.5, 0, 0}, {1.0, 4.0}, 1}, {Point{-0.5, 0, 0}, {1.0, 16.0}, 1}});
  const DefectReport rep = quantization_report(pair);
  REQUIRE(rep.points.size() == 2);
  for (const PointReport& p : rep.points) {
    CHECK(p.n_hat == 1);
    CHECK(std::abs(p.ratio - 1.0) <= 0.05);
  }
}
