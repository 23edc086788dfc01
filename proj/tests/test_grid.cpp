#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "bubblelab/concentration.hpp"
#include "bubblelab/grid.hpp"

using namespace bubblelab;
using boost::math::quadrature::gauss_kronrod;

namespace {
double kronrod(const std::function<double(double)>& f, double a, double b) {
  return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}
const double pi = std::numbers::pi;
}  // namespace

TEST_CASE("Gauss-Legendre is exact to degree 2m-1 and matches an adaptive oracle") {
  const GaussRule1D g = gauss_legendre(6, -1.0, 3.0);
  double s11 = 0.0, s12 = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    s11 += g.weights[i] * std::pow(g.nodes[i], 11);
    s12 += g.weights[i] * std::pow(g.nodes[i], 12);
  }
  CHECK(s11 == doctest::Approx((std::pow(3.0, 12) - 1.0) / 12).epsilon(1e-13));
  CHECK(s12 != doctest::Approx((std::pow(3.0, 13) + 1.0) / 13).epsilon(1e-10));

  const GaussRule1D h = gauss_legendre(30, 0.0, 2.0);
  double v = 0.0;
  for (std::size_t i = 0; i < h.nodes.size(); ++i)
    v += h.weights[i] * std::exp(h.nodes[i]) * std::cos(h.nodes[i]);
  CHECK(v == doctest::Approx(kronrod([](double x) { return std::exp(x) * std::cos(x); }, 0, 2))
                 .epsilon(1e-13));
}

TEST_CASE("symmetric Gauss-Jacobi moments") {
  for (double alpha : {0.0, 0.5, 1.0, 1.5}) {
    const GaussRule1D g = gauss_jacobi_symmetric(7, alpha);
    double m0 = 0.0, m2 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      m0 += g.weights[i];
      m1 += g.weights[i] * g.nodes[i];
      m2 += g.weights[i] * g.nodes[i] * g.nodes[i];
    }
    CHECK(m0 == doctest::Approx(boost::math::beta(0.5, alpha + 1.0)).epsilon(1e-13));
    CHECK(m2 == doctest::Approx(boost::math::beta(1.5, alpha + 1.0)).epsilon(1e-13));
    CHECK(std::abs(m1) < 1e-15);
  }
}

TEST_CASE("unit sphere rules integrate low moments exactly") {
  for (int n = 3; n <= 6; ++n) {
    const auto s = unit_sphere_rule(n, 6);
    const double area = sphere_area(n);
    double w = 0.0, x2 = 0.0, x4 = 0.0, x1x2 = 0.0, x1 = 0.0;
    for (std::size_t i = 0; i < s->size(); ++i) {
      const double* p = &s->nodes[i * n];
      w += s->weights[i];
      x1 += s->weights[i] * p[0];
      x2 += s->weights[i] * p[0] * p[0];
      x4 += s->weights[i] * std::pow(p[n - 1], 4);
      x1x2 += s->weights[i] * p[0] * p[1];
    }
    CAPTURE(n);
    CHECK(w == doctest::Approx(area).epsilon(1e-13));
    CHECK(x2 == doctest::Approx(area / n).epsilon(1e-13));
    CHECK(x4 == doctest::Approx(3.0 * area / (n * (n + 2.0))).epsilon(1e-13));
    CHECK(std::abs(x1) < 1e-13);
    CHECK(std::abs(x1x2) < 1e-13);
  }
}

TEST_CASE("oriented sphere rules") {
  for (int n = 3; n <= 6; ++n) {
    RuleOptions opt;
    opt.angular_order = 6;
    opt.polar_order = 10;
    opt.axis = Point(n, 0.0);
    for (int d = 0; d < n; ++d) opt.axis[d] = 0.5 - d;
    const auto s = sphere_rule_for(n, opt);
    const double len = std::sqrt(norm2(opt.axis));
    double w = 0.0, a1 = 0.0, a2 = 0.0, a6 = 0.0;
    for (std::size_t i = 0; i < s->size(); ++i) {
      const double* p = &s->nodes[i * n];
      double dot = 0.0;
      for (int d = 0; d < n; ++d) dot += p[d] * opt.axis[d] / len;
      CHECK(norm2(std::span<const double>(p, n)) == doctest::Approx(1.0).epsilon(1e-14));
      w += s->weights[i];
      a1 += s->weights[i] * dot;
      a2 += s->weights[i] * dot * dot;
      a6 += s->weights[i] * std::pow(dot, 6);
    }
    const double area = sphere_area(n);
    CAPTURE(n);
    CHECK(w == doctest::Approx(area).epsilon(1e-13));
    CHECK(std::abs(a1) < 1e-12);
    CHECK(a2 == doctest::Approx(area / n).epsilon(1e-13));
    CHECK(a6 == doctest::Approx(15.0 * area / (n * (n + 2.0) * (n + 4.0))).epsilon(1e-12));
  }
  RuleOptions e1;
  e1.axis = Point{2.0, 0.0, 0.0};
  CHECK(sphere_rule_for(3, e1) == unit_sphere_rule(3, 0));
  RuleOptions bad;
  bad.axis = Point{0.0, 0.0, 0.0};
  CHECK_THROWS_AS(sphere_rule_for(3, bad), InputError);
}

TEST_CASE("ball and sphere rule examples") {
  const Point o(3, 0.0);
  const auto one = [](std::span<const double>) { return 1.0; };
  CHECK(integrate(build_ball_rule(3, o, 1.0, 12), one) == doctest::Approx(4 * pi / 3).epsilon(1e-12));
  CHECK(integrate(build_ball_rule(3, o, 2.0, 12), one) == doctest::Approx(32 * pi / 3).epsilon(1e-12));
  CHECK(integrate(build_ball_rule(3, o, 1.0, 12), [](std::span<const double> x) { return norm2(x); }) ==
        doctest::Approx(4 * pi / 5).epsilon(1e-12));
  CHECK(integrate(build_ball_rule(3, o, 1.0, 12), [](std::span<const double>) { return 2.0; }) ==
        doctest::Approx(8 * pi / 3).epsilon(1e-12));
  CHECK(integrate(build_sphere_rule(3, o, 1.0, 12), one) == doctest::Approx(4 * pi).epsilon(1e-12));
  CHECK(integrate(build_sphere_rule(4, Point(4, 0.0), 1.0, 8), one) ==
        doctest::Approx(2 * pi * pi).epsilon(1e-12));
  CHECK(std::abs(integrate(build_sphere_rule(3, o, 1.0, 12),
                           [](std::span<const double> x) { return x[0]; })) < 1e-12);
  CHECK(integrate(build_sphere_rule(3, o, 1.0, 12),
                  [](std::span<const double> x) { return x[0] * x[0]; }) ==
        doctest::Approx(4 * pi / 3).epsilon(1e-12));
}

TEST_CASE("gaussian over the unit ball against a radial oracle") {
  const double oracle =
      4 * pi * kronrod([](double r) { return r * r * std::exp(-r * r); }, 0.0, 1.0);
  const double v = integrate(build_ball_rule(3, Point(3, 0.0), 1.0, 8),
                             [](std::span<const double> x) { return std::exp(-norm2(x)); });
  CHECK(std::abs(v - oracle) < 1e-8 * oracle);
}

TEST_CASE("rule invariants: weights, measure, nodes inside, odd moments") {
  for (int n = 3; n <= 6; ++n) {
    Point c(n, 0.0);
    c[0] = 0.7;
    RuleOptions opt;
    opt.radial_points = 12;
    opt.angular_order = 4;
    for (const QuadratureRule& rule :
         {build_ball_rule(n, c, 1.5, opt), build_sphere_rule(n, c, 1.5, 4),
          build_annulus_rule(n, c, 0.5, 1.5, opt)}) {
      CAPTURE(n);
      CHECK(rule.weight_sum() == doctest::Approx(rule.measure()).epsilon(1e-10));
      std::vector<double> x(n);
      bool inside = true, positive = true;
      for (std::size_t i = 0; i < rule.size(); ++i) {
        rule.node(i, x);
        const double d = distance(x, c);
        inside = inside && d <= rule.outer_radius() * (1 + 1e-12) &&
                 d >= rule.inner_radius() * (1 - 1e-12);
        positive = positive && rule.weight(i) > 0.0;
      }
      CHECK(inside);
      CHECK(positive);
      const double odd = integrate(rule, [&](std::span<const double> y) {
        return (y[0] - c[0]) * (y[n - 1] - c[n - 1]) * (y[n - 1] - c[n - 1]);
      });
      CHECK(std::abs(odd) < 1e-10);
    }
  }
}

TEST_CASE("annulus equals outer ball minus inner ball") {
  RuleOptions opt;
  opt.radial_points = 24;
  const Point c{0.1, -0.2, 0.3, 0.0};
  const auto f = [](std::span<const double> x) { return std::exp(x[0]) / (1.0 + norm2(x)); };
  const double outer = integrate(build_ball_rule(4, c, 2.0, opt), f);
  const double inner = integrate(build_ball_rule(4, c, 0.8, opt), f);
  const double ann = integrate(build_annulus_rule(4, c, 0.8, 2.0, opt), f);
  CHECK(ann == doctest::Approx(outer - inner).epsilon(1e-10));
}

TEST_CASE("angular refinement converges at a rate consistent with exactness") {
  const Point c(3, 0.0);
  const auto f = [](std::span<const double> x) { return std::exp(2.0 * x[0] + x[2]); };
  const double exact = integrate(build_sphere_rule(3, c, 1.0, 40), f);
  const double e2 = std::abs(integrate(build_sphere_rule(3, c, 1.0, 2), f) - exact);
  const double e4 = std::abs(integrate(build_sphere_rule(3, c, 1.0, 4), f) - exact);
  const double e8 = std::abs(integrate(build_sphere_rule(3, c, 1.0, 8), f) - exact);
  CHECK(std::log2(e2 / e4) >= 2.0);
  CHECK(std::log2(e4 / e8) >= 2.0);
}

TEST_CASE("graded rule resolves a bubble far below the ball radius") {
  const int n = 3;
  const double delta = 1e-12;
  const ScalarField u = aubin_talenti(n, delta);
  RuleOptions opt;
  opt.graded = true;
  opt.graded_min_radius = 1e-16;
  opt.angular_order = 4;
  const double e = energy_in(u, build_ball_rule(n, Point(n, 0.0), 1.0, opt));
  CHECK(e == doctest::Approx(standard_ball_energy(n, 1.0 / delta)).epsilon(1e-8));
}

TEST_CASE("bubble tail bound dominates the true tail") {
  for (int n = 3; n <= 6; ++n)
    for (double R : {2.0, 10.0, 100.0}) {
      const double tail = bubble_constant(n).value - standard_ball_energy(n, R);
      CAPTURE(n);
      CAPTURE(R);
      CHECK(tail <= bubble_tail_bound(n, 1.0, R));
      CHECK(tail > 0.2 * bubble_tail_bound(n, 1.0, R));
    }
}

TEST_CASE("radial grids") {
  const RadialGrid g = RadialGrid::log_spaced(0.05, 5.0, 40);
  CHECK(g.radii.size() == 40);
  CHECK(g.radii.front() == 0.05);
  CHECK(g.radii.back() == 5.0);
  CHECK_NOTHROW(g.validate());
  CHECK(RadialGrid::log_spaced(0.05, 5.0, 40, 1).radii.size() == 79);
  RadialGrid bad{{0.1, 0.1}, 0};
  CHECK_THROWS_AS(bad.validate(), InputError);
  CHECK_THROWS_AS(RadialGrid::log_spaced(0.0, 1.0, 4), InputError);
}

TEST_CASE("invalid regions and non-finite integrands are rejected") {
  CHECK_THROWS_AS(build_ball_rule(2, Point(2, 0.0), 1.0, 4), InputError);
  CHECK_THROWS_AS(build_ball_rule(3, Point(3, 0.0), -1.0, 4), InputError);
  CHECK_THROWS_AS(build_sphere_rule(3, Point(3, 0.0), 0.0, 4), InputError);
  CHECK_THROWS_AS(build_annulus_rule(3, Point(3, 0.0), 2.0, 1.0, {}), InputError);
  const QuadratureRule rule = build_ball_rule(3, Point(3, 0.0), 1.0, 4);
  try {
    integrate(rule, [](std::span<const double> x) { return x[0] > 0.5 ? NAN : 1.0; });
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(e.node()[0] > 0.5);
  }
}

TEST_CASE("integration is bit-identical across thread counts") {
  RuleOptions opt;
  opt.radial_points = 40;
  const QuadratureRule rule = build_ball_rule(4, Point(4, 0.1), 1.0, opt);
  const auto f = [](std::span<const double> x) { return std::sin(3 * x[0]) + x[1] * x[3]; };
  parallel::set_threads(1);
  const double a = integrate(rule, f);
  parallel::set_threads(3);
  const double b = integrate(rule, f);
  parallel::set_threads(1);
  CHECK(rule.size() > 4 * detail::kChunk);
  CHECK(a == b);
}
