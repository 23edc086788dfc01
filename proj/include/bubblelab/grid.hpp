#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "bubblelab/common.hpp"

namespace bubblelab {

/// Nodes and weights of a one-dimensional Gauss rule.
struct GaussRule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// m-point Gauss-Legendre rule mapped to [a, b].
GaussRule1D gauss_legendre(int m, double a, double b);

/// m-point Gauss rule on [-1, 1] for the weight (1 - t^2)^alpha (Gegenbauer
/// case of Gauss-Jacobi), computed by Golub-Welsch.
GaussRule1D gauss_jacobi_symmetric(int m, double alpha);

/// Product rule on the unit sphere S^{n-1}. Built recursively: a point is
/// (t, sqrt(1 - t^2) w) with w on S^{n-2}, measure (1-t^2)^{(n-3)/2} dt dw;
/// the circle S^1 uses the 2*order-point trapezoid rule. Exact for
/// polynomials of degree < 2*order.
struct UnitSphereRule {
  int dimension = 0;
  int order = 0;
  std::vector<double> nodes;  // flat, size() * dimension
  std::vector<double> weights;
  std::size_t size() const { return weights.size(); }
};

/// Cached construction; rules are immutable and shared. polar_order sets the
/// outermost polar factor only (<= 0 means order).
std::shared_ptr<const UnitSphereRule> unit_sphere_rule(int n, int order, int polar_order = 0);

/// Angular order used when a caller passes order <= 0.
int default_angular_order(int n);

enum class RegionKind { Ball, Sphere, Annulus };

std::string to_string(RegionKind kind);

/// Radial discretisation for ball and annulus rules.
///
/// Uniform: one Gauss-Legendre panel of `radial_points` nodes on
/// [inner, outer]. Graded: panels [q^{-j-1} R, q^{-j} R] shrinking
/// geometrically with ratio `graded_ratio` down to `graded_min_radius`,
/// plus a final panel touching the inner radius, each with `panel_points`
/// nodes. Graded rules resolve fields concentrated at the centre at any
/// scale above graded_min_radius.
struct RuleOptions {
  int radial_points = 64;
  int angular_order = 0;
  bool graded = false;
  double graded_min_radius = 1e-30;
  double graded_ratio = 2.0;
  int panel_points = 8;
  /// Nodes of the outermost polar factor (0 = angular_order).
  int polar_order = 0;
  /// Polar axis of the sphere rule; empty keeps e_1.
  Point axis;
};

/// Sphere rule described by the angular part of `options`. A nonempty axis
/// reflects the cached rule so that its polar axis points along it.
std::shared_ptr<const UnitSphereRule> sphere_rule_for(int n, const RuleOptions& options);

/// Product quadrature over a ball, sphere or annulus in R^n. Stored as
/// radial shells x a shared unit-sphere rule; nodes are generated on demand.
class QuadratureRule {
 public:
  QuadratureRule(RegionKind kind, Point center, double inner, double outer,
                 std::vector<double> shell_radii, std::vector<double> shell_weights,
                 std::shared_ptr<const UnitSphereRule> sphere);

  int dimension() const { return static_cast<int>(center_.size()); }
  RegionKind kind() const { return kind_; }
  const Point& center() const { return center_; }
  double inner_radius() const { return inner_; }
  double outer_radius() const { return outer_; }

  std::size_t shells() const { return shell_radii_.size(); }
  std::size_t shell_size() const { return sphere_->size(); }
  std::size_t size() const { return shells() * shell_size(); }

  void node(std::size_t i, std::span<double> out) const;
  double weight(std::size_t i) const;
  Point node(std::size_t i) const;

  /// Exact measure of the region (volume, or area for spheres).
  double measure() const;
  double weight_sum() const;

  /// True when the ball/sphere B(c, rad) lies inside the region's outer ball.
  bool contains_ball(std::span<const double> c, double rad) const;

 private:
  RegionKind kind_;
  Point center_;
  double inner_;
  double outer_;
  std::vector<double> shell_radii_;
  std::vector<double> shell_weights_;
  std::shared_ptr<const UnitSphereRule> sphere_;
};

QuadratureRule build_ball_rule(int n, const Point& center, double radius, int order);
QuadratureRule build_ball_rule(int n, const Point& center, double radius,
                               const RuleOptions& options);
QuadratureRule build_sphere_rule(int n, const Point& center, double radius, int order);
QuadratureRule build_sphere_rule(int n, const Point& center, double radius,
                                 const RuleOptions& options);
QuadratureRule build_annulus_rule(int n, const Point& center, double inner, double outer,
                                  const RuleOptions& options);

/// Increasing radii for profiles and sweeps.
struct RadialGrid {
  std::vector<double> radii;
  int refinement = 0;

  /// count log-spaced radii in [a, b]; refinement doubles the point density.
  static RadialGrid log_spaced(double a, double b, int count, int refinement = 0);
  void validate() const;
};

/// Upper bound for the energy (|grad U|^2 + |U|^{2n/(n-2)}) of a bubble of
/// scale `scale` outside B(center, radius), from the closed-form decay.
double bubble_tail_bound(int n, double scale, double radius);

namespace detail {
constexpr std::size_t kChunk = 2048;

[[noreturn]] void throw_non_finite(const QuadratureRule& rule, std::size_t i, double value);
}  // namespace detail

/// Sums w_i f(x_i) for K integrands at once. f(x, out) fills out[0..K).
/// Chunking is fixed, partial sums are combined pairwise, so the result is
/// bit-identical for every thread count.
template <std::size_t K, class F>
std::array<double, K> integrate_many(const QuadratureRule& rule, F&& f) {
  const std::size_t total = rule.size();
  const std::size_t chunks = (total + detail::kChunk - 1) / detail::kChunk;
  std::vector<std::array<double, K>> partial(chunks);
  const int n = rule.dimension();
  parallel::for_each_chunk(chunks, [&](std::size_t c) {
    const std::size_t lo = c * detail::kChunk;
    const std::size_t hi = std::min(total, lo + detail::kChunk);
    std::vector<double> x(n);
    std::array<std::vector<double>, K> terms;
    for (auto& t : terms) t.resize(hi - lo);
    std::array<double, K> val{};
    for (std::size_t i = lo; i < hi; ++i) {
      rule.node(i, x);
      f(std::span<const double>(x), val);
      const double w = rule.weight(i);
      for (std::size_t k = 0; k < K; ++k) {
        if (!std::isfinite(val[k])) detail::throw_non_finite(rule, i, val[k]);
        terms[k][i - lo] = w * val[k];
      }
    }
    for (std::size_t k = 0; k < K; ++k) partial[c][k] = pairwise_sum(terms[k]);
  });
  std::array<double, K> out{};
  std::vector<double> column(chunks);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t c = 0; c < chunks; ++c) column[c] = partial[c][k];
    out[k] = pairwise_sum(column);
  }
  return out;
}

template <class F>
double integrate(const QuadratureRule& rule, F&& f) {
  return integrate_many<1>(rule, [&](std::span<const double> x, std::array<double, 1>& out) {
    out[0] = f(x);
  })[0];
}

}  // namespace bubblelab
