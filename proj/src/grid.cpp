#include "bubblelab/grid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

namespace bubblelab {

namespace {

GaussRule1D golub_welsch(int m, double alpha) {
  require(m >= 1, "Gauss rule needs at least one node");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sub(std::max(m - 1, 0));
  for (int k = 1; k < m; ++k) {
    const double s = 2.0 * k + 2.0 * alpha;
    sub[k - 1] = std::sqrt(k * (k + 2.0 * alpha) / (s * s - 1.0));
  }
  const double mu0 = std::sqrt(std::numbers::pi) * std::tgamma(alpha + 1.0) /
                     std::tgamma(alpha + 1.5);
  GaussRule1D rule;
  rule.nodes.resize(m);
  rule.weights.resize(m);
  if (m == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = mu0;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  for (int i = 0; i < m; ++i) {
    rule.nodes[i] = solver.eigenvalues()[i];
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  // Eigenvalues come back sorted; enforce exact symmetry about 0.
  for (int i = 0; i < m / 2; ++i) {
    const int j = m - 1 - i;
    const double t = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -t;
    rule.nodes[j] = t;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (m % 2 == 1) rule.nodes[m / 2] = 0.0;
  return rule;
}

UnitSphereRule build_unit_sphere(int d, int order, int polar_order) {
  UnitSphereRule rule;
  rule.dimension = d;
  rule.order = order;
  if (d == 2) {
    const int m = 2 * polar_order;
    for (int j = 0; j < m; ++j) {
      const double th = 2.0 * std::numbers::pi * (j + 0.5) / m;
      rule.nodes.push_back(std::cos(th));
      rule.nodes.push_back(std::sin(th));
      rule.weights.push_back(2.0 * std::numbers::pi / m);
    }
    return rule;
  }
  const GaussRule1D polar = golub_welsch(polar_order, 0.5 * (d - 3));
  const UnitSphereRule sub = build_unit_sphere(d - 1, order, order);
  rule.nodes.reserve(polar.nodes.size() * sub.size() * d);
  for (std::size_t i = 0; i < polar.nodes.size(); ++i) {
    const double t = polar.nodes[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
    for (std::size_t j = 0; j < sub.size(); ++j) {
      rule.nodes.push_back(t);
      for (int k = 0; k < d - 1; ++k) rule.nodes.push_back(s * sub.nodes[j * (d - 1) + k]);
      rule.weights.push_back(polar.weights[i] * sub.weights[j]);
    }
  }
  return rule;
}

void append_panel(std::vector<double>& r, std::vector<double>& w, int n, int points,
                  double a, double b) {
  const GaussRule1D gl = gauss_legendre(points, a, b);
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    r.push_back(gl.nodes[i]);
    w.push_back(gl.weights[i] * std::pow(gl.nodes[i], n - 1));
  }
}

void radial_shells(int n, double inner, double outer, const RuleOptions& opt,
                   std::vector<double>& r, std::vector<double>& w) {
  if (!opt.graded) {
    require(opt.radial_points >= 1, "radial_points must be >= 1");
    append_panel(r, w, n, opt.radial_points, inner, outer);
    return;
  }
  require(opt.graded_ratio > 1.0, "graded_ratio must exceed 1");
  require(opt.graded_min_radius > 0.0, "graded_min_radius must be positive");
  require(opt.panel_points >= 1, "panel_points must be >= 1");
  std::vector<double> edges{outer};
  const double floor = std::max(inner, opt.graded_min_radius);
  while (edges.back() / opt.graded_ratio > floor) edges.push_back(edges.back() / opt.graded_ratio);
  edges.push_back(inner);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    append_panel(r, w, n, opt.panel_points, edges[i], edges[i + 1]);
}

void check_region(int n, const Point& center, double radius) {
  require_dimension(n);
  require(static_cast<int>(center.size()) == n, "center dimension mismatch");
  require(radius > 0.0 && std::isfinite(radius), "radius must be positive and finite");
}

}  // namespace

GaussRule1D gauss_legendre(int m, double a, double b) {
  GaussRule1D ref = golub_welsch(m, 0.0);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < ref.nodes.size(); ++i) {
    ref.nodes[i] = mid + half * ref.nodes[i];
    ref.weights[i] *= half;
  }
  return ref;
}

GaussRule1D gauss_jacobi_symmetric(int m, double alpha) {
  require(alpha > -1.0, "Gauss-Jacobi exponent must exceed -1");
  return golub_welsch(m, alpha);
}

int default_angular_order(int n) {
  switch (n) {
    case 3: return 24;
    case 4: return 12;
    case 5: return 8;
    default: return 6;
  }
}

std::shared_ptr<const UnitSphereRule> unit_sphere_rule(int n, int order, int polar_order) {
  require_dimension(n);
  if (order <= 0) order = default_angular_order(n);
  if (polar_order <= 0) polar_order = order;
  static std::mutex mutex;
  static std::map<std::tuple<int, int, int>, std::shared_ptr<const UnitSphereRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{n, order, polar_order}];
  if (!slot) slot = std::make_shared<const UnitSphereRule>(build_unit_sphere(n, order, polar_order));
  return slot;
}

std::shared_ptr<const UnitSphereRule> sphere_rule_for(int n, const RuleOptions& options) {
  const auto base = unit_sphere_rule(n, options.angular_order, options.polar_order);
  const Point& axis = options.axis;
  if (axis.empty()) return base;
  require(static_cast<int>(axis.size()) == n, "rule axis has the wrong dimension");
  const double len = std::sqrt(norm2(axis));
  require(len > 0.0 && std::isfinite(len), "rule axis must be a nonzero finite vector");
  // v = e_1 - a maps e_1 to a under I - 2 v v^T / |v|^2
  Point v(n);
  for (int d = 0; d < n; ++d) v[d] = -axis[d] / len;
  v[0] += 1.0;
  const double vv = norm2(v);
  if (vv < 1e-28) return base;
  auto rule = std::make_shared<UnitSphereRule>(*base);
  for (std::size_t k = 0; k < rule->size(); ++k) {
    double* w = rule->nodes.data() + k * n;
    double dot = 0.0;
    for (int d = 0; d < n; ++d) dot += v[d] * w[d];
    const double c = 2.0 * dot / vv;
    for (int d = 0; d < n; ++d) w[d] -= c * v[d];
  }
  return rule;
}

std::string to_string(RegionKind kind) {
  switch (kind) {
    case RegionKind::Ball: return "ball";
    case RegionKind::Sphere: return "sphere";
    case RegionKind::Annulus: return "annulus";
  }
  return "unknown";
}

QuadratureRule::QuadratureRule(RegionKind kind, Point center, double inner, double outer,
                               std::vector<double> shell_radii,
                               std::vector<double> shell_weights,
                               std::shared_ptr<const UnitSphereRule> sphere)
    : kind_(kind),
      center_(std::move(center)),
      inner_(inner),
      outer_(outer),
      shell_radii_(std::move(shell_radii)),
      shell_weights_(std::move(shell_weights)),
      sphere_(std::move(sphere)) {}

void QuadratureRule::node(std::size_t i, std::span<double> out) const {
  const std::size_t a = sphere_->size();
  const std::size_t shell = i / a;
  const std::size_t k = i - shell * a;
  const double r = shell_radii_[shell];
  const int n = dimension();
  const double* w = sphere_->nodes.data() + k * n;
  for (int d = 0; d < n; ++d) out[d] = center_[d] + r * w[d];
}

Point QuadratureRule::node(std::size_t i) const {
  Point x(dimension());
  node(i, x);
  return x;
}

double QuadratureRule::weight(std::size_t i) const {
  const std::size_t a = sphere_->size();
  const std::size_t shell = i / a;
  return shell_weights_[shell] * sphere_->weights[i - shell * a];
}

double QuadratureRule::measure() const {
  const int n = dimension();
  switch (kind_) {
    case RegionKind::Sphere: return sphere_area(n) * std::pow(outer_, n - 1);
    case RegionKind::Ball: return unit_ball_volume(n) * std::pow(outer_, n);
    case RegionKind::Annulus:
      return unit_ball_volume(n) * (std::pow(outer_, n) - std::pow(inner_, n));
  }
  return 0.0;
}

double QuadratureRule::weight_sum() const {
  std::vector<double> per_shell(shells());
  const double angular = pairwise_sum(sphere_->weights);
  for (std::size_t s = 0; s < shells(); ++s) per_shell[s] = shell_weights_[s] * angular;
  return pairwise_sum(per_shell);
}

bool QuadratureRule::contains_ball(std::span<const double> c, double rad) const {
  return distance(c, center_) + rad <= outer_ * (1.0 + 1e-12);
}

QuadratureRule build_ball_rule(int n, const Point& center, double radius, int order) {
  RuleOptions opt;
  opt.angular_order = order;
  return build_ball_rule(n, center, radius, opt);
}

QuadratureRule build_ball_rule(int n, const Point& center, double radius,
                               const RuleOptions& options) {
  check_region(n, center, radius);
  std::vector<double> r, w;
  radial_shells(n, 0.0, radius, options, r, w);
  return QuadratureRule(RegionKind::Ball, center, 0.0, radius, std::move(r), std::move(w),
                        sphere_rule_for(n, options));
}

QuadratureRule build_sphere_rule(int n, const Point& center, double radius, int order) {
  check_region(n, center, radius);
  return QuadratureRule(RegionKind::Sphere, center, radius, radius, {radius},
                        {std::pow(radius, n - 1)}, unit_sphere_rule(n, order));
}

QuadratureRule build_sphere_rule(int n, const Point& center, double radius,
                                 const RuleOptions& options) {
  check_region(n, center, radius);
  return QuadratureRule(RegionKind::Sphere, center, radius, radius, {radius},
                        {std::pow(radius, n - 1)},
                        sphere_rule_for(n, options));
}

QuadratureRule build_annulus_rule(int n, const Point& center, double inner, double outer,
                                  const RuleOptions& options) {
  check_region(n, center, outer);
  require(inner >= 0.0 && inner < outer, "annulus needs 0 <= inner < outer");
  std::vector<double> r, w;
  radial_shells(n, inner, outer, options, r, w);
  return QuadratureRule(RegionKind::Annulus, center, inner, outer, std::move(r), std::move(w),
                        sphere_rule_for(n, options));
}

RadialGrid RadialGrid::log_spaced(double a, double b, int count, int refinement) {
  require(a > 0.0 && b > a, "log_spaced needs 0 < a < b");
  require(count >= 2 && refinement >= 0, "log_spaced needs count >= 2");
  const int total = (count - 1) * (1 << refinement) + 1;
  RadialGrid grid;
  grid.refinement = refinement;
  grid.radii.resize(total);
  const double la = std::log(a), lb = std::log(b);
  for (int i = 0; i < total; ++i) grid.radii[i] = std::exp(la + (lb - la) * i / (total - 1));
  grid.radii.front() = a;
  grid.radii.back() = b;
  return grid;
}

void RadialGrid::validate() const {
  require(!radii.empty(), "radial grid is empty");
  require(radii.front() > 0.0, "radial grid must start above 0");
  for (std::size_t i = 1; i < radii.size(); ++i)
    require(radii[i] > radii[i - 1], "radial grid must be strictly increasing");
}

double bubble_tail_bound(int n, double scale, double radius) {
  require_dimension(n);
  // |grad U_d|^2 <= (n-2)^2 c^2 d^{n-2} r^{2-2n},  U_d^{p*} <= c^{p*} d^n r^{-2n}
  const double c2 = std::pow(n * (n - 2.0), 0.5 * (n - 2));
  const double cp = std::pow(n * (n - 2.0), 0.5 * n);
  const double grad = (n - 2.0) * c2 * std::pow(scale / radius, n - 2);
  const double pot = cp * std::pow(scale / radius, n) / n;
  return sphere_area(n) * (grad + pot);
}

namespace detail {
void throw_non_finite(const QuadratureRule& rule, std::size_t i, double value) {
  const Point x = rule.node(i);
  std::ostringstream os;
  os << "non-finite integrand value " << value << " at node (";
  for (std::size_t d = 0; d < x.size(); ++d) os << (d ? ", " : "") << x[d];
  os << ")";
  throw NonFiniteError(os.str(), x);
}
}  // namespace detail

}  // namespace bubblelab
