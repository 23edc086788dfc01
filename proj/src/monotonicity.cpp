#include "bubblelab/monotonicity.hpp"

#include <algorithm>

#include "bubblelab/csv.hpp"

namespace bubblelab {

std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::A: return "A";
    case Formulation::B: return "B";
    case Formulation::C: return "C";
  }
  return "?";
}

double EnergyComponents::energy(Formulation f, int n) const {
  const double r = radius;
  const double P = ball_potential, D = ball_dirichlet, S = sphere_mass, dS = sphere_mass_rate;
  switch (f) {
    case Formulation::A: return P / n + 0.25 * dS - 0.25 * S / r;
    case Formulation::B: return 0.5 * D - (n - 2.0) / (2.0 * n) * P + (n - 2.0) / (4.0 * r) * S;
    case Formulation::C:
      return (D + (n - 2.0) / n * P) / (2.0 * (n - 1.0)) + (n - 2.0) / (4.0 * (n - 1.0)) * dS;
  }
  return 0.0;
}

namespace {

double sphere_mass(const ScalarField& u, const Point& x, double r, const RuleOptions& options) {
  const QuadratureRule rule = build_sphere_rule(u.dimension(), x, r, options);
  return integrate(rule, [&](std::span<const double> y) {
    const double v = u(y);
    return v * v;
  });
}

// Points the polar axis at the bubble closest to x in units of its scale,
// so a lone off-centre bubble is resolved by the polar Gauss rule alone.
RuleOptions aligned(const ScalarField& u, const Point& x, RuleOptions options) {
  const std::vector<Bubble>* bubbles = u.bubbles();
  if (!options.axis.empty() || !bubbles || bubbles->empty()) return options;
  const Bubble* best = nullptr;
  double best_d = 0.0;
  for (const Bubble& b : *bubbles) {
    const double d = distance(x, b.center) / b.scale;
    if (!best || d < best_d) best = &b, best_d = d;
  }
  if (best_d * best->scale <= 1e-12 * (1.0 + std::sqrt(norm2(x)))) return options;
  options.axis.resize(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) options.axis[d] = best->center[d] - x[d];
  // the peak seen from x narrows in the polar angle as x moves away
  if (options.polar_order <= 0) {
    const int base = options.angular_order > 0 ? options.angular_order
                                               : default_angular_order(u.dimension());
    options.polar_order = std::max(base, std::min(64, 8 + static_cast<int>(std::ceil(12.0 * best_d))));
  }
  // one bubble is axisymmetric about the axis: constants on the sub-sphere suffice
  if (bubbles->size() == 1 && options.angular_order <= 0) options.angular_order = 1;
  return options;
}

double full_energy(const ScalarField& u, const QuadratureRule& rule) {
  const int n = u.dimension();
  return integrate(rule, [&](std::span<const double> y) {
    std::vector<double> g(n);
    gradient_into(u, y, g);
    return norm2(g) + critical_power(u(y), n);
  });
}

}  // namespace

EnergyComponents energy_components(const ScalarField& u, const Point& x, double r,
                                   const MonotonicityOptions& options) {
  require(r > 0.0 && std::isfinite(r), "E_u needs r > 0");
  require(options.derivative_step > 0.0 && options.derivative_step < 1.0,
          "derivative_step must lie in (0, 1)");
  const int n = u.dimension();
  const RuleOptions rule = aligned(u, x, options.rule);
  const QuadratureRule ball = build_ball_rule(n, x, r, rule);
  const auto vol = integrate_many<3>(ball, [&](std::span<const double> y, std::array<double, 3>& out) {
    std::vector<double> g(n);
    gradient_into(u, y, g);
    const double v = u(y);
    out[0] = critical_power(v, n);
    out[1] = norm2(g);
    out[2] = v * v;
  });
  const double rho = r * options.derivative_step;
  EnergyComponents c;
  c.radius = r;
  c.ball_potential = vol[0];
  c.ball_dirichlet = vol[1];
  c.ball_mass = vol[2];
  c.sphere_mass = sphere_mass(u, x, r, rule);
  c.sphere_mass_rate =
      (sphere_mass(u, x, r + rho, rule) - sphere_mass(u, x, r - rho, rule)) / (2.0 * rho);
  return c;
}

double energy_E(const ScalarField& u, const Point& x, double r, Formulation formulation,
                const MonotonicityOptions& options) {
  return energy_components(u, x, r, options).energy(formulation, u.dimension());
}

std::vector<DisplayVariant> printed_display_variants(const EnergyComponents& c, int n) {
  const double r = c.radius;
  const double P = c.ball_potential, D = c.ball_dirichlet, S = c.sphere_mass;
  const double dS = c.sphere_mass_rate, V = c.ball_mass;
  return {
      {"derivative_display", P + dS + S / r},
      {"mass_sum_printed", (P + S + V / r) / n},
      {"mass_bracket", (P + dS - S / r) / n},
      {"halved_potential", 0.5 * D - (n - 2.0) / (4.0 * n) * P + (n - 2.0) / (4.0 * r) * S},
      {"quarter_form", c.energy(Formulation::A, n)},
      {"closed_form", c.energy(Formulation::B, n)},
      {"two_n_minus_two_form", c.energy(Formulation::C, n)},
  };
}

MonotonicityProfile profile(const ScalarField& u, const Point& x, const RadialGrid& radii,
                            const MonotonicityOptions& options) {
  radii.validate();
  MonotonicityProfile p;
  p.center = x;
  p.radii = radii;
  const int n = u.dimension();
  for (double r : radii.radii) {
    const EnergyComponents c = energy_components(u, x, r, options);
    p.values.push_back(c.energy(Formulation::B, n));
    p.values_a.push_back(c.energy(Formulation::A, n));
    p.values_c.push_back(c.energy(Formulation::C, n));
    p.components.push_back(c);
  }
  return p;
}

namespace {
double default_slack(const MonotonicityProfile& p, double slack) {
  if (slack >= 0.0) return slack;
  double m = 0.0;
  for (double v : p.values) m = std::max(m, std::abs(v));
  return 1e-6 * m;
}
}  // namespace

CheckReport check_monotone(const MonotonicityProfile& p, double slack) {
  CheckReport rep;
  rep.slack = default_slack(p, slack);
  for (std::size_t i = 0; i + 1 < p.values.size(); ++i) {
    const double drop = p.values[i] - p.values[i + 1];
    if (drop > rep.slack) rep.violations.push_back({i, p.radii.radii[i + 1], drop});
  }
  return rep;
}

CheckReport check_positive(const MonotonicityProfile& p, double slack) {
  CheckReport rep;
  rep.slack = default_slack(p, slack);
  for (std::size_t i = 0; i < p.values.size(); ++i)
    if (p.values[i] < -rep.slack) rep.violations.push_back({i, p.radii.radii[i], -p.values[i]});
  return rep;
}

CheckReport check_integral_mean(const MonotonicityProfile& p, double slack) {
  CheckReport rep;
  rep.slack = default_slack(p, slack);
  double integral = 0.0, prev_r = 0.0, prev_e = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double r = p.radii.radii[i];
    integral += 0.5 * (r - prev_r) * (p.values[i] + prev_e);
    prev_r = r;
    prev_e = p.values[i];
    const double excess = integral / r - p.values[i];
    if (excess > rep.slack) rep.violations.push_back({i, r, excess});
  }
  return rep;
}

void write_profile_csv(const std::string& path, const MonotonicityProfile& p, int n) {
  (void)n;
  CsvWriter out(path, {"r", "E", "term_volume", "term_boundary_derivative", "term_boundary_over_r"});
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const auto& c = p.components[i];
    out.row(std::vector<double>{c.radius, p.values[i], c.ball_potential, c.sphere_mass_rate,
                                c.sphere_mass / c.radius});
  }
}

EnergyBound energy_bound_check(const ScalarField& u, const Point& x, double r, double r0,
                               const MonotonicityOptions& options) {
  require(r > 0.0 && r < 0.5 * r0, "energy bound needs 0 < r < r0/2");
  EnergyBound b;
  b.lhs = full_energy(u, build_ball_rule(u.dimension(), x, r, options.rule));
  b.energy = energy_E(u, x, r, Formulation::B, options);
  if (b.lhs == 0.0 && b.energy == 0.0) return b;
  if (b.energy <= 0.0) {
    b.degenerate = true;
    b.ratio = INFINITY;
    return b;
  }
  b.ratio = b.lhs / b.energy;
  return b;
}

RegularityReport eps_regularity_check(const ScalarField& u, const Point& x0, double r0, double r,
                                      double epsilon, const MonotonicityOptions& options) {
  require(r > 0.0 && r < r0, "epsilon-regularity needs 0 < r < r0");
  require(epsilon > 0.0, "epsilon must be positive");
  const int n = u.dimension();
  RegularityReport rep;
  rep.center = x0;
  rep.r0 = r0;
  rep.r = r;
  rep.epsilon = epsilon;
  rep.energy = full_energy(u, build_ball_rule(n, x0, r0, options.rule));
  rep.applicable = rep.energy <= epsilon;
  if (!rep.applicable) return rep;
  RuleOptions sample;
  sample.radial_points = 24;
  sample.angular_order = options.rule.angular_order;
  const QuadratureRule probe = build_ball_rule(n, x0, 0.5 * r, sample);
  double sup = std::abs(u(x0));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < probe.size(); ++i) {
    probe.node(i, y);
    sup = std::max(sup, std::abs(u(y)));
  }
  rep.sup_abs = sup;
  rep.implied_constant = sup * std::pow(r, 0.5 * (n - 2));
  return rep;
}

bool implied_constant_trend(std::vector<RegularityReport> reports) {
  std::erase_if(reports, [](const RegularityReport& r) { return !r.applicable; });
  std::sort(reports.begin(), reports.end(),
            [](const auto& a, const auto& b) { return a.energy < b.energy; });
  for (std::size_t i = 1; i < reports.size(); ++i)
    if (reports[i].implied_constant < reports[i - 1].implied_constant) return false;
  return true;
}

}  // namespace bubblelab
