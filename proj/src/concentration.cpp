#include "bubblelab/concentration.hpp"

#include <Eigen/Dense>

#include <algorithm>

namespace bubblelab {

namespace {

double profile_constant(int n) { return bubble_amplitude(n); }

int concentration_angular_order(int n) {
  switch (n) {
    case 3: return 8;
    case 4: return 6;
    default: return 4;
  }
}

/// |S^{n-1}| int_0^R f(r) r^{n-1} dr via r = e^s, unit-width Gauss panels.
template <class F>
double radial_integral(int n, double R, F&& f) {
  const double s_lo = std::log(R) - 60.0;
  const double s_hi = std::log(R);
  std::vector<double> terms;
  const int panels = static_cast<int>(std::ceil(s_hi - s_lo));
  const double width = (s_hi - s_lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const GaussRule1D gl = gauss_legendre(12, s_lo + p * width, s_lo + (p + 1) * width);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double r = std::exp(gl.nodes[i]);
      terms.push_back(gl.weights[i] * f(r) * std::pow(r, n));
    }
  }
  return sphere_area(n) * pairwise_sum(terms);
}

struct StandardNorms {
  double dirichlet = 0.0;  // int |grad U|^2
  double potential = 0.0;  // int U^{p*}
  double mass = 0.0;       // int U^2
};

StandardNorms standard_norms(int n, double R) {
  const double c = profile_constant(n);
  StandardNorms s;
  s.dirichlet = radial_integral(n, R, [&](double r) {
    return (n - 2.0) * (n - 2.0) * c * c * r * r * std::pow(1.0 + r * r, -n);
  });
  s.potential = radial_integral(n, R, [&](double r) {
    return std::pow(c, critical_exponent(n)) * std::pow(1.0 + r * r, -n);
  });
  s.mass = radial_integral(n, R, [&](double r) { return c * c * std::pow(1.0 + r * r, 2.0 - n); });
  return s;
}

double finest_scale(const ScalarField& u) {
  double s = INFINITY;
  if (const auto* list = u.bubbles())
    for (const auto& b : *list) s = std::min(s, b.scale);
  return s;
}

RuleOptions graded_options(const ScalarField& u, double r, int angular_order) {
  RuleOptions opt;
  opt.graded = true;
  opt.graded_ratio = 2.0;
  opt.panel_points = 8;
  opt.angular_order = angular_order > 0 ? angular_order : concentration_angular_order(u.dimension());
  const double s = finest_scale(u);
  opt.graded_min_radius = std::isfinite(s) ? std::min(1e-3 * s, 1e-3 * r) : 1e-6 * r;
  return opt;
}

double density_value(EnergyDensity d, double grad2, double pot, int n) {
  if (d == EnergyDensity::Full) return grad2 + pot;
  return 0.5 * grad2 + (n - 2.0) / (2.0 * n) * pot;
}

/// E = D/2 - (n-2)/(2n) P + (n-2)/(4r) S on the rule's ball and sphere.
double monotone_energy(const ScalarField& u, const QuadratureRule& ball,
                       const QuadratureRule& sphere) {
  const int n = u.dimension();
  const auto dp = integrate_many<2>(ball, [&](std::span<const double> y, std::array<double, 2>& out) {
    std::vector<double> g(n);
    gradient_into(u, y, g);
    out[0] = norm2(g);
    out[1] = critical_power(u(y), n);
  });
  const double S = integrate(sphere, [&](std::span<const double> y) {
    const double v = u(y);
    return v * v;
  });
  const double r = sphere.outer_radius();
  return 0.5 * dp[0] - (n - 2.0) / (2.0 * n) * dp[1] + (n - 2.0) / (4.0 * r) * S;
}

double annulus_energy(const ScalarField& v, double a, double b, int order, int points) {
  RuleOptions opt;
  opt.radial_points = points;
  opt.angular_order = order;
  const QuadratureRule rule = build_annulus_rule(v.dimension(), Point(v.dimension(), 0.0), a, b, opt);
  return energy_in(v, rule, EnergyDensity::Full);
}

/// Radius where the full energy of v (centred at 0) inside B_rho reaches target.
double half_threshold_radius(const ScalarField& v, double r_max, double target) {
  const int n = v.dimension();
  const int order = concentration_angular_order(n);
  const double s = finest_scale(v);
  const double floor = std::isfinite(s) ? 1e-3 * s : 1e-8 * r_max;
  std::vector<double> edges{r_max};
  while (edges.back() / 2.0 > floor) edges.push_back(edges.back() / 2.0);
  std::reverse(edges.begin(), edges.end());
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double e = annulus_energy(v, edges[i], edges[i + 1], order, 8);
    if (cum + e >= target) {
      double lo = std::log(edges[i]), hi = std::log(edges[i + 1]);
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double val = cum + annulus_energy(v, edges[i], std::exp(mid), order, 8);
        (val >= target ? hi : lo) = mid;
      }
      return std::exp(0.5 * (lo + hi));
    }
    cum += e;
  }
  return r_max;
}

struct FitResult {
  double scale = 1.0;
  Point center;
  int sign = 1;
  double misfit = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Least squares of sign * s^{-(n-2)/2} U((z - c)/s) + b against v on
/// B(0, 5). The offset b absorbs the nearly constant trace of coarser
/// bubbles; the origin is not sampled, since leftovers of finer extractions
/// live there.
FitResult fit_bubble(const ScalarField& v, double s0, int max_iter, double tol) {
  const int n = v.dimension();
  const double c = profile_constant(n);
  const double h = 0.5 * (n - 2);
  RuleOptions opt;
  opt.radial_points = 10;
  opt.angular_order = n == 3 ? 6 : 3;
  const QuadratureRule samples = build_ball_rule(n, Point(n, 0.0), 5.0, opt);
  const std::size_t m = samples.size();
  const int np = n + 2;  // log s, c_1..c_n, b
  Eigen::MatrixXd Z(m, n);
  Eigen::VectorXd data(m);
  std::vector<double> z(n);
  for (std::size_t i = 0; i < m; ++i) {
    samples.node(i, z);
    for (int d = 0; d < n; ++d) Z(i, d) = z[d];
    data[i] = v(z);
  }
  FitResult fit;
  {
    Eigen::Index arg = 0;
    data.cwiseAbs().maxCoeff(&arg);
    fit.sign = data[arg] >= 0 ? 1 : -1;
  }
  Eigen::VectorXd p = Eigen::VectorXd::Zero(np);
  p[0] = std::log(s0);
  auto evaluate = [&](const Eigen::VectorXd& q, Eigen::VectorXd& res, Eigen::MatrixXd* J) {
    const double s = std::exp(q[0]);
    res.resize(m);
    if (J) J->resize(m, np);
    for (std::size_t i = 0; i < m; ++i) {
      double d2 = 0.0;
      for (int d = 0; d < n; ++d) {
        const double t = Z(i, d) - q[d + 1];
        d2 += t * t;
      }
      const double qq = s * s + d2;
      const double model = fit.sign * c * std::pow(s / qq, h);
      res[i] = model + q[n + 1] - data[i];
      if (J) {
        (*J)(i, 0) = model * (h - (n - 2.0) * s * s / qq);
        for (int d = 0; d < n; ++d) (*J)(i, d + 1) = model * (n - 2.0) * (Z(i, d) - q[d + 1]) / qq;
        (*J)(i, n + 1) = 1.0;
      }
    }
  };
  Eigen::VectorXd res, trial_res;
  Eigen::MatrixXd J;
  evaluate(p, res, &J);
  double cost = res.squaredNorm();
  double mu = 1e-3;
  for (int it = 1; it <= max_iter; ++it) {
    fit.iterations = it;
    const Eigen::MatrixXd A = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * res;
    Eigen::MatrixXd Am = A;
    for (int d = 0; d < np; ++d) Am(d, d) += mu * std::max(A(d, d), 1e-300);
    const Eigen::VectorXd step = Am.ldlt().solve(-g);
    if (!step.allFinite()) break;
    const Eigen::VectorXd trial = p + step;
    evaluate(trial, trial_res, nullptr);
    const double trial_cost = trial_res.squaredNorm();
    if (trial_cost <= cost) {
      p = trial;
      cost = trial_cost;
      evaluate(p, res, &J);
      mu = std::max(mu / 3.0, 1e-12);
      if (step.head(n + 1).norm() <= tol * (1.0 + p.head(n + 1).norm())) {
        fit.converged = true;
        break;
      }
    } else {
      mu *= 4.0;
      if (mu > 1e12) break;
    }
  }
  fit.scale = std::exp(p[0]);
  fit.center.assign(p.data() + 1, p.data() + 1 + n);
  const double dn = data.norm();
  fit.misfit = dn > 0.0 ? std::sqrt(cost) / dn : 0.0;
  return fit;
}

}  // namespace

double ScaleSchedule::at(int k) const { return amplitude * std::pow(base, -static_cast<double>(k)); }

std::vector<Bubble> ConcentrationSequence::bubbles(int k) const {
  require(k >= 1, "sequence index starts at 1");
  std::vector<Bubble> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back({e.center, e.schedule.at(k), e.sign});
  return out;
}

ScalarField ConcentrationSequence::field(int k) const {
  if (entries.empty()) return zero_field(dimension);
  return superpose(dimension, bubbles(k));
}

double budget_estimate(const ConcentrationSequence& seq, int k) {
  const int n = seq.dimension;
  double total = 0.0;
  for (const auto& e : seq.entries) {
    const double delta = e.schedule.at(k);
    const double reach = std::sqrt(norm2(e.center)) + seq.domain_radius;
    const StandardNorms s = standard_norms(n, reach / delta);
    total += std::sqrt(s.dirichlet) + delta * std::sqrt(s.mass) +
             std::pow(s.potential, 1.0 / critical_exponent(n));
  }
  return total;
}

ConcentrationSequence make_sequence(int n, std::vector<SequenceEntry> entries, double budget,
                                    int k_check, double domain_radius, std::string description) {
  require_dimension(n);
  require(budget > 0.0, "budget must be positive");
  require(domain_radius > 0.0, "domain radius must be positive");
  require(k_check >= 1, "k_check must be >= 1");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    require(static_cast<int>(e.center.size()) == n, "entry center dimension mismatch");
    require(e.schedule.amplitude > 0.0 && std::isfinite(e.schedule.amplitude),
            "schedule amplitude must be positive");
    require(e.schedule.base > 1.0 && std::isfinite(e.schedule.base),
            "scale schedule must decrease to 0 (base > 1)");
    require(e.sign == 1 || e.sign == -1, "entry weight must be +1 or -1");
    for (std::size_t j = 0; j < i; ++j)
      require(!(entries[j].center == e.center && entries[j].schedule.base == e.schedule.base),
              "entries sharing a center need distinct schedule bases");
  }
  ConcentrationSequence seq;
  seq.dimension = n;
  seq.entries = std::move(entries);
  seq.budget = budget;
  seq.domain_radius = domain_radius;
  seq.description = std::move(description);
  for (int k = 1; k <= k_check; ++k) {
    const double b = budget_estimate(seq, k);
    seq.measured_budget = std::max(seq.measured_budget, b);
    require(b <= budget, "budget exceeded at k = " + std::to_string(k));
  }
  return seq;
}

double energy_in(const ScalarField& u, const QuadratureRule& rule, EnergyDensity density) {
  const int n = u.dimension();
  return integrate(rule, [&](std::span<const double> y) {
    std::vector<double> g(n);
    gradient_into(u, y, g);
    return density_value(density, norm2(g), critical_power(u(y), n), n);
  });
}

double ball_energy(const ScalarField& u, const Point& x, double r, EnergyDensity density,
                   int angular_order) {
  const int n = u.dimension();
  const ScalarField v = rescale(u, x, 1.0);
  const QuadratureRule rule = build_ball_rule(n, Point(n, 0.0), r, graded_options(v, r, angular_order));
  return energy_in(v, rule, density);
}

BubbleConstant bubble_constant(int n, int points) {
  require_dimension(n);
  require(points >= 4, "bubble constant needs at least 4 points");
  const double c2 = std::pow(profile_constant(n), 2);
  // r = tan(theta): |S| c^2 [(n-2)^2 sin^{n+1} cos^{n-3} + n(n-2) sin^{n-1} cos^{n-1}]
  auto integral = [&](int m) {
    const GaussRule1D gl = gauss_legendre(m, 0.0, 0.5 * std::numbers::pi);
    std::vector<double> terms(gl.nodes.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const double s = std::sin(gl.nodes[i]), c = std::cos(gl.nodes[i]);
      terms[i] = gl.weights[i] * ((n - 2.0) * (n - 2.0) * std::pow(s, n + 1) * std::pow(c, n - 3) +
                                  n * (n - 2.0) * std::pow(s, n - 1) * std::pow(c, n - 1));
    }
    return sphere_area(n) * c2 * pairwise_sum(terms);
  };
  BubbleConstant b;
  b.dimension = n;
  b.points = 2 * points;
  const double coarse = integral(points);
  b.value = integral(2 * points);
  b.error_bound = std::max(std::abs(b.value - coarse), 4.0 * 1e-16 * b.value);
  return b;
}

double standard_ball_energy(int n, double radius) {
  require_dimension(n);
  require(radius > 0.0, "radius must be positive");
  const StandardNorms s = standard_norms(n, radius);
  return s.dirichlet + s.potential;
}

std::vector<DetectedPoint> detect_sigma(const ConcentrationSequence& seq,
                                        const DetectionOptions& options) {
  require(options.epsilon0 > 0.0, "epsilon0 must be positive");
  require(options.k_max >= 1, "k_max must be >= 1");
  require(!options.r_grid.empty(), "r_grid is empty");
  for (double r : options.r_grid) require(r > 0.0, "r_grid radii must be positive");
  require(options.lattice_spacing > 0.0, "lattice spacing must be positive");
  const int n = seq.dimension;
  std::vector<DetectedPoint> found;
  if (seq.empty()) return found;
  const double r_max = *std::max_element(options.r_grid.begin(), options.r_grid.end());
  const int k0 = (options.k_max + 1) / 2;

  std::vector<Point> declared;
  for (const auto& e : seq.entries)
    if (std::find(declared.begin(), declared.end(), e.center) == declared.end())
      declared.push_back(e.center);

  // liminf surrogate: min over k in [k0, k_max], stopping at the first miss
  auto probe = [&](const Point& x, bool graded, double& min_e) {
    min_e = INFINITY;
    for (int k = options.k_max; k >= k0; --k) {
      const ScalarField v = rescale(seq.field(k), x, 1.0);
      for (double r : options.r_grid) {
        RuleOptions opt;
        if (graded) {
          opt = graded_options(v, r, 0);
        } else {
          opt.radial_points = options.lattice_radial_points;
          opt.angular_order = options.lattice_angular_order;
        }
        const Point o(n, 0.0);
        const double e = monotone_energy(v, build_ball_rule(n, o, r, opt),
                                         build_sphere_rule(n, o, r, opt.angular_order));
        min_e = std::min(min_e, e);
        if (e < options.epsilon0) return false;
      }
    }
    return true;
  };

  std::vector<int> merged(declared.size(), 0);
  std::vector<std::pair<Point, double>> lattice_hits;
  const double R = seq.domain_radius;
  const int half = static_cast<int>(std::floor(R / options.lattice_spacing));
  std::vector<int> idx(n, -half);
  Point p(n);
  for (;;) {
    double rr = 0.0;
    for (int d = 0; d < n; ++d) {
      p[d] = idx[d] * options.lattice_spacing;
      rr += p[d] * p[d];
    }
    if (rr <= R * R * (1.0 + 1e-12)) {
      std::size_t near = declared.size();
      for (std::size_t j = 0; j < declared.size(); ++j)
        if (distance(p, declared[j]) <= 2.0 * r_max) near = j;
      if (near < declared.size()) {
        ++merged[near];
      } else {
        double e = 0.0;
        if (probe(p, false, e)) lattice_hits.emplace_back(p, e);
      }
    }
    int d = 0;
    while (d < n && ++idx[d] > half) idx[d++] = -half;
    if (d == n) break;
  }

  for (std::size_t j = 0; j < declared.size(); ++j) {
    double e = 0.0;
    if (probe(declared[j], true, e)) found.push_back({declared[j], true, merged[j], e});
  }
  // lattice-adjacent hits form one cluster, represented by its strongest node
  const double adj = options.lattice_spacing * std::sqrt(static_cast<double>(n)) * 1.000001;
  std::vector<int> cluster(lattice_hits.size(), -1);
  int clusters = 0;
  for (std::size_t i = 0; i < lattice_hits.size(); ++i) {
    if (cluster[i] >= 0) continue;
    std::vector<std::size_t> stack{i};
    cluster[i] = clusters;
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      stack.pop_back();
      for (std::size_t b = 0; b < lattice_hits.size(); ++b)
        if (cluster[b] < 0 && distance(lattice_hits[a].first, lattice_hits[b].first) <= adj) {
          cluster[b] = clusters;
          stack.push_back(b);
        }
    }
    ++clusters;
  }
  for (int c = 0; c < clusters; ++c) {
    DetectedPoint best;
    best.min_energy = -INFINITY;
    int members = 0;
    for (std::size_t i = 0; i < lattice_hits.size(); ++i) {
      if (cluster[i] != c) continue;
      ++members;
      if (lattice_hits[i].second > best.min_energy) {
        best.x = lattice_hits[i].first;
        best.min_energy = lattice_hits[i].second;
      }
    }
    best.merged_lattice_points = members - 1;
    found.push_back(best);
  }
  return found;
}

double bubble_energy_limit(const ConcentrationSequence& seq, double R, int k, std::size_t entry) {
  require(R > 0.0, "R must be positive");
  if (seq.empty()) return 0.0;
  require(entry < seq.entries.size(), "entry index out of range");
  const auto& e = seq.entries[entry];
  const ScalarField v = rescale(seq.field(k), e.center, e.schedule.at(k));
  return ball_energy(v, Point(seq.dimension, 0.0), R);
}

NeckEnergy neck_energy(const ScalarField& u, const Point& center, double inner, double outer,
                       double scale_for_bound) {
  require(inner > 0.0 && inner < outer, "neck needs 0 < inner < outer");
  const ScalarField v = rescale(u, center, 1.0);
  const int order = concentration_angular_order(u.dimension());
  NeckEnergy neck;
  neck.inner = inner;
  neck.outer = outer;
  std::vector<double> parts;
  for (double a = inner; a < outer; a *= 2.0) {
    const double b = std::min(2.0 * a, outer);
    NeckShell s{a, b, annulus_energy(v, a, b, order, 16), 0.0};
    if (scale_for_bound > 0.0) s.tail_bound = bubble_tail_bound(u.dimension(), scale_for_bound, a);
    parts.push_back(s.energy);
    neck.shells.push_back(s);
    if (b >= outer) break;
  }
  neck.total = pairwise_sum(parts);
  return neck;
}

NeckEnergy neck_energy(const ConcentrationSequence& seq, int k, double R, double outer,
                       std::size_t entry) {
  require(R > 0.0, "R must be positive");
  if (seq.empty()) {
    NeckEnergy zero;
    zero.outer = outer;
    return zero;
  }
  require(entry < seq.entries.size(), "entry index out of range");
  const auto& e = seq.entries[entry];
  const double delta = e.schedule.at(k);
  return neck_energy(seq.field(k), e.center, R * delta, outer, delta);
}

ThetaEstimate theta_estimate(const ConcentrationSequence& seq, const Point& x, double r_small,
                             int k_large) {
  require(r_small > 0.0, "r_small must be positive");
  const ScalarField u = seq.field(k_large);
  ThetaEstimate t;
  t.radii = {0.5 * r_small, r_small / std::sqrt(2.0), r_small};
  for (double r : t.radii) t.values.push_back(ball_energy(u, x, r));
  t.value = t.values.back();
  const double hi = *std::max_element(t.values.begin(), t.values.end());
  const double lo = *std::min_element(t.values.begin(), t.values.end());
  t.spread = hi > 0.0 ? (hi - lo) / hi : 0.0;
  t.stable = t.spread <= 0.1;
  return t;
}

double scaled_measure(const ScalarField& u, const Point& y, double lambda, double r) {
  require(lambda > 0.0 && r > 0.0, "scaled measure needs lambda > 0 and r > 0");
  return ball_energy(rescale(u, y, lambda), Point(u.dimension(), 0.0), r);
}

DefectReport quantization_report(const ConcentrationSequence& seq,
                                 const QuantizationConfig& config) {
  const int n = seq.dimension;
  require_dimension(n);
  require(config.r_small > 0.0 && config.neck_outer > 0.0, "radii must be positive");
  require(config.max_bubbles >= 1, "max_bubbles must be >= 1");
  require(seq.measured_budget <= seq.budget, "sequence exceeds its budget");
  DefectReport rep;
  rep.dimension = n;
  rep.lambda0 = bubble_constant(n);
  const double L0 = rep.lambda0.value;
  rep.epsilon0 = config.epsilon0 > 0.0 ? config.epsilon0 : L0 / (4.0 * n);
  rep.epsilon_n = config.epsilon_n > 0.0 ? config.epsilon_n : L0 / 10.0;
  rep.k_max = config.k_max;
  rep.k_large = config.k_large > 0 ? config.k_large : config.k_max;
  rep.r_grid = config.r_grid;
  rep.r_small = config.r_small;
  rep.budget = seq.budget;
  rep.measured_budget = seq.measured_budget;

  DetectionOptions det;
  det.epsilon0 = rep.epsilon0;
  det.k_max = config.k_max;
  det.r_grid = config.r_grid;
  det.lattice_spacing = config.lattice_spacing;
  const std::vector<DetectedPoint> sigma = detect_sigma(seq, det);

  // initial scale: the standard bubble reaches epsilon_n / 2 at radius rho_h
  const double target = 0.5 * rep.epsilon_n;
  double lo = -20.0, hi = 20.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (standard_ball_energy(n, std::exp(mid)) >= target ? hi : lo) = mid;
  }
  const double rho_h = std::exp(0.5 * (lo + hi));

  const ScalarField u = seq.field(rep.k_large);
  const Point origin(n, 0.0);
  const int k0 = (config.k_max + 1) / 2;
  for (const DetectedPoint& dp : sigma) {
    PointReport pr;
    pr.x = dp.x;
    pr.declared = dp.declared;
    pr.merged_lattice_points = dp.merged_lattice_points;
    pr.theta = theta_estimate(seq, dp.x, config.r_small, rep.k_large);

    ScalarField w = rescale(u, dp.x, 1.0);
    double residual = ball_energy(w, origin, config.r_small);
    while (residual >= rep.epsilon0 && static_cast<int>(pr.inventory.size()) < config.max_bubbles) {
      const double rho = half_threshold_radius(w, config.r_small, target);
      const FitResult fit =
          fit_bubble(rescale(w, origin, rho), 1.0 / rho_h, config.fit_max_iterations,
                     config.fit_tolerance);
      BubbleRecord b;
      b.scale = fit.scale * rho;
      b.center.resize(n);
      Point local(n);
      for (int d = 0; d < n; ++d) {
        local[d] = fit.center[d] * rho;
        b.center[d] = dp.x[d] + local[d];
      }
      b.sign = fit.sign;
      b.half_radius = rho;
      b.fit_residual = fit.misfit;
      b.iterations = fit.iterations;
      b.converged = fit.converged;
      if (!fit.converged) {
        pr.fit_failed = true;
        pr.inventory.push_back(b);
        break;
      }
      const ScalarField fitted = aubin_talenti(n, b.scale, local, b.sign);
      b.energy = ball_energy(fitted, origin, config.r_small);
      const double dist = std::sqrt(norm2(local));
      if (config.r_small > dist) pr.tail += bubble_tail_bound(n, b.scale, config.r_small - dist);
      pr.inventory.push_back(b);
      w = combine(w, 1.0, fitted, -1.0);
      residual = ball_energy(w, origin, config.r_small);
    }
    pr.residual_energy = residual;
    pr.n_hat = 0;
    double inventory_sum = 0.0;
    for (const auto& b : pr.inventory)
      if (b.converged) {
        ++pr.n_hat;
        inventory_sum += b.energy;
      }
    pr.ratio = pr.theta.value / L0;
    pr.distance_to_integer = std::abs(pr.ratio - std::round(pr.ratio));
    pr.cross_term = pr.theta.value - inventory_sum;
    pr.tolerance = std::abs(pr.cross_term) + pr.tail + pr.residual_energy;

    // necks around the coarsest declared scale at this point
    std::size_t coarse = seq.entries.size();
    for (std::size_t j = 0; j < seq.entries.size(); ++j) {
      if (seq.entries[j].center != dp.x) continue;
      if (coarse == seq.entries.size() ||
          seq.entries[j].schedule.at(rep.k_large) > seq.entries[coarse].schedule.at(rep.k_large))
        coarse = j;
    }
    if (coarse < seq.entries.size()) {
      std::vector<int> ks{k0};
      if (rep.k_large != k0) ks.push_back(rep.k_large);
      for (double R : config.neck_radii)
        for (int k : ks) {
          if (R * seq.entries[coarse].schedule.at(k) >= config.neck_outer) continue;
          pr.necks.push_back({R, k, neck_energy(seq, k, R, config.neck_outer, coarse).total});
        }
    }
    rep.points.push_back(std::move(pr));
  }
  return rep;
}

}  // namespace bubblelab
