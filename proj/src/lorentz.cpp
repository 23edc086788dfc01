#include "bubblelab/lorentz.hpp"

#include <algorithm>
#include <numeric>

#include "bubblelab/csv.hpp"

namespace bubblelab {

void SampledFunction::validate() const {
  require(values.size() == measures.size(), "values and measures differ in length");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(!std::isnan(values[i]), "NaN value at cell " + std::to_string(i));
    require(measures[i] > 0.0 && std::isfinite(measures[i]),
            "cell measure must be positive and finite at cell " + std::to_string(i));
  }
  if (!std::isnan(domain.volume)) {
    const double total = total_measure();
    require(std::abs(total - domain.volume) <= 1e-8 * std::abs(domain.volume),
            "cell measures sum to " + format_double(total) + ", domain volume is " +
                format_double(domain.volume));
  }
}

double SampledFunction::total_measure() const { return pairwise_sum(measures); }

double RearrangementTable::operator()(double t) const {
  if (t < 0.0 || levels.empty() || t >= breakpoints.back()) return 0.0;
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
  return levels[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

double RearrangementTable::distribution(double lambda) const {
  // levels are nonincreasing: count those above lambda
  const auto it = std::partition_point(levels.begin(), levels.end(),
                                       [&](double v) { return v > lambda; });
  return breakpoints[static_cast<std::size_t>(it - levels.begin())];
}

void LorentzIndex::validate() const {
  require(p > 0.0 && std::isfinite(p), "Lorentz p must be positive and finite");
  require(q > 0.0, "Lorentz q must be positive or infinite");
}

RearrangementTable rearrange(const SampledFunction& f) {
  f.validate();
  const std::size_t m = f.values.size();
  RearrangementTable t;
  t.order.resize(m);
  std::iota(t.order.begin(), t.order.end(), std::size_t{0});
  std::stable_sort(t.order.begin(), t.order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(f.values[a]) > std::abs(f.values[b]);
  });
  t.levels.resize(m);
  t.breakpoints.resize(m + 1);
  t.breakpoints[0] = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    t.levels[i] = std::abs(f.values[t.order[i]]);
    t.breakpoints[i + 1] = t.breakpoints[i] + f.measures[t.order[i]];
  }
  return t;
}

double lorentz_norm(const RearrangementTable& table, LorentzIndex idx) {
  idx.validate();
  const std::size_t m = table.size();
  if (m == 0) return 0.0;
  const double top = table.levels.front();
  if (top == 0.0) return 0.0;
  if (std::isinf(top)) return INFINITY;
  const double p = idx.p, q = idx.q;
  if (std::isinf(q)) {
    double best = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      best = std::max(best, std::pow(table.breakpoints[i + 1], 1.0 / p) * table.levels[i]);
    return best;
  }
  // scale by the top level so large values do not overflow f^q
  std::vector<double> terms;
  terms.reserve(m);
  const double e = q / p;
  double prev = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double next = std::pow(table.breakpoints[i + 1], e);
    const double level = table.levels[i];
    if (level > 0.0) terms.push_back(std::pow(level / top, q) * (p / q) * (next - prev));
    prev = next;
  }
  const double s = pairwise_sum(terms);
  if (!std::isfinite(s)) return INFINITY;
  return top * std::pow(s, 1.0 / q);
}

double lorentz_norm(const SampledFunction& f, LorentzIndex idx) {
  return lorentz_norm(rearrange(f), idx);
}

double lorentz_nesting_constant(double p, double q1, double q2) {
  require(q1 < q2, "nesting needs q1 < q2");
  const double inv2 = std::isinf(q2) ? 0.0 : 1.0 / q2;
  return std::pow(q1 / p, 1.0 / q1 - inv2);
}

bool DualityCheck::holds(double rel_slack) const {
  const double rhs = f_21 * g_2inf;
  return product_l1 <= rhs * (1.0 + rel_slack);
}

DualityCheck duality_product_check(const SampledFunction& f, const SampledFunction& g) {
  f.validate();
  g.validate();
  require(f.measures == g.measures, "duality check needs both functions on the same cells");
  std::vector<double> terms(f.values.size());
  for (std::size_t i = 0; i < terms.size(); ++i)
    terms[i] = std::abs(f.values[i] * g.values[i]) * f.measures[i];
  DualityCheck d;
  d.product_l1 = pairwise_sum(terms);
  d.f_21 = lorentz_norm(f, {2.0, 1.0});
  d.g_2inf = lorentz_norm(g, LorentzIndex::weak(2.0));
  return d;
}

PowerRuleCheck power_rule_check(const SampledFunction& f, Rational alpha, LorentzIndex idx) {
  require(alpha.den > 0 && alpha.num > 0, "power rule needs a positive rational exponent");
  const bool fractional = alpha.num % alpha.den != 0;
  if (fractional)
    for (double v : f.values) require(v >= 0.0, "negative value with a fractional exponent");
  const double a = alpha.value();
  SampledFunction fa = f;
  for (double& v : fa.values) v = std::pow(std::abs(v), a);
  const RearrangementTable tf = rearrange(f);
  const RearrangementTable tfa = rearrange(fa);
  PowerRuleCheck r;
  r.levels_exact = true;
  for (std::size_t i = 0; i < tf.size(); ++i)
    if (tfa.levels[i] != std::pow(tf.levels[i], a)) r.levels_exact = false;
  const LorentzIndex scaled{idx.p / a, std::isinf(idx.q) ? idx.q : idx.q / a};
  r.power_norm = lorentz_norm(tfa, scaled);
  r.norm_to_power = std::pow(lorentz_norm(tf, idx), a);
  return r;
}

TailDecay tail_decay_check(const ScalarField& u, const Point& center, double a, double b,
                           const RuleOptions& options) {
  require(a > 0.0 && a < b, "tail decay needs 0 < a < b");
  const int n = u.dimension();
  require(static_cast<int>(center.size()) == n, "center has the wrong dimension");
  const QuadratureRule rule = build_annulus_rule(n, center, a, b, options);
  SampledFunction g;
  g.values.resize(rule.size());
  g.measures.resize(rule.size());
  TailDecay out;
  std::vector<double> x(n), grad(n);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    rule.node(i, x);
    gradient_into(u, x, grad);
    const double mag = std::sqrt(norm2(grad));
    g.values[i] = mag;
    g.measures[i] = rule.weight(i);
    out.sup_weighted_gradient =
        std::max(out.sup_weighted_gradient, std::pow(distance(x, center), 0.5 * n) * mag);
  }
  out.weak_l2_gradient = lorentz_norm(g, LorentzIndex::weak(2.0));
  out.bound = std::sqrt(unit_ball_volume(n)) * out.sup_weighted_gradient;
  return out;
}

namespace {
double random_level(Rng& rng) {
  if (rng.uniform() < 0.1) return 0.0;
  return 1.0 / std::sqrt(1e-6 + rng.uniform()) - 0.999;
}
}  // namespace

SampledFunction random_sampled_function(Rng& rng, int max_cells) {
  require(max_cells >= 1, "max_cells must be >= 1");
  SampledFunction f;
  const auto m = 1 + rng.below(static_cast<std::uint64_t>(max_cells));
  for (std::uint64_t i = 0; i < m; ++i) {
    f.measures.push_back(rng.uniform(0.01, 1.0));
    f.values.push_back(random_level(rng));
  }
  f.domain.description = "random cells";
  return f;
}

SampledFunction random_values_like(Rng& rng, const SampledFunction& like) {
  SampledFunction g = like;
  for (double& v : g.values) v = random_level(rng);
  return g;
}

SampledFunction read_sampled_function(const std::string& path) {
  const CsvTable t = read_csv(path);
  require(t.header.size() == 2 && t.header[0] == "value" && t.header[1] == "cell_measure",
          path + ": expected header value,cell_measure");
  SampledFunction f;
  f.domain.description = path;
  for (const auto& row : t.rows) {
    require(row.size() == 2, path + ": every row needs two fields");
    f.values.push_back(parse_double(row[0]));
    f.measures.push_back(parse_double(row[1]));
  }
  f.validate();
  return f;
}

void write_sampled_function(const std::string& path, const SampledFunction& f) {
  CsvWriter out(path, {"value", "cell_measure"});
  for (std::size_t i = 0; i < f.values.size(); ++i)
    out.row(std::vector<double>{f.values[i], f.measures[i]});
}

void write_rearrangement_csv(const std::string& path, const RearrangementTable& table) {
  CsvWriter out(path, {"t_break", "level"});
  for (std::size_t i = 0; i < table.size(); ++i)
    out.row(std::vector<double>{table.breakpoints[i + 1], table.levels[i]});
}

}  // namespace bubblelab
