#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "bubblelab/fields.hpp"

namespace bubblelab {

struct Domain {
  std::string description;
  /// Total volume; NaN means unknown and disables the sum check.
  double volume = std::numeric_limits<double>::quiet_NaN();
};

/// Values on cells of positive measure. sum(measures) must match
/// domain.volume to 1e-8 relative when the volume is known.
struct SampledFunction {
  std::vector<double> values;
  std::vector<double> measures;
  Domain domain;

  void validate() const;
  double total_measure() const;
};

/// Step function f*(t) = levels[i] on [breakpoints[i], breakpoints[i+1]),
/// breakpoints[0] = 0, breakpoints.back() = total measure.
struct RearrangementTable {
  std::vector<double> breakpoints;  // size m + 1
  std::vector<double> levels;       // size m, nonincreasing, >= 0
  std::vector<std::size_t> order;   // cell index behind each level

  std::size_t size() const { return levels.size(); }
  double total_measure() const { return breakpoints.back(); }
  /// f*(t), 0 beyond the total measure.
  double operator()(double t) const;
  /// measure{f* > lambda}
  double distribution(double lambda) const;
};

struct LorentzIndex {
  double p = 2.0;
  double q = 2.0;  // +inf allowed

  void validate() const;
  static LorentzIndex weak(double p) { return {p, std::numeric_limits<double>::infinity()}; }
};

/// Sorts |values| in decreasing order (ties by cell index) and accumulates
/// the cell measures.
RearrangementTable rearrange(const SampledFunction& f);

/// q < inf: (int_0^inf (t^{1/p} f*(t))^q dt/t)^{1/q}, integrated exactly on
/// the step function. q = inf: sup_t t^{1/p} f*(t). So ||f||_{2,2} = ||f||_2
/// and ||f||_{2,1} = int_0^inf t^{-1/2} f*(t) dt.
double lorentz_norm(const RearrangementTable& table, LorentzIndex idx);
double lorentz_norm(const SampledFunction& f, LorentzIndex idx);

/// Constant C with ||f||_{p,q2} <= C ||f||_{p,q1} for q1 < q2.
double lorentz_nesting_constant(double p, double q1, double q2);

struct DualityCheck {
  double product_l1 = 0.0;  // ||fg||_1
  double f_21 = 0.0;        // ||f||_{2,1}
  double g_2inf = 0.0;      // ||g||_{2,inf}
  /// ||fg||_1 <= ||f||_{2,1} ||g||_{2,inf}; C = 1 under this normalisation.
  bool holds(double rel_slack = 1e-12) const;
};

DualityCheck duality_product_check(const SampledFunction& f, const SampledFunction& g);

struct Rational {
  std::int64_t num = 1;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

struct PowerRuleCheck {
  double power_norm = 0.0;      // ||f^a||_{p/a, q/a}
  double norm_to_power = 0.0;   // ||f||_{p,q}^a
  bool levels_exact = false;    // (f^a)* == (f*)^a elementwise
};

PowerRuleCheck power_rule_check(const SampledFunction& f, Rational alpha, LorentzIndex idx);

struct TailDecay {
  double sup_weighted_gradient = 0.0;  // sup |x - c|^{n/2} |grad u|
  double weak_l2_gradient = 0.0;       // ||grad u||_{2,inf} over the annulus
  double bound = 0.0;                  // omega_n^{1/2} * sup_weighted_gradient
};

/// Samples the annulus a < |x - center| < b with a product rule; cells carry
/// the rule's weights as measures.
TailDecay tail_decay_check(const ScalarField& u, const Point& center, double a, double b,
                           const RuleOptions& options = {});

/// Random step function for property trials: 1..max_cells cells with
/// measures in [0.01, 1], about a tenth of the values zero, the rest with
/// a heavy upper tail.
SampledFunction random_sampled_function(Rng& rng, int max_cells = 64);
/// Same cells as `like`, fresh random values.
SampledFunction random_values_like(Rng& rng, const SampledFunction& like);

/// CSV: columns value, cell_measure.
SampledFunction read_sampled_function(const std::string& path);
void write_sampled_function(const std::string& path, const SampledFunction& f);
/// CSV: columns t_break, level (right endpoint and value of each step).
void write_rearrangement_csv(const std::string& path, const RearrangementTable& table);

}  // namespace bubblelab
