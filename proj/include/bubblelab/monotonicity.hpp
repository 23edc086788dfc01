#pragma once

#include <string>
#include <vector>

#include "bubblelab/fields.hpp"
#include "bubblelab/grid.hpp"

namespace bubblelab {

/// Three algebraically equivalent forms of the monotone quantity E_u(x, r)
/// for exact solutions (P = int_B |u|^{p*}, D = int_B |grad u|^2,
/// S = int_dB u^2, S' = dS/dr):
///   A:  P/n + S'/4 - S/(4r)
///   B:  D/2 - (n-2)/(2n) P + (n-2)/(4r) S            (canonical, no r-derivative)
///   C:  (D + (n-2)/n P) / (2(n-1)) + (n-2)/(4(n-1)) S'
enum class Formulation { A, B, C };

std::string to_string(Formulation f);

struct MonotonicityOptions {
  RuleOptions rule;
  /// Central-difference step for S' relative to r.
  double derivative_step = 1e-3;
};

/// Raw integrals behind every formulation at one (x, r).
struct EnergyComponents {
  double radius = 0.0;
  double ball_potential = 0.0;     // int_B |u|^{2n/(n-2)}
  double ball_dirichlet = 0.0;     // int_B |grad u|^2
  double ball_mass = 0.0;          // int_B u^2
  double sphere_mass = 0.0;        // int_dB u^2
  double sphere_mass_rate = 0.0;   // d/dr int_dB u^2 (central difference)

  double energy(Formulation f, int n) const;
};

EnergyComponents energy_components(const ScalarField& u, const Point& x, double r,
                                   const MonotonicityOptions& options = {});

double energy_E(const ScalarField& u, const Point& x, double r,
                Formulation formulation = Formulation::B,
                const MonotonicityOptions& options = {});

/// The displays as literally printed, evaluated from the same integrals, for
/// comparison against the canonical value.
struct DisplayVariant {
  std::string name;
  double value = 0.0;
};
std::vector<DisplayVariant> printed_display_variants(const EnergyComponents& c, int n);

struct MonotonicityProfile {
  Point center;
  RadialGrid radii;
  std::vector<double> values;  // formulation B
  std::vector<double> values_a;
  std::vector<double> values_c;
  std::vector<EnergyComponents> components;
};

MonotonicityProfile profile(const ScalarField& u, const Point& x, const RadialGrid& radii,
                            const MonotonicityOptions& options = {});

struct Violation {
  std::size_t index = 0;  // pair (index, index + 1) for monotonicity
  double radius = 0.0;
  double amount = 0.0;    // size of the drop (or of the negative value)
};

struct CheckReport {
  double slack = 0.0;
  std::vector<Violation> violations;
  bool passed() const { return violations.empty(); }
};

/// Pairs with E(r_{i+1}) < E(r_i) - slack; slack < 0 selects 1e-6 * max|E|.
CheckReport check_monotone(const MonotonicityProfile& p, double slack = -1.0);
/// Radii with E(r) < -slack; slack < 0 selects 1e-6 * max|E|.
CheckReport check_positive(const MonotonicityProfile& p, double slack = -1.0);

/// Radii where the running mean (1/R) int_0^R E dr (trapezoid, E(0) = 0)
/// exceeds E(R) by more than slack.
CheckReport check_integral_mean(const MonotonicityProfile& p, double slack = -1.0);

void write_profile_csv(const std::string& path, const MonotonicityProfile& p, int n);

/// Ratio int_{B(x,r)} (|grad u|^2 + |u|^{p*}) / E_u(x, r); 0/0 is 0.
struct EnergyBound {
  double lhs = 0.0;
  double energy = 0.0;
  double ratio = 0.0;
  bool degenerate = false;  // E <= 0 with positive lhs
};

EnergyBound energy_bound_check(const ScalarField& u, const Point& x, double r, double r0,
                               const MonotonicityOptions& options = {});

struct RegularityReport {
  Point center;
  double r0 = 0.0;
  double r = 0.0;
  double energy = 0.0;
  double epsilon = 0.0;
  bool applicable = false;
  double sup_abs = 0.0;        // sup |u| over B(center, r/2), when applicable
  double implied_constant = 0.0;  // sup_abs * r^{(n-2)/2}
};

RegularityReport eps_regularity_check(const ScalarField& u, const Point& x0, double r0,
                                      double r, double epsilon,
                                      const MonotonicityOptions& options = {});

/// True when the applicable reports, ordered by energy, have nondecreasing
/// implied constants (small energy gives a small constant).
bool implied_constant_trend(std::vector<RegularityReport> reports);

}  // namespace bubblelab
