#pragma once

#include <limits>
#include <string>
#include <vector>

#include "bubblelab/fields.hpp"
#include "bubblelab/grid.hpp"

namespace bubblelab {

/// delta_k = amplitude * base^{-k}; base > 1 so the schedule decreases to 0.
struct ScaleSchedule {
  double amplitude = 1.0;
  double base = 4.0;
  double at(int k) const;
};

struct SequenceEntry {
  Point center;
  ScaleSchedule schedule;
  int sign = 1;  // weight, +1 or -1
};

/// k -> superposition of the entries' bubbles at their k-th scales.
struct ConcentrationSequence {
  int dimension = 3;
  std::vector<SequenceEntry> entries;
  /// Uniform bound on ||u_k||_{H^1(Omega)} + ||u_k||_{L^{2n/(n-2)}(Omega)};
  /// +inf when none was declared.
  double budget = std::numeric_limits<double>::infinity();
  /// Largest budget estimate met over the checked k.
  double measured_budget = 0.0;
  double domain_radius = 1.0;  // Omega = B(0, domain_radius)
  std::string description;

  ScalarField field(int k) const;
  std::vector<Bubble> bubbles(int k) const;
  bool empty() const { return entries.empty(); }
};

/// Validates schedules (base > 1, amplitude > 0), weights (+-1), distinct
/// bases for entries sharing a centre, and the budget for k = 1..k_check.
/// The budget estimate is the triangle-inequality bound summing the norms
/// of each bubble over a ball around its own centre that contains Omega.
ConcentrationSequence make_sequence(int n, std::vector<SequenceEntry> entries,
                                    double budget = std::numeric_limits<double>::infinity(),
                                    int k_check = 10, double domain_radius = 1.0,
                                    std::string description = {});

/// Upper bound on ||u_k||_{H^1(Omega)} + ||u_k||_{L^{p*}(Omega)}.
double budget_estimate(const ConcentrationSequence& seq, int k);

enum class EnergyDensity {
  Eta,   // |grad u|^2 / 2 + (n-2)/(2n) |u|^{2n/(n-2)}
  Full,  // |grad u|^2 + |u|^{2n/(n-2)}
};

double energy_in(const ScalarField& u, const QuadratureRule& rule,
                 EnergyDensity density = EnergyDensity::Full);

/// Energy over B(x, r) from a graded rule in the frame recentred at x, fine
/// enough for every bubble of u down to a thousandth of its scale.
double ball_energy(const ScalarField& u, const Point& x, double r,
                   EnergyDensity density = EnergyDensity::Full, int angular_order = 0);

/// Energy of the standard bubble, ||grad U||_2^2 + ||U||_{p*}^{p*}, by
/// Gauss-Legendre quadrature of the radial integral mapped to [0, pi/2].
/// error_bound is |I_N - I_{2N}|.
struct BubbleConstant {
  int dimension = 0;
  double value = 0.0;
  double error_bound = 0.0;
  int points = 0;
};

BubbleConstant bubble_constant(int n, int points = 128);

/// Full energy of the standard bubble inside B(0, radius), radial quadrature.
double standard_ball_energy(int n, double radius);

/// Centres where E_{u_k}(x, r) >= epsilon0 for every r in r_grid and every k
/// in [ceil(k_max/2), k_max].
struct DetectionOptions {
  double epsilon0 = 0.0;
  int k_max = 10;
  std::vector<double> r_grid{0.025, 0.05, 0.1};
  double lattice_spacing = 0.25;
  int lattice_radial_points = 6;
  int lattice_angular_order = 4;
};

struct DetectedPoint {
  Point x;
  bool declared = false;           // a declared bubble centre
  int merged_lattice_points = 0;   // lattice nodes folded into this cluster
  double min_energy = 0.0;         // min of E over the (k, r) probes
};

std::vector<DetectedPoint> detect_sigma(const ConcentrationSequence& seq,
                                        const DetectionOptions& options);

/// Ball integral of the full density over B(y_k, R delta_k) for the given entry.
double bubble_energy_limit(const ConcentrationSequence& seq, double R, int k,
                           std::size_t entry = 0);

struct NeckShell {
  double inner = 0.0;
  double outer = 0.0;
  double energy = 0.0;
  double tail_bound = 0.0;  // bubble energy outside `inner`
};

struct NeckEnergy {
  double inner = 0.0;
  double outer = 0.0;
  double total = 0.0;
  std::vector<NeckShell> shells;  // dyadic [inner 2^j, inner 2^{j+1}]
};

/// Full-density energy over B(y_k, outer) \ B(y_k, R delta_k) for the entry.
NeckEnergy neck_energy(const ConcentrationSequence& seq, int k, double R, double outer,
                       std::size_t entry = 0);
NeckEnergy neck_energy(const ScalarField& u, const Point& center, double inner, double outer,
                       double scale_for_bound = 0.0);

struct ThetaEstimate {
  double value = 0.0;          // at r_small
  std::vector<double> radii;   // r_small/2, r_small/sqrt(2), r_small
  std::vector<double> values;
  double spread = 0.0;         // (max - min) / max
  bool stable = true;          // spread <= 10%
  double weak_limit_energy = 0.0;
};

ThetaEstimate theta_estimate(const ConcentrationSequence& seq, const Point& x, double r_small,
                             int k_large);

/// Energy of x -> lambda^{(n-2)/2} u(lambda x + y) over B(0, r).
double scaled_measure(const ScalarField& u, const Point& y, double lambda, double r);

struct QuantizationConfig {
  double epsilon0 = 0.0;    // <= 0 selects Lambda_0 / (4n)
  double epsilon_n = 0.0;   // <= 0 selects Lambda_0 / 10
  int k_max = 10;
  int k_large = 0;          // <= 0 selects k_max
  std::vector<double> r_grid{0.025, 0.05, 0.1};
  double r_small = 0.1;
  double lattice_spacing = 0.25;
  std::vector<double> neck_radii{10.0, 30.0, 100.0};
  double neck_outer = 0.5;
  int max_bubbles = 6;
  double fit_tolerance = 1e-8;
  int fit_max_iterations = 200;
};

struct BubbleRecord {
  double scale = 0.0;
  Point center;
  int sign = 1;
  double energy = 0.0;         // full energy of the fitted bubble in B(x, r_small)
  double half_radius = 0.0;    // radius where the residual reached epsilon_n / 2
  double fit_residual = 0.0;   // relative l2 misfit on the sample set
  int iterations = 0;
  bool converged = false;
};

struct NeckRecord {
  double R = 0.0;
  int k = 0;
  double energy = 0.0;
};

struct PointReport {
  Point x;
  bool declared = false;
  int merged_lattice_points = 0;
  ThetaEstimate theta;
  std::vector<BubbleRecord> inventory;
  int n_hat = 0;
  double ratio = 0.0;               // theta / Lambda_0
  double distance_to_integer = 0.0;
  std::vector<NeckRecord> necks;
  double cross_term = 0.0;          // theta - sum of inventory energies
  double tail = 0.0;                // fitted bubbles' energy outside the ball
  double residual_energy = 0.0;     // after the last subtraction
  double tolerance = 0.0;           // |cross| + tail + residual
  bool fit_failed = false;
};

struct DefectReport {
  int dimension = 0;
  BubbleConstant lambda0;
  double epsilon0 = 0.0;
  double epsilon_n = 0.0;
  int k_max = 0;
  int k_large = 0;
  std::vector<double> r_grid;
  double r_small = 0.0;
  double budget = 0.0;
  double measured_budget = 0.0;
  std::vector<PointReport> points;
};

/// Detect, then at each point repeatedly locate the half-threshold radius,
/// fit a bubble by Levenberg-Marquardt, subtract it, until the residual
/// energy in B(x, r_small) drops below epsilon0.
DefectReport quantization_report(const ConcentrationSequence& seq,
                                 const QuantizationConfig& config = {});

}  // namespace bubblelab
