#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bubblelab/common.hpp"
#include "bubblelab/grid.hpp"

namespace bubblelab {

enum class FieldKind { Bubble, Superposition, Sampled, Custom };

std::string to_string(FieldKind kind);

/// One Aubin-Talenti bubble sign * scale^{-(n-2)/2} U((x - center)/scale) with
/// U(x) = (n(n-2))^{(n-2)/4} (1 + |x|^2)^{-(n-2)/2}.
struct Bubble {
  Point center;
  double scale = 1.0;
  int sign = 1;
};

/// Amplitude (n(n-2))^{(n-2)/4} of the standard profile at the origin.
double bubble_amplitude(int n);

namespace detail {
class FieldImpl {
 public:
  virtual ~FieldImpl() = default;
  virtual int dimension() const = 0;
  virtual FieldKind kind() const = 0;
  virtual double value(std::span<const double> x) const = 0;
  virtual bool has_gradient() const { return false; }
  virtual void gradient(std::span<const double>, std::span<double>) const {}
  virtual bool has_laplacian() const { return false; }
  virtual double laplacian(std::span<const double>) const { return 0.0; }
  virtual const std::vector<Bubble>* bubbles() const { return nullptr; }
};
}  // namespace detail

/// Immutable scalar field u: R^n -> R with optional analytic derivatives.
/// Cheap to copy; copies share the implementation.
class ScalarField {
 public:
  explicit ScalarField(std::shared_ptr<const detail::FieldImpl> impl);

  int dimension() const { return impl_->dimension(); }
  FieldKind kind() const { return impl_->kind(); }
  double operator()(std::span<const double> x) const { return impl_->value(x); }
  double value(std::span<const double> x) const { return impl_->value(x); }

  bool has_analytic_gradient() const { return impl_->has_gradient(); }
  bool has_analytic_laplacian() const { return impl_->has_laplacian(); }
  void analytic_gradient(std::span<const double> x, std::span<double> g) const;
  double analytic_laplacian(std::span<const double> x) const;

  /// Bubble list for closed-form bubble fields and their superpositions.
  const std::vector<Bubble>* bubbles() const { return impl_->bubbles(); }

 private:
  std::shared_ptr<const detail::FieldImpl> impl_;
};

using ValueFn = std::function<double(std::span<const double>)>;
using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;

/// Closed-form positive entire solution of -Lap v = v^{(n+2)/(n-2)} at
/// scale delta centred at y.
ScalarField aubin_talenti(int n, double delta, const Point& y, int sign = 1);
ScalarField aubin_talenti(int n, double delta);

/// Pointwise sum of bubbles (a BubbleConfiguration). Empty lists are rejected.
ScalarField superpose(int n, std::vector<Bubble> bubbles);

ScalarField constant_field(int n, double c);
ScalarField zero_field(int n);

/// User-defined field; derivatives fall back to finite differences when absent.
ScalarField custom_field(int n, ValueFn value, GradientFn gradient = {},
                         ValueFn laplacian = {});

/// alpha*a + beta*b. Bubble configurations combined with coefficients +-1
/// stay closed-form bubble configurations.
ScalarField combine(const ScalarField& a, double alpha, const ScalarField& b, double beta);

/// x -> delta^{(n-2)/2} u(delta x + y). Exact on bubble configurations
/// (parameters are transformed rather than composed).
ScalarField rescale(const ScalarField& u, const Point& y, double delta);

/// Values on a tensor-product grid, evaluated by multilinear interpolation
/// (clamped to the grid's bounding box).
struct SampledGrid {
  std::vector<std::vector<double>> axes;  // strictly increasing per axis
  std::vector<double> values;             // row-major, last axis fastest
};

ScalarField sampled_field(SampledGrid grid);
SampledGrid sample_on_grid(const ScalarField& u, std::vector<std::vector<double>> axes);

/// CSV rows x1,...,xn,u with a mandatory header row. Rows must cover a
/// tensor-product grid (any order).
SampledGrid read_sampled_csv(const std::string& path);
void write_sampled_csv(const std::string& path, const SampledGrid& grid);
/// Little-endian binary variant: "BLAB", uint32 n, uint64 rows, rows*(n+1) doubles.
SampledGrid read_sampled_binary(const std::string& path);
void write_sampled_binary(const std::string& path, const SampledGrid& grid);

// ---------------------------------------------------------------------------
// Differential operators

enum class DerivativeMode { Auto, Analytic, FiniteDifference };

/// Default finite-difference step 1e-4 * (1 + |x|).
double default_step(std::span<const double> x);

/// Analytic gradient when available (Auto), else second-order central
/// differences with step h (h <= 0 selects default_step).
std::vector<double> gradient(const ScalarField& u, std::span<const double> x,
                             double h = 0.0, DerivativeMode mode = DerivativeMode::Auto);
void gradient_into(const ScalarField& u, std::span<const double> x, std::span<double> g,
                   double h = 0.0, DerivativeMode mode = DerivativeMode::Auto);

double laplacian(const ScalarField& u, std::span<const double> x, double h = 0.0,
                 DerivativeMode mode = DerivativeMode::Auto);

/// -Lap u(x) - u(x)|u(x)|^{4/(n-2)}.
double pde_residual(const ScalarField& u, std::span<const double> x, double h = 0.0,
                    DerivativeMode mode = DerivativeMode::Auto);

// ---------------------------------------------------------------------------
// Test functions

/// Smooth bump exp(1/(w-1)), w = |x - c|^2 / rho^2 < 1, times the polynomial
/// a0 + a.(x - c) + b |x - c|^2.
struct TestFunction {
  Point center;
  double radius = 1.0;
  double a0 = 1.0;
  Point linear;  // empty means zero
  double quadratic = 0.0;

  double value(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> g) const;
  double laplacian(std::span<const double> x) const;
};

/// Vector field Phi^j = p_j(x) * bump, sharing one support ball.
struct VectorTestFunction {
  Point center;
  double radius = 1.0;
  std::vector<TestFunction> components;  // center/radius taken from this struct

  /// out[i*n + j] = d Phi^j / d x_i
  void jacobian(std::span<const double> x, std::span<double> out) const;
  double divergence(std::span<const double> x) const;
};

struct WeakResidual {
  double lhs = 0.0;    // -int Lap(Phi) u
  double rhs = 0.0;    // int Phi u|u|^{4/(n-2)}
  double value = 0.0;  // lhs - rhs
};

WeakResidual weak_residual(const ScalarField& u, const TestFunction& phi,
                           const QuadratureRule& rule);

struct StationarityResidual {
  double value = 0.0;
  double divergence_integral = 0.0;  // int div Phi over the rule
};

StationarityResidual stationarity_residual(const ScalarField& u, const VectorTestFunction& phi,
                                           const QuadratureRule& rule);

/// Centred Pohozaev identity on B(x, r), multiplier (y - x).grad u:
///   (n-2)/2 int_B |u|^{p*} - (n-2)/2 int_B |grad u|^2
///   - r (n-2)/(2n) int_dB |u|^{p*} + r/2 int_dB |grad u|^2 = r int_dB (du/dr)^2
/// terms[0..3] are the left-hand terms, terms[4] the right-hand side.
/// The `printed_*` entries evaluate the variant whose third term lacks the
/// factor r (it agrees with the identity only at r = 1).
struct PohozaevBreakdown {
  std::array<double, 5> terms{};
  double residual = 0.0;
  double relative = 0.0;
  double printed_term3 = 0.0;
  double printed_residual = 0.0;
};

PohozaevBreakdown pohozaev_residual(const ScalarField& u, const Point& x, double r,
                                    const RuleOptions& options = {});

}  // namespace bubblelab
