#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bubblelab {

using Point = std::vector<double>;

/// Raised for arguments that violate an operation's preconditions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an integrand produces NaN/Inf; carries the offending node.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, Point node)
      : std::runtime_error(what), node_(std::move(node)) {}
  const Point& node() const noexcept { return node_; }

 private:
  Point node_;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw InputError(msg);
}

inline void require_dimension(int n) {
  require(n >= 3, "dimension must be >= 3, got " + std::to_string(n));
}

/// Critical Sobolev exponent 2n/(n-2).
inline double critical_exponent(int n) { return 2.0 * n / (n - 2.0); }

/// |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2).
inline double sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// Volume of the unit ball, omega_n = |S^{n-1}| / n.
inline double unit_ball_volume(int n) { return sphere_area(n) / n; }

/// |u|^{2n/(n-2)} without going through pow for the common small n.
inline double critical_power(double u, int n) {
  const double a = std::abs(u);
  switch (n) {
    case 3: { const double a2 = a * a; return a2 * a2 * a2; }
    case 4: { const double a2 = a * a; return a2 * a2; }
    case 6: return a * a * a;
    default: return std::pow(a, critical_exponent(n));
  }
}

/// u |u|^{4/(n-2)}.
inline double nonlinearity(double u, int n) {
  const double a = std::abs(u);
  switch (n) {
    case 3: { const double a2 = a * a; return u * a2 * a2; }
    case 4: return u * a * a;
    case 6: return u * a;
    default: return u * std::pow(a, 4.0 / (n - 2.0));
  }
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Pairwise (cascade) summation; result depends only on the input order.
double pairwise_sum(std::span<const double> terms);

/// Seeded 64-bit Mersenne Twister with a fixed, library-independent
/// conversion to doubles, so streams match across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  /// Uniform integer in [0, count).
  std::uint64_t below(std::uint64_t count) { return engine_() % count; }
  /// Uniform point in the ball B(0, radius) by rejection from the cube.
  Point in_ball(int n, double radius) {
    Point p(n);
    for (;;) {
      double rr = 0.0;
      for (auto& v : p) {
        v = uniform(-1.0, 1.0);
        rr += v * v;
      }
      if (rr <= 1.0) break;
    }
    for (auto& v : p) v *= radius;
    return p;
  }

 private:
  std::mt19937_64 engine_;
};

namespace parallel {

/// Worker count used by every chunked loop in the library (default 1).
void set_threads(int count);
int threads();

/// Runs fn(chunk) for chunk in [0, chunks). Chunks are claimed dynamically,
/// so fn must write only to its own chunk's output slot.
void for_each_chunk(std::size_t chunks, const std::function<void(std::size_t)>& fn);

}  // namespace parallel

}  // namespace bubblelab
