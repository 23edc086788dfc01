#include "bubblelab/fields.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "bubblelab/csv.hpp"

namespace bubblelab {

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::Bubble: return "bubble";
    case FieldKind::Superposition: return "superposition";
    case FieldKind::Sampled: return "sampled";
    case FieldKind::Custom: return "custom";
  }
  return "unknown";
}

double bubble_amplitude(int n) { return std::pow(n * (n - 2.0), 0.25 * (n - 2)); }

namespace {

// t^{(n-2)/2}
inline double half_power(double t, int n) {
  switch (n) {
    case 3: return std::sqrt(t);
    case 4: return t;
    case 5: return t * std::sqrt(t);
    case 6: return t * t;
    default: return std::pow(t, 0.5 * (n - 2));
  }
}

class BubbleField final : public detail::FieldImpl {
 public:
  BubbleField(int n, std::vector<Bubble> bubbles)
      : n_(n), amp_(bubble_amplitude(n)), bubbles_(std::move(bubbles)) {}

  int dimension() const override { return n_; }
  FieldKind kind() const override {
    return bubbles_.size() == 1 ? FieldKind::Bubble : FieldKind::Superposition;
  }

  double value(std::span<const double> x) const override {
    double s = 0.0;
    for (const auto& b : bubbles_) {
      const double q = b.scale * b.scale + dist2(x, b.center);
      s += b.sign * amp_ * half_power(b.scale / q, n_);
    }
    return s;
  }

  bool has_gradient() const override { return true; }
  void gradient(std::span<const double> x, std::span<double> g) const override {
    std::fill(g.begin(), g.end(), 0.0);
    for (const auto& b : bubbles_) {
      const double q = b.scale * b.scale + dist2(x, b.center);
      const double v = b.sign * amp_ * half_power(b.scale / q, n_);
      const double f = -(n_ - 2.0) * v / q;
      for (int d = 0; d < n_; ++d) g[d] += f * (x[d] - b.center[d]);
    }
  }

  bool has_laplacian() const override { return true; }
  double laplacian(std::span<const double> x) const override {
    // Radial Laplacian of the closed form: -n(n-2) v delta^2 / q^2.
    double s = 0.0;
    for (const auto& b : bubbles_) {
      const double q = b.scale * b.scale + dist2(x, b.center);
      const double v = b.sign * amp_ * half_power(b.scale / q, n_);
      const double r = b.scale / q;
      s += -n_ * (n_ - 2.0) * v * r * r;
    }
    return s;
  }

  const std::vector<Bubble>* bubbles() const override { return &bubbles_; }

 private:
  static double dist2(std::span<const double> x, const Point& c) {
    double s = 0.0;
    for (std::size_t d = 0; d < c.size(); ++d) {
      const double t = x[d] - c[d];
      s += t * t;
    }
    return s;
  }

  int n_;
  double amp_;
  std::vector<Bubble> bubbles_;
};

class CustomField final : public detail::FieldImpl {
 public:
  CustomField(int n, ValueFn value, GradientFn gradient, ValueFn laplacian)
      : n_(n), value_(std::move(value)), gradient_(std::move(gradient)),
        laplacian_(std::move(laplacian)) {}

  int dimension() const override { return n_; }
  FieldKind kind() const override { return FieldKind::Custom; }
  double value(std::span<const double> x) const override { return value_(x); }
  bool has_gradient() const override { return static_cast<bool>(gradient_); }
  void gradient(std::span<const double> x, std::span<double> g) const override {
    gradient_(x, g);
  }
  bool has_laplacian() const override { return static_cast<bool>(laplacian_); }
  double laplacian(std::span<const double> x) const override { return laplacian_(x); }

 private:
  int n_;
  ValueFn value_;
  GradientFn gradient_;
  ValueFn laplacian_;
};

class CombinedField final : public detail::FieldImpl {
 public:
  CombinedField(ScalarField a, double alpha, ScalarField b, double beta)
      : a_(std::move(a)), b_(std::move(b)), alpha_(alpha), beta_(beta) {}

  int dimension() const override { return a_.dimension(); }
  FieldKind kind() const override { return FieldKind::Superposition; }
  double value(std::span<const double> x) const override {
    return alpha_ * a_(x) + beta_ * b_(x);
  }
  bool has_gradient() const override {
    return a_.has_analytic_gradient() && b_.has_analytic_gradient();
  }
  void gradient(std::span<const double> x, std::span<double> g) const override {
    std::vector<double> tmp(g.size());
    a_.analytic_gradient(x, g);
    b_.analytic_gradient(x, tmp);
    for (std::size_t d = 0; d < g.size(); ++d) g[d] = alpha_ * g[d] + beta_ * tmp[d];
  }
  bool has_laplacian() const override {
    return a_.has_analytic_laplacian() && b_.has_analytic_laplacian();
  }
  double laplacian(std::span<const double> x) const override {
    return alpha_ * a_.analytic_laplacian(x) + beta_ * b_.analytic_laplacian(x);
  }

 private:
  ScalarField a_, b_;
  double alpha_, beta_;
};

class RescaledField final : public detail::FieldImpl {
 public:
  RescaledField(ScalarField u, Point y, double delta)
      : u_(std::move(u)), y_(std::move(y)), delta_(delta),
        factor_(std::pow(delta, 0.5 * (u_.dimension() - 2))) {}

  int dimension() const override { return u_.dimension(); }
  FieldKind kind() const override { return u_.kind(); }
  double value(std::span<const double> x) const override { return factor_ * u_(map(x)); }
  bool has_gradient() const override { return u_.has_analytic_gradient(); }
  void gradient(std::span<const double> x, std::span<double> g) const override {
    u_.analytic_gradient(map(x), g);
    for (double& v : g) v *= factor_ * delta_;
  }
  bool has_laplacian() const override { return u_.has_analytic_laplacian(); }
  double laplacian(std::span<const double> x) const override {
    return factor_ * delta_ * delta_ * u_.analytic_laplacian(map(x));
  }

 private:
  Point map(std::span<const double> x) const {
    Point z(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) z[d] = delta_ * x[d] + y_[d];
    return z;
  }

  ScalarField u_;
  Point y_;
  double delta_;
  double factor_;
};

class SampledField final : public detail::FieldImpl {
 public:
  explicit SampledField(SampledGrid grid) : grid_(std::move(grid)) {
    const std::size_t n = grid_.axes.size();
    strides_.assign(n, 1);
    for (std::size_t d = n; d-- > 1;) strides_[d - 1] = strides_[d] * grid_.axes[d].size();
  }

  int dimension() const override { return static_cast<int>(grid_.axes.size()); }
  FieldKind kind() const override { return FieldKind::Sampled; }

  double value(std::span<const double> x) const override {
    const std::size_t n = grid_.axes.size();
    std::vector<std::size_t> lo(n);
    std::vector<double> frac(n);
    for (std::size_t d = 0; d < n; ++d) {
      const auto& ax = grid_.axes[d];
      if (ax.size() == 1) {
        lo[d] = 0;
        frac[d] = 0.0;
        continue;
      }
      const double v = std::clamp(x[d], ax.front(), ax.back());
      std::size_t i = std::upper_bound(ax.begin(), ax.end(), v) - ax.begin();
      i = std::clamp<std::size_t>(i, 1, ax.size() - 1) - 1;
      lo[d] = i;
      frac[d] = (v - ax[i]) / (ax[i + 1] - ax[i]);
    }
    double s = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
      double w = 1.0;
      std::size_t idx = 0;
      for (std::size_t d = 0; d < n; ++d) {
        const bool up = (corner >> d) & 1u;
        if (up && grid_.axes[d].size() == 1) { w = 0.0; break; }
        w *= up ? frac[d] : 1.0 - frac[d];
        idx += (lo[d] + (up ? 1 : 0)) * strides_[d];
      }
      if (w != 0.0) s += w * grid_.values[idx];
    }
    return s;
  }

 private:
  SampledGrid grid_;
  std::vector<std::size_t> strides_;
};

bool unit_coefficient(double c) { return c == 1.0 || c == -1.0; }

void validate_grid(const SampledGrid& g) {
  require(g.axes.size() >= 3, "sampled grid needs dimension >= 3");
  std::size_t count = 1;
  for (const auto& ax : g.axes) {
    require(!ax.empty(), "sampled grid axis is empty");
    for (std::size_t i = 1; i < ax.size(); ++i)
      require(ax[i] > ax[i - 1], "sampled grid axes must be strictly increasing");
    count *= ax.size();
  }
  require(g.values.size() == count, "sampled grid value count does not match axes");
}

SampledGrid grid_from_rows(int n, const std::vector<std::vector<double>>& rows) {
  require_dimension(n);
  SampledGrid g;
  g.axes.resize(n);
  for (int d = 0; d < n; ++d) {
    auto& ax = g.axes[d];
    for (const auto& r : rows) ax.push_back(r[d]);
    std::sort(ax.begin(), ax.end());
    ax.erase(std::unique(ax.begin(), ax.end()), ax.end());
  }
  std::size_t count = 1;
  for (const auto& ax : g.axes) count *= ax.size();
  require(count == rows.size(), "sampled rows do not form a tensor-product grid");
  std::vector<std::size_t> strides(n, 1);
  for (int d = n - 1; d > 0; --d) strides[d - 1] = strides[d] * g.axes[d].size();
  g.values.assign(count, std::numeric_limits<double>::quiet_NaN());
  for (const auto& r : rows) {
    std::size_t idx = 0;
    for (int d = 0; d < n; ++d) {
      const auto& ax = g.axes[d];
      idx += (std::lower_bound(ax.begin(), ax.end(), r[d]) - ax.begin()) * strides[d];
    }
    require(std::isnan(g.values[idx]), "duplicate grid point in sampled rows");
    g.values[idx] = r[n];
  }
  return g;
}

std::vector<std::vector<double>> grid_rows(const SampledGrid& g) {
  validate_grid(g);
  const std::size_t n = g.axes.size();
  std::vector<std::vector<double>> rows;
  rows.reserve(g.values.size());
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t k = 0; k < g.values.size(); ++k) {
    std::vector<double> row(n + 1);
    for (std::size_t d = 0; d < n; ++d) row[d] = g.axes[d][idx[d]];
    row[n] = g.values[k];
    rows.push_back(std::move(row));
    for (std::size_t d = n; d-- > 0;) {
      if (++idx[d] < g.axes[d].size()) break;
      idx[d] = 0;
    }
  }
  return rows;
}

// Bump profile exp(1/(w-1)) and its first two derivatives in w.
struct BumpValues {
  double b = 0.0, db = 0.0, d2b = 0.0;
};

BumpValues bump(double w) {
  BumpValues v;
  if (w >= 1.0) return v;
  const double s = w - 1.0;
  v.b = std::exp(1.0 / s);
  v.db = -v.b / (s * s);
  v.d2b = v.b / (s * s * s * s) + 2.0 * v.b / (s * s * s);
  return v;
}

}  // namespace

ScalarField::ScalarField(std::shared_ptr<const detail::FieldImpl> impl) : impl_(std::move(impl)) {}

void ScalarField::analytic_gradient(std::span<const double> x, std::span<double> g) const {
  require(impl_->has_gradient(), "field has no analytic gradient");
  impl_->gradient(x, g);
}

double ScalarField::analytic_laplacian(std::span<const double> x) const {
  require(impl_->has_laplacian(), "field has no analytic Laplacian");
  return impl_->laplacian(x);
}

ScalarField aubin_talenti(int n, double delta, const Point& y, int sign) {
  require_dimension(n);
  require(delta > 0.0 && std::isfinite(delta), "bubble scale must be positive");
  require(static_cast<int>(y.size()) == n, "bubble center dimension mismatch");
  require(sign == 1 || sign == -1, "bubble sign must be +1 or -1");
  return ScalarField(std::make_shared<BubbleField>(n, std::vector<Bubble>{{y, delta, sign}}));
}

ScalarField aubin_talenti(int n, double delta) { return aubin_talenti(n, delta, Point(n, 0.0)); }

ScalarField superpose(int n, std::vector<Bubble> bubbles) {
  require_dimension(n);
  require(!bubbles.empty(), "bubble configuration must be nonempty");
  for (const auto& b : bubbles) {
    require(static_cast<int>(b.center.size()) == n, "bubble center dimension mismatch");
    require(b.scale > 0.0 && std::isfinite(b.scale), "bubble scale must be positive");
    require(b.sign == 1 || b.sign == -1, "bubble sign must be +1 or -1");
  }
  return ScalarField(std::make_shared<BubbleField>(n, std::move(bubbles)));
}

ScalarField constant_field(int n, double c) {
  require_dimension(n);
  return custom_field(
      n, [c](std::span<const double>) { return c; },
      [](std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); },
      [](std::span<const double>) { return 0.0; });
}

ScalarField zero_field(int n) { return constant_field(n, 0.0); }

ScalarField custom_field(int n, ValueFn value, GradientFn gradient, ValueFn laplacian) {
  require_dimension(n);
  require(static_cast<bool>(value), "custom field needs a value function");
  return ScalarField(std::make_shared<CustomField>(n, std::move(value), std::move(gradient),
                                                   std::move(laplacian)));
}

ScalarField combine(const ScalarField& a, double alpha, const ScalarField& b, double beta) {
  require(a.dimension() == b.dimension(), "combined fields must share dimension");
  if (a.bubbles() && b.bubbles() && unit_coefficient(alpha) && unit_coefficient(beta)) {
    std::vector<Bubble> all;
    for (auto bb : *a.bubbles()) { bb.sign *= static_cast<int>(alpha); all.push_back(bb); }
    for (auto bb : *b.bubbles()) { bb.sign *= static_cast<int>(beta); all.push_back(bb); }
    return superpose(a.dimension(), std::move(all));
  }
  return ScalarField(std::make_shared<CombinedField>(a, alpha, b, beta));
}

ScalarField rescale(const ScalarField& u, const Point& y, double delta) {
  require(delta > 0.0 && std::isfinite(delta), "rescale factor must be positive");
  require(static_cast<int>(y.size()) == u.dimension(), "rescale center dimension mismatch");
  if (const auto* list = u.bubbles()) {
    std::vector<Bubble> moved;
    moved.reserve(list->size());
    for (const auto& b : *list) {
      Bubble m{Point(b.center.size()), b.scale / delta, b.sign};
      for (std::size_t d = 0; d < b.center.size(); ++d) m.center[d] = (b.center[d] - y[d]) / delta;
      moved.push_back(std::move(m));
    }
    return superpose(u.dimension(), std::move(moved));
  }
  return ScalarField(std::make_shared<RescaledField>(u, y, delta));
}

ScalarField sampled_field(SampledGrid grid) {
  validate_grid(grid);
  return ScalarField(std::make_shared<SampledField>(std::move(grid)));
}

SampledGrid sample_on_grid(const ScalarField& u, std::vector<std::vector<double>> axes) {
  require(static_cast<int>(axes.size()) == u.dimension(), "axis count must equal dimension");
  SampledGrid g;
  g.axes = std::move(axes);
  std::size_t count = 1;
  for (const auto& ax : g.axes) count *= ax.size();
  g.values.assign(count, 0.0);
  validate_grid(g);
  auto rows = grid_rows(g);
  for (std::size_t k = 0; k < rows.size(); ++k)
    g.values[k] = u(std::span<const double>(rows[k].data(), g.axes.size()));
  return g;
}

SampledGrid read_sampled_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  require(!table.header.empty(), "sampled CSV needs a header row");
  const int n = static_cast<int>(table.header.size()) - 1;
  std::vector<std::vector<double>> rows;
  rows.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    require(static_cast<int>(r.size()) == n + 1, "sampled CSV row has wrong column count");
    std::vector<double> v(n + 1);
    for (int i = 0; i <= n; ++i) v[i] = parse_double(r[i]);
    rows.push_back(std::move(v));
  }
  return grid_from_rows(n, rows);
}

void write_sampled_csv(const std::string& path, const SampledGrid& grid) {
  const std::size_t n = grid.axes.size();
  std::vector<std::string> header;
  for (std::size_t d = 0; d < n; ++d) header.push_back("x" + std::to_string(d + 1));
  header.push_back("u");
  CsvWriter out(path, header);
  for (const auto& row : grid_rows(grid)) out.row(row);
}

SampledGrid read_sampled_binary(const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "binary format assumes little-endian");
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path);
  char magic[4];
  std::uint32_t n = 0;
  std::uint64_t count = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  require(in && std::memcmp(magic, "BLAB", 4) == 0, "not a sampled-field binary file");
  std::vector<std::vector<double>> rows(count, std::vector<double>(n + 1));
  for (auto& r : rows) in.read(reinterpret_cast<char*>(r.data()), sizeof(double) * (n + 1));
  require(static_cast<bool>(in), "truncated sampled-field binary file");
  return grid_from_rows(static_cast<int>(n), rows);
}

void write_sampled_binary(const std::string& path, const SampledGrid& grid) {
  const auto rows = grid_rows(grid);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot write " + path);
  const std::uint32_t n = static_cast<std::uint32_t>(grid.axes.size());
  const std::uint64_t count = rows.size();
  out.write("BLAB", 4);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (const auto& r : rows) out.write(reinterpret_cast<const char*>(r.data()), sizeof(double) * r.size());
}

// ---------------------------------------------------------------------------

double default_step(std::span<const double> x) { return 1e-4 * (1.0 + std::sqrt(norm2(x))); }

void gradient_into(const ScalarField& u, std::span<const double> x, std::span<double> g,
                   double h, DerivativeMode mode) {
  const bool analytic = mode == DerivativeMode::Analytic ||
                        (mode == DerivativeMode::Auto && u.has_analytic_gradient());
  if (analytic) {
    u.analytic_gradient(x, g);
    return;
  }
  require(h >= 0.0, "finite-difference step must be positive");
  if (h == 0.0) h = default_step(x);
  Point p(x.begin(), x.end());
  for (std::size_t d = 0; d < x.size(); ++d) {
    p[d] = x[d] + h;
    const double up = u(p);
    p[d] = x[d] - h;
    const double down = u(p);
    p[d] = x[d];
    g[d] = (up - down) / (2.0 * h);
  }
}

std::vector<double> gradient(const ScalarField& u, std::span<const double> x, double h,
                             DerivativeMode mode) {
  std::vector<double> g(x.size());
  gradient_into(u, x, g, h, mode);
  return g;
}

double laplacian(const ScalarField& u, std::span<const double> x, double h, DerivativeMode mode) {
  const bool analytic = mode == DerivativeMode::Analytic ||
                        (mode == DerivativeMode::Auto && u.has_analytic_laplacian());
  if (analytic) return u.analytic_laplacian(x);
  require(h >= 0.0, "finite-difference step must be positive");
  if (h == 0.0) h = default_step(x);
  Point p(x.begin(), x.end());
  const double center = u(x);
  double s = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    p[d] = x[d] + h;
    const double up = u(p);
    p[d] = x[d] - h;
    const double down = u(p);
    p[d] = x[d];
    s += (up - 2.0 * center + down) / (h * h);
  }
  return s;
}

double pde_residual(const ScalarField& u, std::span<const double> x, double h,
                    DerivativeMode mode) {
  return -laplacian(u, x, h, mode) - nonlinearity(u(x), u.dimension());
}

// ---------------------------------------------------------------------------

double TestFunction::value(std::span<const double> x) const {
  double z2 = 0.0, lin = 0.0;
  for (std::size_t d = 0; d < center.size(); ++d) {
    const double z = x[d] - center[d];
    z2 += z * z;
    if (!linear.empty()) lin += linear[d] * z;
  }
  const BumpValues bv = bump(z2 / (radius * radius));
  if (bv.b == 0.0) return 0.0;
  return (a0 + lin + quadratic * z2) * bv.b;
}

void TestFunction::gradient(std::span<const double> x, std::span<double> g) const {
  const std::size_t n = center.size();
  double z2 = 0.0, lin = 0.0;
  for (std::size_t d = 0; d < n; ++d) {
    const double z = x[d] - center[d];
    z2 += z * z;
    if (!linear.empty()) lin += linear[d] * z;
  }
  const double r2 = radius * radius;
  const BumpValues bv = bump(z2 / r2);
  const double p = a0 + lin + quadratic * z2;
  for (std::size_t d = 0; d < n; ++d) {
    const double z = x[d] - center[d];
    const double dp = (linear.empty() ? 0.0 : linear[d]) + 2.0 * quadratic * z;
    const double dg = bv.db * 2.0 * z / r2;
    g[d] = bv.b * dp + p * dg;
  }
}

double TestFunction::laplacian(std::span<const double> x) const {
  const std::size_t n = center.size();
  double z2 = 0.0, lin = 0.0, grad_dot = 0.0;
  const double r2 = radius * radius;
  for (std::size_t d = 0; d < n; ++d) {
    const double z = x[d] - center[d];
    z2 += z * z;
    if (!linear.empty()) lin += linear[d] * z;
  }
  const BumpValues bv = bump(z2 / r2);
  if (bv.b == 0.0) return 0.0;
  for (std::size_t d = 0; d < n; ++d) {
    const double z = x[d] - center[d];
    const double dp = (linear.empty() ? 0.0 : linear[d]) + 2.0 * quadratic * z;
    grad_dot += dp * bv.db * 2.0 * z / r2;
  }
  const double p = a0 + lin + quadratic * z2;
  const double lap_p = 2.0 * n * quadratic;
  const double lap_g = bv.d2b * 4.0 * z2 / (r2 * r2) + bv.db * 2.0 * n / r2;
  return bv.b * lap_p + 2.0 * grad_dot + p * lap_g;
}

void VectorTestFunction::jacobian(std::span<const double> x, std::span<double> out) const {
  const std::size_t n = center.size();
  require(components.size() == n, "vector test function needs n components");
  std::vector<double> g(n);
  for (std::size_t j = 0; j < n; ++j) {
    TestFunction c = components[j];
    c.center = center;
    c.radius = radius;
    c.gradient(x, g);
    for (std::size_t i = 0; i < n; ++i) out[i * n + j] = g[i];
  }
}

double VectorTestFunction::divergence(std::span<const double> x) const {
  const std::size_t n = center.size();
  std::vector<double> jac(n * n);
  jacobian(x, jac);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += jac[i * n + i];
  return s;
}

WeakResidual weak_residual(const ScalarField& u, const TestFunction& phi,
                           const QuadratureRule& rule) {
  require(rule.dimension() == u.dimension(), "rule and field dimension differ");
  require(static_cast<int>(phi.center.size()) == u.dimension(), "test function dimension differs");
  require(phi.radius > 0.0, "test function support radius must be positive");
  require(rule.kind() != RegionKind::Sphere && rule.contains_ball(phi.center, phi.radius),
          "test function support exceeds the quadrature region");
  const int n = u.dimension();
  const auto sums = integrate_many<2>(rule, [&](std::span<const double> x, std::array<double, 2>& out) {
    const double v = u(x);
    out[0] = -phi.laplacian(x) * v;
    out[1] = phi.value(x) * nonlinearity(v, n);
  });
  return {sums[0], sums[1], sums[0] - sums[1]};
}

StationarityResidual stationarity_residual(const ScalarField& u, const VectorTestFunction& phi,
                                           const QuadratureRule& rule) {
  const int n = u.dimension();
  require(rule.dimension() == n, "rule and field dimension differ");
  require(static_cast<int>(phi.center.size()) == n, "test function dimension differs");
  require(rule.kind() != RegionKind::Sphere && rule.contains_ball(phi.center, phi.radius),
          "test function support exceeds the quadrature region");
  const double c = (n - 2.0) / (2.0 * n);
  const auto sums = integrate_many<2>(rule, [&](std::span<const double> x, std::array<double, 2>& out) {
    std::vector<double> g(n), jac(n * n);
    gradient_into(u, x, g);
    phi.jacobian(x, jac);
    double div = 0.0, quad = 0.0;
    for (int i = 0; i < n; ++i) {
      div += jac[i * n + i];
      for (int j = 0; j < n; ++j) quad += g[i] * g[j] * jac[i * n + j];
    }
    out[0] = quad - 0.5 * norm2(g) * div + c * critical_power(u(x), n) * div;
    out[1] = div;
  });
  return {sums[0], sums[1]};
}

PohozaevBreakdown pohozaev_residual(const ScalarField& u, const Point& x, double r,
                                    const RuleOptions& options) {
  const int n = u.dimension();
  require(r > 0.0, "Pohozaev radius must be positive");
  const QuadratureRule ball = build_ball_rule(n, x, r, options);
  const QuadratureRule sphere = build_sphere_rule(n, x, r, options.angular_order);
  const auto vol = integrate_many<2>(ball, [&](std::span<const double> y, std::array<double, 2>& out) {
    std::vector<double> g(n);
    gradient_into(u, y, g);
    out[0] = critical_power(u(y), n);
    out[1] = norm2(g);
  });
  const auto bdy = integrate_many<3>(sphere, [&](std::span<const double> y, std::array<double, 3>& out) {
    std::vector<double> g(n);
    gradient_into(u, y, g);
    double radial = 0.0;
    for (int d = 0; d < n; ++d) radial += g[d] * (y[d] - x[d]);
    radial /= r;
    out[0] = critical_power(u(y), n);
    out[1] = norm2(g);
    out[2] = radial * radial;
  });
  PohozaevBreakdown p;
  p.terms[0] = 0.5 * (n - 2.0) * vol[0];
  p.terms[1] = -0.5 * (n - 2.0) * vol[1];
  p.terms[2] = -r * (n - 2.0) / (2.0 * n) * bdy[0];
  p.terms[3] = 0.5 * r * bdy[1];
  p.terms[4] = r * bdy[2];
  p.residual = p.terms[0] + p.terms[1] + p.terms[2] + p.terms[3] - p.terms[4];
  double scale = 0.0;
  for (double t : p.terms) scale = std::max(scale, std::abs(t));
  p.relative = scale > 0.0 ? std::abs(p.residual) / scale : 0.0;
  p.printed_term3 = -(n - 2.0) / (2.0 * n) * bdy[0];
  p.printed_residual = p.terms[0] + p.terms[1] + p.printed_term3 + p.terms[3] - p.terms[4];
  return p;
}

}  // namespace bubblelab
