#include "bubblelab/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bubblelab/csv.hpp"
#include "bubblelab/lorentz.hpp"
#include "bubblelab/monotonicity.hpp"
#include "bubblelab/report.hpp"

namespace bubblelab {

void RunConfig::validate() const {
  require_dimension(dimension);
  require(radial_points > 0, "radial_points must be positive");
  require(angular_order >= 0, "angular_order must be >= 0");
  require(truncation_radius > 0.0, "truncation radius must be positive");
  require(sample_radius > 0.0, "sample radius must be positive");
  require(fd_step >= 0.0, "fd_step must be >= 0");
  require(epsilon0 >= 0.0 && epsilon_regularity >= 0.0, "thresholds must be >= 0");
  require(threads >= 1, "threads must be >= 1");
  require(!output_dir.empty(), "output directory must be set");
}

RuleOptions RunConfig::rule() const {
  RuleOptions r;
  r.radial_points = radial_points;
  r.angular_order = angular_order;
  return r;
}

Point parse_point(const std::string& text) {
  Point p;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) p.push_back(parse_double(item));
  require(!p.empty(), "empty point '" + text + "'");
  return p;
}

namespace {

std::pair<std::string, std::string> split_token(const std::string& token) {
  const auto eq = token.find('=');
  require(eq != std::string::npos && eq > 0, "expected key=value, got '" + token + "'");
  return {token.substr(0, eq), token.substr(eq + 1)};
}

int parse_int(const std::string& s) {
  const double v = parse_double(s);
  require(v == std::floor(v) && std::abs(v) < 1e9, "expected an integer, got '" + s + "'");
  return static_cast<int>(v);
}

}  // namespace

ScalarField parse_bubble_spec(const std::vector<std::string>& tokens, int default_n) {
  int n = default_n;
  double delta = 1.0;
  int sign = 1;
  Point center;
  for (const auto& t : tokens) {
    const auto [k, v] = split_token(t);
    if (k == "n") n = parse_int(v);
    else if (k == "delta") delta = parse_double(v);
    else if (k == "center" || k == "y") center = parse_point(v);
    else if (k == "sign") sign = parse_int(v);
    else throw InputError("unknown bubble key '" + k + "'");
  }
  require_dimension(n);
  require(delta > 0.0, "delta must be positive");
  if (center.empty()) center.assign(n, 0.0);
  require(static_cast<int>(center.size()) == n, "bubble center has the wrong dimension");
  return aubin_talenti(n, delta, center, sign);
}

SequenceSpec read_sequence_spec(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  try {
    SequenceSpec s;
    const int n = j.at("n").get<int>();
    std::vector<SequenceEntry> entries;
    for (const auto& b : j.value("bubbles", nlohmann::json::array())) {
      SequenceEntry e;
      e.center = b.contains("center") ? b.at("center").get<Point>() : Point(n, 0.0);
      e.schedule.base = b.value("base", 4.0);
      e.schedule.amplitude = b.value("amplitude", 1.0);
      e.sign = b.value("weight", 1);
      entries.push_back(std::move(e));
    }
    auto& c = s.config;
    c.k_max = j.value("k_max", c.k_max);
    c.k_large = j.value("k_large", c.k_large);
    c.epsilon0 = j.value("epsilon0", c.epsilon0);
    c.epsilon_n = j.value("epsilon_n", c.epsilon_n);
    c.r_small = j.value("r_small", c.r_small);
    c.r_grid = j.value("r_grid", c.r_grid);
    c.lattice_spacing = j.value("lattice_spacing", c.lattice_spacing);
    c.neck_radii = j.value("neck_radii", c.neck_radii);
    c.neck_outer = j.value("neck_outer", c.neck_outer);
    const double budget =
        j.contains("budget") && !j["budget"].is_null() ? j["budget"].get<double>() : INFINITY;
    s.sequence = make_sequence(n, std::move(entries), budget, std::max(c.k_max, c.k_large),
                               j.value("domain_radius", 1.0), j.value("description", path));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

namespace {

using nlohmann::json;

struct FieldArgs {
  std::vector<std::string> bubble;
  double constant = 0.0;
  bool zero = false;
  std::string file;
};

void add_field_options(CLI::App* sub, FieldArgs& f) {
  sub->add_option("--bubble", f.bubble, "Bubble as key=value tokens (n, delta, center, sign)")
      ->expected(0, CLI::detail::expected_max_vector_size);
  sub->add_option("--constant", f.constant, "Constant field value");
  sub->add_flag("--zero", f.zero, "Zero field");
  sub->add_option("--field-file", f.file, "Sampled field (.csv or .bin)");
}

struct FieldChoice {
  ScalarField field;
  std::string description;
  bool exact_solution = false;
};

FieldChoice make_field(CLI::App* sub, const FieldArgs& f, const RunConfig& cfg) {
  const int chosen = static_cast<int>(sub->count("--bubble") > 0) +
                     static_cast<int>(sub->count("--constant") > 0) + static_cast<int>(f.zero) +
                     static_cast<int>(!f.file.empty());
  require(chosen <= 1, "choose one of --bubble, --constant, --zero, --field-file");
  if (sub->count("--constant"))
    return {constant_field(cfg.dimension, f.constant), "constant " + format_double(f.constant), false};
  if (f.zero) return {zero_field(cfg.dimension), "zero", false};
  if (!f.file.empty()) {
    const bool binary = f.file.size() > 4 && f.file.substr(f.file.size() - 4) == ".bin";
    SampledGrid g = binary ? read_sampled_binary(f.file) : read_sampled_csv(f.file);
    return {sampled_field(std::move(g)), "samples " + f.file, false};
  }
  std::string desc = "bubble";
  for (const auto& t : f.bubble) desc += " " + t;
  return {parse_bubble_spec(f.bubble, cfg.dimension), desc, true};
}

struct Session {
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;
  json summary = json::object();
  std::filesystem::path dir() const { return std::filesystem::path(cfg.output_dir); }
  std::string file(const std::string& name) const { return (dir() / name).string(); }
  void say(const std::string& line) {
    if (!cfg.quiet && !cfg.json) out << line << "\n";
  }
};

std::string fmt(double v) { return format_double(v); }

// ---------------------------------------------------------------------------

int cmd_residual(Session& s, CLI::App* sub, const FieldArgs& fa, int points, bool fd,
                 const std::vector<std::string>& pohozaev) {
  const FieldChoice fc = make_field(sub, fa, s.cfg);
  const ScalarField& u = fc.field;
  const int n = u.dimension();
  require(points >= 1, "--points must be >= 1");
  Rng rng(s.cfg.seed);
  std::vector<Point> xs;
  for (int i = 0; i < points; ++i) xs.push_back(rng.in_ball(n, s.cfg.sample_radius));

  std::vector<std::string> header;
  for (int d = 1; d <= n; ++d) header.push_back("x" + std::to_string(d));
  header.insert(header.end(), {"u", "residual"});
  CsvWriter csv(s.file("residuals.csv"), header);
  const DerivativeMode mode = fd ? DerivativeMode::FiniteDifference : DerivativeMode::Auto;
  double worst = 0.0;
  for (const auto& x : xs) {
    const double r = pde_residual(u, x, s.cfg.fd_step, mode);
    worst = std::max(worst, std::abs(r));
    std::vector<double> row(x);
    row.push_back(u(x));
    row.push_back(r);
    csv.row(row);
  }
  s.summary["field"] = fc.description;
  s.summary["max_abs_residual"] = worst;
  s.say("field: " + fc.description);
  s.say("max |residual| over " + std::to_string(points) + " points: " + fmt(worst));
  bool ok = true;
  if (fc.exact_solution) {
    if (fd) {
      // convergence order as h halves, from the largest pointwise error
      const double h0 = s.cfg.fd_step > 0.0 ? s.cfg.fd_step : 1e-2;
      std::vector<double> errs;
      for (double h : {h0, h0 / 2, h0 / 4}) {
        double e = 0.0;
        for (const auto& x : xs)
          e = std::max(e, std::abs(laplacian(u, x, h, DerivativeMode::FiniteDifference) -
                                   u.analytic_laplacian(x)));
        errs.push_back(e);
      }
      const double order = std::min(std::log2(errs[0] / errs[1]), std::log2(errs[1] / errs[2]));
      s.summary["fd_errors"] = errs;
      s.summary["fd_order"] = order;
      s.say("finite-difference order: " + fmt(order));
      ok = ok && order >= 1.8;
    } else {
      ok = ok && worst < 1e-10;
    }
  } else {
    s.say("(not an exact solution: informational)");
  }
  if (!pohozaev.empty()) {
    std::vector<double> radii;
    for (const auto& t : pohozaev) {
      const auto [k, v] = split_token(t);
      require(k == "r", "--pohozaev takes r=<radius>[,<radius>...]");
      for (double r : parse_point(v)) radii.push_back(r);
    }
    CsvWriter pc(s.file("pohozaev.csv"), {"r", "term", "derived", "printed"});
    json rows = json::array();
    const char* names[] = {"volume_potential", "volume_dirichlet", "boundary_potential",
                           "boundary_dirichlet", "boundary_radial"};
    for (double r : radii) {
      const PohozaevBreakdown p = pohozaev_residual(u, Point(n, 0.0), r, s.cfg.rule());
      for (int t = 0; t < 5; ++t)
        pc.row(std::vector<std::string>{fmt(r), names[t], fmt(p.terms[t]),
                                        fmt(t == 2 ? p.printed_term3 : p.terms[t])});
      pc.row(std::vector<std::string>{fmt(r), "residual", fmt(p.residual), fmt(p.printed_residual)});
      pc.row(std::vector<std::string>{fmt(r), "relative", fmt(p.relative), ""});
      rows.push_back({{"r", r}, {"relative", p.relative}, {"printed_residual", p.printed_residual}});
      s.say("Pohozaev r=" + fmt(r) + ": relative residual " + fmt(p.relative) +
            " (printed variant residual " + fmt(p.printed_residual) + ")");
      if (fc.exact_solution) ok = ok && p.relative < 1e-6;
    }
    s.summary["pohozaev"] = rows;
  }
  return ok ? kPass : kToleranceFailure;
}

int cmd_monotonicity(Session& s, CLI::App* sub, const FieldArgs& fa,
                     const std::vector<std::string>& centers, double rmin, double rmax, int count) {
  const FieldChoice fc = make_field(sub, fa, s.cfg);
  const int n = fc.field.dimension();
  std::vector<Point> xs;
  for (const auto& c : centers) xs.push_back(parse_point(c));
  if (xs.empty()) xs.push_back(Point(n, 0.0));
  const double hi = rmax > 0.0 ? rmax : s.cfg.sample_radius;
  const RadialGrid grid = RadialGrid::log_spaced(rmin, hi, count);
  MonotonicityOptions opt;
  opt.rule = s.cfg.rule();
  bool ok = true;
  json probes = json::array();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    require(static_cast<int>(xs[i].size()) == n, "probe center has the wrong dimension");
    const MonotonicityProfile p = profile(fc.field, xs[i], grid, opt);
    write_profile_csv(s.file("profile_" + std::to_string(i) + ".csv"), p, n);
    const CheckReport mono = check_monotone(p);
    const CheckReport pos = check_positive(p);
    ok = ok && mono.passed() && pos.passed();
    probes.push_back({{"center", xs[i]},
                      {"monotone_violations", mono.violations.size()},
                      {"negative_values", pos.violations.size()},
                      {"E_first", p.values.front()},
                      {"E_last", p.values.back()}});
    s.say("center " + std::to_string(i) + ": E from " + fmt(p.values.front()) + " to " +
          fmt(p.values.back()) + ", " + std::to_string(mono.violations.size()) +
          " drops, " + std::to_string(pos.violations.size()) + " negative");
  }
  s.summary["field"] = fc.description;
  s.summary["probes"] = probes;
  return ok ? kPass : kToleranceFailure;
}

LorentzIndex parse_index(double p, const std::string& q) {
  LorentzIndex idx{p, (q == "inf" || q == "infinity") ? INFINITY : parse_double(q)};
  idx.validate();
  return idx;
}

/// |x|^{-n/2} on the annulus rho < |x| < outer, one cell per log-spaced shell.
SampledFunction inverse_power_samples(int n, double rho, double outer, int shells) {
  require(0.0 < rho && rho < outer, "need 0 < rho < outer");
  require(shells >= 1, "need at least one shell");
  SampledFunction f;
  const double w = unit_ball_volume(n);
  const double lr = std::log(rho), lo = std::log(outer);
  double prev = rho;
  for (int i = 1; i <= shells; ++i) {
    const double next = i == shells ? outer : std::exp(lr + (lo - lr) * i / shells);
    const double mid = std::sqrt(prev * next);
    f.values.push_back(std::pow(mid, -0.5 * n));
    f.measures.push_back(w * (std::pow(next, n) - std::pow(prev, n)));
    prev = next;
  }
  f.domain = {"annulus", w * (std::pow(outer, n) - std::pow(rho, n))};
  return f;
}

int cmd_lorentz(Session& s, const std::string& analytic, const std::string& input, double p,
                const std::string& q, int samples, double rho, double outer, int trials) {
  const LorentzIndex idx = parse_index(p, q);
  bool ok = true;
  SampledFunction f;
  bool have = false;
  const int n = s.cfg.dimension;
  if (!analytic.empty()) {
    require(analytic == "inv-sqrt-n", "unknown analytic function '" + analytic + "'");
    require(input.empty(), "choose --analytic or --input");
    f = inverse_power_samples(n, rho, outer > 0.0 ? outer : s.cfg.truncation_radius, samples);
    have = true;
  } else if (!input.empty()) {
    f = read_sampled_function(input);
    have = true;
  }
  if (have) {
    const RearrangementTable t = rearrange(f);
    write_rearrangement_csv(s.file("rearrangement.csv"), t);
    const double norm = lorentz_norm(t, idx);
    s.summary["norm"] = norm;
    s.say("L^{" + fmt(idx.p) + "," + fmt(idx.q) + "} norm: " + fmt(norm));
    if (!analytic.empty() && idx.p == 2.0 && std::isinf(idx.q)) {
      const double expected = std::sqrt(unit_ball_volume(n));
      const double rel = std::abs(norm - expected) / expected;
      s.summary["expected"] = expected;
      s.summary["relative_error"] = rel;
      s.say("analytic value " + fmt(expected) + ", relative error " + fmt(rel));
      ok = ok && rel <= 0.02;
    }
    if (idx.p == idx.q) {
      std::vector<double> terms(f.values.size());
      for (std::size_t i = 0; i < terms.size(); ++i)
        terms[i] = std::pow(std::abs(f.values[i]), idx.p) * f.measures[i];
      const double plain = std::pow(pairwise_sum(terms), 1.0 / idx.p);
      const double rel = plain > 0.0 ? std::abs(norm - plain) / plain : std::abs(norm);
      s.summary["plain_lp"] = plain;
      s.say("plain L^p norm " + fmt(plain) + ", relative difference " + fmt(rel));
      ok = ok && rel <= 1e-10;
    }
  }
  if (trials > 0) {
    Rng rng(s.cfg.seed);
    int held = 0;
    double worst = 0.0;
    CsvWriter csv(s.file("duality.csv"), {"trial", "product_l1", "f_21", "g_2inf"});
    for (int t = 0; t < trials; ++t) {
      const SampledFunction a = random_sampled_function(rng);
      const SampledFunction b = random_values_like(rng, a);
      const DualityCheck d = duality_product_check(a, b);
      if (d.holds()) ++held;
      const double rhs = d.f_21 * d.g_2inf;
      if (rhs > 0.0) worst = std::max(worst, d.product_l1 / rhs);
      csv.row(std::vector<double>{static_cast<double>(t), d.product_l1, d.f_21, d.g_2inf});
    }
    s.summary["duality_trials"] = trials;
    s.summary["duality_held"] = held;
    s.summary["duality_worst_ratio"] = worst;
    s.say("duality held in " + std::to_string(held) + "/" + std::to_string(trials) +
          " trials, worst ratio " + fmt(worst));
    ok = ok && held == trials;
  }
  require(have || trials > 0, "nothing to do: give --analytic, --input or --duality-trials");
  return ok ? kPass : kToleranceFailure;
}

int cmd_neck(Session& s, const std::string& spec, int k, double delta,
             const std::vector<double>& radii, double outer) {
  require(!radii.empty(), "--R needs at least one radius");
  int n = s.cfg.dimension;
  ScalarField u = zero_field(n);
  Point center(n, 0.0);
  if (!spec.empty()) {
    const SequenceSpec ss = read_sequence_spec(spec);
    n = ss.sequence.dimension;
    u = ss.sequence.field(k);
    center = ss.sequence.empty() ? Point(n, 0.0) : ss.sequence.entries[0].center;
    delta = ss.sequence.empty() ? delta : ss.sequence.entries[0].schedule.at(k);
  } else {
    u = aubin_talenti(n, delta);
  }
  const double L0 = bubble_constant(n).value;
  CsvWriter csv(s.file("necks.csv"), {"R", "inner", "outer", "energy", "fraction_of_lambda0"});
  CsvWriter shells(s.file("neck_shells.csv"), {"R", "inner", "outer", "energy", "tail_bound"});
  std::vector<double> fractions;
  json rows = json::array();
  for (double R : radii) {
    const NeckEnergy ne = neck_energy(u, center, R * delta, outer, delta);
    fractions.push_back(ne.total / L0);
    csv.row(std::vector<double>{R, ne.inner, outer, ne.total, ne.total / L0});
    for (const auto& sh : ne.shells)
      shells.row(std::vector<double>{R, sh.inner, sh.outer, sh.energy, sh.tail_bound});
    rows.push_back({{"R", R}, {"energy", ne.total}, {"fraction", ne.total / L0}});
    s.say("R=" + fmt(R) + ": neck energy " + fmt(ne.total) + " (" + fmt(100.0 * ne.total / L0) +
          "% of Lambda_0)");
  }
  bool ok = true;
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (radii[i] > radii[i - 1]) ok = ok && fractions[i] < fractions[i - 1];
  const std::size_t last = static_cast<std::size_t>(
      std::max_element(radii.begin(), radii.end()) - radii.begin());
  ok = ok && fractions[last] < 0.01;
  s.summary["necks"] = rows;
  return ok ? kPass : kToleranceFailure;
}

int cmd_quantize(Session& s, const std::string& spec, int k_max, int k_large) {
  SequenceSpec ss = read_sequence_spec(spec);
  if (k_max > 0) ss.config.k_max = k_max;
  if (k_large > 0) ss.config.k_large = k_large;
  if (s.cfg.epsilon0 > 0.0) ss.config.epsilon0 = s.cfg.epsilon0;
  if (s.cfg.epsilon_regularity > 0.0) ss.config.epsilon_n = s.cfg.epsilon_regularity;
  const DefectReport rep = quantization_report(ss.sequence, ss.config);
  write_report(s.cfg.output_dir, rep);
  bool ok = true;
  json pts = json::array();
  for (const auto& p : rep.points) {
    const bool good = !p.fit_failed && p.theta.stable && p.distance_to_integer <= 0.05 &&
                      p.n_hat == static_cast<int>(std::lround(p.ratio));
    ok = ok && good;
    pts.push_back({{"x", p.x}, {"n_hat", p.n_hat}, {"ratio", p.ratio}, {"pass", good}});
    std::string where;
    for (double v : p.x) where += (where.empty() ? "" : ",") + fmt(v);
    s.say("point (" + where + "): N=" + std::to_string(p.n_hat) + ", Theta/Lambda_0=" +
          fmt(p.ratio) + (good ? "" : "  [FAIL]"));
  }
  if (rep.points.empty()) s.say("no concentration points detected");
  s.summary["points"] = pts;
  s.summary["lambda0"] = rep.lambda0.value;
  return ok ? kPass : kToleranceFailure;
}

int cmd_bubble_constant(Session& s, int points) {
  const BubbleConstant b = bubble_constant(s.cfg.dimension, points);
  s.summary["n"] = b.dimension;
  s.summary["lambda0"] = b.value;
  s.summary["error_bound"] = b.error_bound;
  s.summary["points"] = b.points;
  if (!s.cfg.quiet && !s.cfg.json)
    s.out << "Lambda_0(n=" << b.dimension << ") = " << fmt(b.value) << " +- "
          << fmt(b.error_bound) << "\n";
  return b.error_bound <= 1e-6 * b.value ? kPass : kToleranceFailure;
}

// Effective configuration as INI: global options, then the chosen subcommand's
// section. Subcommand options left at their defaults are echoed as comments so
// the file can be fed back through --config without tripping exclusive choices.
std::string config_echo(const CLI::App& app, const CLI::App& sub) {
  const auto quote = [](const std::string& v) {
    const bool number = !v.empty() && v.find_first_not_of("0123456789+-.eEinfa") == std::string::npos;
    return number || v == "true" || v == "false" ? v : "\"" + v + "\"";
  };
  const auto lines = [&](const CLI::App& a, bool comment_defaults) {
    std::ostringstream os;
    for (const CLI::Option* opt : a.get_options()) {
      if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
      const std::string& name = opt->get_lnames().front();
      if (name == "help" || name == "config") continue;
      std::vector<std::string> values;
      const bool given = opt->count() > 0 && !(opt->get_expected_max() == 0 && !opt->as<bool>());
      if (opt->get_expected_max() == 0) {
        values = {given ? "true" : "false"};
      } else if (opt->count() > 0) {
        values = opt->results();
      } else {
        const std::string d = opt->get_default_str();
        if (d.empty() || d == "{}" || d == "[]") continue;
        if (d.front() == '[') {
          std::istringstream in(d.substr(1, d.size() - 2));
          for (std::string item; std::getline(in, item, ',');) values.push_back(item);
        } else {
          values = {d};
        }
      }
      if (comment_defaults && !given) os << "# ";
      os << name << "=";
      if (values.size() == 1 && opt->get_items_expected_max() <= 1) {
        os << quote(values[0]);
      } else {
        os << "[";
        for (std::size_t i = 0; i < values.size(); ++i) os << (i ? ", " : "") << quote(values[i]);
        os << "]";
      }
      os << "\n";
    }
    return os.str();
  };
  return lines(app, false) + "\n[" + sub.get_name() + "]\n" + lines(sub, true);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical experiments on concentrating solutions of the critical equation",
               "bubble-lab"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI configuration file; flags override its values");
  app.option_defaults()->always_capture_default();

  RunConfig cfg;
  app.add_option("--n,--dimension", cfg.dimension, "Space dimension (>= 3)");
  app.add_option("--radial-points", cfg.radial_points, "Radial Gauss points per ball");
  app.add_option("--angular-order", cfg.angular_order, "Sphere rule order (0 = default)");
  app.add_option("--truncation-radius", cfg.truncation_radius, "Cut-off radius R_inf for R^n integrals");
  app.add_option("--sample-radius", cfg.sample_radius, "Radius of the probe ball");
  app.add_option("--fd-step", cfg.fd_step, "Finite-difference step (0 = 1e-4 (1+|x|))");
  app.add_option("--epsilon0", cfg.epsilon0, "Concentration threshold (0 = Lambda_0/(4n))");
  app.add_option("--epsilon-reg", cfg.epsilon_regularity, "Regularity threshold (0 = Lambda_0/10)");
  app.add_option("--out", cfg.output_dir, "Output directory");
  app.add_option("--seed", cfg.seed, "Random seed");
  app.add_option("--threads", cfg.threads, "Worker threads")->configurable(false);
  app.add_flag("--quiet", cfg.quiet, "No text output")->configurable(false);
  app.add_flag("--json", cfg.json, "Print the run summary as JSON")->configurable(false);

  FieldArgs residual_field, mono_field;
  int points = 200;
  bool fd = false;
  std::vector<std::string> pohozaev;
  auto* residual = app.add_subcommand("residual", "PDE residual of a field at random points");
  add_field_options(residual, residual_field);
  residual->add_option("--points", points, "Number of random points");
  residual->add_flag("--fd", fd, "Use finite differences and report the convergence order");
  residual->add_option("--pohozaev", pohozaev, "Pohozaev breakdown: r=<radius>[,...]")
      ->expected(1, CLI::detail::expected_max_vector_size);

  std::vector<std::string> centers;
  double rmin = 0.05, rmax = 0.0;
  int count = 40;
  auto* mono = app.add_subcommand("monotonicity", "Profile of the monotone quantity E(x, r)");
  add_field_options(mono, mono_field);
  mono->add_option("--center", centers, "Probe center x1,...,xn (repeatable)");
  mono->add_option("--rmin", rmin, "Smallest radius");
  mono->add_option("--rmax", rmax, "Largest radius (0 = truncation radius)");
  mono->add_option("--count", count, "Number of radii");

  std::string analytic, input, q = "inf";
  double p = 2.0, rho = 1e-3, outer_l = 0.0;
  int samples = 100000, trials = 0;
  auto* lorentz = app.add_subcommand("lorentz", "Rearrangements and Lorentz norms");
  lorentz->add_option("--analytic", analytic, "Analytic sample: inv-sqrt-n (|x|^{-n/2})");
  lorentz->add_option("--input", input, "CSV with columns value,cell_measure");
  lorentz->add_option("--p", p, "Lorentz p");
  lorentz->add_option("--q", q, "Lorentz q (number or inf)");
  lorentz->add_option("--samples", samples, "Radial shells for --analytic");
  lorentz->add_option("--rho", rho, "Inner radius for --analytic");
  lorentz->add_option("--outer", outer_l, "Outer radius for --analytic (0 = truncation radius)");
  lorentz->add_option("--duality-trials", trials, "Random L^{2,1}-L^{2,inf} duality trials");

  std::string neck_spec;
  int neck_k = 10;
  double delta = 1e-3, outer = 0.5;
  std::vector<double> radii{10.0, 30.0, 100.0};
  auto* neck = app.add_subcommand("neck", "Energy between the bubble scale and the outer radius");
  neck->add_option("--spec", neck_spec, "Sequence spec (JSON); default is one bubble");
  neck->add_option("--k", neck_k, "Sequence index when --spec is given");
  neck->add_option("--delta", delta, "Bubble scale without --spec");
  neck->add_option("--R", radii, "Inner radii in units of the scale");
  neck->add_option("--outer", outer, "Outer radius");

  std::string qspec;
  int k_max = 0, k_large = 0;
  auto* quantize = app.add_subcommand("quantize", "Singular set, bubble inventory and Theta");
  quantize->add_option("--spec", qspec, "Sequence spec (JSON)")->required();
  quantize->add_option("--k-max", k_max, "Override k_max");
  quantize->add_option("--k-large", k_large, "Override k_large");

  int bc_points = 128;
  auto* bc = app.add_subcommand("bubble-constant", "Energy Lambda_0 of the standard bubble");
  bc->add_option("--points", bc_points, "Gauss points (the check doubles them)");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kPass;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  }

  Session s{cfg, out, err};
  try {
    cfg.validate();
    s.cfg = cfg;
    parallel::set_threads(cfg.threads);
    std::filesystem::create_directories(cfg.output_dir);
    CLI::App* sub = app.get_subcommands().front();
    {
      std::ofstream echo(s.file("config.ini"), std::ios::binary);
      echo << config_echo(app, *sub);
    }
    int code = kPass;
    const std::string name = sub->get_name();
    if (name == "residual") code = cmd_residual(s, sub, residual_field, points, fd, pohozaev);
    else if (name == "monotonicity") code = cmd_monotonicity(s, sub, mono_field, centers, rmin, rmax, count);
    else if (name == "lorentz") code = cmd_lorentz(s, analytic, input, p, q, samples, rho, outer_l, trials);
    else if (name == "neck") code = cmd_neck(s, neck_spec, neck_k, delta, radii, outer);
    else if (name == "quantize") code = cmd_quantize(s, qspec, k_max, k_large);
    else code = cmd_bubble_constant(s, bc_points);
    s.summary["command"] = name;
    s.summary["status"] = code == kPass ? "pass" : "fail";
    const std::string doc = s.summary.dump(2) + "\n";
    {
      std::ofstream js(s.file("summary.json"), std::ios::binary);
      js << doc;
    }
    if (cfg.json && !cfg.quiet) out << doc;
    return code;
  } catch (const InputError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
}

}  // namespace bubblelab
