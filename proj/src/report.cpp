#include "bubblelab/report.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "bubblelab/csv.hpp"

namespace bubblelab {

namespace {

std::vector<std::string> point_header(int n, std::vector<std::string> tail) {
  std::vector<std::string> h{"point"};
  for (int d = 1; d <= n; ++d) h.push_back("x" + std::to_string(d));
  h.insert(h.end(), tail.begin(), tail.end());
  return h;
}

}  // namespace

std::string report_json(const DefectReport& r) {
  using nlohmann::json;
  json j;
  j["schema"] = kReportSchema;
  j["dimension"] = r.dimension;
  j["lambda0"] = {{"value", r.lambda0.value},
                  {"error_bound", r.lambda0.error_bound},
                  {"points", r.lambda0.points}};
  j["thresholds"] = {{"epsilon0", r.epsilon0},
                     {"epsilon_n", r.epsilon_n},
                     {"r_grid", r.r_grid},
                     {"r_small", r.r_small},
                     {"k_max", r.k_max},
                     {"k_large", r.k_large}};
  j["budget"] = {{"declared", std::isfinite(r.budget) ? json(r.budget) : json(nullptr)},
                 {"measured", r.measured_budget}};
  j["weak_limit_energy"] = 0.0;
  json sigma = json::array(), theta = json::array(), n_hat = json::array(),
       ratios = json::array(), necks = json::array(), tol = json::array(),
       detail = json::array();
  for (const auto& p : r.points) {
    sigma.push_back(p.x);
    theta.push_back(p.theta.value);
    n_hat.push_back(p.n_hat);
    ratios.push_back(p.ratio);
    json nk = json::array();
    for (const auto& k : p.necks) nk.push_back({{"R", k.R}, {"k", k.k}, {"energy", k.energy}});
    necks.push_back(nk);
    tol.push_back({{"cross_term", p.cross_term},
                   {"tail", p.tail},
                   {"residual_energy", p.residual_energy},
                   {"total", p.tolerance}});
    json inv = json::array();
    for (const auto& b : p.inventory)
      inv.push_back({{"scale", b.scale},
                     {"center", b.center},
                     {"sign", b.sign},
                     {"energy", b.energy},
                     {"half_radius", b.half_radius},
                     {"fit_residual", b.fit_residual},
                     {"iterations", b.iterations},
                     {"converged", b.converged}});
    detail.push_back({{"declared", p.declared},
                      {"merged_lattice_points", p.merged_lattice_points},
                      {"theta_radii", p.theta.radii},
                      {"theta_values", p.theta.values},
                      {"theta_spread", p.theta.spread},
                      {"theta_stable", p.theta.stable},
                      {"distance_to_integer", p.distance_to_integer},
                      {"fit_failed", p.fit_failed},
                      {"inventory", inv}});
  }
  j["sigma_points"] = sigma;
  j["theta"] = theta;
  j["n_hat"] = n_hat;
  j["ratios"] = ratios;
  j["necks"] = necks;
  j["tolerances"] = tol;
  j["points"] = detail;
  return j.dump(2) + "\n";
}

void write_report(const std::string& dir, const DefectReport& r) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  {
    std::ofstream out(base / "report.json", std::ios::binary);
    require(static_cast<bool>(out), "cannot write report.json in " + dir);
    out << report_json(r);
  }
  const int n = r.dimension;
  CsvWriter sigma((base / "sigma.csv").string(),
                  point_header(n, {"theta", "n_hat", "ratio", "distance_to_integer", "tolerance",
                                   "theta_stable"}));
  CsvWriter inv((base / "inventory.csv").string(),
                point_header(n, {"bubble", "scale", "sign", "energy", "converged"}));
  CsvWriter necks((base / "necks.csv").string(), point_header(n, {"R", "k", "energy"}));
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto& p = r.points[i];
    auto row = [&](std::vector<std::string> tail) {
      std::vector<std::string> f{std::to_string(i)};
      for (double v : p.x) f.push_back(format_double(v));
      f.insert(f.end(), tail.begin(), tail.end());
      return f;
    };
    sigma.row(row({format_double(p.theta.value), std::to_string(p.n_hat), format_double(p.ratio),
                   format_double(p.distance_to_integer), format_double(p.tolerance),
                   p.theta.stable ? "1" : "0"}));
    for (std::size_t b = 0; b < p.inventory.size(); ++b) {
      const auto& bb = p.inventory[b];
      inv.row(row({std::to_string(b), format_double(bb.scale), std::to_string(bb.sign),
                   format_double(bb.energy), bb.converged ? "1" : "0"}));
    }
    for (const auto& k : p.necks)
      necks.row(row({format_double(k.R), std::to_string(k.k), format_double(k.energy)}));
  }
}

}  // namespace bubblelab
