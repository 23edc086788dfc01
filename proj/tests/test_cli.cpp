#include <doctest.h>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bubblelab/csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kData = BUBBLELAB_EXAMPLES;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "bubblelab_cli" / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
  fs::path dir;
  json summary() const { return json::parse(slurp(dir / "summary.json")); }
};

// Runs the driver with --out <dir> prepended; args are passed through the shell.
Run run(const std::string& name, const std::string& args) {
  Run r;
  r.dir = scratch(name);
  const fs::path o = r.dir.string() + ".stdout", e = r.dir.string() + ".stderr";
  const std::string cmd = std::string("\"") + BUBBLELAB_CLI + "\" --out \"" + r.dir.string() + "\" " +
                          args + " > \"" + o.string() + "\" 2> \"" + e.string() + "\"";
  const int status = std::system(cmd.c_str());
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

}  // namespace

TEST_CASE("residual subcommand") {
  const Run a = run("res_bubble", "residual --bubble n=3 delta=1");
  CHECK(a.code == 0);
  CHECK(a.summary()["max_abs_residual"].get<double>() < 1e-10);
  const bubblelab::CsvTable t = bubblelab::read_csv((a.dir / "residuals.csv").string());
  CHECK(t.header == std::vector<std::string>{"x1", "x2", "x3", "u", "residual"});
  CHECK(t.rows.size() == 200);

  const Run c = run("res_const", "residual --constant 1 --points 10");
  CHECK(c.code == 0);
  for (const auto& row : bubblelab::read_csv((c.dir / "residuals.csv").string()).rows)
    CHECK(bubblelab::parse_double(row.back()) == -1.0);

  const Run p = run("res_pohozaev", "residual --bubble n=4 --pohozaev r=0.5,1,2");
  CHECK(p.code == 0);
  CHECK(fs::exists(p.dir / "pohozaev.csv"));
  for (const auto& row : p.summary()["pohozaev"]) CHECK(row["relative"].get<double>() < 1e-6);

  const Run fd = run("res_fd", "--n 5 residual --bubble delta=1 --fd --points 50");
  CHECK(fd.code == 0);
  CHECK(fd.summary()["fd_order"].get<double>() >= 1.8);
}

TEST_CASE("monotonicity subcommand") {
  const Run b = run("mono_bubble", "monotonicity --bubble n=3 --center 0,0,0 --center 0.3,0,0 --count 20");
  CHECK(b.code == 0);
  const bubblelab::CsvTable t = bubblelab::read_csv((b.dir / "profile_1.csv").string());
  CHECK(t.header == std::vector<std::string>{"r", "E", "term_volume", "term_boundary_derivative",
                                             "term_boundary_over_r"});
  CHECK(t.rows.size() == 20);

  const Run z = run("mono_zero", "monotonicity --zero --count 10 --rmax 5");
  CHECK(z.code == 0);
  for (const auto& row : bubblelab::read_csv((z.dir / "profile_0.csv").string()).rows)
    CHECK(bubblelab::parse_double(row[1]) == 0.0);
}

TEST_CASE("lorentz subcommand") {
  const Run w = run("lor_weak", "lorentz --analytic inv-sqrt-n --p 2 --q inf");
  CHECK(w.code == 0);
  CHECK(std::abs(w.summary()["norm"].get<double>() - 2.04665) < 0.02 * 2.04665);
  CHECK(fs::exists(w.dir / "rearrangement.csv"));

  const Run l2 = run("lor_l2", "lorentz --analytic inv-sqrt-n --p 2 --q 2 --samples 1000 --outer 10");
  CHECK(l2.code == 0);
  const json s = l2.summary();
  CHECK(std::abs(s["norm"].get<double>() - s["plain_lp"].get<double>()) <=
        1e-10 * s["plain_lp"].get<double>());

  const Run d = run("lor_dual", "--seed 4 lorentz --analytic inv-sqrt-n --duality-trials 300");
  CHECK(d.code == 0);
  CHECK(d.summary()["duality_held"].get<int>() == 300);
}

TEST_CASE("quantize subcommand") {
  const Run one = run("q_single", "quantize --spec " + kData + "/single.json");
  CHECK(one.code == 0);
  const json r1 = json::parse(slurp(one.dir / "report.json"));
  CHECK(r1["schema"] == "bubble-lab/1");
  CHECK(r1["n_hat"] == json::array({1}));
  CHECK(std::abs(r1["ratios"][0].get<double>() - 1.0) <= 0.05);
  for (const char* f : {"sigma.csv", "inventory.csv", "necks.csv", "config.ini"})
    CHECK(fs::exists(one.dir / f));

  const Run three = run("q_tower", "quantize --spec " + kData + "/tower3.json");
  CHECK(three.code == 0);
  const json r3 = json::parse(slurp(three.dir / "report.json"));
  CHECK(r3["n_hat"] == json::array({3}));
  CHECK(std::abs(r3["ratios"][0].get<double>() - 3.0) <= 0.05);

  const Run two = run("q_two", "quantize --spec " + kData + "/two_points.json");
  CHECK(two.code == 0);
  CHECK(json::parse(slurp(two.dir / "report.json"))["sigma_points"].size() == 2);

  const Run zero = run("q_zero", "quantize --spec " + kData + "/zero.json");
  CHECK(zero.code == 0);
  CHECK(json::parse(slurp(zero.dir / "report.json"))["sigma_points"].empty());
}

TEST_CASE("neck and bubble-constant subcommands") {
  const Run n = run("neck", "neck --delta 1e-3");
  CHECK(n.code == 0);
  CHECK(n.summary()["necks"].size() == 3);
  CHECK(fs::exists(n.dir / "neck_shells.csv"));

  const Run bc = run("bc", "bubble-constant");
  CHECK(bc.code == 0);
  CHECK(std::abs(bc.summary()["lambda0"].get<double>() - 25.641984409938) < 1e-9);
}

TEST_CASE("exit codes") {
  CHECK(run("e_tol", "neck --delta 1e-3 --R 1 2").code == 1);
  CHECK(run("e_budget", "quantize --spec " + kData + "/over_budget.json").code == 2);
  CHECK(run("e_schedule", "quantize --spec " + kData + "/constant_schedule.json").code == 2);
  CHECK(run("e_missing", "quantize --spec " + kData + "/does_not_exist.json").code == 2);
  CHECK(run("e_delta", "residual --bubble n=3 delta=-1").code == 2);
  CHECK(run("e_token", "residual --bubble n=3 width=2").code == 2);
  CHECK(run("e_two_fields", "residual --zero --constant 2").code == 2);
  CHECK(run("e_dim", "--n 2 bubble-constant").code == 2);
  CHECK(run("e_option", "bubble-constant --no-such-flag").code == 2);
  const Run none = run("e_none", "");
  CHECK(none.code == 2);
  CHECK_FALSE(none.err.empty());
}

TEST_CASE("quiet and json output") {
  const Run q = run("quiet", "--quiet bubble-constant");
  CHECK(q.code == 0);
  CHECK(q.out.empty());
  const Run j = run("json", "--json bubble-constant");
  CHECK(j.code == 0);
  const json doc = json::parse(j.out);
  CHECK(doc["command"] == "bubble-constant");
  CHECK(doc["status"] == "pass");
  CHECK(doc == j.summary());
}

TEST_CASE("config files") {
  const Run a = run("cfg_file", "--config " + kData + "/run.ini bubble-constant");
  CHECK(a.code == 0);
  CHECK(a.summary()["n"] == 4);
  const std::string echo = slurp(a.dir / "config.ini");
  CHECK(echo.find("radial-points=48") != std::string::npos);
  CHECK(echo.find("seed=7") != std::string::npos);
  CHECK(echo.find("threads") == std::string::npos);

  const Run b = run("cfg_override", "--config " + kData + "/run.ini --n 5 bubble-constant");
  CHECK(b.summary()["n"] == 5);

  // the echo reproduces the run
  const Run c = run("cfg_first", "--seed 3 residual --bubble n=3 delta=0.5 --points 20");
  const Run d = run("cfg_again", "--config " + (c.dir / "config.ini").string() + " residual");
  CHECK(d.code == 0);
  CHECK(slurp(c.dir / "residuals.csv") == slurp(d.dir / "residuals.csv"));
  CHECK(slurp(c.dir / "summary.json") == slurp(d.dir / "summary.json"));
}

TEST_CASE("outputs do not depend on the thread count") {
  const std::string args = "quantize --spec " + kData + "/tower3.json";
  const Run a = run("thr_1", "--threads 1 " + args);
  const Run b = run("thr_4", "--threads 4 " + args);
  for (const char* f : {"report.json", "sigma.csv", "inventory.csv", "necks.csv", "summary.json"}) {
    CAPTURE(f);
    CHECK(slurp(a.dir / f) == slurp(b.dir / f));
  }
}
