#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

const char* kBox = R"("ensemble": {"potential": [], "walls": [-1, 1], "beta": 2, "n": 32}, "statistic": [0, 1])";
const char* kQuartic = R"("ensemble": {"potential": [0, 0, 0.25], "beta": 2, "n": 32}, "statistic": [0, 0, 0, 0, 1])";

struct Run {
  int code;
  std::string out;
  std::string err;
  fs::path dir;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "ldgas_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Run invoke(const std::string& name, const std::string& command, const std::string& config,
           std::vector<std::string> extra = {}) {
  const fs::path dir = scratch(name);
  const fs::path cfg = dir / "config.json";
  std::ofstream(cfg) << config;
  std::vector<std::string> args = {"ldgas", command, cfg.string(), "--out", (dir / "out").string()};
  args.insert(args.end(), extra.begin(), extra.end());
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = ldgas::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str(), dir / "out"};
}

std::string body(const std::string& members) { return "{" + members + "}"; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string* header = nullptr) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

double box_j(double s) {
  const double a = std::abs(s);
  return a <= 1 ? -s * s / 4 : -a + 0.5 * std::log(a) + 0.75;
}

}  // namespace

TEST_CASE("usage and config errors exit with 1") {
  CHECK(invoke("bad_cmd", "frobnicate", body(kBox)).code == 1);
  CHECK(invoke("bad_json", "equilibrium", "{not json").code == 1);
  const auto unknown = invoke("unknown_key", "equilibrium", body(std::string(kBox) + R"(, "colour": 3)"));
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("colour") != std::string::npos);
  CHECK(invoke("unknown_nested", "ldf", body(std::string(kBox) + R"(, "grid": {"s_min": -1, "size": 3})")).code == 1);
  CHECK(invoke("wrong_type", "equilibrium", body(R"("ensemble": {"potential": "x^2"})")).code == 1);
  CHECK(invoke("const_stat", "equilibrium", body(R"("ensemble": {"potential": [0, 0, 1]}, "statistic": [3])")).code == 1);

  std::ostringstream out, err;
  const char* argv[] = {"ldgas", "ldf"};
  CHECK(ldgas::cli::run(2, argv, out, err) == 1);
  const char* missing[] = {"ldgas", "ldf", "/nonexistent/config.json"};
  CHECK(ldgas::cli::run(3, missing, out, err) == 1);
}

TEST_CASE("equilibrium: box gas at s = 0 is the arcsine law") {
  const auto r = invoke("eq_box", "equilibrium", body(kBox));
  REQUIRE(r.code == 0);
  std::string header;
  const auto rows = read_csv(r.dir / "density.csv", &header);
  CHECK(header == "lambda,rho");
  REQUIRE(rows.size() == 513);
  for (const auto& row : rows) {
    const double expect = 1.0 / (kPi * std::sqrt(1 - row[0] * row[0]));
    CHECK(std::abs(row[1] - expect) <= 1e-8 * expect);
  }
  const auto support = slurp(r.dir / "support.json");
  CHECK(support.find("\"edge_a\": \"hard\"") != std::string::npos);
  CHECK(support.find("euler_lagrange_residual") != std::string::npos);
}

TEST_CASE("equilibrium: quartic model at s = 0 is the semicircle on [-2, 2]") {
  const auto r = invoke("eq_quartic", "equilibrium", body(kQuartic));
  REQUIRE(r.code == 0);
  const auto rows = read_csv(r.dir / "density.csv");
  REQUIRE(rows.size() == 513);
  CHECK(rows.front()[0] > -2.0);
  CHECK(rows.front()[0] < -1.99);
  for (const auto& row : rows)
    CHECK(row[1] == doctest::Approx(std::sqrt(4 - row[0] * row[0]) / (2 * kPi)).epsilon(1e-10));
}

TEST_CASE("equilibrium: an ill-confined tilt exits with 2 and names the coefficient") {
  const auto r = invoke("eq_ill", "equilibrium", body(std::string(kQuartic) + R"(, "s": -1)"));
  CHECK(r.code == 2);
  CHECK(r.err.find("ILL_CONFINED") != std::string::npos);
  CHECK(r.err.find("leading coefficient -1") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("ldf: box gas reproduces J and writes every table") {
  const auto r = invoke("ldf_box", "ldf", body(std::string(kBox) + R"(, "grid": {"s_min": -3, "s_max": 3, "points": 241})"));
  REQUIRE(r.code == 0);
  std::string header;
  const auto dual = read_csv(r.dir / "duality.csv", &header);
  CHECK(header == "s,x_star,J");
  for (const auto& row : dual) CHECK(std::abs(row[2] - box_j(row[0])) < 1e-7);
  const auto rate = read_csv(r.dir / "rate.csv", &header);
  CHECK(header == "x,s_star,Psi");
  for (const auto& row : rate) CHECK(row[2] >= -1e-12);
  const auto report = slurp(r.dir / "report.txt");
  CHECK(report.find("legendre_residual") != std::string::npos);
  CHECK(report.find("status PASS") != std::string::npos);
}

TEST_CASE("ldf: quartic model matches the closed-form J") {
  const auto r = invoke("ldf_quartic", "ldf", body(std::string(kQuartic) + R"(, "grid": {"s_min": -0.01, "s_max": 1, "points": 101})"));
  REQUIRE(r.code == 0);
  for (const auto& row : read_csv(r.dir / "duality.csv")) {
    const double s = row[0];
    const double l = s == 0 ? 1.0 : (std::sqrt(1 + 96 * s) - 1) / (48 * s);
    CHECK(std::abs(row[2] - ((l - 1) * (9 - l) / 48 - 0.25 * std::log(l))) < 1e-7);
  }
}

TEST_CASE("ldf: degenerate grid exits 2, an unmet Legendre tolerance exits 3") {
  const auto bad = invoke("ldf_grid", "ldf", body(std::string(kBox) + R"(, "grid": {"s_min": 0, "s_max": 0, "points": 1})"));
  CHECK(bad.code == 2);
  CHECK(bad.err.find("INVALID_ARGUMENT") != std::string::npos);
  const auto strict = invoke("ldf_strict", "ldf",
                             body(std::string(kBox) + R"(, "grid": {"s_min": -2, "s_max": 2, "points": 81}, "ldf": {"legendre_tolerance": 1e-300})"));
  CHECK(strict.code == 3);
  CHECK(slurp(strict.dir / "report.txt").find("status FAIL") != std::string::npos);
}

TEST_CASE("cumulants: planar counts, box values and invalid orders") {
  const auto q = invoke("cum_quartic", "cumulants", body(std::string(kQuartic) + R"(, "cumulants": {"m_max": 5})"));
  REQUIRE(q.code == 0);
  std::string header;
  const auto rows = read_csv(q.dir / "cumulants.csv", &header);
  CHECK(header == "order,derivative,scaled,rescaled,error_estimate");
  const double planar[] = {2, 36, 1728, 145152, 17915904};
  REQUIRE(rows.size() == 5);
  for (int m = 0; m < 5; ++m) {
    CHECK(rows[m][0] == m + 1);
    CHECK(std::abs(rows[m][3] / planar[m] - 1) < 1e-4);
    // Leading-order cumulant at N = 32, beta = 2.
    CHECK(rows[m][2] == doctest::Approx(rows[m][3] / std::pow(32.0 * 32.0, m)).epsilon(1e-12));
  }

  const auto b = invoke("cum_box", "cumulants", body(std::string(kBox) + R"(, "cumulants": {"m_max": 2})"));
  REQUIRE(b.code == 0);
  const auto br = read_csv(b.dir / "cumulants.csv");
  CHECK(std::abs(br[0][1]) < 1e-10);
  CHECK(br[1][1] == doctest::Approx(-0.5).epsilon(1e-8));

  CHECK(invoke("cum_zero", "cumulants", body(std::string(kBox) + R"(, "cumulants": {"m_max": 0})")).code == 2);
  const auto na = invoke("cum_na", "cumulants",
                         body(R"("ensemble": {"potential": [0, 1], "walls": [-1, 1]}, "statistic": [0, 1], "cumulants": {"m_max": 2})"));
  CHECK(na.code == 3);
  CHECK(na.err.find("NOT_ANALYTIC") != std::string::npos);
}

TEST_CASE("transitions: box gas, quartic and gaussian with a linear statistic") {
  const auto b = invoke("tr_box", "transitions", body(std::string(kBox) + R"(, "grid": {"s_min": -3, "s_max": 3, "points": 801})"));
  REQUIRE(b.code == 0);
  std::string header;
  const auto rows = read_csv(b.dir / "transitions.csv", &header);
  CHECK(header == "s_lo,s_hi,s_cr,order,jump");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][0] < -1.0);
  CHECK(rows[0][1] > -1.0);
  CHECK(rows[1][0] < 1.0);
  CHECK(rows[1][1] > 1.0);
  for (const auto& r : rows) {
    CHECK(r[3] == 3);
    CHECK(r[1] - r[0] <= 1e-4);
  }

  const auto q = invoke("tr_quartic", "transitions", body(std::string(kQuartic) + R"(, "grid": {"s_min": -0.02, "s_max": 1, "points": 201})"));
  REQUIRE(q.code == 0);
  CHECK(read_csv(q.dir / "transitions.csv").empty());
  const auto steep = slurp(q.dir / "steepness.txt");
  CHECK(steep.find("steep no") != std::string::npos);
  const auto at = steep.find("boundary_slope ");
  REQUIRE(at != std::string::npos);
  CHECK(std::stod(steep.substr(at + 15)) == doctest::Approx(4.0).epsilon(1e-6));

  const auto g = invoke("tr_gauss", "transitions",
                        body(R"("ensemble": {"potential": [0, 0, 0.25]}, "statistic": [0, 1], "grid": {"s_min": -3, "s_max": 3, "points": 401})"));
  REQUIRE(g.code == 0);
  CHECK(read_csv(g.dir / "transitions.csv").empty());
}

TEST_CASE("verify-mc: sanity run, determinism, seed override and failure exit") {
  // N = 2: only the symmetric mean at s = 0 is exact; tilted means carry
  // finite-N corrections at this size.
  const auto sanity = invoke("mc_sanity", "verify-mc",
                             body(R"("ensemble": {"potential": [], "walls": [-1, 1], "n": 2}, "statistic": [0, 1],
                                "mc": {"tilts": [0], "n_sweeps": 20000, "burn_in": 1000, "seed": 11})"));
  CHECK(sanity.code == 0);
  CHECK(slurp(sanity.dir / "verdict.txt").find("VERDICT PASS") != std::string::npos);

  const std::string cfg = body(R"("ensemble": {"potential": [], "walls": [-1, 1], "n": 8}, "statistic": [0, 1],
      "mc": {"tilts": [0, 0.5], "n_sweeps": 20000, "burn_in": 1000, "seed": 11, "histogram_bins": 20})");
  const auto a = invoke("mc_a", "verify-mc", cfg, {"--threads", "1"});
  REQUIRE(a.code == 0);
  std::string header;
  const auto summary = slurp(a.dir / "mc_summary.csv");
  CHECK(summary.rfind("quantity,estimate,stderr\n", 0) == 0);
  read_csv(a.dir / "mc_hist.csv", &header);
  CHECK(header == "bin_lo,bin_hi,count");
  CHECK(fs::exists(a.dir / "mc_hist_1.csv"));

  const auto b = invoke("mc_b", "verify-mc", cfg, {"--threads", "2"});
  REQUIRE(b.code == 0);
  for (const char* f : {"mc_summary.csv", "mc_hist.csv", "mc_hist_1.csv", "verdict.txt"})
    CHECK(slurp(a.dir / f) == slurp(b.dir / f));

  setenv("LDGAS_SEED", "12345", 1);
  const auto c = invoke("mc_c", "verify-mc", cfg);
  setenv("LDGAS_SEED", "-4", 1);
  const auto bad_seed = invoke("mc_bad_seed", "verify-mc", cfg);
  unsetenv("LDGAS_SEED");
  CHECK(c.code == 0);
  CHECK(slurp(c.dir / "mc_summary.csv") != summary);
  CHECK(bad_seed.code == 1);

  const std::string strict = body(R"("ensemble": {"potential": [], "walls": [-1, 1], "n": 2}, "statistic": [0, 1],
      "mc": {"tilts": [0], "n_sweeps": 5000, "burn_in": 500, "seed": 11, "z_threshold": 1e-12})");
  const auto f = invoke("mc_fail", "verify-mc", strict);
  CHECK(f.code == 4);
  CHECK(slurp(f.dir / "verdict.txt").find("VERDICT FAIL") != std::string::npos);

  CHECK(invoke("mc_invalid", "verify-mc",
               body(R"("ensemble": {"potential": [], "walls": [-1, 1], "n": 2}, "statistic": [0, 1], "mc": {"n_sweeps": 10, "burn_in": 10})"))
            .code == 2);
}

TEST_CASE("joint: two statistics on the box gas") {
  const auto r = invoke("joint_box", "joint",
                        body(R"("ensemble": {"potential": [], "walls": [-1, 1]}, "statistics": [[0, 1], [0, 0, 1]],
                           "joint": {"s1": [-1.2, 0, 1.2], "s2": {"min": -0.3, "max": 0.3, "points": 3}})"));
  REQUIRE(r.code == 0);
  std::string header;
  const auto rows = read_csv(r.dir / "joint.csv", &header);
  CHECK(header == "s1,s2,x1_star,x2_star,J_s1_first,J_s2_first,Psi");
  CHECK(rows.size() == 9);
  for (const auto& row : rows) CHECK(std::abs(row[4] - row[5]) < 1e-6);
  CHECK(invoke("joint_one", "joint", body(std::string(kBox) + R"(, "joint": {"s1": [0], "s2": [0]})")).code == 1);
}
