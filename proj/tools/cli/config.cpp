#include "config.hpp"

#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ldgas/error.hpp"

namespace ldgas::cli {

namespace {

using json = nlohmann::json;

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  return v.get<double>();
}

long long integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return v.get<long long>();
}

int small_integer(const json& v, const std::string& where) {
  const long long x = integer(v, where);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw ConfigError(where + ": out of range");
  return static_cast<int>(x);
}

bool boolean(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw ConfigError(where + ": expected true or false");
  return v.get<bool>();
}

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

// A grid is an explicit array or {"min", "max", "points"}.
std::vector<double> grid_values(const json& v, const std::string& where) {
  if (v.is_array()) return numbers(v, where);
  check_keys(v, where, {"min", "max", "points"});
  if (!v.contains("min") || !v.contains("max") || !v.contains("points"))
    throw ConfigError(where + ": needs min, max and points");
  const double lo = number(v["min"], where + ".min"), hi = number(v["max"], where + ".max");
  const int n = small_integer(v["points"], where + ".points");
  if (n < 1) throw ConfigError(where + ".points must be positive");
  std::vector<double> out;
  for (int k = 0; k < n; ++k) out.push_back(n == 1 ? lo : lo + (hi - lo) * k / (n - 1));
  return out;
}

Polynomial polynomial(const json& v, const std::string& where) { return Polynomial(numbers(v, where)); }

Bound bound(const json& v, const std::string& where) {
  if (v.is_null()) return Bound::infinite();
  return Bound::at(number(v, where));
}

}  // namespace

ConfinementPotential RunConfig::confinement() const { return ConfinementPotential::make(potential, walls); }

LinearStatistic RunConfig::statistic() const {
  if (statistics.empty()) throw ConfigError("config needs a 'statistic'");
  return LinearStatistic(statistics.front());
}

static RunConfig parse_tree(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  check_keys(root, "config",
             {"description", "ensemble", "statistic", "statistics", "s", "grid", "ldf", "cumulants",
              "transitions", "mc", "joint", "output"});
  RunConfig c;

  if (!root.contains("ensemble")) throw ConfigError("config needs an 'ensemble'");
  const json& e = root["ensemble"];
  check_keys(e, "ensemble", {"potential", "walls", "beta", "n"});
  if (!e.contains("potential")) throw ConfigError("ensemble needs a 'potential'");
  c.potential = polynomial(e["potential"], "ensemble.potential");
  if (e.contains("walls")) {
    const json& w = e["walls"];
    if (!w.is_null()) {
      if (!w.is_array() || w.size() != 2) throw ConfigError("ensemble.walls: expected [lower, upper]");
      c.walls = Walls(bound(w[0], "ensemble.walls[0]"), bound(w[1], "ensemble.walls[1]"));
    }
  }
  if (e.contains("beta")) c.beta = number(e["beta"], "ensemble.beta");
  if (e.contains("n")) c.n = small_integer(e["n"], "ensemble.n");

  if (root.contains("statistic") && root.contains("statistics"))
    throw ConfigError("give either 'statistic' or 'statistics', not both");
  if (root.contains("statistic")) c.statistics.push_back(polynomial(root["statistic"], "statistic"));
  if (root.contains("statistics")) {
    const json& s = root["statistics"];
    if (!s.is_array()) throw ConfigError("statistics: expected an array of coefficient lists");
    for (std::size_t i = 0; i < s.size(); ++i)
      c.statistics.push_back(polynomial(s[i], "statistics[" + std::to_string(i) + "]"));
  }
  if (root.contains("s")) c.s = number(root["s"], "s");

  if (root.contains("grid")) {
    const json& g = root["grid"];
    check_keys(g, "grid", {"s_min", "s_max", "points", "continue_past_confinement"});
    if (g.contains("s_min")) c.grid.s_min = number(g["s_min"], "grid.s_min");
    if (g.contains("s_max")) c.grid.s_max = number(g["s_max"], "grid.s_max");
    if (g.contains("points")) c.grid.points = small_integer(g["points"], "grid.points");
    if (g.contains("continue_past_confinement"))
      c.grid.continue_past_confinement = boolean(g["continue_past_confinement"], "grid.continue_past_confinement");
  }
  if (root.contains("ldf")) {
    const json& l = root["ldf"];
    check_keys(l, "ldf", {"legendre_tolerance"});
    if (l.contains("legendre_tolerance")) c.ldf.legendre_tolerance = number(l["legendre_tolerance"], "ldf.legendre_tolerance");
  }
  if (root.contains("cumulants")) {
    const json& k = root["cumulants"];
    check_keys(k, "cumulants", {"m_max", "initial_step"});
    if (k.contains("m_max")) c.cumulants.m_max = small_integer(k["m_max"], "cumulants.m_max");
    if (k.contains("initial_step")) c.cumulants.initial_step = number(k["initial_step"], "cumulants.initial_step");
  }
  if (root.contains("transitions")) {
    const json& t = root["transitions"];
    check_keys(t, "transitions", {"window", "max_order", "divergence_threshold"});
    if (t.contains("window")) c.transitions.window = small_integer(t["window"], "transitions.window");
    if (t.contains("max_order")) c.transitions.max_order = small_integer(t["max_order"], "transitions.max_order");
    if (t.contains("divergence_threshold"))
      c.transitions.divergence_threshold = number(t["divergence_threshold"], "transitions.divergence_threshold");
  }
  if (root.contains("mc")) {
    const json& m = root["mc"];
    check_keys(m, "mc",
               {"tilts", "n_sweeps", "burn_in", "thinning", "step_scale", "seed", "chains", "histogram_bins",
                "z_threshold", "variance_tolerance"});
    if (m.contains("tilts")) c.mc.tilts = numbers(m["tilts"], "mc.tilts");
    if (m.contains("n_sweeps")) c.mc.n_sweeps = integer(m["n_sweeps"], "mc.n_sweeps");
    if (m.contains("burn_in")) c.mc.burn_in = integer(m["burn_in"], "mc.burn_in");
    if (m.contains("thinning")) c.mc.thinning = integer(m["thinning"], "mc.thinning");
    if (m.contains("step_scale")) c.mc.step_scale = number(m["step_scale"], "mc.step_scale");
    if (m.contains("seed")) {
      if (!m["seed"].is_number_unsigned()) throw ConfigError("mc.seed: expected a non-negative integer");
      c.mc.seed = m["seed"].get<std::uint64_t>();
    }
    if (m.contains("chains")) c.mc.chains = small_integer(m["chains"], "mc.chains");
    if (m.contains("histogram_bins")) c.mc.histogram_bins = small_integer(m["histogram_bins"], "mc.histogram_bins");
    if (m.contains("z_threshold")) c.mc.z_threshold = number(m["z_threshold"], "mc.z_threshold");
    if (m.contains("variance_tolerance")) c.mc.variance_tolerance = number(m["variance_tolerance"], "mc.variance_tolerance");
  }
  if (root.contains("joint")) {
    const json& j = root["joint"];
    check_keys(j, "joint", {"s1", "s2", "mismatch_tolerance", "asymmetry_tolerance"});
    JointSection js;
    if (!j.contains("s1") || !j.contains("s2")) throw ConfigError("joint needs 's1' and 's2' grids");
    js.s1 = grid_values(j["s1"], "joint.s1");
    js.s2 = grid_values(j["s2"], "joint.s2");
    if (j.contains("mismatch_tolerance")) js.mismatch_tolerance = number(j["mismatch_tolerance"], "joint.mismatch_tolerance");
    if (j.contains("asymmetry_tolerance")) js.asymmetry_tolerance = number(j["asymmetry_tolerance"], "joint.asymmetry_tolerance");
    c.joint = js;
  }
  if (root.contains("output")) {
    if (!root["output"].is_string()) throw ConfigError("output: expected a path string");
    c.output = root["output"].get<std::string>();
  }
  for (const auto& f : c.statistics) (void)LinearStatistic(f);

  return c;
}

RunConfig parse_config(const std::string& text) {
  try {
    return parse_tree(text);
  } catch (const Error& err) {
    // Invalid walls or a constant statistic.
    throw ConfigError(err.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ldgas::cli
