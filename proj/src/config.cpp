#include "ionramp/config.hpp"

#include <algorithm>
#include <set>

#include "ionramp/errors.hpp"
#include "ionramp/io.hpp"

namespace ionramp {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

int line_at(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

// JSON values carry no positions, so locate a key by its first quoted occurrence.
class Locator {
 public:
  explicit Locator(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const auto pos = text_.find('"' + key + '"');
    const std::string where = pos == std::string::npos ? "config" : "config line " + std::to_string(line_at(text_, pos));
    throw ConfigError(where + ": '" + key + "' " + what);
  }

 private:
  const std::string& text_;
};

void check_keys(const json& obj, const std::set<std::string>& allowed, const Locator& loc) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) loc.fail(key, "is not a recognized key");
  }
}

const json& object_at(const json& obj, const std::string& key, const Locator& loc) {
  const json& v = obj.at(key);
  if (!v.is_object()) loc.fail(key, "must be an object");
  return v;
}

double number(const json& obj, const std::string& key, const Locator& loc, bool positive = true) {
  const json& v = obj.at(key);
  if (!v.is_number()) loc.fail(key, "must be a number");
  const double x = v.get<double>();
  if (positive && !(x > 0.0)) loc.fail(key, "must be positive");
  if (!positive && !(x >= 0.0)) loc.fail(key, "must be non-negative");
  return x;
}

long long integer(const json& obj, const std::string& key, const Locator& loc, long long min) {
  const json& v = obj.at(key);
  if (!v.is_number_integer()) loc.fail(key, "must be an integer");
  const long long x = v.is_number_unsigned() ? static_cast<long long>(v.get<std::uint64_t>()) : v.get<long long>();
  if (x < min) loc.fail(key, "must be at least " + std::to_string(min));
  return x;
}

std::uint64_t unsigned_integer(const json& obj, const std::string& key, const Locator& loc) {
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) loc.fail(key, "must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string string_at(const json& obj, const std::string& key, const Locator& loc) {
  const json& v = obj.at(key);
  if (!v.is_string()) loc.fail(key, "must be a string");
  return v.get<std::string>();
}

RampFamily family_at(const json& v, const std::string& key, const Locator& loc) {
  if (!v.is_string()) loc.fail(key, "must name a ramp family");
  try {
    return parse_ramp_family(v.get<std::string>());
  } catch (const DomainError&) {
    loc.fail(key, "has unknown ramp family '" + v.get<std::string>() + "'");
  }
}

CouplingMatrix matrix_at(const json& v, const Locator& loc) {
  const std::string key = "couplings_kHz";
  if (!v.is_array() || v.empty()) loc.fail(key, "must be a non-empty square array of arrays");
  const auto n = v.size();
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!v[i].is_array() || v[i].size() != n) loc.fail(key, "must be square");
    for (std::size_t j = 0; j < n; ++j) {
      if (!v[i][j].is_number()) loc.fail(key, "entries must be numbers");
      m(i, j) = v[i][j].get<double>();
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (m(i, j) != m(j, i)) loc.fail(key, "must be symmetric");
    }
  }
  return CouplingMatrix::from_dense(m);
}

}  // namespace

void RunConfig::validate() const {
  if (num_spins < 1 || num_spins > kMaxSpins) {
    throw ConfigError("num_spins must be in [1, " + std::to_string(kMaxSpins) + "]");
  }
  if (couplings && !couplings_csv.empty()) throw ConfigError("give couplings_kHz or couplings_csv, not both");
  if (couplings) {
    if (couplings->size() != num_spins) {
      throw ConfigError("explicit coupling matrix has " + std::to_string(couplings->size()) + " spins, num_spins is " +
                        std::to_string(num_spins));
    }
  } else {
    try {
      TrapConfig t = trap;
      t.num_spins = std::max(num_spins, 2);
      t.validate();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("trap: ") + e.what());
    }
    if (calibration && (calibration->num_spins < 3 || !(calibration->max_coupling_khz > 0.0) ||
                        !(calibration->alpha > 0.0))) {
      throw ConfigError("calibration needs num_spins >= 3 and positive J_max_kHz, alpha");
    }
  }
  if (b0_khz && !(*b0_khz > 0.0)) throw ConfigError("B0_kHz must be positive");
  if (!(b0_over_jmax > 0.0)) throw ConfigError("B0_over_Jmax must be positive");
  if (!(tf_ms > 0.0)) throw ConfigError("tf_ms must be positive");
  if (families.empty()) throw ConfigError("sweep.families must not be empty");
  for (double t : tf_grid_ms) {
    if (!(t >= 0.0)) throw ConfigError("sweep.tf_ms entries must be non-negative");
  }
  if (gap_grid < 3) throw ConfigError("gap.grid must be at least 3");
  if (gap_states < 0) throw ConfigError("gap.states must be non-negative");
  if (dense_cap < 0) throw ConfigError("gap.dense_cap must be non-negative");
  if (piecewise_bc_khz.has_value() != piecewise_delta_c_khz.has_value()) {
    throw ConfigError("piecewise needs both B_c_kHz and Delta_c_kHz, or neither");
  }
  if (piecewise_bc_khz && (!(*piecewise_bc_khz > 0.0) || !(*piecewise_delta_c_khz > 0.0))) {
    throw ConfigError("piecewise B_c_kHz and Delta_c_kHz must be positive");
  }
  if (piecewise && !piecewise_bc_khz && extrapolate_from.size() < 4) {
    throw ConfigError("piecewise.extrapolate_from needs at least 4 sizes");
  }
  if (snapshots < 2) throw ConfigError("snapshots must be at least 2");
  if (!(coherence_time_ms > 0.0)) throw ConfigError("t_d_ms must be positive");
  if (repetitions == 0) throw ConfigError("repetitions must be positive");
  if (threads < 0) throw ConfigError("threads must be non-negative");
}

RunConfig parse_run_config(const std::string& text, const RunConfig& base) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config line " + std::to_string(line_at(text, e.byte == 0 ? 0 : e.byte - 1)) +
                      ": invalid JSON (" + e.what() + ")");
  }
  const Locator loc(text);
  if (!root.is_object()) throw ConfigError("config line 1: top level must be an object");
  check_keys(root,
             {"schema_version", "num_spins", "trap", "calibration", "couplings_kHz", "couplings_csv", "B0_kHz",
              "B0_over_Jmax", "ramp", "sweep", "gap", "piecewise", "snapshots", "t_d_ms", "repetitions", "seed",
              "output_dir", "threads"},
             loc);
  if (!root.contains("schema_version")) throw ConfigError("config: missing 'schema_version'");
  if (integer(root, "schema_version", loc, 1) != kConfigSchemaVersion) {
    loc.fail("schema_version", "must be " + std::to_string(kConfigSchemaVersion));
  }

  RunConfig c = base;
  if (root.contains("num_spins")) c.num_spins = static_cast<int>(integer(root, "num_spins", loc, 1));

  const bool explicit_matrix = root.contains("couplings_kHz") || root.contains("couplings_csv");
  if (explicit_matrix && (root.contains("trap") || root.contains("calibration"))) {
    loc.fail(root.contains("couplings_kHz") ? "couplings_kHz" : "couplings_csv",
             "conflicts with trap synthesis; give exactly one coupling source");
  }
  if (root.contains("couplings_kHz") && root.contains("couplings_csv")) {
    loc.fail("couplings_csv", "conflicts with couplings_kHz; give exactly one coupling source");
  }
  if (root.contains("trap") || root.contains("calibration")) {
    c.couplings.reset();
    c.couplings_csv.clear();
  }
  if (root.contains("trap")) {
    const json& t = object_at(root, "trap", loc);
    check_keys(t, {"axial_MHz", "transverse_MHz", "rabi_kHz", "detuning_kHz", "recoil_kHz", "guard_band_kHz"}, loc);
    if (t.contains("axial_MHz")) c.trap.axial_mhz = number(t, "axial_MHz", loc);
    if (t.contains("transverse_MHz")) c.trap.transverse_mhz = number(t, "transverse_MHz", loc);
    if (t.contains("rabi_kHz")) c.trap.rabi_khz = number(t, "rabi_kHz", loc);
    if (t.contains("detuning_kHz")) c.trap.detuning_khz = number(t, "detuning_kHz", loc);
    if (t.contains("recoil_kHz")) c.trap.recoil_khz = number(t, "recoil_kHz", loc);
    if (t.contains("guard_band_kHz")) c.trap.guard_band_khz = number(t, "guard_band_kHz", loc);
    // An explicit trap without a calibration block is used as given.
    if (!root.contains("calibration")) c.calibration.reset();
  }
  if (root.contains("calibration")) {
    if (root["calibration"].is_null()) {
      c.calibration.reset();
    } else {
      const json& cal = object_at(root, "calibration", loc);
      check_keys(cal, {"num_spins", "J_max_kHz", "alpha"}, loc);
      CalibrationTarget target;
      if (cal.contains("num_spins")) target.num_spins = static_cast<int>(integer(cal, "num_spins", loc, 3));
      if (cal.contains("J_max_kHz")) target.max_coupling_khz = number(cal, "J_max_kHz", loc);
      if (cal.contains("alpha")) target.alpha = number(cal, "alpha", loc);
      c.calibration = target;
    }
  }
  if (root.contains("couplings_kHz")) {
    c.couplings = matrix_at(root["couplings_kHz"], loc);
    c.calibration.reset();
    if (!root.contains("num_spins")) c.num_spins = c.couplings->size();
  }
  if (root.contains("couplings_csv")) {
    c.couplings_csv = string_at(root, "couplings_csv", loc);
    c.calibration.reset();
    try {
      c.couplings = parse_couplings_csv(read_file(c.couplings_csv));
    } catch (const ConfigError& e) {
      loc.fail("couplings_csv", std::string("could not be loaded: ") + e.what());
    }
    if (!root.contains("num_spins")) c.num_spins = c.couplings->size();
  }

  if (root.contains("B0_kHz") && root.contains("B0_over_Jmax")) {
    loc.fail("B0_over_Jmax", "conflicts with B0_kHz; give one B_0 rule");
  }
  if (root.contains("B0_kHz")) c.b0_khz = number(root, "B0_kHz", loc);
  if (root.contains("B0_over_Jmax")) c.b0_over_jmax = number(root, "B0_over_Jmax", loc);

  if (root.contains("ramp")) {
    const json& r = object_at(root, "ramp", loc);
    check_keys(r, {"family", "tf_ms"}, loc);
    if (r.contains("family")) c.family = family_at(r["family"], "family", loc);
    if (r.contains("tf_ms")) c.tf_ms = number(r, "tf_ms", loc);
  }
  if (root.contains("sweep")) {
    const json& s = object_at(root, "sweep", loc);
    check_keys(s, {"families", "tf_ms"}, loc);
    if (s.contains("families")) {
      if (!s["families"].is_array()) loc.fail("families", "must be an array");
      c.families.clear();
      for (const auto& f : s["families"]) c.families.push_back(family_at(f, "families", loc));
    }
    if (s.contains("tf_ms")) {
      if (!s["tf_ms"].is_array()) loc.fail("tf_ms", "must be an array in 'sweep'");
      c.tf_grid_ms.clear();
      for (const auto& t : s["tf_ms"]) {
        if (!t.is_number()) loc.fail("tf_ms", "entries must be numbers");
        c.tf_grid_ms.push_back(t.get<double>());
      }
    }
  }
  if (root.contains("gap")) {
    const json& g = object_at(root, "gap", loc);
    check_keys(g, {"grid", "states", "dense_cap"}, loc);
    if (g.contains("grid")) c.gap_grid = static_cast<int>(integer(g, "grid", loc, 3));
    if (g.contains("states")) c.gap_states = static_cast<int>(integer(g, "states", loc, 0));
    if (g.contains("dense_cap")) c.dense_cap = static_cast<int>(integer(g, "dense_cap", loc, 0));
  }
  if (root.contains("piecewise")) {
    const json& p = object_at(root, "piecewise", loc);
    check_keys(p, {"enabled", "B_c_kHz", "Delta_c_kHz", "extrapolate_from"}, loc);
    if (p.contains("enabled")) {
      if (!p["enabled"].is_boolean()) loc.fail("enabled", "must be true or false");
      c.piecewise = p["enabled"].get<bool>();
    }
    if (p.contains("B_c_kHz")) c.piecewise_bc_khz = number(p, "B_c_kHz", loc);
    if (p.contains("Delta_c_kHz")) c.piecewise_delta_c_khz = number(p, "Delta_c_kHz", loc);
    if (p.contains("extrapolate_from")) {
      if (!p["extrapolate_from"].is_array()) loc.fail("extrapolate_from", "must be an array of spin counts");
      c.extrapolate_from.clear();
      for (const auto& n : p["extrapolate_from"]) {
        if (!n.is_number_integer() || n.get<int>() < 2) loc.fail("extrapolate_from", "entries must be integers >= 2");
        c.extrapolate_from.push_back(n.get<int>());
      }
    }
  }
  if (root.contains("snapshots")) c.snapshots = static_cast<int>(integer(root, "snapshots", loc, 2));
  if (root.contains("t_d_ms")) c.coherence_time_ms = number(root, "t_d_ms", loc);
  if (root.contains("repetitions")) c.repetitions = unsigned_integer(root, "repetitions", loc);
  if (root.contains("seed")) c.seed = unsigned_integer(root, "seed", loc);
  if (root.contains("output_dir")) c.output_dir = string_at(root, "output_dir", loc);
  if (root.contains("threads")) c.threads = static_cast<int>(integer(root, "threads", loc, 0));

  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path, const RunConfig& base) {
  return parse_run_config(read_file(path), base);
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["num_spins"] = c.num_spins;
  if (c.couplings) {
    const Eigen::MatrixXd m = c.couplings->to_dense();
    auto rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      auto row = ordered_json::array();
      for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
      rows.push_back(row);
    }
    j["couplings_kHz"] = rows;
  } else {
    j["trap"] = {{"axial_MHz", c.trap.axial_mhz},     {"transverse_MHz", c.trap.transverse_mhz},
                 {"rabi_kHz", c.trap.rabi_khz},       {"detuning_kHz", c.trap.detuning_khz},
                 {"recoil_kHz", c.trap.recoil_khz},   {"guard_band_kHz", c.trap.guard_band_khz}};
    if (c.calibration) {
      j["calibration"] = {{"num_spins", c.calibration->num_spins},
                          {"J_max_kHz", c.calibration->max_coupling_khz},
                          {"alpha", c.calibration->alpha}};
    } else {
      j["calibration"] = nullptr;
    }
  }
  if (c.b0_khz) {
    j["B0_kHz"] = *c.b0_khz;
  } else {
    j["B0_over_Jmax"] = c.b0_over_jmax;
  }
  j["ramp"] = {{"family", std::string(to_string(c.family))}, {"tf_ms", c.tf_ms}};
  auto fams = ordered_json::array();
  for (auto f : c.families) fams.push_back(std::string(to_string(f)));
  j["sweep"] = {{"families", fams}, {"tf_ms", c.tf_grid_ms}};
  j["gap"] = {{"grid", c.gap_grid}, {"states", c.gap_states}, {"dense_cap", c.dense_cap}};
  ordered_json pw;
  pw["enabled"] = c.piecewise;
  if (c.piecewise_bc_khz) {
    pw["B_c_kHz"] = *c.piecewise_bc_khz;
    pw["Delta_c_kHz"] = *c.piecewise_delta_c_khz;
  }
  pw["extrapolate_from"] = c.extrapolate_from;
  j["piecewise"] = pw;
  j["snapshots"] = c.snapshots;
  j["t_d_ms"] = c.coherence_time_ms;
  j["repetitions"] = c.repetitions;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  return j;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  auto trap_eq = [](const TrapConfig& x, const TrapConfig& y) {
    return x.axial_mhz == y.axial_mhz && x.transverse_mhz == y.transverse_mhz && x.rabi_khz == y.rabi_khz &&
           x.detuning_khz == y.detuning_khz && x.recoil_khz == y.recoil_khz && x.guard_band_khz == y.guard_band_khz;
  };
  auto cal_eq = [](const std::optional<CalibrationTarget>& x, const std::optional<CalibrationTarget>& y) {
    if (x.has_value() != y.has_value()) return false;
    return !x || (x->num_spins == y->num_spins && x->max_coupling_khz == y->max_coupling_khz && x->alpha == y->alpha);
  };
  // The source file of an explicit matrix is not part of the run's identity.
  const bool source_eq = a.couplings ? (b.couplings && *a.couplings == *b.couplings)
                                     : (!b.couplings && trap_eq(a.trap, b.trap) && cal_eq(a.calibration, b.calibration));
  return a.num_spins == b.num_spins && source_eq && a.b0_khz == b.b0_khz && a.b0_over_jmax == b.b0_over_jmax &&
         a.family == b.family && a.tf_ms == b.tf_ms && a.families == b.families && a.tf_grid_ms == b.tf_grid_ms &&
         a.gap_grid == b.gap_grid && a.gap_states == b.gap_states && a.dense_cap == b.dense_cap &&
         a.piecewise == b.piecewise && a.piecewise_bc_khz == b.piecewise_bc_khz &&
         a.piecewise_delta_c_khz == b.piecewise_delta_c_khz && a.extrapolate_from == b.extrapolate_from &&
         a.snapshots == b.snapshots && a.coherence_time_ms == b.coherence_time_ms && a.repetitions == b.repetitions &&
         a.seed == b.seed && a.output_dir == b.output_dir && a.threads == b.threads;
}

std::optional<TrapConfig> resolve_trap(const RunConfig& config) {
  if (config.couplings) return std::nullopt;
  TrapConfig t = config.calibration ? calibrate_trap(*config.calibration, config.trap) : config.trap;
  t.num_spins = config.num_spins;
  return t;
}

CouplingMatrix resolve_couplings(const RunConfig& config) { return resolve_couplings(config, config.num_spins); }

CouplingMatrix resolve_couplings(const RunConfig& config, int num_spins) {
  if (config.couplings) {
    if (num_spins != config.couplings->size()) {
      throw ConfigError("explicit coupling matrix cannot be resized to " + std::to_string(num_spins) + " spins");
    }
    return *config.couplings;
  }
  RunConfig c = config;
  c.num_spins = num_spins;
  return ising_couplings(*resolve_trap(c));
}

double resolve_b0(const RunConfig& config, const CouplingMatrix& couplings) {
  if (config.b0_khz) return *config.b0_khz;
  const double jmax = couplings.max();
  if (!(jmax > 0.0)) throw ConfigError("B0_over_Jmax needs a positive maximum coupling");
  return config.b0_over_jmax * jmax;
}

std::vector<double> resolve_tf_grid(const RunConfig& config) {
  if (!config.tf_grid_ms.empty()) return config.tf_grid_ms;
  std::vector<double> grid(13);
  for (int i = 0; i < 13; ++i) grid[i] = config.tf_ms * i / 12.0;
  return grid;
}

}  // namespace ionramp
