#include "bess/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "bess/rng.hpp"

namespace bess {

ConfigError::ConfigError(const std::string& what, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& s) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) throw std::invalid_argument("expected a number, got '" + s + "'");
  return v;
}

long long to_int(const std::string& s) {
  const std::string t = trim(s);
  long long v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) throw std::invalid_argument("expected an integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + s + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

OcvCurve parse_knots(const std::string& s) {
  std::vector<std::pair<double, double>> knots;
  for (const auto& item : split(s, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) throw std::invalid_argument("OCV knots are soc:volts pairs separated by commas");
    knots.emplace_back(to_double(parts[0]), to_double(parts[1]));
  }
  return OcvCurve::from_knots(knots);
}

std::string knots_text(const OcvCurve& c) {
  std::string out;
  for (const auto& seg : c.segments()) out += fmt(seg.q_lo) + ":" + fmt(seg.voltage(seg.q_lo)) + ",";
  const auto& last = c.segments().back();
  out += fmt(last.q_hi) + ":" + fmt(last.voltage(last.q_hi));
  return out;
}

struct Setting {
  std::string key;
  std::function<void(SimConfig&, const std::string&)> set;
  std::function<std::string(const SimConfig&)> get;
};

#define BESS_DOUBLE(name, field)                                           \
  Setting {                                                                \
    name, [](SimConfig& c, const std::string& v) { c.field = to_double(v); }, \
        [](const SimConfig& c) { return fmt(c.field); }                    \
  }
#define BESS_INT(name, field)                                                             \
  Setting {                                                                               \
    name, [](SimConfig& c, const std::string& v) { c.field = static_cast<int>(to_int(v)); }, \
        [](const SimConfig& c) { return std::to_string(c.field); }                        \
  }
#define BESS_BOOL(name, field)                                           \
  Setting {                                                              \
    name, [](SimConfig& c, const std::string& v) { c.field = to_bool(v); }, \
        [](const SimConfig& c) { return std::string(c.field ? "true" : "false"); } \
  }

const std::vector<Setting>& settings() {
  static const std::vector<Setting> table = {
      Setting{"simulation.seed",
              [](SimConfig& c, const std::string& v) {
                const auto x = to_int(v);
                if (x < 0) throw std::invalid_argument("seed must be >= 0");
                c.seed = static_cast<std::uint64_t>(x);
              },
              [](const SimConfig& c) { return std::to_string(c.seed); }},
      BESS_DOUBLE("simulation.dt", dt),
      BESS_INT("simulation.horizon", horizon),
      BESS_DOUBLE("simulation.duration", duration),
      Setting{"simulation.scheme", [](SimConfig& c, const std::string& v) { c.scheme = parse_scheme(trim(v)); },
              [](const SimConfig& c) { return std::string(to_string(c.scheme)); }},
      BESS_DOUBLE("simulation.t_env", t_env),
      BESS_INT("simulation.recluster_period", recluster_period),
      BESS_INT("simulation.k_max", k_max),
      BESS_INT("simulation.gap_references", gap_references),
      BESS_INT("simulation.fixed_k", fixed_k),
      BESS_BOOL("simulation.cell_level", cell_level),
      BESS_BOOL("simulation.split_with_converter", split_with_converter),
      BESS_INT("simulation.snapshot_every", snapshot_every),

      BESS_INT("cells.count", population.count),
      Setting{"cells.capacity_ah", [](SimConfig& c, const std::string& v) { c.population.base.capacity = to_double(v) * 3600.0; },
              [](const SimConfig& c) { return fmt(c.population.base.capacity / 3600.0); }},
      BESS_DOUBLE("cells.resistance", population.base.internal_resistance),
      BESS_DOUBLE("cells.converter_resistance", population.base.converter_resistance),
      BESS_DOUBLE("cells.mass", population.base.mass),
      BESS_DOUBLE("cells.surface_area", population.base.surface_area),
      BESS_DOUBLE("cells.heat_transfer", population.base.heat_transfer),
      BESS_DOUBLE("cells.specific_heat", population.base.specific_heat),
      BESS_DOUBLE("cells.soc_min", population.base.soc_min),
      BESS_DOUBLE("cells.soc_max", population.base.soc_max),
      BESS_DOUBLE("cells.current_min", population.base.current_min),
      BESS_DOUBLE("cells.current_max", population.base.current_max),
      BESS_DOUBLE("cells.temp_min", population.base.temp_min),
      BESS_DOUBLE("cells.temp_max", population.base.temp_max),
      Setting{"cells.ocv_knots", [](SimConfig& c, const std::string& v) { c.population.base.ocv = parse_knots(v); },
              [](const SimConfig& c) { return knots_text(c.population.base.ocv); }},

      BESS_DOUBLE("population.soc_lo", population.soc_lo),
      BESS_DOUBLE("population.soc_hi", population.soc_hi),
      BESS_DOUBLE("population.temp_lo", population.temp_lo),
      BESS_DOUBLE("population.temp_hi", population.temp_hi),
      BESS_DOUBLE("population.resistance_lo", population.resistance_lo),
      BESS_DOUBLE("population.resistance_hi", population.resistance_hi),

      BESS_DOUBLE("bounds.cell_dq", cell_dq),
      BESS_DOUBLE("bounds.cell_dt", cell_dt),
      BESS_DOUBLE("bounds.cluster_dq", cluster_dq),
      BESS_DOUBLE("bounds.cluster_dt", cluster_dt),
      BESS_DOUBLE("bounds.lambda_cell", lambda_cell),
      BESS_DOUBLE("bounds.lambda_cluster", lambda_cluster),
      BESS_BOOL("bounds.adaptive", adaptive_bounds),
      BESS_DOUBLE("bounds.floor", bound_floor),
      BESS_BOOL("bounds.cap_penalties", cap_penalties),

      BESS_DOUBLE("solver.tolerance", solver.tolerance),
      BESS_DOUBLE("solver.check_tolerance", solver.check_tolerance),
      BESS_INT("solver.max_iterations", solver.max_iterations),
      BESS_BOOL("solver.exact_current_limits", exact_current_limits),
  };
  return table;
}

#undef BESS_DOUBLE
#undef BESS_INT
#undef BESS_BOOL

const Setting* find_setting(const std::string& key) {
  for (const auto& s : settings())
    if (s.key == key) return &s;
  return nullptr;
}

void validate_config(const SimConfig& cfg) {
  try {
    cfg.validate();
    cfg.population.base.validate();
    const auto& p = cfg.population;
    if (!(p.soc_lo <= p.soc_hi && p.temp_lo <= p.temp_hi && p.resistance_lo <= p.resistance_hi))
      throw std::invalid_argument("population ranges must have lo <= hi");
    if (!(p.resistance_lo > 0)) throw std::invalid_argument("population resistance must be positive");
    if (p.soc_lo < p.base.soc_min || p.soc_hi > p.base.soc_max)
      throw std::invalid_argument("population SoC range must lie within the cell SoC limits");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void apply_setting(SimConfig& cfg, const std::string& dotted_key, const std::string& value) {
  const auto* s = find_setting(dotted_key);
  if (!s) throw ConfigError("unknown key '" + dotted_key + "'");
  try {
    s->set(cfg, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(dotted_key + ": " + e.what());
  }
}

std::vector<std::pair<std::string, std::string>> config_entries(const SimConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : settings()) out.emplace_back(s.key, s.get(cfg));
  return out;
}

SimConfig parse_config_text(const std::string& text) {
  SimConfig cfg;
  std::string section;
  std::set<std::string> seen;
  std::vector<std::string> unknown;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (const auto hash = s.find('#'); hash != std::string::npos) s.erase(hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("unterminated section header", line);
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    if (!seen.insert(full).second) throw ConfigError("duplicate key '" + full + "'", line);
    if (full == "schema_version") {
      long long v = 0;
      try {
        v = to_int(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("schema_version: ") + e.what(), line);
      }
      if (v != kSchemaVersion) throw ConfigError("unsupported schema_version " + value, line);
      continue;
    }
    const auto* setting = find_setting(full);
    if (!setting) {
      unknown.push_back(full + " (line " + std::to_string(line) + ")");
      continue;
    }
    try {
      setting->set(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(full + ": " + e.what(), line);
    }
  }
  if (!unknown.empty()) {
    std::string msg = "unknown keys:";
    for (const auto& u : unknown) msg += " " + u;
    throw ConfigError(msg);
  }
  validate_config(cfg);
  return cfg;
}

SimConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

LoadProfile parse_profile_csv(const std::string& text, double dt) {
  if (!(dt > 0)) throw IoError("profile: dt must be positive");
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  bool header = false;
  std::vector<double> t, p;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s.front() == '#') continue;
    if (!header) {
      std::string h;
      for (char c : s)
        if (c != ' ') h += c;
      if (h != "t,p_out") throw IoError("profile line " + std::to_string(line) + ": expected header t,p_out");
      header = true;
      continue;
    }
    const auto cols = split(s, ',');
    if (cols.size() != 2) throw IoError("profile line " + std::to_string(line) + ": expected two columns");
    try {
      t.push_back(to_double(cols[0]));
      p.push_back(to_double(cols[1]));
    } catch (const std::invalid_argument& e) {
      throw IoError("profile line " + std::to_string(line) + ": " + e.what());
    }
    if (!std::isfinite(t.back()) || !std::isfinite(p.back()))
      throw IoError("profile line " + std::to_string(line) + ": non-finite value");
    if (t.size() > 1 && !(t.back() > t[t.size() - 2]))
      throw IoError("profile line " + std::to_string(line) + ": time must increase strictly");
  }
  if (!header) throw IoError("profile: missing header t,p_out");
  if (t.empty()) throw IoError("profile: no samples");

  LoadProfile out;
  out.dt = dt;
  if (t.size() == 1) {
    out.time = t;
    out.power = p;
    return out;
  }
  const double step = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs((t[i] - t[i - 1]) - step) > 1e-9 * std::max(1.0, step))
      throw IoError("profile: samples must be uniformly spaced");
  if (std::abs(step - dt) <= 1e-9 * std::max(1.0, dt)) {
    out.time = t;
    out.power = p;
    return out;
  }
  const double span = t.back() - t.front();
  const auto count = static_cast<std::size_t>(std::floor(span / dt + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) {
    const double ti = t.front() + static_cast<double>(i) * dt;
    const double x = (ti - t.front()) / step;
    const auto j = std::min(static_cast<std::size_t>(x), t.size() - 2);
    const double f = x - static_cast<double>(j);
    out.time.push_back(ti);
    out.power.push_back(f <= 0 ? p[j] : f >= 1 ? p[j + 1] : p[j] + f * (p[j + 1] - p[j]));
  }
  return out;
}

LoadProfile load_profile_csv(const std::filesystem::path& path, double dt) {
  return parse_profile_csv(read_file(path), dt);
}

void write_profile_csv(const LoadProfile& profile, const std::filesystem::path& path) {
  std::string out = "t,p_out\n";
  for (std::size_t i = 0; i < profile.time.size(); ++i) out += fmt(profile.time[i]) + "," + fmt(profile.power[i]) + "\n";
  write_file(path, out);
}

LoadProfile synth_udds_like(double duration, double peak_charge, double peak_discharge, double dt,
                            std::uint64_t seed) {
  if (!(peak_charge > 0 && peak_discharge > 0)) throw std::invalid_argument("synth: peaks must be positive");
  if (!(dt > 0 && duration > 0)) throw std::invalid_argument("synth: duration and dt must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration / dt));
  Rng rng(seed);
  std::vector<double> raw;
  raw.reserve(n);
  auto emit = [&](double seconds, const std::function<double(double)>& shape) {
    const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(seconds / dt)));
    for (std::size_t i = 0; i < m && raw.size() < n; ++i) raw.push_back(shape((i + 0.5) / static_cast<double>(m)));
  };
  while (raw.size() < n) {
    emit(rng.uniform(5, 30), [](double) { return 0.0; });
    const double peak = rng.uniform(0.4, 1.0);
    const double cruise = rng.uniform(0.15, 0.4) * peak;
    emit(rng.uniform(6, 20), [&](double x) { return peak * std::sin(x * M_PI / 2); });
    const double wobble = rng.uniform(0.05, 0.2), period = rng.uniform(0.2, 0.5);
    emit(rng.uniform(10, 60), [&](double x) { return cruise * (1.0 + wobble * std::sin(2 * M_PI * x / period)); });
    const double brake = rng.uniform(0.3, 0.75);
    emit(rng.uniform(4, 12), [&](double x) { return -brake * std::sin(x * M_PI); });
  }
  // Braking and traction are normalized separately first so idle stays at
  // zero after the affine map.
  {
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    const double neg = *lo < 0 ? (peak_charge / peak_discharge) / -*lo : 1.0;
    const double pos = *hi > 0 ? 1.0 / *hi : 1.0;
    for (auto& v : raw) v *= v < 0 ? neg : pos;
  }
  const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) throw std::runtime_error("synth: degenerate profile");
  const double a = (peak_discharge + peak_charge) / (hi - lo);
  const double b = peak_discharge - a * hi;
  LoadProfile out;
  out.dt = dt;
  for (std::size_t i = 0; i < n; ++i) {
    out.time.push_back(static_cast<double>(i) * dt);
    out.power.push_back(a * raw[i] + b);
  }
  out.power[lo_it - raw.begin()] = -peak_charge;
  out.power[hi_it - raw.begin()] = peak_discharge;
  return out;
}

const std::vector<std::string>& trace_columns(bool wall_time) {
  static const std::vector<std::string> base = {
      "time",     "loss",     "cumulative_loss", "demand",    "delivered", "planned_loss", "k",
      "slack_e",  "slack_t",  "soc_min",         "soc_max",   "soc_mean",  "temp_min",     "temp_max",
      "temp_mean", "soc_balanced", "temp_balanced", "bound_dq", "bound_dt", "status",     "fallback",
      "clamped",  "saturated"};
  static const std::vector<std::string> timed = [] {
    auto v = base;
    v.push_back("solver_time");
    v.push_back("cluster_time");
    return v;
  }();
  return wall_time ? timed : base;
}

std::string trace_csv(const SimTrace& trace, bool wall_time) {
  std::string out = "# schema_version " + std::to_string(kSchemaVersion) + "\n";
  const auto& cols = trace_columns(wall_time);
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\n";
  for (const auto& m : trace.steps) {
    std::string row = fmt(m.time) + "," + fmt(m.loss) + "," + fmt(m.cumulative_loss) + "," + fmt(m.demand) + "," +
                      fmt(m.delivered) + "," + fmt(m.planned_loss) + "," + std::to_string(m.k) + "," +
                      fmt(m.slack_e) + "," + fmt(m.slack_t) + "," + fmt(m.soc_min) + "," + fmt(m.soc_max) + "," +
                      fmt(m.soc_mean) + "," + fmt(m.temp_min) + "," + fmt(m.temp_max) + "," + fmt(m.temp_mean) +
                      "," + (m.soc_balanced ? "1" : "0") + "," + (m.temp_balanced ? "1" : "0") + "," +
                      fmt(m.bound_dq) + "," + fmt(m.bound_dt) + "," + m.status + "," + (m.fallback ? "1" : "0") +
                      "," + std::to_string(m.clamped) + "," + std::to_string(m.saturated);
    if (wall_time) row += "," + fmt(m.solver_time) + "," + fmt(m.cluster_time);
    out += row + "\n";
  }
  return out;
}

void write_trace_csv(const SimTrace& trace, const std::filesystem::path& path, bool wall_time) {
  write_file(path, trace_csv(trace, wall_time));
}

std::vector<StepMetrics> read_trace_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string raw;
  std::vector<std::string> header;
  std::vector<StepMetrics> out;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.empty() || raw.front() == '#') continue;
    const auto cols = split(raw, ',');
    if (header.empty()) {
      header = cols;
      if (header != trace_columns(false) && header != trace_columns(true))
        throw IoError(path.string() + ": unexpected trace header");
      continue;
    }
    if (cols.size() != header.size()) throw IoError(path.string() + ": line " + std::to_string(line) + " has wrong column count");
    try {
      StepMetrics m;
      std::size_t c = 0;
      m.time = to_double(cols[c++]);
      m.loss = to_double(cols[c++]);
      m.cumulative_loss = to_double(cols[c++]);
      m.demand = to_double(cols[c++]);
      m.delivered = to_double(cols[c++]);
      m.planned_loss = to_double(cols[c++]);
      m.k = static_cast<int>(to_int(cols[c++]));
      m.slack_e = to_double(cols[c++]);
      m.slack_t = to_double(cols[c++]);
      m.soc_min = to_double(cols[c++]);
      m.soc_max = to_double(cols[c++]);
      m.soc_mean = to_double(cols[c++]);
      m.temp_min = to_double(cols[c++]);
      m.temp_max = to_double(cols[c++]);
      m.temp_mean = to_double(cols[c++]);
      m.soc_balanced = to_bool(cols[c++]);
      m.temp_balanced = to_bool(cols[c++]);
      m.bound_dq = to_double(cols[c++]);
      m.bound_dt = to_double(cols[c++]);
      m.status = cols[c++];
      m.fallback = to_bool(cols[c++]);
      m.clamped = static_cast<int>(to_int(cols[c++]));
      m.saturated = static_cast<int>(to_int(cols[c++]));
      if (c < cols.size()) {
        m.solver_time = to_double(cols[c++]);
        m.cluster_time = to_double(cols[c++]);
      }
      out.push_back(std::move(m));
    } catch (const std::invalid_argument& e) {
      throw IoError(path.string() + ": line " + std::to_string(line) + ": " + e.what());
    }
  }
  if (header.empty()) throw IoError(path.string() + ": missing header");
  return out;
}

RunReport make_report(const SimTrace& trace, const std::string& scheme, const SimTrace* baseline) {
  RunReport r;
  const auto& s = trace.summary;
  r.scheme = scheme;
  r.cumulative_loss = s.cumulative_loss;
  if (baseline) {
    r.baseline_loss = baseline->summary.cumulative_loss;
    if (*r.baseline_loss > 0) r.loss_reduction_pct = 100.0 * (1.0 - s.cumulative_loss / *r.baseline_loss);
  }
  r.soc_balance_time = s.soc_balance_time;
  r.temp_balance_time = s.temp_balance_time;
  r.mean_solver_time = s.mean_solver_time;
  r.max_solver_time = s.max_solver_time;
  r.mean_k = s.mean_k;
  r.initial_k = s.initial_k;
  r.final_k = s.final_k;
  r.fallback_steps = s.fallbacks;
  r.steps = static_cast<int>(trace.steps.size());
  return r;
}

std::string report_text(const RunReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("none"); };
  std::string out;
  out += "schema_version = " + std::to_string(kSchemaVersion) + "\n";
  out += "scheme = " + r.scheme + "\n";
  out += "steps = " + std::to_string(r.steps) + "\n";
  out += "cumulative_loss_j = " + fmt(r.cumulative_loss) + "\n";
  out += "baseline_loss_j = " + opt(r.baseline_loss) + "\n";
  out += "loss_reduction_pct = " + opt(r.loss_reduction_pct) + "\n";
  out += "soc_balance_time_s = " + opt(r.soc_balance_time) + "\n";
  out += "temp_balance_time_s = " + opt(r.temp_balance_time) + "\n";
  out += "mean_solver_time_s = " + fmt(r.mean_solver_time) + "\n";
  out += "max_solver_time_s = " + fmt(r.max_solver_time) + "\n";
  out += "mean_k = " + fmt(r.mean_k) + "\n";
  out += "initial_k = " + std::to_string(r.initial_k) + "\n";
  out += "final_k = " + std::to_string(r.final_k) + "\n";
  out += "fallback_steps = " + std::to_string(r.fallback_steps) + "\n";
  for (const auto& a : r.artifacts) out += "artifact = " + a + "\n";
  return out;
}

void write_report(const RunReport& report, const std::filesystem::path& path) {
  write_file(path, report_text(report));
}

std::vector<BenchmarkRow> cmd_benchmark(const BenchmarkSpec& spec, const std::vector<double>& profile) {
  std::vector<BenchmarkRow> rows;
  for (int n : spec.cell_counts) {
    SimConfig cfg = spec.base;
    cfg.population.count = n;
    cfg.population.cells.clear();
    cfg.duration = spec.steps * cfg.dt;
    // Scale demand to the pack so per-cell load matches the profile's
    // intent at every n.
    std::vector<double> scaled(profile.begin(), profile.end());
    const double ratio = static_cast<double>(n) / static_cast<double>(spec.base.population.count);
    for (auto& p : scaled) p *= ratio;

    SimConfig cell = cfg;
    cell.scheme = Scheme::Equal;
    const auto base = baseline_cell_level(cell, scaled);
    BenchmarkRow ref{n, 0, "cell-level", base.summary.mean_solver_time, 0.0};
    rows.push_back(ref);
    for (int cap : spec.k_caps) {
      for (Scheme scheme : spec.schemes) {
        SimConfig c = cfg;
        c.fixed_k = std::min(cap, n);
        c.scheme = scheme;
        const auto tr = run(c, scaled);
        BenchmarkRow row{n, cap, to_string(scheme), tr.summary.mean_solver_time, 0.0};
        row.reduction_pct = ref.mean_time > 0 ? 100.0 * (1.0 - row.mean_time / ref.mean_time) : 0.0;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::string benchmark_table(const std::vector<BenchmarkRow>& rows) {
  std::string out = "n,k_cap,scheme,mean_time_s,reduction_pct\n";
  for (const auto& r : rows)
    out += std::to_string(r.n) + "," + std::to_string(r.k_cap) + "," + r.scheme + "," + fmt(r.mean_time) + "," +
           fmt(r.reduction_pct) + "\n";
  return out;
}

}  // namespace bess
