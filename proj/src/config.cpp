#include "stable_bicycle/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace stable_bicycle {

namespace {

const std::map<std::string, std::set<std::string>, std::less<>>& known_keys() {
  static const std::map<std::string, std::set<std::string>, std::less<>> keys{
      {"vehicle", {"preset", "m", "I_z", "k_f", "k_r", "l_f", "l_r"}},
      {"scenario",
       {"name", "integrator", "T_s", "duration", "X0", "Y0", "phi0", "U0", "V0", "omega0",
        "segment", "fp_max_iters", "fp_tol"}},
      {"sweep", {"U_min", "U_max", "n_grid", "T_s", "tol_eq", "pairwise_grid"}},
      {"compare", {"U0", "delta", "duration", "T_s", "T_fine", "ramp"}},
      {"bench", {"n_steps", "repeats"}},
      {"noise", {"sigma", "seed", "seeds"}},
      {"ocp",
       {"N_p", "N_c", "Q", "R", "Q_s", "D_s", "x_min", "x_max", "u_min", "u_max", "T_s",
        "max_iters", "penalty_init", "penalty_growth", "safety_buffer", "warm_start",
        "target", "ref_speed", "obstacle", "obstacle_enabled", "obstacle_moved_to",
        "obstacle_move_time", "stop_speed", "x0", "duration"}},
  };
  return keys;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double plain_number(std::string_view t, std::string_view whole) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    throw ConfigError("not a number: '" + std::string(whole) + "'");
  }
  return v;
}

std::string key_name(std::string_view section, std::string_view key) {
  return "[" + std::string(section) + "] " + std::string(key);
}

}  // namespace

double parse_number(std::string_view text) {
  std::string_view t = trim(text);
  if (t.empty()) throw ConfigError("empty number");
  double sign = 1.0;
  std::string_view body = t;
  if (body.front() == '-' || body.front() == '+') {
    sign = body.front() == '-' ? -1.0 : 1.0;
    body.remove_prefix(1);
  }
  if (body == "inf") return sign * std::numeric_limits<double>::infinity();
  if (body.starts_with("pi")) {
    std::string_view rest = body.substr(2);
    if (rest.empty()) return sign * std::numbers::pi;
    if (rest.front() == '/') return sign * std::numbers::pi / plain_number(rest.substr(1), t);
    throw ConfigError("not a number: '" + std::string(t) + "'");
  }
  return sign * plain_number(body, t);
}

std::vector<double> parse_number_list(std::string_view text) {
  std::string_view t = trim(text);
  if (!t.empty() && t.front() == '[') {
    if (t.back() != ']') throw ConfigError("unterminated list: '" + std::string(t) + "'");
    t = trim(t.substr(1, t.size() - 2));
  }
  std::vector<double> out;
  if (t.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = t.find(',', start);
    out.push_back(parse_number(t.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

Config Config::parse(std::string_view text) {
  Config cfg;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!known_keys().contains(section)) {
        throw ConfigError(where + "unknown section [" + section + "]");
      }
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!known_keys().find(section)->second.contains(key)) {
      throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    }
    auto& entries = cfg.sections_[section];
    if (key != "segment" && entries.contains(key)) {
      throw ConfigError(where + "duplicate key '" + key + "' in [" + section + "]");
    }
    entries.emplace(key, Entry{value, line_no});
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const Config::Entry* Config::find(std::string_view section, std::string_view key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  const auto e = s->second.find(std::string(key));
  return e == s->second.end() ? nullptr : &e->second;
}

bool Config::has(std::string_view section, std::string_view key) const {
  return find(section, key) != nullptr;
}

bool Config::has_section(std::string_view section) const {
  return sections_.find(section) != sections_.end();
}

std::string Config::text(std::string_view section, std::string_view key,
                         std::string fallback) const {
  const Entry* e = find(section, key);
  return e ? e->value : fallback;
}

double Config::number(std::string_view section, std::string_view key, double fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  try {
    return parse_number(e->value);
  } catch (const ConfigError& err) {
    throw ConfigError("line " + std::to_string(e->line) + ": " + key_name(section, key) + ": " +
                      err.what());
  }
}

std::uint64_t Config::count(std::string_view section, std::string_view key,
                            std::uint64_t fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  std::uint64_t v = 0;
  const auto& s = e->value;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("line " + std::to_string(e->line) + ": " + key_name(section, key) +
                      " must be a non-negative integer");
  }
  return v;
}

std::vector<double> Config::numbers(std::string_view section, std::string_view key,
                                    std::vector<double> fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  try {
    return parse_number_list(e->value);
  } catch (const ConfigError& err) {
    throw ConfigError("line " + std::to_string(e->line) + ": " + key_name(section, key) + ": " +
                      err.what());
  }
}

bool Config::flag(std::string_view section, std::string_view key, bool fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  if (e->value == "true" || e->value == "1") return true;
  if (e->value == "false" || e->value == "0") return false;
  throw ConfigError("line " + std::to_string(e->line) + ": " + key_name(section, key) +
                    " must be true or false");
}

std::vector<std::string> Config::all(std::string_view section, std::string_view key) const {
  std::vector<std::pair<int, std::string>> found;
  const auto s = sections_.find(section);
  if (s != sections_.end()) {
    const auto [lo, hi] = s->second.equal_range(std::string(key));
    for (auto it = lo; it != hi; ++it) found.emplace_back(it->second.line, it->second.value);
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  for (auto& [line, value] : found) out.push_back(std::move(value));
  return out;
}

namespace {

template <std::size_t N>
std::array<double, N> fixed_list(const Config& cfg, std::string_view section,
                                 std::string_view key, std::array<double, N> fallback) {
  if (!cfg.has(section, key)) return fallback;
  const auto v = cfg.numbers(section, key, {});
  if (v.size() != N) {
    throw ConfigError(key_name(section, key) + " needs " + std::to_string(N) + " values");
  }
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void check_step(double dt, const std::string& what) {
  require(dt > 0.0 && dt <= 1.0 && std::isfinite(dt), what + " must be in (0, 1]");
}

}  // namespace

VehicleParams load_vehicle(const Config& cfg) {
  const std::string preset = cfg.text("vehicle", "preset", "simulation_car");
  VehicleParams p;
  if (preset == "simulation_car") {
    p = VehicleParams::simulation_car();
  } else if (preset == "test_suv") {
    p = VehicleParams::test_suv();
  } else {
    throw ConfigError("[vehicle] preset must be simulation_car or test_suv");
  }
  p.mass = cfg.number("vehicle", "m", p.mass);
  p.yaw_inertia = cfg.number("vehicle", "I_z", p.yaw_inertia);
  p.k_front = cfg.number("vehicle", "k_f", p.k_front);
  p.k_rear = cfg.number("vehicle", "k_r", p.k_rear);
  p.l_front = cfg.number("vehicle", "l_f", p.l_front);
  p.l_rear = cfg.number("vehicle", "l_r", p.l_rear);
  try {
    return validate_params(p);
  } catch (const ParamError& e) {
    throw ConfigError(std::string("[vehicle] ") + e.what());
  }
}

Scenario load_scenario(const Config& cfg) {
  Scenario sc;
  sc.params = load_vehicle(cfg);
  sc.name = cfg.text("scenario", "name", "step_steer");
  try {
    sc.integrator = parse_integrator(cfg.text("scenario", "integrator", "proposed"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[scenario] ") + e.what());
  }
  sc.dt = cfg.number("scenario", "T_s", 0.1);
  check_step(sc.dt, "[scenario] T_s");
  sc.duration = cfg.number("scenario", "duration", 5.0);
  require(sc.duration > 0.0 && std::isfinite(sc.duration), "[scenario] duration must be positive");
  sc.initial = {cfg.number("scenario", "X0", 0.0),   cfg.number("scenario", "Y0", 0.0),
                cfg.number("scenario", "phi0", 0.0), cfg.number("scenario", "U0", 8.0),
                cfg.number("scenario", "V0", 0.0),   cfg.number("scenario", "omega0", 0.0)};
  require(sc.initial.u >= 0.0, "[scenario] U0 must be >= 0");
  sc.fixed_point.max_iters = static_cast<int>(cfg.count("scenario", "fp_max_iters", 100));
  sc.fixed_point.tol = cfg.number("scenario", "fp_tol", 1e-10);

  const auto segments = cfg.all("scenario", "segment");
  if (segments.empty()) {
    // Two-stage step steer: 0.1347 rad from t = 0, 0.2674 rad from t = 1 s.
    sc.schedule = InputSchedule({{0.0, {0.0, 0.1347}, 0.0}, {1.0, {0.0, 0.2674}, 0.0}});
  } else {
    std::vector<InputSegment> segs;
    for (const auto& s : segments) {
      const auto v = parse_number_list(s);
      require(v.size() == 3 || v.size() == 4,
              "[scenario] segment needs 't_start, a, delta[, ramp]', got '" + s + "'");
      segs.push_back({v[0], {v[1], v[2]}, v.size() == 4 ? v[3] : 0.0});
    }
    try {
      sc.schedule = InputSchedule(std::move(segs));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("[scenario] ") + e.what());
    }
  }
  return sc;
}

SweepConfig load_sweep(const Config& cfg) {
  SweepConfig s;
  s.u_min = cfg.number("sweep", "U_min", s.u_min);
  s.u_max = cfg.number("sweep", "U_max", s.u_max);
  s.n_grid = cfg.count("sweep", "n_grid", s.n_grid);
  s.dts = cfg.numbers("sweep", "T_s", s.dts);
  s.tolerance = cfg.number("sweep", "tol_eq", s.tolerance);
  s.pairwise_grid = cfg.count("sweep", "pairwise_grid", 0);
  require(s.u_min >= 0.0 && s.u_max > s.u_min, "[sweep] needs 0 <= U_min < U_max");
  require(s.n_grid >= 2, "[sweep] n_grid must be >= 2");
  require(!s.dts.empty(), "[sweep] T_s list is empty");
  for (double dt : s.dts) require(dt > 0.0 && std::isfinite(dt), "[sweep] T_s must be positive");
  require(s.pairwise_grid == 0 || s.pairwise_grid >= 2, "[sweep] pairwise_grid must be 0 or >= 2");
  return s;
}

CompareConfig load_compare(const Config& cfg) {
  CompareConfig c;
  c.u0s = cfg.numbers("compare", "U0", c.u0s);
  c.steers = cfg.numbers("compare", "delta", c.steers);
  c.accuracy.duration = cfg.number("compare", "duration", c.accuracy.duration);
  c.accuracy.dt = cfg.number("compare", "T_s", c.accuracy.dt);
  c.accuracy.fine_step = cfg.number("compare", "T_fine", c.accuracy.fine_step);
  c.accuracy.steer_ramp = cfg.number("compare", "ramp", c.accuracy.steer_ramp);
  require(!c.u0s.empty() && !c.steers.empty(), "[compare] U0 and delta lists must be non-empty");
  for (double u : c.u0s) require(u > 0.0, "[compare] U0 values must be positive");
  check_step(c.accuracy.dt, "[compare] T_s");
  require(c.accuracy.fine_step > 0.0 && c.accuracy.fine_step <= c.accuracy.dt,
          "[compare] T_fine must be in (0, T_s]");
  require(c.accuracy.duration > 0.0, "[compare] duration must be positive");
  require(c.accuracy.steer_ramp >= 0.0, "[compare] ramp must be >= 0");
  return c;
}

BenchConfig load_bench(const Config& cfg) {
  BenchConfig b;
  b.n_steps = cfg.count("bench", "n_steps", b.n_steps);
  b.repeats = cfg.count("bench", "repeats", b.repeats);
  require(b.n_steps >= 1000, "[bench] n_steps must be >= 1000");
  require(b.repeats >= 1, "[bench] repeats must be >= 1");
  return b;
}

NoiseConfig load_noise(const Config& cfg) {
  NoiseConfig n;
  n.sigmas = cfg.numbers("noise", "sigma", n.sigmas);
  n.seed = cfg.count("noise", "seed", n.seed);
  n.seeds = cfg.count("noise", "seeds", n.seeds);
  require(!n.sigmas.empty(), "[noise] sigma list is empty");
  for (double s : n.sigmas) require(s >= 0.0, "[noise] sigma must be >= 0");
  require(n.seeds >= 1, "[noise] seeds must be >= 1");
  return n;
}

Scenario default_noise_scenario() {
  Scenario sc;
  sc.name = "noise_base";
  sc.initial = {0.0, 0.0, 0.0, 5.0, 0.0, 0.0};
  sc.schedule = InputSchedule::constant({0.0, 0.2674});
  sc.dt = 0.01;
  sc.duration = 10.0;
  return sc;
}

MpcConfig load_mpc(const Config& cfg) {
  MpcConfig m;
  OcpSpec& s = m.spec;
  s.horizon = static_cast<int>(cfg.count("ocp", "N_p", static_cast<std::uint64_t>(s.horizon)));
  s.control_horizon =
      static_cast<int>(cfg.count("ocp", "N_c", static_cast<std::uint64_t>(s.control_horizon)));
  s.q = fixed_list<6>(cfg, "ocp", "Q", s.q);
  s.r = fixed_list<2>(cfg, "ocp", "R", s.r);
  s.q_safe = fixed_list<6>(cfg, "ocp", "Q_s", s.q_safe);
  s.safe_distance = cfg.number("ocp", "D_s", s.safe_distance);
  s.x_min = fixed_list<6>(cfg, "ocp", "x_min", s.x_min);
  s.x_max = fixed_list<6>(cfg, "ocp", "x_max", s.x_max);
  const auto u_min = fixed_list<2>(cfg, "ocp", "u_min", {s.u_min.accel, s.u_min.steer});
  const auto u_max = fixed_list<2>(cfg, "ocp", "u_max", {s.u_max.accel, s.u_max.steer});
  s.u_min = {u_min[0], u_min[1]};
  s.u_max = {u_max[0], u_max[1]};
  s.dt = cfg.number("ocp", "T_s", s.dt);
  s.solver.max_iters =
      static_cast<int>(cfg.count("ocp", "max_iters", static_cast<std::uint64_t>(s.solver.max_iters)));
  s.solver.penalty_init = cfg.number("ocp", "penalty_init", s.solver.penalty_init);
  s.solver.penalty_growth = cfg.number("ocp", "penalty_growth", s.solver.penalty_growth);
  s.solver.safety_buffer = cfg.number("ocp", "safety_buffer", s.solver.safety_buffer);
  s.solver.warm_start = cfg.flag("ocp", "warm_start", s.solver.warm_start);
  try {
    validate_ocp(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[ocp] ") + e.what());
  }

  const auto target = fixed_list<2>(cfg, "ocp", "target", {m.reference.target.x, m.reference.target.y});
  m.reference = {{target[0], target[1]}, cfg.number("ocp", "ref_speed", m.reference.speed)};
  require(m.reference.speed >= 0.0, "[ocp] ref_speed must be >= 0");

  const auto obs = fixed_list<2>(cfg, "ocp", "obstacle", {m.obstacle.position.x, m.obstacle.position.y});
  m.obstacle.position = {obs[0], obs[1]};
  if (cfg.has("ocp", "obstacle_moved_to")) {
    const auto to = fixed_list<2>(cfg, "ocp", "obstacle_moved_to", {0.0, 0.0});
    m.obstacle.relocate_to = Point2{to[0], to[1]};
  }
  if (cfg.has("ocp", "obstacle_move_time")) {
    m.obstacle.relocate_at = cfg.number("ocp", "obstacle_move_time", 0.0);
  }
  m.obstacle.stop_speed = cfg.number("ocp", "stop_speed", m.obstacle.stop_speed);
  m.obstacle_enabled = cfg.flag("ocp", "obstacle_enabled", true);

  const auto x0 = fixed_list<6>(cfg, "ocp", "x0",
                                {m.initial.x, m.initial.y, m.initial.yaw, m.initial.u,
                                 m.initial.v, m.initial.yaw_rate});
  m.initial = {x0[0], x0[1], x0[2], x0[3], x0[4], x0[5]};
  m.duration = cfg.number("ocp", "duration", m.duration);
  require(m.duration > 0.0, "[ocp] duration must be positive");
  return m;
}

}  // namespace stable_bicycle
