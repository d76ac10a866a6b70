#include "cpf/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace cpf {

using nlohmann::json;

namespace {

// Typed accessor over one JSON object that remembers which keys were read so
// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string prefix)
      : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) fail("", "expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return number(key);
  }
  double number(const std::string& key) {
    const json& v = require(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double out = v.get<double>();
    if (!std::isfinite(out)) fail(key, "must be finite");
    return out;
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = require(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key) {
    const json& v = require(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::uint64_t unsigned_integer(const std::string& key) {
    const json& v = require(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(key, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  const json& require(const std::string& key) {
    if (!has(key)) fail(key, "missing required key");
    seen_.insert(key);
    return obj_.at(key);
  }
  std::string path(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const std::string where = key.empty() ? (prefix_.empty() ? "<root>" : prefix_) : path(key);
    throw ConfigError(where + ": " + what);
  }
  void reject_unknown() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) fail(item.key(), "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> seen_;
};

Pose read_pose(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3 ||
      !std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
    throw ConfigError(where + ": expected [x, y, theta]");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

json pose_json(const Pose& p) { return json::array({p.x(), p.y(), p.heading}); }

PathSpec read_path(ObjectReader& root) {
  PathSpec spec;
  ObjectReader path(root.require("path"), "path");
  if (path.has("start")) spec.start = read_pose(path.require("start"), "path.start");
  const json& segs = path.require("segments");
  if (!segs.is_array() || segs.empty()) path.fail("segments", "expected a non-empty array");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    ObjectReader seg(segs[i], "path.segments[" + std::to_string(i) + "]");
    const std::string kind = seg.string("kind");
    SegmentSpec out;
    if (kind == "line") {
      out.kind = SegmentKind::kLine;
      out.length = seg.number("length");
    } else if (kind == "arc") {
      out.kind = SegmentKind::kArc;
      out.radius = seg.number("radius");
      out.sweep = seg.number("sweep");
    } else {
      seg.fail("kind", "expected \"line\" or \"arc\"");
    }
    seg.reject_unknown();
    spec.segments.push_back(out);
  }
  path.reject_unknown();

  if (root.has("gaps")) {
    const json& gaps = root.require("gaps");
    if (!gaps.is_array()) root.fail("gaps", "expected an array of [start, end]");
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      const json& g = gaps[i];
      if (!g.is_array() || g.size() != 2 || !g[0].is_number() || !g[1].is_number()) {
        throw ConfigError("gaps[" + std::to_string(i) + "]: expected [start, end]");
      }
      spec.gaps.push_back({g[0].get<double>(), g[1].get<double>()});
    }
  }
  if (root.has("objects")) {
    const json& objects = root.require("objects");
    if (!objects.is_array()) root.fail("objects", "expected an array");
    for (std::size_t i = 0; i < objects.size(); ++i) {
      ObjectReader o(objects[i], "objects[" + std::to_string(i) + "]");
      InspectionObject object;
      object.s = o.number("s");
      object.lateral_offset = o.number("lateral_offset", 0.0);
      const double slits = o.number("slit_count", 0.0);
      if (slits < 0.0 || slits != std::floor(slits)) {
        o.fail("slit_count", "expected a non-negative integer");
      }
      object.slit_count = static_cast<int>(slits);
      o.reject_unknown();
      spec.objects.push_back(object);
    }
  }
  return spec;
}

void require_positive(double value, const std::string& key) {
  if (!(value > 0.0)) throw ConfigError(key + ": must be > 0");
}

}  // namespace

std::string to_string(ControlMode mode) {
  return mode == ControlMode::kManual ? "MC" : "CC";
}

ControlMode control_mode_from_string(const std::string& name) {
  if (name == "MC") return ControlMode::kManual;
  if (name == "CC") return ControlMode::kCooperative;
  throw ConfigError("mode: expected \"MC\" or \"CC\", got \"" + name + "\"");
}

Scenario scenario_from_json(const json& doc) {
  Scenario s;
  ObjectReader root(doc, "");
  s.path = read_path(root);

  if (root.has("vehicle")) {
    ObjectReader v(root.require("vehicle"), "vehicle");
    s.vehicle.max_speed = v.number("v_max", s.vehicle.max_speed);
    s.vehicle.max_yaw_rate = v.number("omega_max", s.vehicle.max_yaw_rate);
    s.vehicle.lag_time_constant = v.number("tau", s.vehicle.lag_time_constant);
    if (v.has("initial_pose")) {
      s.initial_pose = read_pose(v.require("initial_pose"), "vehicle.initial_pose");
    }
    v.reject_unknown();
  }
  if (root.has("controller")) {
    ObjectReader c(root.require("controller"), "controller");
    s.controller.alpha = c.number("alpha", s.controller.alpha);
    s.controller.k2 = c.number("K2", s.controller.k2);
    s.controller.k3 = c.number("K3", s.controller.k3);
    s.controller.c0 = c.number("c0", s.controller.c0);
    s.heading_clamp = c.number("e3_clamp", s.heading_clamp);
    c.reject_unknown();
  }
  if (root.has("haptics")) {
    ObjectReader h(root.require("haptics"), "haptics");
    s.haptics.kp = h.number("K_p", s.haptics.kp);
    s.haptics.kd = h.number("K_d", s.haptics.kd);
    s.haptics.k_omega = h.number("k_omega", s.haptics.k_omega);
    s.haptics.k_speed = h.number("k_V", s.haptics.k_speed);
    s.haptics.stick_mass = h.number("stick_mass", s.haptics.stick_mass);
    s.haptics.stick_damping = h.number("stick_damping", s.haptics.stick_damping);
    s.haptics.hand_stiffness = h.number("hand_stiffness", s.haptics.hand_stiffness);
    s.haptics.allow_reverse = h.boolean("allow_reverse", s.haptics.allow_reverse);
    if (h.has("stick_model")) {
      const std::string model = h.string("stick_model");
      if (model == "dynamic") {
        s.haptics.quasi_static = false;
      } else if (model == "quasi_static") {
        s.haptics.quasi_static = true;
      } else {
        h.fail("stick_model", "expected \"dynamic\" or \"quasi_static\"");
      }
    }
    h.reject_unknown();
  }
  if (root.has("operator")) {
    ObjectReader o(root.require("operator"), "operator");
    if (o.has("kind")) {
      try {
        s.op.kind = operator_kind_from_string(o.string("kind"));
      } catch (const std::invalid_argument& e) {
        o.fail("kind", e.what());
      }
    }
    s.op.reaction_delay = o.number("reaction_delay", s.op.reaction_delay);
    s.op.sigma_e2 = o.number("sigma_e2", s.op.sigma_e2);
    s.op.sigma_e3 = o.number("sigma_e3", s.op.sigma_e3);
    s.op.noise_correlation_time =
        o.number("noise_correlation_time", s.op.noise_correlation_time);
    s.op.k_p2 = o.number("k_p2", s.op.k_p2);
    s.op.k_p3 = o.number("k_p3", s.op.k_p3);
    s.op.k_d = o.number("k_d", s.op.k_d);
    s.op.derivative_filter = o.number("derivative_filter", s.op.derivative_filter);
    s.op.speed_setpoint = o.number("speed_setpoint", s.op.speed_setpoint);
    s.op.slowdown_radius = o.number("slowdown_radius", s.op.slowdown_radius);
    o.reject_unknown();
  }

  s.mode = control_mode_from_string(root.string("mode"));
  s.dt = root.number("dt");
  s.max_duration = root.number("max_duration");
  s.sensing_radius = root.number("sensing_radius");
  s.seed = root.unsigned_integer("seed");
  s.op.seed = s.seed;
  root.reject_unknown();

  validate(s);
  return s;
}

void validate(const Scenario& s) {
  if (!(s.dt > 0.0 && s.dt <= 0.05)) throw ConfigError("dt: must lie in (0, 0.05]");
  require_positive(s.max_duration, "max_duration");
  require_positive(s.sensing_radius, "sensing_radius");

  require_positive(s.vehicle.max_speed, "vehicle.v_max");
  require_positive(s.vehicle.max_yaw_rate, "vehicle.omega_max");
  if (s.vehicle.lag_time_constant < 0.0) throw ConfigError("vehicle.tau: must be >= 0");

  require_positive(s.controller.alpha, "controller.alpha");
  require_positive(s.controller.k2, "controller.K2");
  require_positive(s.controller.k3, "controller.K3");
  if (s.controller.c0 < 0.0) throw ConfigError("controller.c0: must be >= 0");
  if (!(s.heading_clamp > 0.0 && s.heading_clamp < kPi<double> / 2.0)) {
    throw ConfigError("controller.e3_clamp: must lie in (0, pi/2)");
  }

  require_positive(s.haptics.kp, "haptics.K_p");
  require_positive(s.haptics.kd, "haptics.K_d");
  require_positive(s.haptics.k_omega, "haptics.k_omega");
  require_positive(s.haptics.k_speed, "haptics.k_V");
  require_positive(s.haptics.stick_mass, "haptics.stick_mass");
  require_positive(s.haptics.stick_damping, "haptics.stick_damping");
  require_positive(s.haptics.hand_stiffness, "haptics.hand_stiffness");
  if (!(s.haptics.kp < s.haptics.hand_stiffness)) {
    throw ConfigError(
        "haptics.K_p: guidance must stay weaker than the operator's hand "
        "(K_p < hand_stiffness)");
  }

  if (s.op.reaction_delay < 0.0) throw ConfigError("operator.reaction_delay: must be >= 0");
  if (s.op.sigma_e2 < 0.0) throw ConfigError("operator.sigma_e2: must be >= 0");
  if (s.op.sigma_e3 < 0.0) throw ConfigError("operator.sigma_e3: must be >= 0");
  require_positive(s.op.noise_correlation_time, "operator.noise_correlation_time");
  if (s.op.derivative_filter < 0.0) {
    throw ConfigError("operator.derivative_filter: must be >= 0");
  }
  if (s.op.slowdown_radius < 0.0) throw ConfigError("operator.slowdown_radius: must be >= 0");
  if (std::abs(s.op.speed_setpoint) > 1.0) {
    throw ConfigError("operator.speed_setpoint: must lie in [-1, 1]");
  }

  try {
    (void)build_path(s.path);
  } catch (const PathError& e) {
    throw ConfigError(std::string("path: ") + e.what());
  }
}

Scenario load_scenario_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string() + ": cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  json doc;
  try {
    doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError(file.string() + ":" + std::to_string(line) + ":" +
                      std::to_string(column) + ": malformed JSON");
  }
  try {
    return scenario_from_json(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

json to_json(const Scenario& s) {
  json segments = json::array();
  for (const auto& seg : s.path.segments) {
    if (seg.kind == SegmentKind::kLine) {
      segments.push_back({{"kind", "line"}, {"length", seg.length}});
    } else {
      segments.push_back({{"kind", "arc"}, {"radius", seg.radius}, {"sweep", seg.sweep}});
    }
  }
  json gaps = json::array();
  for (const auto& g : s.path.gaps) gaps.push_back(json::array({g.start, g.end}));
  json objects = json::array();
  for (const auto& o : s.path.objects) {
    objects.push_back(
        {{"s", o.s}, {"lateral_offset", o.lateral_offset}, {"slit_count", o.slit_count}});
  }
  json vehicle = {{"v_max", s.vehicle.max_speed},
                  {"omega_max", s.vehicle.max_yaw_rate},
                  {"tau", s.vehicle.lag_time_constant}};
  if (s.initial_pose) vehicle["initial_pose"] = pose_json(*s.initial_pose);

  return {
      {"path", {{"start", pose_json(s.path.start)}, {"segments", segments}}},
      {"gaps", gaps},
      {"objects", objects},
      {"vehicle", vehicle},
      {"controller",
       {{"alpha", s.controller.alpha},
        {"K2", s.controller.k2},
        {"K3", s.controller.k3},
        {"c0", s.controller.c0},
        {"e3_clamp", s.heading_clamp}}},
      {"haptics",
       {{"K_p", s.haptics.kp},
        {"K_d", s.haptics.kd},
        {"k_omega", s.haptics.k_omega},
        {"k_V", s.haptics.k_speed},
        {"stick_mass", s.haptics.stick_mass},
        {"stick_damping", s.haptics.stick_damping},
        {"hand_stiffness", s.haptics.hand_stiffness},
        {"allow_reverse", s.haptics.allow_reverse},
        {"stick_model", s.haptics.quasi_static ? "quasi_static" : "dynamic"}}},
      {"operator",
       {{"kind", to_string(s.op.kind)},
        {"reaction_delay", s.op.reaction_delay},
        {"sigma_e2", s.op.sigma_e2},
        {"sigma_e3", s.op.sigma_e3},
        {"noise_correlation_time", s.op.noise_correlation_time},
        {"k_p2", s.op.k_p2},
        {"k_p3", s.op.k_p3},
        {"k_d", s.op.k_d},
        {"derivative_filter", s.op.derivative_filter},
        {"speed_setpoint", s.op.speed_setpoint},
        {"slowdown_radius", s.op.slowdown_radius}}},
      {"mode", to_string(s.mode)},
      {"dt", s.dt},
      {"max_duration", s.max_duration},
      {"sensing_radius", s.sensing_radius},
      {"seed", s.seed},
  };
}

std::string scenario_hash(const Scenario& scenario) {
  const std::string canonical = to_json(scenario).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Scenario default_scenario() {
  Scenario s;
  constexpr double kQuarter = kPi<double> / 2.0;
  s.path.start = Pose(0.0, 0.0, 0.0);
  s.path.segments = {
      {SegmentKind::kLine, 3.2, 0.0, 0.0},
      {SegmentKind::kArc, 0.0, 0.5, kQuarter},
      {SegmentKind::kLine, 1.0, 0.0, 0.0},
      {SegmentKind::kArc, 0.0, 0.5, kQuarter},
      {SegmentKind::kLine, 3.2, 0.0, 0.0},
  };
  // Gap A mid first straight, B mid middle straight, C mid final straight.
  s.path.gaps = {{1.45, 1.75}, {4.34, 4.64}, {7.21, 7.51}};
  s.path.objects = {
      {0.8, 0.35, 3}, {2.6, -0.35, 4}, {4.0, 0.35, 2},
      {5.0, -0.35, 5}, {6.4, 0.35, 4}, {8.2, -0.35, 3},
  };
  s.mode = ControlMode::kCooperative;
  s.op.kind = OperatorKind::kHybrid;
  s.dt = 0.01;
  s.max_duration = 120.0;
  s.sensing_radius = 0.5;
  s.seed = 1;
  s.op.seed = s.seed;
  return s;
}

}  // namespace cpf
