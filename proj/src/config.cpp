#include "socsim/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "socsim/error.hpp"
#include "socsim/random.hpp"

#ifndef SOCSIM_DATA_DIR
#define SOCSIM_DATA_DIR "data"
#endif

namespace socsim {

using nlohmann::json;

namespace {

// Field binders: one list of (name, member) pairs per struct drives both the default
// document and the strict reader.

struct Writer {
  json& j;
  template <class T>
  void operator()(const char* key, T& v) {
    j[key] = v;
  }
};

struct Reader {
  const json& j;
  std::string where;
  std::set<std::string> seen;

  template <class T>
  void operator()(const char* key, T& v) {
    seen.insert(key);
    if (!j.contains(key)) return;
    try {
      const json& x = j.at(key);
      if constexpr (std::is_same_v<T, bool>) {
        if (!x.is_boolean()) throw ConfigError(where + "." + key + " must be a boolean");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!x.is_number()) throw ConfigError(where + "." + key + " must be a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!x.is_string()) throw ConfigError(where + "." + key + " must be a string");
      }
      v = x.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where + "." + key + ": " + e.what());
    }
  }

  void finish() const {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : j.items())
      if (!seen.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
};

template <class F>
void bind(BallPhysics& b, F&& f) {
  f("friction", b.friction);
  f("restitution", b.restitution);
  f("radius", b.radius);
  f("mass", b.mass);
  f("max_impulse", b.max_impulse);
  f("hold_slack", b.hold_slack);
  f("hold_angle", b.hold_angle);
  f("hold_lateral_tol", b.hold_lateral_tol);
  f("hold_mu_static", b.hold_mu_static);
  f("hold_mu_kinetic", b.hold_mu_kinetic);
  f("capture_speed_max", b.capture_speed_max);
  f("capture_cooldown", b.capture_cooldown);
}

template <class F>
void bind(RobotLimits& r, F&& f) {
  f("v_max", r.v_max);
  f("omega_max", r.omega_max);
  f("radius", r.radius);
}

template <class F>
void bind(Arena& a, F&& f) {
  f("half_x", a.half_x);
  f("half_y", a.half_y);
}

template <class F>
void bind(CameraConfig& c, F&& f) {
  f("fov", c.fov);
  f("max_range", c.max_range);
  f("range_sigma", c.range_sigma);
  f("bearing_sigma", c.bearing_sigma);
}

template <class F>
void bind(ScanConfig& c, F&& f) {
  f("radii", c.radii);
  f("noise_sigma", c.noise_sigma);
  f("clutter_fraction", c.clutter_fraction);
}

template <class F>
void bind(GoalSensorConfig& c, F&& f) {
  f("max_range", c.max_range);
  f("bearing_sigma", c.bearing_sigma);
}

template <class F>
void bind(SonarConfig& c, F&& f) {
  f("max_range", c.max_range);
  f("noise_sigma", c.noise_sigma);
}

template <class F>
void bind(ChannelConfig& c, F&& f) {
  f("latency", c.latency);
  f("jitter", c.jitter);
  f("loss", c.loss);
}

template <class F>
void bind(FusionConfig& c, F&& f) {
  f("gate_threshold", c.gate_threshold);
  f("staleness", c.staleness);
  f("local_enabled", c.local_enabled);
  f("global_enabled", c.global_enabled);
  f("growth_rate", c.growth_rate);
  f("pose_position_sigma", c.pose_position_sigma);
  f("pose_heading_sigma", c.pose_heading_sigma);
  f("untrusted_factor", c.untrusted_factor);
  f("epsilon", c.epsilon);
}

template <class F>
void bind(PotentialParams& p, F&& f) {
  f("k_att", p.k_att);
  f("k_rep", p.k_rep);
  f("d0", p.d0);
  f("beta", p.beta);
  f("robot_radius", p.robot_radius);
  f("k_omega", p.k_omega);
  f("damping", p.damping);
  f("a_max", p.a_max);
  f("v_max", p.v_max);
  f("omega_max", p.omega_max);
  f("dt", p.dt);
}

template <class F>
void bind(DribbleParams& d, F&& f) {
  f("c0", d.c0);
  f("c1", d.c1);
  f("v_min", d.v_min);
}

template <class F>
void bind_guide_scalars(GuideParams& g, F&& f) {
  f("brake_margin", g.brake_margin);
  f("arrive_tol", g.arrive_tol);
  f("stall_time", g.stall_time);
  f("stall_progress", g.stall_progress);
  f("escape_time", g.escape_time);
  f("escape_distance", g.escape_distance);
}

template <class F>
void bind(LocalizerConfig& c, F&& f) {
  f("rho_resolution", c.accumulator.rho_resolution);
  f("phi_resolution", c.accumulator.phi_resolution);
  f("top_q", c.top_q);
  f("min_votes", c.min_votes);
  f("suppression_radius", c.suppression_radius);
  f("peak_threshold", c.peak_threshold);
  f("relevance_phi_tol", c.relevance.phi_tol);
  f("relevance_rho_tol", c.relevance.rho_tol);
  f("match_phi_tol", c.match_phi_tol);
  f("match_rho_tol", c.match_rho_tol);
  f("min_pair_angle", c.min_pair_angle);
  f("fit_tol", c.fit_tol);
  f("scored_clusters", c.scored_clusters);
  f("refined_candidates", c.refined_candidates);
  f("refine_iterations", c.refine_iterations);
  f("trust_threshold", c.trust_threshold);
  f("goal_bearing_tol", c.goal_bearing_tol);
}

template <class F>
void bind(FieldConfig& c, F&& f) {
  f("length", c.length);
  f("width", c.width);
  f("goal_width", c.goal_width);
  f("goal_area_depth", c.goal_area_depth);
  f("goal_area_width", c.goal_area_width);
}

template <class T>
json write(T v) {
  json j = json::object();
  bind(v, Writer{j});
  return j;
}

template <class T>
void read(const json& j, const std::string& where, T& out, std::set<std::string> extra = {}) {
  Reader r{j, where, std::move(extra)};
  bind(out, r);
  r.finish();
}

json resolve_ref(const json& v, const std::filesystem::path& base, const char* what) {
  if (!v.is_string()) return v;
  std::filesystem::path p = v.get<std::string>();
  if (p.is_relative() && !base.empty()) p = base / p;
  if (!std::filesystem::exists(p)) throw ConfigError(std::string(what) + " file not found: " + p.string());
  return read_json_file(p);
}

std::vector<Segment> parse_segments(const json& j) {
  std::vector<Segment> out;
  if (!j.is_array()) throw ConfigError("field.segments must be a list of [ax, ay, bx, by]");
  for (const auto& s : j) {
    if (!s.is_array() || s.size() != 4) throw ConfigError("field.segments entries need four numbers");
    out.push_back({{s[0].get<double>(), s[1].get<double>()}, {s[2].get<double>(), s[3].get<double>()}});
  }
  return out;
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("SOCSIM_DATA_DIR")) return env;
  return SOCSIM_DATA_DIR;
}

json read_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open " + file.string());
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

json default_config_json() {
  const RunConfig d;
  json j;
  j["seed"] = d.seed;
  j["duration"] = d.duration;
  j["dt"] = d.dt;
  j["team_sizes"] = d.team_sizes;
  j["vision_period"] = d.vision_period;
  j["localization_period"] = d.localization_period;
  j["step_period"] = d.step_period;
  j["log_path"] = d.log_path;
  j["plot_dir"] = d.plot_dir;
  j["field"] = write(d.field);
  j["field"]["segments"] = json::array();
  j["arena"] = write(d.arena);
  j["ball"] = write(d.ball);
  j["robot"] = write(d.limits);
  j["sensors"] = {{"scan", write(d.sensors.scan)},
                  {"front_camera", write(d.sensors.front)},
                  {"up_camera", write(d.sensors.up)},
                  {"goal", write(d.sensors.goal)},
                  {"sonar", write(d.sensors.sonar)},
                  {"odom_scale_sigma", d.sensors.odom_scale_sigma},
                  {"odom_heading_sigma", d.sensors.odom_heading_sigma}};
  j["channel"] = write(d.channel);
  j["deaths"] = json::array();
  j["fusion"] = write(d.fusion);
  GuideParams g = d.guide;
  json nav = json::object();
  bind_guide_scalars(g, Writer{nav});
  nav["potential"] = write(d.guide.potential);
  nav["dribble"] = write(d.guide.dribble);
  j["navigation"] = nav;
  j["localizer"] = write(d.localizer);
  j["behavior"] = "behavior.json";
  j["des"] = {{"model", "des_2v2.json"}, {"tol", d.des.tol}, {"episodes", d.des.episodes}, {"horizon", d.des.horizon}};
  return j;
}

RunConfig make_run_config(const json& overrides, const std::filesystem::path& base_dir) {
  if (!overrides.is_object() && !overrides.is_null()) throw ConfigError("config must be an object");
  json doc = default_config_json();
  // Shipped files resolve against the data directory, user references against base_dir.
  doc["behavior"] = resolve_ref(doc["behavior"], data_dir(), "behavior");
  doc["des"]["model"] = resolve_ref(doc["des"]["model"], data_dir(), "DES model");
  json patch = overrides.is_null() ? json::object() : overrides;
  if (patch.contains("field")) patch["field"] = resolve_ref(patch["field"], base_dir, "field");
  if (patch.contains("behavior")) {
    // A behavior document replaces the default one wholesale.
    doc["behavior"] = resolve_ref(patch["behavior"], base_dir, "behavior");
    patch.erase("behavior");
  }
  if (patch.contains("des") && patch["des"].is_object() && patch["des"].contains("model")) {
    doc["des"]["model"] = resolve_ref(patch["des"]["model"], base_dir, "DES model");
    patch["des"].erase("model");
  }
  doc.merge_patch(patch);

  RunConfig c;
  {
    Reader top{doc, "config", {"field", "arena", "ball", "robot", "sensors", "channel", "deaths", "fusion",
                               "navigation", "localizer", "behavior", "des"}};
    top("seed", c.seed);
    top("duration", c.duration);
    top("dt", c.dt);
    top("team_sizes", c.team_sizes);
    top("vision_period", c.vision_period);
    top("localization_period", c.localization_period);
    top("step_period", c.step_period);
    top("log_path", c.log_path);
    top("plot_dir", c.plot_dir);
    top.finish();
  }
  read(doc.at("field"), "field", c.field, {"segments"});
  c.field.segments = parse_segments(doc.at("field").at("segments"));
  read(doc.at("arena"), "arena", c.arena);
  read(doc.at("ball"), "ball", c.ball);
  read(doc.at("robot"), "robot", c.limits);
  {
    const json& s = doc.at("sensors");
    Reader r{s, "sensors", {"scan", "front_camera", "up_camera", "goal", "sonar"}};
    r("odom_scale_sigma", c.sensors.odom_scale_sigma);
    r("odom_heading_sigma", c.sensors.odom_heading_sigma);
    r.finish();
    read(s.at("scan"), "sensors.scan", c.sensors.scan);
    read(s.at("front_camera"), "sensors.front_camera", c.sensors.front);
    read(s.at("up_camera"), "sensors.up_camera", c.sensors.up);
    read(s.at("goal"), "sensors.goal", c.sensors.goal);
    read(s.at("sonar"), "sensors.sonar", c.sensors.sonar);
  }
  read(doc.at("channel"), "channel", c.channel);
  for (const auto& d : doc.at("deaths")) {
    DeathSpec ds;
    Reader r{d, "deaths[]", {}};
    r("team", ds.team);
    r("robot", ds.robot);
    r("time", ds.time);
    r.finish();
    c.deaths.push_back(ds);
  }
  read(doc.at("fusion"), "fusion", c.fusion);
  {
    const json& n = doc.at("navigation");
    Reader r{n, "navigation", {"potential", "dribble"}};
    bind_guide_scalars(c.guide, r);
    r.finish();
    read(n.at("potential"), "navigation.potential", c.guide.potential);
    read(n.at("dribble"), "navigation.dribble", c.guide.dribble);
  }
  read(doc.at("localizer"), "localizer", c.localizer);
  c.localizer.scan_radii = c.sensors.scan.radii;
  c.behavior = parse_behavior_config(doc.at("behavior"));
  {
    const json& d = doc.at("des");
    Reader r{d, "des", {"model"}};
    r("tol", c.des.tol);
    r("episodes", c.des.episodes);
    r("horizon", c.des.horizon);
    r.finish();
    c.des.model = d.at("model");
  }

  // Validation, all before any simulation work.
  if (c.dt <= 0.0 || c.duration <= 0.0) throw ConfigError("dt and duration must be positive");
  for (int n : c.team_sizes)
    if (n < 0 || n > 8) throw ConfigError("team sizes must be within 0..8");
  if (c.team_sizes[0] < 1) throw ConfigError("team 0 needs at least one robot");
  if (c.vision_period < 1 || c.localization_period < 1 || c.step_period < 1)
    throw ConfigError("periods must be >= 1 tick");
  for (const auto& d : c.deaths)
    if (d.team < 0 || d.team > 1 || d.robot < 0 || d.robot >= c.team_sizes[d.team] || d.time < 0.0)
      throw ConfigError("death event names a robot that does not exist");
  if (c.channel.latency < 0.0 || c.channel.jitter < 0.0 || c.channel.loss < 0.0 || c.channel.loss > 1.0)
    throw ConfigError("channel: latency/jitter must be >= 0 and loss in [0, 1]");
  if (c.sensors.scan.clutter_fraction < 0.0 || c.sensors.scan.clutter_fraction >= 1.0)
    throw ConfigError("sensors.scan.clutter_fraction must be in [0, 1)");
  if (c.des.tol <= 0.0 || c.des.episodes < 1) throw ConfigError("des: tol and episodes must be positive");
  if (c.localizer.top_q < 1 || c.localizer.peak_threshold < 0.0 || c.localizer.peak_threshold > 1.0)
    throw ConfigError("localizer: top_q must be >= 1 and peak_threshold in [0, 1]");
  validate(c.fusion);
  validate(c.guide.potential);
  make_field(c.field);
  for (const auto& id : c.behavior.captain_priority)
    if (id < 0 || id >= 8) throw ConfigError("behavior.captain_priority has an invalid id");

  c.resolved = doc;
  json hashed = doc;
  hashed.erase("log_path");
  hashed.erase("plot_dir");
  c.hash = hex64(fnv1a64(hashed.dump()));
  return c;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  return make_run_config(read_json_file(file), file.parent_path());
}

void set_dotted(json& doc, const std::string& dotted, const std::string& value) {
  json v;
  try {
    v = json::parse(value);
  } catch (const json::parse_error&) {
    v = value;
  }
  json* cur = &doc;
  std::stringstream ss(dotted);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError("empty key in --set");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!cur->is_object()) *cur = json::object();
    cur = &(*cur)[parts[i]];
  }
  if (!cur->is_object()) *cur = json::object();
  (*cur)[parts.back()] = v;
}

}  // namespace socsim
