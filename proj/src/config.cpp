#include "fic_teleop/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace fic_teleop {

using nlohmann::json;
using Eigen::Vector2d;
using Eigen::VectorXd;

std::string to_string(ControllerKind kind) { return kind == ControllerKind::kFic ? "fic" : "ic"; }

ControllerKind controller_kind_from_string(const std::string& name) {
  if (name == "fic") return ControllerKind::kFic;
  if (name == "ic") return ControllerKind::kIc;
  throw ConfigError("unknown controller '" + name + "' (expected fic or ic)");
}

std::string to_string(Stream s) {
  switch (s) {
    case Stream::kForceFeedback: return "f_fb";
    case Stream::kVirtualForce: return "f_v";
    case Stream::kDesiredPose: return "x_d";
  }
  return "f_fb";
}

Stream stream_from_string(const std::string& name) {
  for (auto s : {Stream::kForceFeedback, Stream::kVirtualForce, Stream::kDesiredPose}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown stream '" + name + "' (expected f_fb, f_v or x_d)");
}

ChannelConfig& StreamChannels::get(Stream s) {
  switch (s) {
    case Stream::kForceFeedback: return f_fb;
    case Stream::kVirtualForce: return f_v;
    case Stream::kDesiredPose: return x_d;
  }
  return f_fb;
}

const ChannelConfig& StreamChannels::get(Stream s) const {
  return const_cast<StreamChannels*>(this)->get(s);
}

StreamChannels StreamChannels::uniform(double delay, double sample_rate, double base_tick) {
  const ChannelConfig c{delay, sample_rate, base_tick};
  return StreamChannels{c, c, c};
}

void SimConfig::validate() const {
  try {
    if (!(dt > 0.0) || dt > 1e-2) throw ConfigError("dt must be in (0, 0.01] s");
    if (!(duration > 0.0)) throw ConfigError("duration must be positive");
    if (log_every < 1) throw ConfigError("log_every must be >= 1");
    if (!(stop_after_done >= 0.0)) throw ConfigError("stop_after_done must be >= 0");
    model.validate();
    if (initial_q.size() != model.dof()) throw ConfigError("initial_q size must match the joint count");
    const auto& rp = replica.params;
    if (static_cast<int>(rp.fic.size()) != model.task_dim()) {
      throw ConfigError("replica.fic needs one entry per task axis");
    }
    if (rp.q_ref.size() != 0 && rp.q_ref.size() != model.dof()) {
      throw ConfigError("replica.q_ref size must match the joint count");
    }
    if (rp.k_c < 0.0 || rp.k_null < 0.0 || rp.d_null < 0.0 || replica.ic_damping_factor <= 0.0) {
      throw ConfigError("replica gains must be non-negative");
    }
    for (const auto& p : rp.fic) (void)calibrate(p.w_max, p.x_b, p.k_0, p.d);
    if (master.fic.size() != 2) throw ConfigError("master.fic needs two axes");
    for (const auto& p : master.fic) (void)calibrate(p.w_max, p.x_b, p.k_0, p.d);
    if (!(master.mass > 0.0)) throw ConfigError("master mass must be positive");
    if (master.k_a < 0.0 || master.hand_stiffness < 0.0 || master.hand_damping < 0.0 ||
        master.rate_gain < 0.0) {
      throw ConfigError("master gains must be non-negative");
    }
    for (auto s : {Stream::kForceFeedback, Stream::kVirtualForce, Stream::kDesiredPose}) {
      channels.get(s).validate();
    }
    for (std::size_t i = 0; i < channel_events.size(); ++i) {
      channel_events[i].config.validate();
      if (i > 0 && channel_events[i].tick < channel_events[i - 1].tick) {
        throw ConfigError("channel events must be ordered by tick");
      }
    }
    for (const auto& obj : objects) obj.validate();
    if (scenario.kind == ScriptKind::kObjectTouch &&
        (scenario.object < 0 || scenario.object >= 5)) {
      throw ConfigError("scenario.object must index the 5-object catalog");
    }
    (void)profile_from_name(scenario.profile);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

SimConfig default_config() {
  SimConfig cfg;
  cfg.model = planar_3link();
  cfg.initial_q.resize(cfg.model.dof());
  for (int i = 0; i < cfg.model.dof(); ++i) {
    const auto& lim = cfg.model.limits[static_cast<std::size_t>(i)];
    cfg.initial_q[i] = 0.5 * (lim.lower + lim.upper);
  }
  cfg.channels = StreamChannels::uniform(0.0, 1000.0, cfg.dt);
  auto& rp = cfg.replica.params;
  rp.fic = {calibrate(20.0, 0.05, 300.0, 2.0), calibrate(20.0, 0.05, 300.0, 2.0)};
  rp.k_c = 200.0;
  rp.k_null = 10.0;
  rp.d_null = 2.0;
  rp.q_ref = cfg.initial_q;
  cfg.master.fic = {calibrate(4.0, 0.01, 200.0, 10.0), calibrate(4.0, 0.01, 200.0, 10.0)};
  return cfg;
}

SimConfig button_task_config(const std::string& profile) {
  SimConfig cfg = default_config();
  cfg.duration = 240.0;
  cfg.scenario.kind = ScriptKind::kButtonPress;
  cfg.scenario.profile = profile;
  return cfg;
}

SimConfig impulse_config(std::uint64_t seed) {
  SimConfig cfg = default_config();
  cfg.scenario.kind = ScriptKind::kImpulses;
  cfg.scenario.seed = seed;
  cfg.duration = 1.0 + kImpulseSpacing * kImpulseCount;
  return cfg;
}

std::vector<ContactObject> scenario_objects(const SimConfig& cfg) {
  if (!cfg.objects.empty()) return cfg.objects;
  switch (cfg.scenario.kind) {
    case ScriptKind::kButtonPress:
      return button_panel(cfg.scenario.button_top);
    case ScriptKind::kObjectTouch:
      return {object_catalog().at(static_cast<std::size_t>(cfg.scenario.object))};
    default:
      return {};
  }
}

OperatorScript build_script(const SimConfig& cfg) {
  const VectorXd pose = forward_kinematics(cfg.model, cfg.initial_q);
  const Vector2d start = pose.head<2>();
  OperatorScript script;
  switch (cfg.scenario.kind) {
    case ScriptKind::kIdle:
      break;
    case ScriptKind::kImpulses:
      script = impulse_protocol(cfg.scenario.seed);
      break;
    case ScriptKind::kObjectTouch:
      script = object_touch_protocol(scenario_objects(cfg).front(), start);
      break;
    case ScriptKind::kButtonPress: {
      std::vector<Vector2d> tops;
      for (const auto& obj : scenario_objects(cfg)) {
        if (obj.is_button) {
          tops.emplace_back(0.5 * (obj.box_min.x() + obj.box_max.x()), obj.box_max.y());
        }
      }
      script = button_press_protocol(tops, start, profile_from_name(cfg.scenario.profile));
      break;
    }
    case ScriptKind::kRecorded:
      script.kind = ScriptKind::kRecorded;
      script.recorded = cfg.scenario.recorded;
      break;
  }
  script.validate();
  return script;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json vec_json(const Eigen::Ref<const VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

VectorXd vec_from(const json& j) {
  if (!j.is_array()) throw ConfigError("expected a numeric array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Vector2d vec2_from(const json& j) {
  const VectorXd v = vec_from(j);
  if (v.size() != 2) throw ConfigError("expected a 2-element array");
  return v;
}

double bound_from(const json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

json bound_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json fic_json(const std::vector<FicParams>& ps) {
  json a = json::array();
  for (const auto& p : ps) a.push_back({{"w_max", p.w_max}, {"x_b", p.x_b}, {"k_0", p.k_0}, {"d", p.d}});
  return a;
}

std::vector<FicParams> fic_from(const json& j) {
  std::vector<FicParams> out;
  for (const auto& e : j) {
    out.push_back(calibrate(e.at("w_max").get<double>(), e.at("x_b").get<double>(),
                            e.at("k_0").get<double>(), e.at("d").get<double>()));
  }
  return out;
}

json model_json(const ManipulatorModel& m) {
  json links = json::array();
  for (const auto& l : m.links) {
    links.push_back({{"length", l.length}, {"mass", l.mass}, {"com", l.com}, {"inertia", l.inertia}});
  }
  json limits = json::array();
  for (const auto& lim : m.limits) limits.push_back({bound_json(lim.lower), bound_json(lim.upper)});
  return {{"links", links},
          {"limits", limits},
          {"gravity", vec_json(m.gravity)},
          {"orientation_axis", m.orientation_axis},
          {"torque_limit", bound_json(m.torque_limit)}};
}

ManipulatorModel model_from(const json& j) {
  ManipulatorModel m;
  m.limits.clear();
  for (const auto& l : j.at("links")) {
    Link link;
    link.length = l.at("length").get<double>();
    link.mass = l.at("mass").get<double>();
    link.com = l.value("com", link.length);
    link.inertia = l.value("inertia", link.mass * link.com * link.com);
    m.links.push_back(link);
  }
  if (j.contains("limits")) {
    for (const auto& lim : j.at("limits")) {
      m.limits.push_back({bound_from(lim.at(0), -std::numeric_limits<double>::infinity()),
                          bound_from(lim.at(1), std::numeric_limits<double>::infinity())});
    }
  }
  if (j.contains("gravity")) m.gravity = vec2_from(j.at("gravity"));
  m.orientation_axis = j.value("orientation_axis", false);
  if (j.contains("torque_limit")) {
    m.torque_limit = bound_from(j.at("torque_limit"), std::numeric_limits<double>::infinity());
  }
  return m;
}

std::string kind_name(SurfaceKind k) { return k == SurfaceKind::kBox ? "box" : "half_plane"; }

json object_json(const ContactObject& o) {
  json j = {{"id", o.id},
            {"kind", kind_name(o.kind)},
            {"stiffness", o.stiffness},
            {"damping", o.damping},
            {"is_button", o.is_button},
            {"activation_force", o.activation_force},
            {"activation_travel", o.activation_travel}};
  if (o.kind == SurfaceKind::kBox) {
    j["box_min"] = vec_json(o.box_min);
    j["box_max"] = vec_json(o.box_max);
  } else {
    j["point"] = vec_json(o.point);
    j["normal"] = vec_json(o.normal);
  }
  return j;
}

ContactObject object_from(const json& j) {
  ContactObject o;
  o.id = j.at("id").get<std::string>();
  const std::string kind = j.value("kind", std::string("half_plane"));
  if (kind == "box") {
    o.kind = SurfaceKind::kBox;
    o.box_min = vec2_from(j.at("box_min"));
    o.box_max = vec2_from(j.at("box_max"));
  } else if (kind == "half_plane") {
    o.kind = SurfaceKind::kHalfPlane;
    o.point = vec2_from(j.at("point"));
    o.normal = vec2_from(j.at("normal"));
  } else {
    throw ConfigError("object kind must be box or half_plane");
  }
  o.stiffness = j.at("stiffness").get<double>();
  o.damping = j.value("damping", 0.0);
  o.is_button = j.value("is_button", false);
  o.activation_force = j.value("activation_force", 0.0);
  o.activation_travel = j.value("activation_travel", 0.0);
  return o;
}

}  // namespace

json to_json(const ChannelConfig& c) { return {{"delay", c.delay}, {"sample_rate", c.sample_rate}}; }

ChannelConfig channel_config_from_json(const json& j, double base_tick) {
  ChannelConfig c;
  c.delay = j.value("delay", 0.0);
  c.sample_rate = j.value("sample_rate", 1000.0);
  c.base_tick = base_tick;
  c.validate();
  return c;
}

json to_json(const OperatorOutput& out) {
  json j = {{"master_err", vec_json(out.master_err)},
            {"master_held", out.master_held},
            {"gripper_held", out.gripper_held},
            {"pose_nudge", vec_json(out.pose_nudge)},
            {"external_impulse", vec_json(out.external_impulse)}};
  j["pose_target"] = out.pose_target ? vec_json(*out.pose_target) : json(nullptr);
  return j;
}

OperatorOutput operator_output_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("command payload must be an object");
  OperatorOutput out;
  if (j.contains("master_err")) out.master_err = clamp_to_workspace(vec2_from(j.at("master_err")));
  out.master_held = j.value("master_held", false);
  out.gripper_held = j.value("gripper_held", false);
  if (j.contains("pose_target") && !j.at("pose_target").is_null()) {
    out.pose_target = vec2_from(j.at("pose_target"));
  }
  if (j.contains("pose_nudge")) out.pose_nudge = vec2_from(j.at("pose_nudge"));
  if (j.contains("external_impulse")) out.external_impulse = vec2_from(j.at("external_impulse"));
  if (!out.master_err.allFinite() || !out.pose_nudge.allFinite() ||
      !out.external_impulse.allFinite() || (out.pose_target && !out.pose_target->allFinite())) {
    throw ConfigError("command values must be finite");
  }
  return out;
}

json to_json(const SimConfig& cfg) {
  json channels = {{"f_fb", to_json(cfg.channels.f_fb)},
                   {"f_v", to_json(cfg.channels.f_v)},
                   {"x_d", to_json(cfg.channels.x_d)}};
  json events = json::array();
  for (const auto& e : cfg.channel_events) {
    json je = to_json(e.config);
    je["tick"] = e.tick;
    je["stream"] = to_string(e.stream);
    events.push_back(je);
  }
  const auto& rp = cfg.replica.params;
  json replica = {{"fic", fic_json(rp.fic)},
                  {"k_c", rp.k_c},
                  {"k_null", rp.k_null},
                  {"d_null", rp.d_null},
                  {"q_ref", vec_json(rp.q_ref)},
                  {"ic_damping_factor", cfg.replica.ic_damping_factor}};
  json master = {{"mass", cfg.master.mass},
                 {"fic", fic_json(cfg.master.fic)},
                 {"k_a", cfg.master.k_a},
                 {"hand_stiffness", cfg.master.hand_stiffness},
                 {"hand_damping", cfg.master.hand_damping},
                 {"rate_gain", cfg.master.rate_gain}};
  json recorded = json::array();
  for (const auto& r : cfg.scenario.recorded) {
    recorded.push_back({{"tick", r.tick}, {"command", to_json(r.command)}});
  }
  json scenario = {{"kind", to_string(cfg.scenario.kind)},
                   {"seed", cfg.scenario.seed},
                   {"profile", cfg.scenario.profile},
                   {"object", cfg.scenario.object},
                   {"button_top", vec_json(cfg.scenario.button_top)},
                   {"recorded", recorded}};
  json objects = json::array();
  for (const auto& o : cfg.objects) objects.push_back(object_json(o));
  return {{"dt", cfg.dt},
          {"duration", cfg.duration},
          {"controller", to_string(cfg.controller)},
          {"seed", cfg.seed},
          {"log_every", cfg.log_every},
          {"stop_after_done", cfg.stop_after_done},
          {"channels", channels},
          {"channel_events", events},
          {"model", model_json(cfg.model)},
          {"initial_q", vec_json(cfg.initial_q)},
          {"replica", replica},
          {"master", master},
          {"scenario", scenario},
          {"objects", objects}};
}

SimConfig config_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    SimConfig cfg = default_config();
    cfg.dt = j.value("dt", cfg.dt);
    cfg.duration = j.value("duration", cfg.duration);
    if (j.contains("controller")) {
      cfg.controller = controller_kind_from_string(j.at("controller").get<std::string>());
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.log_every = j.value("log_every", cfg.log_every);
    cfg.stop_after_done = j.value("stop_after_done", cfg.stop_after_done);

    cfg.channels = StreamChannels::uniform(0.0, 1000.0, cfg.dt);
    if (j.contains("channels")) {
      const json& c = j.at("channels");
      for (auto s : {Stream::kForceFeedback, Stream::kVirtualForce, Stream::kDesiredPose}) {
        if (c.contains(to_string(s))) {
          cfg.channels.get(s) = channel_config_from_json(c.at(to_string(s)), cfg.dt);
        }
      }
    }
    if (j.contains("channel_events")) {
      for (const auto& e : j.at("channel_events")) {
        cfg.channel_events.push_back(ChannelEvent{e.at("tick").get<std::int64_t>(),
                                                  stream_from_string(e.at("stream").get<std::string>()),
                                                  channel_config_from_json(e, cfg.dt)});
      }
    }
    const bool model_given = j.contains("model");
    if (model_given) {
      cfg.model = model_from(j.at("model"));
      cfg.initial_q = VectorXd::Zero(cfg.model.dof());
      for (std::size_t i = 0; i < cfg.model.limits.size(); ++i) {
        const auto& lim = cfg.model.limits[i];
        if (std::isfinite(lim.lower) && std::isfinite(lim.upper)) {
          cfg.initial_q[static_cast<Eigen::Index>(i)] = 0.5 * (lim.lower + lim.upper);
        }
      }
      cfg.replica.params.q_ref = cfg.initial_q;
      if (cfg.model.task_dim() != static_cast<int>(cfg.replica.params.fic.size())) {
        cfg.replica.params.fic.resize(static_cast<std::size_t>(cfg.model.task_dim()),
                                      cfg.replica.params.fic.front());
      }
    }
    if (j.contains("initial_q")) {
      cfg.initial_q = vec_from(j.at("initial_q"));
      if (!j.contains("replica") || !j.at("replica").contains("q_ref")) {
        cfg.replica.params.q_ref = cfg.initial_q;
      }
    }
    if (j.contains("replica")) {
      const json& r = j.at("replica");
      auto& rp = cfg.replica.params;
      if (r.contains("fic")) rp.fic = fic_from(r.at("fic"));
      rp.k_c = r.value("k_c", rp.k_c);
      rp.k_null = r.value("k_null", rp.k_null);
      rp.d_null = r.value("d_null", rp.d_null);
      if (r.contains("q_ref")) rp.q_ref = vec_from(r.at("q_ref"));
      cfg.replica.ic_damping_factor = r.value("ic_damping_factor", cfg.replica.ic_damping_factor);
    }
    if (j.contains("master")) {
      const json& m = j.at("master");
      cfg.master.mass = m.value("mass", cfg.master.mass);
      if (m.contains("fic")) cfg.master.fic = fic_from(m.at("fic"));
      cfg.master.k_a = m.value("k_a", cfg.master.k_a);
      cfg.master.hand_stiffness = m.value("hand_stiffness", cfg.master.hand_stiffness);
      cfg.master.hand_damping = m.value("hand_damping", cfg.master.hand_damping);
      cfg.master.rate_gain = m.value("rate_gain", cfg.master.rate_gain);
    }
    if (j.contains("scenario")) {
      const json& s = j.at("scenario");
      if (s.contains("kind")) cfg.scenario.kind = script_kind_from_string(s.at("kind").get<std::string>());
      cfg.scenario.seed = s.value("seed", cfg.scenario.seed);
      cfg.scenario.profile = s.value("profile", cfg.scenario.profile);
      cfg.scenario.object = s.value("object", cfg.scenario.object);
      if (s.contains("button_top")) cfg.scenario.button_top = vec2_from(s.at("button_top"));
      if (s.contains("recorded")) {
        for (const auto& r : s.at("recorded")) {
          cfg.scenario.recorded.push_back(
              RecordedCommand{r.at("tick").get<std::int64_t>(), operator_output_from_json(r.at("command"))});
        }
      }
    }
    if (j.contains("objects")) {
      for (const auto& o : j.at("objects")) cfg.objects.push_back(object_from(o));
    }
    cfg.validate();
    return cfg;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace fic_teleop
