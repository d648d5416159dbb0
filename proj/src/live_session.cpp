#include "fic_teleop/live_session.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>

namespace fic_teleop {

using nlohmann::json;

namespace {

json vec(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json channels_json(const Simulation& sim) {
  json c = json::object();
  for (auto s : {Stream::kForceFeedback, Stream::kVirtualForce, Stream::kDesiredPose}) {
    c[to_string(s)] = to_json(sim.channel(s));
  }
  return c;
}

}  // namespace

WireMessage parse_wire(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("message is not a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) throw ConfigError("message has no type");
  if (!j.contains("seq") || !j["seq"].is_number_integer()) throw ConfigError("message has no integer seq");
  WireMessage m;
  m.type = j["type"].get<std::string>();
  m.seq = j["seq"].get<std::int64_t>();
  if (j.contains("t")) {
    if (!j["t"].is_number()) throw ConfigError("message t must be a number");
    m.t = j["t"].get<double>();
  }
  m.payload = j.value("payload", json::object());
  return m;
}

std::string to_string(const WireMessage& msg) {
  return json{{"type", msg.type}, {"seq", msg.seq}, {"t", msg.t}, {"payload", msg.payload}}.dump();
}

LiveSession::LiveSession(SimConfig cfg, std::string session_id)
    : id_(std::move(session_id)), sim_(std::move(cfg)) {
  sim_.enable_recording();
  decimation_ = std::max<std::int64_t>(1, std::llround(1.0 / (kStateRate * sim_.config().dt)));
}

LiveSession::~LiveSession() { stop(); }

void LiveSession::set_publisher(Publisher p) {
  std::lock_guard lock(publish_mutex_);
  publisher_ = std::move(p);
}

std::optional<std::string> LiveSession::handle_message(const std::string& text) {
  WireMessage m;
  try {
    m = parse_wire(text);
  } catch (const ConfigError& e) {
    spdlog::warn("rejected message: {}", e.what());
    return std::string(e.what());
  }
  Pending p;
  try {
    if (m.type == "command") {
      p.command = operator_output_from_json(m.payload);
    } else if (m.type == "config") {
      if (!m.payload.is_object()) throw ConfigError("config payload must be an object");
      const std::string stream = m.payload.value("stream", "all");
      if (stream == "all") {
        p.streams = {Stream::kForceFeedback, Stream::kVirtualForce, Stream::kDesiredPose};
      } else {
        p.streams = {stream_from_string(stream)};
      }
      p.channel = channel_config_from_json(m.payload, sim_.config().dt);
    } else {
      spdlog::warn("ignoring message of unknown type '{}'", m.type);
      return std::nullopt;
    }
  } catch (const std::exception& e) {
    spdlog::warn("rejected {} message: {}", m.type, e.what());
    return std::string(e.what());
  }

  std::lock_guard lock(inbox_mutex_);
  if (m.seq <= last_in_seq_) {
    return "out-of-order seq " + std::to_string(m.seq) + " (last " + std::to_string(last_in_seq_) + ")";
  }
  last_in_seq_ = m.seq;
  inbox_.push_back(std::move(p));
  return std::nullopt;
}

void LiveSession::drain_inbox() {
  std::deque<Pending> batch;
  {
    std::lock_guard lock(inbox_mutex_);
    batch.swap(inbox_);
  }
  for (auto& p : batch) {
    if (p.command) {
      command_ = *p.command;
    } else {
      for (Stream s : p.streams) sim_.set_channel(s, p.channel);
      publish("event", {{"event", "channels"}, {"channels", channels_json(sim_)}}, sim_.time());
    }
  }
}

void LiveSession::step_once() {
  bool emit = false;
  json state;
  double t = 0.0;
  {
    std::lock_guard lock(sim_mutex_);
    drain_inbox();
    try {
      sim_.step(command_);
    } catch (const SimulationAbort& e) {
      running_ = false;
      publish("event", {{"event", "abort"}, {"message", e.what()}}, sim_.time());
      throw;
    }
    if (sim_.tick() % decimation_ == 0) {
      emit = true;
      state = state_payload();
      t = sim_.time();
    }
  }
  if (emit) publish("state", std::move(state), t);
}

void LiveSession::advance(std::int64_t ticks) {
  for (std::int64_t i = 0; i < ticks; ++i) step_once();
}

void LiveSession::start(double real_time_factor) {
  if (running_.exchange(true)) return;
  thread_ = std::thread([this, real_time_factor] {
    using clock = std::chrono::steady_clock;
    const auto wall0 = clock::now();
    const std::int64_t tick0 = tick();
    const double dt = sim_.config().dt;
    try {
      while (running_) {
        step_once();
        if (real_time_factor <= 0.0) continue;
        const double sim_elapsed = static_cast<double>(tick() - tick0) * dt;
        const auto due = wall0 + std::chrono::duration_cast<clock::duration>(
                                     std::chrono::duration<double>(sim_elapsed / real_time_factor));
        // Sleep only in coarse chunks; per-tick sleeps overshoot badly.
        if (due - clock::now() > std::chrono::milliseconds(2)) std::this_thread::sleep_until(due);
      }
    } catch (const std::exception& e) {
      spdlog::error("live session {} stopped: {}", id_, e.what());
      running_ = false;
    }
  });
}

void LiveSession::stop() {
  running_ = false;
  if (thread_.joinable()) thread_.join();
}

std::string LiveSession::hello() const {
  std::lock_guard lock(sim_mutex_);
  const SimConfig& cfg = sim_.config();
  json objects = to_json(cfg)["objects"];
  json links = json::array();
  for (const auto& l : cfg.model.links) links.push_back(l.length);
  WireMessage m{"event", 0, sim_.time(),
                {{"event", "hello"},
                 {"session", id_},
                 {"dt", cfg.dt},
                 {"controller", to_string(cfg.controller)},
                 {"links", links},
                 {"objects", objects},
                 {"channels", channels_json(sim_)},
                 {"state_rate", kStateRate}}};
  return to_string(m);
}

std::int64_t LiveSession::tick() const {
  std::lock_guard lock(sim_mutex_);
  return sim_.tick();
}

OperatorOutput LiveSession::latest_command() const {
  std::lock_guard lock(sim_mutex_);
  return command_;
}

ExperimentLog LiveSession::log() {
  std::lock_guard lock(sim_mutex_);
  sim_.end_at_current_tick();
  return sim_.log();
}

void LiveSession::publish(const std::string& type, json payload, double t) {
  std::lock_guard lock(publish_mutex_);
  if (!publisher_) return;
  WireMessage m{type, ++out_seq_, t, std::move(payload)};
  publisher_(to_string(m));
}

json LiveSession::state_payload() const {
  const SimConfig& cfg = sim_.config();
  const JointState& js = sim_.joints();
  json points = json::array();
  for (const auto& p : link_points(cfg.model, js.q)) points.push_back({p.x(), p.y()});
  const StepRecord& r = sim_.last();
  json buttons = json::array();
  for (const auto& b : sim_.buttons()) buttons.push_back(b.active);
  json phase = json::array();
  for (const auto& a : r.replica.states) phase.push_back(std::string(to_string(a.phase)));
  return {{"tick", sim_.tick()},
          {"t", sim_.time()},
          {"q", vec(js.q)},
          {"links", points},
          {"ee", vec(sim_.ee_pose())},
          {"x_desired", vec(r.x_desired)},
          {"x_desired_cmd", vec(sim_.x_desired_cmd())},
          {"master", {sim_.master().x.x(), sim_.master().x.y()}},
          {"f_fb", {sim_.observed().force.x(), sim_.observed().force.y()}},
          {"f_contact", {r.contact.x(), r.contact.y()}},
          {"f_v", vec(r.f_v_post)},
          {"phase", phase},
          {"buttons", buttons},
          {"command", to_json(r.command)},
          {"channels", channels_json(sim_)}};
}

}  // namespace fic_teleop
