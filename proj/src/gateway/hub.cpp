#include "coreg/gateway/hub.hpp"

#include <algorithm>

namespace coreg::gateway {

LiveSession::LiveSession(std::unique_ptr<SessionEngine> engine, std::shared_ptr<pipeline::Pipeline> pipeline,
                         Options options)
    : engine_(std::move(engine)),
      pipeline_(std::move(pipeline)),
      options_(options),
      segmenter_(options.vad),
      t0_(std::chrono::steady_clock::now()) {
  if (!engine_) throw std::invalid_argument("LiveSession needs an engine");
  if (options_.time_scale <= 0) throw std::invalid_argument("time_scale must be positive");
  engine_->set_observer(this);
}

LiveSession::~LiveSession() {
  stop();
  engine_->set_observer(nullptr);
}

void LiveSession::set_publisher(Publisher publisher) {
  std::lock_guard lock(pub_mu_);
  publisher_ = std::move(publisher);
}

void LiveSession::start() {
  std::lock_guard lock(mu_);
  if (running_) return;
  running_ = true;
  t0_ = std::chrono::steady_clock::now();
  thread_ = std::thread([this] { loop(); });
}

void LiveSession::stop() {
  {
    std::lock_guard lock(mu_);
    if (!running_) return;
    running_ = false;
  }
  cv_.notify_all();
  pipeline_->cancel_current();
  if (thread_.joinable()) thread_.join();
}

SessionMs LiveSession::clock_now() const {
  const std::chrono::duration<double, std::milli> wall = std::chrono::steady_clock::now() - t0_;
  return static_cast<SessionMs>(wall.count() * options_.time_scale);
}

void LiveSession::submit(SessionInput in, Done done) {
  if (std::holds_alternative<input::Trigger>(in) || std::holds_alternative<input::End>(in)) {
    pipeline_->cancel_current();
  }
  {
    std::lock_guard lock(mu_);
    jobs_.push_back({std::move(in), {}, std::move(done)});
  }
  cv_.notify_all();
}

void LiveSession::submit_audio(std::vector<std::int16_t> pcm, Done done) {
  {
    std::lock_guard lock(mu_);
    jobs_.push_back({std::nullopt, std::move(pcm), std::move(done)});
  }
  cv_.notify_all();
}

nlohmann::json LiveSession::snapshot() const {
  std::lock_guard lock(state_mu_);
  return snapshot_;
}

nlohmann::json LiveSession::timer_snapshot() const {
  std::lock_guard lock(state_mu_);
  return timer_;
}

std::vector<SessionEvent> LiveSession::events() const {
  std::lock_guard lock(state_mu_);
  return events_;
}

void LiveSession::loop() {
  refresh_state(clock_now(), true);
  for (;;) {
    std::deque<Job> batch;
    {
      std::unique_lock lock(mu_);
      cv_.wait_for(lock, options_.tick, [this] { return !running_ || !jobs_.empty(); });
      if (!running_) return;
      batch.swap(jobs_);
    }
    for (auto& job : batch) {
      const SessionMs now = clock_now();
      HandleResult r;
      try {
        r = job.input ? engine_->handle(*job.input, now) : ingest_audio(std::move(job.pcm), now);
      } catch (const std::exception& e) {
        r = HandleResult::fail("internal", e.what());
      }
      if (job.done) job.done(r);
    }
    const SessionMs now = clock_now();
    engine_->advance_to(now);
    refresh_state(now, false);
  }
}

HandleResult LiveSession::ingest_audio(std::vector<std::int16_t> pcm, SessionMs now) {
  audio_carry_.insert(audio_carry_.end(), pcm.begin(), pcm.end());
  const std::size_t whole = audio_carry_.size() / vad::kFrameSamples * vad::kFrameSamples;
  std::vector<vad::SpeechSegment> found;
  for (std::size_t off = 0; off < whole; off += vad::kFrameSamples) {
    vad::AudioFrame frame(next_frame_++, std::span<const std::int16_t>(audio_carry_.data() + off, vad::kFrameSamples));
    if (auto seg = segmenter_.push(frame)) found.push_back(std::move(*seg));
  }
  audio_carry_.erase(audio_carry_.begin(), audio_carry_.begin() + static_cast<std::ptrdiff_t>(whole));
  for (auto& seg : found) {
    const SessionMs length = seg.end_ms - seg.start_ms;
    seg.end_ms = now;
    seg.start_ms = now - length;
    engine_->handle(input::Speech{std::move(seg), std::nullopt}, now);
  }
  return {};
}

void LiveSession::publish(const Message& m, std::optional<ParticipantRole> to) {
  std::lock_guard lock(pub_mu_);
  if (publisher_) publisher_(m, to);
}

void LiveSession::refresh_state(SessionMs now, bool force) {
  auto state = engine_->snapshot();
  auto timer = state.at("timer");
  bool changed = false;
  bool timer_due = false;
  {
    std::lock_guard lock(state_mu_);
    changed = force || published_events_ != events_.size();
    published_events_ = events_.size();
    timer_due = changed || last_timer_push_ < 0 || now - last_timer_push_ >= options_.timer_push_ms;
    if (timer_due) last_timer_push_ = now;
    snapshot_ = state;
    timer_ = timer;
  }
  if (changed) publish(msg::StateUpdate{std::move(state)}, ParticipantRole::Operator);
  if (timer_due) publish(msg::TimerUpdate{std::move(timer)}, ParticipantRole::Operator);
}

void LiveSession::on_event(const SessionEvent& ev) {
  std::lock_guard lock(state_mu_);
  events_.push_back(ev);
}

void LiveSession::on_behavior(std::span<const behavior::ActuatorCommand> commands) {
  msg::BehaviorCommandBatch batch{engine_->behavior_script(), engine_->behavior_phase(),
                                  {commands.begin(), commands.end()}};
  publish(batch, ParticipantRole::Robot);
}

void LiveSession::on_audio(const pipeline::AudioChunk& chunk) {
  publish(msg::AudioChunk{chunk.idx, chunk.pcm}, ParticipantRole::Robot);
}

void LiveSession::on_transcript(const TranscriptEntry& entry) {
  publish(msg::TranscriptUpdate{entry}, ParticipantRole::Operator);
}

Hub::Hub(LiveSession& live) : live_(live) {
  live_.set_publisher([this](const Message& m, std::optional<ParticipantRole> to) { publish(m, to); });
}

Hub::~Hub() { live_.set_publisher({}); }

ConnectionId Hub::attach(std::shared_ptr<Outbox> out) {
  std::lock_guard lock(mu_);
  const auto id = next_id_++;
  conns_[id].out = std::move(out);
  return id;
}

void Hub::detach(ConnectionId id) {
  std::lock_guard lock(mu_);
  conns_.erase(id);
}

void Hub::clear() {
  std::lock_guard lock(mu_);
  conns_.clear();
}

std::size_t Hub::connection_count() const {
  std::lock_guard lock(mu_);
  return conns_.size();
}

void Hub::send_locked(Conn& c, Message m) {
  if (c.closed) return;
  Envelope env;
  env.seq = ++c.out_seq;
  env.ts = live_.clock_now();
  env.message = std::move(m);
  c.out->send(encode(env));
}

void Hub::reply(ConnectionId id, Message m) {
  std::lock_guard lock(mu_);
  auto it = conns_.find(id);
  if (it != conns_.end()) send_locked(it->second, std::move(m));
}

void Hub::publish(const Message& m, std::optional<ParticipantRole> to) {
  std::lock_guard lock(mu_);
  for (auto& [id, c] : conns_) {
    if (!c.role || (to && *c.role != *to)) continue;
    send_locked(c, m);
  }
}

void Hub::on_frame(ConnectionId id, std::string_view text) {
  Envelope env;
  try {
    env = decode(text);
  } catch (const DecodeError& e) {
    reply(id, msg::Error{e.code(), e.what()});
    return;
  }

  ParticipantRole role;
  {
    std::lock_guard lock(mu_);
    auto it = conns_.find(id);
    if (it == conns_.end() || it->second.closed) return;
    auto& c = it->second;
    if (!c.role) {
      const auto* hello = std::get_if<msg::Hello>(&env.message);
      if (!hello) {
        send_locked(c, msg::Error{"no_hello", "first message must be hello"});
        c.closed = true;
        c.out->close();
        return;
      }
      if (!valid_client_role(hello->role)) {
        send_locked(c, msg::Error{"forbidden", "role " + std::string(to_string(hello->role)) + " cannot connect"});
        return;
      }
    }
    if (env.seq != c.in_seq + 1) {
      send_locked(c, msg::Error{"bad_seq", "expected seq " + std::to_string(c.in_seq + 1) + ", got " +
                                               std::to_string(env.seq)});
      return;
    }
    c.in_seq = env.seq;
    if (!c.role) {
      c.role = std::get<msg::Hello>(env.message).role;
      send_locked(c, msg::Ack{env.seq, {}});
      if (*c.role == ParticipantRole::Operator) {
        send_locked(c, msg::StateUpdate{live_.snapshot()});
        send_locked(c, msg::TimerUpdate{live_.timer_snapshot()});
      }
      return;
    }
    role = *c.role;
    if (env.kind() == MessageKind::Hello) {
      send_locked(c, msg::Error{"duplicate_hello", "hello already received"});
      return;
    }
    if (!authorize(role, env.kind())) {
      send_locked(c, msg::Error{"forbidden", std::string(to_string(role)) + " may not send " +
                                                 std::string(type_name(env.kind()))});
      return;
    }
  }
  dispatch(id, role, env);
}

void Hub::dispatch(ConnectionId id, ParticipantRole, const Envelope& env) {
  const auto seq = env.seq;
  auto done = [this, id, seq](const HandleResult& r) {
    if (r.ok) reply(id, msg::Ack{seq, r.warning});
    else reply(id, msg::Error{r.error_code, r.detail});
  };
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, msg::Ack>) {
        } else if constexpr (std::is_same_v<T, msg::InterventionCommand>) {
          switch (m.action) {
            case msg::InterventionCommand::Action::Trigger: live_.submit(input::Trigger{*m.command}, done); break;
            case msg::InterventionCommand::Action::End: live_.submit(input::End{}, done); break;
            case msg::InterventionCommand::Action::ReassignAddressee:
              live_.submit(input::Reassign{m.phase_index}, done);
              break;
          }
        } else if constexpr (std::is_same_v<T, msg::PhaseCommand>) {
          live_.submit(input::Advance{}, done);
        } else if constexpr (std::is_same_v<T, msg::AnnotateSpeaker>) {
          live_.submit(input::Annotate{m.entry_id, m.role}, done);
        } else if constexpr (std::is_same_v<T, msg::SensorEventMsg>) {
          live_.submit(input::Sensor{m.event}, done);
        } else if constexpr (std::is_same_v<T, msg::SpeakDone>) {
          live_.submit(input::SpeakDone{}, done);
        } else if constexpr (std::is_same_v<T, msg::AudioChunk>) {
          live_.submit_audio(m.pcm, done);
        } else {
          reply(id, msg::Error{"forbidden", "server-only message kind"});
        }
      },
      env.message);
}

}  // namespace coreg::gateway
