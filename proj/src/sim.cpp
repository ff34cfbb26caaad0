#include "ecas/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace ecas::sim {

const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::TxEnd: return "tx-end";
        case EventKind::LossCheck: return "loss-check";
        case EventKind::TxStart: return "tx-start";
        case EventKind::MeasurementTick: return "measurement-tick";
        case EventKind::ReconfigDelivery: return "reconfig-delivery";
        case EventKind::RoundEnd: return "round-end";
    }
    return "?";
}

void RoundConfig::validate() const {
    if (rain_mm_h < 0.0 || rain_mm_h > 150.0) {
        throw std::invalid_argument("rain must be within the 0..150 mm/h sweep range");
    }
    if (duration_us < 0) throw std::invalid_argument("negative round duration");
    if (sensors.size() > 3) {
        throw std::invalid_argument("gateway has three channels, one per sensor");
    }
    radio.validate();
    channel_params.validate();
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        if (sensors[i].app_period_us <= 0) {
            throw std::invalid_argument("app period must be positive");
        }
        (void)phy::dr_profile(sensors[i].current_dr);
        if (i > 0 && sensors[i].sensor_id <= sensors[i - 1].sensor_id) {
            // tie-break order relies on index == ascending id order
            throw std::invalid_argument("sensors must be listed in ascending id order");
        }
    }
}

std::vector<control::LossEvent> detect_losses(const std::vector<ScheduledSend>& expected,
                                              const std::vector<ReceivedPacket>& received,
                                              SimTime grace_us) {
    std::set<std::pair<int, long>> got;
    for (const auto& r : received) got.insert({r.sensor_id, r.seq});
    std::vector<control::LossEvent> out;
    for (const auto& e : expected) {
        if (!got.count({e.sensor_id, e.seq})) {
            out.push_back(control::LossEvent{e.sensor_id, e.send_us, e.send_us + grace_us});
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.detected_us != b.detected_us) return a.detected_us < b.detected_us;
        if (a.sensor_id != b.sensor_id) return a.sensor_id < b.sensor_id;
        return a.expected_us < b.expected_us;
    });
    return out;
}

Engine::Engine(const RoundConfig& cfg, control::Policy& policy)
    : cfg_(cfg), policy_(policy) {
    cfg_.validate();
    sensors_ = cfg_.sensors;
    const auto n = sensors_.size();
    tx_scheduled_.assign(n, false);
    send_counter_.assign(n, 0);
    sent_.assign(n, 0);
    received_.assign(n, 0);

    for (std::size_t i = 0; i < n; ++i) {
        sensors_[i].current_dr =
            policy_.initial_dr(sensors_[i], cfg_.radio, cfg_.channel_params);
        push(0, EventKind::MeasurementTick, static_cast<int>(i));
    }
    push(cfg_.duration_us, EventKind::RoundEnd, -1);
}

void Engine::push(SimTime t, EventKind kind, int subject, int aux) {
    queue_.push(Queued{t, static_cast<int>(kind), subject, seq_counter_++, aux});
}

void Engine::schedule_tx(int sensor_idx, SimTime earliest) {
    // scheduling is monotone: an already-queued start always fires no later
    if (tx_scheduled_[sensor_idx]) return;
    if (earliest > cfg_.duration_us) return;
    tx_scheduled_[sensor_idx] = true;
    push(earliest, EventKind::TxStart, sensor_idx);
}

void Engine::handle_tx_start(int sensor_idx, SimTime t) {
    auto& s = sensors_[sensor_idx];
    tx_scheduled_[sensor_idx] = false;
    if (s.outbox_empty()) return;

    const sensor::Message msg = sensor::begin_transmission(s, t, cfg_.radio);
    const long seq = send_counter_[sensor_idx]++;
    const auto toa = phy::time_on_air_us(phy::dr_profile(s.current_dr), cfg_.radio);
    const bool ok = channel::link_margin(s.current_dr, s.distance_m, cfg_.rain_mm_h,
                                         cfg_.radio, cfg_.channel_params) >= 0.0;
    sent_[sensor_idx] += 1;
    if (ok) received_[sensor_idx] += 1;

    double rain_reading = std::nan("");
    if (auto it = msg.readings.find("rain"); it != msg.readings.end()) {
        rain_reading = it->second;
    }
    sends_.push_back(SendRecord{sensor_idx, seq, t, t + toa, ok, s.current_dr, rain_reading});
    const int send_idx = static_cast<int>(sends_.size()) - 1;

    schedule_log_.push_back(ScheduledSend{s.sensor_id, seq, t});
    if (ok) received_log_.push_back(ReceivedPacket{s.sensor_id, seq, t + toa});

    push(t + toa, EventKind::TxEnd, sensor_idx, send_idx);
    const SimTime deadline = t + s.app_period_us;  // grace: one app period
    if (deadline <= cfg_.duration_us) {
        push(deadline, EventKind::LossCheck, sensor_idx, send_idx);
    }
    if (!s.outbox_empty()) {
        schedule_tx(sensor_idx, sensor::next_tx_time(s, t));
    }
}

void Engine::deliver_command(const sensor::ReconfigCommand& cmd, SimTime t) {
    pending_cmds_.push_back(cmd);
    for (std::size_t i = 0; i < sensors_.size(); ++i) {
        if (sensors_[i].sensor_id == cmd.sensor_id) {
            push(t, EventKind::ReconfigDelivery, static_cast<int>(i),
                 static_cast<int>(pending_cmds_.size()) - 1);
            return;
        }
    }
}

std::optional<SimEvent> Engine::step() {
    while (!done_ && !queue_.empty()) {
        const Queued ev = queue_.top();
        queue_.pop();
        const auto kind = static_cast<EventKind>(ev.kind);
        const int subject_id = ev.subject >= 0 ? sensors_[ev.subject].sensor_id : -1;
        SimEvent out{ev.t, kind, subject_id, -1, -1};

        switch (kind) {
            case EventKind::RoundEnd: {
                done_ = true;
                break;
            }
            case EventKind::MeasurementTick: {
                auto& s = sensors_[ev.subject];
                sensor::Readings readings{{"rain", cfg_.rain_mm_h}};
                const auto actions = sensor::on_measurement(s, readings, ev.t, cfg_.radio);
                for (const auto& a : actions) schedule_tx(ev.subject, a.earliest_tx_us);
                if (ev.t + s.app_period_us <= cfg_.duration_us) {
                    push(ev.t + s.app_period_us, EventKind::MeasurementTick, ev.subject);
                }
                break;
            }
            case EventKind::TxStart: {
                const long before = sent_[ev.subject];
                handle_tx_start(ev.subject, ev.t);
                if (sent_[ev.subject] == before) continue;  // empty outbox, not an event
                const auto& rec = sends_.back();
                out.dr = rec.dr;
                out.received = rec.received ? 1 : 0;
                break;
            }
            case EventKind::TxEnd: {
                const auto& rec = sends_[ev.aux];
                out.dr = rec.dr;
                out.received = rec.received ? 1 : 0;
                if (rec.received && !std::isnan(rec.rain_reading)) {
                    auto cmd = policy_.on_delivery(sensors_[ev.subject], rec.rain_reading,
                                                   cfg_.radio, cfg_.channel_params);
                    if (cmd) deliver_command(*cmd, ev.t);
                }
                break;
            }
            case EventKind::LossCheck: {
                const auto& rec = sends_[ev.aux];
                if (rec.received) continue;  // expectation met, nothing observable
                control::LossEvent loss{sensors_[ev.subject].sensor_id, rec.start_us, ev.t};
                loss_log_.push_back(loss);
                auto cmd = policy_.on_loss(loss);
                if (cmd) deliver_command(*cmd, ev.t);
                out.dr = rec.dr;
                out.received = 0;
                break;
            }
            case EventKind::ReconfigDelivery: {
                auto& s = sensors_[ev.subject];
                const auto& cmd = pending_cmds_[ev.aux];
                if (!sensor::apply_reconfig(s, cmd)) {
                    rejected_reconfigs_ += 1;
                    continue;
                }
                out.dr = s.current_dr;
                break;
            }
        }
        if (cfg_.collect_trace) trace_.push_back(out);
        return out;
    }
    return std::nullopt;
}

RoundStats Engine::stats() const {
    RoundStats st;
    for (std::size_t i = 0; i < sensors_.size(); ++i) {
        RoundStats::PerSensor ps;
        ps.sensor_id = sensors_[i].sensor_id;
        ps.sent = sent_[i];
        ps.received = received_[i];
        ps.lost = sent_[i] - received_[i];
        ps.final_dr = sensors_[i].current_dr;
        st.sensors.push_back(ps);
        st.total_sent += ps.sent;
        st.total_received += ps.received;
        st.total_lost += ps.lost;
    }
    return st;
}

RoundStats run_round(const RoundConfig& cfg, control::Policy& policy) {
    Engine engine(cfg, policy);
    while (engine.step()) {
    }
    return engine.stats();
}

void write_trace_csv(const Engine& engine, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write trace file: " + path);
    f << "time_s,kind,sensor_id,dr,received\n";
    for (const auto& ev : engine.trace()) {
        f << static_cast<double>(ev.time_us) / kSecond << "," << event_kind_name(ev.kind)
          << "," << ev.subject << ",";
        if (ev.dr >= 0) f << ev.dr;
        f << ",";
        if (ev.received >= 0) f << ev.received;
        f << "\n";
    }
}

}  // namespace ecas::sim
