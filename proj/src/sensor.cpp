#include "ecas/sensor.hpp"

#include <stdexcept>

namespace ecas::sensor {

MessageKind classify(const Readings& readings, const Thresholds& thresholds) {
    for (const auto& [metric, value] : readings) {
        auto it = thresholds.find(metric);
        if (it != thresholds.end() && value > it->second) {
            return MessageKind::Trigger;
        }
    }
    return MessageKind::Periodic;
}

std::vector<SendAction> on_measurement(SensorState& state, const Readings& readings,
                                       std::int64_t now_us, const phy::RadioConfig& cfg) {
    std::vector<SendAction> actions;
    const MessageKind kind = classify(readings, state.thresholds);

    if (kind == MessageKind::Trigger) {
        state.trigger_queue.push_back(Message{MessageKind::Trigger, state.sensor_id, now_us,
                                              readings, cfg.payload_bytes});
        actions.push_back(SendAction{MessageKind::Trigger, next_tx_time(state, now_us)});
        return actions;
    }

    // bulk flush of everything collected before this slot
    if (!state.buffered.empty()) {
        if (state.pending_periodic) {
            for (const auto& [m, v] : state.buffered) state.pending_periodic->readings[m] = v;
            state.pending_periodic->timestamp_us = now_us;
        } else {
            state.pending_periodic = Message{MessageKind::Periodic, state.sensor_id, now_us,
                                             state.buffered, cfg.payload_bytes};
        }
        state.buffered.clear();
        actions.push_back(SendAction{MessageKind::Periodic, next_tx_time(state, now_us)});
    }
    for (const auto& [m, v] : readings) state.buffered[m] = v;
    return actions;
}

std::int64_t next_tx_time(const SensorState& state, std::int64_t now_us) {
    if (state.outbox_empty()) {
        throw std::logic_error("next_tx_time: empty outbox");
    }
    if (!state.ever_transmitted) return now_us;
    return std::max(now_us, state.duty_allowed_us);
}

Message begin_transmission(SensorState& state, std::int64_t tx_start_us,
                           const phy::RadioConfig& cfg) {
    Message msg;
    if (!state.trigger_queue.empty()) {
        msg = state.trigger_queue.front();
        state.trigger_queue.erase(state.trigger_queue.begin());
    } else if (state.pending_periodic) {
        msg = *state.pending_periodic;
        state.pending_periodic.reset();
    } else {
        throw std::logic_error("begin_transmission: empty outbox");
    }
    const auto toa_us = phy::time_on_air_us(phy::dr_profile(state.current_dr), cfg);
    const auto off_us =
        static_cast<std::int64_t>(static_cast<double>(toa_us) / cfg.duty_cycle_limit);
    state.duty_allowed_us = tx_start_us + off_us;
    state.ever_transmitted = true;
    return msg;
}

bool apply_reconfig(SensorState& state, const ReconfigCommand& cmd) {
    if (cmd.dr_index) {
        if (*cmd.dr_index < 0 || *cmd.dr_index >= phy::kNumDataRates) {
            return false;
        }
    }
    if (cmd.dr_index) state.current_dr = *cmd.dr_index;
    if (cmd.thresholds) state.thresholds = *cmd.thresholds;
    return true;
}

}  // namespace ecas::sensor
