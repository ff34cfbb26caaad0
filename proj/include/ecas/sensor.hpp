#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecas/phy.hpp"

// Field-node behavior: measurement classification, buffering and bulk
// flush, duty-cycle-aware transmit scheduling, reconfiguration handling.
namespace ecas::sensor {

using Readings = std::map<std::string, double>;   // metric -> value
using Thresholds = std::map<std::string, double>; // metric -> safe limit

enum class MessageKind { Periodic, Trigger };
enum class SensorKind { MS, FOMS };

struct Message {
    MessageKind kind;
    int sensor_id;
    std::int64_t timestamp_us;
    Readings readings;
    int payload_bytes;
};

struct ReconfigCommand {
    int sensor_id;
    std::optional<int> dr_index;
    std::optional<Thresholds> thresholds;
};

// Trigger iff any reading strictly exceeds its threshold; metrics without
// a threshold are exempt.
MessageKind classify(const Readings& readings, const Thresholds& thresholds);

struct SensorState {
    int sensor_id = 0;
    SensorKind kind = SensorKind::MS;
    double distance_m = 0.0;      // from gateway
    int zone_id = 0;
    int current_dr = 5;
    Thresholds thresholds;
    std::int64_t app_period_us = 60'000'000;

    // duty budget: earliest next transmit start allowed by the regulator
    std::int64_t duty_allowed_us = 0;
    bool ever_transmitted = false;

    // outbox: at most one pending periodic message (bulk-merged) plus
    // trigger messages, which go first
    std::vector<Message> trigger_queue;
    std::optional<Message> pending_periodic;
    Readings buffered;            // readings collected since the last flush

    bool outbox_empty() const {
        return trigger_queue.empty() && !pending_periodic.has_value();
    }
};

struct SendAction {
    MessageKind kind;
    std::int64_t earliest_tx_us;  // max(now, duty budget)
};

// One measurement at `now`: Trigger readings enqueue immediately; Periodic
// readings buffer and flush as one bulk message at the next periodic slot
// (so the very first tick only buffers). Returns the send actions that
// became ready.
std::vector<SendAction> on_measurement(SensorState& state, const Readings& readings,
                                       std::int64_t now_us, const phy::RadioConfig& cfg);

// Earliest transmit start >= now honoring the duty budget. Requires a
// non-empty outbox.
std::int64_t next_tx_time(const SensorState& state, std::int64_t now_us);

// Pops the head-of-line message (triggers first) and charges the duty
// budget for a transmission starting at tx_start at the current DR.
Message begin_transmission(SensorState& state, std::int64_t tx_start_us,
                           const phy::RadioConfig& cfg);

// Applies a validated reconfiguration; invalid DR leaves the state
// untouched and returns false. Duty budget is preserved.
bool apply_reconfig(SensorState& state, const ReconfigCommand& cmd);

}  // namespace ecas::sensor
