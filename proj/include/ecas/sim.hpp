#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "ecas/channel.hpp"
#include "ecas/control.hpp"
#include "ecas/sensor.hpp"

// Deterministic discrete-event engine: one round at a fixed rain rate.
// Reception is a pure link-margin threshold (dedicated channel per sensor,
// no collisions); the gateway detects losses one grace interval after each
// scheduled send and feeds the policy hooks.
namespace ecas::sim {

using SimTime = std::int64_t;  // microseconds

inline constexpr SimTime kSecond = 1'000'000;

// Processing priority at equal timestamps follows the declaration order of
// the five public kinds (tx-end, tx-start, measurement-tick,
// reconfig-delivery, round-end); the internal loss-check slots right after
// tx-end so an arrival at its own deadline counts as received.
enum class EventKind : int {
    TxEnd = 0,
    LossCheck = 1,
    TxStart = 2,
    MeasurementTick = 3,
    ReconfigDelivery = 4,
    RoundEnd = 5,
};

const char* event_kind_name(EventKind k);

struct SimEvent {
    SimTime time_us;
    EventKind kind;
    int subject;            // sensor id, or -1 for the round
    int dr = -1;            // DR involved, when meaningful
    int received = -1;      // 1/0 for tx events, -1 otherwise
};

struct RoundConfig {
    double rain_mm_h = 0.0;
    SimTime duration_us = 86'400 * kSecond;
    std::vector<sensor::SensorState> sensors;  // one dedicated channel each
    phy::RadioConfig radio;
    channel::ChannelParams channel_params;
    double gateway_height_m = 15.0;  // recorded for fidelity; absorbed in pl0
    double sensor_height_m = 1.7;
    bool collect_trace = false;

    void validate() const;  // rain in [0,150], at most 3 sensors, duration >= 0
};

struct RoundStats {
    struct PerSensor {
        int sensor_id = 0;
        long sent = 0;
        long received = 0;
        long lost = 0;
        int final_dr = 0;
    };
    std::vector<PerSensor> sensors;
    long total_sent = 0;
    long total_received = 0;
    long total_lost = 0;

    double pdr() const { return total_sent == 0 ? 0.0 : double(total_received) / total_sent; }
};

// gateway-side expectation: every scheduled send must arrive within grace
struct ScheduledSend {
    int sensor_id;
    long seq;               // per-sensor send counter
    SimTime send_us;
};
struct ReceivedPacket {
    int sensor_id;
    long seq;
    SimTime arrival_us;
};

// Pure detector, independent of the engine path: one loss event per
// expected-but-missing packet, timestamped expected + grace. Output ordered
// by (detected time, sensor id, seq).
std::vector<control::LossEvent> detect_losses(const std::vector<ScheduledSend>& expected,
                                              const std::vector<ReceivedPacket>& received,
                                              SimTime grace_us);

class Engine {
  public:
    Engine(const RoundConfig& cfg, control::Policy& policy);

    // processes the earliest event; nullopt once the round has ended
    std::optional<SimEvent> step();

    bool done() const { return done_; }
    RoundStats stats() const;

    const std::vector<SimEvent>& trace() const { return trace_; }
    const std::vector<ScheduledSend>& schedule_log() const { return schedule_log_; }
    const std::vector<ReceivedPacket>& received_log() const { return received_log_; }
    const std::vector<control::LossEvent>& loss_log() const { return loss_log_; }
    int rejected_reconfigs() const { return rejected_reconfigs_; }

  private:
    struct Queued {
        SimTime t;
        int kind;
        int subject;
        std::uint64_t seq;
        int aux;
        bool operator>(const Queued& o) const {
            if (t != o.t) return t > o.t;
            if (kind != o.kind) return kind > o.kind;
            if (subject != o.subject) return subject > o.subject;
            return seq > o.seq;
        }
    };
    struct SendRecord {
        int sensor_idx;
        long seq;
        SimTime start_us;
        SimTime end_us;
        bool received;
        int dr;
        double rain_reading;  // nan if the message carried no rain metric
    };

    void push(SimTime t, EventKind kind, int subject, int aux = 0);
    void schedule_tx(int sensor_idx, SimTime earliest);
    void handle_tx_start(int sensor_idx, SimTime t);
    void deliver_command(const sensor::ReconfigCommand& cmd, SimTime t);

    RoundConfig cfg_;
    control::Policy& policy_;
    std::priority_queue<Queued, std::vector<Queued>, std::greater<Queued>> queue_;
    std::uint64_t seq_counter_ = 0;
    bool done_ = false;

    std::vector<sensor::SensorState> sensors_;
    std::vector<bool> tx_scheduled_;
    std::vector<long> send_counter_;
    std::vector<long> sent_, received_;
    std::vector<SendRecord> sends_;
    std::vector<sensor::ReconfigCommand> pending_cmds_;

    std::vector<SimEvent> trace_;
    std::vector<ScheduledSend> schedule_log_;
    std::vector<ReceivedPacket> received_log_;
    std::vector<control::LossEvent> loss_log_;
    int rejected_reconfigs_ = 0;
};

// Runs a full round; policy state carries in and out through `policy`.
RoundStats run_round(const RoundConfig& cfg, control::Policy& policy);

// Event-trace CSV (documented columns) for a finished engine.
void write_trace_csv(const Engine& engine, const std::string& path);

}  // namespace ecas::sim
