#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ecas/channel.hpp"
#include "ecas/sensor.hpp"

// ECAS server decision logic: Fixed / Conservative / Aggressive data-rate
// policies, the Selective Bridge routing rule and the Intelligent Sync
// zone-relevance filter.
namespace ecas::control {

enum class PolicyKind { Fixed, Conservative, Aggressive };

struct LossEvent {
    int sensor_id;
    std::int64_t expected_us;  // scheduled send time of the missing packet
    std::int64_t detected_us;  // expected + grace
};

struct SensorPolicyView {
    int dr = 5;
    double last_observed_rain = 0.0;  // sweep starts dry; see README
    int pending_losses = 0;
};

struct PolicyState {
    PolicyKind kind = PolicyKind::Fixed;
    int fixed_dr = 5;
    int loss_trigger = 1;  // losses per DR decrement (Aggressive)
    std::map<int, SensorPolicyView> sensors;

    SensorPolicyView& view(int sensor_id);
    const SensorPolicyView& view(int sensor_id) const;  // throws on unknown id
};

// Highest DR whose link margin at observed_rain + 5 mm/h stays nonnegative;
// DR0 when none qualifies (keep transmitting at the most robust setting).
int conservative_select(const sensor::SensorState& s, double observed_rain,
                        const phy::RadioConfig& cfg, const channel::ChannelParams& params);

// One loss detection: decrement the sensor's DR by one (floor DR0) once the
// pending-loss count reaches the trigger. Throws for an unknown sensor.
std::optional<sensor::ReconfigCommand> aggressive_update(PolicyState& state,
                                                         const LossEvent& loss);

// --- Selective Bridge ---

enum class Destination { Local, External };

struct ContextRecord {
    int sensor_id;
    sensor::Readings readings;
    sensor::MessageKind kind;
};

// rain/temperature/humidity stay local to ECAS; everything else goes to the
// external-systems stub; mixed records go both ways
std::set<Destination> selective_route(const ContextRecord& record);

// --- Intelligent Sync ---

struct ZoneEvent {
    std::int64_t event_id;
    int source_zone;
    std::string kind;          // e.g. "rain-observation"
    double value;              // mm/h for rain events
    double location_m;
    std::optional<int> motion_target_zone;
    std::int64_t timestamp_us;
};

struct ZoneRegistry {
    // zone id -> adjacent zone ids
    std::map<int, std::vector<int>> adjacency;
    bool contains(int zone) const { return adjacency.count(zone) != 0; }
};

// Motion-hint target if present, otherwise the source's neighbors; never
// the source itself. Throws for a zone missing from the registry.
std::set<int> sync_filter(const ZoneEvent& event, const ZoneRegistry& zones);

// line-delimited trace records (documented field order, '|' separated)
std::string format_reconfig_line(const sensor::ReconfigCommand& cmd, std::int64_t t_us);
std::string format_zone_event_line(const ZoneEvent& ev);
ZoneEvent parse_zone_event_line(const std::string& line);

// Server decision loop driven by the simulator: owns the policy state that
// carries across rounds of a sweep.
class Policy {
  public:
    Policy(PolicyKind kind, int fixed_dr = 5, int loss_trigger = 1) {
        state_.kind = kind;
        state_.fixed_dr = fixed_dr;
        state_.loss_trigger = loss_trigger;
    }

    // DR a sensor starts the round with. Fixed: the configured DR.
    // Aggressive: the carried DR (DR5 before any loss). Conservative: the
    // selection for the last delivered rain observation (0 before any).
    int initial_dr(const sensor::SensorState& s, const phy::RadioConfig& cfg,
                   const channel::ChannelParams& params);

    // A packet arrived carrying a rain reading.
    std::optional<sensor::ReconfigCommand> on_delivery(const sensor::SensorState& s,
                                                       double rain,
                                                       const phy::RadioConfig& cfg,
                                                       const channel::ChannelParams& params);

    // The gateway's detector flagged a missing packet.
    std::optional<sensor::ReconfigCommand> on_loss(const LossEvent& loss);

    PolicyState& state() { return state_; }
    const PolicyState& state() const { return state_; }
    PolicyKind kind() const { return state_.kind; }

  private:
    PolicyState state_;
};

}  // namespace ecas::control
