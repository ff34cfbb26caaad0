#include "ecas/control.hpp"

#include <sstream>
#include <stdexcept>

namespace ecas::control {

SensorPolicyView& PolicyState::view(int sensor_id) {
    return sensors[sensor_id];
}

const SensorPolicyView& PolicyState::view(int sensor_id) const {
    auto it = sensors.find(sensor_id);
    if (it == sensors.end()) {
        throw std::out_of_range("unknown sensor id " + std::to_string(sensor_id));
    }
    return it->second;
}

int conservative_select(const sensor::SensorState& s, double observed_rain,
                        const phy::RadioConfig& cfg, const channel::ChannelParams& params) {
    for (int dr = phy::kNumDataRates - 1; dr >= 0; --dr) {
        if (channel::link_margin(dr, s.distance_m, observed_rain + 5.0, cfg, params) >= 0.0) {
            return dr;
        }
    }
    return 0;
}

std::optional<sensor::ReconfigCommand> aggressive_update(PolicyState& state,
                                                         const LossEvent& loss) {
    auto it = state.sensors.find(loss.sensor_id);
    if (it == state.sensors.end()) {
        throw std::out_of_range("aggressive_update: unknown sensor id " +
                                std::to_string(loss.sensor_id));
    }
    SensorPolicyView& v = it->second;
    v.pending_losses += 1;
    if (v.pending_losses < state.loss_trigger) return std::nullopt;
    v.pending_losses = 0;
    if (v.dr <= 0) return std::nullopt;  // already at the most robust setting
    v.dr -= 1;
    sensor::ReconfigCommand cmd;
    cmd.sensor_id = loss.sensor_id;
    cmd.dr_index = v.dr;
    return cmd;
}

namespace {
// metrics ECAS consumes itself; everything else belongs to external systems
bool ecas_relevant(const std::string& metric) {
    return metric == "rain" || metric == "temperature" || metric == "humidity";
}
}  // namespace

std::set<Destination> selective_route(const ContextRecord& record) {
    if (record.readings.empty()) {
        throw std::invalid_argument("selective_route: record has no readings");
    }
    std::set<Destination> out;
    for (const auto& [metric, value] : record.readings) {
        out.insert(ecas_relevant(metric) ? Destination::Local : Destination::External);
    }
    return out;
}

std::set<int> sync_filter(const ZoneEvent& event, const ZoneRegistry& zones) {
    if (!zones.contains(event.source_zone)) {
        throw std::out_of_range("sync_filter: unknown source zone " +
                                std::to_string(event.source_zone));
    }
    std::set<int> out;
    if (event.motion_target_zone) {
        if (!zones.contains(*event.motion_target_zone)) {
            throw std::out_of_range("sync_filter: unknown target zone " +
                                    std::to_string(*event.motion_target_zone));
        }
        if (*event.motion_target_zone != event.source_zone) {
            out.insert(*event.motion_target_zone);
        }
        return out;
    }
    for (int z : zones.adjacency.at(event.source_zone)) {
        if (z != event.source_zone) out.insert(z);
    }
    return out;
}

std::string format_reconfig_line(const sensor::ReconfigCommand& cmd, std::int64_t t_us) {
    std::ostringstream os;
    os << "reconfig|" << t_us << "|" << cmd.sensor_id << "|dr="
       << (cmd.dr_index ? std::to_string(*cmd.dr_index) : std::string("-"));
    if (cmd.thresholds) {
        os << "|thresholds=";
        bool first = true;
        for (const auto& [m, v] : *cmd.thresholds) {
            if (!first) os << ";";
            os << m << ":" << v;
            first = false;
        }
    }
    return os.str();
}

std::string format_zone_event_line(const ZoneEvent& ev) {
    std::ostringstream os;
    os << "zone-event|" << ev.event_id << "|" << ev.source_zone << "|" << ev.kind << "|"
       << ev.value << "|" << ev.location_m << "|"
       << (ev.motion_target_zone ? std::to_string(*ev.motion_target_zone) : std::string("-"))
       << "|" << ev.timestamp_us;
    return os.str();
}

int Policy::initial_dr(const sensor::SensorState& s, const phy::RadioConfig& cfg,
                       const channel::ChannelParams& params) {
    SensorPolicyView& v = state_.view(s.sensor_id);
    switch (state_.kind) {
        case PolicyKind::Fixed:
            v.dr = state_.fixed_dr;
            break;
        case PolicyKind::Conservative:
            v.dr = conservative_select(s, v.last_observed_rain, cfg, params);
            break;
        case PolicyKind::Aggressive:
            break;  // carries over; defaults to the highest DR
    }
    return v.dr;
}

std::optional<sensor::ReconfigCommand> Policy::on_delivery(const sensor::SensorState& s,
                                                           double rain,
                                                           const phy::RadioConfig& cfg,
                                                           const channel::ChannelParams& params) {
    SensorPolicyView& v = state_.view(s.sensor_id);
    v.last_observed_rain = rain;
    if (state_.kind != PolicyKind::Conservative) return std::nullopt;
    const int nd = conservative_select(s, rain, cfg, params);
    if (nd == v.dr) return std::nullopt;
    v.dr = nd;
    sensor::ReconfigCommand cmd;
    cmd.sensor_id = s.sensor_id;
    cmd.dr_index = nd;
    return cmd;
}

std::optional<sensor::ReconfigCommand> Policy::on_loss(const LossEvent& loss) {
    if (state_.kind != PolicyKind::Aggressive) return std::nullopt;
    return aggressive_update(state_, loss);
}

ZoneEvent parse_zone_event_line(const std::string& line) {
    std::istringstream is(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(is, field, '|')) fields.push_back(field);
    if (fields.size() != 8 || fields[0] != "zone-event") {
        throw std::invalid_argument("bad zone-event line: " + line);
    }
    ZoneEvent ev;
    ev.event_id = std::stoll(fields[1]);
    ev.source_zone = std::stoi(fields[2]);
    ev.kind = fields[3];
    ev.value = std::stod(fields[4]);
    ev.location_m = std::stod(fields[5]);
    if (fields[6] != "-") ev.motion_target_zone = std::stoi(fields[6]);
    ev.timestamp_us = std::stoll(fields[7]);
    return ev;
}

}  // namespace ecas::control
