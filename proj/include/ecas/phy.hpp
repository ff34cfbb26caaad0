#pragma once

#include <array>
#include <cstdint>

// LoRa physical-layer arithmetic: data-rate profiles, time-on-air,
// receiver sensitivity lookup and duty-cycle send spacing.
namespace ecas::phy {

inline constexpr int kNumDataRates = 6;
inline constexpr double kBandwidthHz = 125000.0;  // all profiles use 125 kHz

struct DataRateProfile {
    int dr_index;           // 0..5
    int spreading_factor;   // 12..7, dr_index + sf == 12
    double bandwidth_hz;    // fixed 125 kHz
};

// DR <-> SF mapping (DR5=SF7 ... DR0=SF12). Throws std::invalid_argument
// for an out-of-range index.
DataRateProfile dr_profile(int dr_index);

struct RadioConfig {
    int cr_denominator = 5;        // coding rate 4/cr_denominator, 4/5 default
    int preamble_symbols = 8;
    bool explicit_header = true;
    bool crc_on = true;
    int payload_bytes = 18;
    double tx_power_dbm = 14.0;    // EU868 max
    double carrier_hz = 868e6;
    double duty_cycle_limit = 0.01;

    // payload >= 1, duty in (0,1], tx power +2..+14 dBm, cr 4/5..4/8
    void validate() const;
};

// Symbol-exact airtime in seconds. LDRO engages automatically for SF11/SF12
// at 125 kHz; payload symbol count is clamped at the 8-symbol floor.
double time_on_air(const DataRateProfile& profile, const RadioConfig& cfg);

// Same airtime in integer microseconds (exact at 125 kHz: the symbol time
// 2^SF/125e3 s is a whole multiple of 2 us).
std::int64_t time_on_air_us(const DataRateProfile& profile, const RadioConfig& cfg);

// Effective inter-send interval: max(app_period, toa / duty_cycle_limit).
// Throws std::invalid_argument on non-positive inputs.
double min_send_interval(double toa_s, double duty_cycle_limit, double app_period_s);

// Per-DR demodulation floor, dBm. Entry order is dr_index 0..5; strictly
// increasing (DR0 most sensitive).
using SensitivityTable = std::array<double, kNumDataRates>;

double sensitivity(const DataRateProfile& profile, const SensitivityTable& table);

// SX127x-flavoured defaults, -137 dBm at SF12 with a uniform 2.5 dB step.
SensitivityTable default_sensitivity_table();

}  // namespace ecas::phy
