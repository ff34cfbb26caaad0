#include "ecas/phy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ecas::phy {

DataRateProfile dr_profile(int dr_index) {
    if (dr_index < 0 || dr_index >= kNumDataRates) {
        throw std::invalid_argument("dr_index out of range 0..5: " + std::to_string(dr_index));
    }
    return DataRateProfile{dr_index, 12 - dr_index, kBandwidthHz};
}

void RadioConfig::validate() const {
    if (cr_denominator < 5 || cr_denominator > 8) {
        throw std::invalid_argument("coding rate must be 4/5..4/8");
    }
    if (preamble_symbols < 1) {
        throw std::invalid_argument("preamble_symbols must be >= 1");
    }
    if (payload_bytes < 1) {
        throw std::invalid_argument("payload_bytes must be >= 1");
    }
    if (!(duty_cycle_limit > 0.0) || duty_cycle_limit > 1.0) {
        throw std::invalid_argument("duty_cycle_limit must be in (0, 1]");
    }
    if (tx_power_dbm < 2.0 || tx_power_dbm > 14.0) {
        throw std::invalid_argument("tx_power outside EU868 range +2..+14 dBm");
    }
}

namespace {

// ceil for possibly-negative numerator; the payload term clamps at zero.
int payload_symbol_count(int sf, const RadioConfig& cfg) {
    const bool ldro = sf >= 11;  // 125 kHz only
    const int de = ldro ? 1 : 0;
    const int ih = cfg.explicit_header ? 0 : 1;
    const int crc = cfg.crc_on ? 16 : 0;
    const int num = 8 * cfg.payload_bytes - 4 * sf + 28 + crc - 20 * ih;
    const int den = 4 * (sf - 2 * de);
    int blocks = 0;
    if (num > 0) {
        blocks = (num + den - 1) / den;
    }
    const int cr_term = cfg.cr_denominator;  // 4/5 -> 5 symbols per block
    return 8 + std::max(blocks * cr_term, 0);
}

}  // namespace

double time_on_air(const DataRateProfile& profile, const RadioConfig& cfg) {
    return static_cast<double>(time_on_air_us(profile, cfg)) * 1e-6;
}

std::int64_t time_on_air_us(const DataRateProfile& profile, const RadioConfig& cfg) {
    const int nsym = payload_symbol_count(profile.spreading_factor, cfg);
    // (preamble + 4.25 + nsym) * 2^SF / 125 kHz, in microseconds:
    // quarter-symbol units keep the arithmetic integral.
    const std::int64_t quarter_syms = 4LL * cfg.preamble_symbols + 17 + 4LL * nsym;
    return quarter_syms * (1LL << profile.spreading_factor) * 2;
}

double min_send_interval(double toa_s, double duty_cycle_limit, double app_period_s) {
    if (!(toa_s > 0.0) || !(duty_cycle_limit > 0.0) || !(app_period_s > 0.0)) {
        throw std::invalid_argument("min_send_interval: inputs must be positive");
    }
    return std::max(app_period_s, toa_s / duty_cycle_limit);
}

double sensitivity(const DataRateProfile& profile, const SensitivityTable& table) {
    return table[static_cast<std::size_t>(profile.dr_index)];
}

SensitivityTable default_sensitivity_table() {
    SensitivityTable t{};
    for (int dr = 0; dr < kNumDataRates; ++dr) {
        t[static_cast<std::size_t>(dr)] = -137.0 + 2.5 * dr;
    }
    return t;
}

}  // namespace ecas::phy
