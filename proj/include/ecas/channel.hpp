#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecas/phy.hpp"

// Link-budget model: log-distance path loss plus a k*R^alpha rain term,
// with a calibration routine that fits the free parameters to published
// connectivity breakpoints.
namespace ecas::channel {

struct ChannelParams {
    double pl0_db = 100.0;      // reference path loss at d0
    double d0_m = 1000.0;
    double exponent = 2.7;      // path-loss exponent n, >= 2
    double rain_k = 0.1;        // dB/km per (mm/h)^alpha
    double rain_alpha = 1.0;
    double antenna_gains_db = 0.0;  // lumped tx+rx
    phy::SensitivityTable sensitivity_dbm = phy::default_sensitivity_table();

    void validate() const;
};

// pl0 + 10 n log10(d/d0); deterministic, no fading term.
// Throws std::invalid_argument for distance < d0.
double path_loss(double distance_m, const ChannelParams& params);

// rain_k * rain^alpha * (distance/1000); zero at zero rain.
// Throws std::invalid_argument for negative rain.
double rain_attenuation(double rain_mm_h, double distance_m, const ChannelParams& params);

// tx + gains - path_loss - rain_attenuation - sensitivity(dr).
// Packet receivable iff margin >= 0.
double link_margin(int dr_index, double distance_m, double rain_mm_h,
                   const phy::RadioConfig& cfg, const ChannelParams& params);

struct BreakpointRain {
    enum class Kind { NeverConnected, Value, BeyondSweep };
    Kind kind = Kind::Value;
    double rain = 0.0;  // meaningful only for Kind::Value

    static BreakpointRain never() { return {Kind::NeverConnected, 0.0}; }
    static BreakpointRain beyond() { return {Kind::BeyondSweep, 0.0}; }
    static BreakpointRain at(double r) { return {Kind::Value, r}; }
    bool operator==(const BreakpointRain& o) const {
        return kind == o.kind && (kind != Kind::Value || rain == o.rain);
    }
    std::string str() const;
    // parses "never", "beyond" or a number
    static BreakpointRain parse(const std::string& text);
};

// default experiment sweep: 0,5,...,150 mm/h
std::vector<double> default_sweep_grid();

// Largest grid rain with link_margin >= 0; NeverConnected if dead at the
// first grid point, BeyondSweep if alive at the last.
BreakpointRain breakpoint_rain(int dr_index, double distance_m,
                               const phy::RadioConfig& cfg, const ChannelParams& params,
                               const std::vector<double>& grid = default_sweep_grid());

struct LinkMilestone {
    int dr_index;
    double distance_m;
    BreakpointRain target;
};

class CalibrationError : public std::runtime_error {
  public:
    explicit CalibrationError(const std::string& what, std::vector<std::string> violations = {})
        : std::runtime_error(what), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const { return violations_; }

  private:
    std::vector<std::string> violations_;
};

// Bounded grid search over (exponent, rain_alpha, rain_k, sensitivity step)
// with pl0 resolved per combination by interval intersection and snapped to
// 0.01 dB. Returns the lexicographically smallest (pl0, exponent, rain_k,
// rain_alpha, step) reproducing every milestone exactly on the sweep grid;
// an empty milestone list returns the defaults unchanged. Throws
// CalibrationError listing the violated milestones of the closest candidate
// when no exact fit exists.
ChannelParams calibrate(const std::vector<LinkMilestone>& milestones,
                        const phy::RadioConfig& cfg,
                        const std::vector<double>& grid = default_sweep_grid());

// plain-text key-value serialization, fixed decimal formatting
void save_params(const ChannelParams& params, std::ostream& out);
void save_params_file(const ChannelParams& params, const std::string& path);
ChannelParams load_params(std::istream& in);
ChannelParams load_params_file(const std::string& path);

// milestone CSV: "dr,distance_m,max_connected_rain" with never/beyond allowed
std::vector<LinkMilestone> load_milestones_file(const std::string& path);

}  // namespace ecas::channel
