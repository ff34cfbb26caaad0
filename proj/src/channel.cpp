#include "ecas/channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>
#include <thread>

namespace ecas::channel {

void ChannelParams::validate() const {
    if (!(d0_m > 0.0)) throw std::invalid_argument("d0 must be positive");
    if (exponent < 2.0) throw std::invalid_argument("path-loss exponent must be >= 2");
    if (rain_k < 0.0) throw std::invalid_argument("rain_k must be >= 0");
    if (!(rain_alpha > 0.0)) throw std::invalid_argument("rain_alpha must be positive");
    for (int dr = 0; dr + 1 < phy::kNumDataRates; ++dr) {
        if (!(sensitivity_dbm[dr] < sensitivity_dbm[dr + 1])) {
            throw std::invalid_argument("sensitivity table must decrease from DR5 to DR0");
        }
    }
}

double path_loss(double distance_m, const ChannelParams& params) {
    if (distance_m < params.d0_m) {
        throw std::invalid_argument("path_loss: distance below reference distance");
    }
    return params.pl0_db + 10.0 * params.exponent * std::log10(distance_m / params.d0_m);
}

double rain_attenuation(double rain_mm_h, double distance_m, const ChannelParams& params) {
    if (rain_mm_h < 0.0) {
        throw std::invalid_argument("rain_attenuation: negative rain rate");
    }
    if (rain_mm_h == 0.0) return 0.0;
    return params.rain_k * std::pow(rain_mm_h, params.rain_alpha) * (distance_m / 1000.0);
}

double link_margin(int dr_index, double distance_m, double rain_mm_h,
                   const phy::RadioConfig& cfg, const ChannelParams& params) {
    const auto profile = phy::dr_profile(dr_index);
    const double rx = cfg.tx_power_dbm + params.antenna_gains_db
                      - path_loss(distance_m, params)
                      - rain_attenuation(rain_mm_h, distance_m, params);
    return rx - phy::sensitivity(profile, params.sensitivity_dbm);
}

std::string BreakpointRain::str() const {
    switch (kind) {
        case Kind::NeverConnected: return "never";
        case Kind::BeyondSweep: return "beyond";
        case Kind::Value: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%g", rain);
            return buf;
        }
    }
    return "?";
}

BreakpointRain BreakpointRain::parse(const std::string& text) {
    if (text == "never" || text == "never-connected") return never();
    if (text == "beyond" || text == "beyond-sweep") return beyond();
    try {
        size_t pos = 0;
        double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return at(v);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad breakpoint value: '" + text + "'");
    }
}

std::vector<double> default_sweep_grid() {
    std::vector<double> g;
    for (int r = 0; r <= 150; r += 5) g.push_back(static_cast<double>(r));
    return g;
}

BreakpointRain breakpoint_rain(int dr_index, double distance_m,
                               const phy::RadioConfig& cfg, const ChannelParams& params,
                               const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("breakpoint_rain: empty grid");
    if (link_margin(dr_index, distance_m, grid.front(), cfg, params) < 0.0) {
        return BreakpointRain::never();
    }
    double last = grid.front();
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (link_margin(dr_index, distance_m, grid[i], cfg, params) < 0.0) {
            return BreakpointRain::at(last);
        }
        last = grid[i];
    }
    return BreakpointRain::beyond();
}

namespace {

struct GridSpec {
    double lo, step;
    int count;
    double at(int i) const { return lo + step * i; }
};

// search bounds; fixed so committed calibrations are reproducible
constexpr GridSpec kExponentGrid{2.00, 0.05, 61};   // 2.00 .. 5.00
constexpr GridSpec kAlphaGrid{0.40, 0.05, 17};      // 0.40 .. 1.20
constexpr GridSpec kRainKGrid{0.020, 0.005, 77};    // 0.020 .. 0.400
constexpr GridSpec kStepGrid{1.00, 0.05, 61};       // 1.00 .. 4.00
constexpr double kSensAnchorDbm = -137.0;           // SF12 anchor

struct Candidate {
    double pl0 = 0, exponent = 0, rain_k = 0, rain_alpha = 0, step = 0;
    bool operator<(const Candidate& o) const {
        if (pl0 != o.pl0) return pl0 < o.pl0;
        if (exponent != o.exponent) return exponent < o.exponent;
        if (rain_k != o.rain_k) return rain_k < o.rain_k;
        if (rain_alpha != o.rain_alpha) return rain_alpha < o.rain_alpha;
        return step < o.step;
    }
};

struct SearchResult {
    bool have_exact = false;
    Candidate exact;
    int best_mismatch = std::numeric_limits<int>::max();
    Candidate closest;
};

struct MilestonePre {
    int dr;
    double dkm;
    double log_dist;  // log10(d / d0)
    int target_idx;   // -1 never, top for beyond
};

ChannelParams materialize(const Candidate& c, const ChannelParams& base) {
    ChannelParams p = base;
    p.pl0_db = c.pl0;
    p.exponent = c.exponent;
    p.rain_k = c.rain_k;
    p.rain_alpha = c.rain_alpha;
    for (int dr = 0; dr < phy::kNumDataRates; ++dr) {
        p.sensitivity_dbm[dr] = kSensAnchorDbm + c.step * dr;
    }
    return p;
}

int grid_index_of(const std::vector<double>& grid, const BreakpointRain& bp) {
    switch (bp.kind) {
        case BreakpointRain::Kind::NeverConnected: return -1;
        case BreakpointRain::Kind::BeyondSweep: return static_cast<int>(grid.size()) - 1;
        case BreakpointRain::Kind::Value: {
            auto it = std::find(grid.begin(), grid.end(), bp.rain);
            if (it == grid.end()) {
                throw std::invalid_argument("milestone rain " + bp.str() + " not on sweep grid");
            }
            return static_cast<int>(it - grid.begin());
        }
    }
    return -1;
}

// achieved breakpoint index for given headroom = (base - pl0) / (k * dkm):
// largest grid index whose rain^alpha stays within the headroom, -1 if none
int achieved_index(const std::vector<double>& pow_grid, double headroom) {
    int lo = -1, hi = static_cast<int>(pow_grid.size()) - 1;
    while (lo < hi) {
        const int mid = (lo + hi + 1) / 2;
        if (pow_grid[mid] <= headroom) lo = mid;
        else hi = mid - 1;
    }
    return lo;
}

SearchResult search_slice(int n_begin, int n_end, const std::vector<MilestonePre>& pre,
                          const std::vector<double>& grid, double c0, bool value_at_top_seen,
                          const std::vector<bool>& target_is_top_value) {
    SearchResult res;
    const int top_idx = static_cast<int>(grid.size()) - 1;
    std::vector<double> pow_grid(grid.size());
    const std::size_t m_count = pre.size();
    std::vector<double> dist_term(m_count), a_alive(m_count), a_dead(m_count);

    for (int ni = n_begin; ni < n_end; ++ni) {
        const double n = kExponentGrid.at(ni);
        for (std::size_t m = 0; m < m_count; ++m) dist_term[m] = 10.0 * n * pre[m].log_dist;
        for (int ai = 0; ai < kAlphaGrid.count; ++ai) {
            const double a = kAlphaGrid.at(ai);
            for (std::size_t gi = 0; gi < grid.size(); ++gi) {
                pow_grid[gi] = grid[gi] > 0.0 ? std::pow(grid[gi], a) : 0.0;
            }
            const double pow_above =
                value_at_top_seen ? std::pow(grid[top_idx] + 5.0, a) : 0.0;
            for (int ki = 0; ki < kRainKGrid.count; ++ki) {
                const double k = kRainKGrid.at(ki);
                for (std::size_t m = 0; m < m_count; ++m) {
                    const int ti = pre[m].target_idx;
                    const double kd = k * pre[m].dkm;
                    if (ti < 0) {
                        a_alive[m] = 0.0;
                        a_dead[m] = kd * pow_grid[0];
                    } else {
                        a_alive[m] = kd * pow_grid[ti];
                        if (ti < top_idx) a_dead[m] = kd * pow_grid[ti + 1];
                        else if (target_is_top_value[m]) a_dead[m] = kd * pow_above;
                        else a_dead[m] = -1.0;  // no upper-rain requirement
                    }
                }
                for (int si = 0; si < kStepGrid.count; ++si) {
                    const double step = kStepGrid.at(si);
                    double lo = -1e30, hi = 1e30;  // feasible pl0 interval
                    for (std::size_t m = 0; m < m_count; ++m) {
                        const double base = c0 - dist_term[m] - pre[m].dr * step;
                        if (pre[m].target_idx < 0) {
                            lo = std::max(lo, base - a_dead[m]);
                        } else {
                            hi = std::min(hi, base - a_alive[m]);
                            if (a_dead[m] >= 0.0) lo = std::max(lo, base - a_dead[m]);
                        }
                    }
                    const double pl0 = std::round((lo + hi) * 50.0) / 100.0;
                    if (lo < hi && pl0 > lo && pl0 < hi) {
                        Candidate c{pl0, n, k, a, step};
                        if (!res.have_exact || c < res.exact) {
                            res.exact = c;
                            res.have_exact = true;
                        }
                        continue;
                    }
                    if (res.have_exact) continue;
                    // infeasible interval: score by total breakpoint-index error
                    int mismatch = 0;
                    for (std::size_t m = 0; m < m_count; ++m) {
                        const double base = c0 - dist_term[m] - pre[m].dr * step;
                        const double kd = k * pre[m].dkm;
                        const int got =
                            achieved_index(pow_grid, (base - pl0) / (kd > 0.0 ? kd : 1e-300));
                        mismatch += std::abs(got - pre[m].target_idx);
                    }
                    if (mismatch < res.best_mismatch) {
                        res.best_mismatch = mismatch;
                        res.closest = Candidate{pl0, n, k, a, step};
                    }
                }
            }
        }
    }
    return res;
}

}  // namespace

ChannelParams calibrate(const std::vector<LinkMilestone>& milestones,
                        const phy::RadioConfig& cfg,
                        const std::vector<double>& grid) {
    ChannelParams defaults;
    if (milestones.empty()) return defaults;
    cfg.validate();
    if (grid.size() < 2) throw std::invalid_argument("calibrate: sweep grid too small");

    for (std::size_t i = 0; i < milestones.size(); ++i) {
        for (std::size_t j = i + 1; j < milestones.size(); ++j) {
            const auto& a = milestones[i];
            const auto& b = milestones[j];
            if (a.dr_index == b.dr_index && a.distance_m == b.distance_m &&
                !(a.target == b.target)) {
                throw CalibrationError(
                    "contradictory milestones for DR" + std::to_string(a.dr_index) + " at " +
                        std::to_string(static_cast<int>(a.distance_m)) + " m",
                    {a.target.str() + " vs " + b.target.str()});
            }
        }
    }

    const int top_idx = static_cast<int>(grid.size()) - 1;
    std::vector<MilestonePre> pre;
    std::vector<bool> top_value;
    bool any_top_value = false;
    for (const auto& m : milestones) {
        (void)phy::dr_profile(m.dr_index);
        if (m.distance_m < defaults.d0_m) {
            throw std::invalid_argument("milestone distance below reference distance");
        }
        const int ti = grid_index_of(grid, m.target);
        pre.push_back(MilestonePre{m.dr_index, m.distance_m / 1000.0,
                                   std::log10(m.distance_m / defaults.d0_m), ti});
        const bool tv = m.target.kind == BreakpointRain::Kind::Value && ti == top_idx;
        top_value.push_back(tv);
        any_top_value = any_top_value || tv;
    }

    const double c0 = cfg.tx_power_dbm + defaults.antenna_gains_db - kSensAnchorDbm;

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int slices = static_cast<int>(std::min<unsigned>(hw, 8));
    const int per = (kExponentGrid.count + slices - 1) / slices;
    std::vector<std::future<SearchResult>> futs;
    for (int s = 0; s < slices; ++s) {
        const int b = s * per;
        const int e = std::min(kExponentGrid.count, b + per);
        if (b >= e) break;
        futs.push_back(std::async(std::launch::async, search_slice, b, e, std::cref(pre),
                                  std::cref(grid), c0, any_top_value, std::cref(top_value)));
    }
    SearchResult best;
    for (auto& f : futs) {
        SearchResult r = f.get();
        if (r.have_exact && (!best.have_exact || r.exact < best.exact)) {
            best.exact = r.exact;
            best.have_exact = true;
        }
        if (r.best_mismatch < best.best_mismatch) {
            best.best_mismatch = r.best_mismatch;
            best.closest = r.closest;
        }
    }

    if (best.have_exact) {
        ChannelParams p = materialize(best.exact, defaults);
        p.validate();
        // the interval math and breakpoint_rain must agree; guards FP snap edge cases
        for (const auto& m : milestones) {
            const auto got = breakpoint_rain(m.dr_index, m.distance_m, cfg, p, grid);
            if (grid_index_of(grid, got) != grid_index_of(grid, m.target)) {
                throw CalibrationError("calibration self-check failed",
                                       {"DR" + std::to_string(m.dr_index) + ": got " + got.str() +
                                        " want " + m.target.str()});
            }
        }
        return p;
    }

    std::vector<std::string> violations;
    if (best.best_mismatch < std::numeric_limits<int>::max()) {
        ChannelParams p = materialize(best.closest, defaults);
        for (const auto& m : milestones) {
            const auto got = breakpoint_rain(m.dr_index, m.distance_m, cfg, p, grid);
            if (grid_index_of(grid, got) != grid_index_of(grid, m.target)) {
                violations.push_back("DR" + std::to_string(m.dr_index) + "/" +
                                     std::to_string(static_cast<int>(m.distance_m)) +
                                     "m: want " + m.target.str() + ", closest " + got.str());
            }
        }
    }
    throw CalibrationError("calibration failed: no parameter set reproduces all milestones",
                           violations);
}

void save_params(const ChannelParams& params, std::ostream& out) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "pl0_db %.2f\n", params.pl0_db);
    out << buf;
    std::snprintf(buf, sizeof buf, "d0_m %.2f\n", params.d0_m);
    out << buf;
    std::snprintf(buf, sizeof buf, "exponent %.2f\n", params.exponent);
    out << buf;
    std::snprintf(buf, sizeof buf, "rain_k %.3f\n", params.rain_k);
    out << buf;
    std::snprintf(buf, sizeof buf, "rain_alpha %.2f\n", params.rain_alpha);
    out << buf;
    std::snprintf(buf, sizeof buf, "antenna_gains_db %.2f\n", params.antenna_gains_db);
    out << buf;
    out << "sensitivity_dbm";
    for (double s : params.sensitivity_dbm) {
        std::snprintf(buf, sizeof buf, " %.2f", s);
        out << buf;
    }
    out << "\n";
}

void save_params_file(const ChannelParams& params, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write params file: " + path);
    save_params(params, f);
}

ChannelParams load_params(std::istream& in) {
    ChannelParams p;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "pl0_db") ls >> p.pl0_db;
        else if (key == "d0_m") ls >> p.d0_m;
        else if (key == "exponent") ls >> p.exponent;
        else if (key == "rain_k") ls >> p.rain_k;
        else if (key == "rain_alpha") ls >> p.rain_alpha;
        else if (key == "antenna_gains_db") ls >> p.antenna_gains_db;
        else if (key == "sensitivity_dbm") {
            for (int dr = 0; dr < phy::kNumDataRates; ++dr) ls >> p.sensitivity_dbm[dr];
        } else {
            throw std::runtime_error("unknown key in params file: " + key);
        }
        if (ls.fail()) throw std::runtime_error("bad value for key: " + key);
    }
    p.validate();
    return p;
}

ChannelParams load_params_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open params file: " + path);
    return load_params(f);
}

std::vector<LinkMilestone> load_milestones_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open milestones file: " + path);
    std::vector<LinkMilestone> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string dr_s, dist_s, bp_s;
        if (!std::getline(ls, dr_s, ',') || !std::getline(ls, dist_s, ',') ||
            !std::getline(ls, bp_s)) {
            throw std::runtime_error("bad milestone line: " + line);
        }
        out.push_back(LinkMilestone{std::stoi(dr_s), std::stod(dist_s),
                                    BreakpointRain::parse(bp_s)});
    }
    return out;
}

}  // namespace ecas::channel
