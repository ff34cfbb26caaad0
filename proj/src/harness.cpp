#include "ecas/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ecas::harness {

namespace fs = std::filesystem;

std::string PolicyChoice::name() const {
    switch (kind) {
        case control::PolicyKind::Fixed: return "Fixed DR-" + std::to_string(fixed_dr);
        case control::PolicyKind::Conservative: return "ECAS-Conservative";
        case control::PolicyKind::Aggressive: return "ECAS-Aggressive";
    }
    return "?";
}

std::vector<PolicyChoice> all_policies() {
    std::vector<PolicyChoice> out;
    for (int dr = 5; dr >= 0; --dr) out.push_back({control::PolicyKind::Fixed, dr});
    out.push_back({control::PolicyKind::Aggressive, 5});
    out.push_back({control::PolicyKind::Conservative, 5});
    return out;
}

phy::RadioConfig ExperimentSpec::radio() const {
    phy::RadioConfig cfg;
    cfg.payload_bytes = payload_bytes;
    return cfg;
}

void ExperimentSpec::validate() const {
    if (policies.empty()) throw std::invalid_argument("spec: policy list is empty");
    if (sensor_distances_m.empty()) throw std::invalid_argument("spec: no sensors");
    if (round_duration_s <= 0 || app_period_s <= 0) {
        throw std::invalid_argument("spec: duration and period must be positive");
    }
    if (!grid.empty()) {
        for (std::size_t i = 1; i < grid.size(); ++i) {
            if (grid[i] < grid[i - 1]) {
                throw std::invalid_argument("spec: rain grid must be nondecreasing");
            }
        }
    }
    radio().validate();
}

namespace {

PolicyChoice parse_policy(const std::string& text) {
    if (text == "conservative") return {control::PolicyKind::Conservative, 5};
    if (text == "aggressive") return {control::PolicyKind::Aggressive, 5};
    if (text.rfind("fixed:", 0) == 0) {
        const int dr = std::stoi(text.substr(6));
        (void)phy::dr_profile(dr);
        return {control::PolicyKind::Fixed, dr};
    }
    throw std::invalid_argument("unknown policy '" + text + "'");
}

std::vector<double> grid_with_step(double step) {
    std::vector<double> g;
    for (double r = 0.0; r <= 150.0 + 1e-9; r += step) g.push_back(r);
    return g;
}

}  // namespace

ExperimentSpec load_spec_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open spec file: " + path);
    ExperimentSpec spec;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "grid") {
            ls >> spec.grid_choice;
        } else if (key == "round_duration_s") {
            ls >> spec.round_duration_s;
        } else if (key == "app_period_s") {
            ls >> spec.app_period_s;
        } else if (key == "payload_bytes") {
            ls >> spec.payload_bytes;
        } else if (key == "sensors") {
            spec.sensor_distances_m.clear();
            double d;
            while (ls >> d) spec.sensor_distances_m.push_back(d);
        } else if (key == "policies") {
            std::string p;
            std::vector<PolicyChoice> chosen;
            while (ls >> p) {
                if (p == "all") {
                    chosen = all_policies();
                } else {
                    chosen.push_back(parse_policy(p));
                }
            }
            if (!chosen.empty()) spec.policies = chosen;
        } else if (key == "params_source") {
            ls >> spec.params_source;
        } else if (key == "params_path") {
            ls >> spec.params_path;
        } else if (key == "milestones_path") {
            ls >> spec.milestones_path;
        } else if (key == "loss_trigger") {
            ls >> spec.loss_trigger;
        } else {
            throw std::runtime_error("unknown key in spec file: " + key);
        }
        if (ls.fail() && key != "policies") {
            throw std::runtime_error("bad value for spec key: " + key);
        }
    }
    return spec;
}

std::string reconcile_rounds(ExperimentSpec& spec) {
    std::ostringstream note;
    if (spec.grid_choice == "5mm") {
        spec.grid = grid_with_step(5.0);
        note << "grid: 31 rounds, 0..150 mm/h step 5 (table-reproduction default; "
                "the text's 151-round sweep is available via --grid=1mm)";
    } else if (spec.grid_choice == "1mm") {
        spec.grid = grid_with_step(1.0);
        note << "grid: 151 rounds, 0..150 mm/h step 1";
    } else {
        std::ifstream f(spec.grid_choice);
        if (!f) throw std::runtime_error("cannot open grid file: " + spec.grid_choice);
        spec.grid.clear();
        double r;
        while (f >> r) spec.grid.push_back(r);
        if (spec.grid.empty()) throw std::runtime_error("empty grid file");
        note << "grid: " << spec.grid.size() << " rounds from " << spec.grid_choice;
    }
    note << "; rounds of " << spec.round_duration_s << " s at " << spec.app_period_s
         << " s period (" << static_cast<long>(spec.round_duration_s / spec.app_period_s)
         << " sends/round when the duty cycle is not binding)";
    spec.validate();
    return note.str();
}

namespace {

sim::RoundConfig make_round(const ExperimentSpec& spec, const channel::ChannelParams& params,
                            double rain) {
    sim::RoundConfig rc;
    rc.rain_mm_h = rain;
    rc.duration_us = static_cast<sim::SimTime>(std::llround(spec.round_duration_s * 1e6));
    rc.radio = spec.radio();
    rc.channel_params = params;
    rc.collect_trace = spec.collect_trace;
    for (std::size_t i = 0; i < spec.sensor_distances_m.size(); ++i) {
        sensor::SensorState s;
        s.sensor_id = static_cast<int>(i) + 1;
        s.distance_m = spec.sensor_distances_m[i];
        s.app_period_us = static_cast<sim::SimTime>(std::llround(spec.app_period_s * 1e6));
        rc.sensors.push_back(s);
    }
    return rc;
}

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ' ' || c == '/') c = '_';
    }
    return s;
}

sim::RoundStats run_traced(const sim::RoundConfig& rc, control::Policy& pol,
                           const ExperimentSpec& spec, const PolicyChoice& choice,
                           double rain) {
    if (!spec.collect_trace || spec.trace_dir.empty()) {
        return sim::run_round(rc, pol);
    }
    sim::Engine engine(rc, pol);
    while (engine.step()) {
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "_rain%03d.csv", static_cast<int>(rain));
    fs::create_directories(spec.trace_dir);
    sim::write_trace_csv(engine,
                         (fs::path(spec.trace_dir) / (sanitize(choice.name()) + buf)).string());
    return engine.stats();
}

PolicyResult run_policy(const ExperimentSpec& spec, const channel::ChannelParams& params,
                        const PolicyChoice& choice) {
    PolicyResult res;
    res.policy = choice;
    res.rounds.resize(spec.grid.size());

    if (choice.kind == control::PolicyKind::Fixed) {
        // independent rounds; fan out, collect by round index
        std::vector<std::future<sim::RoundStats>> futs;
        futs.reserve(spec.grid.size());
        for (double rain : spec.grid) {
            futs.push_back(std::async(std::launch::async, [&, rain]() {
                control::Policy pol(choice.kind, choice.fixed_dr, spec.loss_trigger);
                return run_traced(make_round(spec, params, rain), pol, spec, choice, rain);
            }));
        }
        for (std::size_t i = 0; i < futs.size(); ++i) res.rounds[i] = futs[i].get();
    } else {
        control::Policy pol(choice.kind, choice.fixed_dr, spec.loss_trigger);
        for (std::size_t i = 0; i < spec.grid.size(); ++i) {
            res.rounds[i] = run_traced(make_round(spec, params, spec.grid[i]), pol, spec,
                                       choice, spec.grid[i]);
        }
    }
    for (const auto& r : res.rounds) {
        res.sent += r.total_sent;
        res.received += r.total_received;
        res.lost += r.total_lost;
    }
    return res;
}

}  // namespace

SweepResult run_sweep(const ExperimentSpec& spec, const channel::ChannelParams& params) {
    ExperimentSpec s = spec;
    SweepResult out;
    if (s.grid.empty()) out.header_note = reconcile_rounds(s);
    s.validate();
    out.grid = s.grid;
    for (const auto& p : s.policies) out.policies.push_back(run_policy(s, params, p));
    return out;
}

namespace {

int pdr_percent(long received, long sent) {
    return sent == 0 ? 0 : static_cast<int>(std::llround(100.0 * received / sent));
}

const PolicyResult* find_policy(const SweepResult& r, control::PolicyKind kind, int dr) {
    for (const auto& p : r.policies) {
        if (p.policy.kind == kind && (kind != control::PolicyKind::Fixed || p.policy.fixed_dr == dr)) {
            return &p;
        }
    }
    return nullptr;
}

void write_svg_lines(const SweepResult& r, const std::string& path) {
    const double w = 720, h = 420, ml = 60, mb = 40, mt = 20, mr = 20;
    long maxy = 1;
    for (const auto& p : r.policies) {
        for (const auto& rd : p.rounds) maxy = std::max(maxy, rd.total_received);
    }
    const double x0 = r.grid.front(), x1 = std::max(r.grid.back(), x0 + 1.0);
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    f << "<rect width='100%' height='100%' fill='white'/>\n";
    f << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
      << "' stroke='black'/>\n";
    f << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
      << "' stroke='black'/>\n";
    f << "<text x='" << w / 2 << "' y='" << h - 8 << "' font-size='12'>rain (mm/h)</text>\n";
    f << "<text x='12' y='" << h / 2 << "' font-size='12' transform='rotate(-90 12 " << h / 2
      << ")'>received packets per round</text>\n";
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                   "#9467bd", "#8c564b", "#e377c2", "#17becf"};
    int ci = 0;
    for (const auto& p : r.policies) {
        f << "<polyline fill='none' stroke='" << colors[ci % 8] << "' points='";
        for (std::size_t i = 0; i < r.grid.size(); ++i) {
            const double px = ml + (r.grid[i] - x0) / (x1 - x0) * (w - ml - mr);
            const double py =
                h - mb - double(p.rounds[i].total_received) / double(maxy) * (h - mt - mb);
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px, py);
            f << buf;
        }
        f << "'/>\n";
        f << "<text x='" << w - mr - 190 << "' y='" << mt + 14 * (ci + 1)
          << "' font-size='11' fill='" << colors[ci % 8] << "'>" << p.policy.name()
          << "</text>\n";
        ++ci;
    }
    f << "</svg>\n";
}

void write_svg_bars(const SweepResult& r, const std::string& path) {
    const double w = 720, h = 420, ml = 60, mb = 70, mt = 20, mr = 20;
    long maxy = 1;
    for (const auto& p : r.policies) maxy = std::max(maxy, p.sent);
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    f << "<rect width='100%' height='100%' fill='white'/>\n";
    const double slot = (w - ml - mr) / double(r.policies.size());
    for (std::size_t i = 0; i < r.policies.size(); ++i) {
        const auto& p = r.policies[i];
        const double xs = ml + slot * i;
        const double hs = double(p.sent) / maxy * (h - mt - mb);
        const double hr = double(p.received) / maxy * (h - mt - mb);
        f << "<rect x='" << xs + slot * 0.15 << "' y='" << h - mb - hs << "' width='"
          << slot * 0.3 << "' height='" << hs << "' fill='#aaaaaa'/>\n";
        f << "<rect x='" << xs + slot * 0.5 << "' y='" << h - mb - hr << "' width='"
          << slot * 0.3 << "' height='" << hr << "' fill='#2ca02c'/>\n";
        f << "<text x='" << xs + slot * 0.5 << "' y='" << h - mb + 12
          << "' font-size='9' text-anchor='middle' transform='rotate(35 " << xs + slot * 0.5
          << " " << h - mb + 12 << ")'>" << p.policy.name() << "</text>\n";
    }
    f << "<text x='" << ml << "' y='" << mt - 6
      << "' font-size='11'>grey: sent, green: received</text>\n";
    f << "</svg>\n";
}

}  // namespace

void emit_reports(const SweepResult& result, const std::string& dir) {
    if (result.policies.empty()) {
        throw std::invalid_argument("emit_reports: empty policy result");
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("emit_reports: cannot create output directory " + dir);
    }
    const auto out = [&](const std::string& name) { return (fs::path(dir) / name).string(); };

    {
        std::ofstream f(out("run_info.txt"));
        f << result.header_note << "\n";
    }

    {
        std::ofstream f(out("table2.csv"));
        f << "dr,sent,received,lost,pdr_percent\n";
        for (int dr = 5; dr >= 0; --dr) {
            const auto* p = find_policy(result, control::PolicyKind::Fixed, dr);
            if (!p) continue;
            f << dr << "," << p->sent << "," << p->received << "," << p->lost << ","
              << pdr_percent(p->received, p->sent) << "\n";
        }
    }

    {
        std::ofstream f(out("table3.csv"));
        f << "approach,sent,pdr_percent\n";
        for (const auto& p : result.policies) {
            f << p.policy.name() << "," << p.sent << "," << pdr_percent(p.received, p.sent)
              << "\n";
        }
    }

    {
        std::ofstream f(out("figure_delivered_per_round.csv"));
        f << "rain_mm_h";
        for (const auto& p : result.policies) f << "," << p.policy.name();
        f << "\n";
        char buf[32];
        for (std::size_t i = 0; i < result.grid.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%g", result.grid[i]);
            f << buf;
            for (const auto& p : result.policies) f << "," << p.rounds[i].total_received;
            f << "\n";
        }
    }

    write_svg_lines(result, out("figure_delivered_per_round.svg"));
    write_svg_bars(result, out("totals_per_approach.svg"));

    {
        // adaptive-vs-best-fixed deltas
        const PolicyResult* best_fixed = nullptr;
        const PolicyResult* best_adaptive = nullptr;
        for (const auto& p : result.policies) {
            if (p.policy.kind == control::PolicyKind::Fixed) {
                if (!best_fixed || p.received > best_fixed->received) best_fixed = &p;
            } else {
                if (!best_adaptive || p.received > best_adaptive->received) best_adaptive = &p;
            }
        }
        std::ofstream f(out("comparison.txt"));
        f << result.header_note << "\n\n";
        if (best_fixed && best_adaptive) {
            const double d_recv =
                100.0 * (best_adaptive->received - best_fixed->received) / best_fixed->received;
            const double d_sent =
                100.0 * (best_fixed->sent - best_adaptive->sent) / best_fixed->sent;
            char buf[512];
            std::snprintf(buf, sizeof buf,
                          "best fixed:    %s  sent=%ld received=%ld pdr=%.1f%%\n"
                          "best adaptive: %s  sent=%ld received=%ld pdr=%.1f%%\n"
                          "delivered: %+.1f%% vs best fixed\n"
                          "sent:      %+.1f%% reduction vs best fixed\n",
                          best_fixed->policy.name().c_str(), best_fixed->sent,
                          best_fixed->received, 100.0 * best_fixed->pdr(),
                          best_adaptive->policy.name().c_str(), best_adaptive->sent,
                          best_adaptive->received, 100.0 * best_adaptive->pdr(), d_recv, d_sent);
            f << buf;
        } else {
            f << "comparison requires at least one fixed and one adaptive policy\n";
        }
    }
}

namespace {

struct Table2Row {
    long sent = 0, received = 0, lost = 0;
    int pdr = 0;
};
struct Table3Row {
    long sent = 0;
    int pdr = 0;
};

std::map<int, Table2Row> parse_table2(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::map<int, Table2Row> rows;
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5) throw std::runtime_error("bad table2 row: " + line);
        rows[std::stoi(cells[0])] =
            Table2Row{std::stol(cells[1]), std::stol(cells[2]), std::stol(cells[3]),
                      std::stoi(cells[4])};
    }
    return rows;
}

std::map<std::string, Table3Row> parse_table3(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::map<std::string, Table3Row> rows;
    std::string line;
    std::getline(f, line);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 3) throw std::runtime_error("bad table3 row: " + line);
        rows[cells[0]] = Table3Row{std::stol(cells[1]), std::stoi(cells[2])};
    }
    return rows;
}

bool duty_bound_dr(int dr) { return dr <= 1; }

void check_count(ComparisonReport& rep, const std::string& cell, long got, long want,
                 bool exact) {
    rep.cells_checked += 1;
    bool ok;
    if (exact) {
        ok = got == want;
    } else {
        ok = want == 0 ? got == 0 : std::abs(double(got - want) / double(want)) <= 0.02;
    }
    if (!ok) {
        rep.pass = false;
        rep.failures.push_back(cell + ": got " + std::to_string(got) + ", reference " +
                               std::to_string(want) + (exact ? " (exact)" : " (2%)"));
    }
}

void check_pdr(ComparisonReport& rep, const std::string& cell, int got, int want, int tol_pp) {
    rep.cells_checked += 1;
    if (std::abs(got - want) > tol_pp) {
        rep.pass = false;
        rep.failures.push_back(cell + ": got " + std::to_string(got) + "%, reference " +
                               std::to_string(want) + "% (tolerance " +
                               std::to_string(tol_pp) + " pp)");
    }
}

}  // namespace

ComparisonReport compare_to_reference(const std::string& result_dir,
                                      const std::string& reference_path) {
    // reference rows: "table2,dr,sent,received,lost,pdr" and
    // "table3,approach,sent,pdr"
    std::ifstream f(reference_path);
    if (!f) throw std::runtime_error("cannot open reference file: " + reference_path);
    std::map<int, Table2Row> ref2;
    std::map<std::string, Table3Row> ref3;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells[0] == "table2" && cells.size() == 6) {
            ref2[std::stoi(cells[1])] =
                Table2Row{std::stol(cells[2]), std::stol(cells[3]), std::stol(cells[4]),
                          std::stoi(cells[5])};
        } else if (cells[0] == "table3" && cells.size() == 4) {
            ref3[cells[1]] = Table3Row{std::stol(cells[2]), std::stoi(cells[3])};
        } else {
            throw std::runtime_error("malformed reference row: " + line);
        }
    }

    ComparisonReport rep;
    const auto got2 = parse_table2((fs::path(result_dir) / "table2.csv").string());
    const auto got3 = parse_table3((fs::path(result_dir) / "table3.csv").string());

    for (const auto& [dr, want] : ref2) {
        auto it = got2.find(dr);
        if (it == got2.end()) {
            rep.pass = false;
            rep.failures.push_back("table2 DR" + std::to_string(dr) + ": missing from result");
            continue;
        }
        const bool exact = !duty_bound_dr(dr);
        const std::string tag = "table2 DR" + std::to_string(dr);
        check_count(rep, tag + " sent", it->second.sent, want.sent, exact);
        check_count(rep, tag + " received", it->second.received, want.received, exact);
        check_count(rep, tag + " lost", it->second.lost, want.lost, exact);
        check_pdr(rep, tag + " pdr", it->second.pdr, want.pdr, 1);
    }
    for (const auto& [name, want] : ref3) {
        auto it = got3.find(name);
        if (it == got3.end()) {
            rep.pass = false;
            rep.failures.push_back("table3 " + name + ": missing from result");
            continue;
        }
        const bool adaptive = name.rfind("ECAS", 0) == 0;
        const std::string tag = "table3 " + name;
        if (adaptive) {
            check_count(rep, tag + " sent", it->second.sent, want.sent, false);
            check_pdr(rep, tag + " pdr", it->second.pdr, want.pdr, 2);
        } else {
            const int dr = name.back() - '0';
            check_count(rep, tag + " sent", it->second.sent, want.sent, !duty_bound_dr(dr));
            check_pdr(rep, tag + " pdr", it->second.pdr, want.pdr, 1);
        }
    }
    return rep;
}

}  // namespace ecas::harness
