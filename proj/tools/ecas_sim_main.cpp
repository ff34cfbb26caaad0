#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ecas/harness.hpp"

namespace {

// exit codes: 0 success, 1 verification failure, 2 configuration error
constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kConfigError = 2;

ecas::channel::ChannelParams resolve_params(const ecas::harness::ExperimentSpec& spec) {
    if (spec.params_source == "file") {
        if (spec.params_path.empty()) {
            throw std::runtime_error("params_source=file requires a params path");
        }
        return ecas::channel::load_params_file(spec.params_path);
    }
    if (spec.params_source == "calibrate") {
        if (spec.milestones_path.empty()) {
            throw std::runtime_error("params_source=calibrate requires a milestones file");
        }
        const auto milestones = ecas::channel::load_milestones_file(spec.milestones_path);
        return ecas::channel::calibrate(milestones, spec.radio());
    }
    throw std::runtime_error("unknown params_source '" + spec.params_source + "'");
}

void print_summary(const ecas::harness::SweepResult& result) {
    std::printf("%-20s %10s %10s %8s\n", "approach", "sent", "received", "pdr%");
    for (const auto& p : result.policies) {
        std::printf("%-20s %10ld %10ld %8.1f\n", p.policy.name().c_str(), p.sent, p.received,
                    100.0 * p.pdr());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ecas-sim: LoRa rain-adaptation experiment driver"};
    app.require_subcommand(1);

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "fit channel parameters to link milestones");
    std::string cal_milestones, cal_out;
    int cal_payload = 18;
    cal->add_option("--milestones", cal_milestones, "milestones CSV")->required();
    cal->add_option("--out", cal_out, "output params file")->required();
    cal->add_option("--payload", cal_payload, "payload bytes used for the fit");

    // sweep
    auto* sw = app.add_subcommand("sweep", "run the rain sweep for the chosen policies");
    std::string sw_spec, sw_grid, sw_policy, sw_params, sw_milestones, sw_out;
    double sw_duration = 0.0, sw_period = 0.0;
    bool sw_trace = false, sw_calibrate = false;
    sw->add_option("--spec", sw_spec, "experiment spec file (defaults built in)");
    sw->add_option("--grid", sw_grid, "5mm | 1mm | grid file path");
    sw->add_option("--policy", sw_policy, "fixed:<dr> | conservative | aggressive | all");
    sw->add_option("--params", sw_params, "calibrated channel params file");
    sw->add_flag("--calibrate-fresh", sw_calibrate, "calibrate instead of loading params");
    sw->add_option("--milestones", sw_milestones, "milestones CSV for --calibrate-fresh");
    sw->add_option("--duration", sw_duration, "round duration, seconds");
    sw->add_option("--period", sw_period, "application period, seconds");
    sw->add_flag("--trace", sw_trace, "write per-round event-trace CSVs");
    sw->add_option("--out", sw_out, "output directory")->required();

    // verify
    auto* ver = app.add_subcommand("verify", "compare an emitted result against a reference");
    std::string ver_result, ver_reference;
    ver->add_option("--result", ver_result, "result directory from sweep")->required();
    ver->add_option("--reference", ver_reference, "reference CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    try {
        if (cal->parsed()) {
            ecas::phy::RadioConfig radio;
            radio.payload_bytes = cal_payload;
            const auto milestones = ecas::channel::load_milestones_file(cal_milestones);
            const auto params = ecas::channel::calibrate(milestones, radio);
            ecas::channel::save_params_file(params, cal_out);
            std::printf("calibrated %zu milestones -> %s\n", milestones.size(),
                        cal_out.c_str());
            return kOk;
        }

        if (sw->parsed()) {
            ecas::harness::ExperimentSpec spec;
            if (!sw_spec.empty()) spec = ecas::harness::load_spec_file(sw_spec);
            if (!sw_grid.empty()) spec.grid_choice = sw_grid;
            if (!sw_policy.empty() && sw_policy != "all") {
                spec.policies.clear();
                if (sw_policy == "conservative") {
                    spec.policies.push_back({ecas::control::PolicyKind::Conservative, 5});
                } else if (sw_policy == "aggressive") {
                    spec.policies.push_back({ecas::control::PolicyKind::Aggressive, 5});
                } else if (sw_policy.rfind("fixed:", 0) == 0) {
                    spec.policies.push_back(
                        {ecas::control::PolicyKind::Fixed, std::stoi(sw_policy.substr(6))});
                } else {
                    throw std::runtime_error("unknown --policy value '" + sw_policy + "'");
                }
            }
            if (!sw_params.empty()) {
                spec.params_source = "file";
                spec.params_path = sw_params;
            }
            if (sw_calibrate) spec.params_source = "calibrate";
            if (!sw_milestones.empty()) spec.milestones_path = sw_milestones;
            if (sw_duration > 0.0) spec.round_duration_s = sw_duration;
            if (sw_period > 0.0) spec.app_period_s = sw_period;
            if (sw_trace) {
                spec.collect_trace = true;
                spec.trace_dir = (std::filesystem::path(sw_out) / "traces").string();
            }

            const auto params = resolve_params(spec);
            const std::string note = ecas::harness::reconcile_rounds(spec);
            auto result = ecas::harness::run_sweep(spec, params);
            result.header_note = note;
            ecas::harness::emit_reports(result, sw_out);
            std::printf("%s\n", note.c_str());
            print_summary(result);
            std::printf("reports written to %s\n", sw_out.c_str());
            return kOk;
        }

        if (ver->parsed()) {
            const auto rep = ecas::harness::compare_to_reference(ver_result, ver_reference);
            std::printf("checked %d cells\n", rep.cells_checked);
            for (const auto& fail : rep.failures) std::printf("MISMATCH %s\n", fail.c_str());
            std::printf("%s\n", rep.pass ? "verification PASSED" : "verification FAILED");
            return rep.pass ? kOk : kVerifyFailed;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfigError;
    }
    return kConfigError;
}
