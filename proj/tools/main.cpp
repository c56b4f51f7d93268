#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cqural/experiment.hpp"
#include "cqural/explain.hpp"
#include "cqural/metrics.hpp"
#include "cqural/quantum.hpp"
#include "cqural/report.hpp"
#include "cqural/trainer.hpp"

namespace {

using namespace cqural;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

ExperimentConfig load_config(const std::string& path, long seed_override, const std::string& out_override,
                             const std::string& model_override) {
    ExperimentConfig cfg = load_experiment_config(path);
    if (seed_override >= 0) cfg.seeds = {static_cast<std::uint32_t>(seed_override)};
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (!model_override.empty()) {
        cfg.model = model_override;
        cfg = parse_experiment_config(echo_experiment_config(cfg));  // re-validate
    }
    return cfg;
}

int selftest() {
    int failures = 0;
    const auto check = [&](const char* name, bool ok) {
        std::printf("%-44s %s\n", name, ok ? "PASS" : "FAIL");
        if (!ok) ++failures;
    };
    const double pi = std::acos(-1.0);

    // Closed forms of the two head circuits on a coarse grid.
    bool closed_forms = true;
    for (int i = 0; i <= 64; ++i) {
        const double theta = -pi + 2.0 * pi * i / 64.0;
        Statevector s = evolve(evolve(Statevector{}, Hadamard{}), RY{theta});
        closed_forms &= std::abs(expectation_z(s) + std::sin(theta)) < 1e-12;
        closed_forms &= std::abs(s.prob1() - (1.0 + std::sin(theta)) / 2.0) < 1e-12;
        const double p1 = head_prob1(HeadMode::amplitude, theta / 3.0, theta / 5.0, 0, 0);
        closed_forms &= std::abs(p1 - std::pow(std::sin(theta / 3.0 + theta / 10.0), 2)) < 1e-12;
    }
    check("quantum closed forms", closed_forms);

    // Parameter-shift gradients against analytic derivatives.
    bool shift_exact = true;
    QuantumHead angle_head{HeadMode::angle, 0.0, 0};
    QuantumHead amp_head{HeadMode::amplitude, 0.0, 0};
    for (int i = 0; i < 32; ++i) {
        const double theta = -pi + 2.0 * pi * i / 31.0;
        shift_exact &= std::abs(param_shift_grad(angle_head, AngleName::theta, theta, 0.0,
                                                 ShiftTarget::prob1) -
                                std::cos(theta) / 2.0) < 1e-12;
        amp_head.w = theta / 3.0;
        shift_exact &= std::abs(param_shift_grad(amp_head, AngleName::phi, theta / 2.0, amp_head.w,
                                                 ShiftTarget::prob1) -
                                std::sin(theta + amp_head.w)) < 1e-12;
    }
    check("parameter-shift rule exactness", shift_exact);

    // Forgetting counts against a direct transition scan.
    CorrectnessTimeline tl;
    tl.labels = {0};
    tl.examples = {{{1, 0, true}, {2, 0, true}, {3, 1, false}, {4, 0, true}, {5, 1, false}}};
    const auto counts = count_forgetting_events(tl);
    check("forgetting event counting", counts[0].events == 2 && !counts[0].unforgettable);
    check("label dispersion", std::abs(label_dispersion({0, 1, 0, 1}) - 0.5) < 1e-12);

    // CSV round trip.
    const auto csv = emit_csv({"a", "b"}, {{"x,y", "line\nbreak"}, {"\"q\"", "plain"}});
    const auto parsed = parse_csv(csv);
    check("csv round trip", parsed.size() == 3 && parsed[1][0] == "x,y" && parsed[1][1] == "line\nbreak" &&
                                parsed[2][0] == "\"q\"");

    // SVG output parses with the bundled XML checker.
    PlotSeries s{"loss", {1, 2, 3}, {0.5, 0.4, 0.3}};
    check("svg well-formed", xml_well_formed(emit_svg_plot({s}, 320, 200, "selftest")));

    std::printf("%d failure(s)\n", failures);
    return failures == 0 ? 0 : kExitNumeric;
}

int dispatch(RunMode mode, const std::string& config_path, long seed, const std::string& out,
             const std::string& model) {
    const ExperimentConfig cfg = load_config(config_path, seed, out, model);
    run_experiment(cfg, mode);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CQural: hybrid classical-quantum continual-learning laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir, model;
    long seed = -1;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
        cmd->add_option("--seed", seed, "override the config seed list with one seed");
        cmd->add_option("--out", out_dir, "override the output directory");
        cmd->add_option("--model", model, "override the configured model");
    };

    auto* train = app.add_subcommand("train", "plain training run (no injection)");
    add_common(train);
    auto* continual = app.add_subcommand("continual", "training with mid-run sample injection");
    add_common(continual);
    auto* compare = app.add_subcommand("compare", "run all five models on one task");
    add_common(compare);
    auto* explain = app.add_subcommand("explain", "GradCAM overlays for the test set");
    add_common(explain);
    app.add_subcommand("selftest", "run built-in oracle checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (app.got_subcommand("selftest")) return selftest();
        if (app.got_subcommand("train")) return dispatch(RunMode::train, config_path, seed, out_dir, model);
        if (app.got_subcommand("continual")) {
            return dispatch(RunMode::continual, config_path, seed, out_dir, model);
        }
        if (app.got_subcommand("compare")) {
            return dispatch(RunMode::compare, config_path, seed, out_dir, model);
        }
        if (app.got_subcommand("explain")) {
            return dispatch(RunMode::explain, config_path, seed, out_dir, model);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitData;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const DimensionError& e) {
        std::cerr << "dimension error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}
