// comet-nas: command-line front end for the search harness.
//
//   comet_nas <train-predictor|search|compare|gen-synth> --config cfg.json
//             [--seed N] [--replicates N] [--jobs N] [--out DIR]
//
// Exit status: 0 when every replicate completed, 1 when some failed (their
// seeds are listed on stderr), 2 on configuration or input errors.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "comet/harness.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> replicates;
    std::optional<int> jobs;
    std::optional<std::string> out;
};

CLI::App* add_command(CLI::App& app, const char* name, const char* help, Overrides& o) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "base seed; replicate r uses seed + r");
    sub->add_option("--replicates", o.replicates, "number of replicate runs")->check(CLI::PositiveNumber);
    sub->add_option("--jobs", o.jobs, "parallel replicates / bag members")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory");
    return sub;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"co-regulated shaping search for hardware-aware architecture design"};
    app.require_subcommand(1);
    Overrides o;
    std::optional<comet::ExperimentKind> kind;
    for (auto k : {comet::ExperimentKind::train_predictor, comet::ExperimentKind::search, comet::ExperimentKind::compare,
                   comet::ExperimentKind::gen_synth}) {
        const std::string name(comet::to_string(k));
        const char* help = k == comet::ExperimentKind::train_predictor ? "fit the meta-behavior predictor"
                           : k == comet::ExperimentKind::search        ? "run the co-regulated search"
                           : k == comet::ExperimentKind::compare       ? "co-regulated vs scalarized baseline"
                                                                       : "write a synthetic layer-statistics corpus";
        add_command(app, name.c_str(), help, o)->callback([&kind, k] { kind = k; });
    }
    CLI11_PARSE(app, argc, argv);

    try {
        comet::ExperimentConfig cfg = comet::load_config(o.config);
        cfg.experiment = *kind;
        if (o.seed) cfg.seed = *o.seed;
        if (o.replicates) cfg.replicates = *o.replicates;
        if (o.jobs) cfg.jobs = *o.jobs;
        if (o.out) cfg.out = *o.out;

        const auto result = comet::run_command(cfg);
        std::cout << result.report.dump(2) << '\n';
        if (!result.ok()) {
            std::cerr << "failed seeds:";
            for (auto s : result.failed_seeds) std::cerr << ' ' << s;
            std::cerr << '\n';
            return 1;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
