// Command-line front end; talks to the shared library exclusively through the
// C interface in lindiff/lindiff.h.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "lindiff/lindiff.h"

namespace {

struct CommonArgs {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool has_seed = false;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "experiment config file (key = value)")
        ->required();
    cmd->add_option("--seed", args.seed, "override the config seed")
        ->each([&](const std::string&) { args.has_seed = true; });
    cmd->add_option("--out", args.out, "override the config output path");
    cmd->add_option("--threads", args.threads, "worker threads for sweep cells");
}

int run(const std::string& name, const CommonArgs& args) {
    const int code = ld_run_experiment(
        name.c_str(), args.config.c_str(), args.has_seed ? 1 : 0, args.seed,
        args.out.empty() ? nullptr : args.out.c_str(), args.threads);
    if (code != LD_OK) std::fprintf(stderr, "lindiff: %s\n", ld_last_error());
    switch (code) {
        case LD_OK: return 0;
        case LD_ERR_SOLVER: return 3;
        default: return 2; // config, parse, io, domain: bad inputs
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(ld_version()) +
                 " - closed-form linear diffusion models and their "
                 "Monte Carlo checks"};
    app.require_subcommand(1);

    CommonArgs sweep, curves, compare, spectrum;
    add_common(app.add_subcommand("sweep-dkl",
                                  "DKL of trained linear models vs the replica "
                                  "prediction over an N sweep"),
               sweep);
    add_common(app.add_subcommand("loss-curves",
                                  "train/test losses, tau-resolved curves and the "
                                  "optimal stopping time"),
               curves);
    add_common(app.add_subcommand("compare-objectives",
                                  "noise- vs data-prediction objectives along the "
                                  "tau grid"),
               compare);
    add_common(app.add_subcommand("spectrum",
                                  "sorted covariance spectrum of a power law or a "
                                  "data matrix"),
               spectrum);

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand("sweep-dkl")) return run("sweep-dkl", sweep);
    if (app.got_subcommand("loss-curves")) return run("loss-curves", curves);
    if (app.got_subcommand("compare-objectives"))
        return run("compare-objectives", compare);
    return run("spectrum", spectrum);
}
