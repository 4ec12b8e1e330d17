#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lindiff/denoiser.hpp"
#include "lindiff/sampler.hpp"
#include "lindiff/schedule.hpp"

namespace lindiff {

// Flat key = value experiment description; arrays are comma-separated.
struct ExperimentConfig {
    int d = 100;
    int steps = 100;
    double k = 1.0;
    std::string spectrum_file; // data matrix whose spectrum replaces (d, k)
    double c = 0.0;
    std::uint64_t seed = 1;
    std::vector<long> n_list = {100};
    std::vector<double> tau_grid;  // default: log grid 1e1 .. 1e10
    double eta = 1.0;
    SigmaChoice sigma = SigmaChoice::MatchBeta;
    Objective objective = Objective::NoisePrediction;
    int draws = 10;
    std::string out = "out.csv";
    double zeta = 10.0;
    GammaCoupling coupling = GammaCoupling::AlphaBar;
    bool centered = false; // moment convention of the DKL sweep
    int threads = 1;
    long mc_draws = 0;       // 0 disables Monte Carlo loss columns
    long test_rows = 2048;   // fresh rows for Monte Carlo test losses
    std::vector<int> t_slices;
};

ExperimentConfig load_config(const std::string& path);

// One sweep over N x draws comparing Eq.-5 draws with the replica prediction.
void run_sweep_dkl(const ExperimentConfig& config);

// Closed-form (and optional Monte Carlo) losses vs N plus tau-resolved curves,
// per-t slices and the optimal stopping time.
void run_loss_curves(const ExperimentConfig& config);

// Noise vs data objective along the tau grid with matched initialization,
// including the per-tau identity residual between the two optima families.
void run_compare_objectives(const ExperimentConfig& config);

// Sorted spectrum (rank, eigenvalue) of a power law or of a loaded data matrix.
void run_spectrum(const ExperimentConfig& config);

// Dispatch by subcommand name with optional CLI overrides applied on top of
// the file. Throws config_error for unknown names/keys, io/parse errors for
// broken inputs, solver_error from the replica layer.
void run_experiment(const std::string& name, const std::string& config_path,
                    std::optional<std::uint64_t> seed_override,
                    std::optional<std::string> out_override,
                    std::optional<int> threads_override);

} // namespace lindiff
