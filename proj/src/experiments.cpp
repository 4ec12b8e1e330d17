#include "lindiff/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include "lindiff/covariance.hpp"
#include "lindiff/csv.hpp"
#include "lindiff/errors.hpp"
#include "lindiff/metrics.hpp"
#include "lindiff/replica.hpp"
#include "lindiff/rng.hpp"

namespace lindiff {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        items.push_back(trim(s.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return items;
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': not a number: '" + v + "'");
    }
}

long parse_long(const std::string& v, const std::string& key) {
    const double x = parse_double(v, key);
    const long n = static_cast<long>(x);
    if (static_cast<double>(n) != x)
        throw config_error("config key '" + key + "': expected an integer: '" + v + "'");
    return n;
}

// Run fn(0..count-1) on a small pool; each cell owns its output slot, so the
// gather order never depends on scheduling.
void parallel_cells(long count, int threads, const std::function<void(long)>& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || count <= 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const int workers = static_cast<int>(std::min<long>(threads, count));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const long i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

SpectralCovariance truth_model(const ExperimentConfig& config) {
    if (!config.spectrum_file.empty()) {
        const Eigen::MatrixXd data = load_data_matrix(config.spectrum_file);
        const EmpiricalStats stats = empirical_stats(data);
        SpectralCovariance truth;
        truth.eigenvalues = stats.cov_eigenvalues;
        truth.basis = Eigen::MatrixXd::Identity(stats.dim(), stats.dim());
        truth.mean = Eigen::VectorXd::Zero(stats.dim());
        return truth;
    }
    return make_powerlaw_covariance(config.d, config.k);
}

std::vector<double> tau_grid_or_default(const ExperimentConfig& config) {
    if (!config.tau_grid.empty()) return config.tau_grid;
    std::vector<double> taus;
    const int points = 120;
    for (int i = 0; i < points; ++i)
        taus.push_back(std::pow(10.0, 1.0 + 9.0 * i / (points - 1)));
    return taus;
}

std::uint64_t cell_seed(std::uint64_t seed, long n, int draw) {
    return rng::splitmix64(seed ^ rng::splitmix64(static_cast<std::uint64_t>(n) * 1000003ull +
                                                  static_cast<std::uint64_t>(draw)));
}

} // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config '" + path + "'");
    ExperimentConfig cfg;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string text = trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(line_no) +
                               ": expected 'key = value'");
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (value.empty())
            throw config_error("config key '" + key + "' has an empty value");

        if (key == "d") cfg.d = static_cast<int>(parse_long(value, key));
        else if (key == "T") cfg.steps = static_cast<int>(parse_long(value, key));
        else if (key == "k") cfg.k = parse_double(value, key);
        else if (key == "spectrum_file") cfg.spectrum_file = value;
        else if (key == "c") cfg.c = parse_double(value, key);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(value, key));
        else if (key == "N") {
            cfg.n_list.clear();
            for (const auto& item : split_list(value))
                cfg.n_list.push_back(parse_long(item, key));
        } else if (key == "tau") {
            cfg.tau_grid.clear();
            for (const auto& item : split_list(value))
                cfg.tau_grid.push_back(parse_double(item, key));
        } else if (key == "eta") cfg.eta = parse_double(value, key);
        else if (key == "sigma") {
            if (value == "zero") cfg.sigma = SigmaChoice::Zero;
            else if (value == "beta") cfg.sigma = SigmaChoice::MatchBeta;
            else throw config_error("config key 'sigma': expected zero|beta");
        } else if (key == "objective") {
            if (value == "noise") cfg.objective = Objective::NoisePrediction;
            else if (value == "data") cfg.objective = Objective::DataPrediction;
            else throw config_error("config key 'objective': expected noise|data");
        } else if (key == "draws") cfg.draws = static_cast<int>(parse_long(value, key));
        else if (key == "out") cfg.out = value;
        else if (key == "zeta") cfg.zeta = parse_double(value, key);
        else if (key == "coupling") {
            if (value == "alphabar") cfg.coupling = GammaCoupling::AlphaBar;
            else if (value == "sqrt") cfg.coupling = GammaCoupling::SqrtAlphaBar;
            else throw config_error("config key 'coupling': expected alphabar|sqrt");
        } else if (key == "centered") {
            if (value == "true") cfg.centered = true;
            else if (value == "false") cfg.centered = false;
            else throw config_error("config key 'centered': expected true|false");
        } else if (key == "threads") cfg.threads = static_cast<int>(parse_long(value, key));
        else if (key == "mc_draws") cfg.mc_draws = parse_long(value, key);
        else if (key == "test_rows") cfg.test_rows = parse_long(value, key);
        else if (key == "t_slices") {
            cfg.t_slices.clear();
            for (const auto& item : split_list(value))
                cfg.t_slices.push_back(static_cast<int>(parse_long(item, key)));
        } else {
            throw config_error("unknown config key '" + key + "' (line " +
                               std::to_string(line_no) + ")");
        }
    }
    if (cfg.d < 1 || cfg.steps < 2 || cfg.draws < 1 || cfg.n_list.empty())
        throw config_error("config requires d >= 1, T >= 2, draws >= 1, non-empty N");
    for (long n : cfg.n_list)
        if (n < 1) throw config_error("config N entries must be positive");
    return cfg;
}

void run_sweep_dkl(const ExperimentConfig& config) {
    const SpectralCovariance truth = truth_model(config);
    const auto d = truth.dim();
    const long cells = static_cast<long>(config.n_list.size()) * config.draws;
    std::vector<double> values(static_cast<std::size_t>(cells));

    parallel_cells(cells, config.threads, [&](long cell) {
        const long n = config.n_list[static_cast<std::size_t>(cell) / config.draws];
        const int draw = static_cast<int>(cell % config.draws);
        const Eigen::MatrixXd data =
            sample_gaussian(truth, n, cell_seed(config.seed, n, draw));
        const EmpiricalStats stats =
            config.centered ? empirical_stats(data) : moment_stats(data);
        values[static_cast<std::size_t>(cell)] =
            empirical_dkl(truth, stats, config.c) / static_cast<double>(d);
    });

    CsvTable table({"series", "k", "d", "N", "c", "draw", "value"});
    const std::string k_str = config.spectrum_file.empty() ? format_double(config.k) : "";
    const std::string d_str = std::to_string(d);
    const std::string c_str = format_double(config.c);
    for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
        const long n = config.n_list[ni];
        const std::string n_str = std::to_string(n);
        KahanSum sum, sum_sq;
        for (int draw = 0; draw < config.draws; ++draw) {
            const double v = values[ni * config.draws + draw];
            table.add_row({"dkl_draw", k_str, d_str, n_str, c_str,
                           std::to_string(draw), format_double(v)});
            sum.add(v);
            sum_sq.add(v * v);
        }
        const double mean = sum.value() / config.draws;
        const double var = config.draws > 1
                               ? (sum_sq.value() - config.draws * mean * mean) /
                                     (config.draws - 1)
                               : 0.0;
        ReplicaInput input{truth.eigenvalues, n, config.c};
        const ReplicaSolution sol = solve_q(input);
        table.add_row({"dkl_mean", k_str, d_str, n_str, c_str, "", format_double(mean)});
        table.add_row({"dkl_std", k_str, d_str, n_str, c_str, "",
                       format_double(std::sqrt(std::max(0.0, var)))});
        table.add_row({"dkl_pred", k_str, d_str, n_str, c_str, "",
                       format_double(predict_dkl(input))});
        table.add_row({"q", k_str, d_str, n_str, c_str, "", format_double(sol.q)});
    }
    table.write(config.out);
}

void run_loss_curves(const ExperimentConfig& config) {
    const SpectralCovariance truth = truth_model(config);
    const auto d = truth.dim();
    const NoiseSchedule schedule =
        make_schedule(config.steps, config.zeta, config.c, config.coupling);
    const std::vector<double> taus = tau_grid_or_default(config);
    const auto n_tau = static_cast<Eigen::Index>(taus.size());

    struct Cell {
        double residual = 0.0, test_opt = 0.0;
        double mc_train = 0.0, mc_train_se = 0.0, mc_test = 0.0, mc_test_se = 0.0;
        Eigen::VectorXd train_curve, test_curve;
        Eigen::MatrixXd per_t;
    };
    const long cells = static_cast<long>(config.n_list.size()) * config.draws;
    std::vector<Cell> results(static_cast<std::size_t>(cells));

    parallel_cells(cells, config.threads, [&](long cell) {
        const long n = config.n_list[static_cast<std::size_t>(cell) / config.draws];
        const int draw = static_cast<int>(cell % config.draws);
        const std::uint64_t seed = cell_seed(config.seed, n, draw);
        Eigen::MatrixXd data = sample_gaussian(truth, n, seed);
        data.rowwise() -= data.colwise().mean(); // dynamics need mu0 = 0
        const EmpiricalStats stats = empirical_stats(data);
        Cell& out = results[static_cast<std::size_t>(cell)];
        out.residual = residual_loss(stats, schedule, config.objective);
        const LinearDenoiser opt = (config.objective == Objective::NoisePrediction)
                                       ? optimal_noise_denoiser(stats, schedule)
                                       : optimal_data_denoiser(stats, schedule);
        out.test_opt = test_loss(opt, truth);
        const LossCurves curves = gradient_flow_loss_curves(
            stats, truth, schedule, config.eta, taus, config.objective,
            config.t_slices, config.t_slices.empty() ? nullptr : &out.per_t);
        out.train_curve = curves.train;
        out.test_curve = curves.test;
        if (config.mc_draws > 0) {
            const auto train_mc =
                monte_carlo_loss(opt, data, config.mc_draws, rng::splitmix64(seed));
            const Eigen::MatrixXd fresh =
                sample_gaussian(truth, config.test_rows, rng::splitmix64(seed ^ 0xF5ull));
            const auto test_mc =
                monte_carlo_loss(opt, fresh, config.mc_draws, rng::splitmix64(seed ^ 0xA7ull));
            out.mc_train = train_mc.value;
            out.mc_train_se = train_mc.std_error;
            out.mc_test = test_mc.value;
            out.mc_test_se = test_mc.std_error;
        }
    });

    CsvTable table({"series", "k", "d", "N", "c", "draw", "tau", "t", "value"});
    const std::string k_str = config.spectrum_file.empty() ? format_double(config.k) : "";
    const std::string d_str = std::to_string(d);
    const std::string c_str = format_double(config.c);
    for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
        const long n = config.n_list[ni];
        const std::string n_str = std::to_string(n);
        Eigen::VectorXd mean_train = Eigen::VectorXd::Zero(n_tau);
        Eigen::VectorXd mean_test = Eigen::VectorXd::Zero(n_tau);
        Eigen::MatrixXd mean_per_t;
        if (!config.t_slices.empty())
            mean_per_t.setZero(n_tau, static_cast<Eigen::Index>(config.t_slices.size()));
        for (int draw = 0; draw < config.draws; ++draw) {
            const Cell& cell = results[ni * config.draws + draw];
            const std::string draw_str = std::to_string(draw);
            table.add_row({"residual_loss", k_str, d_str, n_str, c_str, draw_str, "",
                           "", format_double(cell.residual)});
            table.add_row({"test_loss_opt", k_str, d_str, n_str, c_str, draw_str, "",
                           "", format_double(cell.test_opt)});
            if (config.mc_draws > 0) {
                table.add_row({"train_loss_mc", k_str, d_str, n_str, c_str, draw_str,
                               "", "", format_double(cell.mc_train)});
                table.add_row({"train_loss_mc_se", k_str, d_str, n_str, c_str,
                               draw_str, "", "", format_double(cell.mc_train_se)});
                table.add_row({"test_loss_mc", k_str, d_str, n_str, c_str, draw_str,
                               "", "", format_double(cell.mc_test)});
                table.add_row({"test_loss_mc_se", k_str, d_str, n_str, c_str, draw_str,
                               "", "", format_double(cell.mc_test_se)});
            }
            mean_train += cell.train_curve;
            mean_test += cell.test_curve;
            if (!config.t_slices.empty()) mean_per_t += cell.per_t;
        }
        mean_train /= config.draws;
        mean_test /= config.draws;
        if (!config.t_slices.empty()) mean_per_t /= config.draws;
        Eigen::Index best = 0;
        for (Eigen::Index i = 0; i < n_tau; ++i) {
            if (mean_test[i] < mean_test[best]) best = i;
            table.add_row({"train_loss_tau", k_str, d_str, n_str, c_str, "",
                           format_double(taus[static_cast<std::size_t>(i)]), "",
                           format_double(mean_train[i])});
            table.add_row({"test_loss_tau", k_str, d_str, n_str, c_str, "",
                           format_double(taus[static_cast<std::size_t>(i)]), "",
                           format_double(mean_test[i])});
            for (std::size_t sj = 0; sj < config.t_slices.size(); ++sj)
                table.add_row({"test_loss_tau_t", k_str, d_str, n_str, c_str, "",
                               format_double(taus[static_cast<std::size_t>(i)]),
                               std::to_string(config.t_slices[sj]),
                               format_double(mean_per_t(i, static_cast<Eigen::Index>(sj)))});
        }
        table.add_row({"tau_star", k_str, d_str, n_str, c_str, "",
                       format_double(taus[static_cast<std::size_t>(best)]), "",
                       format_double(mean_test[best])});
    }
    table.write(config.out);
}

void run_compare_objectives(const ExperimentConfig& config) {
    const SpectralCovariance truth = truth_model(config);
    const auto d = truth.dim();
    const NoiseSchedule schedule =
        make_schedule(config.steps, config.zeta, config.c, config.coupling);
    const int T = schedule.steps();
    const std::vector<double> taus = tau_grid_or_default(config);
    const auto n_tau = static_cast<Eigen::Index>(taus.size());

    // Matched initialization: w(0) = 0 for the noise leg forces
    // v(0) = 1/sqrt(abar) on the data leg so that the two predictors satisfy
    // the x_t decomposition identity at every tau.
    Eigen::MatrixXd data_init(T, d);
    for (int t = 0; t < T; ++t)
        data_init.row(t).setConstant(1.0 / std::sqrt(schedule.alpha_bar[t]));

    struct Cell {
        Eigen::VectorXd loss_noise, loss_data, identity_residual;
    };
    const long cells = static_cast<long>(config.n_list.size()) * config.draws;
    std::vector<Cell> results(static_cast<std::size_t>(cells));

    parallel_cells(cells, config.threads, [&](long cell) {
        const long n = config.n_list[static_cast<std::size_t>(cell) / config.draws];
        const int draw = static_cast<int>(cell % config.draws);
        Eigen::MatrixXd data =
            sample_gaussian(truth, n, cell_seed(config.seed, n, draw));
        data.rowwise() -= data.colwise().mean();
        const EmpiricalStats stats = empirical_stats(data);
        Cell& out = results[static_cast<std::size_t>(cell)];
        out.loss_noise =
            gradient_flow_loss_curves(stats, truth, schedule, config.eta, taus,
                                      Objective::NoisePrediction)
                .test;
        out.loss_data.setZero(n_tau);
        out.identity_residual.setZero(n_tau);
        for (Eigen::Index i = 0; i < n_tau; ++i) {
            TrainingState state;
            state.tau = taus[static_cast<std::size_t>(i)];
            state.learning_rate = config.eta;
            const LinearDenoiser eps_model = gradient_flow_weights(
                stats, schedule, state, Objective::NoisePrediction);
            state.init_weights = data_init;
            const LinearDenoiser f_model = gradient_flow_weights(
                stats, schedule, state, Objective::DataPrediction);
            out.loss_data[i] = test_loss(f_model, truth);
            double worst = 0.0;
            for (int t = 0; t < T; ++t) {
                const double sa = std::sqrt(schedule.alpha_bar[t]);
                const double sn = std::sqrt(1.0 - schedule.alpha_bar[t]);
                for (Eigen::Index nu = 0; nu < d; ++nu)
                    worst = std::max(worst,
                                     std::abs(1.0 - sa * f_model.weights(t, nu) -
                                              sn * eps_model.weights(t, nu)));
            }
            out.identity_residual[i] = worst;
        }
    });

    CsvTable table({"series", "k", "d", "N", "c", "tau", "value"});
    const std::string k_str = config.spectrum_file.empty() ? format_double(config.k) : "";
    const std::string d_str = std::to_string(d);
    const std::string c_str = format_double(config.c);
    for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
        const std::string n_str = std::to_string(config.n_list[ni]);
        for (Eigen::Index i = 0; i < n_tau; ++i) {
            double noise = 0.0, data_loss = 0.0, residual = 0.0;
            for (int draw = 0; draw < config.draws; ++draw) {
                const Cell& cell = results[ni * config.draws + draw];
                noise += cell.loss_noise[i];
                data_loss += cell.loss_data[i];
                residual = std::max(residual, cell.identity_residual[i]);
            }
            const std::string tau_str = format_double(taus[static_cast<std::size_t>(i)]);
            table.add_row({"loss_noise", k_str, d_str, n_str, c_str, tau_str,
                           format_double(noise / config.draws)});
            table.add_row({"loss_data", k_str, d_str, n_str, c_str, tau_str,
                           format_double(data_loss / config.draws)});
            table.add_row({"eq_identity_residual", k_str, d_str, n_str, c_str, tau_str,
                           format_double(residual)});
        }
    }
    table.write(config.out);
}

void run_spectrum(const ExperimentConfig& config) {
    Eigen::VectorXd spectrum;
    if (!config.spectrum_file.empty()) {
        spectrum = empirical_stats(load_data_matrix(config.spectrum_file)).cov_eigenvalues;
    } else {
        spectrum = make_powerlaw_spectrum(config.d, config.k);
    }
    CsvTable table({"rank", "eigenvalue"});
    for (Eigen::Index i = 0; i < spectrum.size(); ++i)
        table.add_row({std::to_string(i + 1), format_double(spectrum[i])});
    table.write(config.out);
}

void run_experiment(const std::string& name, const std::string& config_path,
                    std::optional<std::uint64_t> seed_override,
                    std::optional<std::string> out_override,
                    std::optional<int> threads_override) {
    ExperimentConfig config = load_config(config_path);
    if (seed_override) config.seed = *seed_override;
    if (out_override) config.out = *out_override;
    if (threads_override) config.threads = *threads_override;
    if (name == "sweep-dkl") run_sweep_dkl(config);
    else if (name == "loss-curves") run_loss_curves(config);
    else if (name == "compare-objectives") run_compare_objectives(config);
    else if (name == "spectrum") run_spectrum(config);
    else throw config_error("unknown subcommand '" + name + "'");
}

} // namespace lindiff
