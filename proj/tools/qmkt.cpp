// qmkt: command-line front end. Subcommands: run (scenario to CSV time
// series), one-step (single-step matrix dump), oracle (Euler-vs-exact
// convergence table), analyze (recompute metrics on a dumped state).
// Exit codes: 0 success, 1 config error, 2 health-check abort,
// 3 internal-consistency error.

#include "CLI11.hpp"

#include "qmkt/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw qmkt::config_error(0, "cannot read file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

qmkt::ScenarioConfig load_config(const std::string& path,
                                 const std::optional<std::uint64_t>& seed_override) {
    qmkt::ScenarioConfig cfg = qmkt::parse_config(read_file(path));
    if (seed_override) {
        cfg.seed = *seed_override;
    }
    return cfg;
}

void emit(const std::string& content, const std::string& output_path) {
    if (output_path.empty()) {
        std::cout << content;
    } else {
        qmkt::write_text_atomic(output_path, content);
        std::cerr << "wrote " << output_path << "\n";
    }
}

void warn_on_cp_violation(const qmkt::ScenarioConfig& cfg) {
    for (std::size_t i = 0; i < cfg.segments.size(); ++i) {
        const qmkt::LindbladCoefficients coeffs =
            qmkt::effective_coefficients(cfg, cfg.segments[i].mode);
        const qmkt::CPReport report = qmkt::is_completely_positive(coeffs);
        if (!report.completely_positive) {
            std::fprintf(stderr,
                         "warning: segment %zu coefficients violate the complete positivity "
                         "bound nu_u^2 + nu_d^2 <= sigma^2 (%.6g > %.6g); proceeding\n",
                         i + 1, (coeffs.nu_u2 + coeffs.nu_d2).real(), coeffs.sigma2);
        }
    }
}

int run_command(const std::string& config_path,
                const std::optional<std::uint64_t>& seed_override) {
    const qmkt::ScenarioConfig cfg = load_config(config_path, seed_override);
    warn_on_cp_violation(cfg);
    const qmkt::RunResult result = qmkt::run_scenario(cfg);
    emit(result.csv, cfg.output_path);
    std::ostringstream note;
    note << "run: " << result.summary.total_steps << " steps in "
         << result.summary.segment_seconds.size() << " segments (";
    for (std::size_t i = 0; i < result.summary.segment_seconds.size(); ++i) {
        if (i > 0) {
            note << ", ";
        }
        note << result.summary.segment_seconds[i] << " s";
    }
    note << ")\n";
    note << "run: max trace error " << result.summary.max_trace_error << "\n";
    note << "run: d2 peak at step " << result.summary.d2_peak_step << "\n";
    if (result.summary.positivity_dip) {
        note << "run: sampled minimum eigenvalue dipped below -1e-6\n";
    }
    std::cerr << note.str();
    return 0;
}

int one_step_command(const std::string& config_path,
                     const std::optional<std::uint64_t>& seed_override) {
    const qmkt::ScenarioConfig cfg = load_config(config_path, seed_override);
    warn_on_cp_violation(cfg);
    emit(qmkt::one_step_report(cfg), cfg.output_path);
    return 0;
}

int oracle_command(Eigen::Index n, double t, const std::string& dts_text) {
    std::vector<double> dts;
    for (const std::string& part : qmkt::detail::split(dts_text, ',')) {
        dts.push_back(qmkt::detail::parse_double(part, 0, "--dts"));
    }
    const qmkt::LindbladCoefficients coeffs = qmkt::coefficients_from_scalars(0.4, 0.2, 0.2);
    const qmkt::OracleReport report = qmkt::oracle_check(n, coeffs, t, dts);
    std::printf("%-12s %-14s %s\n", "dt", "max_error", "order");
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        if (i == 0) {
            std::printf("%-12g %-14.6e %s\n", report.rows[i].dt, report.rows[i].max_error, "-");
        } else {
            std::printf("%-12g %-14.6e %.3f\n", report.rows[i].dt, report.rows[i].max_error,
                        report.orders[i - 1]);
        }
    }
    return 0;
}

int analyze_command(const std::string& dump_path, double x_min, double x_max) {
    qmkt::CMatrix m;
    try {
        m = qmkt::parse_matrix_dump(read_file(dump_path));
    } catch (const std::invalid_argument& e) {
        throw qmkt::config_error(0, e.what());
    }
    if (m.rows() != m.cols()) {
        throw qmkt::config_error(0, "dump is not a square matrix");
    }
    std::optional<qmkt::DensityMatrix> rho;
    try {
        rho.emplace(m);
    } catch (const std::invalid_argument& e) {
        throw qmkt::config_error(0, std::string("dump is not a valid density matrix: ") + e.what());
    }
    const qmkt::PriceObservable x = qmkt::make_price_observable(m.rows(), x_min, x_max);
    const qmkt::EntropyReport entropy = qmkt::von_neumann_entropy_report(*rho);

    auto print = [](const char* name, double v) { std::printf("%s = %.17g\n", name, v); };
    std::printf("dim = %ld\n", static_cast<long>(rho->dim()));
    print("trace_error", rho->trace_error());
    print("min_eigenvalue", entropy.min_eigenvalue);
    print("s_vn", entropy.entropy);
    print("s_shannon", qmkt::shannon_entropy_prices(*rho));
    print("p_ent", qmkt::precision_entropy_metric(*rho));
    print("p_var", qmkt::precision_variance_metric(*rho, x));
    try {
        print("excess_kurtosis", qmkt::excess_kurtosis(*rho, x));
    } catch (const std::domain_error&) {
        std::printf("excess_kurtosis = undefined\n");
    }
    print("d2_power", rho->dim() > 2 ? qmkt::offdiagonal_power(*rho, 2) : 0.0);
    print("frob_to_maxent", qmkt::frobenius_distance_to_max_entropy(*rho));
    const qmkt::OrbitSignature sig = qmkt::orbit_signature(*rho);
    double max_offdiag_sum = 0.0;
    for (Eigen::Index j = 1; j < sig.dim; ++j) {
        max_offdiag_sum = std::max(max_offdiag_sum, std::abs(sig.sums(j)));
    }
    print("max_orbit_sum", max_offdiag_sum);
    if (entropy.positivity_violation) {
        std::fprintf(stderr, "warning: an eigenvalue fell below -1e-6\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open-market Lindblad simulator and analysis toolkit"};
    app.require_subcommand(1);

    std::string run_config;
    std::optional<std::uint64_t> run_seed;
    CLI::App* run = app.add_subcommand("run", "Run a scenario and emit its CSV time series");
    run->add_option("config", run_config, "scenario config file")->required();
    run->add_option("--seed", run_seed, "override the config seed");

    std::string step_config;
    std::optional<std::uint64_t> step_seed;
    CLI::App* one_step =
        app.add_subcommand("one-step", "Apply a single time step and dump the state");
    one_step->add_option("config", step_config, "scenario config file")->required();
    one_step->add_option("--seed", step_seed, "override the config seed");

    Eigen::Index oracle_n = 5;
    double oracle_t = 1.0;
    std::string oracle_dts = "0.01,0.005,0.0025,0.00125";
    CLI::App* oracle =
        app.add_subcommand("oracle", "Euler-vs-exact convergence table at small N");
    oracle->add_option("--n", oracle_n, "dimension (<= 12)");
    oracle->add_option("--t", oracle_t, "evolution horizon");
    oracle->add_option("--dts", oracle_dts, "comma-separated time steps");

    std::string analyze_path;
    double analyze_x_min = -1.0;
    double analyze_x_max = 1.0;
    CLI::App* analyze =
        app.add_subcommand("analyze", "Recompute all metrics on a dumped state");
    analyze->add_option("dump", analyze_path, "matrix dump file")->required();
    analyze->add_option("--x-min", analyze_x_min, "grid lower end");
    analyze->add_option("--x-max", analyze_x_max, "grid upper end");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return run_command(run_config, run_seed);
        }
        if (one_step->parsed()) {
            return one_step_command(step_config, step_seed);
        }
        if (oracle->parsed()) {
            return oracle_command(oracle_n, oracle_t, oracle_dts);
        }
        if (analyze->parsed()) {
            return analyze_command(analyze_path, analyze_x_min, analyze_x_max);
        }
    } catch (const qmkt::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const qmkt::health_error& e) {
        std::fprintf(stderr, "health check failed: %s\n", e.what());
        return 2;
    } catch (const qmkt::consistency_error& e) {
        std::fprintf(stderr, "internal consistency error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
    return 0;
}
