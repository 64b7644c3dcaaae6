// scenario.hpp: experiment front end. Flat key=value scenario configs, the
// run and one-step drivers, CSV and matrix-dump serialization, and the
// Euler-vs-exact convergence report.

#pragma once

#include "qmkt/dynamics.hpp"
#include "qmkt/market.hpp"
#include "qmkt/matrix.hpp"
#include "qmkt/metrics.hpp"
#include "qmkt/simulate.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmkt {

// Raised on malformed or contradictory scenario configuration; line is
// 1-based, 0 when the problem spans the whole file.
struct config_error : std::runtime_error {
    int line{0};
    config_error(int line_, const std::string& message)
        : std::runtime_error(line_ > 0 ? "line " + std::to_string(line_) + ": " + message
                                       : message),
          line(line_) {}
};

// --------------------------- configuration -----------------------------------

enum class SegmentMode { Classical, NonClassical };

struct ConfigSegment {
    std::int64_t steps{0};
    SegmentMode mode{SegmentMode::NonClassical};
};

enum class InitialKind { Dirac, Gaussian };

struct ScenarioConfig {
    Eigen::Index n{0};
    double x_min{-1.0};
    double x_max{1.0};
    double dt{0.0};
    double sigma{0.0};
    double nu_u{0.0};
    double nu_d{0.0};
    std::vector<ConfigSegment> segments;
    InitialKind initial_kind{InitialKind::Dirac};
    Eigen::Index dirac_index{1};
    double gaussian_sigma0{0.0};
    Boundary boundary{Boundary::HardWall};
    std::int64_t record_stride{100};
    std::uint64_t seed{0};
    bool type2_conjugation{false};
    std::string output_path;  // empty: CSV goes to standard output
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return "";
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline double parse_double(const std::string& value, int line, const std::string& key) {
    const std::string v = trim(value);
    if (v.empty()) {
        throw config_error(line, "empty value for " + key);
    }
    char* end = nullptr;
    const double parsed = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size()) {
        throw config_error(line, "malformed number for " + key + ": '" + v + "'");
    }
    if (!std::isfinite(parsed)) {
        throw config_error(line, "non-finite value for " + key);
    }
    return parsed;
}

inline std::int64_t parse_int(const std::string& value, int line, const std::string& key) {
    const std::string v = trim(value);
    if (v.empty()) {
        throw config_error(line, "empty value for " + key);
    }
    char* end = nullptr;
    const long long parsed = std::strtoll(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size()) {
        throw config_error(line, "malformed integer for " + key + ": '" + v + "'");
    }
    return parsed;
}

inline bool parse_bool(const std::string& value, int line, const std::string& key) {
    const std::string v = trim(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no" || v == "off") {
        return false;
    }
    throw config_error(line, "malformed boolean for " + key + ": '" + v + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    parts.push_back(current);
    return parts;
}

}  // namespace detail

// Parses the flat `key = value` scenario format. `#` starts a comment;
// unknown and duplicate keys are rejected; every diagnostic carries the
// offending 1-based line number.
inline ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig cfg;
    std::map<std::string, int> seen;  // key -> line
    std::istringstream stream(text);
    std::string raw;
    int line = 0;
    while (std::getline(stream, raw)) {
        ++line;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) {
            raw = raw.substr(0, hash);
        }
        const std::string entry = detail::trim(raw);
        if (entry.empty()) {
            continue;
        }
        const auto eq = entry.find('=');
        if (eq == std::string::npos) {
            throw config_error(line, "expected 'key = value', got '" + entry + "'");
        }
        const std::string key = detail::trim(entry.substr(0, eq));
        const std::string value = detail::trim(entry.substr(eq + 1));
        if (key.empty()) {
            throw config_error(line, "missing key before '='");
        }
        if (!seen.emplace(key, line).second) {
            throw config_error(line, "duplicate key: " + key);
        }

        if (key == "n") {
            cfg.n = static_cast<Eigen::Index>(detail::parse_int(value, line, key));
        } else if (key == "x_min") {
            cfg.x_min = detail::parse_double(value, line, key);
        } else if (key == "x_max") {
            cfg.x_max = detail::parse_double(value, line, key);
        } else if (key == "dt") {
            cfg.dt = detail::parse_double(value, line, key);
        } else if (key == "sigma") {
            cfg.sigma = detail::parse_double(value, line, key);
        } else if (key == "nu_u") {
            cfg.nu_u = detail::parse_double(value, line, key);
        } else if (key == "nu_d") {
            cfg.nu_d = detail::parse_double(value, line, key);
        } else if (key == "segments") {
            cfg.segments.clear();
            if (!value.empty()) {
                for (const std::string& part : detail::split(value, ',')) {
                    const std::string item = detail::trim(part);
                    if (item.empty()) {
                        throw config_error(line, "empty segment entry");
                    }
                    const auto colon = item.find(':');
                    if (colon == std::string::npos) {
                        throw config_error(line, "segment entry must be 'steps:mode', got '" +
                                                     item + "'");
                    }
                    ConfigSegment segment;
                    segment.steps = detail::parse_int(item.substr(0, colon), line, "segments");
                    const std::string mode = detail::trim(item.substr(colon + 1));
                    if (mode == "classical") {
                        segment.mode = SegmentMode::Classical;
                    } else if (mode == "nonclassical") {
                        segment.mode = SegmentMode::NonClassical;
                    } else {
                        throw config_error(line, "segment mode must be 'classical' or "
                                                 "'nonclassical', got '" + mode + "'");
                    }
                    if (segment.steps < 1) {
                        throw config_error(line, "segment step count must be positive");
                    }
                    cfg.segments.push_back(segment);
                }
            }
        } else if (key == "initial") {
            const auto open = value.find('(');
            const auto close = value.rfind(')');
            if (open == std::string::npos || close == std::string::npos || close < open ||
                close + 1 != value.size()) {
                throw config_error(line, "initial must be dirac(k) or gaussian(sigma0)");
            }
            const std::string kind = detail::trim(value.substr(0, open));
            const std::string arg = value.substr(open + 1, close - open - 1);
            if (kind == "dirac") {
                cfg.initial_kind = InitialKind::Dirac;
                cfg.dirac_index = static_cast<Eigen::Index>(detail::parse_int(arg, line, key));
            } else if (kind == "gaussian") {
                cfg.initial_kind = InitialKind::Gaussian;
                cfg.gaussian_sigma0 = detail::parse_double(arg, line, key);
            } else {
                throw config_error(line, "initial must be dirac(k) or gaussian(sigma0)");
            }
        } else if (key == "boundary_mode") {
            if (value == "hard-wall") {
                cfg.boundary = Boundary::HardWall;
            } else if (value == "periodic") {
                cfg.boundary = Boundary::Periodic;
            } else {
                throw config_error(line, "boundary_mode must be 'hard-wall' or 'periodic'");
            }
        } else if (key == "record_stride") {
            cfg.record_stride = detail::parse_int(value, line, key);
            if (cfg.record_stride < 1) {
                throw config_error(line, "record_stride must be >= 1");
            }
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(detail::parse_int(value, line, key));
        } else if (key == "type2_conjugation") {
            cfg.type2_conjugation = detail::parse_bool(value, line, key);
        } else if (key == "output_path") {
            cfg.output_path = value;
        } else {
            throw config_error(line, "unknown key: " + key);
        }
    }

    for (const char* required : {"n", "dt", "sigma", "nu_u", "nu_d", "segments", "initial"}) {
        if (seen.find(required) == seen.end()) {
            throw config_error(0, std::string("missing required key: ") + required);
        }
    }
    auto line_of = [&](const char* key) { return seen.at(key); };
    if (cfg.n < 2) {
        throw config_error(line_of("n"), "n must be >= 2");
    }
    if (!(cfg.dt > 0.0)) {
        throw config_error(line_of("dt"), "dt must be positive");
    }
    if (!(cfg.x_min < cfg.x_max)) {
        throw config_error(seen.count("x_min") ? seen.at("x_min") : 0, "x_min must be below x_max");
    }
    if (cfg.initial_kind == InitialKind::Dirac &&
        (cfg.dirac_index < 1 || cfg.dirac_index > cfg.n)) {
        throw config_error(line_of("initial"), "dirac index out of range");
    }
    if (cfg.initial_kind == InitialKind::Gaussian && !(cfg.gaussian_sigma0 > 0.0)) {
        throw config_error(line_of("initial"), "gaussian sigma0 must be positive");
    }
    return cfg;
}

// --------------------------- serialization -----------------------------------

namespace detail {

inline std::string format_double(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

inline std::string format_complex(Complex v) {
    char buffer[128];
    std::snprintf(buffer, sizeof(buffer), "%.17g%+.17gj", v.real(), v.imag());
    return buffer;
}

}  // namespace detail

// Plain-text dump: one matrix row per line, entries as re+imj pairs with 17
// significant digits, space separated.
inline std::string dump_matrix(const CMatrix& m) {
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                out += ' ';
            }
            out += detail::format_complex(m(i, j));
        }
        out += '\n';
    }
    return out;
}

inline CMatrix parse_matrix_dump(const std::string& text) {
    std::vector<std::vector<Complex>> rows;
    std::istringstream stream(text);
    std::string line;
    while (std::getline(stream, line)) {
        const std::string entry_line = detail::trim(line);
        if (entry_line.empty()) {
            continue;
        }
        std::vector<Complex> row;
        std::istringstream tokens(entry_line);
        std::string token;
        while (tokens >> token) {
            if (token.empty() || token.back() != 'j') {
                throw std::invalid_argument("parse_matrix_dump: entry must end in 'j': " + token);
            }
            const std::string body = token.substr(0, token.size() - 1);
            std::size_t cut = std::string::npos;
            for (std::size_t p = 1; p < body.size(); ++p) {
                if ((body[p] == '+' || body[p] == '-') && body[p - 1] != 'e' && body[p - 1] != 'E') {
                    cut = p;
                }
            }
            if (cut == std::string::npos) {
                throw std::invalid_argument("parse_matrix_dump: malformed entry: " + token);
            }
            const std::string re = body.substr(0, cut);
            const std::string im = body.substr(cut);
            char* end = nullptr;
            const double re_v = std::strtod(re.c_str(), &end);
            if (end != re.c_str() + re.size()) {
                throw std::invalid_argument("parse_matrix_dump: malformed entry: " + token);
            }
            const double im_v = std::strtod(im.c_str(), &end);
            if (end != im.c_str() + im.size()) {
                throw std::invalid_argument("parse_matrix_dump: malformed entry: " + token);
            }
            row.emplace_back(re_v, im_v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw std::invalid_argument("parse_matrix_dump: ragged rows");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw std::invalid_argument("parse_matrix_dump: empty dump");
    }
    CMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return m;
}

inline const char* kCsvHeader =
    "step,time,s_vn,s_shannon,p_ent,excess_kurtosis,d2_power,frob_to_maxent,trace_error,"
    "min_eigenvalue";

inline std::string format_csv(const std::vector<MetricsRecord>& records) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const MetricsRecord& r : records) {
        out += std::to_string(r.step);
        out += ',';
        out += detail::format_double(r.time);
        out += ',';
        out += detail::format_double(r.s_vn);
        out += ',';
        out += detail::format_double(r.s_shannon);
        out += ',';
        out += detail::format_double(r.p_ent);
        out += ',';
        if (r.excess_kurtosis) {
            out += detail::format_double(*r.excess_kurtosis);
        }
        out += ',';
        out += detail::format_double(r.d2_power);
        out += ',';
        out += detail::format_double(r.frob_to_maxent);
        out += ',';
        out += detail::format_double(r.trace_error);
        out += ',';
        if (r.min_eigenvalue) {
            out += detail::format_double(*r.min_eigenvalue);
        }
        out += '\n';
    }
    return out;
}

// Atomic write: the content lands under a temporary name in the target
// directory and is renamed into place.
inline void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string temp = path + ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("write_text_atomic: cannot open " + temp);
        }
        out << content;
        if (!out.flush()) {
            throw std::runtime_error("write_text_atomic: write failed for " + temp);
        }
    }
    if (std::rename(temp.c_str(), path.c_str()) != 0) {
        throw std::runtime_error("write_text_atomic: rename failed for " + path);
    }
}

// --------------------------- scenario drivers --------------------------------

inline LindbladCoefficients effective_coefficients(const ScenarioConfig& cfg, SegmentMode mode) {
    if (mode == SegmentMode::Classical) {
        return coefficients_from_scalars(cfg.sigma, 0.0, 0.0);
    }
    return coefficients_from_scalars(cfg.sigma, cfg.nu_u, cfg.nu_d);
}

// Operator set for a scenario; Type II conjugates both shift operators by a
// seeded Haar unitary.
inline OperatorSet scenario_operators(const ScenarioConfig& cfg) {
    OperatorSet ops = make_shift_operators(cfg.n, cfg.boundary);
    if (cfg.type2_conjugation) {
        const CMatrix u = haar_random_unitary(cfg.n, cfg.seed);
        ops.a_up = u.adjoint() * ops.a_up * u;
        ops.a_down = u.adjoint() * ops.a_down * u;
        ops.canonical = false;
    }
    return ops;
}

inline DensityMatrix scenario_initial_state(const ScenarioConfig& cfg) {
    if (cfg.initial_kind == InitialKind::Dirac) {
        return dirac_state(cfg.n, cfg.dirac_index);
    }
    const RVector grid = make_grid(cfg.n, cfg.x_min, cfg.x_max);
    return gaussian_state(cfg.n, grid, cfg.gaussian_sigma0);
}

inline StepSchedule scenario_schedule(const ScenarioConfig& cfg) {
    StepSchedule schedule;
    schedule.dt = cfg.dt;
    for (const ConfigSegment& segment : cfg.segments) {
        schedule.segments.push_back({segment.steps, effective_coefficients(cfg, segment.mode)});
    }
    return schedule;
}

struct RunSummary {
    std::string final_state_dump;
    std::vector<double> segment_seconds;
    bool cp_warning{false};
    bool positivity_dip{false};     // some sampled min eigenvalue fell below -1e-6
    double max_trace_error{0.0};
    std::int64_t d2_peak_step{0};
    std::int64_t total_steps{0};
};

struct RunResult {
    std::vector<MetricsRecord> records;
    std::string csv;
    RunSummary summary;
};

// Full protocol driver: evolves the configured initial state through every
// segment and collects the CSV time series plus a run summary.
inline RunResult run_scenario(const ScenarioConfig& cfg) {
    const OperatorSet ops = scenario_operators(cfg);
    const PriceObservable x = make_price_observable(cfg.n, cfg.x_min, cfg.x_max);
    const DensityMatrix rho0 = scenario_initial_state(cfg);
    const StepSchedule schedule = scenario_schedule(cfg);

    RunResult result;
    for (const ScheduleSegment& segment : schedule.segments) {
        if (!is_completely_positive(segment.coefficients).completely_positive) {
            result.summary.cp_warning = true;
        }
        result.summary.total_steps += segment.steps;
    }

    SimulationResult sim = simulate(rho0, schedule, ops, x, cfg.record_stride);
    result.records = std::move(sim.records);
    result.summary.segment_seconds = std::move(sim.segment_seconds);
    result.summary.final_state_dump = dump_matrix(sim.final_state.mat());

    double best_d2 = -1.0;
    for (const MetricsRecord& r : result.records) {
        result.summary.max_trace_error = std::max(result.summary.max_trace_error, r.trace_error);
        if (r.min_eigenvalue && *r.min_eigenvalue < -1e-6) {
            result.summary.positivity_dip = true;
        }
        if (r.d2_power > best_d2) {
            best_d2 = r.d2_power;
            result.summary.d2_peak_step = r.step;
        }
    }
    result.csv = format_csv(result.records);
    return result;
}

// One-step demonstration: requires a single one-step segment and returns the
// dump of the post-step state.
inline std::string one_step_report(const ScenarioConfig& cfg) {
    if (cfg.segments.size() != 1 || cfg.segments.front().steps != 1) {
        throw config_error(0, "one-step report requires exactly one segment of one step");
    }
    const OperatorSet ops = scenario_operators(cfg);
    const DensityMatrix rho0 = scenario_initial_state(cfg);
    const LindbladCoefficients coeffs = effective_coefficients(cfg, cfg.segments.front().mode);
    const DensityMatrix rho1 = euler_step(rho0, coeffs, ops, cfg.dt);
    return dump_matrix(rho1.mat());
}

// --------------------------- integrator cross-check --------------------------

struct OracleRow {
    double dt{0.0};
    double max_error{0.0};  // max entry gap, Euler vs exact propagation
};

struct OracleReport {
    std::vector<OracleRow> rows;
    std::vector<double> orders;  // empirical order between consecutive rows
};

// Euler-vs-exact convergence table. Each dt must tile the horizon t into an
// integral number of steps.
inline OracleReport oracle_check(Eigen::Index n, const LindbladCoefficients& coeffs, double t,
                                 const std::vector<double>& dt_list,
                                 Boundary boundary = Boundary::HardWall,
                                 const std::optional<DensityMatrix>& initial = std::nullopt) {
    if (n > 12) {
        throw std::invalid_argument("oracle_check: N must be <= 12");
    }
    if (t < 0.0) {
        throw std::invalid_argument("oracle_check: need t >= 0");
    }
    const OperatorSet ops = make_shift_operators(n, boundary);
    const DensityMatrix rho0 = initial ? *initial : dirac_state(n, (n + 1) / 2);
    if (rho0.dim() != n) {
        throw std::invalid_argument("oracle_check: initial state dimension mismatch");
    }
    const DensityMatrix exact = exact_propagate_small(rho0, coeffs, ops, t);

    OracleReport report;
    for (double dt : dt_list) {
        if (!(dt > 0.0)) {
            throw std::invalid_argument("oracle_check: need dt > 0");
        }
        const double steps_real = t / dt;
        const auto steps = static_cast<std::int64_t>(std::llround(steps_real));
        if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9) {
            throw std::invalid_argument("oracle_check: dt must divide t into whole steps");
        }
        DensityMatrix rho = rho0;
        for (std::int64_t k = 0; k < steps; ++k) {
            rho = euler_step(rho, coeffs, ops, dt);
        }
        const double err = (rho.mat() - exact.mat()).cwiseAbs().maxCoeff();
        report.rows.push_back({dt, err});
    }
    for (std::size_t k = 1; k < report.rows.size(); ++k) {
        const OracleRow& a = report.rows[k - 1];
        const OracleRow& b = report.rows[k];
        if (a.max_error > 0.0 && b.max_error > 0.0 && a.dt != b.dt) {
            report.orders.push_back(std::log(a.max_error / b.max_error) / std::log(a.dt / b.dt));
        } else {
            report.orders.push_back(0.0);
        }
    }
    return report;
}

}  // namespace qmkt
