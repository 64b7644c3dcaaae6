// simulate.hpp: multi-segment Euler evolution with stride-based metric
// records and run-aborting health checks.

#pragma once

#include "qmkt/dynamics.hpp"
#include "qmkt/metrics.hpp"

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qmkt {

// Raised when a running state degrades past the health bounds; carries the
// step at which the run was abandoned.
struct health_error : std::runtime_error {
    std::int64_t step{0};
    health_error(std::int64_t step_, const std::string& message)
        : std::runtime_error("step " + std::to_string(step_) + ": " + message), step(step_) {}
};

struct ScheduleSegment {
    std::int64_t steps{0};
    LindbladCoefficients coefficients;
};

struct StepSchedule {
    std::vector<ScheduleSegment> segments;
    double dt{0.0};
};

struct SimulationResult {
    DensityMatrix final_state;
    std::vector<MetricsRecord> records;
    std::vector<double> segment_seconds;
};

inline constexpr double kHealthBound = 1e-6;
inline constexpr int kMinEigenvalueEvery = 10;  // records between eigenvalue samples

// Steps rho0 through the schedule's segments in order. Metrics are recorded
// at step 0, every record_stride steps, and at segment boundaries; the
// min-eigenvalue field is populated on every tenth record. Trace drift or
// Hermiticity drift beyond 1e-6 aborts the run.
inline SimulationResult simulate(const DensityMatrix& rho0, const StepSchedule& schedule,
                                 const OperatorSet& ops, const PriceObservable& x,
                                 std::int64_t record_stride) {
    if (record_stride < 1) {
        throw std::invalid_argument("simulate: need record_stride >= 1");
    }
    if (!(schedule.dt > 0.0)) {
        throw std::invalid_argument("simulate: need dt > 0");
    }
    for (const ScheduleSegment& segment : schedule.segments) {
        if (segment.steps < 1) {
            throw std::invalid_argument("simulate: segment step counts must be positive");
        }
    }
    if (rho0.dim() != ops.dim || rho0.dim() != x.dim) {
        throw std::invalid_argument("simulate: dimension mismatch");
    }

    SimulationResult result{rho0, {}, {}};
    if (schedule.segments.empty()) {
        return result;
    }

    DensityMatrix& rho = result.final_state;
    auto record = [&](std::int64_t step) {
        const bool with_min_eig = (result.records.size() % kMinEigenvalueEvery) == 0;
        result.records.push_back(
            make_metrics_record(step, static_cast<double>(step) * schedule.dt, rho, x, with_min_eig));
    };
    auto check_health = [&](std::int64_t step, bool full) {
        // Negated comparisons so that non-finite drift also aborts.
        if (!(rho.trace_error() <= kHealthBound)) {
            throw health_error(step, "trace drifted beyond health bound");
        }
        if (full && !(hermiticity_defect(rho.mat()).value <= kHealthBound)) {
            throw health_error(step, "Hermiticity drifted beyond health bound");
        }
    };

    record(0);
    std::int64_t step = 0;
    for (const ScheduleSegment& segment : schedule.segments) {
        const auto started = std::chrono::steady_clock::now();
        for (std::int64_t k = 0; k < segment.steps; ++k) {
            try {
                rho = euler_step(rho, segment.coefficients, ops, schedule.dt);
            } catch (const std::invalid_argument& e) {
                // euler_step's own state validation is tighter than the health
                // bound; a mid-run rejection is a health failure, not a usage bug.
                throw health_error(step + 1, e.what());
            }
            ++step;
            const bool at_boundary = (k + 1 == segment.steps);
            const bool at_stride = (step % record_stride) == 0;
            check_health(step, at_boundary || at_stride);
            if (at_stride || at_boundary) {
                record(step);
            }
        }
        const auto finished = std::chrono::steady_clock::now();
        result.segment_seconds.push_back(std::chrono::duration<double>(finished - started).count());
    }
    return result;
}

}  // namespace qmkt
