// market.hpp: shift operators, price observables (standard and misaligned),
// initial states, and Lindblad coefficients built from an environment state.

#pragma once

#include "qmkt/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qmkt {

// Raised when two independent computations of the same quantity disagree.
struct consistency_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --------------------------- shift operators --------------------------------

enum class Boundary { HardWall, Periodic };

// Ladder pair A_u/A_d. Hard-wall: A_u = sum_{i=1}^{N-1} |f_{i+1}><f_i|,
// nilpotent at the edges. Periodic: cyclic shift, A_u A_d = A_d A_u = I.
struct OperatorSet {
    Eigen::Index dim{0};
    Boundary boundary{Boundary::HardWall};
    CMatrix a_up;
    CMatrix a_down;
    // True only for the unmodified shift pair, where the generator may use the
    // shifted-block kernel. Any transformed set must leave this false so the
    // dense product route is taken instead.
    bool canonical{false};
};

inline OperatorSet make_shift_operators(Eigen::Index n, Boundary boundary) {
    if (n < 2) {
        throw std::invalid_argument("make_shift_operators: need n >= 2");
    }
    CMatrix up = CMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        up(i + 1, i) = 1.0;
    }
    if (boundary == Boundary::Periodic) {
        up(0, n - 1) = 1.0;
    }
    CMatrix down = up.adjoint();
    return {n, boundary, std::move(up), std::move(down), true};
}

// --------------------------- price grids ------------------------------------

// Evenly spaced grid with exact endpoints; hits 0 exactly on symmetric grids
// of odd length.
inline RVector make_grid(Eigen::Index n, double x_min, double x_max) {
    if (n < 2) {
        throw std::invalid_argument("make_grid: need n >= 2");
    }
    if (!(x_min < x_max)) {
        throw std::invalid_argument("make_grid: need x_min < x_max");
    }
    RVector x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = static_cast<double>(n - 1 - i) / static_cast<double>(n - 1);
        const double b = static_cast<double>(i) / static_cast<double>(n - 1);
        x(i) = x_min * a + x_max * b;
    }
    return x;
}

// --------------------------- price observables ------------------------------

enum class ObservableKind { StandardDiagonal, Misaligned };

// Price observable X with its measurement frame. For the standard observable
// the frame is the f-basis; the misaligned one blends neighbouring basis
// vectors, |v_i> = eps|f_{i-1}> + sqrt(1-2eps^2)|f_i> + eps|f_{i+1}>.
// Moments are taken against the frame: <X^p> = sum_i x_i^p <v_i|rho|v_i>.
struct PriceObservable {
    Eigen::Index dim{0};
    RVector values;          // x_1 < ... < x_N
    CMatrix matrix;          // sum_i x_i |v_i><v_i|
    ObservableKind kind{ObservableKind::StandardDiagonal};
    double epsilon{0.0};
    CMatrix frame;           // column i holds |v_i>
};

inline void check_ascending(const RVector& values, const char* who) {
    for (Eigen::Index i = 0; i + 1 < values.size(); ++i) {
        if (!(values(i) < values(i + 1))) {
            throw std::invalid_argument(std::string(who) + ": values must be strictly increasing");
        }
    }
}

inline PriceObservable make_price_observable(Eigen::Index n, double x_min, double x_max) {
    const RVector x = make_grid(n, x_min, x_max);
    PriceObservable obs;
    obs.dim = n;
    obs.values = x;
    obs.matrix = CMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        obs.matrix(i, i) = x(i);
    }
    obs.kind = ObservableKind::StandardDiagonal;
    obs.epsilon = 0.0;
    obs.frame = CMatrix::Identity(n, n);
    return obs;
}

// Boundary rows (i=1, i=N) drop the out-of-range neighbour and renormalize
// to unit length; interior rows carry the full three-term blend.
inline PriceObservable make_misaligned_observable(Eigen::Index n, const RVector& values,
                                                  double epsilon) {
    if (n < 3) {
        throw std::invalid_argument("make_misaligned_observable: need n >= 3");
    }
    if (values.size() != n) {
        throw std::invalid_argument("make_misaligned_observable: values size must equal n");
    }
    check_ascending(values, "make_misaligned_observable");
    if (!(epsilon >= 0.0) || !(epsilon <= 1.0 / std::sqrt(2.0))) {
        throw std::invalid_argument("make_misaligned_observable: need 0 <= epsilon <= 1/sqrt(2)");
    }
    const double core = std::sqrt(1.0 - 2.0 * epsilon * epsilon);
    CMatrix frame = CMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        frame(i, i) = core;
        if (i > 0) {
            frame(i - 1, i) = epsilon;
        }
        if (i + 1 < n) {
            frame(i + 1, i) = epsilon;
        }
        const double norm = frame.col(i).norm();
        frame.col(i) /= norm;
    }
    PriceObservable obs;
    obs.dim = n;
    obs.values = values;
    obs.matrix = CMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        obs.matrix += values(i) * (frame.col(i) * frame.col(i).adjoint());
    }
    obs.kind = ObservableKind::Misaligned;
    obs.epsilon = epsilon;
    obs.frame = std::move(frame);
    return obs;
}

// --------------------------- frame moments ----------------------------------

// Weights w_i = <v_i|rho|v_i> (real for Hermitian rho).
inline RVector frame_weights(const CMatrix& rho, const PriceObservable& x) {
    if (rho.rows() != x.dim || rho.cols() != x.dim) {
        throw std::invalid_argument("frame_weights: dimension mismatch");
    }
    RVector w(x.dim);
    if (x.kind == ObservableKind::StandardDiagonal) {
        w = rho.diagonal().real();
    } else {
        for (Eigen::Index i = 0; i < x.dim; ++i) {
            w(i) = (x.frame.col(i).adjoint() * rho * x.frame.col(i)).value().real();
        }
    }
    return w;
}

// Weights for a pure state |psi>, w_i = |<v_i|psi>|^2.
inline RVector frame_weights(const CVector& psi, const PriceObservable& x) {
    if (psi.size() != x.dim) {
        throw std::invalid_argument("frame_weights: dimension mismatch");
    }
    RVector w(x.dim);
    for (Eigen::Index i = 0; i < x.dim; ++i) {
        w(i) = std::norm(x.frame.col(i).dot(psi));
    }
    return w;
}

inline double moment_from_weights(const RVector& w, const RVector& values, int power) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        m += w(i) * std::pow(values(i), power);
    }
    return m;
}

inline double price_mean(const RVector& w, const PriceObservable& x) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        m += w(i) * x.values(i);
    }
    return m;
}

inline double price_variance(const RVector& w, const PriceObservable& x) {
    const double mean = price_mean(w, x);
    double m2 = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        m2 += w(i) * x.values(i) * x.values(i);
    }
    return m2 - mean * mean;
}

inline double price_mean(const CMatrix& rho, const PriceObservable& x) {
    return price_mean(frame_weights(rho, x), x);
}

inline double price_variance(const CMatrix& rho, const PriceObservable& x) {
    return price_variance(frame_weights(rho, x), x);
}

inline double price_variance(const CVector& psi, const PriceObservable& x) {
    return price_variance(frame_weights(psi, x), x);
}

// --------------------------- initial states ---------------------------------

// |f_k><f_k| with 1-based k.
inline DensityMatrix dirac_state(Eigen::Index n, Eigen::Index k) {
    if (k < 1 || k > n) {
        throw std::invalid_argument("dirac_state: index out of range");
    }
    CMatrix rho = CMatrix::Zero(n, n);
    rho(k - 1, k - 1) = 1.0;
    return DensityMatrix(std::move(rho));
}

// Diagonal state with entries proportional to exp(-x_i^2 / (2 sigma0^2)),
// renormalized so the trace is 1.
inline DensityMatrix gaussian_state(Eigen::Index n, const RVector& values, double sigma0) {
    if (values.size() != n) {
        throw std::invalid_argument("gaussian_state: values size must equal n");
    }
    if (!(sigma0 > 0.0)) {
        throw std::invalid_argument("gaussian_state: need sigma0 > 0");
    }
    RVector q(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        q(i) = std::exp(-values(i) * values(i) / (2.0 * sigma0 * sigma0));
    }
    const double total = q.sum();
    if (!(total > 0.0)) {
        throw std::invalid_argument("gaussian_state: weights vanished, sigma0 too small for grid");
    }
    CMatrix rho = CMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        rho(i, i) = q(i) / total;
    }
    return DensityMatrix(std::move(rho));
}

// --------------------------- Lindblad coefficients ---------------------------

// Dissipator coefficients. sigma2 is always real; the environment-derived
// path may produce a conjugate pair nu_u2 = conj(nu_d2), which the generator
// consumes as given.
struct LindbladCoefficients {
    double sigma2{0.0};
    Complex nu_u2{0.0, 0.0};
    Complex nu_d2{0.0, 0.0};
};

inline LindbladCoefficients coefficients_from_scalars(double sigma, double nu_u, double nu_d) {
    return {sigma * sigma, Complex(nu_u * nu_u, 0.0), Complex(nu_d * nu_d, 0.0)};
}

// K-level risk-appetite environment: reduced state r (Hermitian, PSD,
// trace 1) and coupling strength kappa.
struct EnvironmentState {
    Eigen::Index levels{0};
    CMatrix r;
    double kappa{0.0};
};

inline void validate_environment(const EnvironmentState& env, double tol = kDefaultTolerance) {
    if (env.levels < 1 || env.r.rows() != env.levels || env.r.cols() != env.levels) {
        throw std::invalid_argument("EnvironmentState: r must be levels x levels");
    }
    if (!(env.kappa >= 0.0)) {
        throw std::invalid_argument("EnvironmentState: kappa must be nonnegative");
    }
    if (hermiticity_defect(env.r).value > tol) {
        throw std::invalid_argument("EnvironmentState: r not Hermitian");
    }
    if (std::abs(env.r.trace() - Complex(1.0, 0.0)) > tol) {
        throw std::invalid_argument("EnvironmentState: r must have trace 1");
    }
    if (min_eigenvalue(env.r, tol) < -tol) {
        throw std::invalid_argument("EnvironmentState: r must be positive semidefinite");
    }
}

// Coefficients from the environment state, computed twice: once by the
// closed-form sums over r's entries, once by trace formulas against
// explicitly built environment ladder operators B_u/B_d. Disagreement
// beyond 1e-12 signals a construction bug and is raised as such.
inline LindbladCoefficients environment_coefficients(const EnvironmentState& env) {
    validate_environment(env);
    const Eigen::Index k = env.levels;

    // Closed-form sums.
    Complex sigma2_sum = 0.0;
    for (Eigen::Index l = 0; l + 1 < k; ++l) {
        sigma2_sum += env.r(l, l);
    }
    sigma2_sum *= env.kappa;
    Complex nu_u2_sum = 0.0;
    Complex nu_d2_sum = 0.0;
    for (Eigen::Index l = 0; l + 2 < k; ++l) {
        nu_u2_sum += env.r(l, l + 2);
        nu_d2_sum += env.r(l + 2, l);
    }
    nu_u2_sum *= 2.0 * env.kappa;
    nu_d2_sum *= 2.0 * env.kappa;

    // Trace formulas over the ladder operators.
    CMatrix b_up = CMatrix::Zero(k, k);
    for (Eigen::Index l = 0; l + 1 < k; ++l) {
        b_up(l + 1, l) = 1.0;
    }
    const CMatrix b_down = b_up.adjoint();
    const Complex sigma2_tr = env.kappa * (b_down * b_up * env.r).trace();
    const Complex nu_u2_tr = 2.0 * env.kappa * (b_up * b_up * env.r).trace();
    const Complex nu_d2_tr = 2.0 * env.kappa * (b_down * b_down * env.r).trace();

    const double gap = std::max({std::abs(sigma2_sum - sigma2_tr),
                                 std::abs(nu_u2_sum - nu_u2_tr),
                                 std::abs(nu_d2_sum - nu_d2_tr)});
    if (gap > 1e-12) {
        std::ostringstream msg;
        msg << "environment_coefficients: sum and trace formulas disagree by " << gap;
        throw consistency_error(msg.str());
    }
    return {sigma2_sum.real(), nu_u2_sum, nu_d2_sum};
}

}  // namespace qmkt
