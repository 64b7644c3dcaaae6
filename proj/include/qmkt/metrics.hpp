// metrics.hpp: scalar and structural diagnostics of a market state. Entropies,
// the two precision metrics, orbit signatures and their Toeplitz stationary
// states, off-diagonal power, excess kurtosis, distance to the maximum
// entropy state, and the attractor contraction check.

#pragma once

#include "qmkt/dynamics.hpp"
#include "qmkt/market.hpp"
#include "qmkt/matrix.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

namespace qmkt {

// --------------------------- entropies ---------------------------------------

// True when every off-diagonal entry is identically zero, not merely small.
// Diagonal states take exact code paths so that the classical endpoints of
// the precision metrics come out as exact zeros.
inline bool is_exactly_diagonal(const CMatrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (i != j && (m(i, j).real() != 0.0 || m(i, j).imag() != 0.0)) {
                return false;
            }
        }
    }
    return true;
}

// -sum p log p over clamped weights, natural log, 0 log 0 = 0.
inline double entropy_of_distribution(const RVector& p) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double v = std::min(1.0, std::max(0.0, p(i)));
        if (v > 0.0) {
            s -= v * std::log(v);
        }
    }
    return s;
}

struct EntropyReport {
    double entropy{0.0};
    double min_eigenvalue{0.0};
    bool positivity_violation{false};  // an eigenvalue fell below -1e-6
};

inline EntropyReport von_neumann_entropy_report(const DensityMatrix& rho) {
    RVector spectrum;
    if (is_exactly_diagonal(rho.mat())) {
        spectrum = rho.mat().diagonal().real();
    } else {
        Eigen::SelfAdjointEigenSolver<CMatrix> solver(rho.mat(), Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success) {
            throw std::runtime_error("von_neumann_entropy: eigensolver failed to converge");
        }
        spectrum = solver.eigenvalues();
    }
    EntropyReport report;
    report.min_eigenvalue = spectrum.minCoeff();
    report.positivity_violation = report.min_eigenvalue < -1e-6;
    report.entropy = entropy_of_distribution(spectrum);
    return report;
}

inline double von_neumann_entropy(const DensityMatrix& rho) {
    return von_neumann_entropy_report(rho).entropy;
}

// Shannon entropy of the diagonal price distribution p_i = rho_ii.
inline double shannon_entropy_prices(const DensityMatrix& rho) {
    const RVector p = rho.mat().diagonal().real();
    return entropy_of_distribution(p);
}

// --------------------------- precision metrics --------------------------------

// P_ent = 1 - S_vn / S_Shannon, clamped to [0,1]; a fully determined price
// (S_Shannon ~ 0) has no imprecision and maps to 0.
inline double precision_entropy_metric(const DensityMatrix& rho) {
    const double s_sh = shannon_entropy_prices(rho);
    if (s_sh < 1e-12) {
        return 0.0;
    }
    const double s_vn = von_neumann_entropy(rho);
    const double p = 1.0 - s_vn / s_sh;
    return std::min(1.0, std::max(0.0, p));
}

// Retained eigenpairs of a state: weight above threshold, vector alongside.
// Exactly diagonal states answer with the basis vectors themselves.
struct RetainedEigenpairs {
    RVector values;
    CMatrix vectors;
};

inline RetainedEigenpairs state_eigenpairs(const DensityMatrix& rho) {
    if (is_exactly_diagonal(rho.mat())) {
        return {rho.mat().diagonal().real(), CMatrix::Identity(rho.dim(), rho.dim())};
    }
    const HermitianEigen eig = hermitian_eigen(rho.mat(), rho.tolerance());
    return {eig.values, eig.vectors};
}

// P_var: the worst variance ratio between a retained eigenvector of the state
// and the state itself. Classical mixtures score 0 (every eigenvector is a
// price basis vector); pure states score 1 (the single eigenvector is the
// state).
inline double precision_variance_metric(const DensityMatrix& rho, const PriceObservable& x,
                                        double weight_threshold = 1e-10) {
    const RetainedEigenpairs eig = state_eigenpairs(rho);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        if (eig.values(i) > weight_threshold) {
            const CVector v = eig.vectors.col(i);
            worst = std::max(worst, price_variance(v, x));
        }
    }
    const double var_state = price_variance(rho.mat(), x);
    if (var_state < 1e-14) {
        if (worst < 1e-14) {
            return 0.0;
        }
        throw std::domain_error(
            "precision_variance_metric: state variance vanished while an eigenvector "
            "variance did not");
    }
    return worst / var_state;
}

// Uncentred companion: the worst ratio of second moments Tr[X^2 rho_i] over
// Tr[X^2 rho], with rho_i the retained eigenprojections. Does not vanish on
// classical mixtures; kept alongside the centred ratio for comparison.
inline double precision_variance_second_moment(const DensityMatrix& rho,
                                               const PriceObservable& x,
                                               double weight_threshold = 1e-10) {
    const CMatrix x2 = x.matrix * x.matrix;
    const RetainedEigenpairs eig = state_eigenpairs(rho);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        if (eig.values(i) > weight_threshold) {
            const CVector v = eig.vectors.col(i);
            worst = std::max(worst, (v.adjoint() * x2 * v).value().real());
        }
    }
    const double denom = (x2 * rho.mat()).trace().real();
    if (std::abs(denom) < 1e-14) {
        if (worst < 1e-14) {
            return 0.0;
        }
        throw std::domain_error(
            "precision_variance_second_moment: state second moment vanished while an "
            "eigenvector second moment did not");
    }
    return worst / denom;
}

// --------------------------- orbits and stationary states --------------------

// Conserved off-diagonal sums eps_j = sum_i rho_{i,i+j}; eps_0 is the trace.
// Hard-wall signatures sum true off-diagonals; periodic ones wrap mod N.
struct OrbitSignature {
    Eigen::Index dim{0};
    CVector sums;
};

inline OrbitSignature orbit_signature(const CMatrix& rho,
                                      Boundary boundary = Boundary::HardWall) {
    const Eigen::Index n = rho.rows();
    if (rho.cols() != n) {
        throw std::invalid_argument("orbit_signature: matrix must be square");
    }
    OrbitSignature sig;
    sig.dim = n;
    sig.sums = CVector::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Complex s = 0.0;
        if (boundary == Boundary::HardWall) {
            for (Eigen::Index i = 0; i + j < n; ++i) {
                s += rho(i, i + j);
            }
        } else {
            for (Eigen::Index i = 0; i < n; ++i) {
                s += rho(i, (i + j) % n);
            }
        }
        sig.sums(j) = s;
    }
    return sig;
}

inline OrbitSignature orbit_signature(const DensityMatrix& rho,
                                      Boundary boundary = Boundary::HardWall) {
    return orbit_signature(rho.mat(), boundary);
}

struct ToeplitzResult {
    CMatrix matrix;
    double min_eigenvalue{0.0};  // PSD is not guaranteed for arbitrary signatures
};

// Toeplitz state of an orbit: 1/N on the diagonal, eps_j/(N-j) along the j-th
// superdiagonal, conjugates below. Applying orbit_signature to the result
// recovers the input signature.
inline ToeplitzResult toeplitz_stationary(const OrbitSignature& sig) {
    const Eigen::Index n = sig.dim;
    if (n < 1 || sig.sums.size() != n) {
        throw std::invalid_argument("toeplitz_stationary: malformed signature");
    }
    if (std::abs(sig.sums(0) - Complex(1.0, 0.0)) > 1e-9) {
        throw std::invalid_argument("toeplitz_stationary: eps_0 must be 1");
    }
    CMatrix t = CMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        t(i, i) = 1.0 / static_cast<double>(n);
    }
    for (Eigen::Index j = 1; j < n; ++j) {
        const Complex v = sig.sums(j) / static_cast<double>(n - j);
        for (Eigen::Index i = 0; i + j < n; ++i) {
            t(i, i + j) = v;
            t(i + j, i) = std::conj(v);
        }
    }
    ToeplitzResult result;
    result.min_eigenvalue = min_eigenvalue(t);
    result.matrix = std::move(t);
    return result;
}

// ||D_j|| = sum_i |rho_{i,i+j}|^2 along the j-th superdiagonal.
inline double offdiagonal_power(const CMatrix& rho, Eigen::Index j) {
    const Eigen::Index n = rho.rows();
    if (j < 0 || j >= n) {
        throw std::invalid_argument("offdiagonal_power: need 0 <= j < N");
    }
    double power = 0.0;
    for (Eigen::Index i = 0; i + j < n; ++i) {
        power += std::norm(rho(i, i + j));
    }
    return power;
}

inline double offdiagonal_power(const DensityMatrix& rho, Eigen::Index j) {
    return offdiagonal_power(rho.mat(), j);
}

// --------------------------- distribution shape ------------------------------

struct PriceMoments {
    double mean{0.0};
    double mu2{0.0};
    double mu4{0.0};
};

// Central moments of the diagonal price distribution p_i = rho_ii.
inline PriceMoments diagonal_price_moments(const DensityMatrix& rho, const PriceObservable& x) {
    if (rho.dim() != x.dim) {
        throw std::invalid_argument("diagonal_price_moments: dimension mismatch");
    }
    const RVector p = rho.mat().diagonal().real();
    PriceMoments m;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        m.mean += p(i) * x.values(i);
    }
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double d = x.values(i) - m.mean;
        m.mu2 += p(i) * d * d;
        m.mu4 += p(i) * d * d * d * d;
    }
    return m;
}

// mu4 / mu2^2 - 3 of the diagonal price distribution.
inline double excess_kurtosis(const DensityMatrix& rho, const PriceObservable& x) {
    const PriceMoments m = diagonal_price_moments(rho, x);
    if (m.mu2 <= 1e-14) {
        throw std::domain_error("excess_kurtosis: degenerate distribution, mu2 ~ 0");
    }
    return m.mu4 / (m.mu2 * m.mu2) - 3.0;
}

inline double frobenius_distance_to_max_entropy(const DensityMatrix& rho) {
    const Eigen::Index n = rho.dim();
    CMatrix diff = rho.mat();
    for (Eigen::Index i = 0; i < n; ++i) {
        diff(i, i) -= 1.0 / static_cast<double>(n);
    }
    return diff.norm();
}

// --------------------------- attractor contraction ---------------------------

struct ContractionReport {
    double before{0.0};     // ||M_delta||_F
    double after{0.0};      // ||step(T + M_delta) - T||_F
    bool contracted{false};
};

// One-step Frobenius contraction toward a stationary state T under a
// Hermitian traceless perturbation.
inline ContractionReport contraction_check(const CMatrix& t, const CMatrix& perturbation,
                                           const LindbladCoefficients& coeffs,
                                           const OperatorSet& ops, double dt) {
    if (t.rows() != perturbation.rows() || t.cols() != perturbation.cols()) {
        throw std::invalid_argument("contraction_check: dimension mismatch");
    }
    if (hermiticity_defect(perturbation).value > kDefaultTolerance) {
        throw std::invalid_argument("contraction_check: perturbation must be Hermitian");
    }
    if (std::abs(perturbation.trace()) > kDefaultTolerance) {
        throw std::invalid_argument("contraction_check: perturbation must be traceless");
    }
    const DensityMatrix perturbed(t + perturbation);  // rejects invalid perturbed states
    const DensityMatrix stepped = euler_step(perturbed, coeffs, ops, dt);
    ContractionReport report;
    report.before = perturbation.norm();
    report.after = (stepped.mat() - t).norm();
    report.contracted = report.after < report.before;
    return report;
}

// --------------------------- per-record bundle -------------------------------

// One row of an emitted time series. Optional fields are left empty when the
// quantity is undefined (kurtosis of a degenerate distribution) or skipped
// (min eigenvalue off its sampling stride).
struct MetricsRecord {
    std::int64_t step{0};
    double time{0.0};
    double s_vn{0.0};
    double s_shannon{0.0};
    double p_ent{0.0};
    std::optional<double> excess_kurtosis;
    double d2_power{0.0};
    double frob_to_maxent{0.0};
    double trace_error{0.0};
    std::optional<double> min_eigenvalue;
};

inline MetricsRecord make_metrics_record(std::int64_t step, double time, const DensityMatrix& rho,
                                         const PriceObservable& x, bool with_min_eigenvalue) {
    MetricsRecord rec;
    rec.step = step;
    rec.time = time;
    const EntropyReport entropy = von_neumann_entropy_report(rho);
    rec.s_vn = entropy.entropy;
    rec.s_shannon = shannon_entropy_prices(rho);
    if (rec.s_shannon < 1e-12) {
        rec.p_ent = 0.0;
    } else {
        rec.p_ent = std::min(1.0, std::max(0.0, 1.0 - rec.s_vn / rec.s_shannon));
    }
    const PriceMoments moments = diagonal_price_moments(rho, x);
    if (moments.mu2 > 1e-14) {
        rec.excess_kurtosis = moments.mu4 / (moments.mu2 * moments.mu2) - 3.0;
    }
    rec.d2_power = rho.dim() > 2 ? offdiagonal_power(rho, 2) : 0.0;
    rec.frob_to_maxent = frobenius_distance_to_max_entropy(rho);
    rec.trace_error = rho.trace_error();
    if (with_min_eigenvalue) {
        rec.min_eigenvalue = entropy.min_eigenvalue;
    }
    return rec;
}

}  // namespace qmkt
