// dynamics.hpp: the dissipative evolution engine. Generator application in
// both boundary modes, shift-form generator, Euler stepping in Schroedinger
// and Heisenberg pictures, GKSL standard form, complete-positivity and
// classicality checks, and an exact superoperator propagator for small N.

#pragma once

#include "qmkt/market.hpp"
#include "qmkt/matrix.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace qmkt {

// --------------------------- generator --------------------------------------

// dM/dt for the dissipator
//   sigma^2 (A_u M A_d + A_d M A_u - 1/2 {A_u A_d + A_d A_u, M})
//   + nu_u^2 (A_u M A_u - 1/2 {A_u^2, M})
//   + nu_d^2 (A_d M A_d - 1/2 {A_d^2, M})
// with zero drift. Works on any square matrix; linear in M. Implemented with
// shifted-block arithmetic rather than matrix products, which is what makes
// the 10^5-step runs cheap.
inline CMatrix apply_generator(const CMatrix& m, const LindbladCoefficients& c,
                               const OperatorSet& ops) {
    const Eigen::Index n = ops.dim;
    if (m.rows() != n || m.cols() != n) {
        throw std::invalid_argument("apply_generator: dimension mismatch");
    }
    if (!ops.canonical) {
        // General operator pair: evaluate the dissipator from the stored
        // matrices. Costs dense products, so only transformed sets take it.
        if (ops.a_up.rows() != n || ops.a_down.rows() != n) {
            throw std::invalid_argument("apply_generator: operator dimension mismatch");
        }
        const CMatrix& au = ops.a_up;
        const CMatrix& ad = ops.a_down;
        const CMatrix bracket =
            c.sigma2 * (au * ad + ad * au) + c.nu_u2 * (au * au) + c.nu_d2 * (ad * ad);
        CMatrix g = c.sigma2 * (au * m * ad + ad * m * au);
        g += c.nu_u2 * (au * m * au) + c.nu_d2 * (ad * m * ad);
        g -= 0.5 * (bracket * m + m * bracket);
        return g;
    }
    CMatrix g = CMatrix::Zero(n, n);
    if (ops.boundary == Boundary::HardWall) {
        const Eigen::Index k = n - 1;
        // sigma^2 A_u M A_d and A_d M A_u: diagonal-preserving shifts.
        g.block(1, 1, k, k) += c.sigma2 * m.block(0, 0, k, k);
        g.block(0, 0, k, k) += c.sigma2 * m.block(1, 1, k, k);
        // nu parts: move weight two off-diagonals at a time.
        g.block(1, 0, k, k) += c.nu_u2 * m.block(0, 1, k, k);
        g.block(0, 1, k, k) += c.nu_d2 * m.block(1, 0, k, k);
        // -(sigma^2/2) {A_u A_d + A_d A_u, M}; the bracket is diag(d) with
        // d = 1 at both walls and 2 inside.
        RVector d = RVector::Constant(n, 2.0);
        d(0) = 1.0;
        d(n - 1) = 1.0;
        g.noalias() -= (0.5 * c.sigma2) * (d.asDiagonal() * m + m * d.asDiagonal());
        if (n > 2) {
            const Eigen::Index k2 = n - 2;
            // -(nu_u^2/2) {A_u^2, M}
            g.block(2, 0, k2, n) -= (0.5 * c.nu_u2) * m.block(0, 0, k2, n);
            g.block(0, 0, n, k2) -= (0.5 * c.nu_u2) * m.block(0, 2, n, k2);
            // -(nu_d^2/2) {A_d^2, M}
            g.block(0, 0, k2, n) -= (0.5 * c.nu_d2) * m.block(2, 0, k2, n);
            g.block(0, 2, n, k2) -= (0.5 * c.nu_d2) * m.block(0, 0, n, k2);
        }
    } else {
        auto w = [n](Eigen::Index i) { return (i % n + n) % n; };
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                Complex v = c.sigma2 * (m(w(i - 1), w(j - 1)) + m(w(i + 1), w(j + 1)) - 2.0 * m(i, j));
                v += c.nu_u2 * (m(w(i - 1), w(j + 1)) -
                                0.5 * (m(w(i - 2), j) + m(i, w(j + 2))));
                v += c.nu_d2 * (m(w(i + 1), w(j - 1)) -
                                0.5 * (m(w(i + 2), j) + m(i, w(j - 2))));
                g(i, j) = v;
            }
        }
    }
    return g;
}

inline CMatrix apply_generator(const DensityMatrix& rho, const LindbladCoefficients& c,
                               const OperatorSet& ops) {
    return apply_generator(rho.mat(), c, ops);
}

// Boundary-free shift form: L(M)_ij = M_{(i-1)(j-1)} + M_{(i+1)(j+1)} - 2 M_ij,
// out-of-range indices read as zero.
inline CMatrix apply_shift_L(const CMatrix& m) {
    const Eigen::Index n = m.rows();
    if (m.cols() != n) {
        throw std::invalid_argument("apply_shift_L: matrix must be square");
    }
    CMatrix out = -2.0 * m;
    if (n > 1) {
        const Eigen::Index k = n - 1;
        out.block(1, 1, k, k) += m.block(0, 0, k, k);
        out.block(0, 0, k, k) += m.block(1, 1, k, k);
    }
    return out;
}

// --------------------------- time stepping ----------------------------------

// Explicit Euler step with re-symmetrization. Positivity is monitored
// elsewhere, never enforced here.
inline DensityMatrix euler_step(const DensityMatrix& rho, const LindbladCoefficients& c,
                                const OperatorSet& ops, double dt) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("euler_step: need dt > 0");
    }
    CMatrix next = rho.mat() + dt * apply_generator(rho.mat(), c, ops);
    CMatrix sym = 0.5 * (next + next.adjoint());
    return DensityMatrix(std::move(sym), rho.tolerance());
}

// Rate vector of the classical diffusion dp_i = sigma^2 (p_{i+1} + p_{i-1} - 2 p_i),
// with one-sided differences at hard walls.
inline RVector apply_classical_generator(const RVector& p, double sigma2, Boundary boundary) {
    const Eigen::Index n = p.size();
    if (n < 2) {
        throw std::invalid_argument("apply_classical_generator: need n >= 2");
    }
    if (std::abs(p.sum() - 1.0) > kDefaultTolerance) {
        throw std::invalid_argument("apply_classical_generator: p must sum to 1");
    }
    RVector rates(n);
    if (boundary == Boundary::HardWall) {
        rates(0) = sigma2 * (p(1) - p(0));
        rates(n - 1) = sigma2 * (p(n - 2) - p(n - 1));
        for (Eigen::Index i = 1; i + 1 < n; ++i) {
            rates(i) = sigma2 * (p(i + 1) + p(i - 1) - 2.0 * p(i));
        }
    } else {
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index up = (i + 1) % n;
            const Eigen::Index dn = (i + n - 1) % n;
            rates(i) = sigma2 * (p(up) + p(dn) - 2.0 * p(i));
        }
    }
    return rates;
}

// Heisenberg-picture step: F' = F + dt G*(F) with G* the trace adjoint of the
// generator. Under the bilinear pairing Tr[F G(rho)], each jump term
// A F B pairs back to B F A, and the symmetric coefficient layout maps the
// dissipator onto itself, so the evaluation is shared for any operator pair.
inline CMatrix heisenberg_step(const CMatrix& f, const LindbladCoefficients& c,
                               const OperatorSet& ops, double dt) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("heisenberg_step: need dt > 0");
    }
    CMatrix next = f + dt * apply_generator(f, c, ops);
    return 0.5 * (next + next.adjoint());
}

// --------------------------- GKSL standard form ------------------------------

// Rotated jump operators L_1 = cos(t)A_u - sin(t)A_d, L_2 = sin(t)A_u + cos(t)A_d
// and their rates; reassembling sum_i rate_i (L_i M L_i^dag - 1/2 {L_i^dag L_i, M})
// reproduces the generator.
struct GKSLForm {
    double theta{0.0};
    CMatrix l1;
    CMatrix l2;
    double rate1{0.0};
    double rate2{0.0};
    LindbladCoefficients source;
};

// Diagonalizes the coefficient pairing for the symmetric case nu_u^2 = nu_d^2
// (real). The rotation construction does not extend to asymmetric nu, which
// is rejected; the plain generator supports it regardless.
inline GKSLForm gksl_standard_form(const LindbladCoefficients& c, const OperatorSet& ops) {
    constexpr double tol = 1e-12;
    if (std::abs(c.nu_u2.imag()) > tol || std::abs(c.nu_d2.imag()) > tol ||
        std::abs(c.nu_u2 - c.nu_d2) > tol) {
        throw std::invalid_argument(
            "gksl_standard_form: unsupported asymmetric case, needs real nu_u^2 = nu_d^2");
    }
    const double nu2 = c.nu_u2.real();
    GKSLForm form;
    form.source = c;
    if (nu2 == 0.0) {
        form.theta = 0.0;
        form.l1 = ops.a_up;
        form.l2 = ops.a_down;
        form.rate1 = c.sigma2;
        form.rate2 = c.sigma2;
        return form;
    }
    form.theta = std::numbers::pi / 4.0;
    const double s = std::sin(form.theta);
    const double co = std::cos(form.theta);
    form.l1 = co * ops.a_up - s * ops.a_down;
    form.l2 = s * ops.a_up + co * ops.a_down;
    form.rate1 = c.sigma2 - nu2;
    form.rate2 = c.sigma2 + nu2;
    return form;
}

// Dissipator assembled from a GKSL form; used to cross-check the form against
// the direct generator on probe bases.
inline CMatrix apply_gksl_dissipator(const CMatrix& m, const GKSLForm& form) {
    CMatrix out = CMatrix::Zero(m.rows(), m.cols());
    const std::array<const CMatrix*, 2> ls{&form.l1, &form.l2};
    const std::array<double, 2> rates{form.rate1, form.rate2};
    for (int i = 0; i < 2; ++i) {
        const CMatrix& l = *ls[i];
        const CMatrix ldl = l.adjoint() * l;
        out += rates[i] * (l * m * l.adjoint() - 0.5 * (ldl * m + m * ldl));
    }
    return out;
}

// --------------------------- structure checks --------------------------------

struct CPReport {
    bool completely_positive{false};
    std::array<Complex, 2> c_matrix_eigenvalues{};  // of [[s2, -nu_u2], [-nu_d2, s2]]
};

// Flag follows the inequality nu_u^2 + nu_d^2 <= sigma^2; the eigenvalues of
// the coefficient matrix are reported alongside for diagnostics.
inline CPReport is_completely_positive(const LindbladCoefficients& c) {
    CPReport report;
    report.completely_positive = (c.nu_u2 + c.nu_d2).real() <= c.sigma2;
    const Complex root = std::sqrt(c.nu_u2 * c.nu_d2);
    report.c_matrix_eigenvalues = {Complex(c.sigma2, 0.0) - root, Complex(c.sigma2, 0.0) + root};
    return report;
}

// Classical evolution criterion: every column of every jump operator carries
// at most one nonzero entry, i.e. each L_i maps basis vectors to scalar
// multiples of basis vectors.
inline bool is_classical_evolution(const GKSLForm& form, double tol = 1e-12) {
    for (const CMatrix* l : {&form.l1, &form.l2}) {
        for (Eigen::Index j = 0; j < l->cols(); ++j) {
            int nonzero = 0;
            for (Eigen::Index i = 0; i < l->rows(); ++i) {
                if (std::abs((*l)(i, j)) > tol) {
                    ++nonzero;
                }
            }
            if (nonzero > 1) {
                return false;
            }
        }
    }
    return true;
}

// --------------------------- exact small-N oracle ----------------------------

inline CMatrix kronecker(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

// Column-stacking superoperator of the generator: vec(A M B) = (B^T kron A) vec(M).
inline CMatrix generator_superoperator(const LindbladCoefficients& c, const OperatorSet& ops) {
    const Eigen::Index n = ops.dim;
    const CMatrix id = CMatrix::Identity(n, n);
    const CMatrix& au = ops.a_up;
    const CMatrix& ad = ops.a_down;
    CMatrix s = c.sigma2 * (kronecker(ad.transpose(), au) + kronecker(au.transpose(), ad));
    s += c.nu_u2 * kronecker(au.transpose(), au);
    s += c.nu_d2 * kronecker(ad.transpose(), ad);
    const CMatrix bracket =
        c.sigma2 * (au * ad + ad * au) + c.nu_u2 * (au * au) + c.nu_d2 * (ad * ad);
    s -= 0.5 * (kronecker(id, bracket) + kronecker(bracket.transpose(), id));
    return s;
}

// Matrix exponential by scaling-and-squaring over a Taylor expansion.
inline CMatrix taylor_expm(const CMatrix& m) {
    const Eigen::Index n = m.rows();
    double scale_norm = m.cwiseAbs().rowwise().sum().maxCoeff();  // induced inf-norm
    int squarings = 0;
    while (scale_norm > 0.5 && squarings < 64) {
        scale_norm *= 0.5;
        ++squarings;
    }
    const CMatrix scaled = m / std::pow(2.0, squarings);
    CMatrix result = CMatrix::Identity(n, n);
    CMatrix term = CMatrix::Identity(n, n);
    for (int k = 1; k <= 40; ++k) {
        term = (term * scaled) / static_cast<double>(k);
        result += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18) {
            break;
        }
    }
    for (int k = 0; k < squarings; ++k) {
        result = result * result;
    }
    return result;
}

// Exact propagation exp(t S) applied to vec(rho0); the independent reference
// for the Euler integrator. Superoperator size caps N at 12.
inline DensityMatrix exact_propagate_small(const DensityMatrix& rho0,
                                           const LindbladCoefficients& c, const OperatorSet& ops,
                                           double t) {
    const Eigen::Index n = ops.dim;
    if (n > 12) {
        throw std::invalid_argument("exact_propagate_small: N must be <= 12");
    }
    if (rho0.dim() != n) {
        throw std::invalid_argument("exact_propagate_small: dimension mismatch");
    }
    if (t < 0.0) {
        throw std::invalid_argument("exact_propagate_small: need t >= 0");
    }
    const CMatrix propagator = taylor_expm(t * generator_superoperator(c, ops));
    CVector vec(n * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        vec.segment(j * n, n) = rho0.mat().col(j);
    }
    const CVector out = propagator * vec;
    CMatrix rho(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        rho.col(j) = out.segment(j * n, n);
    }
    CMatrix sym = 0.5 * (rho + rho.adjoint());
    return DensityMatrix(std::move(sym), rho0.tolerance());
}

}  // namespace qmkt
