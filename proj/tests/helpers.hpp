// Shared test utilities: seeded random inputs and an independent dense
// matrix-product implementation of the generator used as the reference
// oracle for the shifted-block kernel.

#pragma once

#include "qmkt/dynamics.hpp"
#include "qmkt/market.hpp"
#include "qmkt/matrix.hpp"

#include <random>

namespace qmkt_test {

using namespace qmkt;

// The dissipator evaluated literally through matrix products. Slow and
// boundary-agnostic; everything fast is checked against this.
inline CMatrix reference_generator(const CMatrix& rho, const LindbladCoefficients& c,
                                   const OperatorSet& ops) {
    const CMatrix& au = ops.a_up;
    const CMatrix& ad = ops.a_down;
    const CMatrix bracket =
        c.sigma2 * (au * ad + ad * au) + c.nu_u2 * (au * au) + c.nu_d2 * (ad * ad);
    return c.sigma2 * (au * rho * ad + ad * rho * au) + c.nu_u2 * (au * rho * au) +
           c.nu_d2 * (ad * rho * ad) - 0.5 * (bracket * rho + rho * bracket);
}

inline CMatrix random_complex_matrix(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            m(i, j) = Complex(re, im);
        }
    }
    return m;
}

inline CMatrix random_hermitian(Eigen::Index n, std::uint64_t seed) {
    const CMatrix g = random_complex_matrix(n, seed);
    return 0.5 * (g + g.adjoint());
}

inline CMatrix random_traceless_hermitian(Eigen::Index n, std::uint64_t seed) {
    CMatrix m = random_hermitian(n, seed);
    const Complex shift = m.trace() / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, i) -= shift;
    }
    return m;
}

inline DensityMatrix random_density(Eigen::Index n, std::uint64_t seed) {
    const CMatrix g = random_complex_matrix(n, seed);
    CMatrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    CMatrix sym = 0.5 * (rho + rho.adjoint());
    return DensityMatrix(std::move(sym));
}

inline DensityMatrix random_diagonal_density(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.1, 1.0);
    RVector p(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        p(i) = uniform(rng);
    }
    p /= p.sum();
    CMatrix rho = CMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        rho(i, i) = p(i);
    }
    return DensityMatrix(std::move(rho));
}

inline CVector random_pure(Eigen::Index n, std::uint64_t seed) {
    return haar_random_unitary(n, seed).col(0);
}

// Hermitian circulant with trace 1: constant along wrapped diagonals, value
// eps_j/N on cyclic diagonal j with eps_{N-j} = conj(eps_j).
inline CMatrix random_circulant_hermitian_trace1(Eigen::Index n, std::uint64_t seed,
                                                 double amplitude) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    CVector c = CVector::Zero(n);
    c(0) = 1.0 / static_cast<double>(n);
    for (Eigen::Index j = 1; j <= n / 2; ++j) {
        const Complex v(amplitude * uniform(rng), amplitude * uniform(rng));
        if (2 * j == n) {
            c(j) = Complex(v.real(), 0.0);  // self-paired diagonal must be real
        } else {
            c(j) = v;
            c(n - j) = std::conj(v);
        }
    }
    CMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            m(i, j) = c((j - i + n) % n);
        }
    }
    return m;
}

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace qmkt_test
