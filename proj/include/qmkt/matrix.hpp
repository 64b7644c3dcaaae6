// matrix.hpp: dense complex matrices, Hermitian eigendecomposition, norms,
// and seeded Haar-random unitaries. Numerical substrate for the rest of qmkt.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <complex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace qmkt {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kDefaultTolerance = 1e-9;

// --------------------------- basic helpers ----------------------------------

// Matrix unit |f_i><f_j| with 1-based basis labels.
inline CMatrix matrix_unit(Eigen::Index dim, Eigen::Index i, Eigen::Index j) {
    if (i < 1 || i > dim || j < 1 || j > dim) {
        throw std::invalid_argument("matrix_unit: index out of range");
    }
    CMatrix m = CMatrix::Zero(dim, dim);
    m(i - 1, j - 1) = 1.0;
    return m;
}

inline double frobenius_norm(const CMatrix& m) {
    return m.norm();
}

// Largest |M(i,j) - conj(M(j,i))| together with its 1-based entry pair.
struct HermiticityDefect {
    double value{0.0};
    Eigen::Index row{1};
    Eigen::Index col{1};
};

inline HermiticityDefect hermiticity_defect(const CMatrix& m) {
    HermiticityDefect worst;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            const double d = std::abs(m(i, j) - std::conj(m(j, i)));
            if (d > worst.value) {
                worst = {d, i + 1, j + 1};
            }
        }
    }
    return worst;
}

inline bool is_hermitian(const CMatrix& m, double tol = kDefaultTolerance) {
    return m.rows() == m.cols() && hermiticity_defect(m).value <= tol;
}

// --------------------------- eigendecomposition -----------------------------

struct HermitianEigen {
    RVector values;    // ascending
    CMatrix vectors;   // unitary, columns match values
};

// Eigendecomposition of a Hermitian matrix, M = V diag(lambda) V†.
// Rejects non-Hermitian input, naming the worst-offending entry pair.
inline HermitianEigen hermitian_eigen(const CMatrix& m, double tol = kDefaultTolerance) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("hermitian_eigen: matrix must be square");
    }
    const HermiticityDefect defect = hermiticity_defect(m);
    if (defect.value > tol) {
        std::ostringstream msg;
        msg << "hermitian_eigen: input not Hermitian, |M(" << defect.row << "," << defect.col
            << ") - conj(M(" << defect.col << "," << defect.row << "))| = " << defect.value;
        throw std::invalid_argument(msg.str());
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(m);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("hermitian_eigen: eigensolver failed to converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

// Smallest eigenvalue of a Hermitian matrix.
inline double min_eigenvalue(const CMatrix& m, double tol = kDefaultTolerance) {
    if (hermiticity_defect(m).value > tol) {
        throw std::invalid_argument("min_eigenvalue: input not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("min_eigenvalue: eigensolver failed to converge");
    }
    return solver.eigenvalues()(0);
}

// --------------------------- random unitaries -------------------------------

// Haar-distributed random unitary: QR of a standard complex Gaussian matrix
// with the diagonal phases of R folded back into Q. Deterministic per seed.
inline CMatrix haar_random_unitary(Eigen::Index dim, std::uint64_t seed) {
    if (dim < 1) {
        throw std::invalid_argument("haar_random_unitary: dim must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CMatrix g(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            g(i, j) = Complex(re, im);
        }
    }
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ();
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < dim; ++j) {
        const Complex d = r(j, j);
        const double mag = std::abs(d);
        q.col(j) *= (mag > 0.0) ? d / mag : Complex(1.0, 0.0);
    }
    return q;
}

// --------------------------- density matrices -------------------------------

// Hermitian, trace-one state. Positivity is not checked at construction;
// call min_eigenvalue() on demand.
class DensityMatrix {
public:
    DensityMatrix(CMatrix matrix, double tolerance = kDefaultTolerance)
        : matrix_(std::move(matrix)), tolerance_(tolerance) {
        if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 1) {
            throw std::invalid_argument("DensityMatrix: matrix must be square and non-empty");
        }
        const HermiticityDefect defect = hermiticity_defect(matrix_);
        if (!(defect.value <= tolerance_)) {
            std::ostringstream msg;
            msg << "DensityMatrix: not Hermitian, defect " << defect.value << " at ("
                << defect.row << "," << defect.col << ")";
            throw std::invalid_argument(msg.str());
        }
        // Negated comparison so that a non-finite trace also fails.
        const double trace_err = std::abs(matrix_.trace() - Complex(1.0, 0.0));
        if (!(trace_err <= tolerance_)) {
            std::ostringstream msg;
            msg << "DensityMatrix: trace deviates from 1 by " << trace_err;
            throw std::invalid_argument(msg.str());
        }
    }

    const CMatrix& mat() const { return matrix_; }
    Eigen::Index dim() const { return matrix_.rows(); }
    double tolerance() const { return tolerance_; }

    // |trace - 1|, recomputed on the stored matrix.
    double trace_error() const { return std::abs(matrix_.trace() - Complex(1.0, 0.0)); }

    double min_eigenvalue() const { return qmkt::min_eigenvalue(matrix_, tolerance_); }

private:
    CMatrix matrix_;
    double tolerance_;
};

}  // namespace qmkt
