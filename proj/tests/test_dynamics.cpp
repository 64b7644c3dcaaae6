#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "qmkt/dynamics.hpp"
#include "qmkt/metrics.hpp"

#include <cmath>
#include <vector>

using namespace qmkt;
using qmkt_test::max_abs_diff;
using qmkt_test::reference_generator;

namespace {

std::vector<LindbladCoefficients> coefficient_grid() {
    return {
        coefficients_from_scalars(0.4, 0.0, 0.0),
        coefficients_from_scalars(0.4, 0.36, 0.36),
        coefficients_from_scalars(0.4, 0.2, 0.2),
        LindbladCoefficients{0.25, Complex(0.03, 0.015), Complex(0.03, -0.015)},
    };
}

}  // namespace

TEST_CASE("block generator matches the dense product form") {
    for (Eigen::Index n : {2, 3, 5, 8, 21}) {
        for (Boundary b : {Boundary::HardWall, Boundary::Periodic}) {
            const OperatorSet ops = make_shift_operators(n, b);
            const CMatrix m = qmkt_test::random_hermitian(n, 100 + static_cast<std::uint64_t>(n));
            for (const LindbladCoefficients& c : coefficient_grid()) {
                const CMatrix fast = apply_generator(m, c, ops);
                const CMatrix slow = reference_generator(m, c, ops);
                REQUIRE(max_abs_diff(fast, slow) < 1e-14);
            }
        }
    }
}

TEST_CASE("conjugated operator sets evolve through the dense route") {
    const Eigen::Index n = 9;
    const CMatrix u = haar_random_unitary(n, 77);
    OperatorSet rotated = make_shift_operators(n, Boundary::HardWall);
    rotated.a_up = u.adjoint() * rotated.a_up * u;
    rotated.a_down = u.adjoint() * rotated.a_down * u;
    rotated.canonical = false;

    const OperatorSet bare = make_shift_operators(n, Boundary::HardWall);
    const CMatrix m = qmkt_test::random_hermitian(n, 78);
    for (const LindbladCoefficients& c : coefficient_grid()) {
        const CMatrix direct = apply_generator(m, c, rotated);
        const CMatrix via_basis_change =
            u.adjoint() * apply_generator(CMatrix(u * m * u.adjoint()), c, bare) * u;
        REQUIRE(max_abs_diff(direct, via_basis_change) < 1e-13);
    }

    // A conjugated step must not collapse onto the bare-shift pattern.
    const DensityMatrix rho0 = dirac_state(n, 5);
    const DensityMatrix stepped = euler_step(rho0, coefficients_from_scalars(0.4, 0.36, 0.36),
                                             rotated, 0.01);
    REQUIRE(std::abs(stepped.mat().trace() - Complex(1.0, 0.0)) < 1e-12);
    Eigen::Index populated = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            populated += std::abs(stepped.mat()(i, j)) > 1e-12;
        }
    }
    REQUIRE(populated > 20);
}

TEST_CASE("the uniform state is exactly stationary in both boundary modes") {
    const LindbladCoefficients c = coefficients_from_scalars(0.4, 0.36, 0.36);
    for (Eigen::Index n : {2, 4, 21}) {
        const CMatrix uniform = CMatrix::Identity(n, n) / static_cast<double>(n);
        for (Boundary b : {Boundary::HardWall, Boundary::Periodic}) {
            const OperatorSet ops = make_shift_operators(n, b);
            const CMatrix g = apply_generator(uniform, c, ops);
            REQUIRE(g.cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("circulant states are exactly stationary under periodic evolution") {
    const OperatorSet ops = make_shift_operators(7, Boundary::Periodic);
    const CMatrix rho = qmkt_test::random_circulant_hermitian_trace1(7, 31, 0.05);
    for (const LindbladCoefficients& c : coefficient_grid()) {
        const CMatrix g = apply_generator(rho, c, ops);
        REQUIRE(g.cwiseAbs().maxCoeff() < 1e-17);
    }
}

TEST_CASE("shift form L acts as the boundary-free second difference") {
    CMatrix unit = CMatrix::Zero(5, 5);
    unit(2, 2) = 1.0;
    const CMatrix l = apply_shift_L(unit);
    REQUIRE(l(2, 2) == Complex(-2.0, 0.0));
    REQUIRE(l(1, 1) == Complex(1.0, 0.0));
    REQUIRE(l(3, 3) == Complex(1.0, 0.0));
    REQUIRE(l.cwiseAbs().sum() == 4.0);

    // Constant diagonals are flat except where the stencil runs off the edge.
    const CMatrix li = apply_shift_L(CMatrix::Identity(5, 5));
    for (Eigen::Index i = 1; i < 4; ++i) {
        REQUIRE(li(i, i) == Complex(0.0, 0.0));
    }
    REQUIRE(li(0, 0) == Complex(-1.0, 0.0));
    REQUIRE(li(4, 4) == Complex(-1.0, 0.0));
}

TEST_CASE("interior-supported states satisfy the shift-form identity") {
    const Eigen::Index n = 9;
    const OperatorSet ops = make_shift_operators(n, Boundary::HardWall);
    // Support on rows/cols 3..7 (1-based), two clear of each wall.
    CMatrix m = CMatrix::Zero(n, n);
    m.block(2, 2, 5, 5) = qmkt_test::random_hermitian(5, 9);
    const LindbladCoefficients c{0.16, Complex(0.1296, 0.0), Complex(0.1296, 0.0)};

    const CMatrix direct = apply_generator(m, c, ops);
    const CMatrix shifted = c.sigma2 * apply_shift_L(m) -
                            0.5 * c.nu_u2 * apply_shift_L(ops.a_up * m * ops.a_up) -
                            0.5 * c.nu_d2 * apply_shift_L(ops.a_down * m * ops.a_down);
    REQUIRE(max_abs_diff(direct, shifted) < 1e-14);
}

TEST_CASE("one Euler step from a centered point state hits the closed-form entries") {
    const Eigen::Index n = 21;
    const OperatorSet ops = make_shift_operators(n, Boundary::HardWall);
    const LindbladCoefficients c = coefficients_from_scalars(0.4, 0.36, 0.36);
    const double dt = 0.01;
    const DensityMatrix rho1 = euler_step(dirac_state(n, 11), c, ops, dt);
    const CMatrix& r = rho1.mat();

    const double s2dt = 0.4 * 0.4 * dt;
    const double nu2dt = 0.36 * 0.36 * dt;
    REQUIRE(r(10, 10).real() == Catch::Approx(1.0 - 2.0 * s2dt).margin(1e-15));
    REQUIRE(r(9, 9).real() == Catch::Approx(s2dt).margin(1e-17));
    REQUIRE(r(11, 11).real() == Catch::Approx(s2dt).margin(1e-17));
    REQUIRE(r(11, 9).real() == Catch::Approx(nu2dt).margin(1e-17));
    REQUIRE(r(9, 11).real() == Catch::Approx(nu2dt).margin(1e-17));
    for (auto [i, j] : {std::pair{12, 10}, {10, 8}, {8, 10}, {10, 12}}) {
        REQUIRE(r(i, j).real() == Catch::Approx(-0.5 * nu2dt).margin(1e-17));
        REQUIRE(r(i, j).imag() == 0.0);
    }

    // Every entry off the nine-site pattern stays exactly zero.
    double off_pattern = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const bool on = (i == 10 && j == 10) || (i == 9 && j == 9) || (i == 11 && j == 11) ||
                            (i == 11 && j == 9) || (i == 9 && j == 11) || (i == 12 && j == 10) ||
                            (i == 10 && j == 8) || (i == 8 && j == 10) || (i == 10 && j == 12);
            if (!on) {
                off_pattern = std::max(off_pattern, std::abs(r(i, j)));
            }
        }
    }
    REQUIRE(off_pattern == 0.0);
}

TEST_CASE("classical coefficients keep diagonal states exactly diagonal") {
    const OperatorSet ops = make_shift_operators(11, Boundary::HardWall);
    const LindbladCoefficients c = coefficients_from_scalars(0.4, 0.0, 0.0);
    DensityMatrix rho = qmkt_test::random_diagonal_density(11, 77);
    for (int k = 0; k < 25; ++k) {
        rho = euler_step(rho, c, ops, 0.01);
    }
    CMatrix off = rho.mat();
    off.diagonal().setZero();
    REQUIRE(off.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Euler stepping preserves the trace to rounding") {
    const OperatorSet ops = make_shift_operators(8, Boundary::HardWall);
    const LindbladCoefficients c = coefficients_from_scalars(0.4, 0.36, 0.36);
    DensityMatrix rho = qmkt_test::random_density(8, 4);
    for (int k = 0; k < 50; ++k) {
        rho = euler_step(rho, c, ops, 0.01);
    }
    REQUIRE(rho.trace_error() < 1e-12);
}

TEST_CASE("euler_step rejects nonpositive step sizes") {
    const OperatorSet ops = make_shift_operators(4, Boundary::HardWall);
    const LindbladCoefficients c = coefficients_from_scalars(0.4, 0.0, 0.0);
    REQUIRE_THROWS_AS(euler_step(dirac_state(4, 2), c, ops, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(euler_step(dirac_state(4, 2), c, ops, -0.1), std::invalid_argument);
}

TEST_CASE("classical generator matches hand rates and conserves probability") {
    const double s2 = 0.16;

    RVector uniform = RVector::Constant(5, 0.2);
    REQUIRE(apply_classical_generator(uniform, s2, Boundary::HardWall).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(apply_classical_generator(uniform, s2, Boundary::Periodic).cwiseAbs().maxCoeff() == 0.0);

    RVector point = RVector::Zero(5);
    point(2) = 1.0;
    const RVector rates = apply_classical_generator(point, s2, Boundary::HardWall);
    REQUIRE(rates(2) == Catch::Approx(-2.0 * s2).margin(1e-16));
    REQUIRE(rates(1) == Catch::Approx(s2).margin(1e-16));
    REQUIRE(rates(3) == Catch::Approx(s2).margin(1e-16));
    REQUIRE(rates(0) == 0.0);
    REQUIRE(rates(4) == 0.0);

    RVector bad = RVector::Constant(5, 0.3);
    REQUIRE_THROWS_AS(apply_classical_generator(bad, s2, Boundary::HardWall), std::invalid_argument);
}

TEST_CASE("classical rates equal the diagonal of the full generator") {
    const DensityMatrix rho = qmkt_test::random_diagonal_density(7, 13);
    const RVector p = rho.mat().diagonal().real();
    const LindbladCoefficients c = coefficients_from_scalars(0.4, 0.36, 0.36);
    for (Boundary b : {Boundary::HardWall, Boundary::Periodic}) {
        const OperatorSet ops = make_shift_operators(7, b);
        const RVector classical = apply_classical_generator(p, c.sigma2, b);
        const RVector quantum = apply_generator(rho.mat(), c, ops).diagonal().real();
        REQUIRE((classical - quantum).cwiseAbs().maxCoeff() < 1e-15);
        REQUIRE(std::abs(classical.sum()) < 1e-14);
    }
}

TEST_CASE("GKSL standard form reduces to bare shifts in the classical case") {
    const OperatorSet ops = make_shift_operators(5, Boundary::HardWall);
    const GKSLForm form = gksl_standard_form(coefficients_from_scalars(0.4, 0.0, 0.0), ops);
    REQUIRE(form.theta == 0.0);
    REQUIRE(max_abs_diff(form.l1, ops.a_up) == 0.0);
    REQUIRE(max_abs_diff(form.l2, ops.a_down) == 0.0);
    REQUIRE(form.rate1 == Catch::Approx(0.16).margin(1e-16));
    REQUIRE(form.rate2 == Catch::Approx(0.16).margin(1e-16));
}

TEST_CASE("GKSL standard form rotates by pi/4 with split rates") {
    const OperatorSet ops = make_shift_operators(5, Boundary::HardWall);
    const GKSLForm form = gksl_standard_form(coefficients_from_scalars(0.4, 0.36, 0.36), ops);
    REQUIRE(form.theta == Catch::Approx(std::numbers::pi / 4.0).margin(1e-16));
    REQUIRE(form.rate1 == Catch::Approx(0.16 - 0.1296).margin(1e-15));
    REQUIRE(form.rate2 == Catch::Approx(0.16 + 0.1296).margin(1e-15));
}

TEST_CASE("GKSL standard form rejects asymmetric or complex couplings") {
    const OperatorSet ops = make_shift_operators(5, Boundary::HardWall);
    LindbladCoefficients lopsided{0.16, Complex(0.1, 0.0), Complex(0.2, 0.0)};
    REQUIRE_THROWS_AS(gksl_standard_form(lopsided, ops), std::invalid_argument);
    LindbladCoefficients rotated{0.16, Complex(0.03, 0.015), Complex(0.03, -0.015)};
    REQUIRE_THROWS_AS(gksl_standard_form(rotated, ops), std::invalid_argument);
}

TEST_CASE("GKSL dissipator reassembles the generator on a probe basis") {
    for (Boundary b : {Boundary::HardWall, Boundary::Periodic}) {
        const OperatorSet ops = make_shift_operators(5, b);
        for (double nu : {0.0, 0.36}) {
            const LindbladCoefficients c = coefficients_from_scalars(0.4, nu, nu);
            const GKSLForm form = gksl_standard_form(c, ops);
            for (Eigen::Index i = 1; i <= 5; ++i) {
                for (Eigen::Index j = 1; j <= 5; ++j) {
                    const CMatrix probe = matrix_unit(5, i, j);
                    const CMatrix via_form = apply_gksl_dissipator(probe, form);
                    const CMatrix direct = apply_generator(probe, c, ops);
                    REQUIRE(max_abs_diff(via_form, direct) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("complete positivity flag follows the coupling inequality") {
    const CPReport strong = is_completely_positive(coefficients_from_scalars(0.4, 0.36, 0.36));
    REQUIRE_FALSE(strong.completely_positive);
    REQUIRE(strong.c_matrix_eigenvalues[0].real() == Catch::Approx(0.16 - 0.1296).margin(1e-15));
    REQUIRE(strong.c_matrix_eigenvalues[1].real() == Catch::Approx(0.16 + 0.1296).margin(1e-15));

    REQUIRE(is_completely_positive(coefficients_from_scalars(0.4, 0.2, 0.2)).completely_positive);

    const CPReport classical = is_completely_positive(coefficients_from_scalars(0.4, 0.0, 0.0));
    REQUIRE(classical.completely_positive);
    REQUIRE(classical.c_matrix_eigenvalues[0] == Complex(0.4 * 0.4, 0.0));
    REQUIRE(classical.c_matrix_eigenvalues[1] == Complex(0.4 * 0.4, 0.0));
}

TEST_CASE("classicality holds for bare shifts and fails for rotated jumps") {
    const OperatorSet ops = make_shift_operators(5, Boundary::HardWall);
    REQUIRE(is_classical_evolution(gksl_standard_form(coefficients_from_scalars(0.4, 0.0, 0.0), ops)));
    REQUIRE_FALSE(
        is_classical_evolution(gksl_standard_form(coefficients_from_scalars(0.4, 0.36, 0.36), ops)));

    // Any jump set mapping basis vectors to basis vectors counts as classical.
    GKSLForm permutation;
    permutation.l1 = make_shift_operators(5, Boundary::Periodic).a_up;
    permutation.l2 = make_shift_operators(5, Boundary::Periodic).a_down;
    permutation.rate1 = 1.0;
    permutation.rate2 = 1.0;
    REQUIRE(is_classical_evolution(permutation));
}

TEST_CASE("Heisenberg step fixes the identity exactly") {
    for (Boundary b : {Boundary::HardWall, Boundary::Periodic}) {
        const OperatorSet ops = make_shift_operators(8, b);
        const LindbladCoefficients c = coefficients_from_scalars(0.4, 0.36, 0.36);
        const CMatrix id = CMatrix::Identity(8, 8);
        const CMatrix stepped = heisenberg_step(id, c, ops, 0.01);
        REQUIRE(max_abs_diff(stepped, id) == 0.0);
    }
}

TEST_CASE("Heisenberg and Schroedinger pictures agree on expectations") {
    const Eigen::Index n = 9;
    const OperatorSet ops = make_shift_operators(n, Boundary::HardWall);
    const LindbladCoefficients c = coefficients_from_scalars(0.4, 0.3, 0.3);
    const double dt = 0.01;

    DensityMatrix rho = qmkt_test::random_density(n, 42);
    CMatrix f = qmkt_test::random_hermitian(n, 43);
    const DensityMatrix rho0 = rho;
    const CMatrix f0 = f;
    for (int k = 0; k < 100; ++k) {
        rho = euler_step(rho, c, ops, dt);
        f = heisenberg_step(f, c, ops, dt);
    }
    const double forward = (f0 * rho.mat()).trace().real();
    const double backward = (f * rho0.mat()).trace().real();
    REQUIRE(std::abs(forward - backward) < 1e-10);
}

TEST_CASE("exact propagator at t = 0 is the identity map") {
    const OperatorSet ops = make_shift_operators(6, Boundary::HardWall);
    const LindbladCoefficients c = coefficients_from_scalars(0.4, 0.2, 0.2);
    const DensityMatrix rho = qmkt_test::random_density(6, 11);
    const DensityMatrix out = exact_propagate_small(rho, c, ops, 0.0);
    REQUIRE(max_abs_diff(out.mat(), rho.mat()) < 1e-15);
}

TEST_CASE("exact propagator holds the uniform state fixed under periodic walls") {
    const OperatorSet ops = make_shift_operators(6, Boundary::Periodic);
    const LindbladCoefficients c = coefficients_from_scalars(0.4, 0.3, 0.3);
    CMatrix uniform = CMatrix::Identity(6, 6) / 6.0;
    const DensityMatrix out = exact_propagate_small(DensityMatrix(uniform), c, ops, 3.0);
    REQUIRE(max_abs_diff(out.mat(), uniform) < 1e-12);
}

TEST_CASE("exact propagator matches the truncated series at small times") {
    const OperatorSet ops = make_shift_operators(6, Boundary::HardWall);
    const LindbladCoefficients c = coefficients_from_scalars(0.4, 0.36, 0.36);
    const DensityMatrix rho = qmkt_test::random_density(6, 19);
    const double t = 1e-3;

    const CMatrix g1 = reference_generator(rho.mat(), c, ops);
    const CMatrix g2 = reference_generator(g1, c, ops);
    const CMatrix g3 = reference_generator(g2, c, ops);
    const CMatrix series = rho.mat() + t * g1 + (t * t / 2.0) * g2 + (t * t * t / 6.0) * g3;

    const DensityMatrix out = exact_propagate_small(rho, c, ops, t);
    REQUIRE(max_abs_diff(out.mat(), series) < 1e-11);
}

TEST_CASE("exact propagator refuses dimensions past the superoperator cap") {
    const OperatorSet ops = make_shift_operators(13, Boundary::HardWall);
    const LindbladCoefficients c = coefficients_from_scalars(0.4, 0.0, 0.0);
    REQUIRE_THROWS_AS(exact_propagate_small(dirac_state(13, 7), c, ops, 1.0), std::invalid_argument);
}

TEST_CASE("periodic evolution conserves every orbit sum") {
    const Eigen::Index n = 7;
    const OperatorSet ops = make_shift_operators(n, Boundary::Periodic);
    const LindbladCoefficients c = coefficients_from_scalars(0.4, 0.36, 0.36);
    DensityMatrix rho = qmkt_test::random_density(n, 23);
    const OrbitSignature before = orbit_signature(rho.mat(), Boundary::Periodic);
    for (int k = 0; k < 50; ++k) {
        rho = euler_step(rho, c, ops, 0.01);
    }
    const OrbitSignature after = orbit_signature(rho.mat(), Boundary::Periodic);
    for (Eigen::Index j = 0; j < n; ++j) {
        REQUIRE(std::abs(after.sums(j) - before.sums(j)) < 1e-12);
    }
}
