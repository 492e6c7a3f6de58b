#include "spinlab/errors.hpp"
#include "spinlab/model.hpp"
#include "spinlab/quadrature.hpp"
#include "spinlab/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace spinlab;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<long>(values.size()));
    long i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

} // namespace

TEST_CASE("energy hand values") {
    const ConservativeModel flat(2, 0.0, zero_perturbation());
    CHECK(flat.energy(vec({0.0, 0.0})) == doctest::Approx(0.0));

    const ConservativeModel shifted(2, 3.0, zero_perturbation());
    CHECK(shifted.energy(vec({1.0, 1.0})) == doctest::Approx(1.5));

    const ConservativeModel sine1(1, 0.0, sine_perturbation(1.0));
    CHECK(sine1.energy(vec({0.0})) == doctest::Approx(0.0));

    CHECK_THROWS_AS(flat.energy(vec({1.0, 2.0, 3.0})), ValidationError);
}

TEST_CASE("gradient vanishes at the symmetric minimum; Hessian eigenvalues") {
    for (int n : {1, 2, 5}) {
        const ConservativeModel m(n, 4.0, zero_perturbation());
        const Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 4.0 / (n + 1));
        CHECK(m.grad_energy(x).norm() == doctest::Approx(0.0).epsilon(1e-12));
    }
    const ConservativeModel m2(2, 0.0, zero_perturbation());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m2.hess_energy(vec({0.3, -0.7})));
    CHECK(es.eigenvalues()[0] == doctest::Approx(1.0));
    CHECK(es.eigenvalues()[1] == doctest::Approx(3.0));

    const ConservativeModel s1(1, 0.0, sine_perturbation(1.0));
    CHECK(s1.grad_energy(vec({0.0}))[0] == doctest::Approx(0.0));
}

TEST_CASE("gradient and Hessian match finite differences") {
    const ConservativeModel m(3, 1.5, sine_perturbation(0.3));
    Rng rng(42);
    const double h = 1e-4;
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd x(3);
        for (int i = 0; i < 3; ++i) x[i] = 2.0 * rng.normal();
        const Eigen::VectorXd g = m.grad_energy(x);
        const Eigen::MatrixXd hess = m.hess_energy(x);
        for (int i = 0; i < 3; ++i) {
            Eigen::VectorXd xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            CHECK(g[i] == doctest::Approx((m.energy(xp) - m.energy(xm)) / (2 * h))
                              .epsilon(1e-6));
            const Eigen::VectorXd gp = m.grad_energy(xp), gm = m.grad_energy(xm);
            for (int j = 0; j < 3; ++j)
                CHECK(hess(i, j) ==
                      doctest::Approx((gp[j] - gm[j]) / (2 * h)).epsilon(1e-6));
        }
    }
}

TEST_CASE("log density vs Gaussian base") {
    const ConservativeModel flat(3, 1.0, zero_perturbation());
    CHECK(flat.log_density_vs_gaussian(vec({0.1, -0.4, 2.0})) == doctest::Approx(0.0));

    const ConservativeModel s2(2, 0.0, sine_perturbation(1.0));
    CHECK(s2.log_density_vs_gaussian(vec({0.0, 0.0})) == doctest::Approx(0.0));

    const ConservativeModel s4(4, 2.0, sine_perturbation(0.1));
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd x(4);
        for (int i = 0; i < 4; ++i) x[i] = 3.0 * rng.normal();
        const double b = s4.log_density_vs_gaussian(x);
        CHECK(std::fabs(b) <= 5 * 0.1 + 1e-12); // (n+1) sup_f
        // B = energy - quadratic part
        double quad = 0.0;
        for (int i = 0; i < 4; ++i) quad += 0.5 * x[i] * x[i];
        const double last = s4.M - x.sum();
        quad += 0.5 * last * last;
        CHECK(b == doctest::Approx(s4.energy(x) - quad).epsilon(1e-10));
    }
}

TEST_CASE("Gaussian base: precision inverts covariance") {
    for (int n : {1, 2, 7}) {
        const GaussianBase g(n, 3.0);
        const Eigen::MatrixXd prod = g.precision() * g.covariance();
        CHECK((prod - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(g.pair_covariance() == doctest::Approx(-1.0 / (n + 1)));
        CHECK(g.coordinate_variance() == doctest::Approx(-n * g.pair_covariance()));
        CHECK(g.mean()[0] == doctest::Approx(3.0 / (n + 1)));
    }
}

TEST_CASE("Hessian curvature bounds from certified sup_d2f") {
    const PerturbationSpec p = sine_perturbation(0.2);
    const ConservativeModel m(4, 1.0, p);
    Rng rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd x(4);
        for (int i = 0; i < 4; ++i) x[i] = 2.5 * rng.normal();
        const Eigen::MatrixXd h = m.hess_energy(x);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        CHECK(es.eigenvalues().minCoeff() >= 1.0 - 2.0 * p.sup_d2f - 1e-8);
        const Eigen::MatrixXd base =
            Eigen::MatrixXd::Identity(4, 4) + Eigen::MatrixXd::Ones(4, 4);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> diff(h - base);
        const double norm = std::max(std::fabs(diff.eigenvalues().minCoeff()),
                                     std::fabs(diff.eigenvalues().maxCoeff()));
        CHECK(norm <= (m.n + 1) * p.sup_d2f + 1e-8);
    }
}

TEST_CASE("strict convexity transfers to the constrained Hessian") {
    CHECK(strict_convexity_transfer_check(Eigen::MatrixXd::Identity(3, 3), 1.0));
    CHECK(strict_convexity_transfer_check(2.0 * Eigen::MatrixXd::Identity(4, 4), 2.0));

    // random A >= rho I via rho I + B^T B, checked against a dense eigensolve
    Rng rng(5);
    const double rho = 0.7;
    Eigen::MatrixXd b(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) b(i, j) = rng.normal();
    const Eigen::MatrixXd a = rho * Eigen::MatrixXd::Identity(4, 4) + b.transpose() * b;
    CHECK(strict_convexity_transfer_check(a, rho));
    // claiming a larger rho than the matrix has must fail
    CHECK_FALSE(strict_convexity_transfer_check(Eigen::MatrixXd::Identity(3, 3), 1.5));
}

TEST_CASE("mean-field spectrum") {
    MeanFieldModel quad;
    quad.pair_d2 = [](int, int, double) { return 1.0; };
    quad.rho = 1.0;

    quad.n_plus_1 = 3;
    Eigen::VectorXd ev = meanfield_spectrum(quad, Eigen::VectorXd::Random(3));
    CHECK(ev[0] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(ev[1] == doctest::Approx(1.0));
    CHECK(ev[2] == doctest::Approx(1.0));

    quad.n_plus_1 = 5;
    ev = meanfield_spectrum(quad, Eigen::VectorXd::Random(5));
    CHECK(ev[1] == doctest::Approx(1.0));
    CHECK(ev[1] >= 4.0 / 5.0 - 1e-10);
    // the constants direction spans the kernel
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(5);
    CHECK((quad.hessian(Eigen::VectorXd::Random(5)) * ones).norm() <= 1e-12);

    MeanFieldModel quartic;
    quartic.n_plus_1 = 4;
    quartic.pair_d2 = [](int, int, double u) { return 1.0 + 0.03 * u * u; };
    quartic.rho = 1.0;
    ev = meanfield_spectrum(quartic, Eigen::VectorXd::Zero(4));
    CHECK(ev[1] >= 3.0 / 4.0 - 1e-8);
}

TEST_CASE("exchangeability of the energy and of the implicit coordinate") {
    const ConservativeModel m(3, 1.0, sine_perturbation(0.2));
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd x(3);
        for (int i = 0; i < 3; ++i) x[i] = 2.0 * rng.normal();
        Eigen::VectorXd perm(3);
        perm << x[2], x[0], x[1];
        CHECK(m.energy(perm) == doctest::Approx(m.energy(x)).epsilon(1e-12));
    }
    // swapping x_1 with the implicit coordinate leaves symmetric statistics
    // unchanged: <x_1^2> = <(M - sum x)^2> under sigma_M, by quadrature
    const ConservativeModel m2(2, 1.0, sine_perturbation(0.1));
    const SigmaQuadrature q(m2);
    const double first = q.expect([](const Eigen::VectorXd& x) { return x[0] * x[0]; });
    const double implicit = q.expect([&](const Eigen::VectorXd& x) {
        const double last = m2.M - x.sum();
        return last * last;
    });
    CHECK(first == doctest::Approx(implicit).epsilon(1e-9));
}
