#include "spinlab/errors.hpp"
#include "spinlab/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace spinlab;

TEST_CASE("Gauss-Legendre rule integrates polynomials exactly") {
    for (int npts : {2, 5, 16}) {
        const GaussLegendre gl(npts);
        for (int k = 0; k <= 2 * npts - 1; ++k) {
            double acc = 0.0;
            for (int i = 0; i < npts; ++i) acc += gl.weights[i] * std::pow(gl.nodes[i], k);
            const double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
            CHECK(acc == doctest::Approx(exact).epsilon(1e-12));
        }
    }
    const GaussLegendre gl(24);
    double acc = 0.0;
    for (int i = 0; i < 24; ++i) acc += gl.weights[i] * std::exp(gl.nodes[i]);
    CHECK(acc == doctest::Approx(std::exp(1.0) - std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("sigma_M moments against the Gaussian closed forms") {
    const ConservativeModel m(2, 3.0, zero_perturbation());
    const SigmaQuadrature q(m);
    CHECK(q.expect([](const Eigen::VectorXd& x) { return x[0]; }) ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK(q.variance([](const Eigen::VectorXd& x) { return x[0]; }) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-10));
    CHECK(q.covariance([](const Eigen::VectorXd& x) { return x[0]; },
                       [](const Eigen::VectorXd& x) { return x[1]; }) ==
          doctest::Approx(-1.0 / 3.0).epsilon(1e-9));

    const ConservativeModel m1(1, 0.0, zero_perturbation());
    const SigmaQuadrature q1(m1);
    CHECK(q1.variance([](const Eigen::VectorXd& x) { return x[0]; }) ==
          doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("entropy against the Gaussian moment-generating identity") {
    // Ent(e^{x_1}) = e^{mu + s^2/2} * s^2/2 for x_1 ~ N(mu, s^2)
    const ConservativeModel m(2, 0.0, zero_perturbation());
    const SigmaQuadrature q(m);
    const double s2 = 2.0 / 3.0;
    const double expected = std::exp(0.5 * s2) * 0.5 * s2;
    CHECK(q.entropy([](const Eigen::VectorXd& x) { return std::exp(x[0]); }) ==
          doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("log normalization of the 1-D Gaussian") {
    // H = x^2/2 + x^2/2 = x^2 at M = 0, so Z = sqrt(pi)
    const ConservativeModel m(1, 0.0, zero_perturbation());
    const SigmaQuadrature q(m);
    CHECK(q.log_normalization() == doctest::Approx(0.5 * std::log(M_PI)).epsilon(1e-12));
}

TEST_CASE("quadrature regime and validation") {
    CHECK_THROWS_AS(SigmaQuadrature(ConservativeModel(4, 0.0, zero_perturbation())),
                    ValidationError);
    CHECK_THROWS_AS(SigmaQuadrature(ConservativeModel(1, 0.0, zero_perturbation()), 4),
                    ValidationError);
}
