#include "spinlab/errors.hpp"
#include "spinlab/perturbation.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace spinlab;

TEST_CASE("site potential: pure quadratic") {
    const PerturbationSpec p = zero_perturbation();
    const SitePotential s = eval_site_potential(p, 2.0);
    CHECK(s.v == doctest::Approx(2.0));
    CHECK(s.dv == doctest::Approx(2.0));
    CHECK(s.d2v == doctest::Approx(1.0));
}

TEST_CASE("site potential: F = sin") {
    const PerturbationSpec p = sine_perturbation(1.0);
    const SitePotential at0 = eval_site_potential(p, 0.0);
    CHECK(at0.v == doctest::Approx(0.0));
    CHECK(at0.dv == doctest::Approx(1.0));
    CHECK(at0.d2v == doctest::Approx(1.0));
    const SitePotential atpi = eval_site_potential(p, M_PI);
    CHECK(atpi.v == doctest::Approx(M_PI * M_PI / 2.0));
    CHECK(atpi.dv == doctest::Approx(M_PI - 1.0));
    CHECK(atpi.d2v == doctest::Approx(1.0));
}

TEST_CASE("perturbative Poincare constant") {
    CHECK(perturbative_poincare_constant(0.0) == doctest::Approx(1.0));
    // e^{0.2} / (2 e^{-0.2} - 1) = 1.22140/0.63746
    CHECK(perturbative_poincare_constant(0.1) == doctest::Approx(1.9160).epsilon(1e-4));
    CHECK_THROWS_AS(perturbative_poincare_constant(0.5 * std::log(2.0)), ValidationError);
    CHECK_THROWS_AS(perturbative_poincare_constant(10.0), ValidationError);
    CHECK_THROWS_AS(perturbative_poincare_constant(-0.1), ValidationError);
}

TEST_CASE("perturbative constant: >= 1, increasing, divergent at the edge") {
    double prev = 0.0;
    for (double osc = 0.0; osc < 0.34; osc += 0.017) {
        const double v = perturbative_poincare_constant(osc);
        CHECK(v >= 1.0);
        CHECK(v > prev);
        prev = v;
    }
    CHECK(perturbative_poincare_constant(0.5 * std::log(2.0) - 1e-9) > 1e6);
}

TEST_CASE("generalized perturbative constant") {
    ConvexBaseSpec base = quadratic_base();
    CHECK(generalized_perturbative_constant(0.0, base) == doctest::Approx(1.0));
    for (double osc : {0.05, 0.1, 0.2})
        CHECK(generalized_perturbative_constant(osc, base) ==
              doctest::Approx(perturbative_poincare_constant(osc)));

    ConvexBaseSpec tight;
    tight.alpha = 1.0;
    tight.beta = 2.0;
    // condition needs osc < log sqrt(2 alpha/beta) = 0, so everything errors
    CHECK_THROWS_AS(generalized_perturbative_constant(0.0, tight), ValidationError);

    ConvexBaseSpec two;
    two.alpha = 2.0;
    two.beta = 2.0;
    CHECK(generalized_perturbative_constant(0.1, two) == doctest::Approx(0.9580).epsilon(1e-4));
    CHECK_THROWS_AS(
        generalized_perturbative_constant(0.1, ConvexBaseSpec{nullptr, 1.0, 0.5}),
        ValidationError);
}

namespace {

void scan_bounds(const PerturbationSpec& p) {
    // certified-bound validation on a dense grid: [-50, 50], step 1e-3
    double worst_f = 0.0, worst_df = 0.0, worst_d2f = 0.0;
    for (long i = 0; i <= 100000; ++i) {
        const double u = -50.0 + i * 1e-3;
        worst_f = std::max(worst_f, std::fabs(p.f(u)));
        worst_df = std::max(worst_df, std::fabs(p.df(u)));
        worst_d2f = std::max(worst_d2f, std::fabs(p.d2f(u)));
    }
    CHECK(worst_f <= p.sup_f + 1e-12);
    CHECK(worst_df <= p.sup_df + 1e-12);
    CHECK(worst_d2f <= p.sup_d2f + 1e-12);
    CHECK(p.osc_f <= 2.0 * p.sup_f + 1e-12);
}

void check_fd_consistency(const PerturbationSpec& p) {
    // |df - central difference of f| <= C h^2 with C stable in h
    const std::vector<double> hs = {1e-2, 1e-3, 1e-4};
    std::vector<double> cs;
    for (double h : hs) {
        double worst = 0.0;
        for (double u = -5.0; u <= 5.0; u += 0.37) {
            const double fd = (p.f(u + h) - p.f(u - h)) / (2.0 * h);
            worst = std::max(worst, std::fabs(p.df(u) - fd));
            const double fd2 = (p.df(u + h) - p.df(u - h)) / (2.0 * h);
            worst = std::max(worst, std::fabs(p.d2f(u) - fd2));
        }
        cs.push_back(worst / (h * h));
    }
    // observed C stable: same order across three decades of h (roundoff
    // enters at h = 1e-4)
    const double cmax = std::max({cs[0], cs[1], cs[2]});
    CHECK(cmax <= std::max(1.0, 10.0 * cs[0]));
}

} // namespace

TEST_CASE("certified bounds survive a dense grid scan") {
    scan_bounds(zero_perturbation());
    scan_bounds(sine_perturbation(0.1));
    scan_bounds(sine_perturbation(0.7));
    scan_bounds(poly_sine_perturbation({0.0, 0.05, 0.1}, {0.3, 0.8}));
}

TEST_CASE("derivatives match finite differences") {
    check_fd_consistency(sine_perturbation(0.3));
    check_fd_consistency(poly_sine_perturbation({0.1, -0.2, 0.05}, {0.0, 1.3}));
}

TEST_CASE("poly_sine family validation") {
    CHECK_THROWS_AS(poly_sine_perturbation({1.0}, {0.0, 1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(poly_sine_perturbation({}, {0.0}), ValidationError);
}

TEST_CASE("sine pair factorization matches direct evaluation") {
    const PerturbationSpec p = sine_perturbation(0.2);
    REQUIRE(p.pair_scale);
    for (double h : {-1.3, 0.0, 2.1})
        for (double t : {-2.0, 0.4, 3.3})
            CHECK(p.pair_scale(h) * p.pair_profile(t) ==
                  doctest::Approx(p.f(h + t) + p.f(h - t)).epsilon(1e-12));
}
