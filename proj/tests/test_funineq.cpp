#include "spinlab/errors.hpp"
#include "spinlab/funineq.hpp"
#include "spinlab/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace spinlab;

namespace {

// Brute-force oracle, independent of the production Dirichlet stencil: the
// 1-D generator L f = f'' - H' f' discretized with plain central differences
// into a (non-symmetric) dense matrix; the gap is the second-smallest real
// eigenvalue magnitude.
double oracle_gap_1d(const ConservativeModel& m, int nodes, double halfwidth) {
    const double center = m.M / 2.0;
    const double h = 2.0 * halfwidth / (nodes - 1);
    Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(nodes, nodes);
    for (int i = 1; i + 1 < nodes; ++i) {
        const double x = center - halfwidth + i * h;
        Eigen::VectorXd xv(1);
        xv[0] = x;
        const double hp = m.grad_energy(xv)[0];
        gen(i, i - 1) = 1.0 / (h * h) + hp / (2.0 * h);
        gen(i, i) = -2.0 / (h * h);
        gen(i, i + 1) = 1.0 / (h * h) - hp / (2.0 * h);
    }
    // reflecting ends (zero-derivative closure)
    gen(0, 0) = -1.0 / (h * h);
    gen(0, 1) = 1.0 / (h * h);
    gen(nodes - 1, nodes - 1) = -1.0 / (h * h);
    gen(nodes - 1, nodes - 2) = 1.0 / (h * h);

    Eigen::EigenSolver<Eigen::MatrixXd> es(gen);
    std::vector<double> real;
    for (int i = 0; i < nodes; ++i) real.push_back(-es.eigenvalues()[i].real());
    std::sort(real.begin(), real.end());
    return real[1];
}

} // namespace

TEST_CASE("generator gap n=1: matches the brute-force oracle and the OU value") {
    const ConservativeModel m(1, 0.0, zero_perturbation());
    // the 1-D marginal is N(0, 1/2); its generator gap equals the curvature 2
    const double oracle = oracle_gap_1d(m, 301, 6.0);
    CHECK(oracle == doctest::Approx(2.0).epsilon(5e-3));

    const SpectralReport rep = generator_gap(m, GridSpec{64, 8.0});
    CHECK(rep.poincare_estimate == doctest::Approx(0.5).epsilon(5e-3));
    CHECK(rep.poincare_estimate == doctest::Approx(1.0 / oracle).epsilon(1e-2));
    CHECK(rep.method == SpectralMethod::grid_eigensolve);
    CHECK(rep.error_estimate < 0.01);
}

TEST_CASE("uniformity in M: Gaussian gap is M-independent, sine gaps are bounded") {
    // F = 0: sigma_M is a translate of sigma_0, so P agrees exactly
    const SpectralReport g0 =
        generator_gap(ConservativeModel(1, 0.0, zero_perturbation()), GridSpec{64, 8.0});
    const SpectralReport g2 =
        generator_gap(ConservativeModel(1, 2.0, zero_perturbation()), GridSpec{64, 8.0});
    CHECK(std::fabs(g0.poincare_estimate - g2.poincare_estimate) <=
          g0.error_estimate + g2.error_estimate + 1e-6);
    // F = sine(0.1): the measures at M = 0 and M = n+1 genuinely differ (at
    // M = 0 the odd perturbation cancels identically), but both gaps sit
    // under the perturbative constant
    const double bound = perturbative_poincare_constant(0.2);
    for (double M : {0.0, 2.0}) {
        const SpectralReport rep =
            generator_gap(ConservativeModel(1, M, sine_perturbation(0.1)), GridSpec{64, 8.0});
        CHECK(rep.poincare_estimate <= bound + rep.error_estimate);
    }
}

TEST_CASE("generator gap n=2: Gaussian value 1 (dense and iterative paths)") {
    const ConservativeModel m(2, 0.0, zero_perturbation());
    // 28^2 = 784 nodes goes through the dense path, 64^2 through CG inverse
    // iteration; both must agree with the analytic gap 1 = min precision eig
    const DensityGrid dense_grid(m, GridSpec{28, 7.0});
    REQUIRE(dense_grid.size <= 900);
    const EigenPairs dense = lowest_nonzero_spectrum(dense_grid, 2);
    CHECK(dense.values[0] == doctest::Approx(1.0).epsilon(0.08));
    const SpectralReport fine = generator_gap(m, GridSpec{64, 8.0});
    CHECK(fine.poincare_estimate == doctest::Approx(1.0).epsilon(0.02));
    // the iterative path reproduces the dense one on the same grid
    const DensityGrid medium(m, GridSpec{34, 7.0});
    REQUIRE(medium.size > 900);
    const EigenPairs iter = lowest_nonzero_spectrum(medium, 2);
    const DensityGrid medium2(m, GridSpec{34, 7.0});
    CHECK(iter.values[0] == doctest::Approx(1.0).epsilon(0.06));
    CHECK(iter.values[1] >= iter.values[0]);
}

TEST_CASE("generator gap n=3: Gaussian value through the iterative solver") {
    const ConservativeModel m(3, 0.0, zero_perturbation());
    const DensityGrid grid(m, GridSpec{32, 7.0});
    const EigenPairs pairs = lowest_nonzero_spectrum(grid, 1);
    CHECK(pairs.values[0] == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("generator gap: resolution guard") {
    const ConservativeModel m(2, 0.0, zero_perturbation());
    CHECK_THROWS_AS(generator_gap(m, GridSpec{32, 30.0}), NumericalError);
    CHECK_THROWS_AS(generator_gap(ConservativeModel(1, 0.0, zero_perturbation()),
                                  GridSpec{64, 1.5}),
                    ValidationError);
}

TEST_CASE("LSI constant: Gaussian n=1 and n=2") {
    const SpectralReport one =
        lsi_constant_grid(ConservativeModel(1, 0.0, zero_perturbation()), GridSpec{64, 8.0});
    REQUIRE(one.lsi_estimate);
    // N(0, 1/2): L = 2 sigma^2 = 1
    CHECK(*one.lsi_estimate == doctest::Approx(1.0).epsilon(0.03));

    const SpectralReport two =
        lsi_constant_grid(ConservativeModel(2, 0.0, zero_perturbation()), GridSpec{64, 8.0});
    REQUIRE(two.lsi_estimate);
    CHECK(*two.lsi_estimate == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("2P <= L and the Bakry-Emery cap") {
    for (int n : {1, 2}) {
        const ConservativeModel m(n, 0.0, sine_perturbation(0.05));
        const SpectralReport rep = lsi_constant_grid(m, GridSpec{64, 8.0});
        REQUIRE(rep.lsi_estimate);
        // ascent tolerance: the exponential-family limit equals 2/lambda_2
        CHECK(*rep.lsi_estimate + 1e-3 >= 2.0 * rep.poincare_estimate);
        // curvature rho = (1 - sup_d2f) * (2 for n=1, 1 otherwise)
        const double rho = (1.0 - 0.05) * (n == 1 ? 2.0 : 1.0);
        CHECK(*rep.lsi_estimate <= 2.0 / rho + 0.02);
        // the spec's wider window for n=1: [2 P_grid, 2/(1 - 2 * 0.05)]
        if (n == 1) CHECK(*rep.lsi_estimate <= 2.0 / (1.0 - 2.0 * 0.05));
        const SpectralReport gap = generator_gap(m, GridSpec{64, 8.0});
        const double rho_cap = 1.0 - 2.0 * 0.05;
        CHECK(gap.poincare_estimate <= 1.0 / rho_cap + gap.error_estimate);
    }
}

TEST_CASE("entropy linearization on the grid") {
    const ConservativeModel m(1, 0.0, zero_perturbation());
    const DensityGrid grid(m, GridSpec{128, 8.0});
    std::vector<double> f(grid.size);
    for (long i = 0; i < grid.size; ++i) f[i] = grid.axis[i % grid.nodes];
    const double var = grid.variance(f);
    const double eps = 1e-3;
    std::vector<double> g(grid.size);
    for (long i = 0; i < grid.size; ++i) g[i] = 1.0 + eps * f[i];
    const double ratio = grid.entropy_sq(g) / (2.0 * eps * eps * var);
    CHECK(std::fabs(ratio - 1.0) <= eps);
}

TEST_CASE("variational lower bound: Gaussian pair difference saturates P") {
    const ConservativeModel m(2, 0.0, zero_perturbation());
    ChainConfig c;
    c.samples = 20000;
    c.thin = 2;
    c.burn_in = 2000;
    c.seed = 77;
    const SampleBatch batch = sample_sigma(m, c);
    const double bound = variational_gap_lower_bound(batch, sigma_dictionary(m));
    // Var(x1 - x2) / <|grad|^2> = 2(var - cov)/2 = 1 exactly for every n
    CHECK(bound == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("dual characterization holds; violations are detected") {
    for (int n : {1, 2}) {
        const ConservativeModel m(n, 0.0, n == 1 ? zero_perturbation()
                                                 : sine_perturbation(0.1));
        std::string offender;
        CHECK(dual_characterization_check(m, GridSpec{64, 8.0}, sigma_dictionary(m),
                                          &offender));
    }
    // a fabricated observable whose Laplacian cancels L f (making
    // <(L f)^2> collapse to 0) must be flagged
    const ConservativeModel m(1, 0.0, zero_perturbation());
    Observable bogus = coordinate_observable(1, 0);
    bogus.name = "bogus";
    bogus.laplacian = [](const Eigen::VectorXd& x) { return 2.0 * x[0]; };
    std::string offender;
    CHECK_FALSE(
        dual_characterization_check(m, GridSpec{64, 8.0}, {bogus}, &offender));
    CHECK(offender == "bogus");
}

TEST_CASE("one-spin curvature: Gaussian 1 + 1/n by MC and by quadrature") {
    const ConservativeModel m(4, 0.0, zero_perturbation());
    ChainConfig c;
    c.samples = 20000;
    c.thin = 2;
    c.burn_in = 2000;
    c.seed = 13;
    const OneSpinResult res = one_spin_curvature(m, {-1.0, 0.0, 1.0}, c);
    for (const OneSpinRow& r : res.rows)
        CHECK(std::fabs(r.phi_dd - 1.25) <= 4.0 * r.err);

    const ConservativeModel m3(3, 0.0, zero_perturbation());
    CHECK(one_spin_curvature_quadrature(m3, 0.0) ==
          doctest::Approx(4.0 / 3.0).epsilon(1e-4));
    CHECK(one_spin_curvature_quadrature(m3, 0.7) ==
          doctest::Approx(4.0 / 3.0).epsilon(1e-4));
    CHECK_THROWS_AS(one_spin_curvature(ConservativeModel(2, 0.0, zero_perturbation()),
                                       {0.0}, c),
                    ValidationError);
}

namespace {

std::pair<std::vector<double>, std::vector<double>> tabulate_gaussian(double mean,
                                                                      double sd,
                                                                      int nodes,
                                                                      double halfwidth_sd) {
    std::vector<double> x(nodes), p(nodes);
    for (int i = 0; i < nodes; ++i) {
        x[i] = mean + sd * halfwidth_sd * (2.0 * i / (nodes - 1) - 1.0);
        p[i] = std::exp(-(x[i] - mean) * (x[i] - mean) / (2.0 * sd * sd));
    }
    return {x, p};
}

} // namespace

TEST_CASE("one-dimensional LSI criterion") {
    {
        const auto [x, p] = tabulate_gaussian(0.0, 1.0, 512, 8.0);
        const LsiBracket br = one_d_lsi_criterion(x, p);
        CHECK(br.lower <= 2.0 + 1e-6);
        CHECK(br.upper >= 2.0 - 1e-6);
        CHECK(br.upper / br.lower <= 1.05);
    }
    {
        // variance sigma^2 = 4: the bracket scales by sigma^2
        const auto [x, p] = tabulate_gaussian(1.0, 2.0, 512, 8.0);
        const LsiBracket br = one_d_lsi_criterion(x, p);
        CHECK(br.lower == doctest::Approx(8.0).epsilon(1e-3));
        CHECK(br.upper / br.lower <= 1.05);
    }
    {
        // one-spin marginal of sigma_M, F = sine(0.1), n = 2, by quadrature:
        // p(x1) ~ exp(-V(x1)) Z_1(M - x1)
        const PerturbationSpec pert = sine_perturbation(0.1);
        const int nodes = 257;
        std::vector<double> x(nodes), p(nodes);
        for (int i = 0; i < nodes; ++i) {
            x[i] = -7.0 + 14.0 * i / (nodes - 1);
            const ConservativeModel inner(1, 0.0 - x[i], pert);
            const SigmaQuadrature iq(inner, 64);
            p[i] = std::exp(-(0.5 * x[i] * x[i] + pert.f(x[i])) + iq.log_normalization());
        }
        const LsiBracket br = one_d_lsi_criterion(x, p);
        CHECK(br.lower > 0.0);
        CHECK(br.upper / br.lower <= 8.0);
    }
    {
        // window cutting visible mass must fail the tail check
        const auto [x, p] = tabulate_gaussian(0.0, 1.0, 128, 2.0);
        CHECK_THROWS_AS(one_d_lsi_criterion(x, p), NumericalError);
    }
}

TEST_CASE("one-spin marginal bracket is n-uniform (MC tabulation)") {
    // tabulate the x_1 marginal of sigma_M beyond the quadrature regime:
    // phi'(x_1) = V'(x_1) - <V'(M - sum x)>_{sigma_{M-x_1}} estimated by MC
    // on a node grid, then integrated to a density.  The LSI bracket of the
    // marginal must stay within a modest band across n.
    const PerturbationSpec pert = sine_perturbation(0.1);
    ChainConfig c;
    c.samples = 16000;
    c.thin = 2;
    c.burn_in = 1500;
    c.step = 0.2;

    std::vector<LsiBracket> brackets;
    for (int n : {8, 16, 32}) {
        const int nodes = 41;
        std::vector<double> x(nodes), dphi(nodes);
        for (int i = 0; i < nodes; ++i) {
            x[i] = -6.0 + 12.0 * i / (nodes - 1);
            const ConservativeModel inner(n - 1, -x[i], pert);
            const SampleBatch batch =
                sample_sigma(inner, c.with_seed(split_seed(1000 + n, i)));
            const MeanErr arg_mean = mean_with_error(batch.trace(
                [&](const Eigen::VectorXd& y) {
                    const double arg = inner.M - y.sum();
                    return arg + pert.df(arg);
                }));
            dphi[i] = x[i] + pert.df(x[i]) - arg_mean.mean;
        }
        // trapezoid integral of phi' and the unnormalized density e^{-phi}
        std::vector<double> p(nodes);
        double phi = 0.0;
        p[0] = 1.0;
        for (int i = 1; i < nodes; ++i) {
            phi += 0.5 * (dphi[i - 1] + dphi[i]) * (x[i] - x[i - 1]);
            p[i] = std::exp(-phi);
        }
        brackets.push_back(one_d_lsi_criterion(x, p));
    }
    double lo_min = 1e300, lo_max = 0.0, up_min = 1e300, up_max = 0.0;
    for (const LsiBracket& b : brackets) {
        CHECK(b.upper / b.lower <= 8.0);
        lo_min = std::min(lo_min, b.lower);
        lo_max = std::max(lo_max, b.lower);
        up_min = std::min(up_min, b.upper);
        up_max = std::max(up_max, b.upper);
    }
    CHECK(lo_max / lo_min <= 1.2);
    CHECK(up_max / up_min <= 1.2);
}

TEST_CASE("grid eigensolve convergence: doubling nodes moves lambda_2 < 1%") {
    const ConservativeModel m(2, 0.0, sine_perturbation(0.1));
    const SpectralReport a = generator_gap(m, GridSpec{64, 8.0});
    const SpectralReport b = generator_gap(m, GridSpec{128, 8.0});
    CHECK(std::fabs(1.0 / a.poincare_estimate - 1.0 / b.poincare_estimate) <=
          0.01 / b.poincare_estimate);
}
