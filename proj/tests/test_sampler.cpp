#include "spinlab/errors.hpp"
#include "spinlab/io.hpp"
#include "spinlab/quadrature.hpp"
#include "spinlab/sampler.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace spinlab;

namespace {

ChainConfig quick_chain(std::uint64_t seed, long samples = 10000) {
    ChainConfig c;
    c.samples = samples;
    c.thin = 2;
    c.burn_in = 2000;
    c.step = 0.2;
    c.seed = seed;
    return c;
}

} // namespace

TEST_CASE("chain config validation") {
    ChainConfig c;
    c.samples = 50;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.samples = 100;
    c.thin = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.thin = 1;
    c.step = 0.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("reproducibility: identical seed gives bit-identical draws") {
    const ConservativeModel m(3, 1.0, sine_perturbation(0.1));
    const SampleBatch a = sample_sigma(m, quick_chain(99, 500));
    const SampleBatch b = sample_sigma(m, quick_chain(99, 500));
    CHECK((a.draws - b.draws).cwiseAbs().maxCoeff() == 0.0);
    const SampleBatch c = sample_sigma(m, quick_chain(100, 500));
    CHECK((a.draws - c.draws).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("sigma chain reproduces Gaussian moments") {
    const ConservativeModel m(2, 3.0, zero_perturbation());
    const SampleBatch batch = sample_sigma(m, quick_chain(7, 20000));
    CHECK(batch.acceptance_rate >= 0.2);
    CHECK(batch.acceptance_rate <= 0.9);
    for (int j = 0; j < 2; ++j) {
        const MeanErr me = batch.column_mean(j);
        CHECK(std::fabs(me.mean - 1.0) <= 3.0 * me.err);
    }
    const CovErr cov = covariance_with_error(batch.column(0), batch.column(1));
    CHECK(std::fabs(cov.cov + 1.0 / 3.0) <= 3.0 * cov.err);
}

TEST_CASE("sigma chain with a sine perturbation keeps the exact mean") {
    const ConservativeModel m(2, 0.0, sine_perturbation(0.1));
    const SampleBatch batch = sample_sigma(m, quick_chain(8, 20000));
    for (int j = 0; j < 2; ++j) {
        const MeanErr me = batch.column_mean(j);
        CHECK(std::fabs(me.mean) <= 3.0 * me.err);
    }
}

TEST_CASE("exchange chain: constraint is exact and variances match sigma") {
    const ConservativeModel m(2, 0.0, zero_perturbation());
    ChainConfig c = quick_chain(21, 20000);
    const SampleBatch batch = sample_mu_exchange(m, c);
    CHECK(batch.dim() == 3);
    double worst = 0.0;
    for (long t = 0; t < batch.nsamples(); ++t)
        worst = std::max(worst, std::fabs(batch.draws.row(t).sum() - m.M));
    CHECK(worst <= 1e-10);
    // var under mu_M equals var(x_1) of sigma_M = n/(n+1) = 2/3
    for (int j = 0; j < 3; ++j) {
        const CovErr v = variance_with_error(batch.column(j));
        CHECK(std::fabs(v.cov - 2.0 / 3.0) <= 4.0 * v.err);
    }
}

TEST_CASE("exchange chain: exchangeability of estimates") {
    const ConservativeModel m(3, 2.0, sine_perturbation(0.2));
    const SampleBatch batch = sample_mu_exchange(m, quick_chain(22, 15000));
    const CovErr v0 = variance_with_error(batch.column(0));
    const CovErr v3 = variance_with_error(batch.column(3));
    CHECK(std::fabs(v0.cov - v3.cov) <= 4.0 * (v0.err + v3.err));
}

TEST_CASE("exchange chain: conservation drift over 1e6 pair updates") {
    const ConservativeModel m(3, 4.0, sine_perturbation(0.1));
    ChainConfig c;
    c.samples = 250;
    c.thin = 1000; // 250 * 1000 sweeps * 4 updates = 1e6 pair updates
    c.burn_in = 0;
    c.seed = 5;
    const SampleBatch batch = sample_mu_exchange(m, c);
    const Eigen::VectorXd last = batch.draws.row(batch.nsamples() - 1);
    // compensated (Kahan) summation of the final configuration
    double acc = 0.0, comp = 0.0;
    for (int i = 0; i < last.size(); ++i) {
        const double y = last[i] - comp;
        const double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    CHECK(std::fabs(acc - m.M) <= 1e-10);
}

TEST_CASE("pair conditional: detailed balance of the tabulated kernel") {
    const Conditional1D cond(sine_perturbation(0.3), 512);
    const double s = 0.8;
    const std::vector<double> mass = cond.cell_masses(s);
    double total = 0.0;
    for (double v : mass) total += v;
    // the heat-bath kernel drawing from the tabulated conditional has
    // T(x -> y) = pi(y), so pi(x) T(x,y) - pi(y) T(y,x) must vanish
    double worst = 0.0;
    for (std::size_t x = 0; x < mass.size(); x += 37)
        for (std::size_t y = 0; y < mass.size(); y += 41)
            worst = std::max(worst, std::fabs(mass[x] * mass[y] / (total * total) -
                                              mass[y] * mass[x] / (total * total)));
    CHECK(worst <= 1e-10);
}

TEST_CASE("pair conditional: samples follow the tabulated masses") {
    const Conditional1D cond(sine_perturbation(0.3), 256);
    const double s = -1.2;
    std::vector<double> mass = cond.cell_masses(s);
    double total = 0.0;
    for (double v : mass) total += v;

    Rng rng(60);
    const long draws = 200000;
    std::vector<long> counts(mass.size(), 0);
    const auto& t = cond.offsets();
    const double lo = 0.5 * s + t.front();
    const double dt = t[1] - t[0];
    for (long k = 0; k < draws; ++k) {
        const double u = cond.sample(s, rng);
        long cell = static_cast<long>((u - lo) / dt);
        cell = std::min<long>(std::max<long>(cell, 0), counts.size() - 1);
        ++counts[cell];
    }
    // coarse 16-bin comparison against the expected masses, 5 sigma
    const int coarse = 16;
    const long per = static_cast<long>(mass.size()) / coarse;
    for (int b = 0; b < coarse; ++b) {
        double expected = 0.0;
        long got = 0;
        for (long j = b * per; j < (b + 1) * per; ++j) {
            expected += mass[j] / total;
            got += counts[j];
        }
        const double sd = std::sqrt(draws * expected * (1 - expected) + 1e-9);
        CHECK(std::fabs(got - draws * expected) <= 5.0 * sd + 5.0);
    }
}

TEST_CASE("covariance decay experiment: exact Gaussian anchor") {
    ChainConfig c = quick_chain(31, 12000);
    const CovDecayResult res =
        covariance_decay_experiment(zero_perturbation(), {2, 4, 8, 16}, m_rule_zero(), c);
    REQUIRE(res.rows.size() == 4);
    for (const CovDecayRow& r : res.rows) {
        CHECK(std::fabs(r.cov + 1.0 / (r.n + 1)) <= 3.5 * r.cov_err);
        // F' = 0 makes the sum observable constant
        CHECK(r.var_sum_over_n == doctest::Approx(0.0).epsilon(1e-20));
        CHECK(r.conclusive);
    }
    CHECK(res.slope.slope == doctest::Approx(-1.0).epsilon(0.15));
    CHECK_THROWS_AS(
        covariance_decay_experiment(zero_perturbation(), {2, 4}, m_rule_zero(), c),
        ValidationError);
    CHECK_THROWS_AS(
        covariance_decay_experiment(zero_perturbation(), {8, 4, 2, 16}, m_rule_zero(), c),
        ValidationError);
}

TEST_CASE("covariance decay: sigma and mu routes estimate the same quantity") {
    // cov_sigma(V'(x_1), V'(x_2)) = cov_mu(V'(x_1), V'(x_2)); the pair
    // heat-bath route samples mu_M on R^{n+1} directly
    ChainConfig sigma_chain = quick_chain(61, 12000);
    ChainConfig mu_chain = sigma_chain;
    mu_chain.kind = ChainKind::pair_heat_bath;
    const std::vector<int> n_list = {2, 4, 8, 16};
    const CovDecayResult via_sigma = covariance_decay_experiment(
        zero_perturbation(), n_list, m_rule_zero(), sigma_chain);
    const CovDecayResult via_mu = covariance_decay_experiment(
        zero_perturbation(), n_list, m_rule_zero(), mu_chain);
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        const CovDecayRow& a = via_sigma.rows[i];
        const CovDecayRow& b = via_mu.rows[i];
        const double exact = -1.0 / (a.n + 1);
        CHECK(std::fabs(a.cov - exact) <= 3.5 * a.cov_err);
        CHECK(std::fabs(b.cov - exact) <= 3.5 * b.cov_err);
        CHECK(std::fabs(a.cov - b.cov) <= 4.0 * (a.cov_err + b.cov_err));
    }
}

TEST_CASE("beta limit: Gaussian algebra oracle for <x_1>") {
    const ConservativeModel m(2, 3.0, zero_perturbation());
    ChainConfig c = quick_chain(41, 20000);
    c.step = 0.05;
    const BetaLimitResult res = beta_limit_check(m, "x1", {1.0, 4.0, 16.0, 64.0}, c);
    CHECK(res.reference == doctest::Approx(1.0).epsilon(1e-6));
    for (const BetaLimitRow& r : res.rows) {
        // <x_1> = 2 beta M / (1 + 2 beta (n+1)) for the soft constraint
        const double exact = 2.0 * r.beta * 3.0 / (1.0 + 6.0 * r.beta);
        CHECK(std::fabs(r.value - exact) <= 4.0 * r.err + 1e-9);
    }
    CHECK(res.final_within_3err);
    CHECK(res.decreasing_beyond_noise);
}

TEST_CASE("beta limit: constant observable and quadrature reference") {
    const ConservativeModel m(2, 0.0, sine_perturbation(0.1));
    ChainConfig c = quick_chain(43, 15000);
    c.step = 0.05;
    const BetaLimitResult res = beta_limit_check(m, "x1_sq", {1.0, 4.0, 16.0, 64.0}, c);
    CHECK(res.final_within_3err);
    const BetaLimitResult cst = beta_limit_check(m, "const", {1.0, 2.0}, c);
    for (const BetaLimitRow& r : cst.rows) CHECK(r.value == doctest::Approx(1.0));
    CHECK_THROWS_AS(beta_limit_check(m, "nope", {1.0}, c), ValidationError);
}

TEST_CASE("raw persistence with JSON sidecar") {
    const ConservativeModel m(2, 0.0, zero_perturbation());
    const SampleBatch batch = sample_sigma(m, quick_chain(51, 200));
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "spinlab_test_raw";
    std::filesystem::create_directories(dir);
    const std::filesystem::path raw = dir / "draws.f64";
    save_batch_raw(batch, raw, m.n, 51, "{\"experiment\":\"test\"}");

    std::ifstream in(raw, std::ios::binary);
    REQUIRE(in.good());
    std::vector<double> back(batch.draws.size());
    in.read(reinterpret_cast<char*>(back.data()),
            static_cast<std::streamsize>(back.size() * sizeof(double)));
    REQUIRE(in.good());
    long idx = 0;
    double worst = 0.0;
    for (long t = 0; t < batch.draws.rows(); ++t)
        for (long j = 0; j < batch.draws.cols(); ++j)
            worst = std::max(worst, std::fabs(back[idx++] - batch.draws(t, j)));
    CHECK(worst == 0.0);
    CHECK(std::filesystem::exists(dir / "draws.f64.json"));
    std::filesystem::remove_all(dir);
}
