#include "spinlab/acceptance.hpp"

#include "spinlab/errors.hpp"
#include "spinlab/funineq.hpp"
#include "spinlab/kawasaki.hpp"
#include "spinlab/lattice.hpp"
#include "spinlab/luyau.hpp"
#include "spinlab/observables.hpp"
#include "spinlab/parallel.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace spinlab {

namespace {

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << "[FAILED " << what << "] ";
        }
    }
    void note(const std::string& s) { detail << s << " "; }
    std::string str() const { return detail.str(); }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// 1. Gaussian exactness: F = 0, n = 2 gives P = 1.00 +- 0.02 (grid) and
//    L = 2.00 +- 0.05 (ascent).
Check criterion_gaussian_exactness(std::uint64_t) {
    Check c;
    const ConservativeModel m(2, 0.0, zero_perturbation());
    const GridSpec g{96, 8.0};
    const SpectralReport gap = generator_gap(m, g);
    c.note("P=" + fmt(gap.poincare_estimate));
    c.require(std::fabs(gap.poincare_estimate - 1.0) <= 0.02, "P within 1.00 +- 0.02");
    const SpectralReport lsi = lsi_constant_grid(m, g);
    c.note("L=" + fmt(lsi.lsi_estimate.value_or(0.0)));
    c.require(lsi.lsi_estimate && std::fabs(*lsi.lsi_estimate - 2.0) <= 0.05,
              "L within 2.00 +- 0.05");
    return c;
}

// 2. Perturbative bound: F = sine(0.05), grid P at n in {1,2} respects the
//    closed-form constant e^{0.2}/(2 e^{-0.2} - 1) = 1.9160.
Check criterion_perturbative_bound(std::uint64_t) {
    Check c;
    const PerturbationSpec p = sine_perturbation(0.05);
    const double bound = perturbative_poincare_constant(p.osc_f);
    c.note("bound=" + fmt(bound));
    for (int n : {1, 2}) {
        const ConservativeModel m(n, 0.0, p);
        const SpectralReport gap = generator_gap(m, GridSpec{96, 8.0});
        c.note("P(n=" + std::to_string(n) + ")=" + fmt(gap.poincare_estimate));
        c.require(gap.poincare_estimate <= bound + gap.error_estimate + 1e-9,
                  "P <= perturbative constant at n=" + std::to_string(n));
    }
    return c;
}

// 3. Mean identity: coordinate means equal M/(n+1) within 3 error bars.
Check criterion_mean_identity(std::uint64_t seed) {
    Check c;
    const std::vector<std::pair<int, double>> cells = {{2, 3.0}, {8, 0.0}, {16, 17.0}};
    const std::vector<PerturbationSpec> fams = {zero_perturbation(), sine_perturbation(0.1)};
    ChainConfig cc;
    cc.samples = 20000;
    cc.thin = 2;
    cc.burn_in = 3000;
    cc.step = 0.2;
    long cell_id = 0;
    for (const auto& [n, M] : cells) {
        for (const PerturbationSpec& p : fams) {
            const ConservativeModel m(n, M, p);
            const SampleBatch batch =
                sample_sigma(m, cc.with_seed(split_seed(seed, cell_id++)));
            const double target = M / (n + 1);
            // pooled coordinate mean at 3 error bars; individual coordinates
            // at 4 (the suite checks 54 coordinate z-scores, so a flat 3 sigma
            // per coordinate would false-fail ~14% of seeds by multiplicity)
            const MeanErr pooled = mean_with_error(
                batch.trace([](const Eigen::VectorXd& x) { return x.mean(); }));
            double worst = 0.0;
            for (int j = 0; j < n; ++j) {
                const MeanErr me = batch.column_mean(j);
                worst = std::max(worst, std::fabs(me.mean - target) / me.err);
            }
            c.note("(" + std::to_string(n) + "," + fmt(M) + "," + p.name + "):pooled|dev|/err=" +
                   fmt(std::fabs(pooled.mean - target) / pooled.err) +
                   ",max_coord=" + fmt(worst));
            c.require(std::fabs(pooled.mean - target) <= 3.0 * pooled.err,
                      "pooled mean within 3 error bars for n=" + std::to_string(n) +
                          " family=" + p.name);
            c.require(worst <= 4.0, "every coordinate within 4 error bars for n=" +
                                        std::to_string(n) + " family=" + p.name);
        }
    }
    return c;
}

// 4. Covariance decay: slope -1 +- 0.2 for sine(0.2); exact -1/(n+1) matched
//    for F = 0.
Check criterion_covariance_decay(std::uint64_t seed) {
    Check c;
    const std::vector<int> n_list = {4, 8, 16, 32, 64};
    ChainConfig cc;
    cc.samples = 30000;
    cc.thin = 2;
    cc.burn_in = 3000;
    cc.step = 0.15;
    {
        const CovDecayResult res = covariance_decay_experiment(
            sine_perturbation(0.2), n_list, m_rule_zero(), cc.with_seed(split_seed(seed, 1)));
        c.note("slope=" + fmt(res.slope.slope) + "+-" + fmt(res.slope.slope_se));
        c.require(std::fabs(res.slope.slope + 1.0) <= 0.2, "log-log slope -1 +- 0.2");
        for (const CovDecayRow& r : res.rows)
            c.require(r.conclusive, "conclusive cell at n=" + std::to_string(r.n));
    }
    {
        const CovDecayResult res = covariance_decay_experiment(
            zero_perturbation(), n_list, m_rule_zero(), cc.with_seed(split_seed(seed, 2)));
        for (const CovDecayRow& r : res.rows) {
            const double exact = -1.0 / (r.n + 1);
            c.require(std::fabs(r.cov - exact) <= 3.0 * r.cov_err,
                      "F=0 exact value matched at n=" + std::to_string(r.n));
        }
    }
    return c;
}

// 5. One-spin curvature: min phi'' >= 1 - C/n with one C stable within a
//    factor 2 across n in {8,16,32}; quadrature cross-check 1 + 1/3 at n = 3.
Check criterion_one_spin(std::uint64_t seed) {
    Check c;
    for (double x1 : {-1.0, 0.0, 1.0}) {
        const ConservativeModel m3(3, 0.0, zero_perturbation());
        const double quad = one_spin_curvature_quadrature(m3, x1);
        c.require(std::fabs(quad - (1.0 + 1.0 / 3.0)) <= 1e-3,
                  "quadrature phi''(x1=" + fmt(x1) + ") = 4/3 +- 1e-3");
    }

    const PerturbationSpec p = sine_perturbation(0.1);
    std::vector<double> x1_grid;
    for (int i = 0; i < 13; ++i) x1_grid.push_back(-3.0 + 6.0 * i / 12.0);
    ChainConfig cc;
    cc.samples = 30000;
    cc.thin = 2;
    cc.burn_in = 3000;
    cc.step = 0.15;

    std::vector<int> ns = {8, 16, 32};
    std::vector<double> slack(ns.size());
    for (std::size_t k = 0; k < ns.size(); ++k) {
        const ConservativeModel m(ns[k], 0.0, p);
        const OneSpinResult res =
            one_spin_curvature(m, x1_grid, cc.with_seed(split_seed(seed, 10 + k)));
        double min_phi = 1e300;
        int flagged = 0;
        for (const OneSpinRow& r : res.rows) {
            min_phi = std::min(min_phi, r.phi_dd);
            flagged += r.flagged ? 1 : 0;
        }
        slack[k] = ns[k] * (1.0 - min_phi);
        c.note("n=" + std::to_string(ns[k]) + ":min_phi''=" + fmt(min_phi) +
               ",C_n=" + fmt(slack[k]));
        c.require(flagged == 0, "no flagged rows at n=" + std::to_string(ns[k]));
    }
    double smax = -1e300, smin = 1e300;
    for (double s : slack) {
        smax = std::max(smax, s);
        smin = std::min(smin, s);
    }
    // the bound holds with the single C = max_n C_n; stability: either the
    // fitted values sit in a narrow band (covers C <= 0, i.e. phi'' >= 1
    // uniformly) or they agree within a factor 2
    const bool stable =
        (smax - smin <= 0.5) || (smin > 0.0 && smax / smin <= 2.0) ||
        (smax < 0.0 && smin / smax <= 2.0);
    c.require(stable, "fitted C stable within factor 2");
    return c;
}

// 6. Lu-Yau identities at n in {2,3}: machine-level reconstruction and
//    residuals <= 1e-5 for the gradient/IBP identities.
Check criterion_luyau(std::uint64_t) {
    Check c;
    for (const PerturbationSpec& p : {zero_perturbation(), sine_perturbation(0.1)}) {
        for (int n : {2, 3}) {
            const ConservativeModel m(n, 1.0, p);
            const ConditionalTower tower(m, 64);
            for (const Observable& obs : luyau_dictionary(m)) {
                const DecompositionReport var = variance_decomposition(tower, obs.f);
                c.require(var.reconstruction_error <= 1e-6 * std::max(var.total, 1e-12),
                          "variance reconstruction " + obs.name + " n=" + std::to_string(n));
                // positive test function: f itself when already positive
                // (e^{x_1}), else exp(f/2); never exp(exp(...)), it overflows
                const bool already_positive = obs.name.rfind("exp_", 0) == 0;
                const DecompositionReport ent = entropy_decomposition(
                    tower, [&](const Eigen::VectorXd& x) {
                        return already_positive ? obs.f(x) : std::exp(0.5 * obs.f(x));
                    });
                c.require(ent.reconstruction_error <= 1e-6 * std::max(ent.total, 1e-12),
                          "entropy reconstruction for " + obs.name);
                for (double t : var.terms) c.require(t >= -1e-10, "variance term >= 0");
                for (double t : ent.terms) c.require(t >= -1e-10, "entropy term >= 0");
                for (int k = 1; k <= n - 1; ++k) {
                    const double gr = gradient_identity_check(tower, obs, k);
                    const double ib = integration_by_parts_check(tower, obs, k);
                    c.require(gr <= 1e-5, "gradient identity " + obs.name +
                                              " k=" + std::to_string(k) + " res=" + fmt(gr));
                    c.require(ib <= 1e-5, "integration-by-parts " + obs.name +
                                              " k=" + std::to_string(k) + " res=" + fmt(ib));
                }
            }
        }
    }
    return c;
}

// 7. Path counting: L = 2 ratio exactly 1/2; ratio/L^2 near 1/pi^2 at d=1
//    L=32; enumerated congestion exponent <= d+1.
Check criterion_path_counting(std::uint64_t) {
    Check c;
    {
        const double r2 = comparison_ratio(LatticeBox(1, 2));
        c.require(std::fabs(r2 - 0.5) <= 1e-12, "d=1 L=2 ratio = 1/2");
    }
    {
        const double r = comparison_ratio(LatticeBox(1, 32));
        const double limit = 1.0 / (M_PI * M_PI);
        c.note("ratio/L^2(L=32)=" + fmt(r / 1024.0));
        c.require(std::fabs(r / 1024.0 - limit) <= 0.1 * limit,
                  "d=1 L=32 ratio/L^2 within 10% of 1/pi^2");
    }
    for (int d : {1, 2}) {
        std::vector<double> ls, congs, ratios;
        for (int L = 3; L <= 12; ++L) {
            const LatticeBox box(d, L);
            const PathSystem ps = build_paths(box);
            c.require(ps.congestion_sum() == ps.total_path_length,
                      "congestion double-counting identity");
            ls.push_back(L);
            congs.push_back(static_cast<double>(ps.max_congestion));
            ratios.push_back(comparison_ratio(box) / (static_cast<double>(L) * L));
        }
        const SlopeFit fit = fit_loglog(ls, congs);
        c.note("d=" + std::to_string(d) + ":cong_exp=" + fmt(fit.slope));
        c.require(fit.slope <= d + 1 + 0.1,
                  "congestion exponent <= d+1 for d=" + std::to_string(d));
        double rmax = 0.0, rmin = 1e300;
        for (double r : ratios) {
            rmax = std::max(rmax, r);
            rmin = std::min(rmin, r);
        }
        c.require(rmax / rmin <= 1.5, "ratio/L^2 bounded over the L sweep");
    }
    return c;
}

// 8. Kawasaki scaling: dynamic exponent z = 2.0 +- 0.3 for F = 0 and sine(0.2).
Check criterion_kawasaki(std::uint64_t seed) {
    Check c;
    const std::vector<int> L_list = {4, 8, 16, 32};
    const int replicas = 3; // independent chains per (family, L); tau averaged
    int fam = 0;
    for (const PerturbationSpec& p : {zero_perturbation(), sine_perturbation(0.2)}) {
        std::vector<KawasakiRow> rows(L_list.size() * replicas);
        parallel_for(static_cast<long>(rows.size()), [&](long cell) {
            const int L = L_list[cell / replicas];
            ChainConfig cc;
            cc.thin = 1;
            const double tau_guess = 0.45 * L * L; // measured tau/L^2 is ~0.4
            cc.samples = std::max<long>(8000, static_cast<long>(100.0 * tau_guess));
            cc.burn_in = std::max<long>(500, static_cast<long>(15.0 * tau_guess));
            cc.seed = split_seed(seed, 100 + fam * 100 + cell);
            rows[cell] = kawasaki_tau(LatticeBox(1, L), p, 0.0, cc);
        });
        std::vector<double> ls, taus, errs;
        for (std::size_t k = 0; k < L_list.size(); ++k) {
            double tau = 0.0, err2 = 0.0;
            for (int r = 0; r < replicas; ++r) {
                tau += rows[k * replicas + r].tau;
                err2 += rows[k * replicas + r].tau_err * rows[k * replicas + r].tau_err;
            }
            ls.push_back(L_list[k]);
            taus.push_back(tau / replicas);
            errs.push_back(std::sqrt(err2) / replicas);
        }
        const SlopeFit fit = fit_loglog_weighted(ls, taus, errs);
        c.note(p.name + ":z=" + fmt(fit.slope) + "+-" + fmt(fit.slope_se));
        c.require(std::fabs(fit.slope - 2.0) <= 0.3, "z = 2.0 +- 0.3 for " + p.name);
        ++fam;
    }
    return c;
}

// 9. F = 0 degeneracy of S: cov(f, S) = 0 to MC error for all dictionary f.
Check criterion_s_degeneracy(std::uint64_t seed) {
    Check c;
    const ConservativeModel m(8, 3.0, zero_perturbation());
    ChainConfig cc;
    cc.samples = 10000;
    cc.thin = 2;
    cc.burn_in = 2000;
    cc.step = 0.2;
    cc.seed = split_seed(seed, 900);
    const SampleBatch batch = sample_sigma(m, cc);
    const std::vector<double> s_trace = batch.trace([&](const Eigen::VectorXd& x) {
        double s = 0.0;
        for (int i = 0; i < m.n; ++i) s += x[i] + m.p.df(x[i]);
        const double last = m.M - x.sum();
        return s + last + m.p.df(last);
    });
    for (const Observable& obs : sigma_dictionary(m)) {
        const CovErr ce = covariance_with_error(batch.trace(obs.f), s_trace);
        c.require(std::fabs(ce.cov) <= 3.0 * ce.err + 1e-10,
                  "cov(" + obs.name + ", S) = 0 to MC error");
    }
    return c;
}

// 10. Uniformity sweep: variational Poincare lower bounds for sine(0.1) show
//     no upward trend in n (n >= 16 half vs n < 16 half, 25% headroom).
Check criterion_uniformity(std::uint64_t seed) {
    Check c;
    const PerturbationSpec p = sine_perturbation(0.1);
    const std::vector<int> n_list = {2, 4, 8, 16, 32, 64};
    const std::vector<MRule> rules = {m_rule_zero(), m_rule_mean_one()};
    ChainConfig cc;
    cc.samples = 20000;
    cc.thin = 2;
    cc.burn_in = 3000;
    cc.step = 0.15;

    struct Cell {
        int n;
        double bound;
    };
    std::vector<Cell> cells(n_list.size() * rules.size());
    parallel_for(static_cast<long>(cells.size()), [&](long idx) {
        const int n = n_list[idx / rules.size()];
        const double M = rules[idx % rules.size()](n);
        const ConservativeModel m(n, M, p);
        const SampleBatch batch = sample_sigma(m, cc.with_seed(split_seed(seed, 500 + idx)));
        cells[idx] = {n, variational_gap_lower_bound(batch, sigma_dictionary(m))};
    });
    double lo_max = 0.0, hi_max = 0.0;
    for (const Cell& cell : cells) {
        if (cell.n < 16) lo_max = std::max(lo_max, cell.bound);
        else hi_max = std::max(hi_max, cell.bound);
    }
    c.note("low_half_max=" + fmt(lo_max) + ",high_half_max=" + fmt(hi_max));
    c.require(hi_max <= 1.25 * lo_max, "no upward trend (25% headroom)");
    return c;
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Check(std::uint64_t)> fn;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all = {
        {1, "gaussian_exactness", 60, criterion_gaussian_exactness},
        {2, "perturbative_bound", 120, criterion_perturbative_bound},
        {3, "mean_identity", 120, criterion_mean_identity},
        {4, "covariance_decay", 600, criterion_covariance_decay},
        {5, "one_spin_curvature", 600, criterion_one_spin},
        {6, "luyau_identities", 300, criterion_luyau},
        {7, "path_counting", 120, criterion_path_counting},
        {8, "kawasaki_scaling", 1800, criterion_kawasaki},
        {9, "s_degeneracy", 60, criterion_s_degeneracy},
        {10, "uniformity_sweep", 1200, criterion_uniformity},
    };
    return all;
}

} // namespace

std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids, std::uint64_t seed) {
    std::vector<CriterionResult> results;
    for (const Criterion& crit : criteria()) {
        if (!ids.empty() && std::find(ids.begin(), ids.end(), crit.id) == ids.end()) continue;
        CriterionResult r;
        r.id = crit.id;
        r.name = crit.name;
        r.budget_seconds = crit.budget_seconds;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const Check c = crit.fn(seed);
            r.passed = c.ok;
            r.detail = c.str();
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (r.seconds > r.budget_seconds) {
            r.passed = false;
            r.detail += "[FAILED runtime budget]";
        }
        results.push_back(r);
    }
    return results;
}

std::string format_result(const CriterionResult& r) {
    std::ostringstream out;
    out << (r.passed ? "PASS" : "FAIL") << " criterion " << r.id << ": " << r.name << " ("
        << fmt(r.seconds) << "s/" << fmt(r.budget_seconds) << "s) " << r.detail;
    return out.str();
}

} // namespace spinlab
