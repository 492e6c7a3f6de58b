#include "spinlab/sampler.hpp"

#include "spinlab/errors.hpp"
#include "spinlab/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace spinlab {

void ChainConfig::validate() const {
    if (samples < 100) throw ValidationError("ChainConfig: samples must be >= 100");
    if (thin < 1) throw ValidationError("ChainConfig: thin must be >= 1");
    if (!(step > 0.0)) throw ValidationError("ChainConfig: step must be > 0");
    if (burn_in < 0) throw ValidationError("ChainConfig: burn_in must be >= 0");
}

std::vector<double> SampleBatch::column(int j) const {
    std::vector<double> v(draws.rows());
    for (long t = 0; t < draws.rows(); ++t) v[t] = draws(t, j);
    return v;
}

MeanErr SampleBatch::column_mean(int j) const {
    const std::vector<double> v = column(j);
    return mean_with_error(v);
}

std::vector<double> SampleBatch::trace(
    const std::function<double(const Eigen::VectorXd&)>& f) const {
    std::vector<double> v(draws.rows());
    Eigen::VectorXd x(draws.cols());
    for (long t = 0; t < draws.rows(); ++t) {
        x = draws.row(t);
        v[t] = f(x);
    }
    return v;
}

namespace {

// generic MALA targeting exp(-E); used for sigma_M and for mu_{M,beta}
SampleBatch run_mala(const std::function<double(const Eigen::VectorXd&)>& energy,
                     const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                     Eigen::VectorXd x, const ChainConfig& c) {
    c.validate();
    const int dim = static_cast<int>(x.size());
    Rng rng(c.seed);
    double tau = c.step;

    double e = energy(x);
    Eigen::VectorXd g = grad(x);
    if (!std::isfinite(e)) throw NumericalError("sampler: non-finite energy at start");

    Eigen::VectorXd y(dim), gy(dim), noise(dim);
    long accepted = 0, proposed = 0;

    auto mala_step = [&]() -> bool {
        for (int i = 0; i < dim; ++i) noise[i] = rng.normal();
        y = x - tau * g + std::sqrt(2.0 * tau) * noise;
        const double ey = energy(y);
        if (!std::isfinite(ey)) throw NumericalError("sampler: diverged chain (non-finite energy)");
        gy = grad(y);
        // log q(x|y) - log q(y|x)
        const double fwd = (y - x + tau * g).squaredNorm();
        const double bwd = (x - y + tau * gy).squaredNorm();
        const double log_alpha = e - ey + (fwd - bwd) / (4.0 * tau);
        ++proposed;
        if (std::log(rng.uniform01() + 1e-300) < log_alpha) {
            x.swap(y);
            g.swap(gy);
            e = ey;
            ++accepted;
            return true;
        }
        return false;
    };

    // burn-in with step tuning toward a mid-range acceptance rate; short
    // windows with stronger factors early so that small burn-ins still land
    // inside the required [0.2, 0.9] band
    long window_acc = 0, window_len = 0;
    for (long t = 0; t < c.burn_in; ++t) {
        window_acc += mala_step() ? 1 : 0;
        ++window_len;
        const bool early = t < 1000;
        if (window_len == (early ? 50 : 200)) {
            const double r = static_cast<double>(window_acc) / window_len;
            if (r < 0.45) tau *= early ? 0.6 : 0.7;
            else if (r > 0.75) tau *= early ? 1.6 : 1.4;
            window_acc = 0;
            window_len = 0;
        }
    }

    accepted = 0;
    proposed = 0;
    SampleBatch batch;
    batch.draws.resize(c.samples, dim);
    for (long s = 0; s < c.samples; ++s) {
        for (long k = 0; k < c.thin; ++k) mala_step();
        batch.draws.row(s) = x;
    }
    batch.acceptance_rate = proposed > 0 ? static_cast<double>(accepted) / proposed : 0.0;
    if (batch.acceptance_rate < 0.2 || batch.acceptance_rate > 0.9)
        throw NumericalError("sampler: auto-tune failure (acceptance rate " +
                             std::to_string(batch.acceptance_rate) + ")");
    batch.iact.resize(dim);
    for (int j = 0; j < dim; ++j)
        batch.iact[j] = integrated_autocorr_time(batch.column(j));
    return batch;
}

} // namespace

SampleBatch sample_sigma(const ConservativeModel& m, const ChainConfig& c) {
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(m.n, m.M / (m.n + 1));
    return run_mala(
        [&m](const Eigen::VectorXd& x) { return m.energy(x); },
        [&m](const Eigen::VectorXd& x) { return m.grad_energy(x); }, std::move(x0), c);
}

namespace {

// exp(u) for |u| <= 0.75 via (Taylor at u/8)^8; relative error < 1e-6, far
// below the piecewise-linear CDF granularity
inline double exp_small(double u) {
    const double v = u * 0.125;
    double e = 1.0 + v * (1.0 + v * (0.5 + v * (1.0 / 6.0 + v * (1.0 / 24.0))));
    e *= e;
    e *= e;
    e *= e;
    return e;
}

} // namespace

Conditional1D::Conditional1D(const PerturbationSpec& p, int nodes, double halfwidth_sd)
    : p_(p) {
    if (nodes < 16) throw ValidationError("Conditional1D: too few nodes");
    // base Gaussian in the offset t = u - s/2 has variance 1/2
    const double w = halfwidth_sd / std::sqrt(2.0);
    t_.resize(nodes);
    gauss_.resize(nodes);
    dt_ = 2.0 * w / (nodes - 1);
    for (int i = 0; i < nodes; ++i) {
        t_[i] = -w + i * dt_;
        gauss_[i] = std::exp(-t_[i] * t_[i]);
    }
    if (p_.pair_scale && p_.pair_profile) {
        profile_.resize(nodes);
        for (int i = 0; i < nodes; ++i) profile_[i] = p_.pair_profile(t_[i]);
    }
}

void Conditional1D::weights_at(double s, std::vector<double>& w) const {
    const int n = static_cast<int>(t_.size());
    w.resize(n);
    if (p_.is_zero()) {
        std::copy(gauss_.begin(), gauss_.end(), w.begin());
        return;
    }
    const double half = 0.5 * s;
    if (!profile_.empty()) {
        // F(h+t) + F(h-t) = a(h) * profile(t) with |a * profile| <= 2 sup_f
        const double a = -p_.pair_scale(half);
        if (2.0 * p_.sup_f <= 0.75) {
            for (int i = 0; i < n; ++i) w[i] = gauss_[i] * exp_small(a * profile_[i]);
        } else {
            for (int i = 0; i < n; ++i) w[i] = gauss_[i] * std::exp(a * profile_[i]);
        }
        return;
    }
    for (int i = 0; i < n; ++i)
        w[i] = gauss_[i] * std::exp(-(p_.f(half + t_[i]) + p_.f(half - t_[i])));
}

std::vector<double> Conditional1D::cell_masses(double s) const {
    std::vector<double> w;
    weights_at(s, w);
    std::vector<double> m(w.size() - 1);
    for (std::size_t i = 0; i + 1 < w.size(); ++i) m[i] = 0.5 * (w[i] + w[i + 1]) * dt_;
    return m;
}

double Conditional1D::sample(double s, Rng& rng) const {
    thread_local std::vector<double> w, cum;
    weights_at(s, w);
    const int n = static_cast<int>(w.size());
    cum.resize(n);
    cum[0] = 0.0;
    for (int i = 1; i < n; ++i) cum[i] = cum[i - 1] + 0.5 * (w[i - 1] + w[i]);
    const double total = cum[n - 1];
    if (!(total > 0.0) || !std::isfinite(total))
        throw NumericalError("Conditional1D: degenerate conditional density");
    const double r = rng.uniform01() * total;
    // locate the cell, then invert the piecewise-quadratic CDF inside it
    const auto it = std::upper_bound(cum.begin(), cum.end(), r);
    int j = static_cast<int>(it - cum.begin()) - 1;
    j = std::clamp(j, 0, n - 2);
    const double target = r - cum[j];              // in [0, (w_j+w_{j+1})/2]
    const double a = 0.5 * (w[j + 1] - w[j]);      // density slope term
    const double b = w[j];
    double xi;
    if (std::fabs(a) < 1e-14 * (b + 1e-300)) {
        xi = b > 0.0 ? target / b : 0.5;
    } else {
        const double disc = std::sqrt(std::max(0.0, b * b + 4.0 * a * target));
        xi = (b + disc) > 0.0 ? 2.0 * target / (b + disc) : 0.0;
    }
    xi = std::clamp(xi, 0.0, 1.0);
    return 0.5 * s + t_[j] + xi * dt_;
}

SampleBatch sample_mu_exchange(const ConservativeModel& m, const ChainConfig& c) {
    c.validate();
    const int np1 = m.n + 1;
    if (np1 < 2) throw ValidationError("sample_mu_exchange: need n + 1 >= 2");
    Conditional1D cond(m.p);
    Rng rng(c.seed);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(np1, m.M / np1);

    auto sweep = [&]() {
        for (int k = 0; k < np1; ++k) {
            const int i = static_cast<int>(rng.uniform_below(np1));
            int j = static_cast<int>(rng.uniform_below(np1 - 1));
            if (j >= i) ++j;
            const double s = x[i] + x[j];
            const double u = cond.sample(s, rng);
            x[i] = u;
            x[j] = s - u;
        }
    };

    for (long t = 0; t < c.burn_in; ++t) sweep();
    SampleBatch batch;
    batch.draws.resize(c.samples, np1);
    for (long t = 0; t < c.samples; ++t) {
        for (long k = 0; k < c.thin; ++k) sweep();
        batch.draws.row(t) = x;
    }
    batch.acceptance_rate = 1.0;
    batch.iact.resize(np1);
    for (int j = 0; j < np1; ++j)
        batch.iact[j] = integrated_autocorr_time(batch.column(j));
    return batch;
}

CovErr pair_averaged_vprime_cov(const SampleBatch& batch, const PerturbationSpec& p,
                                int nbatches) {
    const long T = batch.nsamples();
    const int n = batch.dim();
    if (n < 2) throw ValidationError("pair_averaged_vprime_cov: need dim >= 2");
    // pair-averaged product statistic: for centered d_i = V'(x_i) - mean_i,
    // sum_{i<j} d_i d_j = ((sum d)^2 - sum d^2)/2.  Batch means below.
    Eigen::MatrixXd vp(T, n);
    for (long t = 0; t < T; ++t)
        for (int i = 0; i < n; ++i) {
            const double xi = batch.draws(t, i);
            vp(t, i) = xi + p.df(xi);
        }
    nbatches = static_cast<int>(std::min<long>(nbatches, T / 8));
    if (nbatches < 2) nbatches = 2;
    const long len = T / nbatches;
    // global means: per-batch centering biases each batch by O(iact/len)
    const Eigen::VectorXd mean = vp.colwise().mean();
    std::vector<double> per_batch(nbatches);
    for (int b = 0; b < nbatches; ++b) {
        const long lo = b * len, hi = lo + len;
        double acc = 0.0;
        for (long t = lo; t < hi; ++t) {
            double sd = 0.0, sd2 = 0.0;
            for (int i = 0; i < n; ++i) {
                const double d = vp(t, i) - mean[i];
                sd += d;
                sd2 += d * d;
            }
            acc += 0.5 * (sd * sd - sd2);
        }
        per_batch[b] = acc / (static_cast<double>(len) * (0.5 * n * (n - 1.0)));
    }
    CovErr r;
    for (double v : per_batch) r.cov += v;
    r.cov /= nbatches;
    double cvar = 0.0;
    for (double v : per_batch) cvar += (v - r.cov) * (v - r.cov);
    cvar /= (nbatches - 1);
    r.err = std::sqrt(cvar / nbatches);
    return r;
}

CovDecayResult covariance_decay_experiment(const PerturbationSpec& p,
                                           const std::vector<int>& n_list,
                                           const MRule& m_rule, const ChainConfig& c) {
    if (n_list.size() < 4) throw ValidationError("covariance_decay: need >= 4 sizes");
    if (!std::is_sorted(n_list.begin(), n_list.end()))
        throw ValidationError("covariance_decay: n_list must be ascending");

    CovDecayResult result;
    std::vector<double> ns, covs;
    for (std::size_t cell = 0; cell < n_list.size(); ++cell) {
        const int n = n_list[cell];
        if (n < 2) throw ValidationError("covariance_decay: need n >= 2");
        const ConservativeModel m(n, m_rule(n), p);
        const SampleBatch batch = c.kind == ChainKind::pair_heat_bath
                                      ? sample_mu_exchange(m, c.with_seed(split_seed(c.seed, cell)))
                                      : sample_sigma(m, c.with_seed(split_seed(c.seed, cell)));
        const CovErr ce = pair_averaged_vprime_cov(batch, p);

        CovDecayRow row;
        row.n = n;
        row.M = m_rule(n);
        row.cov = ce.cov;
        row.cov_err = ce.err;

        // second bound of the covariance lemma: Var(sum F'(x_i) + F'(M-Sx))/n
        const std::vector<double> fsum = batch.trace([&](const Eigen::VectorXd& x) {
            double sf = 0.0;
            for (long i = 0; i < x.size(); ++i) sf += p.df(x[i]);
            if (x.size() == m.n) sf += p.df(m.M - x.sum()); // sigma route adds the implicit site
            return sf;
        });
        const CovErr vs = variance_with_error(fsum);
        row.var_sum_over_n = vs.cov / n;
        row.var_err = vs.err / n;
        row.conclusive = row.cov_err <= std::fabs(row.cov);
        result.rows.push_back(row);
        ns.push_back(n);
        covs.push_back(row.cov);
    }
    result.slope = fit_loglog(ns, covs);
    return result;
}

namespace {

struct NamedObservable {
    std::function<double(const Eigen::VectorXd&)> on_mu;    // on R^{n+1}
    std::function<double(const Eigen::VectorXd&)> on_sigma; // on R^n via x_{n+1} = M - sum
};

NamedObservable resolve_observable(const std::string& name, const ConservativeModel& m) {
    NamedObservable o;
    if (name == "x1") {
        o.on_mu = [](const Eigen::VectorXd& y) { return y[0]; };
        o.on_sigma = [](const Eigen::VectorXd& x) { return x[0]; };
    } else if (name == "x1_sq") {
        o.on_mu = [](const Eigen::VectorXd& y) { return y[0] * y[0]; };
        o.on_sigma = [](const Eigen::VectorXd& x) { return x[0] * x[0]; };
    } else if (name == "sum") {
        o.on_mu = [](const Eigen::VectorXd& y) { return y.sum(); };
        o.on_sigma = [M = m.M](const Eigen::VectorXd&) { return M; };
    } else if (name == "const") {
        o.on_mu = [](const Eigen::VectorXd&) { return 1.0; };
        o.on_sigma = [](const Eigen::VectorXd&) { return 1.0; };
    } else {
        throw ValidationError("beta_limit_check: unknown observable '" + name + "'");
    }
    return o;
}

} // namespace

BetaLimitResult beta_limit_check(const ConservativeModel& m, const std::string& observable,
                                 const std::vector<double>& beta_list, const ChainConfig& c) {
    if (beta_list.empty()) throw ValidationError("beta_limit_check: empty beta list");
    for (double b : beta_list)
        if (!(b > 0.0)) throw ValidationError("beta_limit_check: beta must be > 0");
    const NamedObservable obs = resolve_observable(observable, m);

    BetaLimitResult result;
    {
        SigmaQuadrature quad(m);
        result.reference = quad.expect(obs.on_sigma);
    }

    const int np1 = m.n + 1;
    for (std::size_t cell = 0; cell < beta_list.size(); ++cell) {
        const double beta = beta_list[cell];
        auto energy = [&m, beta, np1](const Eigen::VectorXd& y) {
            double e = 0.0;
            for (int i = 0; i < np1; ++i) e += 0.5 * y[i] * y[i] + m.p.f(y[i]);
            const double defect = m.M - y.sum();
            return e + beta * defect * defect;
        };
        auto grad = [&m, beta, np1](const Eigen::VectorXd& y) {
            const double defect = m.M - y.sum();
            Eigen::VectorXd g(np1);
            for (int i = 0; i < np1; ++i) g[i] = y[i] + m.p.df(y[i]) - 2.0 * beta * defect;
            return g;
        };
        Eigen::VectorXd y0 = Eigen::VectorXd::Constant(np1, m.M / np1);
        ChainConfig cc = c.with_seed(split_seed(c.seed, cell));
        cc.step = std::min(cc.step, 0.25 / (1.0 + 2.0 * beta * np1)); // stiff constraint
        const SampleBatch batch = run_mala(energy, grad, std::move(y0), cc);
        const MeanErr me = mean_with_error(batch.trace(obs.on_mu));
        result.rows.push_back({beta, me.mean, me.err});
    }

    for (std::size_t k = 0; k + 1 < result.rows.size(); ++k) {
        const double gap_k = std::fabs(result.rows[k].value - result.reference);
        const double gap_next = std::fabs(result.rows[k + 1].value - result.reference);
        const double noise = 2.0 * (result.rows[k].err + result.rows[k + 1].err);
        if (gap_next > gap_k + noise) result.decreasing_beyond_noise = false;
    }
    const BetaLimitRow& last = result.rows.back();
    result.final_within_3err =
        std::fabs(last.value - result.reference) <= 3.0 * std::max(last.err, 1e-12);
    return result;
}

} // namespace spinlab
