#include "spinlab/luyau.hpp"

#include "spinlab/errors.hpp"
#include "spinlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace spinlab {

ConditionalTower::ConditionalTower(const ConservativeModel& m, int nodes_per_axis,
                                   double halfwidth, std::vector<int> order,
                                   ChainConfig inner_mc)
    : model_(m), nodes_(nodes_per_axis), halfwidth_(halfwidth), order_(std::move(order)),
      inner_mc_(inner_mc) {
    if (m.n <= 3) quad_.emplace(m, nodes_per_axis, halfwidth);
    if (order_.empty()) {
        order_.resize(m.n);
        std::iota(order_.begin(), order_.end(), 0);
    }
    if (static_cast<int>(order_.size()) != m.n)
        throw ValidationError("ConditionalTower: order must have n entries");
    std::vector<int> seen(m.n, 0);
    for (int v : order_) {
        if (v < 0 || v >= m.n || seen[v]++)
            throw ValidationError("ConditionalTower: order is not a permutation");
    }
}

const SigmaQuadrature& ConditionalTower::grid() const {
    if (!quad_)
        throw ValidationError("ConditionalTower: tensor grid exists only for n <= 3");
    return *quad_;
}

MeanErr ConditionalTower::suffix_mean_err(const ScalarField& h,
                                          const std::vector<double>& prefix) const {
    const int k = static_cast<int>(prefix.size());
    const int n = model_.n;
    if (k > n) throw ValidationError("ConditionalTower: prefix longer than n");
    Eigen::VectorXd x(n);
    double s = 0.0;
    for (int a = 0; a < k; ++a) {
        x[order_[a]] = prefix[a];
        s += prefix[a];
    }
    if (k == n) return MeanErr{h(x), 0.0, 1.0};
    const ConservativeModel inner(n - k, model_.M - s, model_.p);
    if (n - k <= 3) {
        const SigmaQuadrature iq(inner, nodes_, halfwidth_);
        const double mean = iq.expect([&](const Eigen::VectorXd& y) {
            for (int a = k; a < n; ++a) x[order_[a]] = y[a - k];
            return h(x);
        });
        return MeanErr{mean, 0.0, 1.0};
    }
    // nested MC: one inner chain per conditioning point, seed derived from
    // the prefix bits so repeated evaluations are deterministic
    std::uint64_t seed = inner_mc_.seed;
    for (double v : prefix) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        seed = split_seed(seed, bits);
    }
    const SampleBatch batch = sample_sigma(inner, inner_mc_.with_seed(seed));
    return mean_with_error(batch.trace([&](const Eigen::VectorXd& y) {
        for (int a = k; a < n; ++a) x[order_[a]] = y[a - k];
        return h(x);
    }));
}

double ConditionalTower::suffix_expect(const ScalarField& h,
                                       const std::vector<double>& prefix) const {
    return suffix_mean_err(h, prefix).mean;
}

double ConditionalTower::conditional_expectation(const ScalarField& f,
                                                 const std::vector<double>& prefix) const {
    return suffix_mean_err(f, prefix).mean;
}

MeanErr ConditionalTower::conditional_expectation_with_error(
    const ScalarField& f, const std::vector<double>& prefix) const {
    return suffix_mean_err(f, prefix);
}

double ConditionalTower::suffix_cov(const ScalarField& f, const ScalarField& g,
                                    const std::vector<double>& prefix) const {
    const double mf = suffix_expect(f, prefix);
    const double mg = suffix_expect(g, prefix);
    return suffix_expect(
        [&](const Eigen::VectorXd& x) { return (f(x) - mf) * (g(x) - mg); }, prefix);
}

// --- tensor decompositions ---------------------------------------------------

namespace {

// evaluates f over the full tensor, honoring the tower's coordinate order
std::vector<double> tensor_values(const ConditionalTower& tower, const ScalarField& f) {
    const SigmaQuadrature& q = tower.grid();
    const int n = tower.n();
    const int nodes = q.nodes_per_axis();
    const auto& axis = q.axis_nodes();
    const long size = q.tensor_size();
    std::vector<double> vals(size);
    Eigen::VectorXd x(n);
    std::vector<int> idx(n, 0);
    for (int a = 0; a < n; ++a) x[tower.order()[a]] = axis[0];
    for (long flat = 0; flat < size; ++flat) {
        vals[flat] = f(x);
        for (int a = n - 1; a >= 0; --a) {
            if (++idx[a] < nodes) {
                x[tower.order()[a]] = axis[idx[a]];
                break;
            }
            idx[a] = 0;
            x[tower.order()[a]] = axis[0];
        }
    }
    return vals;
}

// A_k = sum over prefixes of W_k * phi(G_k / W_k), reduced level by level.
// phi(m) = m^2 gives the variance ladder, phi(m) = m log m the entropy one.
struct Ladder {
    std::vector<double> a;  // A_k, k = 0..n
    double wtot = 0.0;
};

template <typename Phi>
Ladder reduce_ladder(const ConditionalTower& tower, const std::vector<double>& vals,
                     Phi&& phi) {
    const SigmaQuadrature& q = tower.grid();
    const int n = tower.n();
    const int nodes = q.nodes_per_axis();
    std::vector<double> w = q.weight_tensor();
    std::vector<double> g(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) g[i] = w[i] * vals[i];

    Ladder lad;
    lad.a.assign(n + 1, 0.0);
    long level_size = q.tensor_size();
    for (int k = n; k >= 1; --k) {
        double acc = 0.0;
        for (long i = 0; i < level_size; ++i) {
            if (w[i] > 0.0) acc += w[i] * phi(g[i] / w[i]);
        }
        lad.a[k] = acc;
        // contract the last remaining axis
        const long next = level_size / nodes;
        for (long p = 0; p < next; ++p) {
            double ws = 0.0, gs = 0.0;
            const long base = p * nodes;
            for (int j = 0; j < nodes; ++j) {
                ws += w[base + j];
                gs += g[base + j];
            }
            w[p] = ws;
            g[p] = gs;
        }
        level_size = next;
    }
    lad.wtot = w[0];
    lad.a[0] = lad.wtot > 0.0 ? lad.wtot * phi(g[0] / w[0]) : 0.0;
    return lad;
}

} // namespace

DecompositionReport variance_decomposition(const ConditionalTower& tower,
                                           const ScalarField& f) {
    if (tower.n() > 3)
        throw ValidationError("variance_decomposition: quadrature regime is n <= 3");
    const std::vector<double> vals = tensor_values(tower, f);
    const Ladder lad = reduce_ladder(tower, vals, [](double m) { return m * m; });
    DecompositionReport rep;
    const int n = tower.n();
    rep.terms.resize(n);
    for (int k = 1; k <= n; ++k) rep.terms[k - 1] = (lad.a[k] - lad.a[k - 1]) / lad.wtot;
    rep.total = tower.grid().variance(f);
    double sum = 0.0;
    for (double t : rep.terms) sum += t;
    rep.reconstruction_error = std::fabs(sum - rep.total);
    return rep;
}

DecompositionReport entropy_decomposition(const ConditionalTower& tower,
                                          const ScalarField& g) {
    if (tower.n() > 3)
        throw ValidationError("entropy_decomposition: quadrature regime is n <= 3");
    const std::vector<double> vals = tensor_values(tower, g);
    for (double v : vals)
        if (!(v > 0.0)) throw ValidationError("entropy_decomposition: g must be > 0 on the grid");
    const Ladder lad = reduce_ladder(tower, vals, [](double m) { return m * std::log(m); });
    DecompositionReport rep;
    const int n = tower.n();
    rep.terms.resize(n);
    for (int k = 1; k <= n; ++k) rep.terms[k - 1] = (lad.a[k] - lad.a[k - 1]) / lad.wtot;
    rep.total = tower.grid().entropy(g);
    double sum = 0.0;
    for (double t : rep.terms) sum += t;
    rep.reconstruction_error = std::fabs(sum - rep.total);
    return rep;
}

std::vector<int> order_coordinates(const ConservativeModel& m, const Observable& f,
                                   const ChainConfig* mc_config) {
    const int n = m.n;
    std::vector<double> grad_sq(n);
    if (n <= 3) {
        SigmaQuadrature quad(m);
        for (int k = 0; k < n; ++k)
            grad_sq[k] = quad.expect([&](const Eigen::VectorXd& x) {
                const double d = f.grad(x)[k];
                return d * d;
            });
    } else {
        ChainConfig c;
        if (mc_config) c = *mc_config;
        const SampleBatch batch = sample_sigma(m, c);
        for (int k = 0; k < n; ++k) {
            const std::vector<double> tr = batch.trace([&](const Eigen::VectorXd& x) {
                const double d = f.grad(x)[k];
                return d * d;
            });
            grad_sq[k] = mean_with_error(tr).mean;
        }
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](int a, int b) { return grad_sq[a] > grad_sq[b]; });
    return perm;
}

namespace {

// test prefixes: {c-1, c, c+1}^k around the coordinate mean
std::vector<std::vector<double>> prefix_grid(const ConservativeModel& m, int k) {
    const double c = m.M / (m.n + 1);
    const std::vector<double> pts = {c - 1.0, c, c + 1.0};
    std::vector<std::vector<double>> out;
    std::vector<int> idx(k, 0);
    const long total = static_cast<long>(std::pow(3.0, k));
    for (long t = 0; t < total; ++t) {
        std::vector<double> p(k);
        for (int a = 0; a < k; ++a) p[a] = pts[idx[a]];
        out.push_back(p);
        for (int a = k - 1; a >= 0; --a) {
            if (++idx[a] < 3) break;
            idx[a] = 0;
        }
    }
    return out;
}

} // namespace

double gradient_identity_check(const ConditionalTower& tower, const Observable& f, int k) {
    const int n = tower.n();
    if (n > 3) throw ValidationError("gradient_identity_check: quadrature mode is n <= 3");
    if (k < 1 || k > n - 1)
        throw ValidationError("gradient_identity_check: need 1 <= k <= n-1");
    const ConservativeModel& m = tower.model();
    const int orig_k = tower.original_index(k);

    double worst = 0.0;
    const double h = 1e-4;
    for (const std::vector<double>& prefix : prefix_grid(m, k)) {
        // LHS: d/dx_k of f_k by central difference in the k-th prefix slot
        std::vector<double> lo = prefix, hi = prefix;
        lo[k - 1] -= h;
        hi[k - 1] += h;
        const double lhs =
            (tower.conditional_expectation(f.f, hi) - tower.conditional_expectation(f.f, lo)) /
            (2.0 * h);

        const double mean_dk =
            tower.suffix_expect([&](const Eigen::VectorXd& x) { return f.grad(x)[orig_k]; },
                                prefix);
        const double cov_term = tower.suffix_cov(
            f.f,
            [&](const Eigen::VectorXd& x) {
                const double arg = m.M - x.sum();
                return arg + m.p.df(arg);
            },
            prefix);
        worst = std::max(worst, std::fabs(lhs - (mean_dk + cov_term)));
    }
    return worst;
}

double integration_by_parts_check(const ConditionalTower& tower, const Observable& f, int k) {
    const int n = tower.n();
    if (n > 3) throw ValidationError("integration_by_parts_check: quadrature mode is n <= 3");
    if (k < 1 || k > n - 1)
        throw ValidationError("integration_by_parts_check: need 1 <= k <= n-1");
    const ConservativeModel& m = tower.model();

    double worst = 0.0;
    for (const std::vector<double>& prefix : prefix_grid(m, k)) {
        const double lhs = tower.suffix_cov(
            f.f,
            [&](const Eigen::VectorXd& x) {
                const double arg = m.M - x.sum();
                return arg + m.p.df(arg);
            },
            prefix);
        double cov_sum = 0.0, grad_sum = 0.0;
        for (int i = k + 1; i <= n; ++i) {
            const int oi = tower.original_index(i);
            cov_sum += tower.suffix_cov(
                f.f, [&](const Eigen::VectorXd& x) { return x[oi] + m.p.df(x[oi]); }, prefix);
            grad_sum += tower.suffix_expect(
                [&](const Eigen::VectorXd& x) { return f.grad(x)[oi]; }, prefix);
        }
        const double rhs = (cov_sum - grad_sum) / static_cast<double>(n - k);
        worst = std::max(worst, std::fabs(lhs - rhs));
    }
    return worst;
}

std::vector<int> block_partition(int n_plus_1, int K) {
    if (K < 2 || K > n_plus_1)
        throw ValidationError("block_partition: need 2 <= K <= n+1");
    const int q = n_plus_1 / K;
    const int r = n_plus_1 % K;
    // r blocks of size K+1 and q - r of size K
    if (q < r) throw ValidationError("block_partition: no K/K+1 partition exists");
    std::vector<int> sizes;
    for (int i = 0; i < q - r; ++i) sizes.push_back(K);
    for (int i = 0; i < r; ++i) sizes.push_back(K + 1);
    return sizes;
}

std::vector<CovSplitRow> covariance_splitting_experiment(const ConservativeModel& m,
                                                         const std::vector<Observable>& dict,
                                                         int K, const ChainConfig& c,
                                                         bool entropy_variant) {
    const std::vector<int> sizes = block_partition(m.n + 1, K);
    const SampleBatch batch = sample_sigma(m, c);
    const int n = m.n;

    const std::vector<double> s_trace = batch.trace([&](const Eigen::VectorXd& x) {
        double s = m.M; // sum of V' quadratic parts telescopes to M exactly
        for (int i = 0; i < n; ++i) s += m.p.df(x[i]);
        s += m.p.df(m.M - x.sum());
        return s;
    });

    std::vector<CovSplitRow> rows;
    for (const Observable& obs : dict) {
        CovSplitRow row;
        row.fname = obs.name;
        row.n = n;
        row.K = K;
        row.blocks = static_cast<int>(sizes.size());

        std::vector<double> fv = batch.trace(obs.f);
        const std::vector<double> gsq = batch.trace(
            [&obs](const Eigen::VectorXd& x) { return obs.grad(x).squaredNorm(); });
        double gmean = 0.0;
        for (double v : gsq) gmean += v;
        gmean /= static_cast<double>(gsq.size());
        row.grad_term = gmean;

        if (entropy_variant) {
            // normalize <f^2> = 1, then LHS = cov(f^2, S)^2 and the variance
            // slot holds Ent(f^2)
            double m2 = 0.0;
            for (double v : fv) m2 += v * v;
            m2 /= static_cast<double>(fv.size());
            if (m2 < 1e-300) continue;
            const double scale = 1.0 / std::sqrt(m2);
            std::vector<double> fsq(fv.size());
            double ent = 0.0;
            for (std::size_t t = 0; t < fv.size(); ++t) {
                const double g = (fv[t] * scale) * (fv[t] * scale);
                fsq[t] = g;
                if (g > 0.0) ent += g * std::log(g);
            }
            ent /= static_cast<double>(fv.size()); // <g log g>, <g> = 1
            const CovErr ce = covariance_with_error(fsq, s_trace);
            row.lhs = ce.cov * ce.cov;
            row.lhs_err = 2.0 * std::fabs(ce.cov) * ce.err;
            row.var_term = ent;
            row.grad_term = gmean * scale * scale;
        } else {
            const CovErr ce = covariance_with_error(fv, s_trace);
            const CovErr var = variance_with_error(fv);
            row.lhs = ce.cov * ce.cov;
            row.lhs_err = 2.0 * std::fabs(ce.cov) * ce.err;
            row.var_term = var.cov;
        }

        const double denom_var = std::max(row.var_term, 1e-300);
        const double denom_grad = std::max(n * row.grad_term, 1e-300);
        row.c_var = row.lhs / denom_var;
        row.c_grad = row.lhs / denom_grad;
        row.c_combined = row.lhs / (denom_var + denom_grad);
        row.conclusive = row.lhs_err <= std::max(row.lhs, 1e-300) || row.lhs < 1e-12;
        rows.push_back(row);
    }
    return rows;
}

} // namespace spinlab
