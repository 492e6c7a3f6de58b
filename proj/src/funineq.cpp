#include "spinlab/funineq.hpp"

#include "spinlab/errors.hpp"
#include "spinlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spinlab {

const char* to_string(SpectralMethod m) {
    switch (m) {
        case SpectralMethod::grid_eigensolve: return "grid_eigensolve";
        case SpectralMethod::bakry_emery: return "bakry_emery";
        case SpectralMethod::variational_samples: return "variational_samples";
        case SpectralMethod::one_d_criterion: return "one_d_criterion";
    }
    return "unknown";
}

DensityGrid::DensityGrid(const ConservativeModel& m, const GridSpec& g) {
    if (m.n > 3) throw ValidationError("DensityGrid: grid regime is n <= 3");
    if (g.nodes_per_axis < 16) throw ValidationError("DensityGrid: need >= 16 nodes per axis");
    if (!(g.halfwidth_sd > 2.0)) throw ValidationError("DensityGrid: window too narrow");
    n = m.n;
    nodes = g.nodes_per_axis;
    const double center = m.M / (n + 1);
    const double sd = std::sqrt(static_cast<double>(n) / (n + 1));
    const double halfwidth = g.halfwidth_sd * sd;
    h = 2.0 * halfwidth / (nodes - 1);
    axis.resize(nodes);
    for (int i = 0; i < nodes; ++i) axis[i] = center - halfwidth + i * h;

    size = 1;
    stride_.assign(n, 1);
    for (int a = 0; a < n; ++a) size *= nodes;
    for (int a = n - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * nodes;

    std::vector<double> site_v(nodes);
    for (int i = 0; i < nodes; ++i) site_v[i] = 0.5 * axis[i] * axis[i] + m.p.f(axis[i]);

    pi.resize(size);
    Eigen::VectorXd mean_pt = Eigen::VectorXd::Constant(n, center);
    const double e0 = m.energy(mean_pt);
    std::vector<int> idx(n, 0);
    double mass = 0.0;
    for (long flat = 0; flat < size; ++flat) {
        double sum_sites = 0.0, sum_x = 0.0;
        for (int a = 0; a < n; ++a) {
            sum_sites += site_v[idx[a]];
            sum_x += axis[idx[a]];
        }
        const double last = m.M - sum_x;
        const double energy = sum_sites + 0.5 * last * last + m.p.f(last);
        pi[flat] = std::exp(-(energy - e0));
        mass += pi[flat];
        for (int a = n - 1; a >= 0; --a) {
            if (++idx[a] < nodes) break;
            idx[a] = 0;
        }
    }
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw NumericalError("DensityGrid: degenerate density");
    sqrt_pi.resize(size);
    for (long i = 0; i < size; ++i) {
        pi[i] /= mass;
        sqrt_pi[i] = std::sqrt(pi[i]);
    }

    // diagonal of S = D^{-1/2}(D_w - W)D^{-1/2}: (1/pi_i) sum_j w_ij
    diag_.assign(size, 0.0);
    const double scale = 1.0 / (h * h);
    for (int a = 0; a < n; ++a) {
        const long st = stride_[a];
        for (long i = 0; i < size; ++i) {
            const long pos = (i / st) % nodes;
            if (pos + 1 < static_cast<long>(nodes)) {
                const long j = i + st;
                const double w = sqrt_pi[i] * sqrt_pi[j] * scale;
                diag_[i] += w / pi[i];
                diag_[j] += w / pi[j];
            }
        }
    }
}

void DensityGrid::decode(long flat, Eigen::VectorXd& x) const {
    x.resize(n);
    for (int a = n - 1; a >= 0; --a) {
        x[a] = axis[flat % nodes];
        flat /= nodes;
    }
}

void DensityGrid::apply_sym(const double* v, double* out) const {
    // S v = D^{-1/2} L_w (D^{-1/2} v): work on u = v / sqrt(pi)
    thread_local std::vector<double> u, acc;
    u.resize(size);
    acc.assign(size, 0.0);
    for (long i = 0; i < size; ++i) u[i] = v[i] / sqrt_pi[i];
    const double scale = 1.0 / (h * h);
    for (int a = 0; a < n; ++a) {
        const long st = stride_[a];
        for (long i = 0; i < size; ++i) {
            const long pos = (i / st) % nodes;
            if (pos + 1 >= static_cast<long>(nodes)) continue;
            const long j = i + st;
            const double w = sqrt_pi[i] * sqrt_pi[j] * scale;
            const double d = w * (u[i] - u[j]);
            acc[i] += d;
            acc[j] -= d;
        }
    }
    for (long i = 0; i < size; ++i) out[i] = acc[i] / sqrt_pi[i];
}

double DensityGrid::dirichlet(const std::vector<double>& f) const {
    double e = 0.0;
    const double scale = 1.0 / (h * h);
    for (int a = 0; a < n; ++a) {
        const long st = stride_[a];
        for (long i = 0; i < size; ++i) {
            const long pos = (i / st) % nodes;
            if (pos + 1 >= static_cast<long>(nodes)) continue;
            const long j = i + st;
            const double d = f[i] - f[j];
            e += sqrt_pi[i] * sqrt_pi[j] * scale * d * d;
        }
    }
    return e;
}

double DensityGrid::expect(const std::vector<double>& f) const {
    double acc = 0.0;
    for (long i = 0; i < size; ++i) acc += pi[i] * f[i];
    return acc;
}

double DensityGrid::variance(const std::vector<double>& f) const {
    const double m1 = expect(f);
    double acc = 0.0;
    for (long i = 0; i < size; ++i) acc += pi[i] * (f[i] - m1) * (f[i] - m1);
    return acc;
}

double DensityGrid::entropy_sq(const std::vector<double>& f) const {
    double m = 0.0, glg = 0.0;
    for (long i = 0; i < size; ++i) {
        const double g = f[i] * f[i];
        m += pi[i] * g;
        if (g > 0.0) glg += pi[i] * g * std::log(g);
    }
    if (!(m > 0.0)) return 0.0;
    return glg - m * std::log(m);
}

namespace {

// preconditioned CG for S y = b restricted to the complement of the kernel
// direction v0 = sqrt(pi)
void solve_projected(const DensityGrid& grid, const std::vector<double>& b,
                     std::vector<double>& y) {
    const long nn = grid.size;
    std::vector<double> r(nn), z(nn), p(nn), sp(nn);
    y.assign(nn, 0.0);

    auto dot = [nn](const std::vector<double>& a, const std::vector<double>& c) {
        double acc = 0.0;
        for (long i = 0; i < nn; ++i) acc += a[i] * c[i];
        return acc;
    };
    auto project = [&](std::vector<double>& v) {
        double s = 0.0;
        for (long i = 0; i < nn; ++i) s += v[i] * grid.sqrt_pi[i];
        for (long i = 0; i < nn; ++i) v[i] -= s * grid.sqrt_pi[i];
    };

    r = b;
    project(r);
    const double bnorm = std::sqrt(dot(r, r));
    if (bnorm == 0.0) return;
    for (long i = 0; i < nn; ++i) z[i] = r[i] / std::max(grid.diag(i), 1e-300);
    project(z);
    p = z;
    double rz = dot(r, z);
    const long maxit = 4 * nn + 200;
    for (long it = 0; it < maxit; ++it) {
        grid.apply_sym(p.data(), sp.data());
        const double alpha = rz / dot(p, sp);
        for (long i = 0; i < nn; ++i) {
            y[i] += alpha * p[i];
            r[i] -= alpha * sp[i];
        }
        if (std::sqrt(dot(r, r)) < 1e-12 * bnorm) break;
        for (long i = 0; i < nn; ++i) z[i] = r[i] / std::max(grid.diag(i), 1e-300);
        project(z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (long i = 0; i < nn; ++i) p[i] = z[i] + beta * p[i];
    }
    project(y);
}

EigenPairs dense_spectrum(const DensityGrid& grid, int k) {
    const long nn = grid.size;
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(nn, nn);
    std::vector<double> e(nn, 0.0), col(nn);
    for (long j = 0; j < nn; ++j) {
        e[j] = 1.0;
        grid.apply_sym(e.data(), col.data());
        for (long i = 0; i < nn; ++i) s(i, j) = col[i];
        e[j] = 0.0;
    }
    s = 0.5 * (s + s.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolve failed");
    // the kernel eigenvalue is the (numerically) smallest; skip it
    EigenPairs out;
    out.vectors.resize(nn, k);
    for (int j = 0; j < k; ++j) {
        out.values.push_back(es.eigenvalues()[j + 1]);
        out.vectors.col(j) = es.eigenvectors().col(j + 1);
    }
    return out;
}

} // namespace

EigenPairs lowest_nonzero_spectrum(const DensityGrid& grid, int k) {
    if (k < 1) throw ValidationError("lowest_nonzero_spectrum: k >= 1");
    const long nn = grid.size;
    if (nn <= 900) return dense_spectrum(grid, k);

    const int block = k + 2;
    Eigen::MatrixXd x(nn, block);
    {
        Rng rng(12345);
        for (int j = 0; j < block; ++j)
            for (long i = 0; i < nn; ++i) x(i, j) = rng.normal();
    }
    Eigen::Map<const Eigen::VectorXd> v0(grid.sqrt_pi.data(), nn);

    auto orthonormalize = [&](Eigen::MatrixXd& m) {
        for (int j = 0; j < m.cols(); ++j) {
            m.col(j) -= v0 * v0.dot(m.col(j));
            for (int l = 0; l < j; ++l) m.col(j) -= m.col(l) * m.col(l).dot(m.col(j));
            // second pass for stability
            m.col(j) -= v0 * v0.dot(m.col(j));
            for (int l = 0; l < j; ++l) m.col(j) -= m.col(l) * m.col(l).dot(m.col(j));
            const double nrm = m.col(j).norm();
            if (nrm < 1e-14) throw NumericalError("eigensolve: rank collapse");
            m.col(j) /= nrm;
        }
    };
    orthonormalize(x);

    std::vector<double> bcol(nn), ycol(nn);
    Eigen::MatrixXd y(nn, block), sy(nn, block);
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(block);
    for (int iter = 0; iter < 200; ++iter) {
        for (int j = 0; j < block; ++j) {
            for (long i = 0; i < nn; ++i) bcol[i] = x(i, j);
            solve_projected(grid, bcol, ycol);
            for (long i = 0; i < nn; ++i) y(i, j) = ycol[i];
        }
        orthonormalize(y);
        for (int j = 0; j < block; ++j) {
            grid.apply_sym(y.col(j).data(), bcol.data());
            for (long i = 0; i < nn; ++i) sy(i, j) = bcol[i];
        }
        Eigen::MatrixXd t = y.transpose() * sy;
        t = 0.5 * (t + t.transpose().eval());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        x = y * es.eigenvectors();
        const Eigen::VectorXd theta = es.eigenvalues();
        double rel = 0.0;
        for (int j = 0; j < k; ++j)
            rel = std::max(rel, std::fabs(theta[j] - prev[j]) / std::max(theta[j], 1e-300));
        prev = theta;
        if (iter >= 3 && rel < 1e-11) {
            EigenPairs out;
            out.vectors.resize(nn, k);
            for (int j = 0; j < k; ++j) {
                out.values.push_back(theta[j]);
                out.vectors.col(j) = x.col(j);
            }
            return out;
        }
    }
    throw NumericalError("lowest_nonzero_spectrum: inverse iteration did not converge");
}

namespace {

double lambda2(const ConservativeModel& m, const GridSpec& g) {
    DensityGrid grid(m, g);
    return lowest_nonzero_spectrum(grid, 1).values[0];
}

} // namespace

SpectralReport generator_gap(const ConservativeModel& m, const GridSpec& g) {
    if (m.n > 3) throw ValidationError("generator_gap: eigensolve regime is n <= 3");
    GridSpec coarse = g;
    coarse.nodes_per_axis = g.nodes_per_axis / 2;
    const double lam_coarse = lambda2(m, coarse);
    const double lam_fine = lambda2(m, g);
    if (std::fabs(lam_fine - lam_coarse) > 0.05 * lam_fine)
        throw NumericalError("generator_gap: resolution too coarse (lambda_2 shift > 5%)");
    SpectralReport rep;
    rep.poincare_estimate = 1.0 / lam_fine;
    rep.method = SpectralMethod::grid_eigensolve;
    rep.resolution = g.nodes_per_axis;
    // the stencil is O(h^2); one Richardson step estimates the residual error
    rep.error_estimate = std::fabs(1.0 / lam_fine - 1.0 / lam_coarse) / 3.0;
    return rep;
}

namespace {

struct AscentResult {
    double best = 0.0;
    bool converged = false;
};

// maximize Q(f) = Ent(f^2) / E(f) by normalized gradient ascent
AscentResult entropy_quotient_ascent(const DensityGrid& grid, std::vector<double> f,
                                     int max_iter = 2500) {
    const long nn = grid.size;
    auto normalize = [&](std::vector<double>& v) {
        double m2 = 0.0;
        for (long i = 0; i < nn; ++i) m2 += grid.pi[i] * v[i] * v[i];
        const double s = 1.0 / std::sqrt(std::max(m2, 1e-300));
        for (long i = 0; i < nn; ++i) v[i] *= s;
    };
    auto quotient = [&](const std::vector<double>& v, double& ent, double& dir) {
        ent = grid.entropy_sq(v);
        dir = grid.dirichlet(v);
        return dir > 1e-300 ? ent / dir : 0.0;
    };

    normalize(f);
    double ent, dir;
    double q = quotient(f, ent, dir);
    double step = 0.1;
    std::vector<double> gradq(nn), trial(nn), lw(nn);
    AscentResult res;
    res.best = q;

    double window_start_q = q;
    long window_count = 0;
    for (int iter = 0; iter < max_iter; ++iter) {
        // d Ent(f^2)/df_i = 2 pi_i f_i log(f_i^2 / <f^2>); <f^2> = 1 here
        // d E(f)/df_i = 2 (L_w f)_i
        for (long i = 0; i < nn; ++i) {
            const double fi = f[i];
            const double g2 = std::max(fi * fi, 1e-300);
            gradq[i] = 2.0 * grid.pi[i] * fi * std::log(g2);
        }
        // L_w f through the symmetrized operator: L_w f = sqrt_pi * S(sqrt_pi * f)
        {
            thread_local std::vector<double> tmp;
            tmp.resize(nn);
            for (long i = 0; i < nn; ++i) tmp[i] = grid.sqrt_pi[i] * f[i];
            grid.apply_sym(tmp.data(), lw.data());
            for (long i = 0; i < nn; ++i) lw[i] *= grid.sqrt_pi[i];
        }
        double gnorm = 0.0;
        for (long i = 0; i < nn; ++i) {
            gradq[i] = (gradq[i] * dir - ent * 2.0 * lw[i]) / (dir * dir);
            gnorm += gradq[i] * gradq[i];
        }
        gnorm = std::sqrt(gnorm);
        if (gnorm < 1e-15) break;

        bool improved = false;
        for (int shrink = 0; shrink < 15; ++shrink) {
            for (long i = 0; i < nn; ++i) trial[i] = f[i] + step / gnorm * gradq[i];
            normalize(trial);
            double ent_t, dir_t;
            const double q_t = quotient(trial, ent_t, dir_t);
            if (q_t > q) {
                f.swap(trial);
                q = q_t;
                ent = ent_t;
                dir = dir_t;
                step *= 1.3;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        res.best = std::max(res.best, q);
        if (!improved) {
            res.converged = true;
            break;
        }
        if (++window_count == 100) {
            if (q - window_start_q < 1e-8 * std::max(q, 1e-300)) {
                res.converged = true;
                break;
            }
            window_start_q = q;
            window_count = 0;
        }
    }
    return res;
}

} // namespace

SpectralReport lsi_constant_grid(const ConservativeModel& m, const GridSpec& g) {
    if (m.n > 2) throw ValidationError("lsi_constant_grid: ascent regime is n <= 2");
    DensityGrid grid(m, g);
    const EigenPairs pairs = lowest_nonzero_spectrum(grid, 3);

    // eigenvectors as functions v/sqrt(pi), variance-normalized and clamped:
    // entries at negligible-density corners are numerical noise amplified by
    // 1/sqrt(pi) and must not leak into exponential transforms
    auto eigen_function = [&](int j) {
        std::vector<double> u(grid.size);
        for (long i = 0; i < grid.size; ++i)
            u[i] = pairs.vectors(i, j) / std::max(grid.sqrt_pi[i], 1e-150);
        const double sd = std::sqrt(std::max(grid.variance(u), 1e-300));
        for (double& v : u) v = std::clamp(v / sd, -10.0, 10.0);
        return u;
    };

    double best = 0.0;
    bool any_converged = false;
    for (int j = 0; j < pairs.vectors.cols(); ++j) {
        const AscentResult r = entropy_quotient_ascent(grid, eigen_function(j));
        best = std::max(best, r.best);
        any_converged = any_converged || r.converged;
    }
    // exponential transforms of the slowest mode: the entropy quotient's
    // near-optimal set is the exponential family, which plain ascent reaches
    // only along a flat valley
    {
        const std::vector<double> u = eigen_function(0);
        for (double t : {-1.0, -0.5, -0.25, 0.25, 0.5, 1.0}) {
            std::vector<double> f(grid.size);
            for (long i = 0; i < grid.size; ++i) f[i] = std::exp(t * u[i]);
            const AscentResult r = entropy_quotient_ascent(grid, std::move(f));
            best = std::max(best, r.best);
            any_converged = any_converged || r.converged;
        }
    }
    Rng rng(987654321);
    for (int s = 0; s < 32; ++s) {
        std::vector<double> f(grid.size);
        for (long i = 0; i < grid.size; ++i) f[i] = rng.normal();
        const AscentResult r = entropy_quotient_ascent(grid, std::move(f), 800);
        best = std::max(best, r.best);
        any_converged = any_converged || r.converged;
    }

    SpectralReport rep;
    rep.method = SpectralMethod::grid_eigensolve;
    rep.resolution = g.nodes_per_axis;
    rep.poincare_estimate = 1.0 / pairs.values[0];
    rep.lsi_estimate = best;
    // Bakry-Emery cap: Hess H_M >= (1 - sup_d2f)(I + ones) when sup_d2f <= 1
    const double curv_site = 1.0 - m.p.sup_d2f;
    if (curv_site > 0.0) {
        const double rho = curv_site * (m.n == 1 ? 2.0 : 1.0);
        rep.error_estimate = std::max(0.0, 2.0 / rho - best);
    } else {
        rep.error_estimate = best; // no curvature cap; slack unknown
    }
    if (!any_converged)
        rep.error_estimate = std::max(rep.error_estimate, best); // lower bound only
    return rep;
}

double variational_gap_lower_bound(const SampleBatch& batch,
                                   const std::vector<Observable>& dictionary) {
    if (dictionary.empty()) throw ValidationError("variational bound: empty dictionary");
    // split-sample selection: pick the best direction on the first half of
    // the chain, report its ratio from the second half.  A plain max over a
    // large dictionary of noisy ratios is biased upward by selection.
    const long T = batch.nsamples();
    const long half = T / 2;
    auto ratio_on = [&](const Observable& obs, long lo, long hi) {
        double m1 = 0.0, m2 = 0.0, g = 0.0;
        Eigen::VectorXd x(batch.dim());
        for (long t = lo; t < hi; ++t) {
            x = batch.draws.row(t);
            const double v = obs.f(x);
            m1 += v;
            m2 += v * v;
            g += obs.grad(x).squaredNorm();
        }
        const double len = static_cast<double>(hi - lo);
        m1 /= len;
        m2 /= len;
        g /= len;
        if (g < 1e-12) return -1.0; // degenerate direction: skipped
        return (m2 - m1 * m1) / g;
    };
    const Observable* best_obs = nullptr;
    double best_sel = -1.0;
    for (const Observable& obs : dictionary) {
        const double r = ratio_on(obs, 0, half);
        if (r > best_sel) {
            best_sel = r;
            best_obs = &obs;
        }
    }
    if (!best_obs) throw ValidationError("variational bound: dictionary is degenerate");
    return std::max(0.0, ratio_on(*best_obs, half, T));
}

bool dual_characterization_check(const ConservativeModel& m, const GridSpec& g,
                                 const std::vector<Observable>& dictionary,
                                 std::string* offender) {
    if (m.n > 2) throw ValidationError("dual_characterization_check: n <= 2");
    const SpectralReport rep = generator_gap(m, g);
    const double p_plus = rep.poincare_estimate + rep.error_estimate;
    SigmaQuadrature quad(m);
    for (const Observable& obs : dictionary) {
        if (!obs.laplacian) continue;
        const double lf_sq = quad.expect([&](const Eigen::VectorXd& x) {
            const double lf = obs.laplacian(x) - m.grad_energy(x).dot(obs.grad(x));
            return lf * lf;
        });
        const double grad_sq =
            quad.expect([&](const Eigen::VectorXd& x) { return obs.grad(x).squaredNorm(); });
        // 2% headroom for the grid estimate of P plus quadrature roundoff
        if (p_plus * lf_sq < grad_sq * (1.0 - 0.02) - 1e-12) {
            if (offender) *offender = obs.name;
            return false;
        }
    }
    return true;
}

OneSpinResult one_spin_curvature(const ConservativeModel& m,
                                 const std::vector<double>& x1_grid,
                                 const ChainConfig& c) {
    if (m.n < 3)
        throw ValidationError("one_spin_curvature: covariance representation needs n >= 3");
    if (x1_grid.empty()) throw ValidationError("one_spin_curvature: empty x1 grid");
    OneSpinResult result;
    result.fitted_C = -1e300;
    for (std::size_t cell = 0; cell < x1_grid.size(); ++cell) {
        const double x1 = x1_grid[cell];
        const ConservativeModel inner(m.n - 1, m.M - x1, m.p);
        const SampleBatch batch = sample_sigma(inner, c.with_seed(split_seed(c.seed, cell)));
        const CovErr ce = pair_averaged_vprime_cov(batch, m.p);
        OneSpinRow row;
        row.x1 = x1;
        row.phi_dd = 1.0 - ce.cov;
        row.err = ce.err;
        row.flagged = ce.err > 0.2 * std::max(std::fabs(ce.cov), 1e-12);
        if (m.n == 3) {
            // quadrature regime: cross-check the covariance representation
            // against the marginal's log-density second derivative
            row.quad_check = one_spin_curvature_quadrature(m, x1);
            if (std::fabs(row.quad_check - row.phi_dd) > 4.0 * row.err + 1e-3)
                row.flagged = true;
        }
        result.rows.push_back(row);
        result.fitted_C = std::max(result.fitted_C, m.n * (1.0 - row.phi_dd));
    }
    return result;
}

double one_spin_curvature_quadrature(const ConservativeModel& m, double x1,
                                     int nodes_per_axis) {
    if (m.n < 2 || m.n > 3)
        throw ValidationError("one_spin_curvature_quadrature: needs 2 <= n <= 3");
    // reduced marginal Hamiltonian phi(x1) = x1^2/2 - log Z_{n-1}(M - x1);
    // phi'' by a 5-point second difference of -log Z
    auto neg_log_z = [&](double u) {
        const ConservativeModel inner(m.n - 1, m.M - u, m.p);
        const SigmaQuadrature quad(inner, nodes_per_axis);
        return -quad.log_normalization();
    };
    const double h = 1e-2;
    const double d2 = (-neg_log_z(x1 + 2 * h) + 16 * neg_log_z(x1 + h) - 30 * neg_log_z(x1) +
                       16 * neg_log_z(x1 - h) - neg_log_z(x1 - 2 * h)) /
                      (12 * h * h);
    return 1.0 + d2;
}

LsiBracket one_d_lsi_criterion(const std::vector<double>& x,
                               const std::vector<double>& density) {
    if (x.size() != density.size() || x.size() < 32)
        throw ValidationError("one_d_lsi_criterion: need >= 32 matched nodes");
    if (!std::is_sorted(x.begin(), x.end()))
        throw ValidationError("one_d_lsi_criterion: nodes must be ascending");
    const std::size_t nn = x.size();
    double pmax = 0.0;
    for (double p : density) {
        if (!(p > 0.0) || !std::isfinite(p))
            throw ValidationError("one_d_lsi_criterion: density must be positive");
        pmax = std::max(pmax, p);
    }
    // window must cover the visible mass
    if (density.front() > 1e-6 * pmax || density.back() > 1e-6 * pmax)
        throw NumericalError("one_d_lsi_criterion: tail-domination check failure (window)");

    // trapezoid moments
    double mass = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i + 1 < nn; ++i) {
        const double dx = x[i + 1] - x[i];
        mass += 0.5 * (density[i] + density[i + 1]) * dx;
        m1 += 0.5 * (density[i] * x[i] + density[i + 1] * x[i + 1]) * dx;
        m2 += 0.5 * (density[i] * x[i] * x[i] + density[i + 1] * x[i + 1] * x[i + 1]) * dx;
    }
    const double mean = m1 / mass;
    const double var = m2 / mass - mean * mean;
    if (!(var > 0.0)) throw NumericalError("one_d_lsi_criterion: degenerate variance");

    // p ~ C exp(-(x-mean)^2/(2 var)) exp(-b): b = -log p - (x-mean)^2/(2 var)
    std::vector<double> b(nn);
    for (std::size_t i = 0; i < nn; ++i)
        b[i] = -std::log(density[i]) - (x[i] - mean) * (x[i] - mean) / (2.0 * var);

    double bmin = 1e300, bmax = -1e300;
    for (double v : b) {
        bmin = std::min(bmin, v);
        bmax = std::max(bmax, v);
    }
    // Gaussian-dominated tails: b must not dive at the window ends
    double b_interior_min = 1e300;
    for (std::size_t i = nn / 4; i < 3 * nn / 4; ++i)
        b_interior_min = std::min(b_interior_min, b[i]);
    const std::size_t edge = std::max<std::size_t>(1, nn / 10);
    for (std::size_t i = 0; i < edge; ++i) {
        if (b[i] < b_interior_min - std::log(10.0) ||
            b[nn - 1 - i] < b_interior_min - std::log(10.0))
            throw NumericalError("one_d_lsi_criterion: tail-domination check failure");
    }

    LsiBracket br;
    br.lower = 2.0 * var;
    br.upper = 2.0 * var * std::exp(bmax - bmin);
    return br;
}

} // namespace spinlab
