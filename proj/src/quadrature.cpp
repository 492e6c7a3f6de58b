#include "spinlab/quadrature.hpp"

#include "spinlab/errors.hpp"

#include <cmath>
#include <limits>

namespace spinlab {

GaussLegendre::GaussLegendre(int npoints) {
    if (npoints < 1) throw ValidationError("GaussLegendre: npoints must be >= 1");
    nodes.resize(npoints);
    weights.resize(npoints);
    const int m = (npoints + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Newton iteration from the Chebyshev-like initial guess
        double x = std::cos(M_PI * (i + 0.75) / (npoints + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < npoints; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1);
            }
            pp = npoints * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[npoints - 1 - i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[npoints - 1 - i] = weights[i];
    }
}

SigmaQuadrature::SigmaQuadrature(const ConservativeModel& m, int nodes_per_axis,
                                 double halfwidth)
    : model_(m), nodes_(nodes_per_axis) {
    if (m.n > 3)
        throw ValidationError("SigmaQuadrature: quadrature regime is n <= 3");
    if (nodes_per_axis < 8)
        throw ValidationError("SigmaQuadrature: need at least 8 nodes per axis");
    const double center = m.M / (m.n + 1);
    GaussLegendre gl(nodes_per_axis);
    axis_.resize(nodes_per_axis);
    axis_w_.resize(nodes_per_axis);
    for (int i = 0; i < nodes_per_axis; ++i) {
        axis_[i] = center + halfwidth * gl.nodes[i];
        axis_w_[i] = halfwidth * gl.weights[i];
    }

    // site-potential values are shared across axes
    std::vector<double> site_v(nodes_per_axis);
    for (int i = 0; i < nodes_per_axis; ++i) {
        const double u = axis_[i];
        site_v[i] = 0.5 * u * u + m.p.f(u);
    }

    long size = 1;
    for (int a = 0; a < m.n; ++a) size *= nodes_per_axis;
    weight_.resize(size);

    // shift energies by the minimum over the diagonal point to avoid underflow
    Eigen::VectorXd mean_pt = Eigen::VectorXd::Constant(m.n, center);
    const double e0 = m.energy(mean_pt);
    energy_shift_ = e0;

    std::vector<int> idx(m.n, 0);
    mass_ = 0.0;
    for (long flat = 0; flat < size; ++flat) {
        double sum_sites = 0.0, sum_x = 0.0, wprod = 1.0;
        for (int a = 0; a < m.n; ++a) {
            sum_sites += site_v[idx[a]];
            sum_x += axis_[idx[a]];
            wprod *= axis_w_[idx[a]];
        }
        const double last = m.M - sum_x;
        const double h = sum_sites + 0.5 * last * last + m.p.f(last);
        const double w = wprod * std::exp(-(h - e0));
        weight_[flat] = w;
        mass_ += w;
        for (int a = m.n - 1; a >= 0; --a) {
            if (++idx[a] < nodes_per_axis) break;
            idx[a] = 0;
        }
    }
    if (!(mass_ > 0.0) || !std::isfinite(mass_))
        throw NumericalError("SigmaQuadrature: degenerate mass");
}

void SigmaQuadrature::decode(long flat, Eigen::VectorXd& x) const {
    x.resize(model_.n);
    for (int a = model_.n - 1; a >= 0; --a) {
        x[a] = axis_[flat % nodes_];
        flat /= nodes_;
    }
}

double SigmaQuadrature::integrate(const ScalarField& fn) const {
    Eigen::VectorXd x(model_.n);
    std::vector<int> idx(model_.n, 0);
    double acc = 0.0;
    const long size = tensor_size();
    for (int a = 0; a < model_.n; ++a) x[a] = axis_[0];
    for (long flat = 0; flat < size; ++flat) {
        acc += weight_[flat] * fn(x);
        for (int a = model_.n - 1; a >= 0; --a) {
            if (++idx[a] < nodes_) {
                x[a] = axis_[idx[a]];
                break;
            }
            idx[a] = 0;
            x[a] = axis_[0];
        }
    }
    return acc;
}

double SigmaQuadrature::variance(const ScalarField& fn) const {
    const double m1 = expect(fn);
    return expect([&](const Eigen::VectorXd& x) {
        const double d = fn(x) - m1;
        return d * d;
    });
}

double SigmaQuadrature::covariance(const ScalarField& f, const ScalarField& g) const {
    const double mf = expect(f), mg = expect(g);
    return expect([&](const Eigen::VectorXd& x) { return (f(x) - mf) * (g(x) - mg); });
}

double SigmaQuadrature::entropy(const ScalarField& g) const {
    const double mg = expect(g);
    if (!(mg > 0.0)) throw NumericalError("entropy: <g> must be positive");
    const double glg = expect([&](const Eigen::VectorXd& x) {
        const double v = g(x);
        if (v < 0.0) throw NumericalError("entropy: g must be nonnegative");
        return v > 0.0 ? v * std::log(v) : 0.0;
    });
    return glg - mg * std::log(mg);
}

} // namespace spinlab
