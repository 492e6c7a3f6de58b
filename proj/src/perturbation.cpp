#include "spinlab/perturbation.hpp"

#include "spinlab/errors.hpp"

#include <cmath>
#include <cstdio>

namespace spinlab {

PerturbationSpec zero_perturbation() {
    PerturbationSpec p;
    p.f = [](double) { return 0.0; };
    p.df = [](double) { return 0.0; };
    p.d2f = [](double) { return 0.0; };
    p.name = "zero";
    return p;
}

PerturbationSpec sine_perturbation(double eps) {
    if (!(eps >= 0.0) || !std::isfinite(eps))
        throw ValidationError("sine_perturbation: eps must be finite and >= 0");
    PerturbationSpec p;
    p.f = [eps](double u) { return eps * std::sin(u); };
    p.df = [eps](double u) { return eps * std::cos(u); };
    p.d2f = [eps](double u) { return -eps * std::sin(u); };
    p.sup_f = eps;
    p.sup_df = eps;
    p.sup_d2f = eps;
    p.osc_f = 2.0 * eps;
    // eps sin(h+t) + eps sin(h-t) = 2 eps sin(h) cos(t)
    p.pair_scale = [eps](double h) { return 2.0 * eps * std::sin(h); };
    p.pair_profile = [](double t) { return std::cos(t); };
    char buf[64];
    std::snprintf(buf, sizeof buf, "sine(%g)", eps);
    p.name = buf;
    return p;
}

namespace {

double polyval(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
    return acc;
}

std::vector<double> polyder(const std::vector<double>& c) {
    if (c.size() <= 1) return {0.0};
    std::vector<double> d(c.size() - 1);
    for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = static_cast<double>(k) * c[k];
    return d;
}

// sup over |s| <= 1 of |poly(s)| is bounded by the coefficient l1 norm
double coeff_l1(const std::vector<double>& c) {
    double s = 0.0;
    for (double v : c) s += std::fabs(v);
    return s;
}

} // namespace

PerturbationSpec poly_sine_perturbation(const std::vector<double>& pcoef,
                                        const std::vector<double>& qcoef) {
    if (pcoef.empty() || qcoef.empty())
        throw ValidationError("poly_sine_perturbation: empty coefficient list");
    if (qcoef.size() > 2)
        throw ValidationError(
            "poly_sine_perturbation: Q must be affine (degree <= 1), "
            "F' is unbounded otherwise");
    for (double c : pcoef)
        if (!std::isfinite(c)) throw ValidationError("poly_sine_perturbation: non-finite P coefficient");
    for (double c : qcoef)
        if (!std::isfinite(c)) throw ValidationError("poly_sine_perturbation: non-finite Q coefficient");

    const double q0 = qcoef[0];
    const double q1 = qcoef.size() > 1 ? qcoef[1] : 0.0;
    const std::vector<double> dp = polyder(pcoef);
    const std::vector<double> d2p = polyder(dp);

    PerturbationSpec spec;
    spec.f = [pcoef, q0, q1](double u) { return polyval(pcoef, std::sin(q0 + q1 * u)); };
    // F'(u) = P'(sin Q) * cos(Q) * q1
    spec.df = [dp, q0, q1](double u) {
        const double a = q0 + q1 * u;
        return polyval(dp, std::sin(a)) * std::cos(a) * q1;
    };
    // F''(u) = [P''(sin Q) cos^2(Q) - P'(sin Q) sin(Q)] * q1^2
    spec.d2f = [dp, d2p, q0, q1](double u) {
        const double a = q0 + q1 * u;
        const double s = std::sin(a), c = std::cos(a);
        return (polyval(d2p, s) * c * c - polyval(dp, s) * s) * q1 * q1;
    };
    spec.sup_f = coeff_l1(pcoef);
    spec.sup_df = coeff_l1(dp) * std::fabs(q1);
    spec.sup_d2f = (coeff_l1(d2p) + coeff_l1(dp)) * q1 * q1;
    spec.osc_f = 2.0 * spec.sup_f;
    spec.name = "poly_sine";
    return spec;
}

SitePotential eval_site_potential(const PerturbationSpec& p, double u) {
    return SitePotential{0.5 * u * u + p.f(u), u + p.df(u), 1.0 + p.d2f(u)};
}

ConvexBaseSpec quadratic_base() {
    ConvexBaseSpec b;
    b.phi = [](double u) { return 0.5 * u * u; };
    b.alpha = 1.0;
    b.beta = 1.0;
    return b;
}

double perturbative_poincare_constant(double osc_f) {
    return generalized_perturbative_constant(osc_f, quadratic_base());
}

double generalized_perturbative_constant(double osc_f, const ConvexBaseSpec& base) {
    if (!(base.alpha > 0.0) || !(base.alpha <= base.beta))
        throw ValidationError("generalized_perturbative_constant: need 0 < alpha <= beta");
    if (!(osc_f >= 0.0) || !std::isfinite(osc_f))
        throw ValidationError("generalized_perturbative_constant: osc_f must be finite and >= 0");
    // validity region: 2 alpha e^{-2 osc} > beta, i.e. osc < log sqrt(2 alpha/beta)
    const double limit = 0.5 * std::log(2.0 * base.alpha / base.beta);
    if (!(osc_f < limit))
        throw ValidationError("perturbative constant undefined: osc_f >= log sqrt(2 alpha/beta)");
    const double denom = 2.0 * base.alpha * std::exp(-2.0 * osc_f) - base.beta;
    return std::exp(2.0 * osc_f) / denom;
}

} // namespace spinlab
