#pragma once

#include <functional>
#include <string>
#include <vector>

namespace spinlab {

// Bounded perturbation F of the quadratic single-site potential
// V(u) = u^2/2 + F(u), together with certified global bounds on F and its
// first two derivatives.  The bounds are supplied analytically by the family
// constructors (the perturbative constants consume them as exact inputs);
// grid scans in the tests only validate them.
struct PerturbationSpec {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> d2f;
    double sup_f = 0.0;   // >= sup |F|
    double sup_df = 0.0;  // >= sup |F'|
    double sup_d2f = 0.0; // >= sup |F''|
    double osc_f = 0.0;   // >= sup F - inf F  (defaults to 2*sup_f)
    std::string name = "zero";

    // Optional factorization F(h+t) + F(h-t) = pair_scale(h) * pair_profile(t)
    // (e.g. 2 eps sin(h) * cos(t) for the sine family); lets the pair
    // conditional sampler tabulate the t-profile once.
    std::function<double(double)> pair_scale;
    std::function<double(double)> pair_profile;

    // Certifiably F == 0 (all sup bounds vanish); enables exact shortcuts.
    bool is_zero() const { return sup_f == 0.0 && sup_df == 0.0 && sup_d2f == 0.0; }
};

// Shipped families.
PerturbationSpec zero_perturbation();
PerturbationSpec sine_perturbation(double eps);          // F(u) = eps*sin(u)
// F(u) = P(sin(Q(u))) with P, Q given by coefficient lists (constant term
// first).  Q must be affine (degree <= 1): otherwise F' has no global bound.
PerturbationSpec poly_sine_perturbation(const std::vector<double>& p,
                                        const std::vector<double>& q);

// V, V', V'' at u for V(u) = u^2/2 + F(u).
struct SitePotential {
    double v;
    double dv;
    double d2v;
};
SitePotential eval_site_potential(const PerturbationSpec& p, double u);

// Convex replacement of the quadratic base: Phi with alpha <= Phi'' <= beta.
struct ConvexBaseSpec {
    std::function<double(double)> phi;
    double alpha = 1.0;
    double beta = 1.0;
};
ConvexBaseSpec quadratic_base();

// P = e^{2 osc F} / (2 e^{-2 osc F} - 1), valid for osc F < log sqrt(2).
// Throws ValidationError outside the domain (no bound is asserted there).
double perturbative_poincare_constant(double osc_f);

// Generalization with base curvature in [alpha, beta]:
// P = e^{2 osc F} / (2 alpha e^{-2 osc F} - beta), osc F < log sqrt(2 alpha/beta).
double generalized_perturbative_constant(double osc_f, const ConvexBaseSpec& base);

} // namespace spinlab
