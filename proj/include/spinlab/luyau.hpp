#pragma once

#include "spinlab/model.hpp"
#include "spinlab/observables.hpp"
#include "spinlab/quadrature.hpp"
#include "spinlab/sampler.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spinlab {

// Filtration tower of sigma_M through x_1, ..., x_k (in a chosen coordinate
// order): sigma^(k) is sigma_M given the first k coordinates, which is
// nothing else but sigma_{M - x_1 - ... - x_k} on the remaining ones.
// Conditional expectations integrate by quadrature whenever the remaining
// dimension is <= 3 and by an inner MC chain per conditioning point beyond
// that (exploratory regime).  The decompositions (n <= 3) run on the
// discrete tensor measure of the quadrature grid, so the telescoping
// identities hold to machine precision and the per-level terms are exact
// one-spin variances/entropies of that measure.
class ConditionalTower {
public:
    explicit ConditionalTower(const ConservativeModel& m, int nodes_per_axis = 64,
                              double halfwidth = 10.0, std::vector<int> order = {},
                              ChainConfig inner_mc = {});

    const ConservativeModel& model() const { return model_; }
    int n() const { return model_.n; }
    const std::vector<int>& order() const { return order_; }

    // f_k = <f | x_(1..k)> at a concrete prefix (tower order), integrating
    // the remaining coordinates.  prefix.size() == k, 0 <= k <= n.
    double conditional_expectation(const ScalarField& f,
                                   const std::vector<double>& prefix) const;
    // same, with the inner MC error (0 on the quadrature route)
    MeanErr conditional_expectation_with_error(const ScalarField& f,
                                               const std::vector<double>& prefix) const;

    // <h>_{sigma^(k)} at the prefix, h given on the full original coordinates
    double suffix_expect(const ScalarField& h, const std::vector<double>& prefix) const;
    double suffix_cov(const ScalarField& f, const ScalarField& g,
                      const std::vector<double>& prefix) const;

    // tower coordinate k (1-based) is original coordinate order()[k-1]
    int original_index(int tower_k) const { return order_[tower_k - 1]; }

    // tensor access: only for towers in the quadrature regime (n <= 3)
    const SigmaQuadrature& grid() const;

private:
    ConservativeModel model_;
    int nodes_;
    double halfwidth_;
    std::optional<SigmaQuadrature> quad_;
    std::vector<int> order_;
    ChainConfig inner_mc_;

    MeanErr suffix_mean_err(const ScalarField& h, const std::vector<double>& prefix) const;
};

struct DecompositionReport {
    std::vector<double> terms; // t_k, k = 1..n
    double total = 0.0;
    double reconstruction_error = 0.0;
};

// Permutation making <|d_k f|^2> non-increasing in k (ties keep the original
// index order).  Expectations by quadrature for n <= 3, otherwise by MC.
std::vector<int> order_coordinates(const ConservativeModel& m, const Observable& f,
                                   const ChainConfig* mc_config = nullptr);

// Var(f) = sum_k < Var_{sigma^(k-1)}(f_k) >
DecompositionReport variance_decomposition(const ConditionalTower& tower,
                                           const ScalarField& f);
// Ent(g) = sum_k < Ent_{sigma^(k-1)}(g_k) >, g > 0 on the grid
DecompositionReport entropy_decomposition(const ConditionalTower& tower,
                                          const ScalarField& g);

// max residual over a small prefix grid of
//   d_k f_k  vs  <d_k f>_{sigma^(k)} + cov_{sigma^(k)}(f, V'(M - sum x))
// (the covariance enters with a plus sign; differentiating the conditional
// density in x_k brings down +V'(M - sum x) centered).
double gradient_identity_check(const ConditionalTower& tower, const Observable& f, int k);

// max residual of the n-k integration-by-parts identity
//   cov(f, V'(M-sum x)) = (n-k)^{-1} sum_i cov(f, V'(x_i)) - (n-k)^{-1} sum_i <d_i f>
double integration_by_parts_check(const ConditionalTower& tower, const Observable& f, int k);

// Shapes of the covariance-splitting inequalities: reports cov(f,S)^2, the
// candidate right-hand terms, and the implied minimal constants (with the
// block size K playing the epsilon = 1/K role).  No inequality is asserted:
// the paper's constants are existential.
struct CovSplitRow {
    std::string fname;
    int n = 0;
    int K = 0;
    int blocks = 0;
    double lhs = 0.0;      // cov(f, S)^2   (cov(f^2, S)^2 for the entropy variant)
    double lhs_err = 0.0;
    double var_term = 0.0; // Var(f)        (Ent(f^2), <f^2> = 1, for entropy)
    double grad_term = 0.0; // <|grad f|^2>
    double c_var = 0.0;     // lhs / var_term
    double c_grad = 0.0;    // lhs / (n grad_term)
    double c_combined = 0.0; // lhs / (var_term + n grad_term)
    bool conclusive = true;
};
std::vector<CovSplitRow> covariance_splitting_experiment(const ConservativeModel& m,
                                                         const std::vector<Observable>& dict,
                                                         int K, const ChainConfig& c,
                                                         bool entropy_variant = false);

// q blocks of size K and r of size K+1 with q K + r(K+1) = n+1; throws when no
// such partition exists.
std::vector<int> block_partition(int n_plus_1, int K);

} // namespace spinlab
