#pragma once

#include "spinlab/model.hpp"
#include "spinlab/observables.hpp"
#include "spinlab/sampler.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace spinlab {

enum class SpectralMethod { grid_eigensolve, bakry_emery, variational_samples, one_d_criterion };
const char* to_string(SpectralMethod m);

struct SpectralReport {
    double poincare_estimate = 0.0;
    std::optional<double> lsi_estimate;
    SpectralMethod method = SpectralMethod::grid_eigensolve;
    long resolution = 0; // grid nodes per axis, or sample count
    double error_estimate = 0.0;
};

struct GridSpec {
    int nodes_per_axis = 64;
    double halfwidth_sd = 8.0; // window half-width in units of the base sd
};

// Uniform tensor grid carrying the sigma_M density and the symmetric
// Dirichlet-form stencil: edge weights sqrt(pi_i pi_j)/h^2, so that
// sum_edges w (f_i - f_j)^2 approximates <|grad f|^2> and the induced
// operator has a real nonnegative spectrum with exact detailed balance.
class DensityGrid {
public:
    DensityGrid(const ConservativeModel& m, const GridSpec& g);

    int n;
    int nodes;
    double h;
    long size;
    std::vector<double> axis;    // shared by all axes
    std::vector<double> pi;      // normalized grid masses
    std::vector<double> sqrt_pi;

    // S v with S = D^{-1/2} (D_w - W) D^{-1/2}: the symmetrized generator
    void apply_sym(const double* v, double* out) const;
    double diag(long i) const { return diag_[i]; }
    // Dirichlet form E(f) = sum_edges w (f_i - f_j)^2 on function values f
    double dirichlet(const std::vector<double>& f) const;
    double expect(const std::vector<double>& f) const;     // sum pi f
    double variance(const std::vector<double>& f) const;
    double entropy_sq(const std::vector<double>& f) const; // Ent(f^2)
    void decode(long flat, Eigen::VectorXd& x) const;

private:
    std::vector<double> diag_;
    std::vector<long> stride_;
};

// k smallest nonzero eigenpairs of the symmetrized grid generator (the
// kernel direction sqrt(pi) is deflated).  Dense solve for small grids,
// CG-based block inverse iteration otherwise.
struct EigenPairs {
    std::vector<double> values;  // ascending
    Eigen::MatrixXd vectors;     // columns, orthonormal, perp to sqrt(pi)
};
EigenPairs lowest_nonzero_spectrum(const DensityGrid& grid, int k);

// Poincare constant 1/lambda_2 from the grid eigensolve at g and at half
// resolution; the Richardson comparison supplies the error estimate.
// Throws NumericalError if lambda_2 shifts more than 5% between resolutions.
SpectralReport generator_gap(const ConservativeModel& m, const GridSpec& g);

// Lower bound on the LSI constant by maximizing Ent(f^2)/E(f) over grid
// functions (projected-gradient ascent from random starts plus the lowest
// generator eigenvectors); Bakry-Emery upper bound 2/rho when the certified
// curvature rho = (1 - sup_d2f) * lambda_min(I + ones) is positive.
SpectralReport lsi_constant_grid(const ConservativeModel& m, const GridSpec& g);

// max over the dictionary of Var(f) / <|grad f|^2> from samples; entries with
// degenerate gradient second moment are skipped.
double variational_gap_lower_bound(const SampleBatch& batch,
                                   const std::vector<Observable>& dictionary);

// Dual form of the spectral gap: P <(L f)^2> >= <|grad f|^2> for all smooth f
// (L f = Delta f - grad H . grad f, by quadrature).  Entries without an
// analytic Laplacian are skipped; returns false and names the offender on
// violation beyond discretization tolerance.
bool dual_characterization_check(const ConservativeModel& m, const GridSpec& g,
                                 const std::vector<Observable>& dictionary,
                                 std::string* offender = nullptr);

// One-spin effective curvature phi''(x1) = 1 - cov_{sigma_{M-x1}}(V'(x2), V'(x3))
// estimated by MC on the remaining n-1 coordinates (pair-averaged).
struct OneSpinRow {
    double x1 = 0.0;
    double phi_dd = 0.0;
    double err = 0.0;
    bool flagged = false;    // MC error exceeds 20% of |1 - phi''|
    double quad_check = 0.0; // quadrature value of phi'' (filled when n == 3)
};
struct OneSpinResult {
    std::vector<OneSpinRow> rows;
    double fitted_C = 0.0; // max_n row of n * (1 - phi'')
};
OneSpinResult one_spin_curvature(const ConservativeModel& m,
                                 const std::vector<double>& x1_grid,
                                 const ChainConfig& c);

// Quadrature route for n <= 3: second difference of the reduced marginal
// log-density x1^2/2 - log Z_{n-1}(M - x1).
double one_spin_curvature_quadrature(const ConservativeModel& m, double x1,
                                     int nodes_per_axis = 64);

// Numerical LSI bracket for a tabulated 1-D unnormalized density:
//   lower = 2 Var (variational bound with f = x),
//   upper = 2 Var * exp(osc b) (bounded-perturbation bound over the
//           moment-matched Gaussian base, b = -log p - (x-mean)^2/(2 Var)).
// Throws NumericalError when the tails are not Gaussian-dominated on the
// window or the window cuts visible mass.
struct LsiBracket {
    double lower = 0.0;
    double upper = 0.0;
};
LsiBracket one_d_lsi_criterion(const std::vector<double>& x,
                               const std::vector<double>& density);

} // namespace spinlab
