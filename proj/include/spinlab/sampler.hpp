#pragma once

#include "spinlab/model.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/stats.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace spinlab {

enum class ChainKind { metropolis_langevin, pair_heat_bath };

struct ChainConfig {
    ChainKind kind = ChainKind::metropolis_langevin;
    double step = 0.1;        // MALA time step (auto-tuned during burn-in)
    long burn_in = 1000;      // steps (sweeps for pair_heat_bath)
    long samples = 10000;
    long thin = 1;
    std::uint64_t seed = 1;

    void validate() const;
    ChainConfig with_seed(std::uint64_t s) const {
        ChainConfig c = *this;
        c.seed = s;
        return c;
    }
};

struct SampleBatch {
    Eigen::MatrixXd draws; // samples x dim
    double acceptance_rate = 1.0;
    std::vector<double> iact; // per column

    long nsamples() const { return draws.rows(); }
    int dim() const { return static_cast<int>(draws.cols()); }
    std::vector<double> column(int j) const;
    // mean of column j with error bar sd * sqrt(iact/samples)
    MeanErr column_mean(int j) const;
    // trace of an arbitrary observable along the chain
    std::vector<double> trace(const std::function<double(const Eigen::VectorXd&)>& f) const;
};

// Metropolis-adjusted Langevin chain for sigma_M on R^n.  The step is tuned
// during burn-in so the acceptance rate lands in [0.2, 0.9] and frozen for
// the measurement phase.
SampleBatch sample_sigma(const ConservativeModel& m, const ChainConfig& c);

// Grid-inverse-CDF sampler for the pair-exchange conditional
//   density(u) proportional to exp(-V(u) - V(s-u)),
// a unit-variance-1/2 Gaussian at s/2 times the bounded F factor, tabulated
// once on fixed offsets (2^12 nodes on a +-8 sd window by default).
class Conditional1D {
public:
    explicit Conditional1D(const PerturbationSpec& p, int nodes = 4096,
                           double halfwidth_sd = 8.0);
    double sample(double s, Rng& rng) const;
    // piecewise-linear cell masses of the tabulated conditional at pair sum s
    std::vector<double> cell_masses(double s) const;
    const std::vector<double>& offsets() const { return t_; }

private:
    PerturbationSpec p_;
    std::vector<double> t_;       // offsets from s/2
    std::vector<double> gauss_;   // exp(-t^2), fixed
    std::vector<double> profile_; // pair_profile(t), when the family factorizes
    double dt_;
    void weights_at(double s, std::vector<double>& w) const;
};

// Pair heat-bath for mu_M on R^{n+1}: pick a pair, resample it from the 1-D
// conditional given its sum.  Every draw satisfies sum x = M exactly (up to
// rounding drift << 1e-10).  One chain step = one sweep = (n+1) pair updates.
SampleBatch sample_mu_exchange(const ConservativeModel& m, const ChainConfig& c);

// Estimate of cov(V'(x_1), V'(x_2)) averaged over all coordinate pairs of the
// batch (valid by exchangeability), with a batch-means error bar.
CovErr pair_averaged_vprime_cov(const SampleBatch& batch, const PerturbationSpec& p,
                                int nbatches = 32);

// --- experiments -----------------------------------------------------------

using MRule = std::function<double(int)>;
inline MRule m_rule_zero() {
    return [](int) { return 0.0; };
}
inline MRule m_rule_mean_one() {
    return [](int n) { return static_cast<double>(n + 1); };
}

struct CovDecayRow {
    int n = 0;
    double M = 0.0;
    double cov = 0.0;      // cov(V'(x_1), V'(x_2)), pair-averaged
    double cov_err = 0.0;
    double var_sum_over_n = 0.0; // Var(sum_i F'(x_i) + F'(M-sum x)) / n
    double var_err = 0.0;
    bool conclusive = true;
};
struct CovDecayResult {
    std::vector<CovDecayRow> rows;
    SlopeFit slope; // log|cov| vs log n
};
CovDecayResult covariance_decay_experiment(const PerturbationSpec& p,
                                           const std::vector<int>& n_list,
                                           const MRule& m_rule, const ChainConfig& c);

struct BetaLimitRow {
    double beta = 0.0;
    double value = 0.0;
    double err = 0.0;
};
struct BetaLimitResult {
    std::vector<BetaLimitRow> rows;
    double reference = 0.0; // sigma_M value of the observable
    bool decreasing_beyond_noise = true;
    bool final_within_3err = true;
};
// Samples mu_{M,beta} (soft constraint exp(-beta (M - sum x)^2) d mu) for each
// beta and compares <f> with the sigma_M reference.  Observables by name:
// "x1", "x1_sq", "sum", "const".  Reference via quadrature (needs n <= 3).
BetaLimitResult beta_limit_check(const ConservativeModel& m, const std::string& observable,
                                 const std::vector<double>& beta_list, const ChainConfig& c);

} // namespace spinlab
