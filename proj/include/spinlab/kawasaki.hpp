#pragma once

#include "spinlab/lattice.hpp"
#include "spinlab/perturbation.hpp"
#include "spinlab/sampler.hpp"
#include "spinlab/stats.hpp"

#include <vector>

namespace spinlab {

// Conservative nearest-neighbor pair heat-bath on the box: pick a random
// edge, resample the pair from the 1-D conditional given its sum.  Total
// spin is preserved exactly.  One sweep = |edges| pair updates; the
// integrated autocorrelation time of the slowest cosine mode
// sum_i cos(pi i_1 / L) x_i is measured in sweeps.
struct KawasakiRow {
    int L = 0;
    double tau = 0.0;
    double tau_err = 0.0;
    long sweeps = 0;
    double sum_drift = 0.0; // |sum x - M| at the end (Kahan-summed)
};
struct KawasakiResult {
    std::vector<KawasakiRow> rows;
    SlopeFit z; // fit of log tau vs log L
};

// Single-lattice run: returns (tau, tau_err) in sweeps.
KawasakiRow kawasaki_tau(const LatticeBox& box, const PerturbationSpec& p, double M,
                         const ChainConfig& c);

// L-sweep with the dynamic exponent fit tau ~ L^z.  d from the box template;
// chains for different L use seeds split from c.seed and run in a worker
// pool (threads <= 0: SPINLAB_THREADS or hardware default).
KawasakiResult kawasaki_relaxation(const LatticeBox& box_template,
                                   const PerturbationSpec& p, double M,
                                   const ChainConfig& c, const std::vector<int>& L_list,
                                   int threads = 0);

} // namespace spinlab
