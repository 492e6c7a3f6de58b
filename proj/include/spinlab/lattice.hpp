#pragma once

#include "spinlab/perturbation.hpp"
#include "spinlab/sampler.hpp"
#include "spinlab/stats.hpp"

#include <Eigen/Dense>

#include <array>
#include <utility>
#include <vector>

namespace spinlab {

// Box {1..L}^d with linear site indexing and nearest-neighbor edges.
struct LatticeBox {
    int d = 1;
    int L = 2;

    LatticeBox(int d_, int L_);

    long nsites() const;
    long nedges() const; // d L^{d-1} (L-1)

    long index(const std::array<int, 3>& c) const;    // coords in {0..L-1}^d
    std::array<int, 3> coords(long site) const;
    // undirected nearest-neighbor edges, each once
    std::vector<std::pair<long, long>> edges() const;
};

// Canonical coordinate paths: i -> j adjusts coordinate 1, then 2, ..., then d.
// Congestion counts ordered pairs routed through each undirected edge.
struct PathSystem {
    LatticeBox box;
    // congestion[a][site]: paths through the edge (site, site + stride_a);
    // valid where the site's a-coordinate is < L-1
    std::vector<std::vector<long>> congestion;
    long max_congestion = 0;
    long total_path_length = 0; // sum over ordered pairs of |Gamma_ij|
    long max_path_length = 0;

    // reconstruct the canonical site sequence from i to j
    std::vector<long> path(long i, long j) const;
    long congestion_sum() const; // sum over edges (double-counting identity)
};
PathSystem build_paths(const LatticeBox& box);

// Sharp constant of |Lambda|^{-1} sum_{i,j} (a_i-a_j)^2 <= C sum_{|i-j|=1} (a_i-a_j)^2
// (both sums over ordered pairs), equal to 1/lambda_2 of the graph Laplacian.
double comparison_ratio(const LatticeBox& box);

// Constructive path bound for a given vector a:
//   lhs = |Lambda|^{-1} sum_{i,j}(a_i-a_j)^2
//   rhs = |Lambda|^{-1} dL sum_edges congestion_e (delta a_e)^2   (Cauchy-Schwarz chain)
//   c_implied: lhs / (L^2 * ordered nearest-neighbor sum), 0 for constants
struct PathCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double c_implied = 0.0;
    bool holds = false;
};
PathCheck path_inequality_check(const LatticeBox& box, const Eigen::VectorXd& a);

// Kawasaki L^2 translation: Var_{mu_M}(f) <= P * ratio * sum_{|k-l|=1} <|d_k f - d_l f|^2>
// i.e. the nearest-neighbor constant is (ratio/L^2) * L^2 * P.  Requires
// n+1 = L^d.
double translate_to_kawasaki(double p_or_l, long n_plus_1, const LatticeBox& box);

} // namespace spinlab
