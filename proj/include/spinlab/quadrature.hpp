#pragma once

#include "spinlab/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

namespace spinlab {

// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
    explicit GaussLegendre(int npoints);
    std::vector<double> nodes;
    std::vector<double> weights;
};

using ScalarField = std::function<double(const Eigen::VectorXd&)>;

// Tensor-product Gauss-Legendre quadrature for sigma_M on
// [M/(n+1) - R, M/(n+1) + R]^n.  Truncation is controlled by the Gaussian
// envelope e^{(n+1) sup_f} gamma-tail, negligible at R = 10.
// Intended for n <= 3 (the eigensolve/quadrature regime).
class SigmaQuadrature {
public:
    explicit SigmaQuadrature(const ConservativeModel& m, int nodes_per_axis = 64,
                             double halfwidth = 10.0);

    const ConservativeModel& model() const { return model_; }
    int nodes_per_axis() const { return nodes_; }

    // sum_idx w_idx * fn(x_idx), with w the positive unnormalized weights
    double integrate(const ScalarField& fn) const;
    double mass() const { return mass_; }
    // log of the true normalizing integral int e^{-H_M} (shift folded back)
    double log_normalization() const { return std::log(mass_) - energy_shift_; }

    double expect(const ScalarField& fn) const { return integrate(fn) / mass_; }
    double variance(const ScalarField& fn) const;
    double covariance(const ScalarField& f, const ScalarField& g) const;
    // Ent(g) = <g log g> - <g> log <g>, g >= 0
    double entropy(const ScalarField& g) const;

    // tensor access (flat index, axis-major with axis 0 slowest)
    const std::vector<double>& weight_tensor() const { return weight_; }
    const std::vector<double>& axis_nodes() const { return axis_; }
    long tensor_size() const { return static_cast<long>(weight_.size()); }
    void decode(long flat, Eigen::VectorXd& x) const;

private:
    ConservativeModel model_;
    int nodes_;
    std::vector<double> axis_;   // shared by all axes
    std::vector<double> axis_w_; // GL weights scaled to the window
    std::vector<double> weight_; // nodes^n positive weights
    double mass_ = 0.0;
    double energy_shift_ = 0.0;
};

} // namespace spinlab
