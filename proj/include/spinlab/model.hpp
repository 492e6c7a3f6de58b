#pragma once

#include "spinlab/perturbation.hpp"

#include <Eigen/Dense>

#include <functional>

namespace spinlab {

// The conservative measure sigma_M on R^n: unnormalized density
// exp(-H_M(x)) with H_M(x) = sum_i V(x_i) + V(M - sum_i x_i).
// Normalizing constants are never computed except implicitly by quadrature.
struct ConservativeModel {
    int n = 1;
    double M = 0.0;
    PerturbationSpec p;

    ConservativeModel(int n_, double M_, PerturbationSpec p_);

    // M - sum_i x_i, the implicit (n+1)-th coordinate
    double implicit_coordinate(const Eigen::VectorXd& x) const;

    double energy(const Eigen::VectorXd& x) const;
    Eigen::VectorXd grad_energy(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd hess_energy(const Eigen::VectorXd& x) const;

    // B(x) = sum_i F(x_i) + F(M - sum x): sigma_M = e^{-B} d gamma_{n,M} / Z.
    // Satisfies |B| <= (n+1) sup_f and B = energy - quadratic part.
    double log_density_vs_gaussian(const Eigen::VectorXd& x) const;

private:
    void check_dim(const Eigen::VectorXd& x) const;
};

// gamma_{n,M}: Gaussian with mean (M/(n+1)) * ones and precision I + ones.
struct GaussianBase {
    int n = 1;
    double M = 0.0;

    GaussianBase(int n_, double M_);

    Eigen::VectorXd mean() const;
    Eigen::MatrixXd precision() const;  // I_n + all-ones
    Eigen::MatrixXd covariance() const; // I_n - all-ones/(n+1)
    double pair_covariance() const { return -1.0 / (n + 1); }
    double coordinate_variance() const { return static_cast<double>(n) / (n + 1); }
};

// H(x) = (2(n+1))^{-1} sum_{i,j} V_{ij}(x_i - x_j) on R^{n+1}, with pair
// potentials given through their second derivatives and a curvature floor rho.
struct MeanFieldModel {
    int n_plus_1 = 2;
    std::function<double(int, int, double)> pair_d2; // V''_{ij}(u)
    double rho = 1.0;

    Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;
};

// Sorted eigenvalues of the mean-field Hessian at x.  The spectrum has
// lambda_1 = 0 (eigenvector: constants) and lambda_2 >= n rho/(n+1).
Eigen::VectorXd meanfield_spectrum(const MeanFieldModel& mf, const Eigen::VectorXd& x);

// Given Hess H >= rho I on R^{n+1}, the induced Hessian of H_M on R^n is
// J^T (Hess H) J with J = [I_n; -ones^T]; checks its min eigenvalue >= rho - tol.
bool strict_convexity_transfer_check(const Eigen::MatrixXd& hess_H, double rho,
                                     double tol = 1e-8);

} // namespace spinlab
