#pragma once

#include "spinlab/model.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace spinlab {

// Named smooth test function with analytic derivatives.  The Laplacian is
// optional; operations that need L f = Delta f - grad H . grad f skip
// entries without it.
struct Observable {
    std::string name;
    std::function<double(const Eigen::VectorXd&)> f;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
    std::function<double(const Eigen::VectorXd&)> laplacian; // may be empty
};

Observable coordinate_observable(int n, int i);                  // x_i
Observable difference_observable(int n, int i, int j);           // x_i - x_j
Observable product_observable(int n, int i, int j);              // x_i * x_j
Observable exp_observable(int n, int i);                         // e^{x_i}
Observable cosine_mode_observable(int n);                        // sum_i cos(pi i/n) x_i
Observable site_vprime_observable(const ConservativeModel& m, int i); // V'(x_i)

// Dictionary for variational Poincare bounds and the dual check: coordinates,
// pairwise differences, site potentials V'(x_i), and the slow cosine mode.
std::vector<Observable> sigma_dictionary(const ConservativeModel& m);

// Dictionary for the variance/entropy decompositions: coordinates, pair
// products, e^{x_1}, site differences, slow cosine mode.
std::vector<Observable> luyau_dictionary(const ConservativeModel& m);

} // namespace spinlab
