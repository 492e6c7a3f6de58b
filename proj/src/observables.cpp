#include "spinlab/observables.hpp"

#include "spinlab/errors.hpp"

#include <cmath>

namespace spinlab {

namespace {
void check_index(int n, int i) {
    if (i < 0 || i >= n) throw ValidationError("observable: coordinate index out of range");
}
} // namespace

Observable coordinate_observable(int n, int i) {
    check_index(n, i);
    Observable o;
    o.name = "x" + std::to_string(i + 1);
    o.f = [i](const Eigen::VectorXd& x) { return x[i]; };
    o.grad = [n, i](const Eigen::VectorXd&) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
        g[i] = 1.0;
        return g;
    };
    o.laplacian = [](const Eigen::VectorXd&) { return 0.0; };
    return o;
}

Observable difference_observable(int n, int i, int j) {
    check_index(n, i);
    check_index(n, j);
    Observable o;
    o.name = "diff_x" + std::to_string(i + 1) + "_x" + std::to_string(j + 1);
    o.f = [i, j](const Eigen::VectorXd& x) { return x[i] - x[j]; };
    o.grad = [n, i, j](const Eigen::VectorXd&) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
        g[i] = 1.0;
        g[j] = -1.0;
        return g;
    };
    o.laplacian = [](const Eigen::VectorXd&) { return 0.0; };
    return o;
}

Observable product_observable(int n, int i, int j) {
    check_index(n, i);
    check_index(n, j);
    Observable o;
    o.name = "prod_x" + std::to_string(i + 1) + "_x" + std::to_string(j + 1);
    o.f = [i, j](const Eigen::VectorXd& x) { return x[i] * x[j]; };
    o.grad = [n, i, j](const Eigen::VectorXd& x) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
        if (i == j) {
            g[i] = 2.0 * x[i];
        } else {
            g[i] = x[j];
            g[j] = x[i];
        }
        return g;
    };
    o.laplacian = [i, j](const Eigen::VectorXd&) { return i == j ? 2.0 : 0.0; };
    return o;
}

Observable exp_observable(int n, int i) {
    check_index(n, i);
    Observable o;
    o.name = "exp_x" + std::to_string(i + 1);
    o.f = [i](const Eigen::VectorXd& x) { return std::exp(x[i]); };
    o.grad = [n, i](const Eigen::VectorXd& x) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
        g[i] = std::exp(x[i]);
        return g;
    };
    o.laplacian = [i](const Eigen::VectorXd& x) { return std::exp(x[i]); };
    return o;
}

Observable cosine_mode_observable(int n) {
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) c[i] = std::cos(M_PI * (i + 1) / n);
    Observable o;
    o.name = "cosmode";
    o.f = [c](const Eigen::VectorXd& x) { return c.dot(x); };
    o.grad = [c](const Eigen::VectorXd&) { return c; };
    o.laplacian = [](const Eigen::VectorXd&) { return 0.0; };
    return o;
}

Observable site_vprime_observable(const ConservativeModel& m, int i) {
    check_index(m.n, i);
    const int n = m.n;
    const PerturbationSpec p = m.p;
    Observable o;
    o.name = "vprime_x" + std::to_string(i + 1);
    o.f = [p, i](const Eigen::VectorXd& x) { return x[i] + p.df(x[i]); };
    o.grad = [p, n, i](const Eigen::VectorXd& x) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
        g[i] = 1.0 + p.d2f(x[i]);
        return g;
    };
    // Laplacian would need F''', which PerturbationSpec does not certify
    return o;
}

std::vector<Observable> sigma_dictionary(const ConservativeModel& m) {
    std::vector<Observable> dict;
    const int n = m.n;
    for (int i = 0; i < n; ++i) dict.push_back(coordinate_observable(n, i));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) dict.push_back(difference_observable(n, i, j));
    for (int i = 0; i < n; ++i) dict.push_back(site_vprime_observable(m, i));
    if (n >= 2) dict.push_back(cosine_mode_observable(n));
    return dict;
}

std::vector<Observable> luyau_dictionary(const ConservativeModel& m) {
    std::vector<Observable> dict;
    const int n = m.n;
    for (int i = 0; i < n; ++i) dict.push_back(coordinate_observable(n, i));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) dict.push_back(product_observable(n, i, j));
    dict.push_back(exp_observable(n, 0));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) dict.push_back(difference_observable(n, i, j));
    if (n >= 2) dict.push_back(cosine_mode_observable(n));
    return dict;
}

} // namespace spinlab
