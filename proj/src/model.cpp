#include "spinlab/model.hpp"

#include "spinlab/errors.hpp"

#include <cmath>
#include <utility>

namespace spinlab {

ConservativeModel::ConservativeModel(int n_, double M_, PerturbationSpec p_)
    : n(n_), M(M_), p(std::move(p_)) {
    if (n < 1) throw ValidationError("ConservativeModel: n must be >= 1");
    if (!std::isfinite(M)) throw ValidationError("ConservativeModel: M must be finite");
}

void ConservativeModel::check_dim(const Eigen::VectorXd& x) const {
    if (x.size() != n) throw ValidationError("ConservativeModel: dimension mismatch");
}

double ConservativeModel::implicit_coordinate(const Eigen::VectorXd& x) const {
    return M - x.sum();
}

double ConservativeModel::energy(const Eigen::VectorXd& x) const {
    check_dim(x);
    double e = 0.0;
    for (int i = 0; i < n; ++i) e += 0.5 * x[i] * x[i] + p.f(x[i]);
    const double last = implicit_coordinate(x);
    e += 0.5 * last * last + p.f(last);
    return e;
}

Eigen::VectorXd ConservativeModel::grad_energy(const Eigen::VectorXd& x) const {
    check_dim(x);
    const double last = implicit_coordinate(x);
    const double dv_last = last + p.df(last);
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = x[i] + p.df(x[i]) - dv_last;
    return g;
}

Eigen::MatrixXd ConservativeModel::hess_energy(const Eigen::VectorXd& x) const {
    check_dim(x);
    const double last = implicit_coordinate(x);
    const double c = 1.0 + p.d2f(last);
    Eigen::MatrixXd h = Eigen::MatrixXd::Constant(n, n, c);
    for (int i = 0; i < n; ++i) h(i, i) += 1.0 + p.d2f(x[i]);
    return h;
}

double ConservativeModel::log_density_vs_gaussian(const Eigen::VectorXd& x) const {
    check_dim(x);
    double b = 0.0;
    for (int i = 0; i < n; ++i) b += p.f(x[i]);
    b += p.f(implicit_coordinate(x));
    return b;
}

GaussianBase::GaussianBase(int n_, double M_) : n(n_), M(M_) {
    if (n < 1) throw ValidationError("GaussianBase: n must be >= 1");
}

Eigen::VectorXd GaussianBase::mean() const {
    return Eigen::VectorXd::Constant(n, M / (n + 1));
}

Eigen::MatrixXd GaussianBase::precision() const {
    return Eigen::MatrixXd::Identity(n, n) + Eigen::MatrixXd::Ones(n, n);
}

Eigen::MatrixXd GaussianBase::covariance() const {
    return Eigen::MatrixXd::Identity(n, n) -
           Eigen::MatrixXd::Constant(n, n, 1.0 / (n + 1));
}

Eigen::MatrixXd MeanFieldModel::hessian(const Eigen::VectorXd& x) const {
    const int N = n_plus_1;
    if (x.size() != N) throw ValidationError("MeanFieldModel: dimension mismatch");
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            if (i == j) continue;
            const double w = pair_d2(i, j, x[i] - x[j]) / N;
            h(i, i) += w;
            h(i, j) -= w;
        }
    }
    return h;
}

Eigen::VectorXd meanfield_spectrum(const MeanFieldModel& mf, const Eigen::VectorXd& x) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mf.hessian(x));
    if (es.info() != Eigen::Success)
        throw NumericalError("meanfield_spectrum: eigensolve failed");
    return es.eigenvalues();
}

bool strict_convexity_transfer_check(const Eigen::MatrixXd& hess_H, double rho,
                                     double tol) {
    const int np1 = static_cast<int>(hess_H.rows());
    if (hess_H.cols() != np1 || np1 < 2)
        throw ValidationError("strict_convexity_transfer_check: need square (n+1)x(n+1), n >= 1");
    const int n = np1 - 1;
    Eigen::MatrixXd j(np1, n);
    j.topRows(n) = Eigen::MatrixXd::Identity(n, n);
    j.bottomRows(1) = Eigen::MatrixXd::Constant(1, n, -1.0);
    const Eigen::MatrixXd induced = j.transpose() * hess_H * j;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(induced);
    if (es.info() != Eigen::Success)
        throw NumericalError("strict_convexity_transfer_check: eigensolve failed");
    return es.eigenvalues().minCoeff() >= rho - tol;
}

} // namespace spinlab
