#include "spinlab/lattice.hpp"

#include "spinlab/errors.hpp"

#include <cmath>

namespace spinlab {

LatticeBox::LatticeBox(int d_, int L_) : d(d_), L(L_) {
    if (d < 1 || d > 3) throw ValidationError("LatticeBox: d must be in {1,2,3}");
    if (L < 1) throw ValidationError("LatticeBox: L must be >= 1");
}

long LatticeBox::nsites() const {
    long n = 1;
    for (int a = 0; a < d; ++a) n *= L;
    return n;
}

long LatticeBox::nedges() const {
    long per_axis = L - 1;
    for (int a = 1; a < d; ++a) per_axis *= L;
    return d * per_axis;
}

long LatticeBox::index(const std::array<int, 3>& c) const {
    long idx = 0;
    for (int a = d - 1; a >= 0; --a) idx = idx * L + c[a];
    return idx;
}

std::array<int, 3> LatticeBox::coords(long site) const {
    std::array<int, 3> c{0, 0, 0};
    for (int a = 0; a < d; ++a) {
        c[a] = static_cast<int>(site % L);
        site /= L;
    }
    return c;
}

std::vector<std::pair<long, long>> LatticeBox::edges() const {
    std::vector<std::pair<long, long>> e;
    e.reserve(nedges());
    const long n = nsites();
    long stride = 1;
    for (int a = 0; a < d; ++a) {
        for (long i = 0; i < n; ++i) {
            if (coords(i)[a] + 1 < L) e.emplace_back(i, i + stride);
        }
        stride *= L;
    }
    return e;
}

std::vector<long> PathSystem::path(long i, long j) const {
    std::array<int, 3> ci = box.coords(i);
    const std::array<int, 3> cj = box.coords(j);
    std::vector<long> seq;
    seq.push_back(i);
    for (int a = 0; a < box.d; ++a) {
        while (ci[a] != cj[a]) {
            ci[a] += cj[a] > ci[a] ? 1 : -1;
            seq.push_back(box.index(ci));
        }
    }
    return seq;
}

long PathSystem::congestion_sum() const {
    long total = 0;
    for (const auto& axis : congestion)
        for (long c : axis) total += c;
    return total;
}

PathSystem build_paths(const LatticeBox& box) {
    if (box.L < 2) throw ValidationError("build_paths: need L >= 2");
    const long n = box.nsites();
    if (n > 4096) throw ValidationError("build_paths: enumeration cap is L^d <= 4096");

    PathSystem ps{box, {}, 0, 0, 0};
    std::vector<long> strides(box.d);
    long s = 1;
    for (int a = 0; a < box.d; ++a) {
        strides[a] = s;
        s *= box.L;
        ps.congestion.emplace_back(n, 0);
    }

    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < n; ++j) {
            if (i == j) continue;
            std::array<int, 3> c = box.coords(i);
            const std::array<int, 3> target = box.coords(j);
            long site = i, len = 0;
            for (int a = 0; a < box.d; ++a) {
                while (c[a] != target[a]) {
                    const int dir = target[a] > c[a] ? 1 : -1;
                    // undirected edge key: its lower endpoint along the axis
                    const long lower = dir > 0 ? site : site - strides[a];
                    ++ps.congestion[a][lower];
                    c[a] += dir;
                    site += dir * strides[a];
                    ++len;
                }
            }
            ps.total_path_length += len;
            ps.max_path_length = std::max(ps.max_path_length, len);
        }
    }
    for (const auto& axis : ps.congestion)
        for (long c : axis) ps.max_congestion = std::max(ps.max_congestion, c);
    return ps;
}

double comparison_ratio(const LatticeBox& box) {
    const long n = box.nsites();
    if (n > 4096) throw ValidationError("comparison_ratio: dense eigensolve cap is L^d <= 4096");
    if (n < 2) throw ValidationError("comparison_ratio: need at least 2 sites");
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [i, j] : box.edges()) {
        lap(i, i) += 1.0;
        lap(j, j) += 1.0;
        lap(i, j) -= 1.0;
        lap(j, i) -= 1.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
    if (es.info() != Eigen::Success)
        throw NumericalError("comparison_ratio: eigensolve failure");
    const double lambda2 = es.eigenvalues()[1];
    if (!(lambda2 > 0.0)) throw NumericalError("comparison_ratio: disconnected lattice?");
    return 1.0 / lambda2;
}

PathCheck path_inequality_check(const LatticeBox& box, const Eigen::VectorXd& a) {
    const long n = box.nsites();
    if (a.size() != n) throw ValidationError("path_inequality_check: dim a != L^d");
    const PathSystem ps = build_paths(box);

    PathCheck r;
    // sum over ordered pairs: 2 n sum a^2 - 2 (sum a)^2
    const double sum = a.sum(), sum2 = a.squaredNorm();
    r.lhs = (2.0 * n * sum2 - 2.0 * sum * sum) / static_cast<double>(n);

    double weighted = 0.0, nn = 0.0;
    long stride = 1;
    for (int ax = 0; ax < box.d; ++ax) {
        for (long i = 0; i < n; ++i) {
            if (box.coords(i)[ax] + 1 < box.L) {
                const double diff = a[i] - a[i + stride];
                weighted += static_cast<double>(ps.congestion[ax][i]) * diff * diff;
                nn += diff * diff;
            }
        }
        stride *= box.L;
    }
    r.rhs = static_cast<double>(box.d) * box.L * weighted / static_cast<double>(n);
    const double nn_ordered = 2.0 * nn;
    r.c_implied = nn_ordered > 0.0
                      ? r.lhs / (static_cast<double>(box.L) * box.L * nn_ordered)
                      : 0.0;
    r.holds = r.lhs <= r.rhs * (1.0 + 1e-12) + 1e-12;
    return r;
}

double translate_to_kawasaki(double p_or_l, long n_plus_1, const LatticeBox& box) {
    if (n_plus_1 != box.nsites())
        throw ValidationError("translate_to_kawasaki: n+1 must equal L^d");
    if (!(p_or_l >= 0.0)) throw ValidationError("translate_to_kawasaki: constant must be >= 0");
    return p_or_l * comparison_ratio(box);
}

} // namespace spinlab
