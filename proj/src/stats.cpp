#include "spinlab/stats.hpp"

#include "spinlab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace spinlab {

namespace {

double mean_of(std::span<const double> s) {
    double acc = 0.0;
    for (double v : s) acc += v;
    return acc / static_cast<double>(s.size());
}

} // namespace

double integrated_autocorr_time(std::span<const double> series, long* cutoff_lag) {
    const long n = static_cast<long>(series.size());
    if (cutoff_lag) *cutoff_lag = 0;
    if (n < 4) return 1.0;
    const double mu = mean_of(series);
    double var = 0.0;
    for (double v : series) var += (v - mu) * (v - mu);
    var /= static_cast<double>(n);
    if (var <= 0.0) return 1.0;

    auto acf = [&](long lag) {
        double acc = 0.0;
        for (long t = 0; t + lag < n; ++t)
            acc += (series[t] - mu) * (series[t + lag] - mu);
        return acc / (static_cast<double>(n) * var);
    };

    // tau = -1 + 2 sum_m Gamma_m with Gamma_m = rho(2m) + rho(2m+1),
    // truncated at the first nonpositive pair sum
    double tau = -1.0;
    for (long m = 0; 2 * m + 1 < n; ++m) {
        const double gamma = acf(2 * m) + acf(2 * m + 1);
        if (gamma <= 0.0) break;
        tau += 2.0 * gamma;
        if (cutoff_lag) *cutoff_lag = 2 * m + 1;
        if (2 * m + 1 >= n / 2) break; // window cap: lags beyond n/2 are noise
    }
    return std::max(1.0, tau);
}

MeanErr mean_with_error(std::span<const double> series) {
    MeanErr r;
    const long n = static_cast<long>(series.size());
    if (n == 0) throw ValidationError("mean_with_error: empty series");
    r.mean = mean_of(series);
    double var = 0.0;
    for (double v : series) var += (v - r.mean) * (v - r.mean);
    var /= static_cast<double>(n);
    r.iact = integrated_autocorr_time(series);
    r.err = std::sqrt(var * r.iact / static_cast<double>(n));
    return r;
}

CovErr covariance_with_error(std::span<const double> a, std::span<const double> b,
                             int nbatches) {
    if (a.size() != b.size() || a.empty())
        throw ValidationError("covariance_with_error: size mismatch");
    const long n = static_cast<long>(a.size());
    nbatches = static_cast<int>(std::min<long>(nbatches, n / 8));
    if (nbatches < 2) nbatches = 2;
    const long len = n / nbatches;
    // center on the global means: per-batch means would bias each batch's
    // covariance by O(iact/len)
    const double ma = mean_of(a), mb = mean_of(b);
    std::vector<double> per_batch(nbatches);
    for (int k = 0; k < nbatches; ++k) {
        const long lo = k * len, hi = lo + len;
        double c = 0.0;
        for (long t = lo; t < hi; ++t) c += (a[t] - ma) * (b[t] - mb);
        per_batch[k] = c / static_cast<double>(len);
    }
    CovErr r;
    r.cov = mean_of(per_batch);
    double v = 0.0;
    for (double c : per_batch) v += (c - r.cov) * (c - r.cov);
    v /= static_cast<double>(nbatches - 1);
    r.err = std::sqrt(v / nbatches);
    return r;
}

CovErr variance_with_error(std::span<const double> a, int nbatches) {
    return covariance_with_error(a, a, nbatches);
}

SlopeFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ValidationError("fit_line: need >= 2 matching points");
    const long n = static_cast<long>(x.size());
    const double mx = mean_of(x), my = mean_of(y);
    double sxx = 0.0, sxy = 0.0;
    for (long i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) throw ValidationError("fit_line: degenerate abscissae");
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (n > 2) {
        double ss = 0.0;
        for (long i = 0; i < n; ++i) {
            const double r = y[i] - (f.intercept + f.slope * x[i]);
            ss += r * r;
        }
        f.slope_se = std::sqrt(ss / static_cast<double>(n - 2) / sxx);
    }
    return f;
}

SlopeFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx, ly;
    lx.reserve(x.size());
    ly.reserve(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0)) throw ValidationError("fit_loglog: abscissae must be positive");
        if (y[i] == 0.0) throw ValidationError("fit_loglog: zero ordinate");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(std::fabs(y[i])));
    }
    return fit_line(lx, ly);
}

SlopeFit fit_loglog_weighted(std::span<const double> x, std::span<const double> y,
                             std::span<const double> yerr) {
    if (x.size() != y.size() || x.size() != yerr.size() || x.size() < 2)
        throw ValidationError("fit_loglog_weighted: need >= 2 matching points");
    const std::size_t n = x.size();
    double sw = 0.0, swx = 0.0, swy = 0.0;
    std::vector<double> lx(n), ly(n), wgt(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw ValidationError("fit_loglog_weighted: need positive data");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        const double sigma = std::max(yerr[i] / y[i], 1e-12);
        wgt[i] = 1.0 / (sigma * sigma);
        sw += wgt[i];
        swx += wgt[i] * lx[i];
        swy += wgt[i] * ly[i];
    }
    const double mx = swx / sw, my = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += wgt[i] * (lx[i] - mx) * (lx[i] - mx);
        sxy += wgt[i] * (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx <= 0.0) throw ValidationError("fit_loglog_weighted: degenerate abscissae");
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.slope_se = std::sqrt(1.0 / sxx);
    return f;
}

} // namespace spinlab
