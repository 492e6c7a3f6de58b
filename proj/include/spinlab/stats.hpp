#pragma once

#include <span>
#include <vector>

namespace spinlab {

// Integrated autocorrelation time via Geyer's initial-positive-sequence
// truncation: tau = -1 + 2 * sum of the pairwise sums Gamma_m of the
// autocorrelation function, cut at the first nonpositive Gamma_m.
// Always >= 1; returns 1 for (near-)constant series.  When cutoff_lag is
// given it receives the truncation lag (for Sokal-style error bars).
double integrated_autocorr_time(std::span<const double> series,
                                long* cutoff_lag = nullptr);

struct MeanErr {
    double mean = 0.0;
    double err = 0.0;  // sd * sqrt(iact / nsamples)
    double iact = 1.0;
};
MeanErr mean_with_error(std::span<const double> series);

// Covariance of two equal-length chains with a batch-means error bar.
struct CovErr {
    double cov = 0.0;
    double err = 0.0;
};
CovErr covariance_with_error(std::span<const double> a, std::span<const double> b,
                             int nbatches = 32);
// Variance with batch-means error bar.
CovErr variance_with_error(std::span<const double> a, int nbatches = 32);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
};
// Ordinary least squares of y against x.
SlopeFit fit_line(std::span<const double> x, std::span<const double> y);
// Fit of log|y| against log x; entries with y == 0 are rejected.
SlopeFit fit_loglog(std::span<const double> x, std::span<const double> y);
// Weighted fit of log y against log x with absolute errors yerr on y
// (propagated as yerr/y on log y).
SlopeFit fit_loglog_weighted(std::span<const double> x, std::span<const double> y,
                             std::span<const double> yerr);

} // namespace spinlab
