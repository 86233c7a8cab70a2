#pragma once

#include <string>
#include <vector>

#include "fracfield/spectrum.hpp"

namespace fracfield::kernels {

struct ModeTimeIntegral {
    double lambda = 0.0;
    double beta = 0.0;
    double t = 0.0;
    double s = 0.0;
    double value = 0.0;
    double error_estimate = 0.0;  // absolute, from the last mesh doubling
};

// int_0^(t^s) E_beta(-lambda (t-u)^beta) E_beta(-lambda (s-u)^beta) du to
// relative tolerance 1e-8 (absolute floor ~3e-13, the cached-kernel noise
// level), by composite Gauss-Legendre panels on a mesh graded toward the
// endpoint singularity, doubling panel count until stable.
ModeTimeIntegral mode_time_integral(double lambda, double beta, double t, double s);

// Cached Mittag-Leffler evaluator E_beta(-v): one piecewise-Chebyshev fit in
// ln v per (beta, range bucket), shared across threads. Matches eval_mlf to
// ~1e-11 relative on the fitted range.
double mlf_cached(double beta, double v);

struct VariogramCurve {
    enum class Kind { temporal, spatial, spatiotemporal };
    Kind kind = Kind::temporal;
    double anchor_t = 0.0;
    std::vector<double> anchor_x;
    std::vector<double> lags;    // ascending, > 0
    std::vector<double> values;  // >= 0
    std::vector<double> trunc_errors;
    int K = 0;
};

double covariance(const spectrum::SpectralTruncation& trunc, double t, double s,
                  const std::vector<double>& x, const std::vector<double>& y);

// Per-value truncation-error estimate: envelope tail of the discarded modes
// through the eigenvalue sandwich, times a uniform eigenfunction-magnitude
// bound for the domain.
double covariance_tail_bound(const spectrum::SpectralTruncation& trunc, double t, double s);

double green_kernel(const spectrum::SpectralTruncation& trunc, double t, double s,
                    const std::vector<double>& x, const std::vector<double>& y);

// E[c(t,x) - c(s,x)]^2 for each s in s_list (all 0 < s < t), computed from the
// per-mode decomposition int_0^s (dE)^2 + int_s^t E^2, not by differencing
// covariances.
VariogramCurve temporal_variogram(const spectrum::SpectralTruncation& trunc,
                                  const std::vector<double>& x, double t,
                                  const std::vector<double>& s_list);

VariogramCurve spatial_variogram(const spectrum::SpectralTruncation& trunc, double t,
                                 const std::vector<double>& x,
                                 const std::vector<std::vector<double>>& y_list);

// E[c(t,x) - c(s,y)]^2 via the covariance combination; degenerate inputs
// short-circuit (same point and time -> 0, y == x -> temporal path).
VariogramCurve spatiotemporal_variogram(const spectrum::SpectralTruncation& trunc, double t,
                                        const std::vector<double>& x,
                                        const std::vector<std::pair<double, std::vector<double>>>& sy_list);

// columns: kind, anchor_t, anchor_x.., lag, value, K, trunc_error
std::string to_csv(const VariogramCurve& curve);

}  // namespace fracfield::kernels
