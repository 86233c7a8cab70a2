#pragma once

#include <string>
#include <vector>

#include "fracfield/domains.hpp"
#include "fracfield/kernels.hpp"
#include "fracfield/simulate.hpp"
#include "fracfield/spectrum.hpp"

namespace fracfield::analyze {

struct SlopeFit {
    double window_lo = 0.0, window_hi = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;
    double r_squared = 0.0;
    int n_points = 0;
};

// least-squares slope of log value vs log lag over lags in [window_lo, window_hi]
SlopeFit fit_loglog_slope(const kernels::VariogramCurve& curve, double window_lo,
                          double window_hi);

enum class BoundKind { temporal, spatial, spacetime };

struct BoundSpec {
    BoundKind kind = BoundKind::temporal;
    double theta = 0.0;
    double prefactor = 1.0;
    std::string notes;
};

// Exponents: temporal theta = min(1 - beta*n/(p(alpha+gamma)), 1-beta)
// (requires beta < 1/2 and p(alpha+gamma) > n/2); spatial theta = 2 (Upsilon=1);
// spacetime theta = min of the two. The prefactor starts at 1 ("uncalibrated");
// attach one with the helpers below before containment checks.
BoundSpec bound_exponent(const spectrum::FracParams& params, int n, BoundKind kind);

// prefactor = sum_{k<=K} C_k^2 * int_0^t E_beta(-lambda_k w^beta)^2 dw, the
// per-mode truncated-constant assembly of the spatial bound
BoundSpec with_spatial_prefactor(BoundSpec bound, const spectrum::SpectralTruncation& trunc,
                                 const std::vector<domains::ModeHolderData>& holder, double t);

// prefactor = inflation * max over every stride-th curve point of
// value / lag^theta (empirical calibration on a coarse subsample)
BoundSpec with_calibrated_prefactor(BoundSpec bound, const kernels::VariogramCurve& curve,
                                    int stride, double inflation);

struct BoundCheck {
    bool holds = false;
    double max_ratio = 0.0;
    double worst_lag = 0.0;
};

// value(lag) <= prefactor * lag^theta at every curve lag
BoundCheck verify_bound(const kernels::VariogramCurve& curve, const BoundSpec& bound);

struct ModulusReport {
    std::vector<double> deltas;
    std::vector<double> mean_stat;  // mean over replicates of the normalized sup
    std::vector<double> p95_stat;   // 95th percentile
    bool consistent = false;        // p95 nonincreasing as delta decreases
};

// Normalized sup statistic per replicate: sup over grid pairs within delta
// (both |t_i - t_j| and ||x_a - x_b|| at most delta) of squared increments,
// divided by delta^theta (1 + sqrt(log(1/delta))). Needs >= 100 replicates and
// grid spacing below min delta.
ModulusReport modulus_stat(const simulate::FieldEnsemble& ens, const std::vector<double>& deltas,
                           double theta);

// max over grid points in [T/4, T] of |caputo_l1(E_beta(-lambda t^beta))
// + lambda E_beta(-lambda t^beta)|; the window avoids the t->0 derivative
// singularity of the exact solution, where the L1 residual does not vanish
double caputo_mode_residual(double lambda, double beta, const mlf::TimeGrid& grid);

// fit-window policy: [10 * min_resolvable, 0.1 * anchor], clipped to the
// curve's lag support; min_resolvable is the truncation-saturation scale
// lambda_K^(-1/beta) for exact curves (grid spacing for empirical ones)
std::pair<double, double> calibrated_window(const kernels::VariogramCurve& curve,
                                            double min_resolvable, double anchor);

std::string to_csv(const SlopeFit& fit);
std::string to_csv(const ModulusReport& report);

}  // namespace fracfield::analyze
