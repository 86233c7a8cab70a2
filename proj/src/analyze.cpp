#include "fracfield/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "fracfield/errors.hpp"
#include "fracfield/mlf.hpp"
#include "fracfield/numerics.hpp"

namespace fracfield::analyze {

SlopeFit fit_loglog_slope(const kernels::VariogramCurve& curve, double window_lo,
                          double window_hi) {
    if (!(window_lo > 0.0) || !(window_hi > window_lo))
        throw invalid_input("fit_loglog_slope: need 0 < window_lo < window_hi");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < curve.lags.size(); ++i) {
        const double lag = curve.lags[i];
        if (lag < window_lo || lag > window_hi) continue;
        const double v = curve.values[i];
        if (!(v > 0.0))
            throw invalid_input("fit_loglog_slope: nonpositive curve value inside the window at lag " +
                                std::to_string(lag));
        lx.push_back(std::log(lag));
        ly.push_back(std::log(v));
    }
    if (lx.size() < 5)
        throw invalid_input("fit_loglog_slope: window too small, needs >= 5 lags, has " +
                            std::to_string(lx.size()));
    numerics::LineFit lf = numerics::fit_line(lx, ly);
    SlopeFit fit;
    fit.window_lo = window_lo;
    fit.window_hi = window_hi;
    fit.slope = lf.slope;
    fit.intercept = lf.intercept;
    fit.std_error = lf.slope_stderr;
    fit.n_points = static_cast<int>(lx.size());
    double my = 0.0;
    for (double v : ly) my += v;
    my /= ly.size();
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        ss_tot += (ly[i] - my) * (ly[i] - my);
        const double r = ly[i] - (lf.intercept + lf.slope * lx[i]);
        ss_res += r * r;
    }
    fit.r_squared = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

BoundSpec bound_exponent(const spectrum::FracParams& params, int n, BoundKind kind) {
    params.validate();
    if (n < 1) throw invalid_input("bound_exponent: dimension must be >= 1");
    const double pag = params.poly_degree() * (params.alpha + params.gamma);
    BoundSpec bound;
    bound.kind = kind;
    bound.prefactor = 1.0;
    const double theta_spatial = 2.0;  // 2 * Upsilon with Upsilon = 1

    if (kind == BoundKind::spatial) {
        if (!params.admissible_solution(n))
            throw invalid_input("bound_exponent: spatial kind requires p(alpha+gamma) > n");
        bound.theta = theta_spatial;
        bound.notes = "theta = 2*Upsilon, Upsilon = 1; prefactor uncalibrated (attach the "
                      "truncated per-mode constant)";
        return bound;
    }

    if (!(params.beta < 0.5))
        throw invalid_input("bound_exponent: temporal regularity requires beta < 1/2, got beta=" +
                            std::to_string(params.beta));
    if (!(pag > 0.5 * n))
        throw invalid_input("bound_exponent: temporal kind requires p(alpha+gamma) > n/2");
    const double theta_temporal = std::min(1.0 - params.beta * n / pag, 1.0 - params.beta);
    if (kind == BoundKind::temporal) {
        bound.theta = theta_temporal;
        bound.notes = "theta = min(1 - beta*n/(p(alpha+gamma)), 1-beta); prefactor uncalibrated "
                      "(attach an empirical calibration)";
    } else {
        if (!params.admissible_solution(n))
            throw invalid_input("bound_exponent: spacetime kind requires p(alpha+gamma) > n");
        bound.theta = std::min(theta_temporal, theta_spatial);
        bound.notes = "theta = min(temporal, spatial) exponents; prefactor uncalibrated";
    }
    return bound;
}

BoundSpec with_spatial_prefactor(BoundSpec bound, const spectrum::SpectralTruncation& trunc,
                                 const std::vector<domains::ModeHolderData>& holder, double t) {
    if (bound.kind != BoundKind::spatial)
        throw invalid_input("with_spatial_prefactor: bound kind must be spatial");
    if (static_cast<int>(holder.size()) < trunc.K())
        throw invalid_input("with_spatial_prefactor: need holder data for every retained mode");
    const double beta = trunc.params().beta;
    double acc = 0.0;
    for (int k = 0; k < trunc.K(); ++k) {
        const double lam = trunc.lambda(k);
        // int_0^t E_beta(-lam w^beta)^2 dw via the mode integral at t = s
        const double ik = kernels::mode_time_integral(lam, beta, t, t).value;
        const double ck = holder[k].lipschitz_constant;
        acc += ck * ck * ik;
    }
    bound.prefactor = acc;
    bound.notes = "per-mode truncated constant sum_k C_k^2 int_0^t E^2, t=" + std::to_string(t);
    return bound;
}

BoundSpec with_calibrated_prefactor(BoundSpec bound, const kernels::VariogramCurve& curve,
                                    int stride, double inflation) {
    if (stride < 1) throw invalid_input("with_calibrated_prefactor: stride must be >= 1");
    if (!(inflation > 0.0)) throw invalid_input("with_calibrated_prefactor: inflation must be > 0");
    double worst = 0.0;
    for (std::size_t i = 0; i < curve.lags.size(); i += stride)
        worst = std::max(worst, curve.values[i] / std::pow(curve.lags[i], bound.theta));
    if (!(worst > 0.0))
        throw invalid_input("with_calibrated_prefactor: curve has no positive calibration points");
    bound.prefactor = inflation * worst;
    bound.notes = "empirical calibration on stride-" + std::to_string(stride) +
                  " subsample, inflated x" + std::to_string(inflation);
    return bound;
}

BoundCheck verify_bound(const kernels::VariogramCurve& curve, const BoundSpec& bound) {
    const bool kind_matches =
        (bound.kind == BoundKind::temporal &&
         curve.kind == kernels::VariogramCurve::Kind::temporal) ||
        (bound.kind == BoundKind::spatial &&
         curve.kind == kernels::VariogramCurve::Kind::spatial) ||
        (bound.kind == BoundKind::spacetime &&
         curve.kind == kernels::VariogramCurve::Kind::spatiotemporal);
    if (!kind_matches) throw invalid_input("verify_bound: curve and bound kinds do not match");
    BoundCheck check;
    check.max_ratio = 0.0;
    for (std::size_t i = 0; i < curve.lags.size(); ++i) {
        const double ratio =
            curve.values[i] / (bound.prefactor * std::pow(curve.lags[i], bound.theta));
        if (ratio > check.max_ratio) {
            check.max_ratio = ratio;
            check.worst_lag = curve.lags[i];
        }
    }
    check.holds = check.max_ratio <= 1.0;
    return check;
}

ModulusReport modulus_stat(const simulate::FieldEnsemble& ens, const std::vector<double>& deltas,
                           double theta) {
    const int R = ens.replicates();
    if (R < 100) throw invalid_input("modulus_stat: needs >= 100 replicates");
    if (deltas.empty()) throw invalid_input("modulus_stat: needs at least one delta");
    if (!(theta > 0.0)) throw invalid_input("modulus_stat: theta must be > 0");

    const int M = ens.time_points();
    const int S = ens.space_points();
    double min_dt = 1e300;
    for (int i = 1; i < M; ++i) min_dt = std::min(min_dt, ens.times[i] - ens.times[i - 1]);
    double min_dx = (S > 1) ? 1e300 : 0.0;
    auto dist = [&](int a, int b) {
        double d2 = 0.0;
        for (std::size_t d = 0; d < ens.points[a].size(); ++d) {
            const double dd = ens.points[a][d] - ens.points[b][d];
            d2 += dd * dd;
        }
        return std::sqrt(d2);
    };
    for (int a = 0; a < S; ++a)
        for (int b = a + 1; b < S; ++b) min_dx = std::min(min_dx, dist(a, b));
    // finest resolvable nonzero pair distance; same-point time pairs always exist
    const double min_spacing = (S > 1) ? std::min(min_dt, min_dx) : min_dt;
    const double min_delta = *std::min_element(deltas.begin(), deltas.end());
    if (!(min_spacing < min_delta))
        throw invalid_input("modulus_stat: grid too coarse, min spacing " +
                            std::to_string(min_spacing) + " must be below min delta " +
                            std::to_string(min_delta));

    // pair distances are fixed across replicates; precompute once
    std::vector<double> space_d(static_cast<std::size_t>(S) * S);
    for (int a = 0; a < S; ++a)
        for (int b = 0; b < S; ++b) space_d[static_cast<std::size_t>(a) * S + b] = dist(a, b);

    ModulusReport rep;
    std::vector<double> deltas_sorted = deltas;
    std::sort(deltas_sorted.begin(), deltas_sorted.end(), std::greater<>());
    std::vector<double> stat(R);
    for (double delta : deltas_sorted) {
        const double norm = std::pow(delta, theta) *
                            (1.0 + std::sqrt(std::max(0.0, std::log(1.0 / delta))));
        for (int r = 0; r < R; ++r) {
            double sup = 0.0;
            for (int i1 = 0; i1 < M; ++i1)
                for (int i2 = i1; i2 < M; ++i2) {
                    if (std::abs(ens.times[i1] - ens.times[i2]) > delta) continue;
                    for (int a = 0; a < S; ++a)
                        for (int b = 0; b < S; ++b) {
                            if (i1 == i2 && a >= b) continue;
                            if (space_d[static_cast<std::size_t>(a) * S + b] > delta) continue;
                            const double d = ens.at(r, i1, a) - ens.at(r, i2, b);
                            sup = std::max(sup, d * d);
                        }
                }
            stat[r] = sup / norm;
        }
        std::vector<double> sorted = stat;
        std::sort(sorted.begin(), sorted.end());
        double mean = 0.0;
        for (double v : stat) mean += v;
        mean /= R;
        const int p95_idx = std::min(R - 1, static_cast<int>(std::ceil(0.95 * R)) - 1);
        rep.deltas.push_back(delta);
        rep.mean_stat.push_back(mean);
        rep.p95_stat.push_back(sorted[p95_idx]);
    }
    rep.consistent = true;
    for (std::size_t i = 1; i < rep.p95_stat.size(); ++i)
        if (rep.p95_stat[i] > rep.p95_stat[i - 1] * (1.0 + 1e-12)) rep.consistent = false;
    return rep;
}

double caputo_mode_residual(double lambda, double beta, const mlf::TimeGrid& grid) {
    grid.validate();
    if (grid.points.size() < 64)
        throw invalid_input("caputo_mode_residual: grid needs >= 64 points");
    if (!(lambda >= 0.0)) throw invalid_input("caputo_mode_residual: lambda must be >= 0");
    const double T = grid.points.back();
    const std::size_t n = grid.points.size();

    if (beta == 1.0) {
        // classical analogue: first difference of exp(-lambda t)
        const double dt = grid.dt();
        double worst = 0.0;
        for (std::size_t m = 1; m < n; ++m) {
            const double t = grid.points[m];
            if (t < 0.25 * T) continue;
            const double u1 = std::exp(-lambda * t);
            const double u0 = std::exp(-lambda * grid.points[m - 1]);
            const double resid = (u1 - u0) / dt + lambda * u1;
            worst = std::max(worst, std::abs(resid));
        }
        return worst;
    }

    std::vector<double> samples(n);
    for (std::size_t i = 0; i < n; ++i)
        samples[i] = mlf::eval_mlf(beta, lambda * std::pow(grid.points[i], beta));
    const std::vector<double> deriv = mlf::caputo_l1(samples, grid, beta);
    double worst = 0.0;
    for (std::size_t m = 1; m < n; ++m) {
        const double t = grid.points[m];
        if (t < 0.25 * T) continue;  // the t=0 derivative singularity never converges pointwise
        const double resid = deriv[m - 1] + lambda * samples[m];
        worst = std::max(worst, std::abs(resid));
    }
    return worst;
}

std::pair<double, double> calibrated_window(const kernels::VariogramCurve& curve,
                                            double min_resolvable, double anchor) {
    if (curve.lags.empty()) throw invalid_input("calibrated_window: empty curve");
    double lo = std::max(10.0 * min_resolvable, curve.lags.front());
    double hi = std::min(0.1 * anchor, curve.lags.back());
    if (!(lo < hi))
        throw invalid_input("calibrated_window: policy window is empty for this curve");
    return {lo, hi};
}

std::string to_csv(const SlopeFit& fit) {
    std::ostringstream os;
    os << "window_lo,window_hi,slope,intercept,std_error,r_squared,n_points\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", fit.window_lo,
                  fit.window_hi, fit.slope, fit.intercept, fit.std_error, fit.r_squared,
                  fit.n_points);
    os << buf;
    return os.str();
}

std::string to_csv(const ModulusReport& report) {
    std::ostringstream os;
    os << "delta,mean_stat,p95_stat,consistent\n";
    char buf[256];
    for (std::size_t i = 0; i < report.deltas.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", report.deltas[i],
                      report.mean_stat[i], report.p95_stat[i], report.consistent ? 1 : 0);
        os << buf;
    }
    return os.str();
}

}  // namespace fracfield::analyze
