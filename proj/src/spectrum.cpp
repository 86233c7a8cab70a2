#include "fracfield/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fracfield/errors.hpp"
#include "fracfield/mlf.hpp"

namespace fracfield::spectrum {

void FracParams::validate() const {
    // beta = 1 is admitted so the exponential closed-form cross-checks can run
    // through the same machinery; the fractional theory itself lives in (0, 1)
    if (!(beta > 0.0) || !(beta <= 1.0))
        throw invalid_input("FracParams: beta must lie in (0, 1], got " + std::to_string(beta));
    if (!(alpha >= 0.0)) throw invalid_input("FracParams: alpha must be >= 0");
    if (!(gamma >= 0.0)) throw invalid_input("FracParams: gamma must be >= 0");
    if (poly_coeffs.size() < 2)
        throw invalid_input("FracParams: poly_coeffs needs degree >= 1 (c_0..c_p)");
    if (!(poly_coeffs.back() > 0.0))
        throw invalid_input("FracParams: leading polynomial coefficient c_p must be > 0");
    for (double c : poly_coeffs)
        if (!(c >= 0.0)) throw invalid_input("FracParams: polynomial coefficients must be >= 0");
}

int FracParams::poly_degree() const { return static_cast<int>(poly_coeffs.size()) - 1; }

double FracParams::growth_exponent(int n) const {
    return poly_degree() * (alpha + gamma) / n;
}

bool FracParams::admissible_solution(int n) const {
    return poly_degree() * (alpha + gamma) > static_cast<double>(n);
}

bool FracParams::admissible_temporal(int n) const {
    return poly_degree() * (alpha + gamma) > 0.5 * n;
}

double transform_eigenvalue(double gamma_k, const FracParams& params) {
    params.validate();
    if (!(gamma_k > 0.0)) throw invalid_input("transform_eigenvalue: gamma_k must be > 0");
    const int p = params.poly_degree();
    const double log_f =
        0.5 * params.alpha * std::log(gamma_k) + 0.5 * params.gamma * std::log1p(gamma_k);
    if (log_f * p + std::log(params.poly_coeffs.back()) > 706.0)
        throw numeric_failure("transform_eigenvalue: polynomial value overflows double range");
    if (log_f < 700.0 / std::max(p, 1)) {
        const double f = std::exp(log_f);
        double acc = 0.0;
        for (int l = p; l >= 0; --l) acc = acc * f + params.poly_coeffs[l];
        return acc;
    }
    // leading term dominates; fold lower orders in as relative corrections
    double rel = 1.0;
    for (int l = 0; l < p; ++l)
        rel += params.poly_coeffs[l] / params.poly_coeffs.back() * std::exp((l - p) * log_f);
    return params.poly_coeffs.back() * std::exp(p * log_f) * rel;
}

SpectralTruncation::SpectralTruncation(domains::EigenSystem system, FracParams params, int K)
    : system_(std::move(system)), params_(std::move(params)), K_(K) {
    lambda_.resize(K);
    mode_map_.resize(K);
    // transform is strictly increasing, so the gamma-ascending order carries over
    for (int k = 0; k < K; ++k) {
        lambda_[k] = transform_eigenvalue(system_.gamma(k), params_);
        mode_map_[k] = k;
    }
    // lexicographic tie-breaking of near-degenerate levels can leave ulp-level
    // inversions after the transform; anything beyond the tie tolerance is a bug
    for (int k = 1; k < K; ++k)
        if (lambda_[k] < lambda_[k - 1] * (1.0 - 1e-9))
            throw numeric_failure("SpectralTruncation: transformed eigenvalues not ascending");
}

double SpectralTruncation::lambda(int k) const {
    if (k < 0 || k >= K_) throw invalid_input("SpectralTruncation: mode index out of range");
    return lambda_[k];
}

int SpectralTruncation::source_mode(int k) const {
    if (k < 0 || k >= K_) throw invalid_input("SpectralTruncation: mode index out of range");
    return mode_map_[k];
}

double SpectralTruncation::phi(int k, const std::vector<double>& point) const {
    return system_.eval(source_mode(k), point);
}

SpectralTruncation build_truncation(const domains::EigenSystem& sys, const FracParams& params,
                                    int K) {
    params.validate();
    if (K < 1) throw invalid_input("build_truncation: K must be >= 1");
    if (K > sys.count())
        throw invalid_input("build_truncation: insufficient modes, K=" + std::to_string(K) +
                            " exceeds K_raw=" + std::to_string(sys.count()));
    return SpectralTruncation(sys, params, K);
}

WeylDiagnostic weyl_diagnostic(const SpectralTruncation& trunc) {
    const int K = trunc.K();
    if (K < 100) throw invalid_input("weyl_diagnostic: needs K >= 100");
    const int n = trunc.system().spec().dimension();
    const double q = trunc.params().growth_exponent(n);
    WeylDiagnostic diag;
    diag.ratios.resize(K);
    for (int k = 0; k < K; ++k)
        diag.ratios[k] = trunc.lambda(k) / std::pow(static_cast<double>(k + 1), q);
    const double volume = trunc.system().spec().volume();
    const double weyl =
        4.0 * M_PI * std::pow(std::tgamma(1.0 + 0.5 * n), 2.0 / n) / std::pow(volume, 2.0 / n);
    const double p = trunc.params().poly_degree();
    const double sum_exp = trunc.params().alpha + trunc.params().gamma;
    diag.theoretical_limit =
        trunc.params().poly_coeffs.back() * std::pow(weyl, 0.5 * p * sum_exp);
    return diag;
}

Sandwich fit_sandwich(const SpectralTruncation& trunc) {
    const int K = trunc.K();
    const int n = trunc.system().spec().dimension();
    const double q = trunc.params().growth_exponent(n);
    const int lo = std::max(0, K / 2 - 1);
    double min_res = 1e300, max_res = -1e300;
    for (int k = lo; k < K; ++k) {
        const double res = std::log(trunc.lambda(k)) - q * std::log(k + 1.0);
        min_res = std::min(min_res, res);
        max_res = std::max(max_res, res);
    }
    Sandwich s;
    s.L1 = 0.9 * std::exp(min_res);
    s.L2 = 1.1 * std::exp(max_res);
    // extend the certified range downward while the bounds keep holding
    int k0 = lo + 1;  // 1-based
    while (k0 > 1) {
        const double lam = trunc.lambda(k0 - 2);
        const double kq = std::pow(k0 - 1.0, q);
        if (s.L1 * kq <= lam && lam <= s.L2 * kq)
            --k0;
        else
            break;
    }
    s.k0 = k0;
    return s;
}

SummabilityReport summability_check(const SpectralTruncation& trunc, double beta, double t) {
    const int n = trunc.system().spec().dimension();
    if (!trunc.params().admissible_solution(n))
        throw invalid_input("summability_check: inadmissible parameters, requires p(alpha+gamma) > n");
    if (!(beta > 0.0) || !(beta <= 1.0))
        throw invalid_input("summability_check: beta must lie in (0, 1]");
    if (!(t > 0.0)) throw invalid_input("summability_check: t must be > 0");

    const int K = trunc.K();
    SummabilityReport rep;
    rep.partial_sums.resize(K);
    double acc = 0.0;
    const double tb = std::pow(t, beta);
    for (int k = 0; k < K; ++k) {
        acc += mlf::eval_mlf(beta, trunc.lambda(k) * tb);
        rep.partial_sums[k] = acc;
    }

    // tail over k > K from the Simon upper envelope through the sandwich floor
    const Sandwich sw = fit_sandwich(trunc);
    const double q = trunc.params().growth_exponent(n);
    const double g1b = std::tgamma(1.0 + beta);
    const long X = std::max<long>(100000L, 20L * K);
    double tail = 0.0;
    for (long k = K + 1; k <= X; ++k)
        tail += 1.0 / (1.0 + sw.L1 * std::pow(static_cast<double>(k), q) * tb / g1b);
    // envelope <= Gamma(1+beta) / (L1 k^q t^beta); integrate the power law past X
    tail += g1b / (sw.L1 * tb) * std::pow(static_cast<double>(X), 1.0 - q) / (q - 1.0);
    rep.tail_bound = tail;
    rep.converged = tail < 1e-4 * rep.partial_sums.back();
    return rep;
}

}  // namespace fracfield::spectrum
