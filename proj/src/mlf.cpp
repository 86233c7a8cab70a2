#include "fracfield/mlf.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fracfield/errors.hpp"
#include "fracfield/numerics.hpp"

namespace fracfield::mlf {

namespace {

void validate(const MlfQuery& q) {
    if (!(q.beta > 0.0) || !(q.beta <= 1.0))
        throw invalid_input("eval_mlf: beta must lie in (0, 1], got " + std::to_string(q.beta));
    if (!(q.x >= 0.0))
        throw invalid_input("eval_mlf: x must be >= 0, got " + std::to_string(q.x));
}

// Alternating Taylor series sum_j (-x)^j / Gamma(j*beta + 1) in long double
// with Kahan compensation. Valid while the peak term stays within range;
// callers gate on x^(1/beta) <= 8.
double series_sum(double beta, double x) {
    const long double lx = std::log(static_cast<long double>(x));
    long double sum = 0.0L, comp = 0.0L;
    long double max_term = 0.0L;
    for (int j = 0; j < 4000; ++j) {
        long double lt = j * lx - std::lgamma(j * static_cast<long double>(beta) + 1.0L);
        long double term = std::exp(lt);
        if (j % 2 == 1) term = -term;
        long double y = term - comp;
        long double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        long double mag = std::fabs(term);
        if (mag > max_term) max_term = mag;
        if (j > 2 && mag < max_term && mag < 1e-22L * std::max(1.0L, std::fabs(sum))) break;
    }
    return static_cast<double>(sum);
}

struct AsympResult {
    double value;
    double error_estimate;
};

// -sum_{k>=1} (-x)^{-k} / Gamma(1 - k*beta), rewritten through the reflection
// formula as sum_k (-1)^{k+1} x^{-k} sin(pi k beta) Gamma(k beta) / pi.
// sin(pi k beta) must come from exact argument reduction: at rational beta the
// naive sin(M_PI*k*beta) leaves O(1e-16) residues that masquerade as genuine
// terms and break the divergence detector.
AsympResult asymptotic_sum(double beta, double x, int kmax = 300) {
    const double lnx = std::log(x);
    double sum = 0.0;
    double prev_mag = std::numeric_limits<double>::infinity();
    double min_mag = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= kmax; ++k) {
        const double kb = k * beta;
        const double frac = kb - std::nearbyint(kb);
        if (std::abs(frac) < 1e-12) continue;  // exact zero of sin(pi k beta)
        const double s = numerics::sin_pi(kb);
        const double lmag = std::lgamma(kb) - k * lnx;
        if (lmag > 650.0) break;  // diverging hard, stop
        const double mag = std::exp(lmag) * std::abs(s) / M_PI;
        if (mag > prev_mag) break;  // optimal truncation reached
        const double sign = ((k % 2 == 1) ? 1.0 : -1.0) * ((s > 0.0) ? 1.0 : -1.0);
        sum += sign * mag;
        prev_mag = mag;
        if (mag < min_mag) min_mag = mag;
        if (mag < 1e-16 * std::max(sum, 1e-300)) break;
    }
    return {sum, min_mag};
}

// E_beta(-x) = (x sin(beta pi) / (pi beta)) *
//              int_0^inf exp(-w^(1/beta)) / (w^2 + 2 w x cos(beta pi) + x^2) dw.
// The denominator has a near-resonance at w0 = -x cos(beta pi) when
// cos(beta pi) < 0; break the range there so the adaptive rule resolves it.
double spectral_integral(double beta, double x) {
    const double cbp = std::cos(M_PI * beta);
    const double sbp = numerics::sin_pi(beta);
    const double W = std::pow(46.0, beta);  // exp(-46) ~ 1e-20 tail cutoff
    auto integrand = [beta, cbp, x](double w) {
        const double denom = w * w + 2.0 * w * x * cbp + x * x;
        return std::exp(-std::pow(w, 1.0 / beta)) / denom;
    };
    std::vector<double> breaks = {W * 1e-6, W * 1e-3, W * 0.1};
    if (cbp < 0.0) {
        const double w0 = -x * cbp;
        breaks.push_back(0.5 * w0);
        breaks.push_back(w0);
        breaks.push_back(2.0 * w0);
    }
    const double scale = 1.0 / (x * x);  // integrand scale near w=0
    auto res = numerics::adaptive_gk(integrand, 0.0, W, breaks, 1e-14 * std::max(scale, 1.0),
                                     1e-13, 60);
    return x * sbp / (M_PI * beta) * res.value;
}

}  // namespace

double eval_mlf(const MlfQuery& q) {
    validate(q);
    const double beta = q.beta, x = q.x;
    if (x == 0.0) return 1.0;
    if (beta == 1.0) return std::exp(-x);
    const double p = std::pow(x, 1.0 / beta);
    if (p <= 8.0) return series_sum(beta, x);
    AsympResult a = asymptotic_sum(beta, x);
    if (a.error_estimate < 5e-13) return a.value;
    return spectral_integral(beta, x);
}

MlfEnvelope mlf_envelope(const MlfQuery& q) {
    validate(q);
    const double beta = q.beta, x = q.x;
    MlfEnvelope env;
    env.upper = 1.0 / (1.0 + x / std::tgamma(1.0 + beta));
    if (beta == 1.0) {
        // Gamma(1-beta) diverges; the lower bound collapses to the x=0 limit.
        env.lower = (x == 0.0) ? 1.0 : 0.0;
    } else {
        env.lower = 1.0 / (1.0 + std::tgamma(1.0 - beta) * x);
    }
    return env;
}

TimeGrid TimeGrid::uniform_grid(double t_end, int n_points) {
    if (!(t_end > 0.0) || n_points < 2)
        throw invalid_input("TimeGrid: need t_end > 0 and >= 2 points");
    TimeGrid g;
    g.points.resize(n_points);
    for (int i = 0; i < n_points; ++i) g.points[i] = t_end * i / (n_points - 1);
    g.points[0] = 0.0;
    g.uniform = true;
    return g;
}

void TimeGrid::validate() const {
    if (points.size() < 2) throw invalid_input("TimeGrid: need >= 2 points");
    if (points[0] != 0.0) throw invalid_input("TimeGrid: grid must start at 0");
    for (std::size_t i = 1; i < points.size(); ++i)
        if (!(points[i] > points[i - 1]))
            throw invalid_input("TimeGrid: points must be strictly increasing");
}

double TimeGrid::dt() const {
    validate();
    if (!uniform) throw invalid_input("TimeGrid: dt undefined on non-uniform grid");
    return points[1] - points[0];
}

std::vector<double> caputo_l1(const std::vector<double>& samples, const TimeGrid& grid,
                              double beta) {
    grid.validate();
    if (!(beta > 0.0) || !(beta < 1.0))
        throw invalid_input("caputo_l1: beta must lie in (0, 1)");
    if (grid.points.size() < 3) throw invalid_input("caputo_l1: grid too small, need >= 3 points");
    if (samples.size() != grid.points.size())
        throw invalid_input("caputo_l1: sample/grid size mismatch");
    const std::size_t n = grid.points.size();
    const double dt = grid.points[1] - grid.points[0];
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs((grid.points[i] - grid.points[i - 1]) - dt) > 1e-12 * dt)
            throw invalid_input("caputo_l1: grid must be uniform");
    for (double v : samples)
        if (!std::isfinite(v)) throw invalid_input("caputo_l1: samples must be finite");

    // weights b_j = (j+1)^(1-beta) - j^(1-beta)
    std::vector<double> b(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j)
        b[j] = std::pow(j + 1.0, 1.0 - beta) - std::pow(static_cast<double>(j), 1.0 - beta);

    const double scale = std::pow(dt, -beta) / std::tgamma(2.0 - beta);
    std::vector<double> out(n - 1);
    for (std::size_t m = 1; m < n; ++m) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += b[j] * (samples[m - j] - samples[m - j - 1]);
        out[m - 1] = scale * acc;
    }
    return out;
}

}  // namespace fracfield::mlf
