#include "fracfield/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "fracfield/errors.hpp"

namespace fracfield::numerics {

namespace {

QuadRule compute_gauss_legendre(int n) {
    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    // Newton iteration on P_n from the Chebyshev-based initial guess.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

// Kronrod 15 / Gauss 7 nodes and weights on [-1, 1]; nodes are the positive
// half (symmetric rule), node[0..6] interleaved Kronrod-only, Gauss points at
// odd positions of the full ordering.
constexpr double kGK15Nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
constexpr double kGK15WeightsK[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kGK15WeightsG[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct Segment {
    double a, b, value, error;
};

Segment eval_gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double result_k = 0.0, result_g = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double dx = h * kGK15Nodes[i];
        double fv;
        if (i == 7) {
            fv = f(c);
            result_k += kGK15WeightsK[i] * fv;
            result_g += kGK15WeightsG[3] * fv;
        } else {
            const double f1 = f(c - dx);
            const double f2 = f(c + dx);
            result_k += kGK15WeightsK[i] * (f1 + f2);
            if (i % 2 == 1) result_g += kGK15WeightsG[i / 2] * (f1 + f2);
        }
    }
    Segment s;
    s.a = a;
    s.b = b;
    s.value = result_k * h;
    s.error = std::abs((result_k - result_g) * h);
    // sharpen the raw discrepancy the way QUADPACK does
    s.error = std::min(s.error, std::pow(200.0 * s.error, 1.5));
    return s;
}

}  // namespace

const QuadRule& gauss_legendre(int n) {
    if (n < 1 || n > 200) throw invalid_input("gauss_legendre: order out of range");
    static std::map<int, QuadRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

double gl_panel(const std::function<double(double)>& f, double a, double b, int n) {
    const QuadRule& rule = gauss_legendre(n);
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += rule.weights[i] * f(c + h * rule.nodes[i]);
    return acc * h;
}

AdaptiveResult adaptive_gk(const std::function<double(double)>& f, double a, double b,
                           const std::vector<double>& breakpoints, double abs_tol,
                           double rel_tol, int max_depth) {
    std::vector<double> edges{a};
    for (double p : breakpoints)
        if (p > a && p < b) edges.push_back(p);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());

    std::vector<Segment> segs;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        segs.push_back(eval_gk15(f, edges[i], edges[i + 1]));

    for (int depth = 0; depth < max_depth; ++depth) {
        double total = 0.0, err = 0.0;
        for (const Segment& s : segs) {
            total += s.value;
            err += s.error;
        }
        if (err <= std::max(abs_tol, rel_tol * std::abs(total))) return {total, err};
        // split the worst segment
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].error > segs[worst].error) worst = i;
        Segment s = segs[worst];
        double mid = 0.5 * (s.a + s.b);
        if (mid <= s.a || mid >= s.b) break;  // cannot refine further in fp
        segs[worst] = eval_gk15(f, s.a, mid);
        segs.push_back(eval_gk15(f, mid, s.b));
        if (segs.size() > 4000) break;
    }
    double total = 0.0, err = 0.0;
    for (const Segment& s : segs) {
        total += s.value;
        err += s.error;
    }
    if (err <= std::max(abs_tol, rel_tol * std::abs(total)) * 10.0) return {total, err};
    throw numeric_failure("adaptive_gk: failed to converge, error estimate " +
                          std::to_string(err));
}

ChebPanel::ChebPanel(const std::function<double(double)>& f, double a, double b, int degree)
    : a_(a), b_(b), coeffs_(degree + 1) {
    const int n = degree + 1;
    std::vector<double> fvals(n);
    for (int j = 0; j < n; ++j) {
        double theta = M_PI * (j + 0.5) / n;
        double x = 0.5 * (a + b) + 0.5 * (b - a) * std::cos(theta);
        fvals[j] = f(x);
    }
    for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += fvals[j] * std::cos(M_PI * k * (j + 0.5) / n);
        coeffs_[k] = 2.0 / n * acc;
    }
    coeffs_[0] *= 0.5;
}

double ChebPanel::operator()(double x) const {
    const double u = (2.0 * x - a_ - b_) / (b_ - a_);
    double b0 = 0.0, b1 = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 1;) {
        double b2 = b1;
        b1 = b0;
        b0 = 2.0 * u * b1 - b2 + coeffs_[k];
    }
    return u * b0 - b1 + coeffs_[0];
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 3) throw invalid_input("fit_line: need >= 3 paired points");
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw invalid_input("fit_line: degenerate abscissae");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += r * r;
    }
    fit.slope_stderr = std::sqrt(ss_res / (n - 2) / sxx);
    return fit;
}

double sin_pi(double z) {
    const double n = std::nearbyint(z);
    const double r = z - n;
    const double s = std::sin(M_PI * r);
    return (static_cast<long long>(n) % 2 != 0) ? -s : s;
}

}  // namespace fracfield::numerics
