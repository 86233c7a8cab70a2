#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace fracfield::numerics {

struct QuadRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

// Gauss-Legendre rule of order n (nodes computed once per n and cached).
const QuadRule& gauss_legendre(int n);

// Integrate f over [a, b] with a single Gauss-Legendre panel of order n.
double gl_panel(const std::function<double(double)>& f, double a, double b, int n);

struct AdaptiveResult {
    double value;
    double error_estimate;  // absolute
};

// Adaptive Gauss-Kronrod (G7,K15) over [a, b] with interior breakpoints.
// Splits until the K15-G7 discrepancy summed over segments is below
// max(abs_tol, rel_tol * |integral|). Throws numeric_failure on depth exhaustion.
AdaptiveResult adaptive_gk(const std::function<double(double)>& f, double a, double b,
                           const std::vector<double>& breakpoints, double abs_tol,
                           double rel_tol, int max_depth = 48);

// Chebyshev interpolant of f on [a, b], evaluated by Clenshaw recurrence.
class ChebPanel {
public:
    ChebPanel() = default;
    ChebPanel(const std::function<double(double)>& f, double a, double b, int degree);
    double operator()(double x) const;
    double a() const { return a_; }
    double b() const { return b_; }

private:
    double a_ = 0.0, b_ = 0.0;
    std::vector<double> coeffs_;
};

struct LineFit {
    double slope;
    double intercept;
    double slope_stderr;
};

// Ordinary least squares y = slope*x + intercept with the usual residual-based
// standard error on the slope. Requires >= 3 points.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// sin(pi*z) by nearest-integer argument reduction; exact zeros at integer z.
double sin_pi(double z);

}  // namespace fracfield::numerics
