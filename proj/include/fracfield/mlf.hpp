#pragma once

#include <vector>

namespace fracfield::mlf {

struct MlfQuery {
    double beta;  // in (0, 1]
    double x;     // >= 0, the function is evaluated at -x
};

struct MlfEnvelope {
    double lower;
    double upper;
};

struct TimeGrid {
    std::vector<double> points;  // strictly increasing, points[0] == 0
    bool uniform = true;

    static TimeGrid uniform_grid(double t_end, int n_points);
    void validate() const;
    double dt() const;  // spacing, uniform grids only
};

// E_beta(-x) to absolute accuracy ~1e-10 (interior target ~1e-12).
// Taylor series for x^(1/beta) <= 8, asymptotic expansion when its smallest
// term certifies the error, otherwise the real-line spectral integral.
double eval_mlf(const MlfQuery& q);

inline double eval_mlf(double beta, double x) { return eval_mlf(MlfQuery{beta, x}); }

// Two-sided bounds 1/(1+Gamma(1-beta)x) <= E_beta(-x) <= 1/(1+x/Gamma(1+beta)).
// For beta = 1 the lower bound degenerates to the limit: 1 at x = 0, else 0.
MlfEnvelope mlf_envelope(const MlfQuery& q);

// Discrete Caputo derivative of order beta in (0,1) on a uniform grid by the
// L1 scheme; returns values at grid points 1..N-1 (N = grid size).
std::vector<double> caputo_l1(const std::vector<double>& samples, const TimeGrid& grid,
                              double beta);

}  // namespace fracfield::mlf
