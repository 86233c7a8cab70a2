#pragma once

#include <vector>

#include "fracfield/domains.hpp"

namespace fracfield::spectrum {

struct FracParams {
    double beta = 0.5;   // in (0, 1)
    double alpha = 2.0;  // >= 0
    double gamma = 0.0;  // >= 0
    // c_0..c_p, c_p > 0, all c_l >= 0; default is the plain operator P(f) = f
    std::vector<double> poly_coeffs{0.0, 1.0};

    void validate() const;
    int poly_degree() const;
    // growth exponent q with lambda_k ~ k^q: q = p(alpha+gamma)/n
    double growth_exponent(int n) const;
    bool admissible_solution(int n) const;  // p(alpha+gamma) > n
    bool admissible_temporal(int n) const;  // p(alpha+gamma) > n/2
};

// P(f(gamma_k)) with f(g) = g^(alpha/2) (1+g)^(gamma/2); log-space evaluation
// guards against overflow of f itself.
double transform_eigenvalue(double gamma_k, const FracParams& params);

class SpectralTruncation {
public:
    SpectralTruncation() = default;
    SpectralTruncation(domains::EigenSystem system, FracParams params, int K);

    const domains::EigenSystem& system() const { return system_; }
    const FracParams& params() const { return params_; }
    int K() const { return K_; }
    double lambda(int k) const;    // 0-based, ascending
    int source_mode(int k) const;  // index into system().modes()
    double phi(int k, const std::vector<double>& point) const;

private:
    domains::EigenSystem system_;
    FracParams params_;
    int K_ = 0;
    std::vector<double> lambda_;
    std::vector<int> mode_map_;
};

SpectralTruncation build_truncation(const domains::EigenSystem& sys, const FracParams& params,
                                    int K);

struct WeylDiagnostic {
    std::vector<double> ratios;  // lambda_k / k^q, k = 1..K
    double theoretical_limit;    // c_p * W^(p(alpha+gamma)/2), W the Weyl constant
};

WeylDiagnostic weyl_diagnostic(const SpectralTruncation& trunc);  // needs K >= 100

struct Sandwich {
    double L1 = 0.0;  // lower constant: L1 k^q <= lambda_k for k >= k0
    double L2 = 0.0;  // upper constant
    int k0 = 1;       // 1-based threshold
};

// Empirical sandwich constants: least-squares level on the top half of modes
// at the fixed theoretical exponent, deflated/inflated by 10%, then k0 pushed
// down as far as the bounds keep holding.
Sandwich fit_sandwich(const SpectralTruncation& trunc);

struct SummabilityReport {
    std::vector<double> partial_sums;  // S_1..S_K
    double tail_bound = 0.0;
    bool converged = false;            // tail_bound < 1e-4 * S_K
};

SummabilityReport summability_check(const SpectralTruncation& trunc, double beta, double t);

}  // namespace fracfield::spectrum
