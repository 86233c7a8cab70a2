#pragma once

#include <string>
#include <vector>

namespace fracfield::domains {

struct DomainSpec {
    enum class Kind { interval, rectangle, disk, annulus };
    Kind kind = Kind::interval;
    std::vector<double> lengths;  // interval: {L}; rectangle: {L1..Ln}, n <= 3
    double radius = 0.0;          // disk and annulus outer radius R
    double inner_radius = 0.0;    // annulus inner radius R0

    static DomainSpec interval(double L);
    static DomainSpec rectangle(std::vector<double> L);
    static DomainSpec disk(double R);
    static DomainSpec annulus(double R0, double R);

    void validate() const;
    int dimension() const;
    double volume() const;
    // conservative bound on distances between points of the closure
    double diameter() const;
    bool contains(const std::vector<double>& point, double tol = 1e-12) const;
};

// One eigenpair. index is {k} / {k1..kn} for product domains and
// {angular_order, radial_index, flavor} for disk/annulus, flavor 0 = cosine
// angular factor, 1 = sine.
struct Mode {
    std::vector<int> index;
    double gamma = 0.0;       // Dirichlet-Laplacian eigenvalue
    double norm_const = 0.0;  // L2 normalization multiplier for the raw shape
    double root = 0.0;        // Bessel root (disk: xi with mu = (xi/R)^2; annulus: k)
    int angular = 0;
    int flavor = 0;
};

class EigenSystem {
public:
    EigenSystem() = default;
    EigenSystem(DomainSpec spec, std::vector<Mode> modes);

    const DomainSpec& spec() const { return spec_; }
    const std::vector<Mode>& modes() const { return modes_; }
    int count() const { return static_cast<int>(modes_.size()); }
    double gamma(int k) const;                                  // k is 0-based
    double eval(int k, const std::vector<double>& point) const;  // checks point in D

private:
    DomainSpec spec_;
    std::vector<Mode> modes_;
};

// K_raw smallest Dirichlet-Laplacian eigenpairs, L2-normalized, eigenvalues
// ascending with lexicographic index tie-breaking. Deterministic.
EigenSystem build_eigensystem(const DomainSpec& spec, int K_raw);

double eval_eigenfunction(const EigenSystem& sys, int k, const std::vector<double>& point);

enum class RootKind { first_kind, annulus_cross_product };

// r-th positive root of J_order (first_kind) or of the Dirichlet cross-product
// J_order(k R0) Y_order(k R) - J_order(k R) Y_order(k R0) (annulus kind).
// Absolute tolerance 1e-12. order <= 50, root_index <= 10000.
double bessel_root(int order, int root_index, RootKind kind, double R0 = 0.0, double R = 0.0);

struct ModeHolderData {
    int mode = 0;                      // 0-based index into the system
    double lipschitz_constant = 0.0;   // numeric sup of |grad phi_k|, padded 5%
    double upsilon = 1.0;
};

ModeHolderData mode_holder_constant(const EigenSystem& sys, int k);

// JSON caching layout: {"spec": ..., "modes": [...]}; numeric fields
// round-trip bit-exactly.
std::string to_json(const EigenSystem& sys);
EigenSystem eigensystem_from_json(const std::string& text);

// GSL-backed cylinder functions used by the eigen-system machinery; exposed
// so tests can probe them directly.
double bessel_j(int order, double x);
double bessel_y(int order, double x);

}  // namespace fracfield::domains
