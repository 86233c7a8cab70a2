#include "fracfield/domains.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fracfield/errors.hpp"
#include "fracfield/numerics.hpp"

namespace fracfield::domains {

namespace {

struct GslQuiet {
    GslQuiet() { gsl_set_error_handler_off(); }
};
const GslQuiet gsl_quiet_init;

std::string kind_name(DomainSpec::Kind k) {
    switch (k) {
        case DomainSpec::Kind::interval: return "interval";
        case DomainSpec::Kind::rectangle: return "rectangle";
        case DomainSpec::Kind::disk: return "disk";
        case DomainSpec::Kind::annulus: return "annulus";
    }
    return "?";
}

}  // namespace

double bessel_j(int order, double x) {
    gsl_sf_result r;
    int status = gsl_sf_bessel_Jn_e(order, x, &r);
    if (status != GSL_SUCCESS)
        throw numeric_failure("bessel_j failed for order " + std::to_string(order) + " at x=" +
                              std::to_string(x) + ": " + gsl_strerror(status));
    return r.val;
}

double bessel_y(int order, double x) {
    gsl_sf_result r;
    int status = gsl_sf_bessel_Yn_e(order, x, &r);
    if (status != GSL_SUCCESS)
        throw numeric_failure("bessel_y failed for order " + std::to_string(order) + " at x=" +
                              std::to_string(x) + ": " + gsl_strerror(status));
    return r.val;
}

DomainSpec DomainSpec::interval(double L) {
    DomainSpec s;
    s.kind = Kind::interval;
    s.lengths = {L};
    s.validate();
    return s;
}

DomainSpec DomainSpec::rectangle(std::vector<double> L) {
    DomainSpec s;
    s.kind = Kind::rectangle;
    s.lengths = std::move(L);
    s.validate();
    return s;
}

DomainSpec DomainSpec::disk(double R) {
    DomainSpec s;
    s.kind = Kind::disk;
    s.radius = R;
    s.validate();
    return s;
}

DomainSpec DomainSpec::annulus(double R0, double R) {
    DomainSpec s;
    s.kind = Kind::annulus;
    s.inner_radius = R0;
    s.radius = R;
    s.validate();
    return s;
}

void DomainSpec::validate() const {
    switch (kind) {
        case Kind::interval:
            if (lengths.size() != 1 || !(lengths[0] > 0.0))
                throw invalid_input("domain: interval needs one positive length");
            break;
        case Kind::rectangle:
            if (lengths.empty() || lengths.size() > 3)
                throw invalid_input("domain: rectangle supports 1..3 side lengths");
            for (double L : lengths)
                if (!(L > 0.0)) throw invalid_input("domain: rectangle sides must be positive");
            break;
        case Kind::disk:
            if (!(radius > 0.0)) throw invalid_input("domain: disk radius must be positive");
            break;
        case Kind::annulus:
            if (!(inner_radius > 0.0) || !(radius > inner_radius))
                throw invalid_input("domain: annulus needs 0 < inner radius < outer radius");
            break;
    }
}

int DomainSpec::dimension() const {
    switch (kind) {
        case Kind::interval: return 1;
        case Kind::rectangle: return static_cast<int>(lengths.size());
        default: return 2;
    }
}

double DomainSpec::volume() const {
    switch (kind) {
        case Kind::interval: return lengths[0];
        case Kind::rectangle:
            return std::accumulate(lengths.begin(), lengths.end(), 1.0, std::multiplies<>());
        case Kind::disk: return M_PI * radius * radius;
        case Kind::annulus: return M_PI * (radius * radius - inner_radius * inner_radius);
    }
    return 0.0;
}

double DomainSpec::diameter() const {
    switch (kind) {
        case Kind::interval: return lengths[0];
        case Kind::rectangle: {
            double d2 = 0.0;
            for (double L : lengths) d2 += L * L;
            return std::sqrt(d2);
        }
        default: return 2.0 * radius;
    }
}

bool DomainSpec::contains(const std::vector<double>& point, double tol) const {
    if (static_cast<int>(point.size()) != dimension()) return false;
    switch (kind) {
        case Kind::interval:
            return point[0] >= -tol && point[0] <= lengths[0] + tol;
        case Kind::rectangle:
            for (std::size_t i = 0; i < lengths.size(); ++i)
                if (point[i] < -tol || point[i] > lengths[i] + tol) return false;
            return true;
        case Kind::disk:
            return std::hypot(point[0], point[1]) <= radius + tol;
        case Kind::annulus: {
            double r = std::hypot(point[0], point[1]);
            return r >= inner_radius - tol && r <= radius + tol;
        }
    }
    return false;
}

namespace {

// Dirichlet cross-product J_l(k R0) Y_l(k R) - J_l(k R) Y_l(k R0); its
// positive zeros in k are the annulus radial wavenumbers.
double annulus_cross(int order, double k, double R0, double R) {
    return bessel_j(order, k * R0) * bessel_y(order, k * R) -
           bessel_j(order, k * R) * bessel_y(order, k * R0);
}

double bisect(const std::function<double(double)>& f, double a, double b, double fa) {
    double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0))
        throw numeric_failure("root bisection: endpoints do not bracket on [" +
                              std::to_string(a) + ", " + std::to_string(b) + "]");
    for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(b)); ++it) {
        double m = 0.5 * (a + b);
        double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm > 0.0) == (fa > 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

double j_root(int order, int root_index) {
    auto f = [order](double x) { return bessel_j(order, x); };
    // McMahon's expansion seeds the bracket for deep roots; a forward scan
    // from the turning point covers the first few.
    if (root_index >= 4 + order / 8) {
        const double b = (root_index + 0.5 * order - 0.25) * M_PI;
        const double mu = 4.0 * static_cast<double>(order) * order;
        double guess = b - (mu - 1.0) / (8.0 * b);
        double half = 0.8;
        double lo = guess - half, hi = guess + half;
        double flo = f(lo);
        if ((flo > 0.0) != (f(hi) > 0.0)) return bisect(f, lo, hi, flo);
        // fall through to the scan when McMahon is off target
    }
    double x = (order == 0) ? 1e-3 : order * 1.0;
    const double step = 0.05 * M_PI;
    double fx = f(x);
    while (fx == 0.0) {
        x += 1e-6;
        fx = f(x);
    }
    int found = 0;
    const double x_max = (root_index + order) * M_PI + 20.0;
    while (x < x_max) {
        double x2 = x + step;
        double f2 = f(x2);
        if ((f2 > 0.0) != (fx > 0.0) || f2 == 0.0) {
            ++found;
            if (found == root_index) return bisect(f, x, x2, fx);
        }
        x = x2;
        fx = f2;
    }
    throw numeric_failure("bessel_root: scan exhausted for J_" + std::to_string(order) +
                          " root " + std::to_string(root_index) + " on (0, " +
                          std::to_string(x_max) + ")");
}

double cross_root(int order, int root_index, double R0, double R) {
    auto f = [order, R0, R](double k) { return annulus_cross(order, k, R0, R); };
    // first root sits above the enclosing-disk bound xi_(l,1)/R > l/R
    double k = (order == 0) ? 1e-6 : 0.9 * order / R;
    const double step = M_PI / (R - R0) / 16.0;
    double fk = f(k);
    int found = 0;
    const double k_max = (root_index + 2) * M_PI / (R - R0) + (order + 10.0) / R + 10.0;
    while (k < k_max) {
        double k2 = k + step;
        double f2 = f(k2);
        if ((f2 > 0.0) != (fk > 0.0) || f2 == 0.0) {
            ++found;
            if (found == root_index) return bisect(f, k, k2, fk);
        }
        k = k2;
        fk = f2;
    }
    throw numeric_failure("bessel_root: cross-product scan exhausted for order " +
                          std::to_string(order) + " root " + std::to_string(root_index) +
                          " on (0, " + std::to_string(k_max) + ")");
}

}  // namespace

double bessel_root(int order, int root_index, RootKind kind, double R0, double R) {
    if (order < 0 || order > 50) throw invalid_input("bessel_root: order must lie in [0, 50]");
    if (root_index < 1 || root_index > 10000)
        throw invalid_input("bessel_root: root_index must lie in [1, 10000]");
    if (kind == RootKind::first_kind) return j_root(order, root_index);
    if (!(R0 > 0.0) || !(R > R0))
        throw invalid_input("bessel_root: cross-product kind needs 0 < R0 < R");
    return cross_root(order, root_index, R0, R);
}

namespace {

// radial shape of an annulus mode, vanishing at R0 by construction
double annulus_radial(int order, double k, double R0, double r) {
    return bessel_j(order, k * r) * bessel_y(order, k * R0) -
           bessel_y(order, k * r) * bessel_j(order, k * R0);
}

// int_a^b f(r)^2 r dr by composite Gauss-Legendre, enough panels to resolve
// n_osc oscillations
double radial_norm_sq(const std::function<double(double)>& f, double a, double b, int n_osc) {
    int panels = std::max(8, 4 * n_osc);
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        double lo = a + (b - a) * p / panels;
        double hi = a + (b - a) * (p + 1) / panels;
        acc += numerics::gl_panel([&f](double r) { double v = f(r); return v * v * r; }, lo,
                                  hi, 16);
    }
    return acc;
}

std::vector<Mode> interval_modes(const DomainSpec& spec, int K_raw) {
    const double L = spec.lengths[0];
    std::vector<Mode> modes(K_raw);
    for (int k = 1; k <= K_raw; ++k) {
        Mode& m = modes[k - 1];
        m.index = {k};
        m.gamma = M_PI * M_PI * k * k / (L * L);
        m.norm_const = std::sqrt(2.0 / L);
    }
    return modes;
}

std::vector<Mode> rectangle_modes(const DomainSpec& spec, int K_raw) {
    const int n = spec.dimension();
    const double Lmax = *std::max_element(spec.lengths.begin(), spec.lengths.end());
    int cap = std::max(2, static_cast<int>(std::ceil(std::pow(K_raw, 1.0 / n))) + 2);
    std::vector<Mode> modes;
    for (;; cap *= 2) {
        modes.clear();
        std::vector<int> idx(n, 1);
        for (;;) {
            Mode m;
            m.index = idx;
            m.gamma = 0.0;
            m.norm_const = 1.0;
            for (int d = 0; d < n; ++d) {
                m.gamma += M_PI * M_PI * idx[d] * idx[d] / (spec.lengths[d] * spec.lengths[d]);
                m.norm_const *= std::sqrt(2.0 / spec.lengths[d]);
            }
            modes.push_back(std::move(m));
            int d = n - 1;
            while (d >= 0 && ++idx[d] > cap) idx[d--] = 1;
            if (d < 0) break;
        }
        if (static_cast<int>(modes.size()) < K_raw) continue;
        std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
            if (std::abs(a.gamma - b.gamma) > 1e-9 * (a.gamma + b.gamma)) return a.gamma < b.gamma;
            return a.index < b.index;
        });
        // every excluded multi-index has some k_i > cap, hence gamma above this floor
        double floor_excluded = M_PI * M_PI * (cap + 1.0) * (cap + 1.0) / (Lmax * Lmax);
        if (modes[K_raw - 1].gamma <= floor_excluded) break;
    }
    modes.resize(K_raw);
    return modes;
}

std::vector<Mode> disk_modes(const DomainSpec& spec, int K_raw) {
    const double R = spec.radius;
    // Weyl count: modes with root xi <= X number about X^2/4
    double X = 2.0 * std::sqrt(static_cast<double>(K_raw)) + 10.0;
    std::vector<Mode> modes;
    for (;; X *= 1.4) {
        modes.clear();
        for (int l = 0; l <= 50 && l < X; ++l) {
            for (int r = 1;; ++r) {
                double xi;
                try {
                    xi = j_root(l, r);
                } catch (const numeric_failure&) {
                    break;
                }
                if (xi > X) break;
                const double mu = xi * xi / (R * R);
                const double jnext = bessel_j(l + 1, xi);
                const int flavors = (l == 0) ? 1 : 2;
                for (int fl = 0; fl < flavors; ++fl) {
                    Mode m;
                    m.index = {l, r, fl};
                    m.gamma = mu;
                    m.root = xi;
                    m.angular = l;
                    m.flavor = fl;
                    const double ang_sq = (l == 0) ? 2.0 * M_PI : M_PI;
                    m.norm_const = 1.0 / (std::abs(jnext) * R * std::sqrt(ang_sq / 2.0));
                    modes.push_back(std::move(m));
                }
            }
        }
        if (static_cast<int>(modes.size()) >= K_raw) break;
    }
    std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
        if (std::abs(a.gamma - b.gamma) > 1e-9 * (a.gamma + b.gamma)) return a.gamma < b.gamma;
        return a.index < b.index;
    });
    modes.resize(K_raw);
    return modes;
}

std::vector<Mode> annulus_modes(const DomainSpec& spec, int K_raw) {
    const double R0 = spec.inner_radius, R = spec.radius;
    double X = std::sqrt(4.0 * K_raw / (R * R - R0 * R0)) + 2.0 * M_PI / (R - R0);
    std::vector<Mode> modes;
    for (;; X *= 1.4) {
        modes.clear();
        for (int l = 0; l <= 50 && l / R < X; ++l) {
            for (int r = 1;; ++r) {
                double k;
                try {
                    k = cross_root(l, r, R0, R);
                } catch (const numeric_failure&) {
                    break;
                }
                if (k > X) break;
                auto shape = [l, k, R0](double rr) { return annulus_radial(l, k, R0, rr); };
                const double nrm_r = radial_norm_sq(shape, R0, R, r + l / 4 + 2);
                const int flavors = (l == 0) ? 1 : 2;
                for (int fl = 0; fl < flavors; ++fl) {
                    Mode m;
                    m.index = {l, r, fl};
                    m.gamma = k * k;
                    m.root = k;
                    m.angular = l;
                    m.flavor = fl;
                    const double ang_sq = (l == 0) ? 2.0 * M_PI : M_PI;
                    m.norm_const = 1.0 / std::sqrt(nrm_r * ang_sq);
                    modes.push_back(std::move(m));
                }
            }
        }
        if (static_cast<int>(modes.size()) >= K_raw) break;
    }
    std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
        if (std::abs(a.gamma - b.gamma) > 1e-9 * (a.gamma + b.gamma)) return a.gamma < b.gamma;
        return a.index < b.index;
    });
    modes.resize(K_raw);
    return modes;
}

}  // namespace

EigenSystem::EigenSystem(DomainSpec spec, std::vector<Mode> modes)
    : spec_(std::move(spec)), modes_(std::move(modes)) {}

double EigenSystem::gamma(int k) const {
    if (k < 0 || k >= count()) throw invalid_input("EigenSystem: mode index out of range");
    return modes_[k].gamma;
}

double EigenSystem::eval(int k, const std::vector<double>& point) const {
    if (k < 0 || k >= count()) throw invalid_input("EigenSystem: mode index out of range");
    if (!spec_.contains(point))
        throw invalid_input("EigenSystem: point outside " + kind_name(spec_.kind) + " domain");
    const Mode& m = modes_[k];
    switch (spec_.kind) {
        case DomainSpec::Kind::interval:
            return m.norm_const * std::sin(m.index[0] * M_PI * point[0] / spec_.lengths[0]);
        case DomainSpec::Kind::rectangle: {
            double v = m.norm_const;
            for (std::size_t d = 0; d < spec_.lengths.size(); ++d)
                v *= std::sin(m.index[d] * M_PI * point[d] / spec_.lengths[d]);
            return v;
        }
        case DomainSpec::Kind::disk: {
            const double r = std::hypot(point[0], point[1]);
            const double theta = std::atan2(point[1], point[0]);
            const double rad = bessel_j(m.angular, m.root * std::min(r, spec_.radius) / spec_.radius);
            const double ang = (m.angular == 0) ? 1.0
                               : (m.flavor == 0 ? std::cos(m.angular * theta)
                                                : std::sin(m.angular * theta));
            return m.norm_const * rad * ang;
        }
        case DomainSpec::Kind::annulus: {
            const double r = std::clamp(std::hypot(point[0], point[1]), spec_.inner_radius,
                                        spec_.radius);
            const double theta = std::atan2(point[1], point[0]);
            const double rad = annulus_radial(m.angular, m.root, spec_.inner_radius, r);
            const double ang = (m.angular == 0) ? 1.0
                               : (m.flavor == 0 ? std::cos(m.angular * theta)
                                                : std::sin(m.angular * theta));
            return m.norm_const * rad * ang;
        }
    }
    return 0.0;
}

EigenSystem build_eigensystem(const DomainSpec& spec, int K_raw) {
    spec.validate();
    if (K_raw < 1) throw invalid_input("build_eigensystem: K_raw must be >= 1");
    std::vector<Mode> modes;
    switch (spec.kind) {
        case DomainSpec::Kind::interval: modes = interval_modes(spec, K_raw); break;
        case DomainSpec::Kind::rectangle: modes = rectangle_modes(spec, K_raw); break;
        case DomainSpec::Kind::disk: modes = disk_modes(spec, K_raw); break;
        case DomainSpec::Kind::annulus: modes = annulus_modes(spec, K_raw); break;
    }
    return EigenSystem(spec, std::move(modes));
}

double eval_eigenfunction(const EigenSystem& sys, int k, const std::vector<double>& point) {
    return sys.eval(k, point);
}

ModeHolderData mode_holder_constant(const EigenSystem& sys, int k) {
    if (k < 0 || k >= sys.count()) throw invalid_input("mode_holder_constant: index out of range");
    const Mode& m = sys.modes()[k];
    const DomainSpec& spec = sys.spec();
    double sup_grad = 0.0;

    if (spec.kind == DomainSpec::Kind::interval || spec.kind == DomainSpec::Kind::rectangle) {
        const int n = spec.dimension();
        std::vector<int> pts(n);
        for (int d = 0; d < n; ++d) pts[d] = 40 * m.index[d] + 21;
        std::vector<int> idx(n, 0);
        std::vector<double> x(n);
        const double h = 1e-6 * spec.diameter();
        for (;;) {
            double g2 = 0.0;
            for (int d = 0; d < n; ++d)
                x[d] = spec.lengths[d] * idx[d] / (pts[d] - 1.0);
            for (int d = 0; d < n; ++d) {
                std::vector<double> xp = x, xm = x;
                xp[d] = std::min(xp[d] + h, spec.lengths[d]);
                xm[d] = std::max(xm[d] - h, 0.0);
                double df = (sys.eval(k, xp) - sys.eval(k, xm)) / (xp[d] - xm[d]);
                g2 += df * df;
            }
            sup_grad = std::max(sup_grad, std::sqrt(g2));
            int d = n - 1;
            while (d >= 0 && ++idx[d] >= pts[d]) idx[d--] = 0;
            if (d < 0) break;
        }
    } else {
        const double r_lo = (spec.kind == DomainSpec::Kind::disk) ? 0.0 : spec.inner_radius;
        const double r_hi = spec.radius;
        const int nr = 60 * (m.index[1] + 2);
        const int nt = 8 * m.angular + 16;
        const double hr = 1e-6 * (r_hi - r_lo);
        for (int ir = 0; ir <= nr; ++ir) {
            const double r = r_lo + (r_hi - r_lo) * ir / nr;
            for (int it = 0; it < nt; ++it) {
                const double th = 2.0 * M_PI * it / nt;
                auto at = [&](double rr, double tt) {
                    rr = std::clamp(rr, r_lo, r_hi);
                    return sys.eval(k, {rr * std::cos(tt), rr * std::sin(tt)});
                };
                const double rp = std::min(r + hr, r_hi), rm = std::max(r - hr, r_lo);
                const double dr = (at(rp, th) - at(rm, th)) / (rp - rm);
                double dth = 0.0;
                if (r > 1e-9) {
                    const double ht = 1e-6;
                    dth = (at(r, th + ht) - at(r, th - ht)) / (2.0 * ht) / r;
                }
                sup_grad = std::max(sup_grad, std::hypot(dr, dth));
            }
        }
    }

    ModeHolderData data;
    data.mode = k;
    data.lipschitz_constant = 1.05 * sup_grad;
    data.upsilon = 1.0;
    return data;
}

namespace {

nlohmann::json spec_to_json(const DomainSpec& spec) {
    nlohmann::json j;
    j["kind"] = kind_name(spec.kind);
    j["lengths"] = spec.lengths;
    j["radius"] = spec.radius;
    j["inner_radius"] = spec.inner_radius;
    return j;
}

DomainSpec spec_from_json(const nlohmann::json& j) {
    DomainSpec spec;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "interval")
        spec.kind = DomainSpec::Kind::interval;
    else if (kind == "rectangle")
        spec.kind = DomainSpec::Kind::rectangle;
    else if (kind == "disk")
        spec.kind = DomainSpec::Kind::disk;
    else if (kind == "annulus")
        spec.kind = DomainSpec::Kind::annulus;
    else
        throw invalid_input("domain: unsupported kind '" + kind + "'");
    spec.lengths = j.value("lengths", std::vector<double>{});
    spec.radius = j.value("radius", 0.0);
    spec.inner_radius = j.value("inner_radius", 0.0);
    spec.validate();
    return spec;
}

}  // namespace

std::string to_json(const EigenSystem& sys) {
    nlohmann::json j;
    j["spec"] = spec_to_json(sys.spec());
    nlohmann::json jm = nlohmann::json::array();
    for (const Mode& m : sys.modes()) {
        nlohmann::json e;
        e["index"] = m.index;
        e["gamma"] = m.gamma;
        e["norm_const"] = m.norm_const;
        e["root"] = m.root;
        e["angular"] = m.angular;
        e["flavor"] = m.flavor;
        jm.push_back(std::move(e));
    }
    j["modes"] = std::move(jm);
    return j.dump(2);
}

EigenSystem eigensystem_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    DomainSpec spec = spec_from_json(j.at("spec"));
    std::vector<Mode> modes;
    for (const auto& e : j.at("modes")) {
        Mode m;
        m.index = e.at("index").get<std::vector<int>>();
        m.gamma = e.at("gamma").get<double>();
        m.norm_const = e.at("norm_const").get<double>();
        m.root = e.value("root", 0.0);
        m.angular = e.value("angular", 0);
        m.flavor = e.value("flavor", 0);
        modes.push_back(std::move(m));
    }
    return EigenSystem(spec, std::move(modes));
}

}  // namespace fracfield::domains
