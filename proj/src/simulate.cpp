#include "fracfield/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "fracfield/errors.hpp"

namespace fracfield::simulate {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Gaussian stream with an explicit Box-Muller pair so the draw sequence is
// fixed by this code, not by library distribution internals.
class GaussStream {
public:
    explicit GaussStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    double uniform01() { return (engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

int thread_budget(int replicates) {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("FRACFIELD_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) hw = v;
    }
    return std::min(hw, replicates);
}

// Lower-triangular Cholesky factor with relative jitter escalation; a is
// row-major m x m and gets overwritten by L.
void cholesky_with_jitter(std::vector<double>& a, int m, int mode_for_error) {
    double max_diag = 0.0;
    for (int i = 0; i < m; ++i) max_diag = std::max(max_diag, a[i * m + i]);
    const std::vector<double> saved = a;
    for (double jitter_rel : {0.0, 1e-14, 1e-12, 1e-10}) {
        a = saved;
        const double jitter = jitter_rel * max_diag;
        for (int i = 0; i < m; ++i) a[i * m + i] += jitter;
        bool ok = true;
        for (int j = 0; j < m && ok; ++j) {
            double d = a[j * m + j];
            for (int k = 0; k < j; ++k) d -= a[j * m + k] * a[j * m + k];
            if (!(d > 0.0)) {
                ok = false;
                break;
            }
            const double L = std::sqrt(d);
            a[j * m + j] = L;
            for (int i = j + 1; i < m; ++i) {
                double v = a[i * m + j];
                for (int k = 0; k < j; ++k) v -= a[i * m + k] * a[j * m + k];
                a[i * m + j] = v / L;
            }
        }
        if (ok) {
            // zero the upper triangle for cleanliness
            for (int i = 0; i < m; ++i)
                for (int j = i + 1; j < m; ++j) a[i * m + j] = 0.0;
            return;
        }
    }
    throw numeric_failure("sample_ensemble: covariance factorization failed for mode " +
                          std::to_string(mode_for_error) + " after jitter escalation");
}

}  // namespace

void SimulationPlan::validate() const {
    time_grid.validate();
    if (replicates < 1) throw invalid_input("SimulationPlan: replicates must be >= 1");
    if (space_points.empty()) throw invalid_input("SimulationPlan: need at least one space point");
    for (const auto& p : space_points)
        if (!trunc.system().spec().contains(p))
            throw invalid_input("SimulationPlan: space point outside the domain");
    if (method == Method::cholesky && static_cast<int>(time_grid.points.size()) > 2048)
        throw invalid_input("SimulationPlan: cholesky method limited to 2048 time points");
}

FieldEnsemble::FieldEnsemble(int n_rep, int n_time, int n_space)
    : n_rep_(n_rep), n_time_(n_time), n_space_(n_space),
      values_(static_cast<std::size_t>(n_rep) * n_time * n_space, 0.0) {}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replicate, std::uint64_t mode) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s ^= (replicate + 1) * 0xD1342543DE82EF95ULL;
    std::uint64_t b = splitmix64(s);
    s ^= (mode + 1) * 0xAF251AF3B0F025B5ULL;
    std::uint64_t c = splitmix64(s);
    return a ^ (b << 1) ^ c;
}

namespace {

FieldEnsemble run_plan(const SimulationPlan& plan, bool riemann) {
    plan.validate();
    if (riemann) {
        if (!plan.time_grid.uniform)
            throw invalid_input("riemann_sample: requires a uniform time grid");
        plan.time_grid.dt();
    }
    const int M = static_cast<int>(plan.time_grid.points.size());
    const int S = static_cast<int>(plan.space_points.size());
    const int K = plan.trunc.K();
    const int R = plan.replicates;
    const double beta = plan.trunc.params().beta;

    // phi[k][j]
    std::vector<double> phi(static_cast<std::size_t>(K) * S);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < S; ++j)
            phi[static_cast<std::size_t>(k) * S + j] = plan.trunc.phi(k, plan.space_points[j]);

    // per-mode structures: Cholesky factors of the grid covariance (times > 0),
    // or the Riemann kernel row E(lambda (t_i - t_j)^beta)
    const int m = M - 1;
    std::vector<std::vector<double>> factor(K);
    if (!riemann) {
        for (int k = 0; k < K; ++k) {
            std::vector<double> cov(static_cast<std::size_t>(m) * m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j <= i; ++j) {
                    const double v = kernels::mode_time_integral(
                                         plan.trunc.lambda(k), beta,
                                         plan.time_grid.points[i + 1], plan.time_grid.points[j + 1])
                                         .value;
                    cov[static_cast<std::size_t>(i) * m + j] = v;
                    cov[static_cast<std::size_t>(j) * m + i] = v;
                }
            cholesky_with_jitter(cov, m, k);
            factor[k] = std::move(cov);
        }
    } else {
        for (int k = 0; k < K; ++k) {
            // kern[i*m + j] = E(lambda (t_(i+1) - t_j)^beta) for j <= i
            std::vector<double> kern(static_cast<std::size_t>(m) * m, 0.0);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j <= i; ++j) {
                    const double dtb =
                        std::pow(plan.time_grid.points[i + 1] - plan.time_grid.points[j], beta);
                    kern[static_cast<std::size_t>(i) * m + j] =
                        kernels::mlf_cached(beta, plan.trunc.lambda(k) * dtb);
                }
            factor[k] = std::move(kern);
        }
    }

    FieldEnsemble ens(R, M, S);
    ens.master_seed = plan.master_seed;
    ens.times = plan.time_grid.points;
    ens.points = plan.space_points;

    const double sqrt_dt = riemann ? std::sqrt(plan.time_grid.dt()) : 0.0;

    auto worker = [&](int r_begin, int r_end) {
        std::vector<double> z(m), xk(m);
        for (int r = r_begin; r < r_end; ++r) {
            for (int k = 0; k < K; ++k) {
                GaussStream gs(derive_seed(plan.master_seed, r, k));
                for (int i = 0; i < m; ++i) z[i] = gs.next();
                const std::vector<double>& F = factor[k];
                if (!riemann) {
                    for (int i = 0; i < m; ++i) {
                        double acc = 0.0;
                        for (int j = 0; j <= i; ++j) acc += F[static_cast<std::size_t>(i) * m + j] * z[j];
                        xk[i] = acc;
                    }
                } else {
                    for (int i = 0; i < m; ++i) {
                        double acc = 0.0;
                        for (int j = 0; j <= i; ++j)
                            acc += F[static_cast<std::size_t>(i) * m + j] * z[j] * sqrt_dt;
                        xk[i] = acc;
                    }
                }
                // deterministic summation: mode-major accumulation, then time, space
                for (int i = 0; i < m; ++i) {
                    const double xki = xk[i];
                    const double* ph = &phi[static_cast<std::size_t>(k) * S];
                    for (int j = 0; j < S; ++j) ens.at(r, i + 1, j) += ph[j] * xki;
                }
            }
        }
    };

    const int n_threads = thread_budget(R);
    if (n_threads <= 1) {
        worker(0, R);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (R + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            const int lo = t * chunk;
            const int hi = std::min(R, lo + chunk);
            if (lo < hi) pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return ens;
}

}  // namespace

FieldEnsemble sample_ensemble(const SimulationPlan& plan) {
    if (plan.method != SimulationPlan::Method::cholesky)
        throw invalid_input("sample_ensemble: plan method must be cholesky");
    return run_plan(plan, false);
}

FieldEnsemble riemann_sample(const SimulationPlan& plan) {
    return run_plan(plan, true);
}

std::vector<Estimate> ensemble_estimate(const FieldEnsemble& ens,
                                        const std::vector<EstimateTarget>& targets) {
    const int R = ens.replicates();
    if (R < 2) throw invalid_input("ensemble_estimate: needs >= 2 replicates");

    std::vector<Estimate> out;
    out.reserve(targets.size());
    std::vector<double> stat(R);
    for (const EstimateTarget& tg : targets) {
        if (tg.i1 < 0 || tg.i1 >= ens.time_points() || tg.j1 < 0 || tg.j1 >= ens.space_points())
            throw invalid_input("ensemble_estimate: target index out of range");
        switch (tg.kind) {
            case EstimateTarget::Kind::mean:
                for (int r = 0; r < R; ++r) stat[r] = ens.at(r, tg.i1, tg.j1);
                break;
            case EstimateTarget::Kind::covariance:
                if (tg.i2 < 0 || tg.i2 >= ens.time_points() || tg.j2 < 0 ||
                    tg.j2 >= ens.space_points())
                    throw invalid_input("ensemble_estimate: target index out of range");
                for (int r = 0; r < R; ++r)
                    stat[r] = ens.at(r, tg.i1, tg.j1) * ens.at(r, tg.i2, tg.j2);
                break;
            case EstimateTarget::Kind::increment:
                if (tg.i2 < 0 || tg.i2 >= ens.time_points())
                    throw invalid_input("ensemble_estimate: target index out of range");
                for (int r = 0; r < R; ++r) {
                    const double d = ens.at(r, tg.i1, tg.j1) - ens.at(r, tg.i2, tg.j1);
                    stat[r] = d * d;
                }
                break;
        }
        // mean of the per-replicate statistic with leave-one-out jackknife
        double sum = 0.0;
        for (int r = 0; r < R; ++r) sum += stat[r];
        const double mean = sum / R;
        double jvar = 0.0;
        for (int r = 0; r < R; ++r) {
            const double loo = (sum - stat[r]) / (R - 1);
            jvar += (loo - mean) * (loo - mean);
        }
        Estimate e;
        e.value = mean;
        e.std_error = std::sqrt(jvar * (R - 1.0) / R);
        out.push_back(e);
    }
    return out;
}

std::string to_csv(const FieldEnsemble& ens) {
    std::ostringstream os;
    os << "replicate,t";
    const std::size_t dim = ens.points.empty() ? 0 : ens.points[0].size();
    for (std::size_t d = 0; d < dim; ++d) os << ",x" << d;
    os << ",value\n";
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (int r = 0; r < ens.replicates(); ++r)
        for (int i = 0; i < ens.time_points(); ++i)
            for (int j = 0; j < ens.space_points(); ++j) {
                os << r << ",";
                put(ens.times[i]);
                for (std::size_t d = 0; d < dim; ++d) {
                    os << ",";
                    put(ens.points[j][d]);
                }
                os << ",";
                put(ens.at(r, i, j));
                os << "\n";
            }
    return os.str();
}

void write_binary(const FieldEnsemble& ens, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw numeric_failure("write_binary: cannot open " + path);
    const char magic[4] = {'F', 'F', 'L', 'D'};
    f.write(magic, 4);
    const std::uint32_t version = 1;
    f.write(reinterpret_cast<const char*>(&version), sizeof version);
    const std::uint64_t dims[3] = {static_cast<std::uint64_t>(ens.replicates()),
                                   static_cast<std::uint64_t>(ens.time_points()),
                                   static_cast<std::uint64_t>(ens.space_points())};
    f.write(reinterpret_cast<const char*>(dims), sizeof dims);
    f.write(reinterpret_cast<const char*>(&ens.master_seed), sizeof ens.master_seed);
    // payload: spatial dimension, time grid, flattened point coordinates, values
    const std::uint64_t sdim = ens.points.empty() ? 0 : ens.points.front().size();
    f.write(reinterpret_cast<const char*>(&sdim), sizeof sdim);
    f.write(reinterpret_cast<const char*>(ens.times.data()),
            static_cast<std::streamsize>(ens.times.size() * sizeof(double)));
    for (const auto& p : ens.points)
        f.write(reinterpret_cast<const char*>(p.data()),
                static_cast<std::streamsize>(p.size() * sizeof(double)));
    f.write(reinterpret_cast<const char*>(ens.raw().data()),
            static_cast<std::streamsize>(ens.raw().size() * sizeof(double)));
    if (!f) throw numeric_failure("write_binary: short write to " + path);
}

FieldEnsemble read_binary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw invalid_input("read_binary: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "FFLD", 4) != 0)
        throw invalid_input("read_binary: bad magic in " + path);
    std::uint32_t version = 0;
    f.read(reinterpret_cast<char*>(&version), sizeof version);
    if (version != 1) throw invalid_input("read_binary: unsupported version");
    std::uint64_t dims[3];
    f.read(reinterpret_cast<char*>(dims), sizeof dims);
    FieldEnsemble ens(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                      static_cast<int>(dims[2]));
    f.read(reinterpret_cast<char*>(&ens.master_seed), sizeof ens.master_seed);
    std::uint64_t sdim = 0;
    f.read(reinterpret_cast<char*>(&sdim), sizeof sdim);
    if (!f || sdim > 3) throw invalid_input("read_binary: corrupt header in " + path);
    ens.times.resize(dims[1]);
    f.read(reinterpret_cast<char*>(ens.times.data()),
           static_cast<std::streamsize>(ens.times.size() * sizeof(double)));
    ens.points.assign(dims[2], std::vector<double>(sdim));
    for (auto& p : ens.points)
        f.read(reinterpret_cast<char*>(p.data()),
               static_cast<std::streamsize>(p.size() * sizeof(double)));
    std::vector<double>& vals = ens.raw();
    f.read(reinterpret_cast<char*>(vals.data()),
           static_cast<std::streamsize>(vals.size() * sizeof(double)));
    if (!f) throw invalid_input("read_binary: truncated file " + path);
    return ens;
}

}  // namespace fracfield::simulate
