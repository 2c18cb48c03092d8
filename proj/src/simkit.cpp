#include "klift/simkit.hpp"

#include "klift/error.hpp"

#include <boost/numeric/odeint.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace klift {

namespace odeint = boost::numeric::odeint;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

Trajectory integrate_ode(const Field& F, const Vector& x0, const std::vector<double>& times, const OdeOptions& opt) {
    if (times.empty()) throw ConfigError("integrate_ode: no sample times");
    if (!x0.allFinite()) throw NumericalError("integrate_ode: non-finite initial state");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw ConfigError("integrate_ode: sample times must be increasing");
    const auto n = x0.size();
    using State = std::vector<double>;
    Vector xv(n), dv(n);
    auto rhs = [&](const State& s, State& ds, double t) {
        Eigen::Map<const Vector> sm(s.data(), n);
        if (!sm.allFinite() || sm.norm() > opt.blowup)
            throw DivergenceError("trajectory diverged (state norm above " + std::to_string(opt.blowup) + ") at t = " +
                                      std::to_string(t),
                                  t);
        xv = sm;
        F(t, xv, dv);
        Eigen::Map<Vector>(ds.data(), n) = dv;
    };
    Trajectory tr;
    tr.times = times;
    tr.states.resize(static_cast<Index>(times.size()), n);
    Index row = 0;
    auto observer = [&](const State& s, double) {
        tr.states.row(row++) = Eigen::Map<const Vector>(s.data(), n).transpose();
    };
    State x(x0.data(), x0.data() + n);
    if (times.size() == 1) {
        tr.states.row(0) = x0.transpose();
        return tr;
    }
    auto stepper = odeint::make_dense_output(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<State>());
    try {
        odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), opt.initial_dt, observer,
                                odeint::max_step_checker(10000000));
    } catch (const odeint::step_adjustment_error& e) {
        throw DivergenceError(std::string("integrator step-size control failed: ") + e.what(), tr.times[row > 0 ? row - 1 : 0]);
    } catch (const odeint::no_progress_error& e) {
        throw DivergenceError(std::string("integrator made no progress: ") + e.what(), tr.times[row > 0 ? row - 1 : 0]);
    }
    return tr;
}

Trajectory integrate_sde(const Field& F, const Vector& sigma, const Vector& x0, const std::vector<double>& times,
                         double dt, std::mt19937_64& rng, double blowup) {
    if (!(dt > 0.0)) throw ConfigError("integrate_sde: dt must be positive");
    if (times.empty()) throw ConfigError("integrate_sde: no sample times");
    const auto n = x0.size();
    if (sigma.size() != 0 && sigma.size() != n) throw SizeError("integrate_sde: sigma has wrong length");
    std::vector<long> steps;
    for (double t : times) {
        const double q = (t - times[0]) / dt;
        const double r = std::round(q);
        if (std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q)))
            throw ConfigError("integrate_sde: sample time " + std::to_string(t) + " is not a multiple of dt = " + std::to_string(dt));
        steps.push_back(static_cast<long>(r));
    }
    std::normal_distribution<double> N(0.0, 1.0);
    const double sq = std::sqrt(dt);
    Trajectory tr;
    tr.times = times;
    tr.states.resize(static_cast<Index>(times.size()), n);
    Vector x = x0, dx(n);
    long k = 0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        for (; k < steps[i]; ++k) {
            const double t = times[0] + static_cast<double>(k) * dt;
            F(t, x, dx);
            x += dt * dx;
            if (sigma.size() != 0)
                for (Index c = 0; c < n; ++c) x(c) += sigma(c) * sq * N(rng);
            if (!x.allFinite() || x.norm() > blowup)
                throw DivergenceError("stochastic trajectory diverged at t = " + std::to_string(t + dt), t + dt);
        }
        tr.states.row(static_cast<Index>(i)) = x.transpose();
    }
    return tr;
}

namespace {

struct Term {
    int target;
    MultiIndex exponents;
    double value;
};

// Coefficients over Monomial(n, m) from a list of terms.
VectorFieldModel monomial_truth(int n, int m, int p, const std::vector<Term>& terms) {
    const int dim = n + p;
    auto list = enumerate_monomials(dim, m);
    std::map<MultiIndex, Index> where;
    for (std::size_t k = 0; k < list.size(); ++k) where[list[k]] = static_cast<Index>(k);
    Matrix W = Matrix::Zero(static_cast<Index>(list.size()), n);
    for (const auto& t : terms) {
        auto it = where.find(t.exponents);
        if (it == where.end()) throw ConfigError("truth term outside the declared library");
        W(it->second, t.target) += t.value;
    }
    return VectorFieldModel(Dictionary::monomial(dim, m), W, n, p);
}

std::vector<std::pair<double, double>> cube(int n, double lo, double hi) {
    return std::vector<std::pair<double, double>>(n, {lo, hi});
}

}  // namespace

BenchmarkSystem van_der_pol() {
    BenchmarkSystem s;
    s.name = "vanderpol";
    s.n = 2;
    s.field = [](double, const Vector& x, Vector& d) {
        d(0) = x(1);
        d(1) = (1.0 - x(0) * x(0)) * x(1) - x(0);
    };
    s.truth = monomial_truth(2, 3, 0, {{0, {0, 1}, 1.0}, {1, {0, 1}, 1.0}, {1, {2, 1}, -1.0}, {1, {1, 0}, -1.0}});
    s.box = cube(2, -1.0, 1.0);
    return s;
}

BenchmarkSystem unstable_cubic() {
    BenchmarkSystem s;
    s.name = "unstable";
    s.n = 2;
    s.field = [](double, const Vector& x, Vector& d) {
        d(0) = 3.0 * x(0) + 0.5 * x(1) - x(0) * x(1) + x(1) * x(1) + 2.0 * x(0) * x(0) * x(0);
        d(1) = 0.5 * x(0) + 4.0 * x(1);
    };
    s.truth = monomial_truth(2, 3, 0,
                             {{0, {1, 0}, 3.0}, {0, {0, 1}, 0.5}, {0, {1, 1}, -1.0}, {0, {0, 2}, 1.0}, {0, {3, 0}, 2.0},
                              {1, {1, 0}, 0.5}, {1, {0, 1}, 4.0}});
    s.box = cube(2, -0.5, 0.5);
    return s;
}

BenchmarkSystem lorenz() {
    BenchmarkSystem s;
    s.name = "lorenz";
    s.n = 3;
    const double beta = 8.0 / 3.0;
    s.field = [beta](double, const Vector& x, Vector& d) {
        d(0) = 10.0 * (x(1) - x(0));
        d(1) = x(0) * (28.0 - x(2)) - x(1);
        d(2) = x(0) * x(1) - beta * x(2);
    };
    s.truth = monomial_truth(3, 3, 0,
                             {{0, {0, 1, 0}, 10.0}, {0, {1, 0, 0}, -10.0}, {1, {1, 0, 0}, 28.0}, {1, {1, 0, 1}, -1.0},
                              {1, {0, 1, 0}, -1.0}, {2, {1, 1, 0}, 1.0}, {2, {0, 0, 1}, -beta}});
    s.box = cube(3, -20.0, 20.0);
    return s;
}

BenchmarkSystem duffing_forced() {
    BenchmarkSystem s;
    s.name = "duffing_forced";
    s.n = 2;
    s.p = 1;
    s.field = [](double t, const Vector& x, Vector& d) {
        d(0) = x(1);
        d(1) = x(0) - x(0) * x(0) * x(0) - 0.2 * x(1) + 0.2 * x(0) * x(0) * std::cos(t);
    };
    s.input = [](double t) {
        Vector u(1);
        u(0) = std::cos(t);
        return u;
    };
    s.truth = monomial_truth(2, 3, 1,
                             {{0, {0, 1, 0}, 1.0}, {1, {1, 0, 0}, 1.0}, {1, {3, 0, 0}, -1.0}, {1, {0, 1, 0}, -0.2},
                              {1, {2, 0, 1}, 0.2}});
    s.box = cube(2, -1.0, 1.0);
    return s;
}

BenchmarkSystem duffing_stochastic(double sigma_proc) {
    BenchmarkSystem s;
    s.name = "duffing_stochastic";
    s.n = 2;
    s.field = [](double, const Vector& x, Vector& d) {
        d(0) = x(1);
        d(1) = x(0) - x(0) * x(0) * x(0) - 0.2 * x(1);
    };
    s.sigma_proc = Vector::Zero(2);
    s.sigma_proc(1) = sigma_proc;
    s.truth = monomial_truth(2, 3, 0,
                             {{0, {0, 1}, 1.0}, {1, {1, 0}, 1.0}, {1, {3, 0}, -1.0}, {1, {0, 1}, -0.2}});
    s.box = cube(2, -1.0, 1.0);
    return s;
}

BenchmarkSystem toggle_switch() {
    BenchmarkSystem s;
    s.name = "toggle";
    s.n = 4;
    s.field = [](double, const Vector& x, Vector& d) {
        d(0) = -x(0) + 2.0 * x(1);
        d(1) = -x(1) + 2.0 / (1.0 + x(2) * x(2));
        d(2) = -2.0 * x(2) + 2.0 * x(3);
        d(3) = -2.0 * x(3) + 1.0 / (1.0 + x(0) * x(0) * x(0));
    };
    auto lib = Dictionary::composite({Dictionary::monomial(4, 1), Dictionary::hill(4, {0, 1, 2, 3}, {1, 2, 3})});
    Matrix W = Matrix::Zero(lib.size(), 4);
    // monomials: 1, x1..x4 at 0..4; Hill (k, l) at 5 + 3k + (l - 1)
    W(1, 0) = -1.0;
    W(2, 0) = 2.0;
    W(2, 1) = -1.0;
    W(5 + 3 * 2 + 1, 1) = 2.0;
    W(3, 2) = -2.0;
    W(4, 2) = 2.0;
    W(4, 3) = -2.0;
    W(5 + 3 * 0 + 2, 3) = 1.0;
    s.truth = VectorFieldModel(lib, W, 4);
    s.box = cube(4, 0.0, 1.0);
    return s;
}

BenchmarkSystem kuramoto(const Vector& omega, const Matrix& A, double C) {
    const int n = static_cast<int>(omega.size());
    if (A.rows() != n || A.cols() != n) throw SizeError("Kuramoto adjacency must be n x n");
    BenchmarkSystem s;
    s.name = "kuramoto";
    s.n = n;
    s.field = [omega, A, C, n](double, const Vector& th, Vector& d) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j)
                if (A(i, j) != 0.0) acc += A(i, j) * std::sin(th(j) - th(i));
            d(i) = omega(i) + (C / n) * acc;
        }
    };
    std::vector<Dictionary> libs;
    std::vector<Vector> W;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adj(n, n);
    adj.setConstant(false);
    for (int i = 0; i < n; ++i) {
        libs.push_back(Dictionary::sin_diff(n, i));
        Vector w = Vector::Zero(n);
        w(0) = omega(i);
        int c = 1;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            w(c++) = (C / n) * A(i, j);
            if (A(i, j) != 0.0) adj(j, i) = true;
        }
        W.push_back(w);
    }
    s.truth = VectorFieldModel(libs, W, n);
    s.adjacency = adj;
    s.link_rule = LinkRule::ExcludeSelf;
    s.box = cube(n, 0.0, 2.0 * M_PI);
    return s;
}

BenchmarkSystem poly_network(int n, const Vector& w1, const std::vector<PolyTerm>& terms) {
    if (w1.size() != n) throw SizeError("poly network needs one linear coefficient per state");
    BenchmarkSystem s;
    s.name = "polynet";
    s.n = n;
    // sparse form used by the closed-form field
    struct Sparse {
        int target;
        std::vector<std::pair<int, int>> factors;
        double c;
    };
    std::vector<Sparse> sparse;
    std::vector<Term> truth_terms;
    for (int j = 0; j < n; ++j) {
        MultiIndex e(n, 0);
        e[j] = 1;
        truth_terms.push_back({j, e, -w1(j)});
    }
    for (const auto& t : terms) {
        Sparse sp{t.target, {}, t.coefficient};
        for (int v = 0; v < n; ++v)
            if (t.exponents[v] > 0) sp.factors.emplace_back(v, t.exponents[v]);
        sparse.push_back(sp);
        truth_terms.push_back({t.target, t.exponents, t.coefficient});
    }
    s.field = [w1, sparse, n](double, const Vector& x, Vector& d) {
        for (int j = 0; j < n; ++j) d(j) = -w1(j) * x(j);
        for (const auto& t : sparse) {
            double v = t.c;
            for (auto [var, e] : t.factors) v *= std::pow(x(var), e);
            d(t.target) += v;
        }
    };
    s.truth = monomial_truth(n, 3, 0, truth_terms);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adj(n, n);
    adj.setConstant(false);
    for (int j = 0; j < n; ++j) adj(j, j) = w1(j) != 0.0;
    for (const auto& t : terms)
        for (int v = 0; v < n; ++v)
            if (t.exponents[v] > 0 && t.coefficient != 0.0) adj(v, t.target) = true;
    s.adjacency = adj;
    s.link_rule = LinkRule::IncludeSelf;
    s.box = cube(n, -0.5, 0.5);
    return s;
}

BenchmarkSystem linear_system(const Matrix& A) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n) throw SizeError("linear system matrix must be square");
    BenchmarkSystem s;
    s.name = "linear";
    s.n = n;
    s.field = [A](double, const Vector& x, Vector& d) { d = A * x; };
    Matrix W = Matrix::Zero(n + 1, n);
    W.bottomRows(n) = A.transpose();
    s.truth = VectorFieldModel(Dictionary::monomial(n, 1), W, n);
    s.box = cube(n, -1.0, 1.0);
    return s;
}

BenchmarkSystem random_kuramoto(const KuramotoParams& prm, std::uint64_t seed) {
    if (prm.n < 2) throw ConfigError("Kuramoto network needs n >= 2");
    if (!(prm.p_link > 0.0 && prm.p_link <= 1.0)) throw ConfigError("p_link must lie in (0, 1]");
    auto rng = make_rng(seed, 0x4b55);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Vector omega(prm.n);
    for (int i = 0; i < prm.n; ++i) omega(i) = prm.omega_max * U(rng);
    Matrix A = Matrix::Zero(prm.n, prm.n);
    for (int i = 0; i < prm.n; ++i)
        for (int j = 0; j < prm.n; ++j) {
            if (i == j) continue;
            const bool link = U(rng) < prm.p_link;
            const double w = U(rng);
            if (link) A(i, j) = w;
        }
    return kuramoto(omega, A, prm.C);
}

BenchmarkSystem random_poly_network(const PolyNetworkParams& prm, std::uint64_t seed) {
    const int n = prm.n;
    if (n < 2) throw ConfigError("polynomial network needs n >= 2");
    // degree 2 and 3 monomials in at most two distinct variables
    std::vector<MultiIndex> candidates;
    for (const auto& e : enumerate_monomials(n, 3)) {
        int deg = 0, vars = 0;
        for (int v : e) {
            deg += v;
            vars += v > 0;
        }
        if (deg >= 2 && vars <= 2) candidates.push_back(e);
    }
    if (prm.n_inter < 0 || prm.n_inter > static_cast<int>(candidates.size()))
        throw ConfigError("n_inter out of range");
    auto rng = make_rng(seed, 0x504e);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> N(0.0, 1.0);
    Vector w1(n);
    for (int j = 0; j < n; ++j) w1(j) = U(rng);
    std::vector<PolyTerm> terms;
    for (int j = 0; j < n; ++j) {
        // partial Fisher-Yates: n_inter distinct candidates
        std::vector<std::size_t> idx(candidates.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (int k = 0; k < prm.n_inter; ++k) {
            std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), idx.size() - 1);
            std::swap(idx[k], idx[pick(rng)]);
            terms.push_back({j, candidates[idx[k]], N(rng)});
        }
    }
    return poly_network(n, w1, terms);
}

SnapshotSet sample_snapshots(const BenchmarkSystem& sys, const SamplingPlan& plan, double sigma_meas) {
    if (plan.trajectories < 1 || plan.pairs_per_trajectory < 1)
        throw ConfigError("sampling plan needs at least one trajectory and one pair per trajectory (empty dataset)");
    if (!(plan.Ts > 0.0)) throw ConfigError("sampling period Ts must be positive");
    if (sigma_meas < 0.0) throw ConfigError("sigma_meas must be non-negative");
    const auto& box = plan.box.empty() ? sys.box : plan.box;
    if (static_cast<int>(box.size()) != sys.n)
        throw ConfigError("initial-condition box has " + std::to_string(box.size()) + " intervals, system has n = " +
                          std::to_string(sys.n));
    for (const auto& [lo, hi] : box)
        if (!(hi >= lo)) throw ConfigError("initial-condition box interval is empty");

    const int n = sys.n;
    const int P = plan.pairs_per_trajectory;
    const int r = plan.trajectories;
    const Index K = static_cast<Index>(P) * r;
    std::vector<double> times(P + 1);
    for (int k = 0; k <= P; ++k) times[k] = k * plan.Ts;
    const bool stochastic = sys.sigma_proc.size() > 0 && sys.sigma_proc.cwiseAbs().maxCoeff() > 0.0;

    SnapshotSet out;
    out.Ts = plan.Ts;
    out.X.resize(K, n);
    out.Y.resize(K, n);
    Matrix Xe(K, n), Ye(K, n);
    if (sys.p > 0) out.inputs = Matrix(K, sys.p);
    out.trajectory_id.resize(K);
    out.pair_index.resize(K);

    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&]() {
        while (true) {
            const int t = next.fetch_add(1);
            if (t >= r) return;
            try {
                auto ic_rng = make_rng(plan.seed, 1, t);
                std::uniform_real_distribution<double> U(0.0, 1.0);
                Vector x0(n);
                for (int i = 0; i < n; ++i) x0(i) = box[i].first + (box[i].second - box[i].first) * U(ic_rng);
                Trajectory tr;
                if (stochastic) {
                    auto sde_rng = make_rng(plan.seed, 2, t);
                    tr = integrate_sde(sys.field, sys.sigma_proc, x0, times, plan.Ts / plan.sde_substeps, sde_rng);
                } else {
                    tr = integrate_ode(sys.field, x0, times);
                }
                auto noise_rng = make_rng(plan.seed, 3, t);
                std::normal_distribution<double> N(0.0, 1.0);
                for (int k = 0; k < P; ++k) {
                    const Index row = static_cast<Index>(t) * P + k;
                    Xe.row(row) = tr.states.row(k);
                    Ye.row(row) = tr.states.row(k + 1);
                    for (int i = 0; i < n; ++i) out.X(row, i) = Xe(row, i) * (1.0 + sigma_meas * N(noise_rng));
                    for (int i = 0; i < n; ++i) out.Y(row, i) = Ye(row, i) * (1.0 + sigma_meas * N(noise_rng));
                    if (sys.p > 0) out.inputs->row(row) = sys.input(times[k]).transpose();
                    out.trajectory_id[row] = t;
                    out.pair_index[row] = k;
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    const int nw = std::max(1, std::min(plan.workers, r));
    if (nw == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nw; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    if (sigma_meas == 0.0) {
        out.X = Xe;
        out.Y = Ye;
    }
    out.meta.system = sys.name;
    out.meta.sigma_meas = sigma_meas;
    out.meta.sigma_proc = stochastic ? sys.sigma_proc.cwiseAbs().maxCoeff() : 0.0;
    out.meta.seed = plan.seed;
    out.meta.X_exact = std::move(Xe);
    out.meta.Y_exact = std::move(Ye);
    return out;
}

SnapshotSet rescale(const SnapshotSet& data, double alpha) {
    if (!(alpha > 0.0)) throw ConfigError("rescaling factor must be positive");
    SnapshotSet out = data;
    out.X /= alpha;
    out.Y /= alpha;
    if (out.meta.X_exact) *out.meta.X_exact /= alpha;
    if (out.meta.Y_exact) *out.meta.Y_exact /= alpha;
    return out;
}

double auto_scale(const SnapshotSet& data) {
    const double a = std::max(data.X.cwiseAbs().maxCoeff(), data.Y.cwiseAbs().maxCoeff());
    if (!(a > 0.0)) throw NumericalError("cannot rescale all-zero data");
    return a;
}

namespace {

VectorFieldModel map_coefficients(const VectorFieldModel& model, double alpha, bool forward) {
    if (!(alpha > 0.0)) throw ConfigError("rescaling factor must be positive");
    if (model.p() > 0) throw UnsupportedError("coefficient rescaling is defined for state-only models");
    std::vector<Vector> W;
    for (int j = 0; j < model.n(); ++j) {
        const auto& lib = model.library(j);
        if (!lib.all_monomial()) throw UnsupportedError("coefficient rescaling needs a monomial library");
        Vector w = model.coefficients(j);
        for (Index k = 0; k < w.size(); ++k) {
            const double f = std::pow(alpha, *lib.monomial_degree(k) - 1);
            w(k) = forward ? w(k) * f : w(k) / f;
        }
        W.push_back(w);
    }
    return VectorFieldModel(model.libraries(), W, model.n(), model.p());
}

}  // namespace

VectorFieldModel unrescale_coefficients(const VectorFieldModel& model, double alpha) {
    return map_coefficients(model, alpha, false);
}

VectorFieldModel rescale_coefficients(const VectorFieldModel& model, double alpha) {
    return map_coefficients(model, alpha, true);
}

}  // namespace klift
