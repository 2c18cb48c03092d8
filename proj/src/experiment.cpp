#include "klift/experiment.hpp"

#include "klift/error.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace klift {

namespace {

json pinv_json(const PinvSummary& p) {
    return {{"rank", p.rank}, {"full", p.full}, {"cutoff", p.cutoff},
            {"condition", std::isfinite(p.condition) ? json(p.condition) : json("inf")}};
}

json logm_json(const LogmResult& l) {
    return {{"branch_ok", l.branch_ok},
            {"strip_ok", l.strip_ok},
            {"negative_real_eigenvalues", l.negative_real_eigenvalues},
            {"max_imag_residue", l.max_imag_residue},
            {"square_roots", l.square_roots}};
}

// "sindiff" without a target means one sine-difference library per state
std::vector<Dictionary> build_libraries(const json& spec, int n, const Matrix& samples, const BenchmarkSystem* sys) {
    if (spec == "system") {
        if (!sys || sys->truth.n() == 0)
            throw ConfigError("method.library: \"system\" needs a simulated benchmark; give an explicit library");
        return sys->truth.libraries();
    }
    if (spec.value("kind", "") == "sindiff" && !spec.contains("target")) {
        std::vector<Dictionary> libs;
        for (int j = 0; j < n; ++j) libs.push_back(Dictionary::sin_diff(n, j));
        return libs;
    }
    return {build_dictionary(spec, n, samples)};
}

template <class Fn>
void parallel_for(int count, int workers, Fn&& fn) {
    std::atomic<int> next{0};
    auto body = [&]() {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    };
    const int nw = std::max(1, std::min(workers, count));
    if (nw == 1) {
        body();
        return;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < nw; ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
}

}  // namespace

BenchmarkSystem build_system(const json& spec, double sigma_proc, std::uint64_t seed) {
    const auto name = spec.at("name").get<std::string>();
    auto get = [&](const char* key, auto fallback) {
        using T = decltype(fallback);
        if (!spec.contains(key)) return fallback;
        try {
            return spec[key].get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("system.") + key + ": wrong type");
        }
    };
    if (name == "vanderpol") return van_der_pol();
    if (name == "unstable") return unstable_cubic();
    if (name == "lorenz") return lorenz();
    if (name == "duffing_forced") return duffing_forced();
    if (name == "duffing_stochastic") return duffing_stochastic(sigma_proc);
    if (name == "toggle") return toggle_switch();
    const std::uint64_t net_seed = get("network_seed", seed);
    if (name == "kuramoto") {
        KuramotoParams p;
        p.n = get("n", p.n);
        p.p_link = get("p_link", p.p_link);
        p.C = get("C", p.C);
        p.omega_max = get("omega_max", p.omega_max);
        return random_kuramoto(p, net_seed);
    }
    if (name == "polynet") {
        PolyNetworkParams p;
        p.n = get("n", p.n);
        p.n_inter = get("n_inter", p.n_inter);
        return random_poly_network(p, net_seed);
    }
    if (name == "linear") {
        const auto rows = get("A", std::vector<std::vector<double>>{});
        const auto n = static_cast<Index>(rows.size());
        if (n == 0) throw ConfigError("system.A: empty matrix");
        Matrix A(n, n);
        for (Index i = 0; i < n; ++i) {
            if (static_cast<Index>(rows[i].size()) != n) throw ConfigError("system.A: matrix must be square");
            for (Index j = 0; j < n; ++j) A(i, j) = rows[i][j];
        }
        return linear_system(A);
    }
    throw ConfigError("system.name: unknown system '" + name + "'");
}

SamplingPlan sampling_plan(const ExperimentConfig& cfg, std::uint64_t seed, int n) {
    SamplingPlan p;
    p.Ts = cfg.sampling.Ts;
    p.pairs_per_trajectory = cfg.sampling.pairs_per_trajectory;
    p.trajectories = cfg.sampling.trajectories;
    p.box = cfg.sampling.box;
    if (p.box.size() == 1 && n > 1) p.box.assign(n, p.box.front());
    p.seed = seed;
    p.sde_substeps = cfg.sampling.sde_substeps;
    p.workers = cfg.workers;
    return p;
}

Identification identify(const MethodSpec& method, const SnapshotSet& raw, const BenchmarkSystem* sys, int workers) {
    validate(raw);
    const int n = raw.n();
    double alpha = 1.0;
    if (method.rescale < 0.0) alpha = auto_scale(raw);
    else if (method.rescale > 0.0) alpha = method.rescale;
    const SnapshotSet data = alpha == 1.0 ? raw : rescale(raw, alpha);

    Identification out;
    json& d = out.diagnostics;
    d["K"] = data.K();
    d["n"] = n;
    d["p"] = data.p();
    d["rescale"] = alpha;

    if (method.kind == MethodKind::Main) {
        MainOptions opt;
        opt.rcond = method.rcond;
        opt.rank_policy = method.rank_policy;
        opt.branch_policy = method.branch_policy;
        MainResult r;
        if (data.inputs) {
            if (method.extra) throw UnsupportedError("extra lift functions together with inputs are not supported");
            r = identify_main_with_inputs(data, method.m, method.m_F, opt);
        } else if (method.extra) {
            r = identify_main_augmented(data, method.m, build_dictionary(*method.extra, n, data.X), opt);
        } else {
            r = identify_main(data, method.m, method.m_F, opt);
        }
        d["method"] = "main";
        d["m"] = method.m;
        d["N"] = r.generator.dictionary.size();
        d["N_F"] = r.model.library(0).size();
        d["pinv"] = pinv_json(r.generator.pinv);
        d["logm"] = logm_json(r.generator.logm);
        d["truncated_max"] = r.truncated_max;
        out.model = std::move(r.model);
        out.warnings = std::move(r.warnings);
    } else {
        const json test_spec = method.test_dictionary.value_or(json{{"kind", "rbf"}, {"gamma", 0.1}, {"centers", "samples"}});
        const Dictionary test = build_dictionary(test_spec, n, data.X);
        const auto libs = build_libraries(method.library, n, data.X, sys);
        RegressionSpec reg = method.regression;
        reg.rcond = method.rcond;
        const auto resolved = resolve(reg, data.K(), libs.front().size());
        reg.mode = resolved.mode;
        if (reg.mode == RegressionMode::Lasso && method.lambda) reg.penalty = *method.lambda;
        if (reg.mode == RegressionMode::L1L2 && method.rho) reg.penalty = *method.rho;
        DualOptions opt;
        opt.rcond = method.rcond;
        opt.branch_policy = method.branch_policy;
        opt.rank_policy = method.rank_policy;
        opt.workers = workers;
        auto r = identify_dual(data, test, libs, reg, opt);
        d["method"] = "dual";
        d["N"] = test.size();
        d["N_F"] = libs.front().size();
        d["pinv"] = pinv_json(r.generator.pinv);
        d["logm"] = logm_json(r.generator.logm);
        json regs = json::array();
        for (std::size_t j = 0; j < r.reports.size(); ++j) {
            const auto& rep = r.reports[j];
            regs.push_back({{"state", j + 1},
                            {"mode", to_string(rep.mode)},
                            {"penalty", rep.penalty},
                            {"iterations", rep.iterations},
                            {"converged", rep.converged},
                            {"nonzeros", rep.nonzeros}});
        }
        d["regression"] = regs;
        out.model = std::move(r.model);
        if (alpha != 1.0) r.samples.F_hat *= alpha;
        out.samples = std::move(r.samples);
        out.warnings = std::move(r.warnings);
    }
    if (alpha != 1.0) out.model = unrescale_coefficients(out.model, alpha);
    d["warnings"] = out.warnings;
    return out;
}

json Evaluation::to_json() const {
    json j = json::object();
    if (coefficients) {
        j["rmse"] = coefficients->rmse;
        j["nrmse"] = coefficients->nrmse;
        j["w_bar"] = coefficients->w_bar;
        j["truncated_max"] = truncated;
    }
    if (nrmse_f) j["nrmse_f"] = *nrmse_f;
    if (nrmse_f_common) j["nrmse_f_common"] = *nrmse_f_common;
    if (nrmse_f_fd) j["nrmse_f_fd"] = *nrmse_f_fd;
    if (roc) j["auroc"] = roc->auroc;
    return j;
}

Matrix true_field_at_samples(const BenchmarkSystem& sys, const SnapshotSet& data) {
    if (data.n() != sys.n) throw SizeError("data dimension does not match the system");
    Matrix F(data.K(), sys.n);
    Vector dx(sys.n);
    for (Index k = 0; k < data.K(); ++k) {
        const double t = data.pair_index.empty() ? 0.0 : data.pair_index[k] * data.Ts;
        sys.field(t, data.X.row(k).transpose(), dx);
        F.row(k) = dx.transpose();
    }
    return F;
}

Evaluation evaluate(const VectorFieldModel& model, const BenchmarkSystem& sys, const SnapshotSet& data) {
    Evaluation ev;
    if (sys.truth.n() > 0) {
        const auto aligned = align_model(model, sys.truth, &ev.truncated);
        ev.coefficients = coefficient_score(aligned, sys.truth);
    }
    const Matrix F_true = true_field_at_samples(sys, data);
    const Matrix F_hat = model.eval_rows(data.inputs ? data.augmented_X() : data.X);
    ev.nrmse_f = field_nrmse(F_hat, F_true);
    try {
        const auto fd = finite_difference_baseline(data);
        Matrix Ft(fd.rows.size(), data.n()), Fl(fd.rows.size(), data.n());
        for (std::size_t i = 0; i < fd.rows.size(); ++i) {
            Ft.row(static_cast<Index>(i)) = F_true.row(fd.rows[i]);
            Fl.row(static_cast<Index>(i)) = F_hat.row(fd.rows[i]);
        }
        ev.nrmse_f_fd = field_nrmse(fd.F_hat, Ft, 0);
        ev.nrmse_f_common = field_nrmse(Fl, Ft, 0);
    } catch (const SizeError&) {
        // single-pair trajectories: no central differences
    }
    if (sys.adjacency) ev.roc = network_roc(model, *sys.adjacency, sys.link_rule);
    return ev;
}

RunResult run_once(const ExperimentConfig& cfg, std::uint64_t seed, bool capture) {
    RunResult res;
    res.seed = seed;
    res.Ts = cfg.sampling.Ts;
    res.sigma_meas = cfg.sigma_meas;
    res.sigma_proc = cfg.sigma_proc;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        std::optional<BenchmarkSystem> sys;
        if (cfg.system) sys = build_system(*cfg.system, cfg.sigma_proc, seed);
        SnapshotSet data;
        if (cfg.data) {
            data = read_snapshots(*cfg.data);
            res.Ts = data.Ts;
        } else {
            data = sample_snapshots(*sys, sampling_plan(cfg, seed, sys->n), cfg.sigma_meas);
        }
        res.id = identify(cfg.method, data, sys ? &*sys : nullptr, cfg.workers);
        if (sys) res.eval = evaluate(res.id->model, *sys, data);
    } catch (const Error& e) {
        if (!capture) throw;
        res.error = e.what();
        res.error_code = exit_code(e.kind());
        spdlog::warn("seed {} (Ts {}, sigma_meas {}, sigma_proc {}) failed: {}", seed, res.Ts, res.sigma_meas,
                     res.sigma_proc, e.what());
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

namespace {

std::vector<RunResult> run_cells(const std::vector<ExperimentConfig>& cells, const ExperimentConfig& base) {
    std::vector<RunResult> out(cells.size() * base.repeats);
    const int total = static_cast<int>(out.size());
    // parallelism across runs; each run is single threaded then
    const int workers = std::min(base.workers, total);
    parallel_for(total, workers, [&](int i) {
        ExperimentConfig c = cells[i / base.repeats];
        if (workers > 1) c.workers = 1;
        out[i] = run_once(c, base.seed + static_cast<std::uint64_t>(i % base.repeats), true);
    });
    return out;
}

}  // namespace

std::vector<RunResult> run_repeats(const ExperimentConfig& cfg) { return run_cells({cfg}, cfg); }

std::vector<RunResult> run_sweep(const ExperimentConfig& cfg) {
    const auto Ts = cfg.sweep.Ts.empty() ? std::vector<double>{cfg.sampling.Ts} : cfg.sweep.Ts;
    const auto sm = cfg.sweep.sigma_meas.empty() ? std::vector<double>{cfg.sigma_meas} : cfg.sweep.sigma_meas;
    const auto sp = cfg.sweep.sigma_proc.empty() ? std::vector<double>{cfg.sigma_proc} : cfg.sweep.sigma_proc;
    std::vector<ExperimentConfig> cells;
    for (double a : Ts)
        for (double b : sm)
            for (double c : sp) {
                ExperimentConfig e = cfg;
                e.sampling.Ts = a;
                e.sigma_meas = b;
                e.sigma_proc = c;
                cells.push_back(std::move(e));
            }
    return run_cells(cells, cfg);
}

Prediction predict(const VectorFieldModel& model, const BenchmarkSystem& sys, const Vector& x0, double horizon,
                   int points) {
    if (!(horizon > 0.0) || points < 2) throw ConfigError("prediction needs a positive horizon and at least 2 points");
    if (x0.size() != sys.n || model.n() != sys.n) throw SizeError("initial condition does not match the system");
    Prediction p;
    for (int i = 0; i < points; ++i) p.times.push_back(horizon * i / (points - 1));
    const int n = sys.n;
    const int q = model.p();
    Field identified = [&](double t, const Vector& x, Vector& dx) {
        Vector z(n + q);
        z.head(n) = x;
        if (q > 0) z.tail(q) = sys.input(t);
        dx = model.eval(z);
    };
    p.reference = integrate_ode(sys.field, x0, p.times).states;
    p.predicted = integrate_ode(identified, x0, p.times).states;
    return p;
}

}  // namespace klift
