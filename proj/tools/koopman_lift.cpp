// koopman-lift: simulate benchmark data, identify vector fields, score them.
#include "klift/config.hpp"
#include "klift/error.hpp"
#include "klift/experiment.hpp"
#include "klift/io.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace klift;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> workers;
    std::optional<std::string> method;
    std::optional<int> repeats;
    std::optional<std::string> data;
    std::string model;
    std::string truth;
    bool predict = false;
};

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("koopman-lift");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("KOOPMAN_LIFT_LOG")) {
        const auto lvl = spdlog::level::from_str(env);
        if (lvl == spdlog::level::off && std::string(env) != "off")
            spdlog::warn("KOOPMAN_LIFT_LOG='{}' not recognised; using warn", env);
        else
            spdlog::set_level(lvl);
    }
}

void add_common(CLI::App* sub, Options& o, bool config_required) {
    auto* c = sub->add_option("--config", o.config, "experiment config (JSON)");
    if (config_required) c->required();
    sub->add_option("--seed", o.seed, "base random seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--method", o.method, "main or dual")->check(CLI::IsMember({"main", "dual"}));
    sub->add_option("--repeats", o.repeats, "number of seeds")->check(CLI::PositiveNumber);
    sub->add_option("--data", o.data, "snapshot CSV instead of simulating");
}

ExperimentConfig load(const Options& o) {
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    if (o.out) c.output = *o.out;
    if (o.workers) c.workers = *o.workers;
    if (o.method) c.method.kind = *o.method == "dual" ? MethodKind::Dual : MethodKind::Main;
    if (o.repeats) c.repeats = *o.repeats;
    if (o.data) c.data = fs::path(*o.data);
    if (!c.system && !c.data) throw ConfigError("config: either 'system' or 'data' is required");
    return c;
}

std::string num(double v) { return format_double(v); }

std::string opt_num(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

SnapshotSet obtain_data(const ExperimentConfig& c, const std::optional<BenchmarkSystem>& sys) {
    if (c.data) return read_snapshots(*c.data);
    return sample_snapshots(*sys, sampling_plan(c, c.seed, sys->n), c.sigma_meas);
}

int cmd_simulate(const Options& o) {
    auto c = load(o);
    if (!c.system) throw ConfigError("simulate needs a 'system'");
    const auto sys = build_system(*c.system, c.sigma_proc, c.seed);
    const auto data = sample_snapshots(sys, sampling_plan(c, c.seed, sys.n), c.sigma_meas);
    const fs::path csv = c.output / "snapshots.csv";
    json prov = {{"system", *c.system}, {"config", c.name}, {"pairs_per_trajectory", c.sampling.pairs_per_trajectory},
                 {"trajectories", c.sampling.trajectories}};
    write_snapshots(csv, data, prov);

    const int np = data.n() + data.p();
    const auto N = monomial_count(np, c.method.m);
    std::cout << "wrote " << csv.string() << "\n";
    std::cout << "K = " << data.K() << ", n = " << data.n() << ", p = " << data.p() << "\n";
    std::cout << "main method with m = " << c.method.m << " needs K >= N = " << N << "\n";
    if (c.method.kind == MethodKind::Main && static_cast<std::uint64_t>(data.K()) < N)
        spdlog::warn("K = {} < N = {} for m = {}: the main method will refuse this data; increase K or decrease m",
                     data.K(), N, c.method.m);
    return 0;
}

void write_model(const fs::path& dir, const Identification& id, double seconds) {
    json j = model_to_json(id.model);
    j["diagnostics"] = id.diagnostics;
    write_json_file(dir / "model.json", j);
    write_json_file(dir / "timing.json", json{{"identify_seconds", seconds}});
}

int cmd_identify(const Options& o) {
    auto c = load(o);
    std::optional<BenchmarkSystem> sys;
    if (c.system) sys = build_system(*c.system, c.sigma_proc, c.seed);
    const auto data = obtain_data(c, sys);
    const auto t0 = std::chrono::steady_clock::now();
    const auto id = identify(c.method, data, sys ? &*sys : nullptr, c.workers);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_model(c.output, id, secs);
    for (const auto& w : id.warnings) spdlog::warn("{}", w);
    std::cout << "wrote " << (c.output / "model.json").string() << "\n";
    if (id.diagnostics.contains("regression")) {
        for (const auto& r : id.diagnostics["regression"])
            std::cout << "state " << r["state"] << ": " << r["nonzeros"] << " nonzero coefficient(s), "
                      << r["mode"].get<std::string>() << " penalty " << num(r["penalty"].get<double>()) << "\n";
    }
    return 0;
}

int cmd_evaluate(const Options& o) {
    if (o.model.empty()) throw ConfigError("evaluate needs --model");
    const auto model = model_from_json(read_json_file(o.model));
    std::ostringstream os;
    os << "metric,value\n";
    fs::path out_dir = o.out ? fs::path(*o.out) : fs::path("out");
    if (!o.truth.empty()) {
        const auto truth = model_from_json(read_json_file(o.truth));
        double dropped = 0.0;
        const auto s = coefficient_score(align_model(model, truth, &dropped), truth);
        os << "rmse," << num(s.rmse) << "\nnrmse," << num(s.nrmse) << "\nw_bar," << num(s.w_bar) << "\n";
        if (o.data) {
            const auto data = read_snapshots(*o.data);
            const Matrix Z = data.inputs ? data.augmented_X() : data.X;
            os << "nrmse_f," << num(field_nrmse(model.eval_rows(Z), truth.eval_rows(Z))) << "\n";
        }
    } else {
        auto c = load(o);
        if (!o.out) out_dir = c.output;
        if (!c.system) throw ConfigError("evaluate needs --truth or a config with a 'system'");
        const auto sys = build_system(*c.system, c.sigma_proc, c.seed);
        const auto data = obtain_data(c, sys);
        const auto ev = evaluate(model, sys, data);
        const auto j = ev.to_json();
        for (const char* k : {"rmse", "nrmse", "w_bar", "truncated_max", "nrmse_f", "nrmse_f_common", "nrmse_f_fd", "auroc"})
            if (j.contains(k)) os << k << "," << num(j[k].get<double>()) << "\n";
        if (o.predict) {
            if (!(c.predict_horizon > 0.0)) throw ConfigError("evaluate.predict_horizon must be set for --predict");
            auto rng = make_rng(c.seed, 4);
            const auto& box = c.sampling.box.empty() ? sys.box : c.sampling.box;
            Vector x0(sys.n);
            for (int i = 0; i < sys.n; ++i) {
                const auto [lo, hi] = box.size() == 1 ? box[0] : box[i];
                x0(i) = std::uniform_real_distribution<double>(lo, hi)(rng);
            }
            const auto p = predict(model, sys, x0, c.predict_horizon, c.predict_points);
            std::ostringstream ps;
            ps << "t";
            for (int i = 1; i <= sys.n; ++i) ps << ",reference_x" << i;
            for (int i = 1; i <= sys.n; ++i) ps << ",predicted_x" << i;
            ps << "\n";
            for (std::size_t r = 0; r < p.times.size(); ++r) {
                ps << num(p.times[r]);
                for (int i = 0; i < sys.n; ++i) ps << "," << num(p.reference(r, i));
                for (int i = 0; i < sys.n; ++i) ps << "," << num(p.predicted(r, i));
                ps << "\n";
            }
            write_text_file(out_dir / "prediction.csv", ps.str());
        }
    }
    write_text_file(out_dir / "scores.csv", os.str());
    std::cout << os.str();
    return 0;
}

void write_runs(const fs::path& dir, const std::vector<RunResult>& runs) {
    std::ostringstream os, tm;
    os << "Ts,sigma_meas,sigma_proc,seed,status,nrmse,rmse,nrmse_f,nrmse_f_common,nrmse_f_fd,auroc,error\n";
    tm << "Ts,sigma_meas,sigma_proc,seed,seconds\n";
    for (const auto& r : runs) {
        os << num(r.Ts) << "," << num(r.sigma_meas) << "," << num(r.sigma_proc) << "," << r.seed << ",";
        if (!r.error.empty()) {
            std::string e = r.error;
            for (char& ch : e)
                if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
            os << "error,,,,,,," << e << "\n";
        } else {
            const auto& ev = r.eval;
            const bool cs = ev && ev->coefficients;
            os << "ok," << (cs ? num(ev->coefficients->nrmse) : "") << "," << (cs ? num(ev->coefficients->rmse) : "")
               << "," << (ev ? opt_num(ev->nrmse_f) : "") << "," << (ev ? opt_num(ev->nrmse_f_common) : "") << ","
               << (ev ? opt_num(ev->nrmse_f_fd) : "") << ","
               << (ev && ev->roc ? num(ev->roc->auroc) : "") << ",\n";
        }
        tm << num(r.Ts) << "," << num(r.sigma_meas) << "," << num(r.sigma_proc) << "," << r.seed << ","
           << num(r.seconds) << "\n";
    }
    write_text_file(dir / "runs.csv", os.str());
    write_text_file(dir / "timing.csv", tm.str());
}

// per grid point means over the successful seeds
std::string summarize(const std::vector<RunResult>& runs, int repeats) {
    std::ostringstream os;
    os << "Ts,sigma_meas,sigma_proc,ok,failed,mean_nrmse,mean_nrmse_f,mean_nrmse_f_common,mean_nrmse_f_fd,mean_auroc\n";
    for (std::size_t s = 0; s < runs.size(); s += repeats) {
        int ok = 0;
        double a[5] = {0, 0, 0, 0, 0};
        int cnt[5] = {0, 0, 0, 0, 0};
        for (int r = 0; r < repeats; ++r) {
            const auto& run = runs[s + r];
            if (!run.error.empty() || !run.eval) continue;
            ++ok;
            const auto& ev = *run.eval;
            const std::optional<double> vals[5] = {
                ev.coefficients ? std::optional<double>(ev.coefficients->nrmse) : std::nullopt, ev.nrmse_f,
                ev.nrmse_f_common, ev.nrmse_f_fd, ev.roc ? std::optional<double>(ev.roc->auroc) : std::nullopt};
            for (int i = 0; i < 5; ++i)
                if (vals[i]) {
                    a[i] += *vals[i];
                    ++cnt[i];
                }
        }
        os << num(runs[s].Ts) << "," << num(runs[s].sigma_meas) << "," << num(runs[s].sigma_proc) << "," << ok << ","
           << repeats - ok;
        for (int i = 0; i < 5; ++i) os << "," << (cnt[i] ? num(a[i] / cnt[i]) : "");
        os << "\n";
    }
    return os.str();
}

int cmd_sweep(const Options& o) {
    const auto c = load(o);
    const auto runs = run_sweep(c);
    write_runs(c.output, runs);
    const auto summary = summarize(runs, c.repeats);
    write_text_file(c.output / "summary.csv", summary);
    std::cout << summary;
    int failed = 0;
    for (const auto& r : runs) failed += !r.error.empty();
    if (failed) spdlog::warn("{} of {} runs failed; see runs.csv", failed, runs.size());
    return 0;
}

int cmd_network(const Options& o) {
    const auto c = load(o);
    if (c.method.kind != MethodKind::Dual) throw ConfigError("network needs method.kind = \"dual\"");
    if (!c.system) throw ConfigError("network needs a simulated network system");
    const auto runs = run_repeats(c);
    std::ostringstream roc, adj;
    roc << "seed,threshold,tpr,fpr\n";
    adj << "seed,source,target,score,predicted,truth\n";
    for (const auto& r : runs) {
        if (!r.error.empty()) {
            // a failed run has no ROC; surface the first failure with its exit code
            spdlog::error("seed {}: {}", r.seed, r.error);
            return r.error_code;
        }
        if (!r.eval || !r.eval->roc) throw ConfigError("system has no ground-truth network");
        const auto& curve = *r.eval->roc;
        for (std::size_t i = 0; i < curve.thresholds.size(); ++i)
            roc << r.seed << "," << num(curve.thresholds[i]) << "," << num(curve.tpr[i]) << "," << num(curve.fpr[i]) << "\n";
        if (c.network_threshold) {
            const auto sys = build_system(*c.system, c.sigma_proc, r.seed);
            const Matrix S = link_scores(r.id->model);
            for (const auto& [i, j] : scored_pairs(sys.n, sys.link_rule))
                adj << r.seed << "," << i + 1 << "," << j + 1 << "," << num(S(i, j)) << ","
                    << (S(i, j) >= *c.network_threshold ? 1 : 0) << "," << ((*sys.adjacency)(i, j) ? 1 : 0) << "\n";
        }
    }
    write_runs(c.output, runs);
    write_text_file(c.output / "roc.csv", roc.str());
    if (c.network_threshold) write_text_file(c.output / "adjacency.csv", adj.str());
    const auto summary = summarize(runs, c.repeats);
    write_text_file(c.output / "summary.csv", summary);
    std::cout << summary;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Nonlinear system identification by Koopman lifting"};
    app.require_subcommand(1);
    Options o;
    auto* sim = app.add_subcommand("simulate", "simulate a benchmark system and write snapshot pairs");
    add_common(sim, o, true);
    auto* idf = app.add_subcommand("identify", "identify a vector field from snapshot pairs");
    add_common(idf, o, false);
    auto* ev = app.add_subcommand("evaluate", "score an identified model");
    add_common(ev, o, false);
    ev->add_option("--model", o.model, "model JSON written by identify")->required();
    ev->add_option("--truth", o.truth, "reference model JSON");
    ev->add_flag("--predict", o.predict, "also integrate the identified field (prediction.csv)");
    auto* sw = app.add_subcommand("sweep", "grid over Ts / noise levels and seeds");
    add_common(sw, o, true);
    auto* net = app.add_subcommand("network", "network reconstruction: ROC and AUROC");
    add_common(net, o, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (*sim) return cmd_simulate(o);
        if (*idf) {
            if (o.config.empty() && !o.data) throw ConfigError("identify needs --config or --data");
            return cmd_identify(o);
        }
        if (*ev) return cmd_evaluate(o);
        if (*sw) return cmd_sweep(o);
        if (*net) return cmd_network(o);
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return exit_code(e.kind());
    } catch (const json::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const fs::filesystem_error& e) {
        spdlog::error("{}", e.what());
        return 4;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 3;
    }
    return 0;
}
