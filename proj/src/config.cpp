#include "klift/config.hpp"

#include "klift/error.hpp"

#include <algorithm>
#include <set>

namespace klift {

namespace {

std::string join(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError((where.empty() ? "config" : where) + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError(join(where, it.key()) + ": unknown key");
}

double num(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
    return j.get<int>();
}

std::string str(const json& j, const std::string& where) {
    if (!j.is_string()) throw ConfigError(where + ": expected a string");
    return j.get<std::string>();
}

std::vector<double> num_list(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(num(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

void check_dictionary_spec(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a dictionary descriptor object");
    if (!j.contains("kind")) throw ConfigError(where + ".kind: missing");
    const auto kind = str(j["kind"], where + ".kind");
    if (kind == "monomial") {
        check_keys(j, where, {"kind", "n", "m"});
        if (!j.contains("m")) throw ConfigError(where + ".m: missing");
        if (integer(j["m"], where + ".m") < 0) throw ConfigError(where + ".m: must be >= 0");
    } else if (kind == "rbf") {
        check_keys(j, where, {"kind", "gamma", "centers"});
        if (j.contains("gamma") && !(num(j["gamma"], where + ".gamma") > 0.0))
            throw ConfigError(where + ".gamma: must be positive");
        if (j.contains("centers") && !(j["centers"].is_array() || j["centers"] == "samples"))
            throw ConfigError(where + ".centers: expected \"samples\" or a list of points");
    } else if (kind == "hill") {
        check_keys(j, where, {"kind", "n", "ks", "ls"});
        for (const char* k : {"ks", "ls"})
            if (!j.contains(k) || !j[k].is_array()) throw ConfigError(join(where, k) + ": expected an integer list");
    } else if (kind == "sindiff") {
        check_keys(j, where, {"kind", "n", "target"});
    } else if (kind == "composite") {
        check_keys(j, where, {"kind", "parts"});
        if (!j.contains("parts") || !j["parts"].is_array()) throw ConfigError(where + ".parts: expected a list");
        for (std::size_t i = 0; i < j["parts"].size(); ++i)
            check_dictionary_spec(j["parts"][i], where + ".parts[" + std::to_string(i) + "]");
    } else {
        throw ConfigError(where + ".kind: unknown dictionary kind '" + kind + "'");
    }
}

void check_system_spec(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("name")) throw ConfigError(where + ".name: missing");
    const auto name = str(j["name"], where + ".name");
    static const std::set<std::string> plain = {"vanderpol", "unstable", "lorenz", "duffing_forced",
                                                "duffing_stochastic", "toggle"};
    if (plain.count(name)) {
        check_keys(j, where, {"name"});
    } else if (name == "kuramoto") {
        check_keys(j, where, {"name", "n", "p_link", "C", "omega_max", "network_seed"});
    } else if (name == "polynet") {
        check_keys(j, where, {"name", "n", "n_inter", "network_seed"});
    } else if (name == "linear") {
        check_keys(j, where, {"name", "A"});
        if (!j.contains("A") || !j["A"].is_array()) throw ConfigError(where + ".A: expected a square matrix");
    } else {
        throw ConfigError(where + ".name: unknown system '" + name + "'");
    }
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    check_keys(j, "", {"name", "system", "data", "sampling", "noise", "method", "seed", "repeats", "workers", "sweep",
                       "network", "evaluate", "output", "comment"});
    ExperimentConfig c;
    if (j.contains("name")) c.name = str(j["name"], "name");
    if (j.contains("system")) {
        check_system_spec(j["system"], "system");
        c.system = j["system"];
    }
    if (j.contains("data")) c.data = str(j["data"], "data");
    if (!c.system && !c.data) throw ConfigError("config: either 'system' or 'data' is required");

    if (j.contains("sampling")) {
        const auto& s = j["sampling"];
        check_keys(s, "sampling", {"Ts", "pairs_per_trajectory", "trajectories", "box", "sde_substeps"});
        if (s.contains("Ts")) c.sampling.Ts = num(s["Ts"], "sampling.Ts");
        if (s.contains("pairs_per_trajectory"))
            c.sampling.pairs_per_trajectory = integer(s["pairs_per_trajectory"], "sampling.pairs_per_trajectory");
        if (s.contains("trajectories")) c.sampling.trajectories = integer(s["trajectories"], "sampling.trajectories");
        if (s.contains("sde_substeps")) c.sampling.sde_substeps = integer(s["sde_substeps"], "sampling.sde_substeps");
        if (s.contains("box")) {
            const auto& b = s["box"];
            if (b.is_array() && b.size() == 2 && b[0].is_number()) {
                // same interval for every coordinate; expanded once n is known
                c.sampling.box.push_back({num(b[0], "sampling.box[0]"), num(b[1], "sampling.box[1]")});
            } else if (b.is_array()) {
                for (std::size_t i = 0; i < b.size(); ++i) {
                    const auto where = "sampling.box[" + std::to_string(i) + "]";
                    if (!b[i].is_array() || b[i].size() != 2) throw ConfigError(where + ": expected [lo, hi]");
                    c.sampling.box.push_back({num(b[i][0], where), num(b[i][1], where)});
                }
            } else {
                throw ConfigError("sampling.box: expected [lo, hi] or a list of intervals");
            }
            for (const auto& [lo, hi] : c.sampling.box)
                if (!(hi >= lo)) throw ConfigError("sampling.box: empty interval");
        }
        if (!(c.sampling.Ts > 0.0)) throw ConfigError("sampling.Ts: must be positive");
        if (c.sampling.trajectories < 1) throw ConfigError("sampling.trajectories: must be >= 1 (empty dataset)");
        if (c.sampling.pairs_per_trajectory < 1) throw ConfigError("sampling.pairs_per_trajectory: must be >= 1");
        if (c.sampling.sde_substeps < 1) throw ConfigError("sampling.sde_substeps: must be >= 1");
    }
    if (j.contains("noise")) {
        const auto& s = j["noise"];
        check_keys(s, "noise", {"sigma_meas", "sigma_proc"});
        if (s.contains("sigma_meas")) c.sigma_meas = num(s["sigma_meas"], "noise.sigma_meas");
        if (s.contains("sigma_proc")) c.sigma_proc = num(s["sigma_proc"], "noise.sigma_proc");
        if (c.sigma_meas < 0.0 || c.sigma_proc < 0.0) throw ConfigError("noise: standard deviations must be >= 0");
    }
    if (j.contains("method")) {
        const auto& s = j["method"];
        check_keys(s, "method", {"kind", "m", "m_F", "extra", "test_dictionary", "library", "regression", "rescale",
                                 "rcond", "branch_policy", "rank_policy"});
        auto& m = c.method;
        if (s.contains("kind")) {
            const auto k = str(s["kind"], "method.kind");
            if (k == "main") m.kind = MethodKind::Main;
            else if (k == "dual") m.kind = MethodKind::Dual;
            else throw ConfigError("method.kind: expected \"main\" or \"dual\"");
        }
        if (s.contains("m")) m.m = integer(s["m"], "method.m");
        if (s.contains("m_F")) m.m_F = integer(s["m_F"], "method.m_F");
        else if (s.contains("m")) m.m_F = m.m;
        if (m.kind == MethodKind::Main && !s.contains("extra") && (m.m_F < 1 || m.m < m.m_F))
            throw ConfigError("method: need m >= m_F >= 1");
        if (s.contains("extra")) {
            check_dictionary_spec(s["extra"], "method.extra");
            m.extra = s["extra"];
        }
        if (s.contains("test_dictionary")) {
            check_dictionary_spec(s["test_dictionary"], "method.test_dictionary");
            m.test_dictionary = s["test_dictionary"];
        }
        if (s.contains("library")) {
            if (s["library"] != "system") check_dictionary_spec(s["library"], "method.library");
            m.library = s["library"];
        }
        if (s.contains("regression")) {
            const auto& r = s["regression"];
            check_keys(r, "method.regression", {"mode", "lambda", "rho", "max_iter", "tol", "standardize"});
            if (r.contains("mode")) m.regression.mode = regression_mode_from_string(str(r["mode"], "method.regression.mode"));
            if (r.contains("lambda")) m.lambda = num(r["lambda"], "method.regression.lambda");
            if (r.contains("rho")) m.rho = num(r["rho"], "method.regression.rho");
            if ((m.lambda && *m.lambda < 0.0) || (m.rho && *m.rho < 0.0))
                throw ConfigError("method.regression: penalties must be >= 0");
            if (r.contains("max_iter")) m.regression.max_iter = integer(r["max_iter"], "method.regression.max_iter");
            if (r.contains("tol")) m.regression.tol = num(r["tol"], "method.regression.tol");
            if (!(m.regression.tol > 0.0)) throw ConfigError("method.regression.tol: must be positive");
            if (r.contains("standardize")) {
                if (!r["standardize"].is_boolean()) throw ConfigError("method.regression.standardize: expected a boolean");
                m.regression.standardize = r["standardize"].get<bool>();
            }
        }
        if (s.contains("rescale")) {
            const auto& r = s["rescale"];
            if (r == "none") m.rescale = 0.0;
            else if (r == "auto") m.rescale = -1.0;
            else if (r.is_number() && r.get<double>() > 0.0) m.rescale = r.get<double>();
            else throw ConfigError("method.rescale: expected \"none\", \"auto\" or a positive number");
        }
        if (s.contains("rcond")) m.rcond = num(s["rcond"], "method.rcond");
        if (s.contains("branch_policy")) {
            const auto b = str(s["branch_policy"], "method.branch_policy");
            if (b == "strict") m.branch_policy = BranchPolicy::Strict;
            else if (b == "real_part") m.branch_policy = BranchPolicy::RealPart;
            else throw ConfigError("method.branch_policy: expected \"strict\" or \"real_part\"");
        }
        if (s.contains("rank_policy")) {
            const auto b = str(s["rank_policy"], "method.rank_policy");
            if (b == "error") m.rank_policy = RankPolicy::Error;
            else if (b == "restrict") m.rank_policy = RankPolicy::Restrict;
            else throw ConfigError("method.rank_policy: expected \"error\" or \"restrict\"");
        }
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
            throw ConfigError("seed: expected a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("repeats")) c.repeats = integer(j["repeats"], "repeats");
    if (j.contains("workers")) c.workers = integer(j["workers"], "workers");
    if (c.repeats < 1) throw ConfigError("repeats: must be >= 1");
    if (c.workers < 1) throw ConfigError("workers: must be >= 1");
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        check_keys(s, "sweep", {"Ts", "sigma_meas", "sigma_proc"});
        if (s.contains("Ts")) c.sweep.Ts = num_list(s["Ts"], "sweep.Ts");
        if (s.contains("sigma_meas")) c.sweep.sigma_meas = num_list(s["sigma_meas"], "sweep.sigma_meas");
        if (s.contains("sigma_proc")) c.sweep.sigma_proc = num_list(s["sigma_proc"], "sweep.sigma_proc");
    }
    if (j.contains("network")) {
        check_keys(j["network"], "network", {"threshold"});
        if (j["network"].contains("threshold")) c.network_threshold = num(j["network"]["threshold"], "network.threshold");
    }
    if (j.contains("evaluate")) {
        const auto& s = j["evaluate"];
        check_keys(s, "evaluate", {"predict_horizon", "predict_points"});
        if (s.contains("predict_horizon")) c.predict_horizon = num(s["predict_horizon"], "evaluate.predict_horizon");
        if (s.contains("predict_points")) c.predict_points = integer(s["predict_points"], "evaluate.predict_points");
    }
    if (j.contains("output")) c.output = str(j["output"], "output");
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    auto c = parse_config(read_json_file(path));
    if (c.data && c.data->is_relative()) c.data = path.parent_path() / *c.data;
    return c;
}

Dictionary build_dictionary(const json& spec, int n, const Matrix& samples) {
    const auto kind = spec.at("kind").get<std::string>();
    if (spec.contains("n") && spec["n"].get<int>() != n)
        throw ConfigError("dictionary declares n = " + std::to_string(spec["n"].get<int>()) + " but the data has n = " +
                          std::to_string(n));
    if (kind == "monomial") return Dictionary::monomial(n, spec.at("m").get<int>());
    if (kind == "rbf") {
        const double gamma = spec.value("gamma", 0.1);
        if (!spec.contains("centers") || spec["centers"] == "samples") return Dictionary::rbf(samples, gamma);
        json resolved = spec;
        return dictionary_from_json(resolved);
    }
    if (kind == "hill") {
        auto ks = spec.at("ks").get<std::vector<int>>();
        for (int& k : ks) --k;
        return Dictionary::hill(n, ks, spec.at("ls").get<std::vector<int>>());
    }
    if (kind == "sindiff") {
        if (!spec.contains("target")) throw ConfigError("sine-difference dictionary needs a target outside per-state libraries");
        return Dictionary::sin_diff(n, spec["target"].get<int>() - 1);
    }
    if (kind == "composite") {
        std::vector<Dictionary> parts;
        for (const auto& p : spec.at("parts")) parts.push_back(build_dictionary(p, n, samples));
        return Dictionary::composite(parts);
    }
    throw ConfigError("unknown dictionary kind '" + kind + "'");
}

}  // namespace klift
