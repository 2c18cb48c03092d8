#pragma once

#include "klift/io.hpp"
#include "klift/numlin.hpp"
#include "klift/koopman_main.hpp"
#include "klift/sparse_reg.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace klift {

struct SamplingSpec {
    double Ts = 0.1;
    int pairs_per_trajectory = 1;
    int trajectories = 1;
    std::vector<std::pair<double, double>> box;  // empty: system default
    int sde_substeps = 100;
};

enum class MethodKind { Main, Dual };

struct MethodSpec {
    MethodKind kind = MethodKind::Main;
    int m = 3;
    int m_F = 3;
    std::optional<json> extra;            // main: extra lift functions
    std::optional<json> test_dictionary;  // dual: test functions (default rbf on samples, gamma 0.1)
    json library = "system";              // dual: "system" or a dictionary spec
    RegressionSpec regression;
    // penalty for whichever sparse mode is resolved; unset keeps the defaults
    std::optional<double> lambda;
    std::optional<double> rho;
    // 0 = none, < 0 = auto (largest absolute entry), > 0 = fixed factor
    double rescale = 0.0;
    double rcond = kDefaultRcond;
    BranchPolicy branch_policy = BranchPolicy::Strict;
    RankPolicy rank_policy = RankPolicy::Error;
};

struct SweepSpec {
    std::vector<double> Ts;
    std::vector<double> sigma_meas;
    std::vector<double> sigma_proc;
    bool empty() const { return Ts.empty() && sigma_meas.empty() && sigma_proc.empty(); }
};

struct ExperimentConfig {
    std::string name;
    std::optional<json> system;              // {"name": ..., params}
    std::optional<std::filesystem::path> data;  // snapshot CSV instead of a system
    SamplingSpec sampling;
    double sigma_meas = 0.01;
    double sigma_proc = 0.0;
    MethodSpec method;
    std::uint64_t seed = 1;
    int repeats = 1;
    int workers = 1;
    SweepSpec sweep;
    std::optional<double> network_threshold;
    double predict_horizon = 0.0;
    int predict_points = 200;
    std::filesystem::path output = "out";
};

// Validates against the schema; unknown keys and type errors raise ConfigError naming the field.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Build a dictionary from a config descriptor. `n` is the state dimension, `samples` the RBF centers
// used when "centers" is "samples".
Dictionary build_dictionary(const json& spec, int n, const Matrix& samples);

}  // namespace klift
