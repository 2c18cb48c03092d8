#pragma once

#include "klift/config.hpp"
#include "klift/koopman_dual.hpp"
#include "klift/metrics.hpp"
#include "klift/simkit.hpp"

#include <optional>
#include <string>
#include <vector>

namespace klift {

// Builds a benchmark system from its config descriptor. Network systems draw their graph from
// "network_seed" when given, otherwise from `seed`.
BenchmarkSystem build_system(const json& spec, double sigma_proc, std::uint64_t seed);

// A single configured interval is applied to all n coordinates.
SamplingPlan sampling_plan(const ExperimentConfig& cfg, std::uint64_t seed, int n);

struct Identification {
    VectorFieldModel model;
    json diagnostics;
    // dual method only: estimated field at the samples
    std::optional<FieldSamples> samples;
    std::vector<std::string> warnings;
};

// Dispatches to the main method (plain, input-augmented, or with extra lift functions) or the dual method.
// `sys` supplies the library when the config asks for "system".
Identification identify(const MethodSpec& method, const SnapshotSet& data, const BenchmarkSystem* sys, int workers = 1);

struct Evaluation {
    std::optional<CoefficientScore> coefficients;
    double truncated = 0.0;  // largest estimated |w| with no counterpart in the truth library
    std::optional<double> nrmse_f;
    // lifting and finite differences over the rows where central differences exist
    std::optional<double> nrmse_f_common;
    std::optional<double> nrmse_f_fd;
    std::optional<RocCurve> roc;
    json to_json() const;
};

// True field at the measured pre-states, t = pair_index * Ts.
Matrix true_field_at_samples(const BenchmarkSystem& sys, const SnapshotSet& data);
Evaluation evaluate(const VectorFieldModel& model, const BenchmarkSystem& sys, const SnapshotSet& data);

struct RunResult {
    std::uint64_t seed = 0;
    double Ts = 0.0;
    double sigma_meas = 0.0;
    double sigma_proc = 0.0;
    std::optional<Identification> id;
    std::optional<Evaluation> eval;
    std::string error;  // set when the run failed
    int error_code = 0;
    double seconds = 0.0;
};

// One simulate-identify-evaluate run for `seed`. Errors are rethrown unless `capture` is set.
RunResult run_once(const ExperimentConfig& cfg, std::uint64_t seed, bool capture = false);
// cfg.repeats runs with seeds cfg.seed, cfg.seed + 1, ...
std::vector<RunResult> run_repeats(const ExperimentConfig& cfg);
// Every (Ts, sigma_meas, sigma_proc) grid point times every repeat seed, in canonical order.
// Failed cells are recorded, not thrown.
std::vector<RunResult> run_sweep(const ExperimentConfig& cfg);

// Identified and reference trajectories from x0 over [0, horizon].
struct Prediction {
    std::vector<double> times;
    Matrix reference;
    Matrix predicted;
};
Prediction predict(const VectorFieldModel& model, const BenchmarkSystem& sys, const Vector& x0, double horizon, int points);

}  // namespace klift
