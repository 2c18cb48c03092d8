#pragma once

#include "klift/bases.hpp"
#include "klift/model.hpp"
#include "klift/snapshots.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace klift {

// dx/dt = F(t, x)
using Field = std::function<void(double t, const Vector& x, Vector& dxdt)>;

struct Trajectory {
    std::vector<double> times;
    Matrix states;  // one row per time
};

struct OdeOptions {
    double rtol = 1e-9;
    double atol = 1e-11;
    double blowup = 1e8;
    double initial_dt = 1e-3;
};

// Adaptive Dormand-Prince 5(4) with dense output at `times` (ascending, times[0] is the start).
Trajectory integrate_ode(const Field& F, const Vector& x0, const std::vector<double>& times,
                         const OdeOptions& opt = {});

// Euler-Maruyama with fixed step dt: dx = F dt + diag(sigma) dW. Every sample time must be a multiple of dt.
Trajectory integrate_sde(const Field& F, const Vector& sigma, const Vector& x0, const std::vector<double>& times,
                         double dt, std::mt19937_64& rng, double blowup = 1e8);

enum class LinkRule {
    ExcludeSelf,  // a state's own variable is not a link (phase oscillators)
    IncludeSelf,
};

struct BenchmarkSystem {
    std::string name;
    int n = 0;
    int p = 0;
    Field field;
    // inputs as a function of time (p entries); empty when p == 0
    std::function<Vector(double)> input;
    Vector sigma_proc;  // per-component process noise, empty for deterministic systems
    VectorFieldModel truth;
    std::optional<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> adjacency;  // (source, target)
    LinkRule link_rule = LinkRule::IncludeSelf;
    // default initial-condition box for sampling
    std::vector<std::pair<double, double>> box;
};

BenchmarkSystem van_der_pol();
BenchmarkSystem unstable_cubic();
BenchmarkSystem lorenz();
BenchmarkSystem duffing_forced();
BenchmarkSystem duffing_stochastic(double sigma_proc);
BenchmarkSystem toggle_switch();
// dtheta_i = omega_i + (C/n) sum_j a_ij sin(theta_j - theta_i); A(i, j) = a_ij
BenchmarkSystem kuramoto(const Vector& omega, const Matrix& A, double C);
// dx_j = -w1_j x_j + sum of the listed monomial terms
struct PolyTerm {
    int target = 0;
    MultiIndex exponents;
    double coefficient = 0.0;
};
BenchmarkSystem poly_network(int n, const Vector& w1, const std::vector<PolyTerm>& terms);
// linear system dx = A x over Monomial(n, 1)
BenchmarkSystem linear_system(const Matrix& A);

struct KuramotoParams {
    int n = 20;
    double p_link = 0.3;
    double C = 10.0;
    double omega_max = 0.1;
};
struct PolyNetworkParams {
    int n = 20;
    int n_inter = 5;
};
BenchmarkSystem random_kuramoto(const KuramotoParams& params, std::uint64_t seed);
BenchmarkSystem random_poly_network(const PolyNetworkParams& params, std::uint64_t seed);

struct SamplingPlan {
    double Ts = 0.1;
    int pairs_per_trajectory = 1;
    int trajectories = 1;
    std::vector<std::pair<double, double>> box;
    std::uint64_t seed = 0;
    int sde_substeps = 100;
    int workers = 1;
};

// Multiplicative noise x (1 + sigma v), drawn independently for every measured x_k and y_k.
SnapshotSet sample_snapshots(const BenchmarkSystem& sys, const SamplingPlan& plan, double sigma_meas);

// States divided by alpha.
SnapshotSet rescale(const SnapshotSet& data, double alpha);
// largest absolute state entry, maps the data into [-1, 1]
double auto_scale(const SnapshotSet& data);
// Coefficients identified on data/alpha back to the original scale: w_k = w'_k / alpha^(m_k - 1).
VectorFieldModel unrescale_coefficients(const VectorFieldModel& model, double alpha);
// Forward map w'_k = alpha^(m_k - 1) w_k.
VectorFieldModel rescale_coefficients(const VectorFieldModel& model, double alpha);

// Deterministic RNG stream for (seed, stream, index).
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

}  // namespace klift
