#include <doctest.h>

#include "klift/error.hpp"
#include "klift/simkit.hpp"

#include <cmath>
#include <random>

using namespace klift;

namespace {

std::vector<double> grid(double T, int steps) {
    std::vector<double> t(steps + 1);
    for (int k = 0; k <= steps; ++k) t[k] = T * k / steps;
    return t;
}

// Field value and model value at one random state (and time, for forced systems).
double truth_gap(const BenchmarkSystem& sys, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    Vector x(sys.n);
    for (int i = 0; i < sys.n; ++i) x(i) = U(rng);
    if (sys.name == "toggle")
        for (int i = 0; i < sys.n; ++i) x(i) = std::abs(x(i));
    const double t = std::abs(U(rng)) * 3.0;
    Vector dx(sys.n);
    sys.field(t, x, dx);
    Vector z(sys.n + sys.p);
    z.head(sys.n) = x;
    if (sys.p > 0) z.tail(sys.p) = sys.input(t);
    return (sys.truth.eval(z) - dx).cwiseAbs().maxCoeff() / (1.0 + dx.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("exponential decay to integrator tolerance") {
    const Field F = [](double, const Vector& x, Vector& d) { d = -x; };
    const auto tr = integrate_ode(F, Vector::Ones(1), {0.0, 0.5, 1.0});
    CHECK(std::abs(tr.states(2, 0) - std::exp(-1.0)) < 1e-9);
    CHECK(std::abs(tr.states(1, 0) - std::exp(-0.5)) < 1e-9);
    CHECK(tr.states(0, 0) == 1.0);
}

TEST_CASE("harmonic oscillator keeps its energy") {
    const Field F = [](double, const Vector& x, Vector& d) {
        d(0) = x(1);
        d(1) = -x(0);
    };
    Vector x0(2);
    x0 << 1.0, 0.0;
    const auto tr = integrate_ode(F, x0, grid(100.0, 100));
    double drift = 0.0;
    for (Index k = 0; k < tr.states.rows(); ++k) drift = std::max(drift, std::abs(tr.states.row(k).squaredNorm() - 1.0));
    CHECK(drift < 1e-7);
}

TEST_CASE("Lorenz trajectories stay bounded and separate") {
    const auto sys = lorenz();
    Vector a = Vector::Ones(3);
    Vector b = a;
    b(0) += 1e-8;
    const auto t = grid(40.0, 400);
    const auto ta = integrate_ode(sys.field, a, t);
    const auto tb = integrate_ode(sys.field, b, t);
    CHECK(ta.states.cwiseAbs().maxCoeff() < 100.0);
    double late = 0.0;
    for (Index k = 300; k <= 400; ++k) late = std::max(late, (ta.states.row(k) - tb.states.row(k)).norm());
    CHECK(late > 1e6 * 1e-8);
}

TEST_CASE("blow-up is reported with its time") {
    const Field F = [](double, const Vector& x, Vector& d) { d = x.array().square(); };
    try {
        integrate_ode(F, Vector::Ones(1), {0.0, 2.0});
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.time > 0.9);
        CHECK(e.time <= 1.0 + 1e-6);
    }
}

TEST_CASE("zero process noise is explicit Euler") {
    const Field F = [](double, const Vector& x, Vector& d) { d = -x + x.array().cube().matrix() * 0.1; };
    std::mt19937_64 rng(1);
    const double dt = 0.01;
    const auto tr = integrate_sde(F, Vector::Zero(1), Vector::Constant(1, 0.8), {0.0, 0.5}, dt, rng);
    double x = 0.8;
    for (int k = 0; k < 50; ++k) x += dt * (-x + 0.1 * x * x * x);
    CHECK(std::abs(tr.states(1, 0) - x) < 1e-12);
}

TEST_CASE("Ornstein-Uhlenbeck stationary variance") {
    const Field F = [](double, const Vector& x, Vector& d) { d = -x; };
    const double sigma = 0.5;
    const double dt = 0.01;
    std::mt19937_64 rng(42);
    // 10^5 recorded samples spaced well beyond the correlation time
    const int samples = 100000;
    std::vector<double> times(samples + 1);
    for (int k = 0; k <= samples; ++k) times[k] = 50.0 + 2.0 * k;
    times[0] = 0.0;
    const auto tr = integrate_sde(F, Vector::Constant(1, sigma), Vector::Zero(1), times, dt, rng);
    const Vector v = tr.states.col(0).tail(samples);
    const double mean = v.mean();
    const double var = (v.array() - mean).square().sum() / (samples - 1);
    // Euler-Maruyama stationary variance is sigma^2 / (2 - dt), within a percent of sigma^2 / 2
    CHECK(std::abs(var - sigma * sigma / 2.0) < 0.05 * sigma * sigma / 2.0);
}

TEST_CASE("declared coefficients reproduce every benchmark field") {
    std::mt19937_64 rng(5);
    std::vector<BenchmarkSystem> all{van_der_pol(), unstable_cubic(), lorenz(), duffing_forced(),
                                     duffing_stochastic(0.3), toggle_switch(),
                                     random_kuramoto({}, 3), random_poly_network({}, 4)};
    for (const auto& sys : all) {
        CAPTURE(sys.name);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) worst = std::max(worst, truth_gap(sys, rng));
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("noiseless snapshots are exact flow pairs") {
    const auto sys = van_der_pol();
    SamplingPlan p;
    p.Ts = 0.5;
    p.pairs_per_trajectory = 2;
    p.trajectories = 15;
    p.box.assign(2, {-1.0, 1.0});
    p.seed = 7;
    const auto d = sample_snapshots(sys, p, 0.0);
    CHECK(d.K() == 30);
    REQUIRE(d.meta.X_exact);
    CHECK(d.X == *d.meta.X_exact);
    CHECK(d.Y == *d.meta.Y_exact);
    double gap = 0.0;
    for (Index k = 0; k < d.K(); ++k) {
        const auto tr = integrate_ode(sys.field, d.X.row(k).transpose(), {0.0, p.Ts});
        gap = std::max(gap, (tr.states.row(1) - d.Y.row(k)).norm());
        if (d.pair_index[k] > 0) CHECK(d.X.row(k) == d.Y.row(k - 1));
    }
    CHECK(gap < 1e-7);
    CHECK(d.X.cwiseAbs().col(0).head(1)(0) <= 1.0);
}

TEST_CASE("multiplicative noise has the requested spread") {
    const auto sys = van_der_pol();
    SamplingPlan p;
    p.Ts = 0.1;
    p.pairs_per_trajectory = 10;
    p.trajectories = 500;
    p.box.assign(2, {0.5, 1.0});
    p.seed = 11;
    const double sigma = 0.02;
    const auto d = sample_snapshots(sys, p, sigma);
    const Matrix rel = (d.X.array() / d.meta.X_exact->array() - 1.0).matrix();
    const Vector v = Eigen::Map<const Vector>(rel.data(), rel.size());
    CHECK(v.size() == 10000);
    const double sd = std::sqrt((v.array() - v.mean()).square().sum() / (v.size() - 1));
    CHECK(std::abs(sd - sigma) < 0.05 * sigma);
    // pre- and post-states are measured independently
    CHECK(d.X.row(1) != d.Y.row(0));
}

TEST_CASE("same seed, same data") {
    const auto sys = duffing_stochastic(0.5);
    SamplingPlan p;
    p.Ts = 0.2;
    p.pairs_per_trajectory = 3;
    p.trajectories = 8;
    p.box.assign(2, {-1.0, 1.0});
    p.seed = 99;
    const auto a = sample_snapshots(sys, p, 0.01);
    p.workers = 3;
    const auto b = sample_snapshots(sys, p, 0.01);
    CHECK(a.X == b.X);
    CHECK(a.Y == b.Y);
    p.seed = 100;
    CHECK(sample_snapshots(sys, p, 0.01).X != a.X);
}

TEST_CASE("empty sampling plans are rejected") {
    SamplingPlan p;
    p.trajectories = 0;
    p.box.assign(2, {-1.0, 1.0});
    CHECK_THROWS_AS(sample_snapshots(van_der_pol(), p, 0.0), ConfigError);
}

TEST_CASE("forced Duffing records the held input") {
    const auto sys = duffing_forced();
    SamplingPlan p;
    p.Ts = 0.2;
    p.pairs_per_trajectory = 5;
    p.trajectories = 2;
    p.box.assign(2, {-1.0, 1.0});
    const auto d = sample_snapshots(sys, p, 0.0);
    REQUIRE(d.inputs);
    for (Index k = 0; k < d.K(); ++k) CHECK((*d.inputs)(k, 0) == std::cos(d.pair_index[k] * p.Ts));
}

TEST_CASE("rescaling and the coefficient back-map") {
    const auto sys = van_der_pol();
    SamplingPlan p;
    p.Ts = 0.2;
    p.pairs_per_trajectory = 2;
    p.trajectories = 3;
    p.box.assign(2, {-1.0, 1.0});
    const auto d = sample_snapshots(sys, p, 0.0);
    const auto same = rescale(d, 1.0);
    CHECK(same.X == d.X);
    CHECK(unrescale_coefficients(sys.truth, 1.0) == sys.truth);
    CHECK(rescale(d, 2.0).X == d.X / 2.0);

    // x1' = 0.5 x1 + 3 x1^3 identified on x/2 reads 0.5 and 12
    const auto d1 = Dictionary::monomial(1, 3);
    Matrix W = Matrix::Zero(4, 1);
    W(1, 0) = 0.5;
    W(3, 0) = 12.0;
    const VectorFieldModel scaled(d1, W, 1);
    const Vector back = unrescale_coefficients(scaled, 2.0).coefficients(0);
    CHECK(back(1) == 0.5);
    CHECK(back(3) == 3.0);
    CHECK(rescale_coefficients(unrescale_coefficients(scaled, 2.0), 2.0) == scaled);
    CHECK_THROWS_AS(unrescale_coefficients(toggle_switch().truth, 2.0), UnsupportedError);
    CHECK_THROWS(rescale(d, 0.0));
}

TEST_CASE("Kuramoto link count follows the binomial law") {
    const KuramotoParams prm;  // n = 20, p = 0.3
    double total = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        const auto sys = random_kuramoto(prm, static_cast<std::uint64_t>(s));
        const auto& A = *sys.adjacency;
        int links = 0;
        for (int i = 0; i < prm.n; ++i)
            for (int j = 0; j < prm.n; ++j)
                if (i != j && A(i, j)) ++links;
        total += links;
        const double mean = prm.p_link * prm.n * (prm.n - 1);
        const double sd = std::sqrt(mean * (1.0 - prm.p_link));
        CHECK(std::abs(links - mean) < 3.0 * sd);
    }
    CHECK(std::abs(total / seeds - 114.0) < 10.0);
}

TEST_CASE("polynomial network rows carry exactly n_inter interactions") {
    const auto sys = random_poly_network({20, 5}, 8);
    for (int j = 0; j < 20; ++j) {
        const Vector& w = sys.truth.coefficients(j);
        int nonlinear = 0;
        for (Index k = 0; k < w.size(); ++k)
            if (w(k) != 0.0 && *sys.truth.library(j).monomial_degree(k) >= 2) ++nonlinear;
        CHECK(nonlinear == 5);
        // stabilizing linear term
        const Index l = *sys.truth.library(j).coordinate_index(j);
        CHECK(w(l) <= 0.0);
    }
    const auto again = random_poly_network({20, 5}, 8);
    CHECK(again.truth == sys.truth);
    CHECK(*again.adjacency == *sys.adjacency);
}
