#include <doctest.h>

#include "klift/error.hpp"
#include "klift/koopman_main.hpp"
#include "klift/metrics.hpp"
#include "klift/simkit.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

using namespace klift;

namespace {

SnapshotSet linear_flow(const Matrix& A, double Ts, Index K, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    SnapshotSet d;
    d.Ts = Ts;
    d.X.resize(K, A.rows());
    for (Index k = 0; k < K; ++k)
        for (Index i = 0; i < A.rows(); ++i) d.X(k, i) = U(rng);
    const Matrix Phi = (A * Ts).exp();
    d.Y = d.X * Phi.transpose();
    d.trajectory_id.resize(K);
    d.pair_index.assign(K, 0);
    for (Index k = 0; k < K; ++k) d.trajectory_id[k] = static_cast<int>(k);
    return d;
}

SnapshotSet vdp_data(double Ts, std::uint64_t seed, double sigma = 0.0) {
    SamplingPlan p;
    p.Ts = Ts;
    p.pairs_per_trajectory = 2;
    p.trajectories = 15;
    p.box.assign(2, {-1.0, 1.0});
    p.seed = seed;
    return sample_snapshots(van_der_pol(), p, sigma);
}

}  // namespace

TEST_CASE("scalar decay is recovered exactly") {
    const Matrix A = Matrix::Constant(1, 1, -1.0);
    const auto data = linear_flow(A, 0.1, 5, 3);
    const auto res = identify_main(data, 1, 1);
    const Matrix& L = res.generator.L;
    REQUIRE(L.rows() == 2);
    CHECK(std::abs(L(0, 0)) < 1e-10);
    CHECK(std::abs(L(1, 1) + 1.0) < 1e-10);
    CHECK(std::abs(res.model.coefficients(0)(1) + 1.0) < 1e-10);
    CHECK(std::abs(res.model.coefficients(0)(0)) < 1e-10);
    // field at the samples from the exact generator
    const Matrix F = vector_field_at_samples_main(res.generator, data);
    for (Index k = 0; k < data.K(); ++k) CHECK(std::abs(F(k, 0) + data.X(k, 0)) < 1e-9);
    SnapshotSet one = data;
    one.X = Matrix::Constant(1, 1, 0.7);
    CHECK(std::abs(vector_field_at_samples_main(res.generator, one)(0, 0) + 0.7) < 1e-9);
}

TEST_CASE("linear systems are recovered for large and small Ts") {
    Matrix A(2, 2);
    A << -0.5, 1.0, -1.0, -0.3;
    for (double Ts : {0.05, 0.5, 1.5}) {
        CAPTURE(Ts);
        const auto res = identify_main(linear_flow(A, Ts, 8, 11), 1, 1);
        const Matrix W = res.model.coefficient_matrix();
        CHECK(W.row(0).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((W.bottomRows(2).transpose() - A).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("too few snapshots for the lift degree") {
    const auto data = vdp_data(0.5, 1);
    try {
        identify_main(data, 7, 3);  // N = 36 > K = 30
        FAIL("expected SizeError");
    } catch (const SizeError& e) {
        CHECK(std::string(e.what()).find("(m+n)!") != std::string::npos);
        CHECK(std::string(e.what()).find("decrease m") != std::string::npos);
    }
    CHECK_THROWS_AS(identify_main(data, 2, 3), ConfigError);
}

TEST_CASE("constant trajectories give a zero field") {
    auto data = vdp_data(0.5, 2);
    data.Y = data.X;
    const auto res = identify_main(data, 3, 3);
    CHECK(res.model.coefficient_matrix().cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("repeated samples are rank deficient") {
    SnapshotSet d = linear_flow(Matrix::Constant(1, 1, -1.0), 0.1, 6, 1);
    d.X.setConstant(0.3);
    d.Y.setConstant(0.3 * std::exp(-0.1));
    CHECK_THROWS_AS(identify_main(d, 2, 2), ConditioningError);
    MainOptions opt;
    opt.rank_policy = RankPolicy::Restrict;
    const auto res = identify_main(d, 2, 2, opt);
    CHECK(res.generator.pinv.rank == 1);
    CHECK_FALSE(res.warnings.empty());
}

TEST_CASE("sampling a rotation at half its period hits the branch cut") {
    Matrix A(2, 2);
    A << 0.0, 1.0, -1.0, 0.0;
    const auto data = linear_flow(A, M_PI, 6, 5);
    CHECK_THROWS_AS(identify_main(data, 1, 1), BranchError);
}

TEST_CASE("affine forced system with held inputs") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double Ts = 0.05;
    SnapshotSet d;
    d.Ts = Ts;
    const Index K = 6;
    d.X.resize(K, 1);
    d.Y.resize(K, 1);
    d.inputs = Matrix(K, 1);
    for (Index k = 0; k < K; ++k) {
        const double x = U(rng), u = U(rng);
        d.X(k, 0) = x;
        (*d.inputs)(k, 0) = u;
        d.Y(k, 0) = std::exp(-Ts) * x + (1.0 - std::exp(-Ts)) * u;
        d.trajectory_id.push_back(static_cast<int>(k));
        d.pair_index.push_back(0);
    }
    const auto res = identify_main_with_inputs(d, 1, 1);
    CHECK(res.model.n() == 1);
    CHECK(res.model.p() == 1);
    const Vector& w = res.model.coefficients(0);
    REQUIRE(w.size() == 3);
    CHECK(std::abs(w(0)) < 1e-6);
    CHECK(std::abs(w(1) + 1.0) < 1e-6);
    CHECK(std::abs(w(2) - 1.0) < 1e-6);
}

TEST_CASE("Hill term coefficient from a closed-form flow") {
    // dx/dt = 1/(1+x)  =>  x(t) = -1 + sqrt((1+x0)^2 + 2t)
    const double Ts = 1e-3;
    SnapshotSet d;
    d.Ts = Ts;
    const Index K = 12;
    d.X.resize(K, 1);
    d.Y.resize(K, 1);
    for (Index k = 0; k < K; ++k) {
        const double x0 = 0.1 + 0.15 * static_cast<double>(k);
        d.X(k, 0) = x0;
        d.Y(k, 0) = -1.0 + std::sqrt((1.0 + x0) * (1.0 + x0) + 2.0 * Ts);
        d.trajectory_id.push_back(static_cast<int>(k));
        d.pair_index.push_back(0);
    }
    const auto res = identify_main_augmented(d, 1, Dictionary::hill(1, {0}, {1}));
    const Vector& w = res.model.coefficients(0);
    REQUIRE(w.size() == 3);
    CHECK(std::abs(w(2) - 1.0) < 1e-2);
    CHECK(std::abs(w(0)) < 1e-2);
    CHECK(std::abs(w(1)) < 1e-2);
    CHECK_THROWS_AS(identify_main_augmented(d, 1, Dictionary::monomial(1, 1)), ConfigError);
}

TEST_CASE("empty augmentation matches the plain method") {
    const auto data = vdp_data(0.5, 4);
    const auto plain = identify_main(data, 3, 3);
    const auto aug = identify_main_augmented(data, 3, Dictionary());
    CHECK(plain.model.coefficient_matrix() == aug.model.coefficient_matrix());
}

TEST_CASE("read-out agrees with model evaluation at the samples") {
    const auto data = vdp_data(0.4, 6, 0.01);
    const auto res = identify_main(data, 3, 3);
    const Matrix F = vector_field_at_samples_main(res.generator, data);
    const Matrix G = res.model.eval_rows(data.X);
    CHECK((F - G).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + G.cwiseAbs().maxCoeff()));
}

TEST_CASE("rescaled identification maps back to the unscaled one") {
    const auto data = vdp_data(0.2, 8);
    const double alpha = 3.0;
    const auto direct = identify_main(data, 3, 3);
    const auto scaled = identify_main(rescale(data, alpha), 3, 3);
    const Matrix back = unrescale_coefficients(scaled.model, alpha).coefficient_matrix();
    const Matrix ref = direct.model.coefficient_matrix();
    CHECK((back - ref).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + ref.cwiseAbs().maxCoeff()));
}

TEST_CASE("lift degree above the field degree truncates") {
    const auto data = vdp_data(0.2, 10);
    const auto res = identify_main(data, 4, 3);
    CHECK(res.model.library(0) == Dictionary::monomial(2, 3));
    CHECK(res.generator.L.rows() == 15);
    CHECK(res.truncated_max > 0.0);
}

TEST_CASE("noiseless Van der Pol is close to the truth") {
    const auto sys = van_der_pol();
    double mean = 0.0;
    for (std::uint64_t s = 1; s <= 3; ++s)
        mean += coefficient_score(identify_main(vdp_data(0.5, s), 3, 3).model, sys.truth).nrmse / 3.0;
    CHECK(mean < 0.05);
}
