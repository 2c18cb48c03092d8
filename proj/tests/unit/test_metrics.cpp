#include <doctest.h>

#include "klift/error.hpp"
#include "klift/metrics.hpp"

#include <cmath>
#include <random>

using namespace klift;

namespace {

// Mann-Whitney estimate of P(score_pos > score_neg), ties counted half
double mann_whitney(const std::vector<double>& s, const std::vector<bool>& y) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] && !y[j]) {
                pairs += 1.0;
                wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
            }
    return wins / pairs;
}

SnapshotSet along_time(const std::vector<int>& traj_lengths, double Ts, const std::function<double(double)>& x) {
    SnapshotSet d;
    d.Ts = Ts;
    Index K = 0;
    for (int L : traj_lengths) K += L;
    d.X.resize(K, 1);
    d.Y.resize(K, 1);
    Index row = 0;
    for (std::size_t t = 0; t < traj_lengths.size(); ++t)
        for (int k = 0; k < traj_lengths[t]; ++k, ++row) {
            // sentinel offset per trajectory
            const double off = 1000.0 * static_cast<double>(t);
            d.X(row, 0) = off + x(k * Ts);
            d.Y(row, 0) = off + x((k + 1) * Ts);
            d.trajectory_id.push_back(static_cast<int>(t));
            d.pair_index.push_back(k);
        }
    return d;
}

}  // namespace

TEST_CASE("coefficient score by the formula") {
    const auto lib = Dictionary::monomial(2, 3);  // 10 entries; two states give 20 slots
    Matrix W = Matrix::Zero(10, 2);
    W(1, 0) = 2.0;
    W(3, 1) = -4.0;
    const VectorFieldModel t(lib, W, 2);
    const auto zero = coefficient_score(t, t);
    CHECK(zero.rmse == 0.0);
    CHECK(zero.nrmse == 0.0);
    Matrix W2 = W;
    W2(7, 0) += 0.3;
    const VectorFieldModel e(lib, W2, 2);
    const auto s = coefficient_score(e, t);
    CHECK(std::abs(s.rmse - 0.3 / std::sqrt(20.0)) < 1e-15);
    CHECK(s.w_bar == 3.0);
    CHECK(std::abs(s.nrmse - s.rmse / 3.0) < 1e-15);
    // symmetric in the rmse term
    CHECK(coefficient_score(t, e).rmse == s.rmse);
    CHECK_THROWS_AS(coefficient_score(VectorFieldModel(Dictionary::monomial(2, 2), Matrix::Zero(6, 2), 2), t),
                    ConfigError);
    CHECK_THROWS_AS(coefficient_score(t, VectorFieldModel(lib, Matrix::Zero(10, 2), 2)), NumericalError);
}

TEST_CASE("alignment by entry identity") {
    Matrix W = Matrix::Zero(6, 2);
    W(1, 0) = 1.0;
    W(5, 1) = 0.25;  // x2^2, absent from the degree-one library
    const VectorFieldModel est(Dictionary::monomial(2, 2), W, 2);
    const VectorFieldModel like(Dictionary::monomial(2, 1), Matrix::Zero(3, 2), 2);
    double dropped = 0.0;
    const auto a = align_model(est, like, &dropped);
    CHECK(a.library(0) == like.library(0));
    CHECK(a.coefficients(0)(1) == 1.0);
    CHECK(dropped == 0.25);
    const auto back = align_model(a, est);
    CHECK(back.coefficients(1)(5) == 0.0);
    CHECK(back.coefficients(0)(1) == 1.0);
}

TEST_CASE("field NRMSE") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> N(0.0, 1.0);
    Matrix F(12, 3);
    for (Index i = 0; i < F.rows(); ++i)
        for (Index j = 0; j < F.cols(); ++j) F(i, j) = N(rng);
    CHECK(field_nrmse(F, F) == 0.0);
    double num = 0.0, den = 0.0;
    for (Index r = 1; r < 12; ++r) {
        num += F.row(r).squaredNorm();
        den += F.row(r).norm();
    }
    const double expected = std::sqrt(num / 11.0) / (den / 11.0);
    CHECK(std::abs(field_nrmse(2.0 * F, F) - expected) < 1e-14);
    CHECK_THROWS_AS(field_nrmse(F, Matrix::Zero(12, 3)), NumericalError);
    CHECK_THROWS_AS(field_nrmse(F, F.topRows(5)), SizeError);
}

TEST_CASE("central differences are exact on quadratics") {
    const auto d = along_time({6, 5}, 0.1, [](double t) { return 3.0 * t * t - t + 0.5; });
    const auto fs = finite_difference_baseline(d);
    CHECK(fs.F_hat.rows() == 9);
    for (std::size_t i = 0; i < fs.rows.size(); ++i) {
        const Index row = fs.rows[i];
        const double t = d.pair_index[row] * d.Ts;
        CHECK(std::abs(fs.F_hat(static_cast<Index>(i), 0) - (6.0 * t - 1.0)) < 1e-9);
        CHECK(d.pair_index[row] > 0);
    }
    const auto lin = finite_difference_baseline(along_time({4}, 0.2, [](double t) { return 0.7 * t; }));
    CHECK((lin.F_hat.array() - 0.7).abs().maxCoeff() < 1e-12);
}

TEST_CASE("central differences stay inside each trajectory") {
    // sentinel offsets of 1000 would show up as huge derivatives on any crossing
    auto d = along_time({3, 4, 2, 5}, 0.1, [](double t) { return std::sin(t); });
    // shuffle the row order; ids and pair indices carry the structure
    std::mt19937_64 rng(4);
    std::vector<Index> perm(d.K());
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    SnapshotSet s = d;
    for (Index k = 0; k < d.K(); ++k) {
        s.X.row(k) = d.X.row(perm[k]);
        s.Y.row(k) = d.Y.row(perm[k]);
        s.trajectory_id[k] = d.trajectory_id[perm[k]];
        s.pair_index[k] = d.pair_index[perm[k]];
    }
    const auto fs = finite_difference_baseline(s);
    CHECK(fs.F_hat.rows() == 10);
    CHECK(fs.F_hat.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("finite differences need three points") {
    CHECK_THROWS_AS(finite_difference_baseline(along_time({3, 1}, 0.1, [](double t) { return t; })), SizeError);
}

TEST_CASE("finite-difference noise error grows like sigma over Ts") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> N(0.0, 1.0);
    auto noisy_error = [&](double Ts) {
        // constant trajectory: the exact derivative is zero, so the error is pure noise
        auto d = along_time({200}, Ts, [](double) { return 1.0; });
        for (Index k = 0; k < d.K(); ++k) {
            d.X(k, 0) *= 1.0 + 0.01 * N(rng);
            d.Y(k, 0) *= 1.0 + 0.01 * N(rng);
        }
        const auto fs = finite_difference_baseline(d);
        return std::sqrt(fs.F_hat.squaredNorm() / static_cast<double>(fs.F_hat.rows()));
    };
    const double a = noisy_error(0.1);
    const double b = noisy_error(0.05);
    CHECK(b / a > 1.6);
    CHECK(b / a < 2.5);
    CHECK(std::abs(a - 0.01 * std::sqrt(2.0) / 0.2) < 0.2 * a);
}

TEST_CASE("ROC curve shape and area") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> N(0.0, 1.0);
    std::bernoulli_distribution B(0.3);
    std::vector<double> s;
    std::vector<bool> y;
    for (int i = 0; i < 300; ++i) {
        y.push_back(B(rng));
        // rounding creates ties
        s.push_back(std::round((N(rng) + (y.back() ? 1.0 : 0.0)) * 4.0) / 4.0);
    }
    const auto roc = roc_curve(s, y);
    CHECK(roc.tpr.front() == 0.0);
    CHECK(roc.fpr.front() == 0.0);
    CHECK(roc.tpr.back() == 1.0);
    CHECK(roc.fpr.back() == 1.0);
    CHECK(std::isinf(roc.thresholds.front()));
    for (std::size_t i = 1; i < roc.tpr.size(); ++i) {
        CHECK(roc.thresholds[i] < roc.thresholds[i - 1]);
        CHECK(roc.tpr[i] >= roc.tpr[i - 1]);
        CHECK(roc.fpr[i] >= roc.fpr[i - 1]);
    }
    CHECK(std::abs(roc.auroc - mann_whitney(s, y)) < 1e-12);

    // strictly increasing transform
    std::vector<double> t;
    for (double v : s) t.push_back(std::exp(3.0 * v) - 7.0);
    CHECK(std::abs(roc_curve(t, y).auroc - roc.auroc) < 1e-12);

    std::vector<double> perfect;
    for (bool b : y) perfect.push_back(b ? 1.0 : 0.0);
    CHECK(roc_curve(perfect, y).auroc == 1.0);
    CHECK_THROWS_AS(roc_curve(s, std::vector<bool>(s.size(), true)), NumericalError);
}

TEST_CASE("uninformative scores average one half") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double mean = 0.0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        std::vector<double> s;
        std::vector<bool> y;
        for (int i = 0; i < 60; ++i) {
            s.push_back(U(rng));
            y.push_back(i % 3 == 0);
        }
        mean += roc_curve(s, y).auroc / reps;
    }
    CHECK(std::abs(mean - 0.5) < 0.02);
}

TEST_CASE("network scores from library dependencies") {
    const int n = 3;
    const auto lib = Dictionary::monomial(n, 2);
    Matrix W = Matrix::Zero(lib.size(), n);
    // state 0 <- x1 x2 (0.5) and x1 (0.2); state 2 <- x0^2 (-0.9)
    const auto terms = enumerate_monomials(n, 2);
    auto idx = [&](MultiIndex e) { return std::find(terms.begin(), terms.end(), e) - terms.begin(); };
    W(idx({0, 1, 1}), 0) = 0.5;
    W(idx({0, 1, 0}), 0) = 0.2;
    W(idx({2, 0, 0}), 2) = -0.9;
    const VectorFieldModel m(lib, W, n);
    const Matrix S = link_scores(m);
    CHECK(S(1, 0) == 0.5);
    CHECK(S(2, 0) == 0.5);
    CHECK(S(0, 2) == 0.9);
    CHECK(S(0, 1) == 0.0);

    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> A(n, n);
    A.setConstant(false);
    A(1, 0) = A(2, 0) = A(0, 2) = true;
    CHECK(network_roc(m, A, LinkRule::ExcludeSelf).auroc == 1.0);
    CHECK(scored_pairs(n, LinkRule::ExcludeSelf).size() == 6);
    CHECK(scored_pairs(n, LinkRule::IncludeSelf).size() == 9);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> none(n, n);
    none.setConstant(false);
    CHECK_THROWS_AS(network_roc(m, none, LinkRule::ExcludeSelf), NumericalError);
}
