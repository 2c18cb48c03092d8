#include "klift/metrics.hpp"

#include "klift/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace klift {

CoefficientScore coefficient_score(const VectorFieldModel& est, const VectorFieldModel& truth) {
    if (est.n() != truth.n()) throw ConfigError("models have different state dimensions");
    for (int j = 0; j < est.n(); ++j) {
        const auto& a = est.library(j);
        const auto& b = truth.library(j);
        if (a.size() != b.size()) throw ConfigError("library mismatch for state " + std::to_string(j + 1));
        if (a != b) {
            for (Index k = 0; k < a.size(); ++k)
                if (a.key(k) != b.key(k))
                    throw ConfigError("library mismatch for state " + std::to_string(j + 1) + " at entry " +
                                      std::to_string(k + 1) + ": '" + a.label(k) + "' vs '" + b.label(k) + "'");
        }
    }
    double sq = 0.0, nz_sum = 0.0;
    Index slots = 0, nz = 0;
    for (int j = 0; j < est.n(); ++j) {
        const Vector& w = truth.coefficients(j);
        sq += (w - est.coefficients(j)).squaredNorm();
        slots += w.size();
        for (Index k = 0; k < w.size(); ++k)
            if (w(k) != 0.0) {
                nz_sum += std::abs(w(k));
                ++nz;
            }
    }
    CoefficientScore s;
    s.rmse = std::sqrt(sq / static_cast<double>(slots));
    if (nz == 0) throw NumericalError("true model has no nonzero coefficients; NRMSE undefined");
    s.w_bar = nz_sum / static_cast<double>(nz);
    s.nrmse = s.rmse / s.w_bar;
    return s;
}

VectorFieldModel align_model(const VectorFieldModel& est, const VectorFieldModel& like, double* dropped) {
    if (est.n() != like.n()) throw ConfigError("models have different state dimensions");
    double worst = 0.0;
    std::vector<Vector> W;
    for (int j = 0; j < like.n(); ++j) {
        const auto& src = est.library(j);
        const auto& dst = like.library(j);
        std::unordered_map<std::string, Index> pos;
        for (Index k = 0; k < dst.size(); ++k) pos.emplace(dst.key(k), k);
        Vector w = Vector::Zero(dst.size());
        const Vector& v = est.coefficients(j);
        for (Index k = 0; k < src.size(); ++k) {
            auto it = pos.find(src.key(k));
            if (it == pos.end()) worst = std::max(worst, std::abs(v(k)));
            else w(it->second) = v(k);
        }
        W.push_back(std::move(w));
    }
    if (dropped) *dropped = worst;
    return VectorFieldModel(like.libraries(), std::move(W), like.n(), like.p());
}

double field_nrmse(const Matrix& F_hat, const Matrix& F_true, Index first_row) {
    if (F_hat.rows() != F_true.rows() || F_hat.cols() != F_true.cols())
        throw SizeError("estimated and true fields differ in shape");
    const Index R = F_hat.rows() - first_row;
    if (R < 1) throw SizeError("not enough field samples for NRMSE_F");
    double num = 0.0, den = 0.0;
    for (Index r = first_row; r < F_hat.rows(); ++r) {
        num += (F_hat.row(r) - F_true.row(r)).squaredNorm();
        den += F_true.row(r).norm();
    }
    num /= static_cast<double>(R);
    den /= static_cast<double>(R);
    if (!(den > 0.0)) throw NumericalError("true field has zero mean magnitude; NRMSE_F undefined");
    return std::sqrt(num) / den;
}

FieldSamples finite_difference_baseline(const SnapshotSet& data) {
    const Index K = data.K();
    if (data.trajectory_id.size() != static_cast<std::size_t>(K) || data.pair_index.size() != static_cast<std::size_t>(K))
        throw ConfigError("finite differences need trajectory ids and pair indices");
    // rows of each trajectory keyed by pair index
    std::vector<Index> order(K);
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        if (data.trajectory_id[a] != data.trajectory_id[b]) return data.trajectory_id[a] < data.trajectory_id[b];
        return data.pair_index[a] < data.pair_index[b];
    });
    FieldSamples fs;
    std::vector<Vector> rows;
    for (Index s = 0; s < K;) {
        Index e = s;
        while (e < K && data.trajectory_id[order[e]] == data.trajectory_id[order[s]]) ++e;
        if (e - s < 2)
            throw SizeError("trajectory " + std::to_string(data.trajectory_id[order[s]]) +
                            " has fewer than 3 points; central differences undefined");
        for (Index q = s + 1; q < e; ++q) {
            const Index prev = order[q - 1];
            const Index cur = order[q];
            if (data.pair_index[cur] != data.pair_index[prev] + 1)
                throw ConfigError("trajectory " + std::to_string(data.trajectory_id[cur]) + " is not contiguous");
            rows.push_back((data.Y.row(cur) - data.X.row(prev)).transpose() / (2.0 * data.Ts));
            fs.rows.push_back(cur);
        }
        s = e;
    }
    fs.F_hat.resize(static_cast<Index>(rows.size()), data.n());
    for (std::size_t i = 0; i < rows.size(); ++i) fs.F_hat.row(static_cast<Index>(i)) = rows[i].transpose();
    return fs;
}

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) throw SizeError("scores and labels differ in length");
    const auto P = std::count(labels.begin(), labels.end(), true);
    const auto Nn = static_cast<long>(labels.size()) - P;
    if (P == 0 || Nn == 0) throw NumericalError("AUROC undefined: ground truth has no positive or no negative links");
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    RocCurve c;
    const double inf = std::numeric_limits<double>::infinity();
    c.thresholds.push_back(inf);
    c.tpr.push_back(0.0);
    c.fpr.push_back(0.0);
    long tp = 0, fp = 0;
    for (std::size_t i = 0; i < idx.size();) {
        const double t = scores[idx[i]];
        while (i < idx.size() && scores[idx[i]] == t) {
            if (labels[idx[i]]) ++tp;
            else ++fp;
            ++i;
        }
        c.thresholds.push_back(t);
        c.tpr.push_back(static_cast<double>(tp) / static_cast<double>(P));
        c.fpr.push_back(static_cast<double>(fp) / static_cast<double>(Nn));
    }
    c.thresholds.push_back(-inf);
    c.tpr.push_back(1.0);
    c.fpr.push_back(1.0);
    for (std::size_t i = 1; i < c.tpr.size(); ++i)
        c.auroc += 0.5 * (c.fpr[i] - c.fpr[i - 1]) * (c.tpr[i] + c.tpr[i - 1]);
    return c;
}

Matrix link_scores(const VectorFieldModel& est) {
    const int n = est.n();
    Matrix S = Matrix::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        const auto& lib = est.library(j);
        const Vector& w = est.coefficients(j);
        for (Index k = 0; k < lib.size(); ++k) {
            const double a = std::abs(w(k));
            if (a == 0.0) continue;
            for (int i : lib.variables(k))
                if (i < n) S(i, j) = std::max(S(i, j), a);
        }
    }
    return S;
}

std::vector<std::pair<int, int>> scored_pairs(int n, LinkRule rule) {
    std::vector<std::pair<int, int>> out;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            if (rule == LinkRule::IncludeSelf || i != j) out.emplace_back(i, j);
    return out;
}

RocCurve network_roc(const VectorFieldModel& est, const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& truth,
                     LinkRule rule) {
    const int n = est.n();
    if (truth.rows() != n || truth.cols() != n) throw SizeError("adjacency must be n x n");
    const Matrix S = link_scores(est);
    std::vector<double> scores;
    std::vector<bool> labels;
    for (auto [i, j] : scored_pairs(n, rule)) {
        scores.push_back(S(i, j));
        labels.push_back(truth(i, j));
    }
    return roc_curve(scores, labels);
}

}  // namespace klift
