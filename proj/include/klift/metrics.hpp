#pragma once

#include "klift/koopman_dual.hpp"
#include "klift/model.hpp"
#include "klift/simkit.hpp"
#include "klift/snapshots.hpp"

#include <vector>

namespace klift {

struct CoefficientScore {
    double rmse = 0.0;
    double nrmse = 0.0;
    double w_bar = 0.0;
};

// Libraries must match entry by entry; throws ConfigError otherwise.
CoefficientScore coefficient_score(const VectorFieldModel& est, const VectorFieldModel& truth);

// `est` re-expressed over the libraries of `like`, entries matched by key. Entries of `est` with no
// counterpart are dropped (largest dropped |w| goes to *dropped); entries missing from `est` become 0.
VectorFieldModel align_model(const VectorFieldModel& est, const VectorFieldModel& like, double* dropped = nullptr);

// sqrt((1/(R-1)) sum_{r>=first} ||F_hat_r - F_r||^2) / ((1/(R-1)) sum_{r>=first} ||F_r||)
// with R - 1 the number of rows summed. The default skips the first row.
double field_nrmse(const Matrix& F_hat, const Matrix& F_true, Index first_row = 1);

// (y_k - x_{k-1}) / (2 Ts) at x_k for every pair with a predecessor in the same trajectory.
FieldSamples finite_difference_baseline(const SnapshotSet& data);

struct RocCurve {
    std::vector<double> thresholds;  // descending, starting at +inf and ending at -inf
    std::vector<double> tpr;
    std::vector<double> fpr;
    double auroc = 0.0;
};

// Exact step ROC over all unique scores; trapezoidal area.
RocCurve roc_curve(const std::vector<double>& scores, const std::vector<bool>& labels);

// score(i -> j) = max |w^j_k| over library entries of state j that depend on x_i.
Matrix link_scores(const VectorFieldModel& est);
// (source, target) pairs included in the evaluation
std::vector<std::pair<int, int>> scored_pairs(int n, LinkRule rule);
RocCurve network_roc(const VectorFieldModel& est, const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& truth,
                     LinkRule rule);

}  // namespace klift
