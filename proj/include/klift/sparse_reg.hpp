#pragma once

#include "klift/bases.hpp"

#include <string>
#include <vector>

namespace klift {

// Objective minimised by lasso():
//   (1/(2s)) ||H w - f||^2 + p ||w||_1
// Ols:   plain minimum-norm least squares.
// Lasso: s = K (rows of H), p = lambda.  MATLAB lasso convention; default lambda = 1/K.
// L1L2:  s = 1, p = rho.  Equivalent to min ||w||_1 + (1/(2 rho)) ||H w - f||^2; default rho = 0.01.
// A zero penalty in either sparse mode falls back to least squares.
enum class RegressionMode { Ols, Lasso, L1L2, Auto };

struct RegressionSpec {
    RegressionMode mode = RegressionMode::Auto;
    // negative means "use the mode default"
    double penalty = -1.0;
    int max_iter = 100000;
    double tol = 1e-8;
    // centre and scale columns before solving (MATLAB lasso default); off by default
    bool standardize = false;
    double rcond = 1e-10;
};

// Resolves Auto for a problem of K rows and NF columns: K < NF -> L1L2, otherwise Lasso.
RegressionSpec resolve(const RegressionSpec& spec, Index K, Index NF);
double default_penalty(RegressionMode mode, Index K);
std::string to_string(RegressionMode mode);
RegressionMode regression_mode_from_string(const std::string& s);

struct RegressionReport {
    RegressionMode mode = RegressionMode::Ols;
    double penalty = 0.0;
    int iterations = 0;
    bool converged = true;
    double max_update = 0.0;
    Index nonzeros = 0;
    std::vector<double> residual_history;
    std::vector<Index> zero_columns;
    std::vector<std::string> warnings;
};

struct RegressionResult {
    Vector w;
    RegressionReport report;
};

double soft_threshold(double z, double t);

RegressionResult lasso(const Matrix& H, const Vector& f, const RegressionSpec& spec);
// One independent problem per column of F, all sharing H.
std::vector<RegressionResult> lasso_many(const Matrix& H, const Matrix& F, const RegressionSpec& spec);

// Largest violation of the optimality conditions of the objective above (no standardisation).
double kkt_violation(const Matrix& H, const Vector& f, const Vector& w, RegressionMode mode, double penalty);

}  // namespace klift
