#pragma once

#include "klift/bases.hpp"

#include <vector>

namespace klift {

// F_j(x) = sum_k W_j[k] h^(j)_k(x). Either one library shared by all states,
// or one library per state (network systems).
class VectorFieldModel {
public:
    VectorFieldModel() = default;
    // shared library; W is N_F x n
    VectorFieldModel(Dictionary library, Matrix W, int n, int p = 0);
    // per-state libraries
    VectorFieldModel(std::vector<Dictionary> libraries, std::vector<Vector> coefficients, int n, int p = 0);

    int n() const { return n_; }
    int p() const { return p_; }
    bool shared() const { return libraries_.size() == 1; }
    const Dictionary& library(int j) const { return libraries_[shared() ? 0 : j]; }
    const std::vector<Dictionary>& libraries() const { return libraries_; }
    const Vector& coefficients(int j) const { return W_[j]; }
    Vector& coefficients(int j) { return W_[j]; }
    // N_F x n, shared library only
    Matrix coefficient_matrix() const;
    Index total_coefficients() const;

    // z has n + p entries (state followed by inputs)
    Vector eval(const Vector& z) const;
    // rows of Z are points; returns rows x n
    Matrix eval_rows(const Matrix& Z) const;

    // Same coefficients up to exact equality and same libraries.
    bool operator==(const VectorFieldModel& o) const;

private:
    void check() const;

    int n_ = 0;
    int p_ = 0;
    std::vector<Dictionary> libraries_;
    std::vector<Vector> W_;
};

}  // namespace klift
