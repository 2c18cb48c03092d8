#include "klift/model.hpp"

#include "klift/error.hpp"
#include "klift/snapshots.hpp"

namespace klift {

VectorFieldModel::VectorFieldModel(Dictionary library, Matrix W, int n, int p) : n_(n), p_(p) {
    if (W.cols() != n) throw SizeError("coefficient matrix has " + std::to_string(W.cols()) + " columns, expected n = " + std::to_string(n));
    libraries_.push_back(std::move(library));
    for (int j = 0; j < n; ++j) W_.push_back(W.col(j));
    check();
}

VectorFieldModel::VectorFieldModel(std::vector<Dictionary> libraries, std::vector<Vector> coefficients, int n, int p)
    : n_(n), p_(p), libraries_(std::move(libraries)), W_(std::move(coefficients)) {
    if (libraries_.size() != 1 && static_cast<int>(libraries_.size()) != n)
        throw SizeError("expected 1 or n = " + std::to_string(n) + " libraries, got " + std::to_string(libraries_.size()));
    check();
}

void VectorFieldModel::check() const {
    if (static_cast<int>(W_.size()) != n_) throw SizeError("expected one coefficient vector per state");
    for (int j = 0; j < n_; ++j) {
        const auto& lib = library(j);
        if (lib.dim() != n_ + p_)
            throw SizeError("library for state " + std::to_string(j + 1) + " acts on " + std::to_string(lib.dim()) +
                            " variables, expected n + p = " + std::to_string(n_ + p_));
        if (W_[j].size() != lib.size())
            throw SizeError("state " + std::to_string(j + 1) + " has " + std::to_string(W_[j].size()) +
                            " coefficients for a library of " + std::to_string(lib.size()));
    }
}

Matrix VectorFieldModel::coefficient_matrix() const {
    if (!shared()) throw UnsupportedError("coefficient matrix requested for per-state libraries");
    Matrix W(libraries_[0].size(), n_);
    for (int j = 0; j < n_; ++j) W.col(j) = W_[j];
    return W;
}

Index VectorFieldModel::total_coefficients() const {
    Index t = 0;
    for (const auto& w : W_) t += w.size();
    return t;
}

Vector VectorFieldModel::eval(const Vector& z) const {
    Matrix row = z.transpose();
    return eval_rows(row).row(0).transpose();
}

Matrix VectorFieldModel::eval_rows(const Matrix& Z) const {
    Matrix F(Z.rows(), n_);
    if (shared()) {
        F = libraries_[0].lift(Z) * coefficient_matrix();
    } else {
        for (int j = 0; j < n_; ++j) F.col(j) = libraries_[j].lift(Z) * W_[j];
    }
    return F;
}

bool VectorFieldModel::operator==(const VectorFieldModel& o) const {
    if (n_ != o.n_ || p_ != o.p_ || libraries_.size() != o.libraries_.size()) return false;
    for (std::size_t i = 0; i < libraries_.size(); ++i)
        if (libraries_[i] != o.libraries_[i]) return false;
    for (int j = 0; j < n_; ++j)
        if (W_[j] != o.W_[j]) return false;
    return true;
}

Matrix SnapshotSet::augmented_X() const {
    if (!inputs) return X;
    Matrix Z(X.rows(), X.cols() + inputs->cols());
    Z << X, *inputs;
    return Z;
}

Matrix SnapshotSet::augmented_Y() const {
    if (!inputs) return Y;
    Matrix Z(Y.rows(), Y.cols() + inputs->cols());
    Z << Y, *inputs;
    return Z;
}

void validate(const SnapshotSet& d) {
    if (d.X.rows() == 0) throw SizeError("snapshot set is empty");
    if (d.X.rows() != d.Y.rows() || d.X.cols() != d.Y.cols())
        throw SizeError("X is " + std::to_string(d.X.rows()) + "x" + std::to_string(d.X.cols()) + " but Y is " +
                        std::to_string(d.Y.rows()) + "x" + std::to_string(d.Y.cols()));
    if (!(d.Ts > 0.0) || !std::isfinite(d.Ts)) throw ConfigError("sampling period Ts must be positive");
    if (!d.X.allFinite() || !d.Y.allFinite()) throw NumericalError("snapshot set has non-finite states");
    if (d.inputs) {
        if (d.inputs->rows() != d.X.rows()) throw SizeError("input rows do not match snapshot pairs");
        if (!d.inputs->allFinite()) throw NumericalError("snapshot set has non-finite inputs");
    }
    const auto K = static_cast<std::size_t>(d.X.rows());
    if (!d.trajectory_id.empty() && d.trajectory_id.size() != K) throw SizeError("trajectory ids do not match K");
    if (!d.pair_index.empty() && d.pair_index.size() != K) throw SizeError("pair indices do not match K");
}

}  // namespace klift
