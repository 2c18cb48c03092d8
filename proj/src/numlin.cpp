#include "klift/numlin.hpp"

#include "klift/error.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace klift {

using CMatrix = Eigen::MatrixXcd;
using cplx = std::complex<double>;

PinvResult pinv(const Matrix& A, double rcond) {
    if (!A.allFinite()) throw NumericalError("pinv: matrix has non-finite entries");
    PinvResult out;
    const Index K = A.rows();
    const Index N = A.cols();
    if (K == 0 || N == 0) {
        out.pinv = Matrix::Zero(N, K);
        out.condition = std::numeric_limits<double>::infinity();
        return out;
    }
    Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw NumericalError("pinv: SVD failed on " + std::to_string(K) + "x" + std::to_string(N) +
                             " matrix (Frobenius norm " + std::to_string(A.norm()) + ")");
    const Vector& s = svd.singularValues();
    out.singular_values = s;
    const double smax = s.size() ? s(0) : 0.0;
    out.cutoff = rcond * smax;
    Index r = 0;
    while (r < s.size() && s(r) > out.cutoff) ++r;
    out.rank = r;
    out.condition = r > 0 ? smax / s(r - 1) : std::numeric_limits<double>::infinity();
    const Matrix& U = svd.matrixU();
    out.V = svd.matrixV();
    if (r == 0) {
        out.pinv = Matrix::Zero(N, K);
        return out;
    }
    Vector inv = s.head(r).cwiseInverse();
    out.pinv = out.V.leftCols(r) * inv.asDiagonal() * U.leftCols(r).transpose();
    return out;
}

Matrix lstsq(const Matrix& A, const Matrix& B, double rcond) {
    if (A.rows() != B.rows())
        throw SizeError("lstsq: A has " + std::to_string(A.rows()) + " rows, B has " + std::to_string(B.rows()));
    if (!A.allFinite() || !B.allFinite()) throw NumericalError("lstsq: non-finite input");
    if (A.rows() == 0 || A.cols() == 0) return Matrix::Zero(A.cols(), B.cols());
    Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("lstsq: SVD failed");
    const Vector& s = svd.singularValues();
    const double cutoff = rcond * s(0);
    Index r = 0;
    while (r < s.size() && s(r) > cutoff) ++r;
    if (r == 0) return Matrix::Zero(A.cols(), B.cols());
    Matrix c = svd.matrixU().leftCols(r).transpose() * B;
    c = s.head(r).cwiseInverse().asDiagonal() * c;
    return svd.matrixV().leftCols(r) * c;
}

namespace {

// Principal square root of an upper triangular matrix (column-wise recurrence).
CMatrix sqrt_upper(const CMatrix& T) {
    const Index n = T.rows();
    CMatrix R = CMatrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        R(j, j) = std::sqrt(T(j, j));
        for (Index i = j - 1; i >= 0; --i) {
            cplx s = T(i, j);
            const Index len = j - i - 1;
            if (len > 0) s -= R.row(i).segment(i + 1, len).transpose().cwiseProduct(R.col(j).segment(i + 1, len)).sum();
            const cplx d = R(i, i) + R(j, j);
            if (d == cplx(0.0)) throw NumericalError("logm: triangular square root broke down");
            R(i, j) = s / d;
        }
    }
    return R;
}

double norm1(const CMatrix& M) {
    double best = 0.0;
    for (Index j = 0; j < M.cols(); ++j) best = std::max(best, M.col(j).cwiseAbs().sum());
    return best;
}

// log(I + X) for upper triangular X with small norm: Gauss-Legendre form of the [7/7] Pade approximant.
CMatrix log1p_pade(const CMatrix& X) {
    using GL = boost::math::quadrature::gauss<double, 7>;
    const auto& abscissa = GL::abscissa();
    const auto& weights = GL::weights();
    const Index n = X.rows();
    CMatrix sum = CMatrix::Zero(n, n);
    auto node = [&](double t, double w) {
        // map [-1,1] to [0,1]
        const double x = 0.5 * (t + 1.0);
        CMatrix M = CMatrix::Identity(n, n) + x * X;
        CMatrix Z = M.triangularView<Eigen::Upper>().solve(X);
        sum += (0.5 * w) * Z;
    };
    for (std::size_t k = 0; k < abscissa.size(); ++k) {
        node(abscissa[k], weights[k]);
        if (abscissa[k] != 0.0) node(-abscissa[k], weights[k]);
    }
    return sum;
}

}  // namespace

LogmResult logm_principal(const Matrix& A, BranchPolicy policy) {
    if (A.rows() != A.cols())
        throw SizeError("logm: matrix is " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()) + ", not square");
    if (!A.allFinite()) throw NumericalError("logm: matrix has non-finite entries");
    LogmResult out;
    const Index n = A.rows();
    if (n == 0) return out;

    Eigen::ComplexSchur<Matrix> schur(A);
    if (schur.info() != Eigen::Success) throw NumericalError("logm: Schur decomposition did not converge");
    CMatrix T = schur.matrixT();
    const CMatrix& U = schur.matrixU();

    double maxabs = 0.0;
    for (Index i = 0; i < n; ++i) {
        out.spectrum.push_back(T(i, i));
        maxabs = std::max(maxabs, std::abs(T(i, i)));
    }
    for (Index i = 0; i < n; ++i) {
        if (maxabs == 0.0 || std::abs(T(i, i)) <= 1e-14 * maxabs)
            throw NumericalError("logm: matrix is singular (eigenvalue " + std::to_string(std::abs(T(i, i))) +
                                 " against spectral radius " + std::to_string(maxabs) + ")");
    }

    std::vector<cplx> offending;
    for (Index i = 0; i < n; ++i) {
        const cplx l = T(i, i);
        if (l.real() < 0.0 && std::abs(l.imag()) < kBranchTol) {
            offending.push_back(l);
            // pin to the upper side of the cut so the log lands at +i*pi
            T(i, i) = cplx(l.real(), 0.0);
        }
    }
    if (!offending.empty()) {
        out.branch_ok = false;
        out.negative_real_eigenvalues = static_cast<int>(offending.size());
        if (policy == BranchPolicy::Strict)
            throw BranchError("logm: " + std::to_string(offending.size()) +
                                  " eigenvalue(s) on the closed negative real axis, principal logarithm undefined",
                              offending);
    }

    std::vector<cplx> diag_log(n);
    for (Index i = 0; i < n; ++i) {
        diag_log[i] = std::log(T(i, i));
        if (!(std::abs(diag_log[i].imag()) < M_PI)) out.strip_ok = false;
    }

    CMatrix S = T;
    const CMatrix I = CMatrix::Identity(n, n);
    while (norm1(S - I) > 0.25) {
        S = sqrt_upper(S);
        if (++out.square_roots > 100) throw NumericalError("logm: square-root phase did not converge");
    }
    CMatrix R = log1p_pade(S - I) * std::ldexp(1.0, out.square_roots);
    for (Index i = 0; i < n; ++i) R(i, i) = diag_log[i];
    R.triangularView<Eigen::StrictlyLower>().setZero();

    CMatrix L = U * R * U.adjoint();
    out.max_imag_residue = L.imag().cwiseAbs().maxCoeff();
    if (policy == BranchPolicy::Strict && out.max_imag_residue > kImagTol) {
        // eigenvalues within rounding of the cut make the principal branch ill-conditioned
        std::vector<cplx> near;
        for (const auto& l : out.spectrum)
            if (l.real() < 0.0 && std::abs(l.imag()) < 1e-6 * std::abs(l)) near.push_back(l);
        if (!near.empty())
            throw BranchError("logm: " + std::to_string(near.size()) +
                                  " eigenvalue(s) within rounding of the negative real axis, principal logarithm "
                                  "ill-conditioned",
                              near);
        std::ostringstream os;
        os << "logm: imaginary residue " << std::scientific << std::setprecision(3) << out.max_imag_residue
           << " exceeds the real-output tolerance " << kImagTol;
        throw NumericalError(os.str());
    }
    out.logm = L.real();
    return out;
}

}  // namespace klift
