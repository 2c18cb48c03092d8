#pragma once

#include "klift/bases.hpp"

#include <complex>
#include <vector>

namespace klift {

struct PinvResult {
    Matrix pinv;
    Index rank = 0;
    double cutoff = 0.0;
    // largest over smallest retained singular value; infinity when rank is 0
    double condition = 0.0;
    Vector singular_values;
    Matrix V;  // right singular vectors (thin)
};

constexpr double kDefaultRcond = 1e-10;

PinvResult pinv(const Matrix& A, double rcond = kDefaultRcond);
Matrix lstsq(const Matrix& A, const Matrix& B, double rcond = kDefaultRcond);

enum class BranchPolicy {
    Strict,    // negative-real eigenvalues raise BranchError
    RealPart,  // take log|lambda| + i*pi on the negative axis and keep the real part
};

struct LogmResult {
    Matrix logm;
    std::vector<std::complex<double>> spectrum;
    bool branch_ok = true;
    bool strip_ok = true;
    int negative_real_eigenvalues = 0;
    double max_imag_residue = 0.0;
    int square_roots = 0;
};

constexpr double kBranchTol = 1e-12;
constexpr double kImagTol = 1e-8;

LogmResult logm_principal(const Matrix& A, BranchPolicy policy = BranchPolicy::Strict);

}  // namespace klift
