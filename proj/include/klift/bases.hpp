#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace klift {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

using MultiIndex = std::vector<int>;

// Number of monomials of total degree <= m in n variables. Throws SizeError on overflow.
std::size_t monomial_count(int n, int m);

// Graded lexicographic order: by total degree, then by exponent tuple descending.
// (n=2, m=2) -> 00, 10, 01, 20, 11, 02.
std::vector<MultiIndex> enumerate_monomials(int n, int m);

struct MonomialBlock {
    int n = 0;
    int m = 0;
    // each term as (variable, exponent) pairs with exponent > 0
    std::vector<std::vector<std::pair<int, int>>> factors;
};

struct RbfBlock {
    Matrix centers;  // N x n
    double gamma = 0.1;
};

// 1/(1 + x_k^l) for k in ks (outer), l in ls (inner). Indices are 0-based here.
struct HillBlock {
    int n = 0;
    std::vector<int> ks;
    std::vector<int> ls;
};

// {1, sin(x_j - x_i) for j != i ascending}. target is 0-based.
struct SinDiffBlock {
    int n = 0;
    int target = 0;
};

using Block = std::variant<MonomialBlock, RbfBlock, HillBlock, SinDiffBlock>;

class Dictionary {
public:
    Dictionary() = default;

    static Dictionary monomial(int n, int m);
    static Dictionary rbf(Matrix centers, double gamma);
    static Dictionary hill(int n, std::vector<int> ks, std::vector<int> ls);
    static Dictionary sin_diff(int n, int target);
    static Dictionary composite(const std::vector<Dictionary>& parts);

    int dim() const { return n_; }
    Index size() const { return size_; }
    bool empty() const { return blocks_.empty(); }
    const std::vector<Block>& blocks() const { return blocks_; }

    Vector eval(const Vector& x) const;
    // Row k of the result is eval(points.row(k)).
    Matrix lift(const Matrix& points) const;

    std::string label(Index k) const;
    // Canonical identity used for duplicate detection and library alignment.
    std::string key(Index k) const;
    // State variables (0-based) entry k depends on.
    std::vector<int> variables(Index k) const;
    // Exponents if entry k is a monomial.
    std::optional<MultiIndex> monomial_exponents(Index k) const;
    std::optional<int> monomial_degree(Index k) const;
    // Index of the entry equal to the coordinate function x_j, if present.
    std::optional<Index> coordinate_index(int j) const;
    bool all_monomial() const;

    bool operator==(const Dictionary& other) const;
    bool operator!=(const Dictionary& other) const { return !(*this == other); }

private:
    void push(Block b, Index count, int n);
    std::pair<std::size_t, Index> locate(Index k) const;

    int n_ = 0;
    Index size_ = 0;
    std::vector<Block> blocks_;
    std::vector<Index> offsets_;
};

// j -> l with entry l equal to x_j; throws if any coordinate is missing.
std::vector<Index> degree_one_index_map(const Dictionary& d);

// Throws ConfigError naming the first repeated entry.
void check_no_duplicates(const Dictionary& d);

}  // namespace klift
