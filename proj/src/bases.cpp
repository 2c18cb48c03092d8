#include "klift/bases.hpp"

#include "klift/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace klift {

namespace {

using Factors = std::vector<std::pair<int, int>>;

void gen_degree(int n, int v, int remaining, Factors& cur, std::vector<Factors>& out) {
    if (v == n - 1) {
        if (remaining > 0) cur.emplace_back(v, remaining);
        out.push_back(cur);
        if (remaining > 0) cur.pop_back();
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        if (e > 0) cur.emplace_back(v, e);
        gen_degree(n, v + 1, remaining - e, cur, out);
        if (e > 0) cur.pop_back();
    }
}

std::vector<Factors> monomial_factors(int n, int m) {
    std::vector<Factors> out;
    out.reserve(monomial_count(n, m));
    Factors cur;
    for (int d = 0; d <= m; ++d) gen_degree(n, 0, d, cur, out);
    return out;
}

inline double ipow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string monomial_label(const Factors& f) {
    if (f.empty()) return "1";
    std::string s;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (i) s += "*";
        s += "x" + std::to_string(f[i].first + 1);
        if (f[i].second > 1) s += "^" + std::to_string(f[i].second);
    }
    return s;
}

void check_finite(const Matrix& points) {
    for (Index r = 0; r < points.rows(); ++r) {
        if (!points.row(r).allFinite()) {
            throw NumericalError("non-finite state in row " + std::to_string(r) + " passed to dictionary");
        }
    }
}

void fill_block(const MonomialBlock& b, const Matrix& X, Eigen::Ref<Matrix> out) {
    for (std::size_t t = 0; t < b.factors.size(); ++t) {
        auto col = out.col(static_cast<Index>(t));
        col.setOnes();
        for (auto [v, e] : b.factors[t]) {
            for (int i = 0; i < e; ++i) col.array() *= X.col(v).array();
        }
    }
}

void fill_block(const RbfBlock& b, const Matrix& X, Eigen::Ref<Matrix> out) {
    const Index K = X.rows();
    const Index n = X.cols();
    for (Index c = 0; c < b.centers.rows(); ++c) {
        for (Index k = 0; k < K; ++k) {
            double s = 0.0;
            for (Index i = 0; i < n; ++i) {
                const double d = X(k, i) - b.centers(c, i);
                s += d * d;
            }
            out(k, c) = std::exp(-b.gamma * s);
        }
    }
}

void fill_block(const HillBlock& b, const Matrix& X, Eigen::Ref<Matrix> out) {
    Index c = 0;
    for (int k : b.ks) {
        for (int l : b.ls) {
            for (Index r = 0; r < X.rows(); ++r) out(r, c) = 1.0 / (1.0 + ipow(X(r, k), l));
            ++c;
        }
    }
}

void fill_block(const SinDiffBlock& b, const Matrix& X, Eigen::Ref<Matrix> out) {
    out.col(0).setOnes();
    Index c = 1;
    for (int j = 0; j < b.n; ++j) {
        if (j == b.target) continue;
        for (Index r = 0; r < X.rows(); ++r) out(r, c) = std::sin(X(r, j) - X(r, b.target));
        ++c;
    }
}

Index block_size(const Block& b) {
    return std::visit(
        [](const auto& blk) -> Index {
            using T = std::decay_t<decltype(blk)>;
            if constexpr (std::is_same_v<T, MonomialBlock>) return static_cast<Index>(blk.factors.size());
            else if constexpr (std::is_same_v<T, RbfBlock>) return blk.centers.rows();
            else if constexpr (std::is_same_v<T, HillBlock>)
                return static_cast<Index>(blk.ks.size() * blk.ls.size());
            else return blk.n;
        },
        b);
}

bool block_equal(const Block& a, const Block& b) {
    if (a.index() != b.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(b);
            if constexpr (std::is_same_v<T, MonomialBlock>) return x.n == y.n && x.m == y.m;
            else if constexpr (std::is_same_v<T, RbfBlock>)
                return x.gamma == y.gamma && x.centers.rows() == y.centers.rows() &&
                       x.centers.cols() == y.centers.cols() && x.centers == y.centers;
            else if constexpr (std::is_same_v<T, HillBlock>) return x.n == y.n && x.ks == y.ks && x.ls == y.ls;
            else return x.n == y.n && x.target == y.target;
        },
        a);
}

}  // namespace

std::size_t monomial_count(int n, int m) {
    if (n < 1 || m < 0) throw ConfigError("monomial dictionary needs n >= 1 and m >= 0");
    // C(n+m, m) built incrementally; every partial product is an integer.
    unsigned __int128 r = 1;
    for (int i = 1; i <= m; ++i) {
        r = r * static_cast<unsigned>(n + i) / static_cast<unsigned>(i);
        if (r > std::numeric_limits<std::size_t>::max() / 4)
            throw SizeError("monomial count for n=" + std::to_string(n) + ", m=" + std::to_string(m) +
                            " exceeds platform capacity");
    }
    return static_cast<std::size_t>(r);
}

std::vector<MultiIndex> enumerate_monomials(int n, int m) {
    std::vector<MultiIndex> out;
    for (const auto& f : monomial_factors(n, m)) {
        MultiIndex e(n, 0);
        for (auto [v, p] : f) e[v] = p;
        out.push_back(std::move(e));
    }
    return out;
}

void Dictionary::push(Block b, Index count, int n) {
    if (!blocks_.empty() && n != n_)
        throw ConfigError("dictionary blocks disagree on state dimension (" + std::to_string(n_) + " vs " +
                          std::to_string(n) + ")");
    n_ = n;
    offsets_.push_back(size_);
    size_ += count;
    blocks_.push_back(std::move(b));
}

Dictionary Dictionary::monomial(int n, int m) {
    MonomialBlock b;
    b.n = n;
    b.m = m;
    b.factors = monomial_factors(n, m);
    Dictionary d;
    const auto count = static_cast<Index>(b.factors.size());
    d.push(std::move(b), count, n);
    return d;
}

Dictionary Dictionary::rbf(Matrix centers, double gamma) {
    if (centers.rows() == 0) throw ConfigError("RBF dictionary needs at least one center");
    if (!(gamma > 0.0)) throw ConfigError("RBF gamma must be positive");
    if (!centers.allFinite()) throw NumericalError("non-finite RBF center");
    const int n = static_cast<int>(centers.cols());
    const Index count = centers.rows();
    Dictionary d;
    d.push(RbfBlock{std::move(centers), gamma}, count, n);
    return d;
}

Dictionary Dictionary::hill(int n, std::vector<int> ks, std::vector<int> ls) {
    for (int k : ks)
        if (k < 0 || k >= n) throw ConfigError("Hill index " + std::to_string(k + 1) + " outside 1.." + std::to_string(n));
    for (int l : ls)
        if (l < 1) throw ConfigError("Hill exponent must be >= 1");
    const Index count = static_cast<Index>(ks.size() * ls.size());
    Dictionary d;
    d.push(HillBlock{n, std::move(ks), std::move(ls)}, count, n);
    return d;
}

Dictionary Dictionary::sin_diff(int n, int target) {
    if (target < 0 || target >= n) throw ConfigError("sine-difference target outside 1.." + std::to_string(n));
    Dictionary d;
    d.push(SinDiffBlock{n, target}, n, n);
    return d;
}

Dictionary Dictionary::composite(const std::vector<Dictionary>& parts) {
    Dictionary d;
    for (const auto& p : parts)
        for (const auto& b : p.blocks_) d.push(b, block_size(b), p.n_);
    return d;
}

std::pair<std::size_t, Index> Dictionary::locate(Index k) const {
    if (k < 0 || k >= size_) throw std::out_of_range("dictionary entry index out of range");
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), k);
    const auto bi = static_cast<std::size_t>(std::distance(offsets_.begin(), it) - 1);
    return {bi, k - offsets_[bi]};
}

Matrix Dictionary::lift(const Matrix& points) const {
    if (points.cols() != n_)
        throw SizeError("points have " + std::to_string(points.cols()) + " columns, dictionary expects " +
                        std::to_string(n_));
    check_finite(points);
    Matrix out(points.rows(), size_);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        auto view = out.middleCols(offsets_[b], block_size(blocks_[b]));
        std::visit([&](const auto& blk) { fill_block(blk, points, view); }, blocks_[b]);
    }
    return out;
}

Vector Dictionary::eval(const Vector& x) const {
    Matrix row = x.transpose();
    return lift(row).row(0).transpose();
}

std::string Dictionary::label(Index k) const {
    auto [bi, local] = locate(k);
    return std::visit(
        [&](const auto& b) -> std::string {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, MonomialBlock>) {
                return monomial_label(b.factors[local]);
            } else if constexpr (std::is_same_v<T, RbfBlock>) {
                return "rbf" + std::to_string(local + 1);
            } else if constexpr (std::is_same_v<T, HillBlock>) {
                const auto nl = static_cast<Index>(b.ls.size());
                const int kk = b.ks[local / nl];
                const int l = b.ls[local % nl];
                return "1/(1+x" + std::to_string(kk + 1) + (l > 1 ? "^" + std::to_string(l) : "") + ")";
            } else {
                if (local == 0) return "1";
                int j = static_cast<int>(local) - 1;
                if (j >= b.target) ++j;
                return "sin(x" + std::to_string(j + 1) + "-x" + std::to_string(b.target + 1) + ")";
            }
        },
        blocks_[bi]);
}

std::string Dictionary::key(Index k) const {
    auto [bi, local] = locate(k);
    if (const auto* r = std::get_if<RbfBlock>(&blocks_[bi])) {
        std::string s = "rbf(" + fmt_double(r->gamma);
        for (Index i = 0; i < r->centers.cols(); ++i) s += "," + fmt_double(r->centers(local, i));
        return s + ")";
    }
    return label(k);
}

std::vector<int> Dictionary::variables(Index k) const {
    auto [bi, local] = locate(k);
    return std::visit(
        [&](const auto& b) -> std::vector<int> {
            using T = std::decay_t<decltype(b)>;
            std::vector<int> v;
            if constexpr (std::is_same_v<T, MonomialBlock>) {
                for (auto [var, e] : b.factors[local]) v.push_back(var);
            } else if constexpr (std::is_same_v<T, RbfBlock>) {
                for (int i = 0; i < n_; ++i) v.push_back(i);
            } else if constexpr (std::is_same_v<T, HillBlock>) {
                v.push_back(b.ks[local / static_cast<Index>(b.ls.size())]);
            } else {
                if (local > 0) {
                    int j = static_cast<int>(local) - 1;
                    if (j >= b.target) ++j;
                    v = {std::min(j, b.target), std::max(j, b.target)};
                }
            }
            return v;
        },
        blocks_[bi]);
}

std::optional<MultiIndex> Dictionary::monomial_exponents(Index k) const {
    auto [bi, local] = locate(k);
    if (const auto* m = std::get_if<MonomialBlock>(&blocks_[bi])) {
        MultiIndex e(n_, 0);
        for (auto [v, p] : m->factors[local]) e[v] = p;
        return e;
    }
    return std::nullopt;
}

std::optional<int> Dictionary::monomial_degree(Index k) const {
    auto [bi, local] = locate(k);
    if (const auto* m = std::get_if<MonomialBlock>(&blocks_[bi])) {
        int d = 0;
        for (auto [v, p] : m->factors[local]) d += p;
        return d;
    }
    return std::nullopt;
}

std::optional<Index> Dictionary::coordinate_index(int j) const {
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        if (const auto* m = std::get_if<MonomialBlock>(&blocks_[bi])) {
            if (m->m < 1) continue;
            // degree-1 terms follow the constant, in state order
            return offsets_[bi] + 1 + j;
        }
    }
    return std::nullopt;
}

bool Dictionary::all_monomial() const {
    for (const auto& b : blocks_)
        if (!std::holds_alternative<MonomialBlock>(b)) return false;
    return !blocks_.empty();
}

bool Dictionary::operator==(const Dictionary& other) const {
    if (n_ != other.n_ || size_ != other.size_ || blocks_.size() != other.blocks_.size()) return false;
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        if (!block_equal(blocks_[i], other.blocks_[i])) return false;
    return true;
}

std::vector<Index> degree_one_index_map(const Dictionary& d) {
    std::vector<Index> map;
    for (int j = 0; j < d.dim(); ++j) {
        auto l = d.coordinate_index(j);
        if (!l) throw ConfigError("dictionary lacks the coordinate function x" + std::to_string(j + 1));
        map.push_back(*l);
    }
    return map;
}

void check_no_duplicates(const Dictionary& d) {
    std::set<std::string> seen;
    for (Index k = 0; k < d.size(); ++k) {
        auto key = d.key(k);
        if (!seen.insert(key).second) throw ConfigError("dictionary entry '" + d.label(k) + "' appears twice");
    }
}

}  // namespace klift
