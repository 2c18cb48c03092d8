#include "klift/koopman_main.hpp"

#include "klift/error.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

namespace klift {

namespace {

std::string size_message(Index K, Index N, int n, int m) {
    return "K = " + std::to_string(K) + " snapshot pairs but N = (m+n)!/(m! n!) = " + std::to_string(N) +
           " basis functions (n = " + std::to_string(n) + ", m = " + std::to_string(m) +
           "); increase K (more snapshot pairs) or decrease m";
}

Matrix points_for(const Dictionary& d, const SnapshotSet& data, bool Y) {
    if (d.dim() == data.n()) return Y ? data.Y : data.X;
    if (d.dim() == data.n() + data.p()) return Y ? data.augmented_Y() : data.augmented_X();
    throw SizeError("dictionary acts on " + std::to_string(d.dim()) + " variables, data has n = " +
                    std::to_string(data.n()) + ", p = " + std::to_string(data.p()));
}

MainResult read_out(GeneratorEstimate gen, int n, int p, Index NF) {
    MainResult res;
    const auto map = degree_one_index_map(gen.dictionary);
    Matrix W(NF, n);
    double dropped = 0.0;
    for (int j = 0; j < n; ++j) {
        W.col(j) = gen.L.col(map[j]).head(NF);
        if (gen.L.rows() > NF) dropped = std::max(dropped, gen.L.col(map[j]).tail(gen.L.rows() - NF).cwiseAbs().maxCoeff());
    }
    res.truncated_max = dropped;
    if (gen.L.rows() > NF) {
        spdlog::debug("truncated coefficients above the field degree, largest |w| = {:.3e}", dropped);
        res.warnings.push_back("coefficients above the field degree truncated (largest |w| " + std::to_string(dropped) + ")");
    }
    Dictionary lib;
    if (NF == gen.dictionary.size()) {
        lib = gen.dictionary;
    } else {
        const auto* mono = std::get_if<MonomialBlock>(&gen.dictionary.blocks().front());
        // graded order: the degree <= m_F monomials are a prefix of the degree <= m list
        int mF = 0;
        while (static_cast<Index>(monomial_count(mono->n, mF)) < NF) ++mF;
        lib = Dictionary::monomial(mono->n, mF);
    }
    for (const auto& w : gen.warnings) res.warnings.push_back(w);
    res.model = VectorFieldModel(std::move(lib), std::move(W), n, p);
    res.generator = std::move(gen);
    return res;
}

}  // namespace

GeneratorEstimate main_generator(const Matrix& Xa, const Matrix& Ya, const Dictionary& d, double Ts,
                                 const MainOptions& opt) {
    if (!(Ts > 0.0)) throw ConfigError("sampling period Ts must be positive");
    const Matrix Px = d.lift(Xa);
    const Matrix Py = d.lift(Ya);
    const Index K = Px.rows();
    const Index N = Px.cols();
    if (K < N) throw SizeError("K = " + std::to_string(K) + " snapshot pairs but N = " + std::to_string(N) +
                               " basis functions; increase K (more snapshot pairs) or decrease the lift");

    GeneratorEstimate gen;
    gen.dictionary = d;
    gen.Ts = Ts;
    const auto pr = pinv(Px, opt.rcond);
    gen.pinv = {pr.rank, N, pr.cutoff, pr.condition};
    spdlog::debug("main: K={} N={} rank={} cond={:.3e}", K, N, pr.rank, pr.condition);

    auto take_log = [&](const Matrix& A) {
        try {
            return logm_principal(A, opt.branch_policy);
        } catch (const BranchError& e) {
            throw BranchError("principal logarithm undefined: " + std::to_string(e.offending.size()) +
                                  " eigenvalue(s) of pinv(P_x) P_y on the negative real axis (system aliasing); "
                                  "reduce the sampling period Ts or rescale the data",
                              e.offending);
        }
    };

    if (pr.rank == N) {
        const Matrix U = pr.pinv * Py;
        gen.logm = take_log(U);
        gen.L = gen.logm.logm / Ts;
    } else {
        if (opt.rank_policy == RankPolicy::Error)
            throw ConditioningError("P_x is rank deficient: numerical rank " + std::to_string(pr.rank) + " < N = " +
                                        std::to_string(N) + " (cutoff " + std::to_string(pr.cutoff) + ")",
                                    pr.rank, N);
        if (pr.rank == 0) throw ConditioningError("P_x is numerically zero", 0, N);
        const Matrix Vr = pr.V.leftCols(pr.rank);
        const Matrix B = Vr.transpose() * (pr.pinv * Py) * Vr;
        gen.logm = take_log(B);
        gen.L = Vr * gen.logm.logm * Vr.transpose() / Ts;
        // entries that vanish on every sample carry no information
        for (Index k = 0; k < N; ++k) {
            if (Px.col(k).isZero(0.0)) {
                gen.L.row(k).setZero();
                gen.L.col(k).setZero();
            }
        }
        gen.warnings.push_back("P_x rank " + std::to_string(pr.rank) + " < N = " + std::to_string(N) +
                               "; generator restricted to the retained subspace, degenerate coefficients zeroed");
        spdlog::warn("{}", gen.warnings.back());
    }
    if (!gen.logm.branch_ok) {
        gen.warnings.push_back(std::to_string(gen.logm.negative_real_eigenvalues) +
                               " negative real eigenvalue(s); real part of the logarithm kept");
        spdlog::warn("{}", gen.warnings.back());
    }
    gen.logm.logm = Matrix();
    return gen;
}

MainResult identify_main(const SnapshotSet& data, int m, int m_F, const MainOptions& opt) {
    validate(data);
    if (data.inputs) throw ConfigError("data has inputs; use the input-augmented main method");
    if (m_F < 1 || m < m_F) throw ConfigError("main method needs m >= m_F >= 1");
    const int n = data.n();
    const auto d = Dictionary::monomial(n, m);
    if (data.K() < d.size()) throw SizeError(size_message(data.K(), d.size(), n, m));
    auto gen = main_generator(data.X, data.Y, d, data.Ts, opt);
    return read_out(std::move(gen), n, 0, static_cast<Index>(monomial_count(n, m_F)));
}

MainResult identify_main_with_inputs(const SnapshotSet& data, int m, int m_F, const MainOptions& opt) {
    validate(data);
    if (!data.inputs) return identify_main(data, m, m_F, opt);
    if (m_F < 1 || m < m_F) throw ConfigError("main method needs m >= m_F >= 1");
    const int n = data.n();
    const int p = data.p();
    const auto d = Dictionary::monomial(n + p, m);
    if (data.K() < d.size()) throw SizeError(size_message(data.K(), d.size(), n + p, m));
    MainOptions o = opt;
    o.rank_policy = RankPolicy::Restrict;
    auto gen = main_generator(data.augmented_X(), data.augmented_Y(), d, data.Ts, o);
    return read_out(std::move(gen), n, p, static_cast<Index>(monomial_count(n + p, m_F)));
}

MainResult identify_main_augmented(const SnapshotSet& data, int m, const Dictionary& extra, const MainOptions& opt) {
    validate(data);
    if (data.inputs) throw UnsupportedError("augmented dictionaries with inputs are not supported");
    if (m < 1) throw ConfigError("main method needs m >= 1");
    const int n = data.n();
    std::vector<Dictionary> parts = {Dictionary::monomial(n, m)};
    if (!extra.empty()) {
        if (extra.dim() != n) throw SizeError("extra dictionary acts on " + std::to_string(extra.dim()) + " variables, expected " + std::to_string(n));
        parts.push_back(extra);
    }
    const auto d = Dictionary::composite(parts);
    check_no_duplicates(d);
    if (data.K() < d.size())
        throw SizeError("K = " + std::to_string(data.K()) + " snapshot pairs but the lift has N = " +
                        std::to_string(d.size()) + " functions; increase K (more snapshot pairs) or decrease m");
    auto gen = main_generator(data.X, data.Y, d, data.Ts, opt);
    return read_out(std::move(gen), n, 0, d.size());
}

Matrix vector_field_at_samples_main(const GeneratorEstimate& gen, const SnapshotSet& data) {
    const Matrix Px = gen.dictionary.lift(points_for(gen.dictionary, data, false));
    if (Px.cols() != gen.L.rows()) throw SizeError("generator does not match its dictionary");
    const auto map = degree_one_index_map(gen.dictionary);
    Matrix F(Px.rows(), data.n());
    for (int j = 0; j < data.n(); ++j) F.col(j) = Px * gen.L.col(map[j]);
    return F;
}

}  // namespace klift
