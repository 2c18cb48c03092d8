#include "klift/koopman_dual.hpp"

#include "klift/error.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace klift {

DualGeneratorEstimate dual_generator(const SnapshotSet& data, const Dictionary& d, const DualOptions& opt) {
    validate(data);
    if (d.dim() != data.n())
        throw SizeError("test dictionary acts on " + std::to_string(d.dim()) + " variables, data has n = " +
                        std::to_string(data.n()));
    const Index K = data.K();
    const Index N = d.size();
    if (N < K)
        throw SizeError("dual method needs N >= K: N = " + std::to_string(N) + " test functions for K = " +
                        std::to_string(K) + " snapshot pairs");
    const Matrix Px = d.lift(data.X);
    const Matrix Py = d.lift(data.Y);
    const auto pr = pinv(Px, opt.rcond);

    DualGeneratorEstimate gen;
    gen.dictionary = d;
    gen.Ts = data.Ts;
    gen.pinv = {pr.rank, K, pr.cutoff, pr.condition};
    spdlog::debug("dual: K={} N={} rank={} cond={:.3e}", K, N, pr.rank, pr.condition);
    if (pr.rank < K && opt.rank_policy == RankPolicy::Restrict) {
        gen.warnings.push_back("P_x row rank " + std::to_string(pr.rank) + " < K = " + std::to_string(K) +
                               "; generator restricted to the retained subspace");
        spdlog::info("{}", gen.warnings.back());
    } else if (pr.rank < K) {
        throw ConditioningError("P_x has row rank " + std::to_string(pr.rank) + " < K = " + std::to_string(K) +
                                    " (duplicate or nearly duplicate samples?)",
                                pr.rank, K);
    }
    auto take_log = [&](const Matrix& A) {
        try {
            return logm_principal(A, opt.branch_policy);
        } catch (const BranchError& e) {
            throw BranchError(std::string(e.what()) + "; reduce the sampling period Ts or use branch_policy real_part",
                              e.offending);
        }
    };
    if (pr.rank == K) {
        gen.logm = take_log(Py * pr.pinv);
        gen.Ltilde = gen.logm.logm / data.Ts;
    } else {
        if (pr.rank == 0) throw ConditioningError("P_x is numerically zero", 0, K);
        // left singular vectors of the retained subspace
        const Index r = pr.rank;
        const Matrix Ur = Px * pr.V.leftCols(r) * pr.singular_values.head(r).cwiseInverse().asDiagonal();
        const Matrix B = Ur.transpose() * (Py * pr.pinv) * Ur;
        gen.logm = take_log(B);
        gen.Ltilde = Ur * gen.logm.logm * Ur.transpose() / data.Ts;
    }
    gen.logm.logm = Matrix();
    if (!gen.logm.branch_ok) {
        std::ostringstream os;
        os << gen.logm.negative_real_eigenvalues
           << " negative real eigenvalue(s) of P_y pinv(P_x); real part of the logarithm kept (largest imaginary residue "
           << std::scientific << std::setprecision(3) << gen.logm.max_imag_residue << ")";
        gen.warnings.push_back(os.str());
        spdlog::warn("{}", gen.warnings.back());
    }
    return gen;
}

FieldSamples field_samples(const DualGeneratorEstimate& gen, const SnapshotSet& data) {
    if (gen.Ltilde.rows() != data.K()) throw SizeError("generator size does not match K");
    FieldSamples fs;
    fs.F_hat = gen.Ltilde * data.X;
    fs.rows.resize(data.K());
    for (Index k = 0; k < data.K(); ++k) fs.rows[k] = k;
    return fs;
}

DualResult identify_dual(const SnapshotSet& data, const Dictionary& test, const std::vector<Dictionary>& libraries,
                         const RegressionSpec& reg, const DualOptions& opt) {
    const int n = data.n();
    if (libraries.size() != 1 && static_cast<int>(libraries.size()) != n)
        throw SizeError("expected one shared library or n = " + std::to_string(n) + " libraries");
    for (const auto& lib : libraries)
        if (lib.dim() != n) throw SizeError("library acts on " + std::to_string(lib.dim()) + " variables, expected n = " + std::to_string(n));

    DualResult res;
    res.generator = dual_generator(data, test, opt);
    res.samples = field_samples(res.generator, data);
    res.warnings = res.generator.warnings;

    const bool shared = libraries.size() == 1;
    std::vector<Vector> W(n);
    res.reports.resize(n);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const int nw = std::max(1, std::min(opt.workers, n));
    auto record_failure = [&]() {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
    };

    if (shared) {
        // states share H, so each worker solves a contiguous block of states together
        const Matrix H = libraries[0].lift(data.X);
        auto block = [&](int lo, int hi) {
            try {
                auto rs = lasso_many(H, res.samples.F_hat.middleCols(lo, hi - lo), reg);
                for (int j = lo; j < hi; ++j) {
                    W[j] = std::move(rs[j - lo].w);
                    res.reports[j] = std::move(rs[j - lo].report);
                }
            } catch (...) {
                record_failure();
            }
        };
        if (nw == 1) {
            block(0, n);
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < nw; ++t) pool.emplace_back(block, n * t / nw, n * (t + 1) / nw);
            for (auto& t : pool) t.join();
        }
    } else {
        std::atomic<int> next{0};
        auto worker = [&]() {
            while (true) {
                const int j = next.fetch_add(1);
                if (j >= n) return;
                try {
                    RegressionResult r = lasso(libraries[j].lift(data.X), res.samples.F_hat.col(j), reg);
                    W[j] = std::move(r.w);
                    res.reports[j] = std::move(r.report);
                } catch (...) {
                    record_failure();
                    return;
                }
            }
        };
        if (nw == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < nw; ++t) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
    }
    if (failure) std::rethrow_exception(failure);

    for (int j = 0; j < n; ++j)
        for (const auto& w : res.reports[j].warnings) res.warnings.push_back("state " + std::to_string(j + 1) + ": " + w);
    res.model = VectorFieldModel(libraries, std::move(W), n, 0);
    return res;
}

}  // namespace klift
