#include "klift/sparse_reg.hpp"

#include "klift/error.hpp"
#include "klift/numlin.hpp"

#include <algorithm>
#include <cmath>

namespace klift {

double default_penalty(RegressionMode mode, Index K) {
    switch (mode) {
    case RegressionMode::Lasso: return 1.0 / static_cast<double>(K);
    case RegressionMode::L1L2: return 0.01;
    default: return 0.0;
    }
}

RegressionSpec resolve(const RegressionSpec& spec, Index K, Index NF) {
    RegressionSpec out = spec;
    if (out.mode == RegressionMode::Auto) {
        out.mode = K < NF ? RegressionMode::L1L2 : RegressionMode::Lasso;
    }
    if (out.penalty < 0.0) out.penalty = default_penalty(out.mode, K);
    return out;
}

std::string to_string(RegressionMode mode) {
    switch (mode) {
    case RegressionMode::Ols: return "ols";
    case RegressionMode::Lasso: return "lasso";
    case RegressionMode::L1L2: return "l1l2";
    case RegressionMode::Auto: return "auto";
    }
    return "?";
}

RegressionMode regression_mode_from_string(const std::string& s) {
    if (s == "ols") return RegressionMode::Ols;
    if (s == "lasso") return RegressionMode::Lasso;
    if (s == "l1l2") return RegressionMode::L1L2;
    if (s == "auto") return RegressionMode::Auto;
    throw ConfigError("unknown regression mode '" + s + "' (expected ols, lasso, l1l2 or auto)");
}

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

namespace {

double loss_scale(RegressionMode mode, Index K) {
    return mode == RegressionMode::Lasso ? static_cast<double>(K) : 1.0;
}

struct CdProblem {
    Vector w;
    Vector r;
    std::vector<Index> active;  // working set, sorted
    std::vector<char> in_active;
    int it = 0;
    RegressionReport* rep = nullptr;
};

[[noreturn]] void not_converged(const RegressionSpec& spec, CdProblem& pb) {
    pb.rep->converged = false;
    pb.rep->iterations = pb.it;
    throw ConvergenceError("coordinate descent did not converge within " + std::to_string(spec.max_iter) +
                               " sweeps (last max update " + std::to_string(pb.rep->max_update) + ")",
                           pb.rep->residual_history);
}

// Cyclic passes over the working set until the largest update drops below tol. Small sets go through
// their Gram matrix instead of the residual.
void solve_working_set(const Matrix& Z, const Vector& colsq, double s, double p, const RegressionSpec& spec,
                       CdProblem& pb) {
    const auto a = static_cast<Index>(pb.active.size());
    auto& rep = *pb.rep;
    if (a < Z.rows()) {
        Matrix ZA(Z.rows(), a);
        Vector wA(a);
        for (Index i = 0; i < a; ++i) {
            ZA.col(i) = Z.col(pb.active[i]);
            wA(i) = pb.w(pb.active[i]);
        }
        const Vector w0 = wA;
        const Matrix G = ZA.transpose() * ZA;
        Vector q = ZA.transpose() * pb.r;  // Z_A' r, kept current
        double rn2 = pb.r.squaredNorm();
        bool ok = true;
        while (true) {
            double max_up = 0.0;
            for (Index i = 0; i < a; ++i) {
                const double cj = G(i, i) / s;
                if (cj == 0.0) continue;
                const double old = wA(i);
                const double delta = soft_threshold(q(i) / s + cj * old, p) / cj - old;
                if (delta != 0.0) {
                    rn2 += delta * (delta * G(i, i) - 2.0 * q(i));
                    q.noalias() -= delta * G.col(i);
                    wA(i) += delta;
                    max_up = std::max(max_up, std::abs(delta));
                }
            }
            rep.max_update = max_up;
            ++pb.it;
            rep.residual_history.push_back(std::sqrt(std::max(rn2, 0.0)));
            if (max_up < spec.tol) break;
            if (pb.it >= spec.max_iter) {
                ok = false;
                break;
            }
        }
        for (Index i = 0; i < a; ++i) pb.w(pb.active[i]) = wA(i);
        pb.r.noalias() -= ZA * (wA - w0);
        if (!ok) not_converged(spec, pb);
        return;
    }
    while (true) {
        double max_up = 0.0;
        for (Index j : pb.active) {
            const double cj = colsq(j);
            if (cj == 0.0) continue;
            const double old = pb.w(j);
            const double delta = soft_threshold(Z.col(j).dot(pb.r) / s + cj * old, p) / cj - old;
            if (delta != 0.0) {
                pb.r.noalias() -= delta * Z.col(j);
                pb.w(j) += delta;
                max_up = std::max(max_up, std::abs(delta));
            }
        }
        rep.max_update = max_up;
        ++pb.it;
        rep.residual_history.push_back(pb.r.norm());
        if (max_up < spec.tol) return;
        if (pb.it >= spec.max_iter) not_converged(spec, pb);
    }
}

// Working-set coordinate descent for every column of F against the same design Z. Columns outside a
// problem's working set stay at zero; each round checks their optimality conditions for all pending
// problems with one product Z' R and admits the worst violators (at most doubling the set).
void coordinate_descent_many(const Matrix& Z, const Matrix& F, double s, double p, const RegressionSpec& spec,
                             std::vector<Vector>& W, std::vector<RegressionReport*>& reps) {
    const Index NF = Z.cols();
    const Index m = F.cols();
    Vector colsq(NF);
    for (Index j = 0; j < NF; ++j) colsq(j) = Z.col(j).squaredNorm() / s;

    std::vector<CdProblem> pbs(m);
    std::vector<Index> pending;
    for (Index c = 0; c < m; ++c) {
        pbs[c].w = Vector::Zero(NF);
        pbs[c].r = F.col(c);
        pbs[c].in_active.assign(NF, 0);
        pbs[c].rep = reps[c];
        pending.push_back(c);
    }
    // bound the gradient block to about 256 MB
    const Index batch = std::max<Index>(1, (Index{1} << 25) / std::max<Index>(NF, 1));
    std::vector<std::pair<double, Index>> viol;
    while (!pending.empty()) {
        std::vector<Index> next;
        for (std::size_t b0 = 0; b0 < pending.size(); b0 += batch) {
            const auto nb = static_cast<Index>(std::min<std::size_t>(batch, pending.size() - b0));
            Matrix R(Z.rows(), nb);
            for (Index i = 0; i < nb; ++i) R.col(i) = pbs[pending[b0 + i]].r;
            const Matrix G = Z.transpose() * R;
            for (Index i = 0; i < nb; ++i) {
                auto& pb = pbs[pending[b0 + i]];
                viol.clear();
                for (Index j = 0; j < NF; ++j) {
                    if (pb.in_active[j] || colsq(j) == 0.0) continue;
                    const double excess = std::abs(G(j, i)) / s - p;
                    if (excess > 0.0) viol.emplace_back(-excess, j);
                }
                if (viol.empty()) continue;
                const std::size_t take = std::min(viol.size(), std::max<std::size_t>(16, pb.active.size()));
                std::partial_sort(viol.begin(), viol.begin() + static_cast<std::ptrdiff_t>(take), viol.end());
                for (std::size_t k = 0; k < take; ++k) {
                    pb.in_active[viol[k].second] = 1;
                    pb.active.push_back(viol[k].second);
                }
                std::sort(pb.active.begin(), pb.active.end());
                solve_working_set(Z, colsq, s, p, spec, pb);
                next.push_back(pending[b0 + i]);
            }
        }
        pending = std::move(next);
    }
    for (Index c = 0; c < m; ++c) {
        reps[c]->iterations = pbs[c].it;
        W[c] = std::move(pbs[c].w);
    }
}

}  // namespace

std::vector<RegressionResult> lasso_many(const Matrix& H, const Matrix& F, const RegressionSpec& in) {
    if (H.rows() != F.rows())
        throw SizeError("regression: H has " + std::to_string(H.rows()) + " rows, f has " + std::to_string(F.rows()));
    if (!H.allFinite() || !F.allFinite()) throw NumericalError("regression: non-finite input");
    if (in.tol <= 0.0) throw ConfigError("regression tol must be positive");
    const RegressionSpec spec = resolve(in, H.rows(), H.cols());
    if (spec.penalty < 0.0) throw ConfigError("regression penalty must be non-negative");

    const Index K = H.rows();
    const Index NF = H.cols();
    const Index m = F.cols();
    std::vector<Index> zero_columns;
    for (Index j = 0; j < NF; ++j)
        if (H.col(j).isZero(0.0)) zero_columns.push_back(j);

    std::vector<RegressionResult> out(m);
    std::vector<RegressionReport*> reps;
    for (auto& o : out) {
        auto& rep = o.report;
        rep.mode = spec.mode;
        rep.penalty = spec.penalty;
        rep.zero_columns = zero_columns;
        if (!zero_columns.empty())
            rep.warnings.push_back(std::to_string(zero_columns.size()) + " all-zero library column(s) given coefficient 0");
        reps.push_back(&rep);
    }
    std::vector<Vector> W(m);

    if (spec.mode == RegressionMode::Ols || spec.penalty == 0.0) {
        for (Index c = 0; c < m; ++c) {
            out[c].w = lstsq(H, F.col(c), spec.rcond);
            for (Index j : zero_columns) out[c].w(j) = 0.0;
            out[c].report.nonzeros = (out[c].w.array() != 0.0).count();
        }
        return out;
    }

    const double s = loss_scale(spec.mode, K);
    if (!spec.standardize) {
        coordinate_descent_many(H, F, s, spec.penalty, spec, W, reps);
        for (Index c = 0; c < m; ++c) out[c].w = std::move(W[c]);
    } else {
        // constant, non-zero columns carry an unpenalised intercept
        std::vector<Index> constant;
        std::vector<Index> free;
        for (Index j = 0; j < NF; ++j) {
            const double hi = H.col(j).maxCoeff();
            const double lo = H.col(j).minCoeff();
            const double scale = std::max(std::abs(hi), std::abs(lo));
            if (scale == 0.0) continue;
            if (hi - lo <= 1e-12 * scale) constant.push_back(j);
            else free.push_back(j);
        }
        const bool intercept = !constant.empty();
        Matrix Z(K, static_cast<Index>(free.size()));
        Vector mu = Vector::Zero(Z.cols());
        Vector sd(Z.cols());
        for (Index c = 0; c < Z.cols(); ++c) {
            const auto h = H.col(free[c]);
            if (intercept) mu(c) = h.mean();
            Z.col(c) = h.array() - mu(c);
            sd(c) = std::sqrt(Z.col(c).squaredNorm() / static_cast<double>(K));
            Z.col(c) /= sd(c);
        }
        Vector fbar = Vector::Zero(m);
        if (intercept) fbar = F.colwise().mean().transpose();
        const Matrix Fc = F.rowwise() - fbar.transpose();
        coordinate_descent_many(Z, Fc, s, spec.penalty, spec, W, reps);
        for (Index c = 0; c < m; ++c) {
            auto& w = out[c].w;
            w = Vector::Zero(NF);
            double b = fbar(c);
            for (Index k = 0; k < Z.cols(); ++k) {
                w(free[k]) = W[c](k) / sd(k);
                b -= mu(k) * w(free[k]);
            }
            if (intercept) w(constant.front()) = b / H(0, constant.front());
        }
    }
    for (auto& o : out) o.report.nonzeros = (o.w.array() != 0.0).count();
    return out;
}

RegressionResult lasso(const Matrix& H, const Vector& f, const RegressionSpec& spec) {
    if (H.rows() != f.size())
        throw SizeError("regression: H has " + std::to_string(H.rows()) + " rows, f has " + std::to_string(f.size()));
    return std::move(lasso_many(H, f, spec).front());
}

double kkt_violation(const Matrix& H, const Vector& f, const Vector& w, RegressionMode mode, double penalty) {
    const double s = loss_scale(mode, H.rows());
    Vector g = H.transpose() * (f - H * w) / s;  // negative gradient of the smooth part
    double worst = 0.0;
    for (Index j = 0; j < w.size(); ++j) {
        double v;
        if (w(j) != 0.0) v = std::abs(g(j) - penalty * (w(j) > 0 ? 1.0 : -1.0));
        else v = std::max(0.0, std::abs(g(j)) - penalty);
        worst = std::max(worst, v);
    }
    return worst;
}

}  // namespace klift
