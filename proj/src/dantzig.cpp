#include "latgm/dantzig.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "latgm/error.hpp"
#include "latgm/io.hpp"
#include "latgm/kernels.hpp"
#include "latgm/linalg.hpp"

namespace latgm {

namespace {

void require_square_same(const DenseMatrix& sigma_hat, const DenseMatrix& m, const char* name) {
    if (m.rows() != sigma_hat.rows() || m.cols() != sigma_hat.cols()) {
        throw DimensionError(std::string(name) + " must match the shape of Sigma_hat");
    }
}

DenseMatrix residual(const DenseMatrix& sigma_hat, const DenseMatrix& s, const DenseMatrix& l) {
    DenseMatrix r = matmul(sigma_hat, s + l);
    r -= DenseMatrix::identity(r.rows());
    return r;
}

}  // namespace

void DantzigConfig::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ContractError("lambda must be positive and finite");
    if (!(mu.value() > 0.0)) throw ContractError("mu must be positive");
    if (max_iters < 1) throw ContractError("max_iters must be at least 1");
    if (!(kkt_tol > 0.0)) throw ContractError("kkt_tol must be positive");
    if (!(step_safety > 0.0 && step_safety < 1.0)) throw ContractError("step_safety must lie in (0, 1)");
    if (check_every < 1) throw ContractError("check_every must be at least 1");
}

double KktBreakdown::max() const {
    return std::max({feasibility, sparse_stationarity, lowrank_stationarity, complementarity});
}

double objective_dantzig(const DenseMatrix& s, const DenseMatrix& l, NuclearWeight mu) {
    if (s.rows() != l.rows() || s.cols() != l.cols()) throw DimensionError("objective_dantzig: S and L differ in shape");
    if (mu.is_infinite()) {
        if (linf_entrywise(l) != 0.0) throw ContractError("objective_dantzig: infinite mu requires L = 0");
        return l1_entrywise(s);
    }
    return l1_entrywise(s) + mu.value() * nuclear_norm(l);
}

double feasibility_violation(const DenseMatrix& sigma_hat, const DenseMatrix& s, const DenseMatrix& l, double lambda) {
    return std::fmax(0.0, linf_entrywise(residual(sigma_hat, s, l)) - lambda);
}

KktBreakdown kkt_breakdown(const DenseMatrix& sigma_hat, const DenseMatrix& s, const DenseMatrix& l, const DenseMatrix& y,
                           double lambda, NuclearWeight mu) {
    if (!sigma_hat.is_square()) throw DimensionError("kkt_residual: Sigma_hat is not square");
    require_square_same(sigma_hat, s, "S");
    require_square_same(sigma_hat, l, "L");
    require_square_same(sigma_hat, y, "Y");
    const std::size_t p = sigma_hat.rows();
    KktBreakdown k;

    const DenseMatrix r = residual(sigma_hat, s, l);
    k.feasibility = std::fmax(0.0, linf_entrywise(r) - lambda);

    // -W must be a subgradient of |.|_1 at S and of mu ||.||_* at L.
    const DenseMatrix w = matmul(sigma_hat, y);
    for (std::size_t i = 0; i < p * p; ++i) {
        const double wi = w.data()[i];
        const double si = s.data()[i];
        const double dist = si != 0.0 ? std::fabs(wi + std::copysign(1.0, si)) : std::fmax(0.0, std::fabs(wi) - 1.0);
        k.sparse_stationarity = std::fmax(k.sparse_stationarity, dist);
    }

    if (mu.is_infinite()) {
        if (linf_entrywise(l) != 0.0) throw ContractError("kkt_residual: infinite mu requires L = 0");
    } else {
        const double m = mu.value();
        const SvdResult wsvd{svd(w)};
        double lr = std::fmax(0.0, wsvd.singular_values.front() - m);
        const SvdResult ls = svd(l);
        const std::size_t rank = numeric_rank(ls.singular_values);
        if (rank > 0) {
            // -W V_r = mu U_r and -W^T U_r = mu V_r
            for (std::size_t t = 0; t < rank; ++t) {
                for (std::size_t i = 0; i < p; ++i) {
                    double wv = 0.0;
                    double wtu = 0.0;
                    for (std::size_t j = 0; j < p; ++j) {
                        wv += w(i, j) * ls.right_vectors(j, t);
                        wtu += w(j, i) * ls.left_vectors(j, t);
                    }
                    lr = std::fmax(lr, std::fabs(-wv - m * ls.left_vectors(i, t)));
                    lr = std::fmax(lr, std::fabs(-wtu - m * ls.right_vectors(i, t)));
                }
            }
        }
        k.lowrank_stationarity = lr;
    }

    double inner = 0.0;
    for (std::size_t i = 0; i < p * p; ++i) inner += y.data()[i] * r.data()[i];
    k.complementarity = std::fabs(inner - lambda * l1_entrywise(y));
    return k;
}

double kkt_residual(const DenseMatrix& sigma_hat, const DenseMatrix& s, const DenseMatrix& l, const DenseMatrix& y,
                    double lambda, NuclearWeight mu) {
    return kkt_breakdown(sigma_hat, s, l, y, lambda, mu).max();
}

DenseMatrix dual_prox(const DenseMatrix& v, double sigma, double lambda) {
    if (!v.is_square()) throw DimensionError("dual_prox: matrix is not square");
    DenseMatrix out = v;
    for (std::size_t i = 0; i < v.rows(); ++i) out(i, i) -= sigma;
    kernels::soft_threshold(out.data(), out.data(), sigma * lambda);
    return out;
}

DantzigResult fit_dantzig(const DenseMatrix& input, const DantzigConfig& cfg) {
    cfg.validate();
    if (!input.is_square()) throw DimensionError("fit_dantzig: Sigma_hat is not square");
    const DenseMatrix sigma_hat = symmetrize(input);
    const std::size_t p = sigma_hat.rows();
    const double op_norm = std::sqrt(2.0) * spectral_norm(sigma_hat);
    if (!(op_norm > 0.0)) throw DegenerateInputError("fit_dantzig: Sigma_hat has zero spectral norm");
    const double tau = cfg.step_safety / op_norm;
    const double sigma = tau;
    const bool lowrank = !cfg.mu.is_infinite();

    DantzigResult out{DenseMatrix(p, p), DenseMatrix(p, p), DenseMatrix(p, p), 0.0, 0.0, 0.0, 0, false, {}};
    DenseMatrix& s = out.S_hat;
    DenseMatrix& l = out.L_hat;
    DenseMatrix& y = out.Y;
    DenseMatrix s_bar(p, p);
    DenseMatrix l_bar(p, p);

    auto check = [&] {
        out.kkt_residual = kkt_residual(sigma_hat, s, l, y, cfg.lambda, cfg.mu);
        return out.kkt_residual <= cfg.kkt_tol;
    };

    if (check()) {
        out.converged = true;
    }
    for (int it = 1; it <= cfg.max_iters && !out.converged; ++it) {
        // Dual ascent at the extrapolated primal point.
        DenseMatrix v = matmul(sigma_hat, s_bar + l_bar);
        v *= sigma;
        v += y;
        y = dual_prox(v, sigma, cfg.lambda);

        // Primal descent.
        const DenseMatrix w = matmul(sigma_hat, y);
        DenseMatrix s_next = s;
        kernels::axpy(-tau, w.data(), s_next.data());
        kernels::soft_threshold(s_next.data(), s_next.data(), tau);
        DenseMatrix l_next(p, p);
        if (lowrank) {
            l_next = l;
            kernels::axpy(-tau, w.data(), l_next.data());
            l_next = svt(l_next, tau * cfg.mu.value());
        }

        s_bar = 2.0 * s_next;
        s_bar -= s;
        l_bar = 2.0 * l_next;
        l_bar -= l;
        s = std::move(s_next);
        l = std::move(l_next);
        out.iterations = it;

        if (it % 100 == 0) out.objective_trace.emplace_back(it, objective_dantzig(s, l, cfg.mu));
        if (it % cfg.check_every == 0 || it == cfg.max_iters) out.converged = check();
    }

    out.primal_objective = objective_dantzig(s, l, cfg.mu);
    out.feasibility_violation = feasibility_violation(sigma_hat, s, l, cfg.lambda);
    if (!out.converged) check();
    out.converged = out.kkt_residual <= cfg.kkt_tol && out.feasibility_violation <= cfg.kkt_tol;
    return out;
}

void write_dantzig_result(const std::filesystem::path& dir, const DantzigResult& fit, const DantzigConfig& cfg) {
    io::write_matrix_csv(dir / "S_hat.csv", fit.S_hat);
    io::write_matrix_csv(dir / "L_hat.csv", fit.L_hat);
    io::write_matrix_csv(dir / "Y.csv", fit.Y);
    std::string trace = "iteration,objective\n";
    for (const auto& [it, obj] : fit.objective_trace) trace += std::to_string(it) + ',' + io::format_double(obj) + '\n';
    io::write_text(dir / "trace.csv", trace);
    io::write_key_values(dir / "meta.txt",
                         {
                             {"estimator", "dantzig"},
                             {"lambda", io::format_double(cfg.lambda)},
                             {"mu", io::format_double(cfg.mu.value())},
                             {"max_iters", std::to_string(cfg.max_iters)},
                             {"kkt_tol", io::format_double(cfg.kkt_tol)},
                             {"step_safety", io::format_double(cfg.step_safety)},
                             {"iterations", std::to_string(fit.iterations)},
                             {"converged", fit.converged ? "true" : "false"},
                             {"objective", io::format_double(fit.primal_objective)},
                             {"feasibility_violation", io::format_double(fit.feasibility_violation)},
                             {"kkt_residual", io::format_double(fit.kkt_residual)},
                         });
}

}  // namespace latgm
