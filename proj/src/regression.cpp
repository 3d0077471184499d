#include "latgm/regression.hpp"

#include <cfloat>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>
#include <cmath>
#include <string>

#include "latgm/error.hpp"
#include "latgm/io.hpp"
#include "latgm/kernels.hpp"

namespace latgm {

namespace {

void require_regression_shapes(const DenseMatrix& x, const DenseMatrix& s, const DenseMatrix& l) {
    const std::size_t p = x.cols();
    if (s.rows() != p || s.cols() != p || l.rows() != p || l.cols() != p) {
        throw DimensionError("S and L must be " + std::to_string(p) + "x" + std::to_string(p) + " to match X");
    }
}

// B = I - S - L
DenseMatrix identity_minus(const DenseMatrix& s, const DenseMatrix& l) {
    DenseMatrix b = DenseMatrix::identity(s.rows());
    b -= s;
    b -= l;
    return b;
}

// Coordinate descent on the off-diagonal of `s`, given the Gram matrix G = X^T X.
// corr holds (G B)^T, i.e. row j = X^T r_j, and is kept in sync with `s`.
// One cyclic sweep over the rows listed in `rows` for column j; returns the
// largest coordinate change.
double sweep_column(const DenseMatrix& gram, DenseMatrix& s, std::span<double> cj, std::size_t j, double lambda,
                    std::span<const std::size_t> rows) {
    double max_change = 0.0;
    for (std::size_t i : rows) {
        const double gii = gram(i, i);
        const double old = s(i, j);
        const double updated = soft_threshold(cj[i] + gii * old, lambda) / gii;
        const double delta = updated - old;
        if (delta == 0.0) continue;
        s(i, j) = updated;
        kernels::axpy(-delta, gram.row(i), cj);
        max_change = std::fmax(max_change, std::fabs(delta));
    }
    return max_change;
}

constexpr int kActiveSweepsPerPass = 1000;

// Full sweeps (at most max_passes) alternate with sweeps over the current
// nonzero set until it settles; stops once a full sweep changes nothing by
// more than tol.
void lasso_sweeps(const DenseMatrix& gram, DenseMatrix& s, DenseMatrix& corr, double lambda,
                  const LassoBlockOptions& opts) {
    const std::size_t p = gram.rows();
    std::vector<std::size_t> all, active;
    for (std::size_t j = 0; j < p; ++j) {
        auto cj = corr.row(j);
        all.clear();
        for (std::size_t i = 0; i < p; ++i)
            if (i != j && gram(i, i) != 0.0) all.push_back(i);
        for (int pass = 0; pass < opts.max_passes; ++pass) {
            if (sweep_column(gram, s, cj, j, lambda, all) < opts.tol) break;
            active.clear();
            for (std::size_t i : all)
                if (s(i, j) != 0.0) active.push_back(i);
            for (int inner = 0; inner < kActiveSweepsPerPass; ++inner) {
                if (sweep_column(gram, s, cj, j, lambda, active) < opts.tol) break;
            }
        }
    }
}

DenseMatrix correlations(const DenseMatrix& gram, const DenseMatrix& s, const DenseMatrix& l) {
    // (G B)^T = B^T G since G is symmetric.
    return matmul_tn(identity_minus(s, l), gram);
}

double fit_term(const DenseMatrix& x, const DenseMatrix& s, const DenseMatrix& l) {
    const double f = frobenius_norm(matmul(x, identity_minus(s, l)));
    return 0.5 * f * f;
}

}  // namespace

void RegLrConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ContractError("lambda must be a nonnegative finite number");
    if (!(mu.value() >= 0.0)) throw ContractError("mu must be nonnegative or inf");
    if (outer_max < 1) throw ContractError("outer_max must be at least 1");
    if (cd_max_passes < 1) throw ContractError("cd_max_passes must be at least 1");
    if (!(outer_rel_tol > 0.0) || !(cd_tol > 0.0)) throw ContractError("tolerances must be positive");
}

double objective_reg(const DenseMatrix& x, const DenseMatrix& s, const DenseMatrix& l, double lambda, NuclearWeight mu) {
    require_regression_shapes(x, s, l);
    double nuclear_term = 0.0;
    if (mu.is_infinite()) {
        if (linf_entrywise(l) != 0.0) throw ContractError("objective_reg: infinite mu requires L = 0");
    } else {
        nuclear_term = mu.value() * nuclear_norm(matmul(x, l));
    }
    return fit_term(x, s, l) + lambda * l1_offdiag(s) + nuclear_term;
}

double lambda_max(const DenseMatrix& x) {
    const DenseMatrix g = matmul_tn(x, x);
    double m = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) {
            if (i != j) m = std::fmax(m, std::fabs(g(i, j)));
        }
    }
    return m;
}

DenseMatrix lasso_block_step(const DenseMatrix& x, const DenseMatrix& s, const DenseMatrix& l, double lambda,
                             const LassoBlockOptions& opts) {
    require_regression_shapes(x, s, l);
    if (!(lambda >= 0.0)) throw ContractError("lambda must be nonnegative");
    const DenseMatrix gram = matmul_tn(x, x);
    DenseMatrix out = s;
    DenseMatrix corr = correlations(gram, out, l);
    lasso_sweeps(gram, out, corr, lambda, opts);
    return out;
}

LowRankStep lowrank_block_step(const DenseMatrix& x, const PseudoInverse& pinv, const DenseMatrix& s, double mu) {
    if (s.rows() != x.cols() || s.cols() != x.cols()) throw DimensionError("lowrank_block_step: S does not match X");
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw ContractError("lowrank_block_step: mu must be finite and nonnegative");
    DenseMatrix target = x;
    target -= matmul(x, s);
    SvtResult m = svt_detailed(target, mu);
    DenseMatrix l = pinv.solve(m.value);
    return {std::move(l), std::move(m.value), m.nuclear, m.retained};
}

LowRankStep lowrank_block_step(const DenseMatrix& x, const DenseMatrix& s, double mu) {
    return lowrank_block_step(x, PseudoInverse(x), s, mu);
}

DenseMatrix diagonal_block_step(const DenseMatrix& s, const DenseMatrix& l) {
    if (!s.is_square() || s.rows() != l.rows() || s.cols() != l.cols()) {
        throw DimensionError("diagonal_block_step: S and L must be square and equal-sized");
    }
    DenseMatrix out = s;
    for (std::size_t i = 0; i < s.rows(); ++i) out(i, i) = -l(i, i);
    return out;
}

double mu_zero_threshold(const DenseMatrix& x, const PseudoInverse& pinv, const DenseMatrix& s) {
    if (s.rows() != x.cols() || s.cols() != x.cols()) throw DimensionError("mu_zero_threshold: S does not match X");
    if (x.rows() < x.cols()) throw ContractError("mu_zero_threshold: requires n >= p");
    const DenseMatrix gram = matmul_tn(x, x);
    DenseMatrix e = correlations(gram, s, DenseMatrix(s.rows(), s.cols()));  // row j = X^T r_j
    for (std::size_t i = 0; i < e.rows(); ++i) e(i, i) = 0.0;
    // ||(X^+)^T E^T||_2 = ||E X^+||_2.
    return spectral_norm(matmul(e, pinv.matrix()));
}

namespace {

constexpr double kAdmmRelTol = 1e-4;
constexpr double kAdmmAbsTol = 1e-9;
constexpr int kRhoCheckEvery = 10;
constexpr double kRhoImbalance = 10.0;

// Column j of the ADMM (S_off, L) update minimises
//   1/2 ||x_j - X_{-j}(s + l_{-j})||^2 + rho_s/2 ||s - a||^2 + rho_z/2 ||X l - v||^2 + delta/2 ||l - l0||^2
// over s (p-1 entries) and l (p entries). The Hessian depends only on j, so it is
// factorised once per (rho_s, rho_z).
class JointColumnSolver {
public:
    JointColumnSolver(const DenseMatrix& gram, double rho_s, double rho_z, double delta)
        : p_(gram.rows()) {
        const std::size_t m = 2 * p_ - 1;
        factors_.reserve(p_);
        for (std::size_t j = 0; j < p_; ++j) {
            DenseMatrix h(m, m);
            for (std::size_t a = 0; a < p_; ++a) {
                for (std::size_t b = 0; b < p_; ++b) {
                    const double g = gram(a, b);
                    if (a != j && b != j) {
                        const std::size_t ka = off_index(a, j);
                        const std::size_t kb = off_index(b, j);
                        h(ka, kb) = g + (a == b ? rho_s : 0.0);
                        h(ka, p_ - 1 + b) = g;
                        h(p_ - 1 + a, kb) = g;
                    }
                    h(p_ - 1 + a, p_ - 1 + b) = (a != j && b != j ? g : 0.0) + rho_z * g + (a == b ? delta : 0.0);
                }
            }
            DenseMatrix lower = cholesky(h);
            DenseMatrix upper = lower.transpose();
            factors_.push_back({std::move(lower), std::move(upper)});
        }
    }

    static std::size_t off_index(std::size_t i, std::size_t j) { return i < j ? i : i - 1; }

    void solve(std::size_t j, std::span<double> b) const {
        const DenseMatrix& lo = factors_[j].first;
        const DenseMatrix& up = factors_[j].second;
        const std::size_t m = b.size();
        for (std::size_t i = 0; i < m; ++i) {
            b[i] = (b[i] - kernels::dot(lo.row(i).first(i), b.first(i))) / lo(i, i);
        }
        for (std::size_t i = m; i-- > 0;) {
            b[i] = (b[i] - kernels::dot(up.row(i).subspan(i + 1), b.subspan(i + 1))) / up(i, i);
        }
    }

private:
    std::size_t p_;
    std::vector<std::pair<DenseMatrix, DenseMatrix>> factors_;
};

void soft_threshold_offdiag(DenseMatrix& a, double t) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) = i == j ? 0.0 : soft_threshold(a(i, j), t);
    }
}

double squared_distance(const DenseMatrix& a, const DenseMatrix& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    return acc;
}

struct AdmmReadout {
    DenseMatrix s;
    DenseMatrix l;
    double objective;
};

AdmmReadout admm_readout(const DenseMatrix& x, const std::optional<PseudoInverse>& pinv, const DenseMatrix& w,
                         const DenseMatrix& z, const DenseMatrix& l_iterate, double lambda, double mu,
                         double nuclear_z) {
    DenseMatrix l = pinv ? pinv->solve(z) : l_iterate;
    DenseMatrix s = diagonal_block_step(w, l);
    const double nuclear = pinv ? nuclear_z : nuclear_norm(matmul(x, l));
    const double objective = fit_term(x, s, l) + lambda * l1_offdiag(s) + mu * nuclear;
    return {std::move(s), std::move(l), objective};
}

}  // namespace

FitResult fit_reg_lr(const DenseMatrix& x, const RegLrConfig& cfg) {
    cfg.validate();
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    if (n < 2 || p < 2) throw DimensionError("fit_reg_lr: X must have at least 2 rows and 2 columns");

    FitResult out{DenseMatrix(p, p), DenseMatrix(p, p), {}, 0, false, 0, {}};
    const DenseMatrix gram = matmul_tn(x, x);
    const LassoBlockOptions cd{cfg.cd_max_passes, cfg.cd_tol};

    // Lasso block at L = 0, repeated until the objective is flat.
    DenseMatrix lasso(p, p);
    for (int cycle = 1; cycle <= cfg.outer_max; ++cycle) {
        DenseMatrix corr = correlations(gram, lasso, DenseMatrix(p, p));
        lasso_sweeps(gram, lasso, corr, cfg.lambda, cd);
        const double objective = fit_term(x, lasso, DenseMatrix(p, p)) + cfg.lambda * l1_offdiag(lasso);
        out.objective_trace.push_back(objective);
        out.iterations = cycle;
        if (out.objective_trace.size() >= 2) {
            const double prev = out.objective_trace[out.objective_trace.size() - 2];
            if (std::fabs(prev - objective) < cfg.outer_rel_tol * std::fmax(std::fabs(prev), DBL_MIN)) {
                out.converged = true;
                break;
            }
        }
    }
    out.S_hat = lasso;
    if (cfg.mu.is_infinite()) return out;

    const double mu = cfg.mu.value();
    std::optional<PseudoInverse> pinv;
    if (n >= p) {
        pinv.emplace(x);
        if (mu >= mu_zero_threshold(x, *pinv, lasso)) return out;
    } else {
        out.warnings.emplace_back("n < p: L_hat is not identifiable; X L_hat and the off-diagonal of S_hat are");
    }

    double mean_g = 0.0;
    for (std::size_t i = 0; i < p; ++i) mean_g += gram(i, i);
    mean_g /= static_cast<double>(p);
    double rho_s = mean_g;
    double rho_z = 1.0;
    const double delta = pinv ? 0.0 : 1e-6 * mean_g;

    DenseMatrix s = lasso;
    DenseMatrix l(p, p);
    DenseMatrix w = lasso;
    DenseMatrix z(n, p);
    DenseMatrix u_s(p, p);
    DenseMatrix u_z(n, p);
    auto solver = std::make_unique<JointColumnSolver>(gram, rho_s, rho_z, delta);
    std::vector<double> rhs(2 * p - 1);
    const double size_s = std::sqrt(static_cast<double>(p * (p - 1)));
    const double size_z = std::sqrt(static_cast<double>(n * p));

    out.converged = false;
    for (int it = out.iterations + 1; it <= cfg.outer_max; ++it) {
        DenseMatrix v = z;
        v -= u_z;
        const DenseMatrix xtv = matmul_tn(x, v);
        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t i = 0; i < p; ++i) {
                if (i != j) {
                    const std::size_t k = JointColumnSolver::off_index(i, j);
                    rhs[k] = gram(i, j) + rho_s * (w(i, j) - u_s(i, j));
                }
                rhs[p - 1 + i] = (i != j ? gram(i, j) : 0.0) + rho_z * xtv(i, j) + delta * l(i, j);
            }
            solver->solve(j, rhs);
            for (std::size_t i = 0; i < p; ++i) {
                s(i, j) = i == j ? 0.0 : rhs[JointColumnSolver::off_index(i, j)];
                l(i, j) = rhs[p - 1 + i];
            }
        }

        const DenseMatrix w_prev = w;
        w = s;
        w += u_s;
        soft_threshold_offdiag(w, cfg.lambda / rho_s);

        const DenseMatrix z_prev = z;
        const DenseMatrix xl = matmul(x, l);
        DenseMatrix target = xl;
        target += u_z;
        SvtResult svt_z = svt_detailed(target, mu / rho_z);
        z = std::move(svt_z.value);

        u_s += s;
        u_s -= w;
        u_z += xl;
        u_z -= z;

        const double r_s = std::sqrt(squared_distance(s, w));
        const double r_z = std::sqrt(squared_distance(xl, z));
        const double d_s = rho_s * std::sqrt(squared_distance(w, w_prev));
        DenseMatrix dz = z;
        dz -= z_prev;
        const double d_z = rho_z * frobenius_norm(matmul_tn(x, dz));

        AdmmReadout read = admm_readout(x, pinv, w, z, l, cfg.lambda, mu, svt_z.nuclear);
        out.objective_trace.push_back(read.objective);
        out.iterations = it;
        out.S_hat = std::move(read.s);
        out.L_hat = std::move(read.l);

        const bool primal_ok = r_s <= kAdmmAbsTol * size_s + kAdmmRelTol * std::fmax(frobenius_norm(s), frobenius_norm(w)) &&
                               r_z <= kAdmmAbsTol * size_z + kAdmmRelTol * std::fmax(frobenius_norm(xl), frobenius_norm(z));
        const bool dual_ok = d_s <= kAdmmAbsTol * size_s + kAdmmRelTol * rho_s * frobenius_norm(u_s) &&
                             d_z <= kAdmmAbsTol * size_z + kAdmmRelTol * rho_z * frobenius_norm(matmul_tn(x, u_z));
        const double prev = out.objective_trace[out.objective_trace.size() - 2];
        const bool flat = std::fabs(prev - read.objective) < cfg.outer_rel_tol * std::fmax(std::fabs(prev), DBL_MIN);
        if (primal_ok && dual_ok && flat) {
            out.converged = true;
            break;
        }

        if (it % kRhoCheckEvery == 0) {
            bool changed = false;
            auto rebalance = [&](double r, double d, double& rho, DenseMatrix& u) {
                double factor = 1.0;
                if (r > kRhoImbalance * d) factor = 2.0;
                else if (d > kRhoImbalance * r) factor = 0.5;
                if (factor != 1.0) {
                    rho *= factor;
                    u *= 1.0 / factor;
                    changed = true;
                }
            };
            rebalance(r_s, d_s, rho_s, u_s);
            rebalance(r_z, d_z, rho_z, u_z);
            if (changed) solver = std::make_unique<JointColumnSolver>(gram, rho_s, rho_z, delta);
        }
    }
    out.rank_XL = numeric_rank(matmul(x, out.L_hat));
    return out;
}

double mu_scale(const DenseMatrix& x, std::span<const double> lambdas, const RegLrConfig& base) {
    double scale = spectral_norm(x);
    if (x.rows() < x.cols()) return scale;
    const PseudoInverse pinv(x);
    RegLrConfig cfg = base;
    cfg.mu = NuclearWeight::infinite();
    for (double lam : lambdas) {
        cfg.lambda = lam;
        scale = std::fmax(scale, mu_zero_threshold(x, pinv, fit_reg_lr(x, cfg).S_hat));
    }
    return scale;
}

double lasso_kkt_residual(const DenseMatrix& x, const DenseMatrix& s, const DenseMatrix& l, double lambda) {
    require_regression_shapes(x, s, l);
    const DenseMatrix gram = matmul_tn(x, x);
    const DenseMatrix corr = correlations(gram, s, l);  // corr(j, i) = x_i^T r_j
    double worst = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i) {
        if (gram(i, i) == 0.0) continue;
        for (std::size_t j = 0; j < s.cols(); ++j) {
            if (i == j) continue;
            const double c = corr(j, i);
            const double r = s(i, j) != 0.0 ? std::fabs(c - std::copysign(lambda, s(i, j)))
                                            : std::fmax(0.0, std::fabs(c) - lambda);
            worst = std::fmax(worst, r);
        }
    }
    return worst;
}

ThetaResult theta_from_precision(const DenseMatrix& k) {
    if (!k.is_square()) throw DimensionError("theta_from_precision: K is not square");
    const std::size_t p = k.rows();
    DenseMatrix delta(p, p);
    for (std::size_t j = 0; j < p; ++j) {
        if (!(k(j, j) > 0.0)) throw ContractError("theta_from_precision: K has a nonpositive diagonal entry");
        delta(j, j) = -1.0 / k(j, j);
    }
    DenseMatrix theta(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) theta(i, j) = i == j ? 0.0 : k(i, j) * delta(j, j);
    }
    return {std::move(theta), std::move(delta)};
}

ThetaDecomposition theta_decomposition(const DenseMatrix& s_star, const DenseMatrix& l_star, const DenseMatrix& k) {
    if (!k.is_square() || s_star.rows() != k.rows() || s_star.cols() != k.cols() || l_star.rows() != k.rows() ||
        l_star.cols() != k.cols()) {
        throw DimensionError("theta_decomposition: shape mismatch");
    }
    const double scale = std::fmax(1.0, linf_entrywise(k));
    if (max_abs_diff(s_star + l_star, k) > kTolerances.decomposition_rel * scale) {
        throw ContractError("theta_decomposition: S* + L* does not reproduce K");
    }
    const auto [theta, delta] = theta_from_precision(k);
    const std::size_t p = k.rows();
    ThetaDecomposition out{DenseMatrix(p, p), DenseMatrix(p, p)};
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            out.S_bar(i, j) = s_star(i, j) * delta(j, j) + (i == j ? 1.0 : 0.0);
            out.L_bar(i, j) = l_star(i, j) * delta(j, j);
        }
    }
    return out;
}

void write_fit_result(const std::filesystem::path& dir, const FitResult& fit, const RegLrConfig& cfg) {
    io::write_matrix_csv(dir / "S_hat.csv", fit.S_hat);
    io::write_matrix_csv(dir / "L_hat.csv", fit.L_hat);
    std::string trace = "cycle,objective\n";
    for (std::size_t i = 0; i < fit.objective_trace.size(); ++i) {
        trace += std::to_string(i + 1) + ',' + io::format_double(fit.objective_trace[i]) + '\n';
    }
    io::write_text(dir / "trace.csv", trace);
    std::vector<std::pair<std::string, std::string>> meta{
        {"estimator", "regression"},
        {"lambda", io::format_double(cfg.lambda)},
        {"mu", io::format_double(cfg.mu.value())},
        {"outer_max", std::to_string(cfg.outer_max)},
        {"outer_rel_tol", io::format_double(cfg.outer_rel_tol)},
        {"cd_max_passes", std::to_string(cfg.cd_max_passes)},
        {"cd_tol", io::format_double(cfg.cd_tol)},
        {"iterations", std::to_string(fit.iterations)},
        {"converged", fit.converged ? "true" : "false"},
        {"rank_xl", std::to_string(fit.rank_XL)},
        {"objective", io::format_double(fit.objective_trace.empty() ? 0.0 : fit.objective_trace.back())},
    };
    for (std::size_t i = 0; i < fit.warnings.size(); ++i) meta.emplace_back("warning" + std::to_string(i), fit.warnings[i]);
    io::write_key_values(dir / "meta.txt", meta);
}

}  // namespace latgm
