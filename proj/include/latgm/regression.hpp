#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "latgm/linalg.hpp"
#include "latgm/matrix.hpp"

namespace latgm {

// Nuclear-norm weight; may be +infinity, which removes the low-rank part.
class NuclearWeight {
public:
    constexpr NuclearWeight() = default;
    constexpr explicit NuclearWeight(double v) : value_(v) {}
    static constexpr NuclearWeight infinite() { return NuclearWeight(std::numeric_limits<double>::infinity()); }

    constexpr bool is_infinite() const { return value_ == std::numeric_limits<double>::infinity(); }
    constexpr double value() const { return value_; }

    friend constexpr bool operator==(NuclearWeight, NuclearWeight) = default;
    friend constexpr auto operator<=>(NuclearWeight, NuclearWeight) = default;

private:
    double value_ = 0.0;
};

struct RegLrConfig {
    double lambda = 0.0;
    NuclearWeight mu = NuclearWeight::infinite();
    int outer_max = 500;
    double outer_rel_tol = 1e-6;
    int cd_max_passes = 100;
    double cd_tol = 1e-8;

    void validate() const;
};

struct FitResult {
    DenseMatrix S_hat;
    DenseMatrix L_hat;
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;
    std::size_t rank_XL = 0;
    std::vector<std::string> warnings;
};

// 1/2 ||X(I - S - L)||_F^2 + lambda * sum_{i!=j} |S_ij| + mu * ||X L||_*.
// Infinite mu is accepted only with L == 0 (the nuclear term is then 0).
double objective_reg(const DenseMatrix& x, const DenseMatrix& s, const DenseMatrix& l, double lambda, NuclearWeight mu);

// Smallest lambda that zeroes every off-diagonal coefficient at L = 0:
// max_{i!=j} |x_i^T x_j|.
double lambda_max(const DenseMatrix& x);

struct LassoBlockOptions {
    int max_passes = 100;
    double tol = 1e-8;
};

// Cyclic coordinate descent on the off-diagonal of S with L held fixed, with
// sweeps over the nonzero set between full passes. The diagonal of S is left
// untouched. Predictors with a zero column keep their coefficients.
DenseMatrix lasso_block_step(const DenseMatrix& x, const DenseMatrix& s, const DenseMatrix& l, double lambda,
                             const LassoBlockOptions& opts = {});

struct LowRankStep {
    DenseMatrix L;
    DenseMatrix M;  // = X L, the SVT of X(I - S)
    double nuclear = 0.0;
    std::size_t rank = 0;
};

// Minimiser of 1/2 ||X(I - S) - X L||^2 + mu ||X L||_* over L with S fixed,
// ignoring the diagonal coupling between S and L.
LowRankStep lowrank_block_step(const DenseMatrix& x, const DenseMatrix& s, double mu);
LowRankStep lowrank_block_step(const DenseMatrix& x, const PseudoInverse& pinv, const DenseMatrix& s, double mu);

// diag(S) <- -diag(L).
DenseMatrix diagonal_block_step(const DenseMatrix& s, const DenseMatrix& l);

// Smallest mu at which (S, 0) is optimal when S is the lasso solution at L = 0:
// ||(X^+)^T offdiag(X^T X (I - S))||_2. Requires n >= p.
double mu_zero_threshold(const DenseMatrix& x, const PseudoInverse& pinv, const DenseMatrix& s);

// Largest of spectral_norm(X) and mu_zero_threshold over the lasso fits at the
// given absolute lambdas, so every lambda has L_hat = 0 at this mu. Falls back
// to spectral_norm(X) when n < p.
double mu_scale(const DenseMatrix& x, std::span<const double> lambdas, const RegLrConfig& base = {});

// Infinite mu runs the lasso block to convergence. Finite mu starts from the
// lasso at L = 0, returns it unchanged when mu_zero_threshold certifies L = 0,
// and otherwise runs ADMM on (S_off, L) with splittings W = S_off, Z = X L.
// The diagonal of L does not enter the fit term, so the diagonal of S is read
// out as -diag(L_hat) after the solve.
FitResult fit_reg_lr(const DenseMatrix& x, const RegLrConfig& cfg);

// Largest |x_i^T r_j - lambda sign(S_ij)| over nonzero S_ij and excess of
// |x_i^T r_j| over lambda at zero S_ij, with R = X(I - S - L).
double lasso_kkt_residual(const DenseMatrix& x, const DenseMatrix& s, const DenseMatrix& l, double lambda);

struct ThetaResult {
    DenseMatrix theta;
    DenseMatrix delta;
};

// Theta = K Delta + I with Delta = diag(-1/K_jj).
ThetaResult theta_from_precision(const DenseMatrix& k);

struct ThetaDecomposition {
    DenseMatrix S_bar;  // S* Delta + I
    DenseMatrix L_bar;  // L* Delta
};

ThetaDecomposition theta_decomposition(const DenseMatrix& s_star, const DenseMatrix& l_star, const DenseMatrix& k);

void write_fit_result(const std::filesystem::path& dir, const FitResult& fit, const RegLrConfig& cfg);

}  // namespace latgm
