#pragma once

#include <filesystem>
#include <vector>

#include "latgm/matrix.hpp"
#include "latgm/regression.hpp"

namespace latgm {

struct DantzigConfig {
    double lambda = 0.1;
    // Infinite mu pins L to zero.
    NuclearWeight mu = NuclearWeight(1.0);
    int max_iters = 20000;
    double kkt_tol = 1e-5;
    double step_safety = 0.99;
    // KKT residual is evaluated every this many iterations (and at the end).
    int check_every = 10;

    void validate() const;
};

struct DantzigResult {
    DenseMatrix S_hat;
    DenseMatrix L_hat;
    DenseMatrix Y;  // dual variable of the residual constraint
    double primal_objective = 0.0;
    double feasibility_violation = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    // (iteration, primal objective), sampled every 100 iterations.
    std::vector<std::pair<int, double>> objective_trace;
};

struct KktBreakdown {
    double feasibility = 0.0;
    double sparse_stationarity = 0.0;
    double lowrank_stationarity = 0.0;
    double complementarity = 0.0;

    double max() const;
};

// |S|_1 (diagonal included) + mu ||L||_*.
double objective_dantzig(const DenseMatrix& s, const DenseMatrix& l, NuclearWeight mu);

double feasibility_violation(const DenseMatrix& sigma_hat, const DenseMatrix& s, const DenseMatrix& l, double lambda);

KktBreakdown kkt_breakdown(const DenseMatrix& sigma_hat, const DenseMatrix& s, const DenseMatrix& l, const DenseMatrix& y,
                           double lambda, NuclearWeight mu);
double kkt_residual(const DenseMatrix& sigma_hat, const DenseMatrix& s, const DenseMatrix& l, const DenseMatrix& y,
                    double lambda, NuclearWeight mu);

// prox of sigma * g* where g is the indicator of {Z : |Z - I|_inf <= lambda}.
DenseMatrix dual_prox(const DenseMatrix& v, double sigma, double lambda);

// Primal-dual hybrid gradient for
//   min |S|_1 + mu ||L||_*  s.t.  |Sigma_hat (S + L) - I|_inf <= lambda.
DantzigResult fit_dantzig(const DenseMatrix& sigma_hat, const DantzigConfig& cfg);

void write_dantzig_result(const std::filesystem::path& dir, const DantzigResult& fit, const DantzigConfig& cfg);

}  // namespace latgm
