#pragma once

#include <cstddef>
#include <vector>

#include "latgm/config.hpp"
#include "latgm/matrix.hpp"

namespace latgm {

// Thin SVD A = U diag(s) V^T with k = min(rows, cols) columns in U and V.
struct SvdResult {
    DenseMatrix left_vectors;            // rows x k
    std::vector<double> singular_values; // k, non-increasing
    DenseMatrix right_vectors;           // cols x k
};

struct SymEigResult {
    std::vector<double> eigenvalues;  // non-increasing
    DenseMatrix eigenvectors;         // columns
};

// One-sided (Hestenes) Jacobi. Throws NumericError if the sweep cap is hit.
SvdResult svd(const DenseMatrix& a);
std::vector<double> singular_values(const DenseMatrix& a);

// Cyclic Jacobi. Throws ContractError on asymmetric input.
SymEigResult sym_eig(const DenseMatrix& a);

// Lower-triangular Cholesky factor; FactorizationError names the failing pivot.
DenseMatrix cholesky(const DenseMatrix& a);
DenseMatrix solve_spd(const DenseMatrix& a, const DenseMatrix& b);

// Moore-Penrose pseudo-inverse of a full-rank (rank = min(n, p)) matrix,
// cached so repeated min-norm solves share one factorization.
class PseudoInverse {
public:
    explicit PseudoInverse(const DenseMatrix& x);

    // Minimum-Frobenius-norm L with X L = P_col(X) M.
    DenseMatrix solve(const DenseMatrix& m) const;
    const DenseMatrix& matrix() const noexcept { return pinv_; }

private:
    std::size_t n_;
    DenseMatrix pinv_;  // p x n
};

DenseMatrix min_norm_solution(const DenseMatrix& x, const DenseMatrix& m);

double soft_threshold(double x, double t);

struct SvtResult {
    DenseMatrix value;
    std::size_t retained = 0;  // singular values strictly above t
    double nuclear = 0.0;      // nuclear norm of value
};

// Proximal operator of t * nuclear norm.
SvtResult svt_detailed(const DenseMatrix& a, double t);
DenseMatrix svt(const DenseMatrix& a, double t);

double l1_offdiag(const DenseMatrix& a);
double l1_entrywise(const DenseMatrix& a);
double linf_entrywise(const DenseMatrix& a);
double nuclear_norm(const DenseMatrix& a);
double spectral_norm(const DenseMatrix& a);

std::size_t numeric_rank(std::span<const double> singular_values, const Tolerances& tol = kTolerances);
std::size_t numeric_rank(const DenseMatrix& a, const Tolerances& tol = kTolerances);

// Largest |A_ij - A_ji| relative to max(1, max|A_ij|).
double asymmetry(const DenseMatrix& a);
DenseMatrix symmetrize(const DenseMatrix& a);

}  // namespace latgm
