#include "latgm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "latgm/error.hpp"
#include "latgm/kernels.hpp"

namespace latgm {

namespace {

// Orthogonalises the rows of `w` in place by plane rotations; the same
// rotations are applied to the rows of `v` when given. Returns the squared
// norm below which a row counts as zero.
double hestenes(DenseMatrix& w, DenseMatrix* v, const Tolerances& tol) {
    const std::size_t k = w.rows();
    const double total = kernels::dot(w.data(), w.data());
    const double negligible = tol.jacobi_eps * tol.jacobi_eps * total;
    for (int sweep = 0; sweep < tol.jacobi_max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < k; ++i) {
            for (std::size_t j = i + 1; j < k; ++j) {
                const auto wi = w.row(i);
                const auto wj = w.row(j);
                const double alpha = kernels::dot(wi, wi);
                const double beta = kernels::dot(wj, wj);
                const double gamma = kernels::dot(wi, wj);
                if (std::fabs(gamma) <= tol.jacobi_eps * std::sqrt(alpha) * std::sqrt(beta)) continue;
                if (std::min(alpha, beta) <= negligible) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                kernels::rotate(wi, wj, c, s);
                if (v) kernels::rotate(v->row(i), v->row(j), c, s);
            }
        }
        if (!rotated) return negligible;
    }
    throw NumericError("SVD: Jacobi sweeps did not converge");
}

std::vector<std::size_t> order_descending(const std::vector<double>& values) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    return idx;
}

// Rows of `basis` listed in `missing` are replaced by unit vectors orthogonal
// to every other row (Gram-Schmidt against the standard basis).
void complete_orthonormal(DenseMatrix& basis, const std::vector<bool>& missing) {
    const std::size_t k = basis.rows();
    const std::size_t m = basis.cols();
    std::size_t candidate = 0;
    for (std::size_t r = 0; r < k; ++r) {
        if (!missing[r]) continue;
        for (; candidate < m; ++candidate) {
            std::vector<double> e(m, 0.0);
            e[candidate] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t q = 0; q < k; ++q) {
                    if (q == r || (missing[q] && q > r)) continue;
                    kernels::axpy(-kernels::dot(basis.row(q), e), basis.row(q), e);
                }
            }
            const double nrm = std::sqrt(kernels::dot(e, e));
            if (nrm > 0.5) {
                auto row = basis.row(r);
                for (std::size_t c = 0; c < m; ++c) row[c] = e[c] / nrm;
                ++candidate;
                break;
            }
        }
    }
}

struct ColumnSvd {
    DenseMatrix u_rows;  // k x m, row t = t-th left vector
    std::vector<double> s;
    DenseMatrix v_rows;  // k x k, row t = t-th right vector
};

// SVD of C (m x k, m >= k) given as w = C^T.
ColumnSvd svd_tall(DenseMatrix w, bool want_vectors, const Tolerances& tol) {
    const std::size_t k = w.rows();
    const std::size_t m = w.cols();
    DenseMatrix v = DenseMatrix::identity(k);
    const double negligible = hestenes(w, want_vectors ? &v : nullptr, tol);

    std::vector<double> norms(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double sq = kernels::dot(w.row(i), w.row(i));
        norms[i] = sq <= negligible ? 0.0 : std::sqrt(sq);
    }
    const auto order = order_descending(norms);

    ColumnSvd out{DenseMatrix(k, m), std::vector<double>(k), DenseMatrix(k, k)};
    std::vector<bool> missing(k, false);
    for (std::size_t t = 0; t < k; ++t) {
        const std::size_t src = order[t];
        out.s[t] = norms[src];
        if (!want_vectors) continue;
        std::copy(v.row(src).begin(), v.row(src).end(), out.v_rows.row(t).begin());
        if (norms[src] > 0.0) {
            const auto from = w.row(src);
            auto to = out.u_rows.row(t);
            for (std::size_t c = 0; c < m; ++c) to[c] = from[c] / norms[src];
        } else {
            missing[t] = true;
        }
    }
    if (want_vectors && std::find(missing.begin(), missing.end(), true) != missing.end()) {
        complete_orthonormal(out.u_rows, missing);
    }
    return out;
}

}  // namespace

SvdResult svd(const DenseMatrix& a) {
    const Tolerances& tol = kTolerances;
    if (a.rows() >= a.cols()) {
        auto r = svd_tall(a.transpose(), true, tol);
        return {r.u_rows.transpose(), std::move(r.s), r.v_rows.transpose()};
    }
    // A^T = U' S V'^T  =>  A = V' S U'^T
    auto r = svd_tall(a, true, tol);
    return {r.v_rows.transpose(), std::move(r.s), r.u_rows.transpose()};
}

std::vector<double> singular_values(const DenseMatrix& a) {
    if (a.rows() >= a.cols()) return svd_tall(a.transpose(), false, kTolerances).s;
    return svd_tall(a, false, kTolerances).s;
}

double asymmetry(const DenseMatrix& a) {
    if (!a.is_square()) throw DimensionError("asymmetry: matrix is not square");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = i + 1; j < a.cols(); ++j) worst = std::fmax(worst, std::fabs(a(i, j) - a(j, i)));
    }
    return worst / std::fmax(1.0, kernels::max_abs(a.data()));
}

DenseMatrix symmetrize(const DenseMatrix& a) {
    if (!a.is_square()) throw DimensionError("symmetrize: matrix is not square");
    DenseMatrix s(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    }
    return s;
}

SymEigResult sym_eig(const DenseMatrix& input) {
    const Tolerances& tol = kTolerances;
    if (!input.is_square()) throw DimensionError("sym_eig: matrix is not square");
    if (asymmetry(input) > tol.symmetry_rel) throw ContractError("sym_eig: matrix is not symmetric");

    const std::size_t n = input.rows();
    DenseMatrix a = symmetrize(input);
    DenseMatrix v = DenseMatrix::identity(n);  // row t = t-th eigenvector
    const double scale = frobenius_norm(a);
    const double target = tol.jacobi_eps * scale;

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        }
        return std::sqrt(s);
    };

    int sweep = 0;
    for (; sweep < tol.jacobi_max_sweeps && off_norm() > target; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::fabs(apq) <= target / static_cast<double>(n)) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::fabs(theta) + std::hypot(1.0, theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                // A <- P^T A P with P = [[c, s], [-s, c]] in the (p, q) plane.
                kernels::rotate(a.row(p), a.row(q), c, s);
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                kernels::rotate(v.row(p), v.row(q), c, s);
            }
        }
    }
    if (off_norm() > target * 10.0) throw NumericError("sym_eig: Jacobi sweeps did not converge");

    std::vector<double> diag = a.diag();
    const auto order = order_descending(diag);
    SymEigResult out{std::vector<double>(n), DenseMatrix(n, n)};
    for (std::size_t t = 0; t < n; ++t) {
        out.eigenvalues[t] = diag[order[t]];
        for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, t) = v(order[t], r);
    }
    return out;
}

DenseMatrix cholesky(const DenseMatrix& a) {
    if (!a.is_square()) throw DimensionError("cholesky: matrix is not square");
    const std::size_t n = a.rows();
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto lj = l.row(j);
        const double d = a(j, j) - kernels::dot(lj.first(j), lj.first(j));
        if (!(d > 0.0) || !std::isfinite(d)) throw FactorizationError("cholesky: matrix is not positive definite", j);
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            const auto li = l.row(i);
            l(i, j) = (a(i, j) - kernels::dot(li.first(j), lj.first(j))) / ljj;
        }
    }
    return l;
}

DenseMatrix solve_spd(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.is_square()) throw DimensionError("solve_spd: matrix is not square");
    if (a.rows() != b.rows()) throw DimensionError("solve_spd: right-hand side has the wrong row count");
    if (asymmetry(a) > kTolerances.symmetry_rel) throw ContractError("solve_spd: matrix is not symmetric");
    const DenseMatrix l = cholesky(a);
    const std::size_t n = a.rows();

    // L Y = B, rows of Y computed top-down.
    DenseMatrix y = b;
    for (std::size_t i = 0; i < n; ++i) {
        auto yi = y.row(i);
        for (std::size_t k = 0; k < i; ++k) kernels::axpy(-l(i, k), y.row(k), yi);
        for (double& v : yi) v /= l(i, i);
    }
    // L^T X = Y, bottom-up.
    for (std::size_t ii = n; ii-- > 0;) {
        auto xi = y.row(ii);
        for (std::size_t k = ii + 1; k < n; ++k) kernels::axpy(-l(k, ii), y.row(k), xi);
        for (double& v : xi) v /= l(ii, ii);
    }
    return y;
}

PseudoInverse::PseudoInverse(const DenseMatrix& x) : n_(x.rows()), pinv_(x.cols(), x.rows()) {
    const SvdResult s = svd(x);
    const double smax = s.singular_values.front();
    const double smin = s.singular_values.back();
    if (!(smax > 0.0) || smin <= kTolerances.full_rank_rel * smax) {
        throw RankError("matrix is rank deficient (sigma_min=" + std::to_string(smin) +
                        ", sigma_max=" + std::to_string(smax) + ")");
    }
    // pinv = V diag(1/s) U^T
    const std::size_t k = s.singular_values.size();
    for (std::size_t i = 0; i < x.cols(); ++i) {
        auto out = pinv_.row(i);
        for (std::size_t t = 0; t < k; ++t) {
            const double coef = s.right_vectors(i, t) / s.singular_values[t];
            for (std::size_t r = 0; r < x.rows(); ++r) out[r] += coef * s.left_vectors(r, t);
        }
    }
}

DenseMatrix PseudoInverse::solve(const DenseMatrix& m) const {
    if (m.rows() != n_) throw DimensionError("min_norm_solution: right-hand side has the wrong row count");
    return matmul(pinv_, m);
}

DenseMatrix min_norm_solution(const DenseMatrix& x, const DenseMatrix& m) {
    if (x.rows() != m.rows() || x.cols() != m.cols()) {
        throw DimensionError("min_norm_solution: X and M must have the same shape");
    }
    return PseudoInverse(x).solve(m);
}

double soft_threshold(double x, double t) {
    const double m = std::fabs(x) - t;
    return m > 0.0 ? std::copysign(m, x) : 0.0;
}

SvtResult svt_detailed(const DenseMatrix& a, double t) {
    if (t < 0.0) throw ContractError("svt: threshold must be nonnegative");
    const SvdResult s = svd(a);
    SvtResult out{DenseMatrix(a.rows(), a.cols())};
    const std::size_t k = s.singular_values.size();
    std::vector<double> vt(a.cols());
    for (std::size_t r = 0; r < k; ++r) {
        const double shrunk = s.singular_values[r] - t;
        if (!(shrunk > 0.0)) break;
        ++out.retained;
        out.nuclear += shrunk;
        for (std::size_t j = 0; j < a.cols(); ++j) vt[j] = s.right_vectors(j, r);
        for (std::size_t i = 0; i < a.rows(); ++i) {
            kernels::axpy(shrunk * s.left_vectors(i, r), vt, out.value.row(i));
        }
    }
    return out;
}

DenseMatrix svt(const DenseMatrix& a, double t) { return svt_detailed(a, t).value; }

double l1_offdiag(const DenseMatrix& a) {
    if (!a.is_square()) throw DimensionError("l1_offdiag: matrix is not square");
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto r = a.row(i);
        s += kernels::sum_abs(r.first(i)) + kernels::sum_abs(r.subspan(i + 1));
    }
    return s;
}

double l1_entrywise(const DenseMatrix& a) { return kernels::sum_abs(a.data()); }

double linf_entrywise(const DenseMatrix& a) { return kernels::max_abs(a.data()); }

double nuclear_norm(const DenseMatrix& a) {
    const auto s = singular_values(a);
    return std::accumulate(s.begin(), s.end(), 0.0);
}

double spectral_norm(const DenseMatrix& a) { return singular_values(a).front(); }

std::size_t numeric_rank(std::span<const double> sv, const Tolerances& tol) {
    if (sv.empty()) return 0;
    const double thr = tol.rank_rel * std::fmax(*std::max_element(sv.begin(), sv.end()), 1.0);
    return static_cast<std::size_t>(std::count_if(sv.begin(), sv.end(), [&](double v) { return v > thr; }));
}

std::size_t numeric_rank(const DenseMatrix& a, const Tolerances& tol) {
    return numeric_rank(singular_values(a), tol);
}

}  // namespace latgm
