#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "latgm/error.hpp"
#include "latgm/linalg.hpp"
#include "support.hpp"

using namespace latgm;

namespace {

double svt_objective(const DenseMatrix& z, const DenseMatrix& a, double t) {
    const double f = frobenius_norm(z - a);
    return 0.5 * f * f + t * nuclear_norm(z);
}

double orthogonality_error(const DenseMatrix& q) {
    return max_abs_diff(matmul_tn(q, q), DenseMatrix::identity(q.cols()));
}

void check_svd_invariants(const DenseMatrix& a) {
    const SvdResult s = svd(a);
    const std::size_t k = std::min(a.rows(), a.cols());
    REQUIRE(s.singular_values.size() == k);
    REQUIRE(s.left_vectors.rows() == a.rows());
    REQUIRE(s.left_vectors.cols() == k);
    REQUIRE(s.right_vectors.rows() == a.cols());
    REQUIRE(s.right_vectors.cols() == k);
    for (std::size_t i = 0; i + 1 < k; ++i) CHECK(s.singular_values[i] >= s.singular_values[i + 1]);
    CHECK(s.singular_values.back() >= 0.0);
    DenseMatrix us = s.left_vectors;
    for (std::size_t i = 0; i < us.rows(); ++i)
        for (std::size_t j = 0; j < k; ++j) us(i, j) *= s.singular_values[j];
    const DenseMatrix recon = matmul(us, s.right_vectors.transpose());
    CHECK(frobenius_norm(recon - a) <= 1e-10 * std::max(1.0, frobenius_norm(a)));
    CHECK(orthogonality_error(s.left_vectors) <= 1e-10);
    CHECK(orthogonality_error(s.right_vectors) <= 1e-10);
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("l1_offdiag") {
    CHECK(l1_offdiag(DenseMatrix::identity(3)) == 0.0);
    CHECK(l1_offdiag(DenseMatrix{{0.0, 2.0}, {-3.0, 0.0}}) == 5.0);
    CHECK_THROWS_AS(l1_offdiag(DenseMatrix(2, 3)), DimensionError);
    testing::Gen g(21);
    const DenseMatrix a = g.matrix(4, 4);
    double naive = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            if (i != j) naive += std::fabs(a(i, j));
    CHECK(std::fabs(l1_offdiag(a) - naive) <= 1e-15 * naive);
}

TEST_CASE("linf_entrywise") {
    CHECK(linf_entrywise(DenseMatrix(2, 2)) == 0.0);
    CHECK(linf_entrywise(DenseMatrix{{1.0, -4.0}, {2.0, 3.0}}) == 4.0);
    testing::Gen g(22);
    const DenseMatrix a = g.matrix(5, 3);
    double naive = 0.0;
    for (double v : a.data()) naive = std::max(naive, std::fabs(v));
    CHECK(linf_entrywise(a) == naive);
}

TEST_CASE("nuclear_norm") {
    CHECK(nuclear_norm(DenseMatrix{{3.0, 0.0}, {0.0, 1.0}}) == doctest::Approx(4.0).epsilon(1e-14));
    DenseMatrix uv(3, 2);
    const double u[3] = {0.6, 0.8, 0.0};
    const double v[2] = {1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) uv(i, j) = u[i] * v[j];
    CHECK(nuclear_norm(uv) == doctest::Approx(1.0).epsilon(1e-14));

    testing::Gen g(23);
    for (int rep = 0; rep < 10; ++rep) {
        const DenseMatrix a = g.matrix(4, 4);
        const Eigen::MatrixXd ata = testing::to_eigen(a).transpose() * testing::to_eigen(a);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ata);
        double oracle = 0.0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) oracle += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
        CHECK(std::fabs(nuclear_norm(a) - oracle) <= 1e-10);
    }
}

TEST_CASE("spectral_norm") {
    CHECK(spectral_norm(DenseMatrix::identity(5)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(spectral_norm(DenseMatrix{{2.0, 0.0}, {0.0, -5.0}}) == doctest::Approx(5.0).epsilon(1e-14));
    testing::Gen g(24);
    const DenseMatrix a = g.matrix(6, 4);
    Eigen::JacobiSVD<Eigen::MatrixXd> es(testing::to_eigen(a));
    CHECK(std::fabs(spectral_norm(a) - es.singularValues()(0)) <= 1e-9);
}

TEST_CASE("soft_threshold") {
    CHECK(soft_threshold(1.5, 1.0) == 0.5);
    CHECK(soft_threshold(-0.3, 0.5) == 0.0);
    CHECK(soft_threshold(-2.0, 0.5) == -1.5);
    testing::Gen g(25);
    for (int i = 0; i < 2000; ++i) {
        const double x = g.normal() * 3.0;
        const double t = g.uniform(0.0, 3.0);
        CHECK(std::fabs(soft_threshold(x, t)) <= std::fabs(x));
        CHECK(soft_threshold(x, 0.0) == x);
    }
}

TEST_CASE("svt examples") {
    const DenseMatrix d{{3.0, 0.0}, {0.0, 1.0}};
    CHECK(max_abs_diff(svt(d, 2.0), DenseMatrix{{1.0, 0.0}, {0.0, 0.0}}) <= 1e-14);

    testing::Gen g(26);
    const DenseMatrix a = g.matrix(4, 3);
    const SvtResult zero = svt_detailed(a, spectral_norm(a));
    CHECK(zero.retained == 0);
    CHECK(linf_entrywise(zero.value) == 0.0);
    CHECK(zero.nuclear == 0.0);
}

TEST_CASE("svt minimises the proximal objective against 10000 perturbations") {
    testing::Gen g(27);
    const DenseMatrix a = g.matrix(3, 3);
    const double t = 0.7;
    const DenseMatrix z = svt(a, t);
    const double best = svt_objective(z, a, t);
    int worse = 0;
    for (int i = 0; i < 10000; ++i) {
        const double eps = std::pow(10.0, g.uniform(-6.0, 0.0));
        DenseMatrix zp = z + eps * g.matrix(3, 3);
        if (svt_objective(zp, a, t) >= best - 1e-12) ++worse;
    }
    CHECK(worse == 10000);
}

TEST_CASE("svt properties") {
    testing::Gen g(28);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t r = g.integer(1, 7), c = g.integer(1, 7);
        const DenseMatrix a = g.matrix(r, c);
        const double t1 = g.uniform(0.0, 2.0);
        const double t2 = t1 + g.uniform(0.0, 2.0);
        CHECK(numeric_rank(svt(a, t1)) >= numeric_rank(svt(a, t2)));
        const SvtResult s = svt_detailed(a, t1);
        CHECK(nuclear_norm(s.value) + t1 * static_cast<double>(s.retained) <= nuclear_norm(a) + 1e-9);
        CHECK(s.nuclear == doctest::Approx(nuclear_norm(s.value)).epsilon(1e-10).scale(1.0));

        const double sn = spectral_norm(a), fn = frobenius_norm(a), nn = nuclear_norm(a);
        CHECK(sn <= fn + 1e-12);
        CHECK(fn <= nn + 1e-12);
    }
}

TEST_CASE("svd invariants on tall, wide, square and rank-deficient inputs") {
    testing::Gen g(29);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t r = g.integer(1, 12), c = g.integer(1, 12);
        check_svd_invariants(g.matrix(r, c));
    }
    check_svd_invariants(DenseMatrix(4, 3));
    const DenseMatrix u = g.matrix(8, 2);
    const DenseMatrix v = g.matrix(2, 6);
    check_svd_invariants(matmul(u, v));
    check_svd_invariants(matmul(u, v).transpose());
    const auto sv = singular_values(matmul(u, v));
    CHECK(numeric_rank(sv) == 2);
}

TEST_CASE("svd converges on sparse rank-deficient blocks") {
    const DenseMatrix a{{0.0, 0.36670786786781795, 0.3890893751084953},
                        {0.3392379615328285, 0.26324189889654803, 0.0},
                        {0.0, 0.0, 0.0}};
    const SvdResult r = svd(a);
    CHECK(r.singular_values[2] == 0.0);
    CHECK(numeric_rank(a) == 2);
    DenseMatrix rebuilt(3, 3);
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                rebuilt(i, j) += r.left_vectors(i, t) * r.singular_values[t] * r.right_vectors(j, t);
    CHECK(max_abs_diff(rebuilt, a) <= 1e-14);
}

TEST_CASE("svd matches an independent SVD on the singular values") {
    testing::Gen g(30);
    for (int rep = 0; rep < 20; ++rep) {
        const DenseMatrix a = g.matrix(g.integer(2, 30), g.integer(2, 30));
        Eigen::JacobiSVD<Eigen::MatrixXd> es(testing::to_eigen(a));
        const auto s = singular_values(a);
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::fabs(s[i] - es.singularValues()(i)) <= 1e-10 * s[0]);
    }
}

TEST_CASE("sym_eig") {
    const SymEigResult id = sym_eig(DenseMatrix::identity(4));
    for (double e : id.eigenvalues) CHECK(e == doctest::Approx(1.0));
    const SymEigResult d = sym_eig(DenseMatrix::diagonal(std::vector<double>{2.0, 5.0, -1.0}));
    CHECK(d.eigenvalues[0] == doctest::Approx(5.0));
    CHECK(d.eigenvalues[1] == doctest::Approx(2.0));
    CHECK(d.eigenvalues[2] == doctest::Approx(-1.0));
    CHECK_THROWS_AS(sym_eig(DenseMatrix{{1.0, 2.0}, {0.0, 1.0}}), ContractError);

    testing::Gen g(31);
    for (int rep = 0; rep < 20; ++rep) {
        const DenseMatrix a = g.symmetric(5);
        const SymEigResult e = sym_eig(a);
        CHECK(orthogonality_error(e.eigenvectors) <= 1e-10);
        DenseMatrix ql = e.eigenvectors;
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) ql(i, j) *= e.eigenvalues[j];
        CHECK(frobenius_norm(matmul(ql, e.eigenvectors.transpose()) - a) <= 1e-9 * std::max(1.0, frobenius_norm(a)));
        for (std::size_t i = 0; i + 1 < 5; ++i) CHECK(e.eigenvalues[i] >= e.eigenvalues[i + 1]);
    }
}

TEST_CASE("solve_spd examples and errors") {
    testing::Gen g(32);
    const DenseMatrix b = g.matrix(3, 2);
    CHECK(max_abs_diff(solve_spd(DenseMatrix::identity(3), b), b) <= 1e-15);
    CHECK(max_abs_diff(solve_spd(2.0 * DenseMatrix::identity(3), DenseMatrix::identity(3)),
                       0.5 * DenseMatrix::identity(3)) <= 1e-15);

    const DenseMatrix a = g.spd(6, 50.0);
    const DenseMatrix rhs = g.matrix(6, 3);
    CHECK(frobenius_norm(matmul(a, solve_spd(a, rhs)) - rhs) <= 1e-8 * std::max(1.0, frobenius_norm(rhs)));

    const DenseMatrix indefinite{{1.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, -1.0}};
    try {
        solve_spd(indefinite, DenseMatrix::identity(3));
        FAIL("expected a factorization error");
    } catch (const FactorizationError& e) {
        CHECK(e.pivot() == 2);
    }
    CHECK_THROWS_AS(solve_spd(DenseMatrix{{1.0, 0.5}, {0.0, 1.0}}, DenseMatrix::identity(2)), ContractError);
    CHECK_THROWS_AS(solve_spd(DenseMatrix::identity(2), DenseMatrix::identity(3)), DimensionError);
}

TEST_CASE("solve_spd residual on 1000 random SPD systems up to condition 1e6") {
    testing::Gen g(33);
    int ok = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t p = g.integer(1, 10);
        const DenseMatrix a = g.spd(p, std::pow(10.0, g.uniform(0.0, 6.0)));
        const DenseMatrix b = g.matrix(p, g.integer(1, 3));
        if (frobenius_norm(matmul(a, solve_spd(a, b)) - b) <= 1e-8 * std::max(1.0, frobenius_norm(b))) ++ok;
    }
    CHECK(ok == 1000);
}

TEST_CASE("min_norm_solution") {
    testing::Gen g(34);
    const DenseMatrix m = g.matrix(4, 4);
    CHECK(max_abs_diff(min_norm_solution(DenseMatrix::identity(4), m), m) <= 1e-14);
    CHECK(max_abs_diff(min_norm_solution(2.0 * DenseMatrix::identity(4), m), 0.5 * m) <= 1e-14);

    const DenseMatrix x = g.matrix(5, 3);
    const DenseMatrix mm = g.matrix(5, 3);
    const DenseMatrix l = min_norm_solution(x, mm);
    const Eigen::MatrixXd ex = testing::to_eigen(x);
    const Eigen::MatrixXd proj = ex * (ex.transpose() * ex).inverse() * ex.transpose();
    CHECK(frobenius_norm(matmul(x, l) - testing::from_eigen(proj * testing::to_eigen(mm))) <= 1e-9);

    const DenseMatrix wide = g.matrix(3, 5);
    const DenseMatrix mw = g.matrix(3, 5);
    const DenseMatrix lw = min_norm_solution(wide, mw);
    CHECK(frobenius_norm(matmul(wide, lw) - mw) <= 1e-9);
    const Eigen::MatrixXd oracle =
        testing::to_eigen(wide).completeOrthogonalDecomposition().pseudoInverse() * testing::to_eigen(mw);
    CHECK(max_abs_diff(lw, testing::from_eigen(oracle)) <= 1e-9);

    DenseMatrix deficient = g.matrix(5, 3);
    for (std::size_t i = 0; i < 5; ++i) deficient(i, 2) = deficient(i, 0) + deficient(i, 1);
    CHECK_THROWS_AS(min_norm_solution(deficient, mm), RankError);
}

TEST_CASE("numeric rank uses the global relative tolerance") {
    const std::vector<double> s{1.0, 1e-7, 1e-9};
    CHECK(numeric_rank(s) == 2);
    const std::vector<double> small{1e-3, 1e-9};
    CHECK(numeric_rank(small) == 1);
    CHECK(numeric_rank(DenseMatrix(3, 3)) == 0);
}

}
