#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "latgm/linalg.hpp"
#include "latgm/matrix.hpp"

namespace testing {

using latgm::DenseMatrix;

class Gen {
public:
    explicit Gen(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
    std::size_t integer(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(eng_); }

    DenseMatrix matrix(std::size_t r, std::size_t c) {
        DenseMatrix m(r, c);
        for (double& v : m.data()) v = normal();
        return m;
    }

    DenseMatrix symmetric(std::size_t p) {
        DenseMatrix m = matrix(p, p);
        return latgm::symmetrize(m);
    }

    // Q diag(d) Q^T with eigenvalues log-uniform in [1, cond].
    DenseMatrix spd(std::size_t p, double cond = 100.0) {
        Eigen::MatrixXd a(p, p);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) a(i, j) = normal();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
        Eigen::MatrixXd q = qr.householderQ();
        Eigen::VectorXd d(p);
        for (std::size_t i = 0; i < p; ++i) d(i) = std::exp(uniform(0.0, std::log(cond)));
        if (p > 1) {
            d(0) = 1.0;
            d(1) = cond;
        }
        Eigen::MatrixXd k = q * d.asDiagonal() * q.transpose();
        DenseMatrix out(p, p);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) out(i, j) = 0.5 * (k(i, j) + k(j, i));
        return out;
    }

private:
    std::mt19937_64 eng_;
};

inline Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return e;
}

inline DenseMatrix from_eigen(const Eigen::MatrixXd& e) {
    DenseMatrix m(e.rows(), e.cols());
    for (Eigen::Index i = 0; i < e.rows(); ++i)
        for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
    return m;
}

inline DenseMatrix naive_matmul(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

// Lasso of column j on the other columns by cyclic coordinate descent on the
// raw data, independent of the library's Gram-matrix solver.
inline std::vector<double> standalone_lasso(const DenseMatrix& x, std::size_t j, double lambda) {
    const std::size_t n = x.rows(), p = x.cols();
    std::vector<double> beta(p, 0.0);
    std::vector<double> r = x.column(j);
    for (int pass = 0; pass < 100000; ++pass) {
        double change = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            if (i == j) continue;
            double xr = 0.0, xx = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                xr += x(k, i) * r[k];
                xx += x(k, i) * x(k, i);
            }
            const double z = xr + xx * beta[i];
            const double updated = (z > lambda ? z - lambda : z < -lambda ? z + lambda : 0.0) / xx;
            const double d = updated - beta[i];
            if (d != 0.0) {
                for (std::size_t k = 0; k < n; ++k) r[k] -= d * x(k, i);
                beta[i] = updated;
                change = std::max(change, std::fabs(d) * std::sqrt(xx));
            }
        }
        if (change < 1e-13) break;
    }
    return beta;
}

// Column j of Theta from Sigma = K^{-1}: least-squares coefficients of
// coordinate j on the others via the normal equations.
inline Eigen::MatrixXd least_squares_theta(const DenseMatrix& k) {
    const Eigen::MatrixXd sigma = to_eigen(k).inverse();
    const Eigen::Index p = sigma.rows();
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        std::vector<Eigen::Index> others;
        for (Eigen::Index i = 0; i < p; ++i)
            if (i != j) others.push_back(i);
        const Eigen::Index m = static_cast<Eigen::Index>(others.size());
        Eigen::MatrixXd soo(m, m);
        Eigen::VectorXd soj(m);
        for (Eigen::Index a = 0; a < m; ++a) {
            soj(a) = sigma(others[a], j);
            for (Eigen::Index b = 0; b < m; ++b) soo(a, b) = sigma(others[a], others[b]);
        }
        const Eigen::VectorXd beta = soo.ldlt().solve(soj);
        for (Eigen::Index a = 0; a < m; ++a) theta(others[a], j) = beta(a);
    }
    return theta;
}

// Minimum of |S|_1 + mu ||L||_* subject to |S + L - I|_inf <= lambda over
// diagonal 2x2 (S, L), by exhaustive search on a 0.005 grid over [-1.5, 1.5].
inline double diagonal_grid_oracle(double lambda, double mu) {
    double best = std::numeric_limits<double>::infinity();
    for (int a = -300; a <= 300; ++a) {
        for (int b = -300; b <= 300; ++b) {
            const double s = a * 0.005, l = b * 0.005;
            if (std::fabs(s + l - 1.0) > lambda + 1e-12) continue;
            best = std::min(best, std::fabs(s) + mu * std::fabs(l));
        }
    }
    return 2.0 * best;
}

inline DenseMatrix random_covariance(Gen& g, std::size_t p) {
    const DenseMatrix z = g.matrix(2 * p, p);
    return (1.0 / static_cast<double>(2 * p)) * latgm::matmul_tn(z, z) + 0.1 * DenseMatrix::identity(p);
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("latgm_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

}  // namespace testing
