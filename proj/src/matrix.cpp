#include "latgm/matrix.hpp"

#include <cmath>
#include <string>

#include "latgm/error.hpp"
#include "latgm/kernels.hpp"

namespace latgm {

namespace {

void require_shape(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) {
        throw DimensionError("matrix dimensions must be positive, got " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
    }
}

}  // namespace

bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    require_shape(rows, cols);
    data_.assign(rows * cols, 0.0);
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    require_shape(rows, cols);
    if (data_.size() != rows * cols) {
        throw DimensionError("expected " + std::to_string(rows * cols) + " entries, got " +
                             std::to_string(data_.size()));
    }
    if (!all_finite(data_)) throw ContractError("matrix entries must be finite");
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
    require_shape(rows_, cols_);
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("ragged initializer rows");
        data_.insert(data_.end(), r.begin(), r.end());
    }
    if (!all_finite(data_)) throw ContractError("matrix entries must be finite");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    if (!all_finite(d)) throw ContractError("matrix entries must be finite");
    return m;
}

std::vector<double> DenseMatrix::column(std::size_t j) const {
    std::vector<double> c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
}

std::vector<double> DenseMatrix::diag() const {
    const std::size_t k = rows_ < cols_ ? rows_ : cols_;
    std::vector<double> d(k);
    for (std::size_t i = 0; i < k; ++i) d[i] = (*this)(i, i);
    return d;
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    }
    return t;
}

DenseMatrix DenseMatrix::block(std::span<const std::size_t> row_idx, std::span<const std::size_t> col_idx) const {
    DenseMatrix b(row_idx.size(), col_idx.size());
    for (std::size_t a = 0; a < row_idx.size(); ++a) {
        if (row_idx[a] >= rows_) throw DimensionError("block row index out of range");
        for (std::size_t c = 0; c < col_idx.size(); ++c) {
            if (col_idx[c] >= cols_) throw DimensionError("block column index out of range");
            b(a, c) = (*this)(row_idx[a], col_idx[c]);
        }
    }
    return b;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& o) {
    require_same_shape(*this, o, "operator+");
    kernels::axpy(1.0, o.data_, data_);
    return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& o) {
    require_same_shape(*this, o, "operator-");
    kernels::axpy(-1.0, o.data_, data_);
    return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                             std::to_string(b.rows()) + ")");
    }
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik != 0.0) kernels::axpy(aik, b.row(k), ci);
        }
    }
    return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_tn: row counts differ (" + std::to_string(a.rows()) + " vs " +
                             std::to_string(b.rows()) + ")");
    }
    DenseMatrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const auto ak = a.row(k);
        const auto bk = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            if (ak[i] != 0.0) kernels::axpy(ak[i], bk, c.row(i));
        }
    }
    return c;
}

double frobenius_norm(const DenseMatrix& a) {
    return std::sqrt(kernels::dot(a.data(), a.data()));
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::fmax(m, std::fabs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace latgm
