#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace latgm {

// Dense real matrix stored row-major. Constructors reject non-finite entries
// and empty shapes.
class DenseMatrix {
public:
    DenseMatrix(std::size_t rows, std::size_t cols);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix diagonal(std::span<const double> d);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool is_square() const noexcept { return rows_ == cols_; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    std::vector<double> column(std::size_t j) const;
    std::vector<double> diag() const;

    DenseMatrix transpose() const;
    DenseMatrix block(std::span<const std::size_t> row_idx, std::span<const std::size_t> col_idx) const;

    DenseMatrix& operator+=(const DenseMatrix& o);
    DenseMatrix& operator-=(const DenseMatrix& o);
    DenseMatrix& operator*=(double s);

    bool operator==(const DenseMatrix& o) const = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);

// A * B.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// A^T * B without forming A^T.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);

double frobenius_norm(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
bool all_finite(std::span<const double> v);

}  // namespace latgm
