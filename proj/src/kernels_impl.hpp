#pragma once

#include <cstddef>

#include "latgm/kernels.hpp"

namespace latgm::kernels::detail {

double dot_scalar(const double* x, const double* y, std::size_t n);
void axpy_scalar(double a, const double* x, double* y, std::size_t n);
void rotate_scalar(double* x, double* y, double c, double s, std::size_t n);
void soft_threshold_scalar(const double* in, double* out, double t, std::size_t n);
double sum_abs_scalar(const double* x, std::size_t n);
double max_abs_scalar(const double* x, std::size_t n);

#if defined(LATGM_HAVE_AVX2)
double dot_avx2(const double* x, const double* y, std::size_t n);
void axpy_avx2(double a, const double* x, double* y, std::size_t n);
void rotate_avx2(double* x, double* y, double c, double s, std::size_t n);
void soft_threshold_avx2(const double* in, double* out, double t, std::size_t n);
double sum_abs_avx2(const double* x, std::size_t n);
double max_abs_avx2(const double* x, std::size_t n);
#endif

}  // namespace latgm::kernels::detail
