#include <cmath>

#include "kernels_impl.hpp"

namespace latgm::kernels::detail {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void rotate_scalar(double* x, double* y, double c, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi - s * yi;
        y[i] = s * xi + c * yi;
    }
}

void soft_threshold_scalar(const double* in, double* out, double t, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double v = in[i];
        const double m = std::fabs(v) - t;
        out[i] = m > 0.0 ? std::copysign(m, v) : 0.0;
    }
}

double sum_abs_scalar(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::fabs(x[i]);
    return s;
}

double max_abs_scalar(const double* x, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::fmax(m, std::fabs(x[i]));
    return m;
}

}  // namespace latgm::kernels::detail
