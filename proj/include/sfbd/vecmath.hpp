#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "sfbd/errors.hpp"

namespace sfbd {

// Points and parameter vectors are plain double vectors; everything in this
// project runs in double precision.
using Point = std::vector<double>;
using ParamVector = std::vector<double>;

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline void check_same_dim(const std::vector<double>& a, const std::vector<double>& b,
                           const char* where) {
    if (a.size() != b.size()) {
        throw ContractViolation(std::string(where) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
}

inline void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
    check_same_dim(x, y, "axpy");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline std::vector<double> scaled(const std::vector<double>& x, double a) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i];
    return out;
}

inline std::vector<double> added(const std::vector<double>& a, const std::vector<double>& b) {
    check_same_dim(a, b, "added");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

inline std::vector<double> subtracted(const std::vector<double>& a, const std::vector<double>& b) {
    check_same_dim(a, b, "subtracted");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    check_same_dim(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(const std::vector<double>& v) { return dot(v, v); }

inline double norm(const std::vector<double>& v) { return std::sqrt(squared_norm(v)); }

inline double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
    check_same_dim(a, b, "euclidean_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// Dense square matrix, row-major. Dimensions here are tiny (Gaussian oracle
// covariances), so no attempt at blocking or vendor BLAS.
struct Mat {
    int n = 0;
    std::vector<double> a;  // n*n row-major

    Mat() = default;
    explicit Mat(int n_, double fill = 0.0) : n(n_), a(static_cast<std::size_t>(n_) * n_, fill) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

    static Mat identity(int n_) {
        Mat m(n_);
        for (int i = 0; i < n_; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline Mat mat_add(const Mat& a, const Mat& b) {
    Mat c(a.n);
    for (std::size_t i = 0; i < c.a.size(); ++i) c.a[i] = a.a[i] + b.a[i];
    return c;
}

inline Mat mat_sub(const Mat& a, const Mat& b) {
    Mat c(a.n);
    for (std::size_t i = 0; i < c.a.size(); ++i) c.a[i] = a.a[i] - b.a[i];
    return c;
}

inline Mat mat_scale(const Mat& a, double s) {
    Mat c(a.n);
    for (std::size_t i = 0; i < c.a.size(); ++i) c.a[i] = s * a.a[i];
    return c;
}

inline Mat mat_mul(const Mat& a, const Mat& b) {
    Mat c(a.n);
    for (int i = 0; i < a.n; ++i)
        for (int k = 0; k < a.n; ++k) {
            const double aik = a(i, k);
            for (int j = 0; j < a.n; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Mat mat_transpose(const Mat& a) {
    Mat c(a.n);
    for (int i = 0; i < a.n; ++i)
        for (int j = 0; j < a.n; ++j) c(i, j) = a(j, i);
    return c;
}

inline std::vector<double> mat_vec(const Mat& a, const std::vector<double>& x) {
    std::vector<double> y(a.n, 0.0);
    for (int i = 0; i < a.n; ++i)
        for (int j = 0; j < a.n; ++j) y[i] += a(i, j) * x[j];
    return y;
}

// Cholesky factor L with A = L L^T. Throws NumericError when A is not
// positive definite, which doubles as the SPD check for covariance inputs.
inline Mat cholesky(const Mat& a) {
    Mat l(a.n);
    for (int i = 0; i < a.n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s)) {
                    throw NumericError("cholesky: matrix not positive definite");
                }
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

inline std::vector<double> chol_solve(const Mat& l, const std::vector<double>& b) {
    const int n = l.n;
    std::vector<double> y(n), x(n);
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
        x[i] = s / l(i, i);
    }
    return x;
}

inline Mat mat_inverse_spd(const Mat& a) {
    const Mat l = cholesky(a);
    Mat inv(a.n);
    std::vector<double> e(a.n, 0.0);
    for (int j = 0; j < a.n; ++j) {
        e[j] = 1.0;
        const std::vector<double> col = chol_solve(l, e);
        for (int i = 0; i < a.n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    return inv;
}

inline double log_det_spd(const Mat& a) {
    const Mat l = cholesky(a);
    double s = 0.0;
    for (int i = 0; i < a.n; ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

inline double trace(const Mat& a) {
    double s = 0.0;
    for (int i = 0; i < a.n; ++i) s += a(i, i);
    return s;
}

inline double frobenius_norm(const Mat& a) {
    double s = 0.0;
    for (double v : a.a) s += v * v;
    return std::sqrt(s);
}

}  // namespace sfbd
