#pragma once

// Dense vector/matrix arithmetic on 64-bit floats, sized for matrices up to
// roughly 1000x1000. Row-major storage, value semantics throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "simet/errors.hpp"

namespace simet {

class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
    Vector(std::initializer_list<double> init) : data_(init) {}
    explicit Vector(std::vector<double> v) : data_(std::move(v)) {}

    std::size_t size() const { return data_.size(); }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    bool operator==(const Vector& o) const { return data_ == o.data_; }

private:
    std::vector<double> data_;
};

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                             " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }
    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Matrix& m) {
    for (double x : m.data())
        if (!std::isfinite(x)) return false;
    return true;
}

inline void require_finite(const Vector& v, const std::string& what) {
    if (!all_finite(v)) throw NumericError(what + " contains a non-finite entry");
}

inline void require_same_size(const Vector& a, const Vector& b, const std::string& what) {
    if (a.size() != b.size())
        throw ShapeError(what + ": " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

inline Vector operator+(const Vector& a, const Vector& b) {
    require_same_size(a, b, "vector add");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vector operator-(const Vector& a, const Vector& b) {
    require_same_size(a, b, "vector sub");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vector operator*(double s, const Vector& a) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

inline double dot(const Vector& a, const Vector& b) {
    require_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vector& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

// y += s*x
inline void axpy(double s, const Vector& x, Vector& y) {
    require_same_size(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

inline Vector normalized(const Vector& a) {
    double n = norm2(a);
    if (n == 0.0) throw NumericError("cannot normalize a zero vector");
    return (1.0 / n) * a;
}

inline Vector matvec(const Matrix& m, const Vector& x) {
    if (m.cols() != x.size())
        throw ShapeError("matvec: " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                         " * " + std::to_string(x.size()));
    Vector r(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row_ptr(i);
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) s += row[j] * x[j];
        r[i] = s;
    }
    return r;
}

// C = A*B with the classic ikj loop order; the inner loop runs over contiguous
// rows of both B and C.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* crow = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("matrix add");
    Matrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.data().size(); ++i) c.data()[i] = a.data()[i] + b.data()[i];
    return c;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("matrix sub");
    Matrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.data().size(); ++i) c.data()[i] = a.data()[i] - b.data()[i];
    return c;
}

inline Matrix operator*(double s, const Matrix& a) {
    Matrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.data().size(); ++i) c.data()[i] = s * a.data()[i];
    return c;
}

inline double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double x : m.data()) s += x * x;
    return std::sqrt(s);
}

inline double max_abs(const Matrix& m) {
    double s = 0.0;
    for (double x : m.data()) s = std::max(s, std::abs(x));
    return s;
}

// A^T A without forming the transpose; exactly symmetric by construction.
inline Matrix gram(const Matrix& a) {
    Matrix g(a.cols(), a.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* row = a.row_ptr(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            double rik = row[i];
            if (rik == 0.0) continue;
            double* grow = g.row_ptr(i);
            for (std::size_t j = 0; j < a.cols(); ++j) grow[j] += rik * row[j];
        }
    }
    return g;
}

// v^T M v for square M.
inline double quadratic_form(const Matrix& m, const Vector& v) {
    if (m.rows() != m.cols() || m.rows() != v.size()) throw ShapeError("quadratic_form");
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row_ptr(i);
        double t = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) t += row[j] * v[j];
        s += v[i] * t;
    }
    return s;
}

// Operator-norm upper bound: min(Frobenius, sqrt(norm1 * normInf)). Both
// dominate the spectral norm; the second is exact for permutation-like maps.
inline double spectral_upper_bound(const Matrix& m) {
    double fro = frobenius_norm(m);
    double n1 = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) s += std::abs(m(i, j));
        n1 = std::max(n1, s);
    }
    double ninf = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) s += std::abs(m(i, j));
        ninf = std::max(ninf, s);
    }
    return std::min(fro, std::sqrt(n1 * ninf));
}

inline Vector concat(const Vector& a, const Vector& b) {
    Vector r(a.size() + b.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i];
    for (std::size_t i = 0; i < b.size(); ++i) r[a.size() + i] = b[i];
    return r;
}

inline Vector slice(const Vector& v, std::size_t begin, std::size_t count) {
    if (begin + count > v.size()) throw ShapeError("vector slice out of range");
    Vector r(count);
    for (std::size_t i = 0; i < count; ++i) r[i] = v[begin + i];
    return r;
}

} // namespace simet
