#pragma once
// Dense row-major tensor of doubles. The unit of all numerics here.

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mmfuse/errors.hpp"

namespace mmfuse {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != shape_numel(shape))
            throw ShapeMismatch("tensor data size " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
        for (std::size_t dim : shape)
            if (dim == 0) throw ShapeMismatch("zero dimension in shape " + shape_str(shape));
    }

    static Tensor zeros(Shape s) {
        std::size_t n = shape_numel(s);
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    // 2-D constructor from nested initializer lists, for tests and fixtures.
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows_init) {
        std::size_t m = rows_init.size();
        std::size_t n = rows_init.begin()->size();
        std::vector<double> d;
        d.reserve(m * n);
        for (const auto& r : rows_init) {
            if (r.size() != n) throw ShapeMismatch("ragged initializer");
            d.insert(d.end(), r.begin(), r.end());
        }
        return Tensor({m, n}, std::move(d));
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    std::size_t rows() const {
        if (rank() != 2) throw ShapeMismatch("rows() on non-2D tensor " + shape_str(shape));
        return shape[0];
    }
    std::size_t cols() const {
        if (rank() != 2) throw ShapeMismatch("cols() on non-2D tensor " + shape_str(shape));
        return shape[1];
    }

    double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// C += A * B, all row-major; A is m x k, B is k x n. The i-k-j loop order keeps
// the accumulation over k in a fixed order per output element, so results are
// bit-identical regardless of how rows are batched together.
inline void gemm_nn_accum(const double* a, const double* b, double* c, std::size_t m,
                          std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            double av = ai[p];
            if (av == 0.0) continue;
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

// C += A * B^T; A is m x k, B is n x k.
inline void gemm_nt_accum(const double* a, const double* b, double* c, std::size_t m,
                          std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
            ci[j] += acc;
        }
    }
}

// C += A^T * B; A is k x m, B is k x n.
inline void gemm_tn_accum(const double* a, const double* b, double* c, std::size_t m,
                          std::size_t k, std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) {
        const double* ap = a + p * m;
        const double* bp = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            double av = ap[i];
            if (av == 0.0) continue;
            double* ci = c + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

inline double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

inline double l2_norm(const double* a, std::size_t n) { return std::sqrt(dot(a, a, n)); }

// Cosine of two raw vectors; zero vectors compare as 0 against everything.
inline double cosine(const double* a, const double* b, std::size_t n) {
    double na = l2_norm(a, n);
    double nb = l2_norm(b, n);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b, n) / (na * nb);
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw ShapeMismatch("cosine: vector lengths " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
    return cosine(a.data(), b.data(), a.size());
}

inline double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
    return 1.0 - cosine(a, b);
}

}  // namespace mmfuse
