#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <bit>
#include <cstddef>
#include <string>
#include <vector>

#include "rough/common.hpp"

namespace rough::nn {

// Dense row-major matrix. The whole stack is templated on the scalar type:
// training usually runs float, gradient checking and anything compared
// against the signature math runs double.
template <class T>
struct Tensor2 {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Tensor2() = default;
    Tensor2(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), T(0)) {}

    static Tensor2 zeros(int r, int c) { return Tensor2(r, c); }

    void resize(int r, int c) {
        rows = r;
        cols = c;
        data.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), T(0));
    }

    std::size_t size() const { return data.size(); }
    T* row(int r) { return data.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols); }
    const T* row(int r) const { return data.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols); }
    T& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)]; }
    T at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)]; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    void add_(const Tensor2& o) {
        require(rows == o.rows && cols == o.cols, "Tensor2::add_: shape mismatch");
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    }

    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
};

// Trainable tensor: value plus gradient buffer of the same shape.
template <class T>
struct Param {
    std::string name;
    Tensor2<T> w;
    Tensor2<T> g;

    void init_shape(std::string n, int rows, int cols) {
        name = std::move(n);
        w.resize(rows, cols);
        g.resize(rows, cols);
    }
    void zero_grad() { g.fill(T(0)); }
};

// ---------------------------------------------------------------------------
// Matmul kernels on raw pointers with leading dimensions, so column slices
// (attention heads) can be addressed without copies. Loop orders keep the
// innermost access contiguous.

// C(MxN) = A(MxK) * B(KxN), += when acc
template <class T>
void mm_nn(const T* __restrict A, int lda, const T* __restrict B, int ldb, T* __restrict C, int ldc, int M, int N,
           int K, bool acc = false) {
    for (int i = 0; i < M; ++i) {
        T* __restrict c = C + static_cast<std::size_t>(i) * ldc;
        if (!acc)
            for (int j = 0; j < N; ++j) c[j] = T(0);
        const T* __restrict a = A + static_cast<std::size_t>(i) * lda;
        // two k-steps per pass cuts the c[] traffic in half
        int k = 0;
        for (; k + 1 < K; k += 2) {
            const T a0 = a[k], a1 = a[k + 1];
            const T* __restrict b0 = B + static_cast<std::size_t>(k) * ldb;
            const T* __restrict b1 = b0 + ldb;
            for (int j = 0; j < N; ++j) c[j] += a0 * b0[j] + a1 * b1[j];
        }
        for (; k < K; ++k) {
            const T a0 = a[k];
            const T* __restrict b0 = B + static_cast<std::size_t>(k) * ldb;
            for (int j = 0; j < N; ++j) c[j] += a0 * b0[j];
        }
    }
}

// C(MxN) = A(MxK) * B(NxK)^T, += when acc
template <class T>
void mm_nt(const T* __restrict A, int lda, const T* __restrict B, int ldb, T* __restrict C, int ldc, int M, int N,
           int K, bool acc = false) {
    for (int i = 0; i < M; ++i) {
        const T* __restrict a = A + static_cast<std::size_t>(i) * lda;
        T* __restrict c = C + static_cast<std::size_t>(i) * ldc;
        int j = 0;
        for (; j + 1 < N; j += 2) {
            const T* __restrict b0 = B + static_cast<std::size_t>(j) * ldb;
            const T* __restrict b1 = b0 + ldb;
            T s0 = T(0), s1 = T(0);
            for (int k = 0; k < K; ++k) {
                s0 += a[k] * b0[k];
                s1 += a[k] * b1[k];
            }
            c[j] = acc ? c[j] + s0 : s0;
            c[j + 1] = acc ? c[j + 1] + s1 : s1;
        }
        for (; j < N; ++j) {
            const T* __restrict b = B + static_cast<std::size_t>(j) * ldb;
            T s = T(0);
            for (int k = 0; k < K; ++k) s += a[k] * b[k];
            c[j] = acc ? c[j] + s : s;
        }
    }
}

// C(MxN) = A(KxM)^T * B(KxN), += when acc
template <class T>
void mm_tn(const T* __restrict A, int lda, const T* __restrict B, int ldb, T* __restrict C, int ldc, int M, int N,
           int K, bool acc = false) {
    if (!acc)
        for (int i = 0; i < M; ++i) {
            T* __restrict c = C + static_cast<std::size_t>(i) * ldc;
            for (int j = 0; j < N; ++j) c[j] = T(0);
        }
    for (int k = 0; k < K; ++k) {
        const T* __restrict a = A + static_cast<std::size_t>(k) * lda;
        const T* __restrict b = B + static_cast<std::size_t>(k) * ldb;
        for (int i = 0; i < M; ++i) {
            const T aki = a[i];
            if (aki == T(0)) continue;
            T* __restrict c = C + static_cast<std::size_t>(i) * ldc;
            for (int j = 0; j < N; ++j) c[j] += aki * b[j];
        }
    }
}

// exp for the softmax inner loop. The float path is a branch-free
// polynomial (Cephes expf layout) that the compiler can vectorise; its error
// is ~1 ulp, i.e. the same order as float expf itself. The double path stays
// on std::exp so every double-precision verification route is untouched.
inline double softmax_exp(double x) { return std::exp(x); }

inline float softmax_exp(float x) {
    // callers pass max-subtracted scores, so x <= 0; the only hazard is the
    // exponent underflowing below float range. Branchless max(x, -87) and
    // round-to-nearest via the 2^23 shift keep the loop if-conversion-free
    // so it vectorises.
    x = 0.5f * (x - 87.0f + std::fabs(x + 87.0f));
    const float z = (1.44269504088896341f * x + 12582912.0f) - 12582912.0f;
    x -= z * 0.693359375f;
    x -= z * -2.12194440e-4f;
    float p = 1.9875691500e-4f;
    p = p * x + 1.3981999507e-3f;
    p = p * x + 8.3334519073e-3f;
    p = p * x + 4.1665795894e-2f;
    p = p * x + 1.6666665459e-1f;
    p = p * x + 5.0000001201e-1f;
    p = p * x * x + x + 1.0f;
    const std::uint32_t bits = (static_cast<std::uint32_t>(static_cast<std::int32_t>(z) + 127)) << 23;
    return p * std::bit_cast<float>(bits);
}

// Numerically stable row softmax in place. The exp pass carries no
// reduction so it vectorises; max and sum use fixed 8-lane accumulators to
// break the float dependency chain (a deterministic summation order, just
// not the naive left-to-right one).
template <class T>
void softmax_rows(T* __restrict X, int ld, int rows, int cols) {
    constexpr int W = 8;
    for (int r = 0; r < rows; ++r) {
        T* __restrict x = X + static_cast<std::size_t>(r) * ld;
        T mx[W];
        for (int w = 0; w < W; ++w) mx[w] = x[0];
        int j = 0;
        for (; j + W <= cols; j += W)
            for (int w = 0; w < W; ++w) mx[w] = std::max(mx[w], x[j + w]);
        T m = mx[0];
        for (int w = 1; w < W; ++w) m = std::max(m, mx[w]);
        for (; j < cols; ++j) m = std::max(m, x[j]);

        for (j = 0; j < cols; ++j) x[j] = softmax_exp(x[j] - m);

        T acc[W] = {};
        j = 0;
        for (; j + W <= cols; j += W)
            for (int w = 0; w < W; ++w) acc[w] += x[j + w];
        T sum = T(0);
        for (int w = 0; w < W; ++w) sum += acc[w];
        for (; j < cols; ++j) sum += x[j];

        const T inv = T(1) / sum;
        for (j = 0; j < cols; ++j) x[j] *= inv;
    }
}

}  // namespace rough::nn
