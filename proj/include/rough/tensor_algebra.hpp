#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rough/common.hpp"

namespace rough {

// One element of the truncated tensor algebra T^{<=n}(R^d). Level k is a
// dense block of d^k coefficients in row-major multi-index order (the last
// index varies fastest); level 0 is the scalar term. All coefficients are
// doubles: the signature property tests need 1e-10..1e-12 tolerances.
//
// Values are immutable by convention once built; every operation below is a
// pure function returning a fresh tensor, so instances can be shared freely
// across threads.
class TruncatedTensor {
public:
    TruncatedTensor() = default;

    // All-zero element.
    static TruncatedTensor zero(int dim, int depth) {
        require(dim >= 1, "TruncatedTensor: dim must be >= 1");
        require(depth >= 0, "TruncatedTensor: depth must be >= 0");
        TruncatedTensor t;
        t.dim_ = dim;
        t.depth_ = depth;
        t.levels_.resize(static_cast<std::size_t>(depth) + 1);
        std::size_t block = 1;
        for (int k = 0; k <= depth; ++k) {
            t.levels_[static_cast<std::size_t>(k)].assign(block, 0.0);
            block *= static_cast<std::size_t>(dim);
        }
        return t;
    }

    // Multiplicative identity (1, 0, 0, ...).
    static TruncatedTensor unit(int dim, int depth) {
        TruncatedTensor t = zero(dim, depth);
        t.levels_[0][0] = 1.0;
        return t;
    }

    int dim() const { return dim_; }
    int depth() const { return depth_; }

    std::span<double> level(int k) {
        require(k >= 0 && k <= depth_, "TruncatedTensor: level out of range");
        return levels_[static_cast<std::size_t>(k)];
    }
    std::span<const double> level(int k) const {
        require(k >= 0 && k <= depth_, "TruncatedTensor: level out of range");
        return levels_[static_cast<std::size_t>(k)];
    }

    double scalar() const { return levels_[0][0]; }

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& b : levels_) n += b.size();
        return n;
    }

    // Drops levels above `new_depth`; exact (pure copy of surviving blocks).
    TruncatedTensor truncated(int new_depth) const {
        require(new_depth >= 0 && new_depth <= depth_, "truncated: bad depth");
        TruncatedTensor t = zero(dim_, new_depth);
        for (int k = 0; k <= new_depth; ++k) t.levels_[static_cast<std::size_t>(k)] = levels_[static_cast<std::size_t>(k)];
        return t;
    }

private:
    int dim_ = 0;
    int depth_ = -1;
    std::vector<std::vector<double>> levels_;

    friend TruncatedTensor tensor_mul(const TruncatedTensor&, const TruncatedTensor&);
};

// Word of channel indices in {0..d-1} addressing one coefficient inside a
// level block. Bijective with flat offsets: offset = ((w0*d + w1)*d + w2)...
struct MultiIndex {
    std::vector<int> word;

    std::size_t flat_offset(int dim) const {
        std::size_t off = 0;
        for (int c : word) {
            require(c >= 0 && c < dim, "MultiIndex: channel out of range");
            off = off * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c);
        }
        return off;
    }

    static MultiIndex from_offset(std::size_t offset, int dim, int length) {
        MultiIndex m;
        m.word.assign(static_cast<std::size_t>(length), 0);
        for (int i = length - 1; i >= 0; --i) {
            m.word[static_cast<std::size_t>(i)] = static_cast<int>(offset % static_cast<std::size_t>(dim));
            offset /= static_cast<std::size_t>(dim);
        }
        return m;
    }
};

// Truncated convolution product: level k of the result is
// sum_{j=0..k} A_j (x) B_{k-j}, contributions beyond the truncation depth
// are discarded.
inline TruncatedTensor tensor_mul(const TruncatedTensor& a, const TruncatedTensor& b) {
    require(a.dim() == b.dim(), "tensor_mul: dimension mismatch");
    require(a.depth() == b.depth(), "tensor_mul: depth mismatch");
    const int depth = a.depth();
    TruncatedTensor c = TruncatedTensor::zero(a.dim(), depth);
    for (int k = 0; k <= depth; ++k) {
        auto out = c.levels_[static_cast<std::size_t>(k)].data();
        for (int j = 0; j <= k; ++j) {
            auto lhs = a.level(j);
            auto rhs = b.level(k - j);
            const std::size_t nr = rhs.size();
            // out[p*|rhs| + q] += lhs[p] * rhs[q]
            for (std::size_t p = 0; p < lhs.size(); ++p) {
                const double ap = lhs[p];
                if (ap == 0.0) continue;
                double* dst = out + p * nr;
                for (std::size_t q = 0; q < nr; ++q) dst[q] += ap * rhs[q];
            }
        }
    }
    return c;
}

// Max absolute coefficient of level k; the quantity bounded by V^k / k!.
inline double level_max_norm(const TruncatedTensor& a, int k) {
    auto block = a.level(k);
    double m = 0.0;
    for (double v : block) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace rough
