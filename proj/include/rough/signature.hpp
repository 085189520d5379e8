#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rough/series.hpp"
#include "rough/tensor_algebra.hpp"

namespace rough {

// Signature of a single linear segment with increment delta:
// level k = delta^(x)k / k!, built by repeated outer product with a running
// factorial division.
inline TruncatedTensor segment_signature(std::span<const double> delta, int depth) {
    const int dim = static_cast<int>(delta.size());
    require(dim >= 1, "segment_signature: empty increment");
    require(depth >= 0, "segment_signature: depth must be >= 0");
    for (double v : delta) require(std::isfinite(v), "segment_signature: non-finite increment");

    TruncatedTensor s = TruncatedTensor::unit(dim, depth);
    for (int k = 1; k <= depth; ++k) {
        auto prev = s.level(k - 1);
        auto cur = s.level(k);
        const double inv_k = 1.0 / static_cast<double>(k);
        for (std::size_t p = 0; p < prev.size(); ++p) {
            const double base = prev[p] * inv_k;
            double* dst = cur.data() + p * delta.size();
            for (std::size_t c = 0; c < delta.size(); ++c) dst[c] = base * delta[c];
        }
    }
    return s;
}

// In-place right-multiplication acc := acc (x) segment_signature(delta).
// Exploits the closed form of the segment factor so the fold never
// materialises the intermediate tensor: with G_j = delta^(x)j / j!,
// level k of the product is sum_{j=0..k} acc_{k-j} (x) G_j, built from
// highest level down so acc can be updated in place.
inline void fold_segment(TruncatedTensor& acc, std::span<const double> delta) {
    const int depth = acc.depth();
    const std::size_t d = delta.size();
    require(static_cast<int>(d) == acc.dim(), "fold_segment: dimension mismatch");

    bool zero_increment = true;
    for (double v : delta) {
        require(std::isfinite(v), "fold_segment: non-finite increment");
        if (v != 0.0) zero_increment = false;
    }
    if (zero_increment || depth == 0) return;  // unit factor, exact no-op

    // powers[j] = delta^(x)j / j! as a flat block of d^j entries
    std::vector<std::vector<double>> powers(static_cast<std::size_t>(depth) + 1);
    powers[0] = {1.0};
    for (int j = 1; j <= depth; ++j) {
        const auto& prev = powers[static_cast<std::size_t>(j - 1)];
        auto& cur = powers[static_cast<std::size_t>(j)];
        cur.assign(prev.size() * d, 0.0);
        const double inv_j = 1.0 / static_cast<double>(j);
        for (std::size_t p = 0; p < prev.size(); ++p) {
            const double base = prev[p] * inv_j;
            for (std::size_t c = 0; c < d; ++c) cur[p * d + c] = base * delta[c];
        }
    }

    for (int k = depth; k >= 1; --k) {
        auto out = acc.level(k);
        // j = 0 term is acc_k itself (G_0 = 1); start from j = 1.
        for (int j = 1; j <= k; ++j) {
            auto lhs = acc.level(k - j);
            const auto& g = powers[static_cast<std::size_t>(j)];
            for (std::size_t p = 0; p < lhs.size(); ++p) {
                const double ap = lhs[p];
                if (ap == 0.0) continue;
                double* dst = out.data() + p * g.size();
                for (std::size_t q = 0; q < g.size(); ++q) dst[q] += ap * g[q];
            }
        }
    }
}

// Signature of the piecewise-linear path through `points` (row-major,
// count x dim): strict left-to-right fold of segment signatures over the
// consecutive increments. Timestamps never enter: the result depends only on
// the point sequence, which is exactly the reparameterization invariance of
// the signature.
inline TruncatedTensor path_signature(std::span<const double> points, int dim, int depth) {
    require(dim >= 1, "path_signature: dim must be >= 1");
    require(points.size() % static_cast<std::size_t>(dim) == 0, "path_signature: points size not a multiple of dim");
    const std::size_t count = points.size() / static_cast<std::size_t>(dim);
    require(count >= 2, "path_signature: need at least 2 points");

    TruncatedTensor acc = TruncatedTensor::unit(dim, depth);
    std::vector<double> delta(static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i + 1 < count; ++i) {
        const double* a = points.data() + i * static_cast<std::size_t>(dim);
        const double* b = a + dim;
        for (int c = 0; c < dim; ++c) delta[static_cast<std::size_t>(c)] = b[c] - a[c];
        fold_segment(acc, delta);
    }
    return acc;
}

inline TruncatedTensor path_signature(const PointBlock& block, int depth) {
    return path_signature(block.points, block.dim, depth);
}

inline TruncatedTensor path_signature(const TimeSeries& s, int depth) {
    return path_signature(s.values, s.dim, depth);
}

// Prepends the timestamp as channel 0, turning (t, x) into the path whose
// signature determines the original path uniquely.
inline TimeSeries time_augment(const TimeSeries& s) {
    s.validate();
    TimeSeries out;
    out.dim = s.dim + 1;
    out.label = s.label;
    out.target = s.target;
    out.timestamps = s.timestamps;
    out.values.resize(s.length() * static_cast<std::size_t>(out.dim));
    for (std::size_t i = 0; i < s.length(); ++i) {
        double* row = out.values.data() + i * static_cast<std::size_t>(out.dim);
        row[0] = s.timestamps[i];
        auto p = s.point(i);
        for (int c = 0; c < s.dim; ++c) row[c + 1] = p[static_cast<std::size_t>(c)];
    }
    return out;
}

// Total variation (sum of Euclidean increment norms) of a polyline; the V in
// the factorial decay bound level_max_norm(S, k) <= V^k / k!.
inline double total_variation(std::span<const double> points, int dim) {
    const std::size_t count = points.size() / static_cast<std::size_t>(dim);
    double tv = 0.0;
    for (std::size_t i = 0; i + 1 < count; ++i) {
        const double* a = points.data() + i * static_cast<std::size_t>(dim);
        const double* b = a + dim;
        double s2 = 0.0;
        for (int c = 0; c < dim; ++c) {
            const double dlt = b[c] - a[c];
            s2 += dlt * dlt;
        }
        tv += std::sqrt(s2);
    }
    return tv;
}

}  // namespace rough
