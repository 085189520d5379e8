#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rough/tensor_algebra.hpp"

namespace rough {

// Brute-force reference for the truncated signature: evaluates the nested
// Riemann sums  sum_{i_1 < i_2 < ... < i_k} delta_{i_1} (x) ... (x) delta_{i_k}
// directly over the sampled grid, where delta_i are the grid increments.
// Updating the accumulators from the deepest level down makes each grid step
// extend only strictly earlier prefixes, which is exactly the ordered
// (simplex) sum. No segment closed form and no Chen product are involved, so
// this is an independent check of the production path; it converges to the
// true iterated integrals as the grid is refined.
//
// Test-only: unoptimised on purpose, keep n <= 3 and grids >= 1000 points.
inline TruncatedTensor numeric_signature_oracle(std::span<const double> grid_points, int dim, int depth) {
    require(dim >= 1, "numeric_signature_oracle: dim must be >= 1");
    require(grid_points.size() % static_cast<std::size_t>(dim) == 0,
            "numeric_signature_oracle: points size not a multiple of dim");
    const std::size_t count = grid_points.size() / static_cast<std::size_t>(dim);
    require(count >= 2, "numeric_signature_oracle: need at least 2 grid points");

    const std::size_t d = static_cast<std::size_t>(dim);
    std::vector<std::vector<double>> acc(static_cast<std::size_t>(depth) + 1);
    acc[0] = {1.0};
    std::size_t block = 1;
    for (int k = 1; k <= depth; ++k) {
        block *= d;
        acc[static_cast<std::size_t>(k)].assign(block, 0.0);
    }

    std::vector<double> delta(d);
    for (std::size_t i = 0; i + 1 < count; ++i) {
        const double* a = grid_points.data() + i * d;
        const double* b = a + d;
        for (std::size_t c = 0; c < d; ++c) delta[c] = b[c] - a[c];
        for (int k = depth; k >= 1; --k) {
            const auto& lower = acc[static_cast<std::size_t>(k - 1)];
            auto& cur = acc[static_cast<std::size_t>(k)];
            for (std::size_t p = 0; p < lower.size(); ++p) {
                const double lp = lower[p];
                for (std::size_t c = 0; c < d; ++c) cur[p * d + c] += lp * delta[c];
            }
        }
    }

    TruncatedTensor out = TruncatedTensor::unit(dim, depth);
    for (int k = 1; k <= depth; ++k) {
        auto lvl = out.level(k);
        const auto& src = acc[static_cast<std::size_t>(k)];
        for (std::size_t q = 0; q < src.size(); ++q) lvl[q] = src[q];
    }
    return out;
}

}  // namespace rough
