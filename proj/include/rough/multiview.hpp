#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rough/parallel.hpp"
#include "rough/signature.hpp"

namespace rough {

enum class SigView { multi_view, local_only, global_only };

inline const char* to_string(SigView v) {
    switch (v) {
        case SigView::multi_view: return "multi-view";
        case SigView::local_only: return "local";
        case SigView::global_only: return "global";
    }
    return "?";
}

inline SigView sig_view_from_string(const std::string& s) {
    if (s == "multi-view" || s == "multiview") return SigView::multi_view;
    if (s == "local") return SigView::local_only;
    if (s == "global") return SigView::global_only;
    fail("unknown signature view mode: " + s + " (expected multi-view | local | global)");
}

struct SigConfig {
    int depth = 2;
    int windows = 75;
    SigView view = SigView::multi_view;
    bool time_augment = false;
    // Multiply level-k blocks by k! before flattening. The raw level-k
    // coefficients decay factorially, which leaves high levels numerically
    // tiny next to level 1; rescaling puts all levels on the increment scale.
    bool level_rescale = true;

    // Flattened token width for a path of dimension d (level 0 stripped).
    std::size_t token_width(int d) const {
        std::size_t per_view = 0, block = 1;
        for (int k = 1; k <= depth; ++k) {
            block *= static_cast<std::size_t>(d);
            per_view += block;
        }
        return view == SigView::multi_view ? 2 * per_view : per_view;
    }
};

// Token matrix produced by the multi-view signature transform: row k holds
// the flattened truncated signatures at grid time t_k.
struct MultiViewTokens {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major
    int path_dim = 0;          // d after any time augmentation
    int depth = 0;
    SigView view = SigView::multi_view;

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

// Signature of each window slice [t_{k-1}, t_k]; entry k is the signature of
// the interpolated path restricted to window k. Window slots are independent,
// so the optional worker pool changes nothing about the values.
inline std::vector<TruncatedTensor> local_signatures(const TimeSeries& s, const WindowGrid& grid, int depth,
                                                     unsigned workers = 1) {
    const std::size_t nw = grid.num_windows();
    require(nw >= 1, "local_signatures: empty grid");
    require(grid.boundaries.front() == s.start_time() && grid.boundaries.back() == s.end_time(),
            "local_signatures: grid does not span the series");
    std::vector<TruncatedTensor> out(nw);
    parallel_for(nw, workers, [&](std::size_t k) {
        PointBlock blk = slice_window(s, grid.boundaries[k], grid.boundaries[k + 1]);
        out[k] = path_signature(blk, depth);
    });
    return out;
}

// Prefix products G_k = G_{k-1} (x) local_k. Chen's relation makes each G_k
// the signature over [t_0, t_k], at the cost of one tensor product per window
// instead of a from-scratch pass over the prefix.
inline std::vector<TruncatedTensor> global_signatures(const std::vector<TruncatedTensor>& local_sigs) {
    require(!local_sigs.empty(), "global_signatures: empty input");
    std::vector<TruncatedTensor> out(local_sigs.size());
    out[0] = local_sigs[0];
    for (std::size_t k = 1; k < local_sigs.size(); ++k) out[k] = tensor_mul(out[k - 1], local_sigs[k]);
    return out;
}

namespace detail {

// Levels 1..n of `t` appended to `dst`, optionally rescaled by k!.
inline void flatten_levels(const TruncatedTensor& t, bool rescale, double* dst) {
    double factorial = 1.0;
    std::size_t off = 0;
    for (int k = 1; k <= t.depth(); ++k) {
        factorial *= static_cast<double>(k);
        const double scale = rescale ? factorial : 1.0;
        auto lvl = t.level(k);
        for (std::size_t q = 0; q < lvl.size(); ++q) dst[off + q] = scale * lvl[q];
        off += lvl.size();
    }
}

}  // namespace detail

// The multi-view signature transform M(X)^{<=n}: one token per grid window,
// each the concatenation of the flattened global prefix signature and the
// flattened local window signature (or a single view when so configured).
// The level-0 scalar is always 1 and is stripped.
inline MultiViewTokens multi_view_transform(const TimeSeries& series, const SigConfig& cfg, unsigned workers = 1) {
    const TimeSeries* s = &series;
    TimeSeries augmented;
    if (cfg.time_augment) {
        augmented = time_augment(series);
        s = &augmented;
    }
    WindowGrid grid = uniform_grid(*s, cfg.windows);
    auto locals = local_signatures(*s, grid, cfg.depth, workers);

    MultiViewTokens tok;
    tok.rows = locals.size();
    tok.path_dim = s->dim;
    tok.depth = cfg.depth;
    tok.view = cfg.view;
    tok.cols = cfg.token_width(s->dim);
    tok.data.assign(tok.rows * tok.cols, 0.0);

    std::size_t per_view = 0, block = 1;
    for (int k = 1; k <= cfg.depth; ++k) {
        block *= static_cast<std::size_t>(s->dim);
        per_view += block;
    }

    if (cfg.view == SigView::local_only) {
        for (std::size_t k = 0; k < tok.rows; ++k)
            detail::flatten_levels(locals[k], cfg.level_rescale, tok.row(k));
        return tok;
    }

    auto globals = global_signatures(locals);
    if (cfg.view == SigView::global_only) {
        for (std::size_t k = 0; k < tok.rows; ++k)
            detail::flatten_levels(globals[k], cfg.level_rescale, tok.row(k));
        return tok;
    }
    for (std::size_t k = 0; k < tok.rows; ++k) {
        detail::flatten_levels(globals[k], cfg.level_rescale, tok.row(k));
        detail::flatten_levels(locals[k], cfg.level_rescale, tok.row(k) + per_view);
    }
    return tok;
}

// Element-wise transform of a whole dataset, parallel across series. Each
// series is computed by exactly one worker with the sequential code path, so
// the output is identical for any worker count.
inline std::vector<MultiViewTokens> batch_transform(const std::vector<TimeSeries>& dataset, const SigConfig& cfg,
                                                    unsigned workers = 0) {
    if (dataset.empty()) return {};
    const int d0 = dataset.front().dim;
    for (const auto& s : dataset)
        require(s.dim == d0, "batch_transform: heterogeneous series dimensions");
    std::vector<MultiViewTokens> out(dataset.size());
    parallel_for(dataset.size(), workers, [&](std::size_t i) { out[i] = multi_view_transform(dataset[i], cfg, 1); });
    return out;
}

}  // namespace rough
