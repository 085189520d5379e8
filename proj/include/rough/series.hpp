#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "rough/common.hpp"

namespace rough {

// A (possibly irregularly sampled) multichannel time series: strictly
// increasing timestamps plus a row-major (length x dim) value matrix.
// Immutable by convention after construction.
struct TimeSeries {
    std::vector<double> timestamps;
    std::vector<double> values;  // row-major, length x dim
    int dim = 1;
    std::optional<int> label;       // classification target
    std::optional<double> target;   // regression target

    std::size_t length() const { return timestamps.size(); }

    std::span<const double> point(std::size_t i) const {
        return {values.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }

    double start_time() const { return timestamps.front(); }
    double end_time() const { return timestamps.back(); }

    // Enforces the container invariants; call after assembling the fields.
    void validate() const {
        require(dim >= 1, "TimeSeries: dim must be >= 1");
        require(timestamps.size() >= 2, "TimeSeries: need at least 2 points");
        require(values.size() == timestamps.size() * static_cast<std::size_t>(dim),
                "TimeSeries: values size does not match length x dim");
        for (std::size_t i = 1; i < timestamps.size(); ++i)
            require(timestamps[i] > timestamps[i - 1], "TimeSeries: timestamps must be strictly increasing");
        for (double v : values) require(std::isfinite(v), "TimeSeries: non-finite value");
        for (double t : timestamps) require(std::isfinite(t), "TimeSeries: non-finite timestamp");
    }
};

inline TimeSeries make_series(std::vector<double> times, std::vector<double> values, int dim) {
    TimeSeries s;
    s.timestamps = std::move(times);
    s.values = std::move(values);
    s.dim = dim;
    s.validate();
    return s;
}

// L+1 window boundaries t_0 < t_1 < ... < t_L spanning a series' time range.
struct WindowGrid {
    std::vector<double> boundaries;

    std::size_t num_windows() const { return boundaries.empty() ? 0 : boundaries.size() - 1; }
};

// Value of the piecewise-linear interpolation at time t. Exact at knots.
inline std::vector<double> interpolate_at(const TimeSeries& s, double t) {
    require(t >= s.start_time() && t <= s.end_time(), "interpolate_at: t outside the series range");
    const auto& ts = s.timestamps;
    // Index of the first knot >= t.
    auto it = std::lower_bound(ts.begin(), ts.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - ts.begin());
    if (hi < ts.size() && ts[hi] == t) {
        auto p = s.point(hi);
        return {p.begin(), p.end()};
    }
    std::size_t lo = hi - 1;
    const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
    auto a = s.point(lo);
    auto b = s.point(hi);
    std::vector<double> out(static_cast<std::size_t>(s.dim));
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = a[c] + w * (b[c] - a[c]);
    return out;
}

// num_windows+1 boundaries equally spaced in *time* over the series span.
// Spacing in time (not sample index) is what makes the windows independent
// of the sampling pattern.
inline WindowGrid uniform_grid(const TimeSeries& s, int num_windows) {
    require(num_windows >= 1, "uniform_grid: need at least 1 window");
    WindowGrid g;
    g.boundaries.resize(static_cast<std::size_t>(num_windows) + 1);
    const double t0 = s.start_time();
    const double t1 = s.end_time();
    for (int k = 0; k <= num_windows; ++k)
        g.boundaries[static_cast<std::size_t>(k)] = t0 + (t1 - t0) * static_cast<double>(k) / num_windows;
    g.boundaries.front() = t0;
    g.boundaries.back() = t1;
    return g;
}

// Points of the interpolated path restricted to [a, b]: interpolated value
// at a, every knot strictly inside (a, b), interpolated value at b. Adjacent
// windows therefore share exactly their boundary point and the window
// signatures compose to the whole-path signature.
struct PointBlock {
    std::vector<double> points;  // row-major, count x dim
    std::size_t count = 0;
    int dim = 0;
};

inline PointBlock slice_window(const TimeSeries& s, double a, double b) {
    require(a < b, "slice_window: empty range");
    require(a >= s.start_time() && b <= s.end_time(), "slice_window: range outside series span");
    PointBlock blk;
    blk.dim = s.dim;
    const std::size_t d = static_cast<std::size_t>(s.dim);

    auto va = interpolate_at(s, a);
    blk.points.insert(blk.points.end(), va.begin(), va.end());
    blk.count = 1;

    const auto& ts = s.timestamps;
    auto first = std::upper_bound(ts.begin(), ts.end(), a);
    for (auto it = first; it != ts.end() && *it < b; ++it) {
        std::size_t i = static_cast<std::size_t>(it - ts.begin());
        auto p = s.point(i);
        blk.points.insert(blk.points.end(), p.begin(), p.end());
        ++blk.count;
    }

    auto vb = interpolate_at(s, b);
    blk.points.insert(blk.points.end(), vb.begin(), vb.end());
    ++blk.count;

    (void)d;
    return blk;
}

// Uniform subsample of interior points without replacement. First and last
// points are always kept so the time span (and any grid built on it) is
// unchanged. Fresh draw per call; deterministic given the rng state.
inline TimeSeries random_drop(const TimeSeries& s, double keep_fraction, std::mt19937_64& rng) {
    require(keep_fraction > 0.0 && keep_fraction <= 1.0, "random_drop: keep_fraction must be in (0, 1]");
    const std::size_t n = s.length();
    const std::size_t target = static_cast<std::size_t>(std::llround(keep_fraction * static_cast<double>(n)));
    require(target >= 2, "random_drop: keep_fraction leaves fewer than 2 points");
    if (target >= n) return s;

    const std::size_t interior = n - 2;
    const std::size_t pick = target - 2;

    // Partial Fisher-Yates over interior indices, then sort the chosen ones.
    std::vector<std::uint32_t> idx(interior);
    std::iota(idx.begin(), idx.end(), 1u);
    for (std::size_t i = 0; i < pick; ++i) {
        std::uniform_int_distribution<std::size_t> pos(i, interior - 1);
        std::swap(idx[i], idx[pos(rng)]);
    }
    idx.resize(pick);
    std::sort(idx.begin(), idx.end());

    TimeSeries out;
    out.dim = s.dim;
    out.label = s.label;
    out.target = s.target;
    out.timestamps.reserve(target);
    out.values.reserve(target * static_cast<std::size_t>(s.dim));
    auto push = [&](std::size_t i) {
        out.timestamps.push_back(s.timestamps[i]);
        auto p = s.point(i);
        out.values.insert(out.values.end(), p.begin(), p.end());
    };
    push(0);
    for (std::uint32_t i : idx) push(i);
    push(n - 1);
    return out;
}

}  // namespace rough
