#include <doctest.h>

#include <cmath>
#include <random>

#include "rough/datasets.hpp"
#include "rough/multiview.hpp"

using namespace rough;

namespace {

TimeSeries random_series(int dim, std::size_t len, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> ts(len), vals(len * static_cast<std::size_t>(dim));
    double t = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        t += 0.01 + 0.2 * (u(rng) + 1.0);
        ts[i] = t;
        for (int c = 0; c < dim; ++c) vals[i * dim + c] = u(rng);
    }
    return make_series(ts, vals, dim);
}

}  // namespace

TEST_CASE("token width formula and level-0 stripping") {
    SigConfig cfg;
    cfg.depth = 2;
    cfg.view = SigView::multi_view;
    CHECK(cfg.token_width(3) == 24);  // 2 * (3 + 9)
    cfg.view = SigView::local_only;
    CHECK(cfg.token_width(3) == 12);
    cfg.view = SigView::global_only;
    CHECK(cfg.token_width(2) == 6);

    std::mt19937_64 rng(1);
    auto s = random_series(2, 40, rng);
    cfg.view = SigView::multi_view;
    cfg.windows = 5;
    auto tok = multi_view_transform(s, cfg);
    CHECK(tok.rows == 5);
    CHECK(tok.cols == cfg.token_width(2));
    for (double v : tok.data) CHECK(std::isfinite(v));
    // no constant all-ones column (level 0 stripped): every column must vary
    // or at least not be identically 1
    for (std::size_t c = 0; c < tok.cols; ++c) {
        bool all_one = true;
        for (std::size_t r = 0; r < tok.rows; ++r)
            if (tok.row(r)[c] != 1.0) all_one = false;
        CHECK_FALSE(all_one);
    }
}

TEST_CASE("constant series: local signatures are unit, tokens vanish") {
    auto s = make_series({0.0, 1.0, 2.0, 3.0}, {2.0, 2.0, 2.0, 2.0}, 1);
    auto grid = uniform_grid(s, 4);
    auto locals = local_signatures(s, grid, 3);
    for (const auto& t : locals) {
        CHECK(t.scalar() == 1.0);
        for (int k = 1; k <= 3; ++k) CHECK(level_max_norm(t, k) == 0.0);
    }
    auto globals = global_signatures(locals);
    for (const auto& t : globals)
        for (int k = 1; k <= 3; ++k) CHECK(level_max_norm(t, k) == 0.0);

    SigConfig cfg;
    cfg.depth = 2;
    cfg.windows = 4;
    auto tok = multi_view_transform(s, cfg);
    for (double v : tok.data) CHECK(v == 0.0);
}

TEST_CASE("single window: token equals the flattened full signature") {
    std::mt19937_64 rng(2);
    auto s = random_series(2, 30, rng);
    SigConfig cfg;
    cfg.depth = 2;
    cfg.windows = 1;
    cfg.view = SigView::local_only;
    cfg.level_rescale = false;
    auto tok = multi_view_transform(s, cfg);
    REQUIRE(tok.rows == 1);
    auto full = path_signature(s, 2);
    CHECK(tok.row(0)[0] == doctest::Approx(full.level(1)[0]).epsilon(1e-12));
    CHECK(tok.row(0)[1] == doctest::Approx(full.level(1)[1]).epsilon(1e-12));
    for (int q = 0; q < 4; ++q) CHECK(tok.row(0)[2 + q] == doctest::Approx(full.level(2)[q]).epsilon(1e-12));
}

TEST_CASE("prefix consistency: G_k equals the from-scratch prefix signature") {
    std::mt19937_64 rng(3);
    auto s = random_series(2, 60, rng);
    auto grid = uniform_grid(s, 6);
    const int depth = 3;
    auto locals = local_signatures(s, grid, depth);
    auto globals = global_signatures(locals);
    CHECK(globals.size() == 6);

    // G_1 = local_1
    for (int k = 0; k <= depth; ++k) {
        auto a = globals[0].level(k);
        auto b = locals[0].level(k);
        for (std::size_t q = 0; q < a.size(); ++q) CHECK(a[q] == b[q]);
    }

    for (std::size_t k = 0; k < grid.num_windows(); ++k) {
        // signature over [t0, t_{k+1}] computed from scratch
        auto blk = slice_window(s, grid.boundaries[0], grid.boundaries[k + 1]);
        auto direct = path_signature(blk, depth);
        for (int lvl = 0; lvl <= depth; ++lvl) {
            auto a = globals[k].level(lvl);
            auto b = direct.level(lvl);
            for (std::size_t q = 0; q < a.size(); ++q) CHECK(std::abs(a[q] - b[q]) < 1e-10);
        }
    }
}

TEST_CASE("level rescaling multiplies level k by k!") {
    std::mt19937_64 rng(8);
    auto s = random_series(1, 20, rng);
    SigConfig raw_cfg;
    raw_cfg.depth = 3;
    raw_cfg.windows = 2;
    raw_cfg.view = SigView::local_only;
    raw_cfg.level_rescale = false;
    SigConfig scaled_cfg = raw_cfg;
    scaled_cfg.level_rescale = true;
    auto raw = multi_view_transform(s, raw_cfg);
    auto scaled = multi_view_transform(s, scaled_cfg);
    // d=1: token layout is [lvl1, lvl2, lvl3]
    for (std::size_t r = 0; r < raw.rows; ++r) {
        CHECK(scaled.row(r)[0] == doctest::Approx(raw.row(r)[0]));
        CHECK(scaled.row(r)[1] == doctest::Approx(2.0 * raw.row(r)[1]));
        CHECK(scaled.row(r)[2] == doctest::Approx(6.0 * raw.row(r)[2]));
    }
}

TEST_CASE("depth-4 local-only view (heart-rate configuration shape)") {
    std::mt19937_64 rng(44);
    auto s = random_series(2, 120, rng);
    SigConfig cfg;
    cfg.depth = 4;
    cfg.windows = 15;
    cfg.view = SigView::local_only;
    cfg.time_augment = true;  // (t, x0, x1) path
    auto tok = multi_view_transform(s, cfg);
    CHECK(tok.rows == 15);
    CHECK(tok.cols == 3 + 9 + 27 + 81);
    for (double v : tok.data) CHECK(std::isfinite(v));
}

TEST_CASE("batch_transform: parallel output identical to sequential") {
    std::mt19937_64 rng(21);
    std::vector<TimeSeries> batch;
    for (int i = 0; i < 24; ++i) batch.push_back(random_series(2, 50 + i, rng));
    SigConfig cfg;
    cfg.depth = 2;
    cfg.windows = 8;
    cfg.time_augment = true;
    auto seq = batch_transform(batch, cfg, 1);
    auto par = batch_transform(batch, cfg, 4);
    REQUIRE(seq.size() == par.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        REQUIRE(seq[i].data.size() == par[i].data.size());
        for (std::size_t q = 0; q < seq[i].data.size(); ++q) CHECK(seq[i].data[q] == par[i].data[q]);
    }

    // singleton batch equals the single-series transform bitwise
    std::vector<TimeSeries> one = {batch[0]};
    auto b1 = batch_transform(one, cfg, 4);
    auto direct = multi_view_transform(batch[0], cfg);
    CHECK(b1[0].data == direct.data);

    // heterogeneous dims rejected
    batch.push_back(random_series(3, 30, rng));
    CHECK_THROWS_AS(batch_transform(batch, cfg, 2), validation_error);
}

TEST_CASE("sampling-rate robustness: tokens barely move under a 50% drop") {
    // densely sampled sinusoids; dropping half the points must leave the
    // token matrix within a few percent in relative Frobenius norm
    SineConfig gen;
    gen.num_samples = 16;
    gen.num_classes = 8;
    gen.seq_len = 2000;
    gen.omega_min = 10.0;
    gen.omega_max = 100.0;
    gen.seed = 31;
    auto ds = gen_sine_dataset(gen);

    SigConfig cfg;
    cfg.depth = 2;
    cfg.windows = 32;
    cfg.view = SigView::multi_view;
    cfg.time_augment = true;
    double rel_sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < ds.series.size(); ++i) {
        auto full = multi_view_transform(ds.series[i], cfg);
        for (std::uint64_t draw = 0; draw < 3; ++draw) {
            auto rng = make_rng(77, i, draw);
            auto dropped_series = random_drop(ds.series[i], 0.5, rng);
            auto dropped = multi_view_transform(dropped_series, cfg);
            double num = 0.0, den = 0.0;
            for (std::size_t q = 0; q < full.data.size(); ++q) {
                const double d = full.data[q] - dropped.data[q];
                num += d * d;
                den += full.data[q] * full.data[q];
            }
            rel_sum += std::sqrt(num / den);
            ++count;
        }
    }
    const double mean_rel = rel_sum / count;
    INFO("mean relative Frobenius drift ", mean_rel);
    CHECK(mean_rel < 0.05);
}

TEST_CASE("length independence: token shape depends on config only") {
    std::mt19937_64 rng(5);
    SigConfig cfg;
    cfg.depth = 2;
    cfg.windows = 7;
    cfg.time_augment = true;
    auto a = multi_view_transform(random_series(1, 30, rng), cfg);
    auto b = multi_view_transform(random_series(1, 500, rng), cfg);
    CHECK(a.rows == b.rows);
    CHECK(a.cols == b.cols);
}
