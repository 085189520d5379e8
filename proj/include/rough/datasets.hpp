#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rough/parallel.hpp"
#include "rough/series.hpp"

namespace rough {

// ---------------------------------------------------------------------------
// Synthetic frequency-classification generator: amplitude-modulated sinusoids
// x(t) = g(t) sin(w t + phase) + noise, labelled by their frequency class.

struct SineConfig {
    int num_samples = 1000;
    int num_classes = 100;
    int seq_len = 2000;         // number of sample points per series
    double t_end = 6.0;         // time span [0, t_end]
    double omega_min = 10.0;
    double omega_max = 500.0;
    int channels = 1;
    double trend_amp = 0.5;     // cubic trend coefficients ~ U(-a, a)
    double noise_std = 0.05;    // additive per-step noise
    std::uint64_t seed = 42;

    void validate() const {
        require(num_samples >= 1, "sine: num_samples must be >= 1");
        require(num_classes >= 1 && num_classes <= num_samples, "sine: need 1 <= num_classes <= num_samples");
        require(seq_len >= 2, "sine: seq_len must be >= 2");
        require(t_end > 0.0, "sine: t_end must be positive");
        require(omega_min < omega_max || num_classes == 1, "sine: omega_min must be below omega_max");
        require(channels >= 1, "sine: channels must be >= 1");
        require(trend_amp >= 0.0 && noise_std >= 0.0, "sine: negative noise/trend scale");
    }

    double class_omega(int c) const {
        if (num_classes == 1) return omega_min;
        return omega_min + (omega_max - omega_min) * static_cast<double>(c) / (num_classes - 1);
    }
};

struct SplitIndices {
    std::vector<int> train, val, test;
};

struct LabeledDataset {
    std::vector<TimeSeries> series;
    SplitIndices split;

    std::vector<TimeSeries> subset(const std::vector<int>& idx) const {
        std::vector<TimeSeries> out;
        out.reserve(idx.size());
        for (int i : idx) out.push_back(series[static_cast<std::size_t>(i)]);
        return out;
    }
};

// 70/15/15 split by seeded shuffle; a pure function of (seed, n).
inline SplitIndices make_split(int n, std::uint64_t seed) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = make_rng(seed, 0x5e117u);
    for (int i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<int> pos(0, i);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pos(rng))]);
    }
    SplitIndices s;
    const int n_train = static_cast<int>(0.70 * n);
    const int n_val = static_cast<int>(0.15 * n);
    s.train.assign(idx.begin(), idx.begin() + n_train);
    s.val.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
    s.test.assign(idx.begin() + n_train + n_val, idx.end());
    return s;
}

// Sample i belongs to class i % num_classes, so classes are balanced to
// within one sample. Each sample draws from its own (seed, index)-derived rng
// stream; generation parallelises across samples with identical output for
// any worker count.
inline LabeledDataset gen_sine_dataset(const SineConfig& cfg, unsigned workers = 0) {
    cfg.validate();
    LabeledDataset ds;
    ds.series.resize(static_cast<std::size_t>(cfg.num_samples));
    parallel_for(static_cast<std::size_t>(cfg.num_samples), workers, [&](std::size_t i) {
        auto rng = make_rng(cfg.seed, 0xda7a5e7u, i);
        const int label = static_cast<int>(i) % cfg.num_classes;
        const double omega = cfg.class_omega(label);

        TimeSeries s;
        s.dim = cfg.channels;
        s.label = label;
        const std::size_t n = static_cast<std::size_t>(cfg.seq_len);
        s.timestamps.resize(n);
        for (std::size_t j = 0; j < n; ++j)
            s.timestamps[j] = cfg.t_end * static_cast<double>(j) / static_cast<double>(cfg.seq_len - 1);

        std::uniform_real_distribution<double> coef(-cfg.trend_amp, cfg.trend_amp);
        std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
        std::normal_distribution<double> noise(0.0, cfg.noise_std);
        s.values.resize(n * static_cast<std::size_t>(cfg.channels));
        for (int c = 0; c < cfg.channels; ++c) {
            // amplitude envelope g = 1 + cubic trend on normalised time, so
            // trend_amp = 0 leaves the pure tone
            const double a0 = coef(rng), a1 = coef(rng), a2 = coef(rng), a3 = coef(rng);
            const double phase = phase_dist(rng);
            for (std::size_t j = 0; j < n; ++j) {
                const double t = s.timestamps[j];
                const double u = t / cfg.t_end;
                const double envelope = 1.0 + a0 + u * (a1 + u * (a2 + u * a3));
                double x = envelope * std::sin(omega * t + phase);
                if (cfg.noise_std > 0.0) x += noise(rng);
                s.values[j * static_cast<std::size_t>(cfg.channels) + static_cast<std::size_t>(c)] = x;
            }
        }
        s.validate();
        ds.series[i] = std::move(s);
    });
    ds.split = make_split(cfg.num_samples, cfg.seed);
    return ds;
}

// ---------------------------------------------------------------------------
// CSV ingestion. Long format: one row per (series, step), grouped by a
// series-id column; targets either inline (same value repeated within the
// group) or in a separate id,label file.

struct CsvSchema {
    char delimiter = ',';
    bool has_header = true;
    int id_col = 0;
    int time_col = 1;               // -1: implicit index 0,1,2,...
    std::vector<int> value_cols;    // empty: every remaining column
    int target_col = -1;            // inline target; -1 means "labels file"
    bool sort_time = false;         // stable-sort rows by time instead of rejecting
    bool classification = true;     // labels are ints vs real regression targets
};

namespace detail {

inline double parse_number(const std::string& cell, std::size_t line_no) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = first + cell.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last)
        fail("csv: non-numeric cell '" + cell + "' on line " + std::to_string(line_no));
    return v;
}

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == delim) {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

}  // namespace detail

// Loads a long-format CSV into one TimeSeries per id group. Rows of a group
// must be contiguous or at least consistently ordered; groups are keyed by
// the id column's numeric value.
inline std::vector<TimeSeries> load_csv(const std::string& path, const CsvSchema& schema,
                                        const std::string& labels_path = "") {
    std::ifstream is(path);
    if (!is) fail("csv: cannot open " + path);

    struct Group {
        std::vector<double> times;
        std::vector<std::vector<double>> rows;
        double inline_target = 0.0;
        bool has_inline_target = false;
    };
    std::vector<long long> order;
    std::vector<Group> groups;
    std::unordered_map<long long, std::size_t> group_of;
    auto group_index = [&](long long id) -> std::size_t {
        auto [it, inserted] = group_of.try_emplace(id, groups.size());
        if (inserted) {
            order.push_back(id);
            groups.emplace_back();
        }
        return it->second;
    };

    std::string line;
    std::size_t line_no = 0;
    std::vector<int> value_cols = schema.value_cols;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (schema.has_header && line_no == 1) continue;
        auto cells = detail::split_line(line, schema.delimiter);
        const int ncols = static_cast<int>(cells.size());
        if (schema.id_col >= ncols) fail("csv: missing id column on line " + std::to_string(line_no));
        if (schema.time_col >= ncols) fail("csv: missing time column on line " + std::to_string(line_no));
        if (schema.target_col >= ncols) fail("csv: missing target column on line " + std::to_string(line_no));
        if (value_cols.empty()) {
            for (int c = 0; c < ncols; ++c)
                if (c != schema.id_col && c != schema.time_col && c != schema.target_col) value_cols.push_back(c);
            require(!value_cols.empty(), "csv: no value columns");
        }

        const long long id = static_cast<long long>(detail::parse_number(cells[static_cast<std::size_t>(schema.id_col)], line_no));
        Group& g = groups[group_index(id)];
        if (!g.rows.empty() && static_cast<int>(g.rows.back().size()) != static_cast<int>(value_cols.size()))
            fail("csv: ragged rows near line " + std::to_string(line_no));

        const double t = schema.time_col >= 0
                             ? detail::parse_number(cells[static_cast<std::size_t>(schema.time_col)], line_no)
                             : static_cast<double>(g.times.size());
        std::vector<double> row;
        row.reserve(value_cols.size());
        for (int c : value_cols) {
            if (c >= ncols) fail("csv: ragged rows on line " + std::to_string(line_no));
            row.push_back(detail::parse_number(cells[static_cast<std::size_t>(c)], line_no));
        }
        if (schema.target_col >= 0) {
            g.inline_target = detail::parse_number(cells[static_cast<std::size_t>(schema.target_col)], line_no);
            g.has_inline_target = true;
        }
        g.times.push_back(t);
        g.rows.push_back(std::move(row));
    }
    require(!groups.empty(), "csv: no data rows in " + path);

    // optional id,label file
    std::vector<std::pair<long long, double>> labels;
    if (!labels_path.empty()) {
        std::ifstream ls(labels_path);
        if (!ls) fail("csv: cannot open labels file " + labels_path);
        std::size_t lline = 0;
        while (std::getline(ls, line)) {
            ++lline;
            if (line.empty()) continue;
            if (schema.has_header && lline == 1) continue;
            auto cells = detail::split_line(line, schema.delimiter);
            if (cells.size() < 2) fail("csv: labels file needs id,label columns (line " + std::to_string(lline) + ")");
            labels.emplace_back(static_cast<long long>(detail::parse_number(cells[0], lline)),
                                detail::parse_number(cells[1], lline));
        }
    }
    if (schema.target_col < 0 && labels_path.empty())
        fail("csv: schema declares no inline target column and no labels file was given");

    std::vector<TimeSeries> out;
    out.reserve(groups.size());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        Group& g = groups[gi];
        const int dim = static_cast<int>(g.rows.front().size());
        std::vector<std::size_t> perm(g.times.size());
        std::iota(perm.begin(), perm.end(), 0);
        if (schema.sort_time)
            std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return g.times[a] < g.times[b]; });

        TimeSeries s;
        s.dim = dim;
        s.timestamps.reserve(g.times.size());
        s.values.reserve(g.times.size() * static_cast<std::size_t>(dim));
        for (std::size_t p : perm) {
            s.timestamps.push_back(g.times[p]);
            if (static_cast<int>(g.rows[p].size()) != dim) fail("csv: ragged rows in series " + std::to_string(order[gi]));
            s.values.insert(s.values.end(), g.rows[p].begin(), g.rows[p].end());
        }
        double target = 0.0;
        bool found = g.has_inline_target;
        if (found) target = g.inline_target;
        for (const auto& [id, lab] : labels)
            if (id == order[gi]) {
                target = lab;
                found = true;
            }
        if (!found) fail("csv: no target for series " + std::to_string(order[gi]));
        if (schema.classification)
            s.label = static_cast<int>(target);
        else
            s.target = target;
        s.validate();  // rejects non-monotone time when sort_time is off
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV export of a labelled dataset (data + labels + split manifest), the
// format `load_csv` reads back with the default schema. %.17g keeps doubles
// byte-exact across the round trip.

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline void save_series_csv(const std::string& path, const std::vector<TimeSeries>& series) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "series_id,time";
    const int dim = series.empty() ? 0 : series.front().dim;
    for (int c = 0; c < dim; ++c) os << ",v" << c;
    os << "\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        for (std::size_t j = 0; j < s.length(); ++j) {
            os << i << ',' << detail::fmt_double(s.timestamps[j]);
            auto p = s.point(j);
            for (double v : p) os << ',' << detail::fmt_double(v);
            os << "\n";
        }
    }
}

inline void save_labels_csv(const std::string& path, const std::vector<TimeSeries>& series) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "series_id,label\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        os << i << ',';
        if (series[i].label)
            os << *series[i].label;
        else
            os << detail::fmt_double(series[i].target.value_or(0.0));
        os << "\n";
    }
}

inline void save_split_csv(const std::string& path, const SplitIndices& split) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "series_id,split\n";
    for (int i : split.train) os << i << ",train\n";
    for (int i : split.val) os << i << ",val\n";
    for (int i : split.test) os << i << ",test\n";
}

inline SplitIndices load_split_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail("cannot open split manifest " + path);
    SplitIndices split;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line_no == 1) continue;
        auto cells = detail::split_line(line, ',');
        if (cells.size() != 2) fail("split manifest: bad row on line " + std::to_string(line_no));
        const int id = static_cast<int>(detail::parse_number(cells[0], line_no));
        if (cells[1] == "train")
            split.train.push_back(id);
        else if (cells[1] == "val")
            split.val.push_back(id);
        else if (cells[1] == "test")
            split.test.push_back(id);
        else
            fail("split manifest: unknown split '" + cells[1] + "'");
    }
    return split;
}

}  // namespace rough
