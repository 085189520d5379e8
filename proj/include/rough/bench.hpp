#pragma once

#include <sys/resource.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "rough/trainer.hpp"

namespace rough {

struct BenchRecord {
    std::string model;        // rformer | raw_transformer
    int seq_len = 0;          // raw input length L
    int tokens = 0;           // attention token count (Lbar for rformer, L for raw)
    int token_dim = 0;        // d-bar
    std::size_t param_count = 0;
    int epochs = 0;           // measured epochs (after 1 warmup)
    double epoch_mean = 0.0;  // seconds per epoch, forward+backward+update
    double epoch_std = 0.0;
    double sig_secs = 0.0;    // signature precompute, one full pass
    double total_mean = 0.0;  // epoch_mean plus per-epoch signature work
    double tokens_per_sec = 0.0;
    double peak_rss_mb = 0.0;  // process high-water mark at record time
    bool mem_available = false;
};

namespace detail {

inline double peak_rss_mb(bool& available) {
    rusage ru{};
    if (getrusage(RUSAGE_SELF, &ru) != 0) {
        available = false;
        return 0.0;
    }
    available = true;
    return static_cast<double>(ru.ru_maxrss) / 1024.0;  // Linux reports KB
}

}  // namespace detail

// Times training epochs (forward + backward + update over every batch) for
// one model kind on a freshly generated synthetic dataset. Dataset
// generation is excluded. Signature precomputation is timed separately and
// *also* folded into total_mean as if it ran every epoch, which is the
// conservative accounting for any speedup claim; with an active train drop
// the tokens really are rebuilt inside every epoch and the in-epoch rebuild
// cost is what total_mean reflects.
template <class T = float>
inline BenchRecord bench_epoch(ModelKind kind, const SineConfig& data_cfg, RunConfig cfg, int measured_epochs = 5) {
    require(measured_epochs >= 5, "bench: need at least 5 measured epochs");
    cfg.model_kind = kind;
    cfg.task = TaskKind::sine_classify;
    cfg.sine = data_cfg;
    cfg.epochs = 0;
    cfg.validate();

    auto ds = gen_sine_dataset(data_cfg, cfg.threads);
    ExperimentData data;
    data.train = std::move(ds.series);  // the whole set is the timing workload
    data.val = {data.train.front()};
    data.test = {};
    data.num_classes = data_cfg.num_classes;

    Runner<T> runner(cfg, data);

    BenchRecord rec;
    rec.model = to_string(kind);
    rec.seq_len = data_cfg.seq_len;
    rec.epochs = measured_epochs;
    rec.param_count = runner.model().param_count();

    using clock = std::chrono::steady_clock;
    const bool rebuild_per_epoch = cfg.train_drop > 0.0;

    // One full token build, timed: the rformer's signature precompute.
    const auto ts0 = clock::now();
    TokenSet<T> tokens = runner.build_tokens(data.train, cfg.train_drop, 0xbe9c4u, 0);
    rec.sig_secs = std::chrono::duration<double>(clock::now() - ts0).count();
    rec.tokens = tokens.x.front().rows;
    rec.token_dim = tokens.x.front().cols;

    std::vector<int> order(data.train.size());
    std::iota(order.begin(), order.end(), 0);

    auto run_epoch = [&](int epoch_no) {
        if (rebuild_per_epoch && epoch_no > 0)
            tokens = runner.build_tokens(data.train, cfg.train_drop, 0xbe9c4u, static_cast<std::uint64_t>(epoch_no));
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
            std::vector<int> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(stop));
            runner.train_step(tokens, batch);
        }
    };

    run_epoch(0);  // warmup, excluded
    std::vector<double> secs;
    for (int e = 1; e <= measured_epochs; ++e) {
        const auto t0 = clock::now();
        run_epoch(e);
        secs.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    }

    rec.epoch_mean = std::accumulate(secs.begin(), secs.end(), 0.0) / secs.size();
    double ss = 0.0;
    for (double s : secs) ss += (s - rec.epoch_mean) * (s - rec.epoch_mean);
    rec.epoch_std = std::sqrt(ss / (secs.size() - 1));
    rec.total_mean = rebuild_per_epoch ? rec.epoch_mean : rec.epoch_mean + rec.sig_secs;
    rec.tokens_per_sec = static_cast<double>(rec.tokens) * static_cast<double>(data.train.size()) / rec.epoch_mean;
    rec.peak_rss_mb = detail::peak_rss_mb(rec.mem_available);
    return rec;
}

enum class ReportFormat { csv, json, markdown };

inline ReportFormat report_format_from_string(const std::string& s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    if (s == "markdown" || s == "md") return ReportFormat::markdown;
    fail("unknown report format '" + s + "' (expected csv | json | markdown)");
}

inline void emit_report(const std::vector<BenchRecord>& records, ReportFormat format, std::ostream& os) {
    require(!records.empty(), "emit_report: no records");
    switch (format) {
        case ReportFormat::csv: {
            os << "model,seq_len,tokens,token_dim,params,epochs,epoch_mean_s,epoch_std_s,sig_s,total_mean_s,"
                  "tokens_per_sec,peak_rss_mb,mem_available\n";
            for (const auto& r : records)
                os << r.model << ',' << r.seq_len << ',' << r.tokens << ',' << r.token_dim << ',' << r.param_count
                   << ',' << r.epochs << ',' << detail::fmt_double(r.epoch_mean) << ','
                   << detail::fmt_double(r.epoch_std) << ',' << detail::fmt_double(r.sig_secs) << ','
                   << detail::fmt_double(r.total_mean) << ',' << detail::fmt_double(r.tokens_per_sec) << ','
                   << detail::fmt_double(r.peak_rss_mb) << ',' << (r.mem_available ? "true" : "false") << "\n";
            break;
        }
        case ReportFormat::json: {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& r : records) {
                arr.push_back({{"model", r.model},
                               {"seq_len", r.seq_len},
                               {"tokens", r.tokens},
                               {"token_dim", r.token_dim},
                               {"params", r.param_count},
                               {"epochs", r.epochs},
                               {"epoch_mean_s", r.epoch_mean},
                               {"epoch_std_s", r.epoch_std},
                               {"sig_s", r.sig_secs},
                               {"total_mean_s", r.total_mean},
                               {"tokens_per_sec", r.tokens_per_sec},
                               {"peak_rss_mb", r.peak_rss_mb},
                               {"mem_available", r.mem_available}});
            }
            os << arr.dump(2) << "\n";
            break;
        }
        case ReportFormat::markdown: {
            os << "| model | L | tokens | s/epoch | std | total s/epoch | speedup |\n";
            os << "|---|---|---|---|---|---|---|\n";
            // speedup column: raw total over rformer total at matching L
            for (const auto& r : records) {
                double speedup = 0.0;
                if (r.model == "rformer") {
                    for (const auto& other : records)
                        if (other.model == "raw_transformer" && other.seq_len == r.seq_len)
                            speedup = other.total_mean / r.total_mean;
                }
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.2fx", speedup);
                os << "| " << r.model << " | " << r.seq_len << " | " << r.tokens << " | "
                   << detail::fmt_double(r.epoch_mean) << " | " << detail::fmt_double(r.epoch_std) << " | "
                   << detail::fmt_double(r.total_mean) << " | " << (speedup > 0.0 ? buf : "-") << " |\n";
            }
            break;
        }
    }
}

inline void emit_report(const std::vector<BenchRecord>& records, ReportFormat format, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write report to " + path);
    emit_report(records, format, os);
}

}  // namespace rough
