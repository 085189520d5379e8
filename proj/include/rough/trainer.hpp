#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "rough/config.hpp"
#include "rough/multiview.hpp"
#include "rough/nn/adam.hpp"
#include "rough/nn/checkpoint.hpp"
#include "rough/nn/model.hpp"
#include "rough/parallel.hpp"

namespace rough {

struct ExperimentData {
    std::vector<TimeSeries> train, val, test;
    int num_classes = 0;  // 0 for regression
};

// Splits the loaded/generated dataset and derives the label range.
inline ExperimentData make_experiment_data(const LabeledDataset& ds, bool classification) {
    ExperimentData out;
    out.train = ds.subset(ds.split.train);
    out.val = ds.subset(ds.split.val);
    out.test = ds.subset(ds.split.test);
    if (classification) {
        int max_label = -1;
        for (const auto& s : ds.series) {
            require(s.label.has_value(), "dataset: classification series without a label");
            max_label = std::max(max_label, *s.label);
        }
        out.num_classes = max_label + 1;
        require(out.num_classes >= 2, "dataset: need at least 2 classes");
    } else {
        for (const auto& s : ds.series) require(s.target.has_value(), "dataset: regression series without a target");
    }
    return out;
}

template <class T>
struct TokenSet {
    std::vector<nn::Tensor2<T>> x;
    std::vector<int> labels;
    std::vector<T> targets;
    bool classification = true;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_metric = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    double best_val_metric = 0.0;
    int best_epoch = 0;
};

struct EvalResult {
    double mean = 0.0;
    double stddev = 0.0;
    int draws = 1;
};

namespace detail {

// Salts for derived rng streams, one per purpose.
inline constexpr std::uint64_t kSaltTrainDrop = 0x7d21u;
inline constexpr std::uint64_t kSaltEvalDrop = 0xe7a1u;
inline constexpr std::uint64_t kSaltShuffle = 0x5f1eu;
inline constexpr std::uint64_t kSaltInit = 0x1217u;

}  // namespace detail

// Binds one config to one dataset: builds tokens for either model kind,
// trains with per-epoch drop resampling, evaluates at any drop fraction.
// The encoder trunk is identical for both kinds; rformer feeds multi-view
// signature tokens, raw_transformer feeds the samples themselves.
template <class T>
class Runner {
public:
    Runner(RunConfig cfg, ExperimentData data) : cfg_(std::move(cfg)), data_(std::move(data)) {
        cfg_.validate();
        require(!data_.train.empty(), "experiment: empty training split");
        series_dim_ = data_.train.front().dim;
        full_len_ = static_cast<int>(data_.train.front().length());
        for (const auto* split : {&data_.train, &data_.val, &data_.test})
            for (const auto& s : *split) {
                require(s.dim == series_dim_, "experiment: heterogeneous series dimensions");
                full_len_ = std::max(full_len_, static_cast<int>(s.length()));
            }

        nn::ModelConfig mc;
        mc.input_dim = input_dim();
        mc.d_model = cfg_.d_model;
        mc.heads = cfg_.heads;
        mc.blocks = cfg_.blocks;
        mc.ffn_hidden = cfg_.ffn_hidden;
        mc.out_dim = classification() ? data_.num_classes : 1;
        mc.positional = cfg_.positional;
        mc.pos_rows = cfg_.model_kind == ModelKind::rformer ? cfg_.sig.windows : full_len_;
        auto rng = make_rng(cfg_.seed, detail::kSaltInit);
        model_.init(mc, rng);

        nn::AdamConfig ac{cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.adam_eps};
        opt_.init(model_.params(), ac);

        workers_ = effective_workers(cfg_.threads);
        replicas_.assign(workers_ > 1 ? workers_ : 0, model_);

        if (cfg_.standardize) fit_normalizer();
    }

    bool classification() const { return data_.num_classes > 0; }

    int input_dim() const {
        if (cfg_.model_kind == ModelKind::rformer) {
            const int d = series_dim_ + (cfg_.sig.time_augment ? 1 : 0);
            return static_cast<int>(cfg_.sig.token_width(d));
        }
        return series_dim_;
    }

    nn::Transformer<T>& model() { return model_; }
    const RunConfig& config() const { return cfg_; }

    // Tokens for one split at a given drop fraction. Drop draws are keyed by
    // (seed, salt, draw, series index), so they are reproducible and
    // independent across series.
    TokenSet<T> build_tokens(const std::vector<TimeSeries>& split, double drop_fraction, std::uint64_t salt,
                             std::uint64_t draw) const {
        TokenSet<T> out;
        out.classification = classification();
        out.x.resize(split.size());
        out.labels.resize(split.size(), 0);
        out.targets.resize(split.size(), T(0));
        parallel_for(split.size(), workers_, [&](std::size_t i) {
            const TimeSeries* s = &split[i];
            TimeSeries dropped;
            if (drop_fraction > 0.0) {
                auto rng = make_rng(cfg_.seed, salt, draw, i);
                dropped = random_drop(*s, 1.0 - drop_fraction, rng);
                s = &dropped;
            }
            if (cfg_.model_kind == ModelKind::rformer) {
                MultiViewTokens tok = multi_view_transform(*s, cfg_.sig, 1);
                nn::Tensor2<T> x(static_cast<int>(tok.rows), static_cast<int>(tok.cols));
                for (std::size_t q = 0; q < tok.data.size(); ++q) x.data[q] = static_cast<T>(tok.data[q]);
                out.x[i] = std::move(x);
            } else {
                nn::Tensor2<T> x(static_cast<int>(s->length()), s->dim);
                for (std::size_t q = 0; q < s->values.size(); ++q) x.data[q] = static_cast<T>(s->values[q]);
                out.x[i] = std::move(x);
            }
            if (out.classification)
                out.labels[i] = split[i].label.value();
            else
                out.targets[i] = static_cast<T>(split[i].target.value());
        });
        if (!feat_mean_.empty()) {
            parallel_for(out.x.size(), workers_, [&](std::size_t i) {
                auto& x = out.x[i];
                for (int r = 0; r < x.rows; ++r) {
                    T* row = x.row(r);
                    for (int c = 0; c < x.cols; ++c)
                        row[c] = (row[c] - feat_mean_[static_cast<std::size_t>(c)]) *
                                 feat_inv_std_[static_cast<std::size_t>(c)];
                }
            });
        }
        return out;
    }

    // One optimisation pass over the batch: per-worker parameter replicas
    // accumulate gradients over fixed index blocks, merged in worker order,
    // then a single Adam step on the master. Output depends on the worker
    // count only through float summation order.
    double train_step(const TokenSet<T>& tokens, const std::vector<int>& batch_idx) {
        const T inv_b = T(1) / static_cast<T>(batch_idx.size());
        double loss_sum = 0.0;
        model_.zero_grad();
        if (workers_ <= 1 || batch_idx.size() == 1) {
            for (int i : batch_idx) loss_sum += sample_pass(model_, tokens, i, inv_b);
        } else {
            std::vector<double> worker_loss(workers_, 0.0);
            for (auto& r : replicas_) {
                r.copy_params_from(model_);
                r.zero_grad();
            }
            parallel_chunks(batch_idx.size(), workers_, [&](unsigned w, std::size_t lo, std::size_t hi) {
                for (std::size_t q = lo; q < hi; ++q)
                    worker_loss[w] += sample_pass(replicas_[w], tokens, batch_idx[q], inv_b);
            });
            auto master_params = model_.params();
            for (unsigned w = 0; w < static_cast<unsigned>(replicas_.size()); ++w) {
                auto rep_params = replicas_[w].params();
                for (std::size_t p = 0; p < master_params.size(); ++p)
                    master_params[p]->g.add_(rep_params[p]->g);
                loss_sum += worker_loss[w];
            }
        }
        opt_.step(model_.params());
        return loss_sum / static_cast<double>(batch_idx.size());
    }

    // Accuracy for classification, RMSE for regression.
    double evaluate_tokens(const TokenSet<T>& tokens) {
        const std::size_t n = tokens.x.size();
        require(n > 0, "evaluate: empty token set");
        std::vector<double> per_sample(n, 0.0);
        if (workers_ <= 1) {
            for (std::size_t i = 0; i < n; ++i) per_sample[i] = eval_sample(model_, tokens, i);
        } else {
            for (auto& r : replicas_) r.copy_params_from(model_);
            parallel_chunks(n, workers_, [&](unsigned w, std::size_t lo, std::size_t hi) {
                for (std::size_t i = lo; i < hi; ++i) per_sample[i] = eval_sample(replicas_[w], tokens, i);
            });
        }
        double sum = 0.0;
        for (double v : per_sample) sum += v;
        if (tokens.classification) return sum / static_cast<double>(n);  // accuracy
        return std::sqrt(sum / static_cast<double>(n));                  // rmse
    }

    EvalResult evaluate_split(const std::vector<TimeSeries>& split, double drop_fraction, int draws) {
        require(!split.empty(), "evaluate: empty split");
        if (drop_fraction <= 0.0) draws = 1;
        std::vector<double> metrics;
        for (int r = 0; r < draws; ++r) {
            auto tokens = build_tokens(split, drop_fraction, detail::kSaltEvalDrop, static_cast<std::uint64_t>(r));
            metrics.push_back(evaluate_tokens(tokens));
        }
        EvalResult res;
        res.draws = draws;
        for (double m : metrics) res.mean += m;
        res.mean /= draws;
        if (draws > 1) {
            double ss = 0.0;
            for (double m : metrics) ss += (m - res.mean) * (m - res.mean);
            res.stddev = std::sqrt(ss / (draws - 1));
        }
        return res;
    }

    // Full training loop: per-epoch drop resampling (tokens cached when the
    // train drop is off), seeded shuffling, best-validation snapshot.
    TrainResult train() {
        TrainResult result;
        const bool maximize = classification();
        result.best_val_metric = maximize ? -1.0 : std::numeric_limits<double>::infinity();

        TokenSet<T> cached_train;
        bool have_cached = false;
        TokenSet<T> val_tokens = build_tokens(data_.val, 0.0, detail::kSaltEvalDrop, 0);

        std::vector<int> order(data_.train.size());
        std::iota(order.begin(), order.end(), 0);

        snapshot_best();  // epoch-0 params are the fallback when epochs == 0
        for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
            const auto t0 = std::chrono::steady_clock::now();
            const TokenSet<T>* train_tokens = nullptr;
            TokenSet<T> fresh;
            if (cfg_.train_drop > 0.0) {
                fresh = build_tokens(data_.train, cfg_.train_drop, detail::kSaltTrainDrop,
                                     static_cast<std::uint64_t>(epoch));
                train_tokens = &fresh;
            } else {
                if (!have_cached) {
                    cached_train = build_tokens(data_.train, 0.0, detail::kSaltTrainDrop, 0);
                    have_cached = true;
                }
                train_tokens = &cached_train;
            }

            auto rng = make_rng(cfg_.seed, detail::kSaltShuffle, static_cast<std::uint64_t>(epoch));
            for (std::size_t i = order.size(); i > 1; --i) {
                std::uniform_int_distribution<std::size_t> pos(0, i - 1);
                std::swap(order[i - 1], order[pos(rng)]);
            }

            double loss_acc = 0.0;
            int batches = 0;
            for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg_.batch)) {
                const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg_.batch));
                std::vector<int> batch_idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(stop));
                loss_acc += train_step(*train_tokens, batch_idx);
                ++batches;
            }

            const double val_metric = evaluate_tokens(val_tokens);
            const auto t1 = std::chrono::steady_clock::now();
            EpochLog row;
            row.epoch = epoch;
            row.train_loss = loss_acc / std::max(1, batches);
            row.val_metric = val_metric;
            row.seconds = std::chrono::duration<double>(t1 - t0).count();
            result.log.push_back(row);

            const bool improved = maximize ? val_metric > result.best_val_metric : val_metric < result.best_val_metric;
            if (improved) {
                result.best_val_metric = val_metric;
                result.best_epoch = epoch;
                snapshot_best();
            }
        }
        restore_best();
        if (cfg_.epochs == 0) result.best_val_metric = evaluate_tokens(val_tokens);
        return result;
    }

    void save_checkpoint_file(const std::string& path) { nn::save_checkpoint(path, model_.params()); }
    void load_checkpoint_file(const std::string& path) { nn::load_checkpoint(path, model_.params()); }

private:
    double sample_pass(nn::Transformer<T>& net, const TokenSet<T>& tokens, int i, T loss_scale) {
        auto logits = net.forward(tokens.x[static_cast<std::size_t>(i)]);
        nn::Tensor2<T> dlogits;
        T loss;
        if (tokens.classification)
            loss = nn::cross_entropy(logits, tokens.labels[static_cast<std::size_t>(i)], dlogits);
        else
            loss = nn::squared_error(logits, tokens.targets[static_cast<std::size_t>(i)], dlogits);
        for (auto& v : dlogits.data) v *= loss_scale;
        net.backward(dlogits);
        return static_cast<double>(loss);
    }

    // classification: 1/0 correctness; regression: squared error
    double eval_sample(nn::Transformer<T>& net, const TokenSet<T>& tokens, std::size_t i) {
        auto out = net.forward(tokens.x[i]);
        if (tokens.classification) {
            int argmax = 0;
            for (int j = 1; j < out.cols; ++j)
                if (out.at(0, j) > out.at(0, argmax)) argmax = j;
            return argmax == tokens.labels[i] ? 1.0 : 0.0;
        }
        const double diff = static_cast<double>(out.at(0, 0)) - static_cast<double>(tokens.targets[i]);
        return diff * diff;
    }

    // Per-feature mean and 1/std over every token row of the (undropped)
    // train split. Constant features get inv_std 0 and are zeroed out. The
    // normaliser is a pure function of (config, train split), so eval runs
    // reconstruct it instead of storing it in checkpoints.
    void fit_normalizer() {
        auto raw = build_tokens(data_.train, 0.0, detail::kSaltTrainDrop, 0);  // feat_ vectors still empty here
        const int dim = raw.x.front().cols;
        std::vector<double> mean(static_cast<std::size_t>(dim), 0.0), var(static_cast<std::size_t>(dim), 0.0);
        std::size_t rows = 0;
        for (const auto& x : raw.x) {
            for (int r = 0; r < x.rows; ++r) {
                const T* row = x.row(r);
                for (int c = 0; c < dim; ++c) mean[static_cast<std::size_t>(c)] += static_cast<double>(row[c]);
            }
            rows += static_cast<std::size_t>(x.rows);
        }
        for (auto& m : mean) m /= static_cast<double>(rows);
        for (const auto& x : raw.x)
            for (int r = 0; r < x.rows; ++r) {
                const T* row = x.row(r);
                for (int c = 0; c < dim; ++c) {
                    const double d = static_cast<double>(row[c]) - mean[static_cast<std::size_t>(c)];
                    var[static_cast<std::size_t>(c)] += d * d;
                }
            }
        feat_mean_.resize(static_cast<std::size_t>(dim));
        feat_inv_std_.resize(static_cast<std::size_t>(dim));
        for (int c = 0; c < dim; ++c) {
            const double sd = std::sqrt(var[static_cast<std::size_t>(c)] / static_cast<double>(rows));
            feat_mean_[static_cast<std::size_t>(c)] = static_cast<T>(mean[static_cast<std::size_t>(c)]);
            feat_inv_std_[static_cast<std::size_t>(c)] = sd > 1e-12 ? static_cast<T>(1.0 / sd) : T(0);
        }
    }

    void snapshot_best() {
        best_values_.clear();
        for (auto* p : model_.params()) best_values_.push_back(p->w);
    }
    void restore_best() {
        auto ps = model_.params();
        require(best_values_.size() == ps.size(), "trainer: snapshot out of sync");
        for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->w = best_values_[i];
    }

    RunConfig cfg_;
    ExperimentData data_;
    int series_dim_ = 1;
    int full_len_ = 2;
    unsigned workers_ = 1;
    nn::Transformer<T> model_;
    std::vector<nn::Transformer<T>> replicas_;
    nn::Adam<T> opt_;
    std::vector<nn::Tensor2<T>> best_values_;
    std::vector<T> feat_mean_, feat_inv_std_;
};

inline void write_metrics_csv(const std::string& path, const std::vector<EpochLog>& log) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write metrics log " + path);
    os << "epoch,train_loss,val_metric,seconds\n";
    for (const auto& row : log)
        os << row.epoch << ',' << detail::fmt_double(row.train_loss) << ',' << detail::fmt_double(row.val_metric)
           << ',' << detail::fmt_double(row.seconds) << "\n";
}

}  // namespace rough
