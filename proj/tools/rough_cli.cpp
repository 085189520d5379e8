// Command-line front end: dataset generation, signature-token export,
// training, evaluation, gradient checking and the scaling benchmark.
// Exit codes: 0 success, 1 validation error, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rough/bench.hpp"
#include "rough/config.hpp"
#include "rough/datasets.hpp"
#include "rough/multiview.hpp"
#include "rough/nn/gradcheck.hpp"
#include "rough/trainer.hpp"

namespace fs = std::filesystem;
using namespace rough;

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;

    RunConfig load() const {
        RunConfig cfg = load_config(config_path, overrides);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        cfg.validate();
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "Config file (INI-style sections)")
        ->check(CLI::ExistingFile);
    cmd->add_option("-s,--set", args.overrides, "Override a config key, e.g. --set model.d_model=64");
    cmd->add_option("-o,--out", args.out_dir, "Output directory (overrides io.out_dir)");
}

void echo_config(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    save_config(cfg, (fs::path(cfg.out_dir) / "effective_config.ini").string());
}

// Dataset on disk: data.csv + labels.csv + splits.csv as written by `gen`.
LabeledDataset load_dataset_dir(const RunConfig& cfg, const std::string& data_dir) {
    LabeledDataset ds;
    if (cfg.task == TaskKind::sine_classify) {
        require(!data_dir.empty(), "train/eval on the sine task needs --data pointing at a `gen` output directory");
        CsvSchema schema;
        schema.classification = true;
        ds.series = load_csv((fs::path(data_dir) / "data.csv").string(), schema,
                             (fs::path(data_dir) / "labels.csv").string());
        ds.split = load_split_csv((fs::path(data_dir) / "splits.csv").string());
    } else {
        CsvSchema schema = cfg.csv;
        schema.classification = cfg.task == TaskKind::csv_classify;
        ds.series = load_csv(cfg.data_csv, schema, cfg.labels_csv);
        ds.split = cfg.split_csv.empty() ? make_split(static_cast<int>(ds.series.size()), cfg.seed)
                                         : load_split_csv(cfg.split_csv);
    }
    return ds;
}

int cmd_gen(const CommonArgs& common) {
    RunConfig cfg = common.load();
    require(cfg.task == TaskKind::sine_classify, "gen: only the sine-classify task generates data");
    auto ds = gen_sine_dataset(cfg.sine, cfg.threads);
    fs::create_directories(cfg.out_dir);
    save_series_csv((fs::path(cfg.out_dir) / "data.csv").string(), ds.series);
    save_labels_csv((fs::path(cfg.out_dir) / "labels.csv").string(), ds.series);
    save_split_csv((fs::path(cfg.out_dir) / "splits.csv").string(), ds.split);
    echo_config(cfg);
    std::cout << "wrote " << ds.series.size() << " series (" << cfg.sine.num_classes << " classes, "
              << cfg.sine.seq_len << " steps) to " << cfg.out_dir << "\n";
    return 0;
}

int cmd_sig(const CommonArgs& common, const std::string& data_dir, const std::string& format) {
    RunConfig cfg = common.load();
    auto ds = load_dataset_dir(cfg, data_dir);
    auto tokens = batch_transform(ds.series, cfg.sig, cfg.threads);
    fs::create_directories(cfg.out_dir);
    if (format == "csv") {
        const auto path = fs::path(cfg.out_dir) / "tokens.csv";
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot write " + path.string());
        os << "series_id,token";
        for (std::size_t c = 0; c < tokens.front().cols; ++c) os << ",f" << c;
        os << "\n";
        for (std::size_t i = 0; i < tokens.size(); ++i)
            for (std::size_t r = 0; r < tokens[i].rows; ++r) {
                os << i << ',' << r;
                for (std::size_t c = 0; c < tokens[i].cols; ++c)
                    os << ',' << detail::fmt_double(tokens[i].row(r)[c]);
                os << "\n";
            }
        std::cout << "wrote " << path.string() << "\n";
    } else if (format == "bin") {
        // flat binary: magic, u32 version, u32 n_series, u32 rows, u32 cols,
        // then per series rows*cols float64 little-endian
        const auto path = fs::path(cfg.out_dir) / "tokens.bin";
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + path.string());
        os.write("RSIGTOKS", 8);
        auto w32 = [&](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
        w32(1u);
        w32(static_cast<std::uint32_t>(tokens.size()));
        w32(static_cast<std::uint32_t>(tokens.front().rows));
        w32(static_cast<std::uint32_t>(tokens.front().cols));
        for (const auto& t : tokens)
            os.write(reinterpret_cast<const char*>(t.data.data()),
                     static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        std::cout << "wrote " << path.string() << "\n";
    } else {
        fail("sig: unknown format '" + format + "' (expected csv | bin)");
    }
    return 0;
}

template <class T>
int run_train(const RunConfig& cfg, const std::string& data_dir) {
    auto ds = load_dataset_dir(cfg, data_dir);
    auto data = make_experiment_data(ds, cfg.task != TaskKind::csv_regress);
    Runner<T> runner(cfg, data);
    std::cout << to_string(cfg.model_kind) << ": " << runner.model().param_count() << " parameters, "
              << data.train.size() << " train / " << data.val.size() << " val / " << data.test.size()
              << " test series\n";
    auto result = runner.train();
    fs::create_directories(cfg.out_dir);
    write_metrics_csv((fs::path(cfg.out_dir) / "metrics.csv").string(), result.log);
    runner.save_checkpoint_file((fs::path(cfg.out_dir) / "best.ckpt").string());
    echo_config(cfg);
    const char* metric_name = cfg.task == TaskKind::csv_regress ? "rmse" : "accuracy";
    std::cout << "best val " << metric_name << " " << result.best_val_metric << " at epoch " << result.best_epoch
              << "\n";
    if (!data.test.empty()) {
        auto test_full = runner.evaluate_split(data.test, 0.0, 1);
        std::cout << "test " << metric_name << " (full) " << test_full.mean << "\n";
        if (cfg.eval_drop > 0.0) {
            auto test_drop = runner.evaluate_split(data.test, cfg.eval_drop, cfg.eval_draws);
            std::cout << "test " << metric_name << " (drop " << cfg.eval_drop << ") " << test_drop.mean << " +- "
                      << test_drop.stddev << "\n";
        }
    }
    return 0;
}

int cmd_train(const CommonArgs& common, const std::string& data_dir) {
    RunConfig cfg = common.load();
    if (cfg.precision == "f64") return run_train<double>(cfg, data_dir);
    return run_train<float>(cfg, data_dir);
}

template <class T>
int run_eval(const RunConfig& cfg, const std::string& data_dir, const std::string& ckpt, const std::string& split_name,
             double drop, int draws) {
    auto ds = load_dataset_dir(cfg, data_dir);
    auto data = make_experiment_data(ds, cfg.task != TaskKind::csv_regress);
    Runner<T> runner(cfg, data);
    runner.load_checkpoint_file(ckpt);
    const std::vector<TimeSeries>* split = &data.test;
    if (split_name == "train")
        split = &data.train;
    else if (split_name == "val")
        split = &data.val;
    else
        require(split_name == "test", "eval: --split must be train | val | test");
    auto res = runner.evaluate_split(*split, drop, draws);
    const char* metric_name = cfg.task == TaskKind::csv_regress ? "rmse" : "accuracy";
    std::cout << split_name << " " << metric_name << " (drop " << drop << ", " << res.draws << " draw"
              << (res.draws == 1 ? "" : "s") << "): " << res.mean;
    if (res.draws > 1) std::cout << " +- " << res.stddev;
    std::cout << "\n";
    return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& data_dir, const std::string& ckpt,
             const std::string& split_name, double drop, int draws) {
    RunConfig cfg = common.load();
    require(drop >= 0.0 && drop < 1.0, "eval: --drop must be in [0, 1)");
    require(draws >= 1, "eval: --draws must be >= 1");
    if (cfg.precision == "f64") return run_eval<double>(cfg, data_dir, ckpt, split_name, drop, draws);
    return run_eval<float>(cfg, data_dir, ckpt, split_name, drop, draws);
}

// Toy-scale finite-difference check of the full model; always 64-bit
// regardless of the configured training precision.
int cmd_gradcheck(const CommonArgs& common, bool inject_bug) {
    RunConfig cfg = common.load();
    nn::ModelConfig mc;
    mc.input_dim = 6;
    mc.d_model = cfg.d_model;
    mc.heads = cfg.heads;
    mc.blocks = cfg.blocks;
    mc.ffn_hidden = cfg.ffn_hidden;
    mc.out_dim = 3;
    mc.positional = cfg.positional;
    mc.pos_rows = 4;
    require(mc.d_model <= 64 && mc.ffn_hidden <= 256, "gradcheck: keep the model at toy scale (d_model <= 64)");

    auto rng = make_rng(cfg.seed, 0x9cadu);
    nn::Transformer<double> model;
    model.init(mc, rng);
    nn::Tensor2<double> tokens(4, 6);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : tokens.data) v = u(rng);
    const int label = 1;

    auto loss_fwd = [&] {
        nn::Tensor2<double> d;
        auto lg = model.forward(tokens);
        return nn::cross_entropy(lg, label, d);
    };
    model.zero_grad();
    nn::Tensor2<double> dlogits;
    auto logits = model.forward(tokens);
    nn::cross_entropy(logits, label, dlogits);
    model.backward(dlogits);
    if (inject_bug) model.params()[2]->g.data[0] += 0.05;  // negative control

    auto res = nn::grad_check(model.params(), loss_fwd);
    std::printf("gradcheck: max relative error %.3e (worst %s[%zu], analytic %.6e vs numeric %.6e)\n",
                res.max_rel_err, res.worst_param.c_str(), res.worst_index, res.analytic, res.numeric);
    if (res.max_rel_err < 1e-4) return 0;
    std::cerr << "gradcheck failed: relative error above 1e-4\n";
    return 1;
}

int cmd_bench(const CommonArgs& common, std::vector<int> lengths, std::vector<std::string> kinds,
              const std::string& format, const std::string& report_path, int epochs) {
    RunConfig cfg = common.load();
    if (lengths.empty()) lengths = {1000, 2000, 4000};
    if (kinds.empty()) kinds = {"rformer", "raw_transformer"};
    std::vector<BenchRecord> records;
    int failed = 0;
    for (int L : lengths) {
        SineConfig data_cfg = cfg.sine;
        data_cfg.seq_len = L;
        for (const auto& kind : kinds) {
            try {
                auto rec = bench_epoch<float>(model_kind_from_string(kind), data_cfg, cfg, epochs);
                std::cout << rec.model << " L=" << rec.seq_len << ": " << rec.epoch_mean << " s/epoch (std "
                          << rec.epoch_std << "), total " << rec.total_mean << " s/epoch, tokens/s "
                          << static_cast<long long>(rec.tokens_per_sec) << "\n";
                records.push_back(rec);
            } catch (const std::bad_alloc&) {
                // out of memory is a recorded failure for this configuration
                std::cout << kind << " L=" << L << ": FAILED (out of memory)\n";
                ++failed;
            }
        }
    }
    if (records.empty()) {
        std::cerr << "bench: every configuration failed\n";
        return 2;
    }
    const ReportFormat fmt = report_format_from_string(format);
    if (report_path.empty()) {
        emit_report(records, fmt, std::cout);
    } else {
        emit_report(records, fmt, report_path);
        std::cout << "wrote " << report_path << "\n";
    }
    if (failed > 0) std::cout << failed << " configuration(s) recorded as failed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rough: multi-view signature transformer pipeline"};
    app.require_subcommand(1);

    CommonArgs gen_args, sig_args, train_args, eval_args, grad_args, bench_args;
    std::string data_dir, sig_format = "csv", ckpt_path, split_name = "test";
    double eval_drop = 0.0;
    int eval_draws = 5;
    bool inject_bug = false;
    std::vector<int> bench_lengths;
    std::vector<std::string> bench_kinds;
    std::string bench_format = "csv", bench_out;
    int bench_epochs = 5;

    auto* gen = app.add_subcommand("gen", "Generate the synthetic frequency-classification dataset");
    add_common(gen, gen_args);

    auto* sig = app.add_subcommand("sig", "Export multi-view signature tokens for a dataset");
    add_common(sig, sig_args);
    sig->add_option("-d,--data", data_dir, "Dataset directory produced by `gen` (sine task)");
    sig->add_option("-f,--format", sig_format, "Dump format: csv | bin");

    auto* train = app.add_subcommand("train", "Train a model and save the best-validation checkpoint");
    add_common(train, train_args);
    train->add_option("-d,--data", data_dir, "Dataset directory produced by `gen` (sine task)");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint at a given drop fraction");
    add_common(eval, eval_args);
    eval->add_option("-d,--data", data_dir, "Dataset directory produced by `gen` (sine task)");
    eval->add_option("-k,--checkpoint", ckpt_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
    eval->add_option("--split", split_name, "Split to evaluate: train | val | test");
    eval->add_option("--drop", eval_drop, "Fraction of points to drop before tokenising");
    eval->add_option("--draws", eval_draws, "Number of seeded drop draws to average");

    auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of the full model (64-bit)");
    add_common(grad, grad_args);
    grad->add_flag("--inject-grad-bug", inject_bug)->group("");  // test hook

    auto* bench = app.add_subcommand("bench", "Epoch-time scaling benchmark: rformer vs raw attention");
    add_common(bench, bench_args);
    bench->add_option("-L,--lengths", bench_lengths, "Sequence lengths to benchmark");
    bench->add_option("--kinds", bench_kinds, "Model kinds: rformer raw_transformer");
    bench->add_option("-f,--format", bench_format, "Report format: csv | json | markdown");
    bench->add_option("--report", bench_out, "Write the report to this file instead of stdout");
    bench->add_option("--epochs", bench_epochs, "Measured epochs per configuration (after 1 warmup)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // --help/--version exit 0, bad usage exits 1
    }

    try {
        if (gen->parsed()) return cmd_gen(gen_args);
        if (sig->parsed()) return cmd_sig(sig_args, data_dir, sig_format);
        if (train->parsed()) return cmd_train(train_args, data_dir);
        if (eval->parsed()) return cmd_eval(eval_args, data_dir, ckpt_path, split_name, eval_drop, eval_draws);
        if (grad->parsed()) return cmd_gradcheck(grad_args, inject_bug);
        if (bench->parsed())
            return cmd_bench(bench_args, bench_lengths, bench_kinds, bench_format, bench_out, bench_epochs);
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
