#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rough/datasets.hpp"
#include "rough/multiview.hpp"

namespace rough {

enum class TaskKind { sine_classify, csv_classify, csv_regress };
enum class ModelKind { rformer, raw_transformer };

inline const char* to_string(TaskKind t) {
    switch (t) {
        case TaskKind::sine_classify: return "sine-classify";
        case TaskKind::csv_classify: return "csv-classify";
        case TaskKind::csv_regress: return "csv-regress";
    }
    return "?";
}

inline const char* to_string(ModelKind m) {
    return m == ModelKind::rformer ? "rformer" : "raw_transformer";
}

inline TaskKind task_from_string(const std::string& s) {
    if (s == "sine-classify") return TaskKind::sine_classify;
    if (s == "csv-classify") return TaskKind::csv_classify;
    if (s == "csv-regress") return TaskKind::csv_regress;
    fail("task.kind: unknown task '" + s + "'");
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "rformer") return ModelKind::rformer;
    if (s == "raw_transformer" || s == "raw") return ModelKind::raw_transformer;
    fail("model.kind: unknown model kind '" + s + "'");
}

// Everything one run needs, mirrored 1:1 by the `[section] key = value`
// config file. Flag overrides win over the file; the effective config is
// echoed next to the outputs so a run can be reproduced from its artifacts.
struct RunConfig {
    // [task]
    TaskKind task = TaskKind::sine_classify;

    // [data] - generator settings for sine-classify, file paths for csv tasks
    SineConfig sine;
    std::string data_csv, labels_csv, split_csv;
    CsvSchema csv;

    // [signature]
    SigConfig sig;

    // [model]
    ModelKind model_kind = ModelKind::rformer;
    int d_model = 32;
    int heads = 2;
    int blocks = 2;
    int ffn_hidden = 64;
    bool positional = true;
    // Standardise token features with train-split statistics before the
    // input affine. Signature levels live on wildly different scales (time
    // monomials vs oscillation integrals); without this the input layer
    // spends most of the training budget learning the scales.
    bool standardize = true;
    std::string precision = "f32";  // f32 | f64

    // [optim]
    double lr = 1e-3;
    int batch = 32;
    int epochs = 100;
    std::uint64_t seed = 42;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    // [drop]
    double train_drop = 0.0;
    double eval_drop = 0.0;
    int eval_draws = 5;

    // [io]
    std::string out_dir = "out";
    unsigned threads = 0;  // 0 = all hardware threads

    void validate() const {
        require(sig.depth >= 1, "signature.depth: must be >= 1");
        require(sig.windows >= 1, "signature.windows: must be >= 1");
        require(d_model >= 1, "model.d_model: must be >= 1");
        require(heads >= 1 && d_model % heads == 0, "model.heads: must divide d_model");
        require(blocks >= 1, "model.blocks: must be >= 1");
        require(ffn_hidden >= 1, "model.ffn_hidden: must be >= 1");
        require(precision == "f32" || precision == "f64", "model.precision: expected f32 or f64");
        require(lr > 0.0, "optim.lr: must be positive");
        require(batch >= 1, "optim.batch: must be >= 1");
        require(epochs >= 0, "optim.epochs: must be >= 0");
        require(train_drop >= 0.0 && train_drop < 1.0, "drop.train: must be in [0, 1)");
        require(eval_drop >= 0.0 && eval_drop < 1.0, "drop.eval: must be in [0, 1)");
        require(eval_draws >= 1, "drop.eval_draws: must be >= 1");
        if (task == TaskKind::sine_classify) sine.validate();
        if (task != TaskKind::sine_classify) require(!data_csv.empty(), "data.data_csv: required for csv tasks");
    }
};

namespace detail {

struct KvStore {
    std::map<std::string, std::string> values;  // "section.key" -> raw string

    bool has(const std::string& k) const { return values.count(k) > 0; }

    template <class Fn>
    void take(const std::string& key, Fn&& apply) {
        auto it = values.find(key);
        if (it == values.end()) return;
        apply(it->second);
        values.erase(it);
    }
};

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    fail(key + ": expected a boolean, got '" + v + "'");
}

inline long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long r = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        fail(key + ": expected an integer, got '" + v + "'");
    }
}

inline double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double r = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        fail(key + ": expected a number, got '" + v + "'");
    }
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

}  // namespace detail

// Parses `[section]` / `key = value` text. `#` and `;` start comments.
inline detail::KvStore parse_config_text(std::istream& is) {
    detail::KvStore kv;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("config line " + std::to_string(line_no) + ": unterminated section");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty()) fail("config line " + std::to_string(line_no) + ": empty key");
        kv.values[section.empty() ? key : section + "." + key] = val;
    }
    return kv;
}

inline RunConfig config_from_kv(detail::KvStore kv) {
    using detail::parse_bool;
    using detail::parse_int;
    using detail::parse_real;
    RunConfig c;
    kv.take("task.kind", [&](const std::string& v) { c.task = task_from_string(v); });

    kv.take("data.samples", [&](const std::string& v) { c.sine.num_samples = static_cast<int>(parse_int("data.samples", v)); });
    kv.take("data.classes", [&](const std::string& v) { c.sine.num_classes = static_cast<int>(parse_int("data.classes", v)); });
    kv.take("data.seq_len", [&](const std::string& v) { c.sine.seq_len = static_cast<int>(parse_int("data.seq_len", v)); });
    kv.take("data.t_end", [&](const std::string& v) { c.sine.t_end = parse_real("data.t_end", v); });
    kv.take("data.omega_min", [&](const std::string& v) { c.sine.omega_min = parse_real("data.omega_min", v); });
    kv.take("data.omega_max", [&](const std::string& v) { c.sine.omega_max = parse_real("data.omega_max", v); });
    kv.take("data.channels", [&](const std::string& v) { c.sine.channels = static_cast<int>(parse_int("data.channels", v)); });
    kv.take("data.trend_amp", [&](const std::string& v) { c.sine.trend_amp = parse_real("data.trend_amp", v); });
    kv.take("data.noise_std", [&](const std::string& v) { c.sine.noise_std = parse_real("data.noise_std", v); });
    kv.take("data.data_csv", [&](const std::string& v) { c.data_csv = v; });
    kv.take("data.labels_csv", [&](const std::string& v) { c.labels_csv = v; });
    kv.take("data.split_csv", [&](const std::string& v) { c.split_csv = v; });
    kv.take("data.id_col", [&](const std::string& v) { c.csv.id_col = static_cast<int>(parse_int("data.id_col", v)); });
    kv.take("data.time_col", [&](const std::string& v) { c.csv.time_col = static_cast<int>(parse_int("data.time_col", v)); });
    kv.take("data.target_col", [&](const std::string& v) { c.csv.target_col = static_cast<int>(parse_int("data.target_col", v)); });
    kv.take("data.sort_time", [&](const std::string& v) { c.csv.sort_time = parse_bool("data.sort_time", v); });
    kv.take("data.has_header", [&](const std::string& v) { c.csv.has_header = parse_bool("data.has_header", v); });

    kv.take("signature.depth", [&](const std::string& v) { c.sig.depth = static_cast<int>(parse_int("signature.depth", v)); });
    kv.take("signature.windows", [&](const std::string& v) { c.sig.windows = static_cast<int>(parse_int("signature.windows", v)); });
    kv.take("signature.view", [&](const std::string& v) { c.sig.view = sig_view_from_string(v); });
    kv.take("signature.time_augment", [&](const std::string& v) { c.sig.time_augment = parse_bool("signature.time_augment", v); });
    kv.take("signature.level_rescale", [&](const std::string& v) { c.sig.level_rescale = parse_bool("signature.level_rescale", v); });

    kv.take("model.kind", [&](const std::string& v) { c.model_kind = model_kind_from_string(v); });
    kv.take("model.d_model", [&](const std::string& v) { c.d_model = static_cast<int>(parse_int("model.d_model", v)); });
    kv.take("model.heads", [&](const std::string& v) { c.heads = static_cast<int>(parse_int("model.heads", v)); });
    kv.take("model.blocks", [&](const std::string& v) { c.blocks = static_cast<int>(parse_int("model.blocks", v)); });
    kv.take("model.ffn_hidden", [&](const std::string& v) { c.ffn_hidden = static_cast<int>(parse_int("model.ffn_hidden", v)); });
    kv.take("model.positional", [&](const std::string& v) { c.positional = parse_bool("model.positional", v); });
    kv.take("model.standardize", [&](const std::string& v) { c.standardize = parse_bool("model.standardize", v); });
    kv.take("model.precision", [&](const std::string& v) { c.precision = v; });

    kv.take("optim.lr", [&](const std::string& v) { c.lr = parse_real("optim.lr", v); });
    kv.take("optim.batch", [&](const std::string& v) { c.batch = static_cast<int>(parse_int("optim.batch", v)); });
    kv.take("optim.epochs", [&](const std::string& v) { c.epochs = static_cast<int>(parse_int("optim.epochs", v)); });
    kv.take("optim.seed", [&](const std::string& v) { c.seed = static_cast<std::uint64_t>(parse_int("optim.seed", v)); c.sine.seed = c.seed; });
    kv.take("optim.beta1", [&](const std::string& v) { c.beta1 = parse_real("optim.beta1", v); });
    kv.take("optim.beta2", [&](const std::string& v) { c.beta2 = parse_real("optim.beta2", v); });
    kv.take("optim.eps", [&](const std::string& v) { c.adam_eps = parse_real("optim.eps", v); });

    kv.take("drop.train", [&](const std::string& v) { c.train_drop = parse_real("drop.train", v); });
    kv.take("drop.eval", [&](const std::string& v) { c.eval_drop = parse_real("drop.eval", v); });
    kv.take("drop.eval_draws", [&](const std::string& v) { c.eval_draws = static_cast<int>(parse_int("drop.eval_draws", v)); });

    kv.take("io.out_dir", [&](const std::string& v) { c.out_dir = v; });
    kv.take("io.threads", [&](const std::string& v) { c.threads = static_cast<unsigned>(parse_int("io.threads", v)); });

    if (!kv.values.empty()) fail("config: unknown key '" + kv.values.begin()->first + "'");
    return c;
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    detail::KvStore kv;
    if (!path.empty()) {
        std::ifstream is(path);
        if (!is) fail("cannot open config file " + path);
        kv = parse_config_text(is);
    }
    for (const auto& ov : overrides) {  // "section.key=value", flags win
        const std::size_t eq = ov.find('=');
        if (eq == std::string::npos) fail("override '" + ov + "': expected section.key=value");
        kv.values[detail::trim(ov.substr(0, eq))] = detail::trim(ov.substr(eq + 1));
    }
    return config_from_kv(std::move(kv));
}

// Effective config after defaults, in the same syntax load_config reads.
inline void save_config(const RunConfig& c, std::ostream& os) {
    os << "[task]\nkind = " << to_string(c.task) << "\n\n";
    os << "[data]\n";
    if (c.task == TaskKind::sine_classify) {
        os << "samples = " << c.sine.num_samples << "\nclasses = " << c.sine.num_classes
           << "\nseq_len = " << c.sine.seq_len << "\nt_end = " << detail::fmt_double(c.sine.t_end)
           << "\nomega_min = " << detail::fmt_double(c.sine.omega_min)
           << "\nomega_max = " << detail::fmt_double(c.sine.omega_max) << "\nchannels = " << c.sine.channels
           << "\ntrend_amp = " << detail::fmt_double(c.sine.trend_amp)
           << "\nnoise_std = " << detail::fmt_double(c.sine.noise_std) << "\n";
    } else {
        os << "data_csv = " << c.data_csv << "\nlabels_csv = " << c.labels_csv << "\nsplit_csv = " << c.split_csv
           << "\nid_col = " << c.csv.id_col << "\ntime_col = " << c.csv.time_col
           << "\ntarget_col = " << c.csv.target_col << "\nsort_time = " << (c.csv.sort_time ? "true" : "false")
           << "\nhas_header = " << (c.csv.has_header ? "true" : "false") << "\n";
    }
    os << "\n[signature]\ndepth = " << c.sig.depth << "\nwindows = " << c.sig.windows
       << "\nview = " << to_string(c.sig.view) << "\ntime_augment = " << (c.sig.time_augment ? "true" : "false")
       << "\nlevel_rescale = " << (c.sig.level_rescale ? "true" : "false") << "\n";
    os << "\n[model]\nkind = " << to_string(c.model_kind) << "\nd_model = " << c.d_model << "\nheads = " << c.heads
       << "\nblocks = " << c.blocks << "\nffn_hidden = " << c.ffn_hidden
       << "\npositional = " << (c.positional ? "true" : "false")
       << "\nstandardize = " << (c.standardize ? "true" : "false") << "\nprecision = " << c.precision << "\n";
    os << "\n[optim]\nlr = " << detail::fmt_double(c.lr) << "\nbatch = " << c.batch << "\nepochs = " << c.epochs
       << "\nseed = " << c.seed << "\nbeta1 = " << detail::fmt_double(c.beta1)
       << "\nbeta2 = " << detail::fmt_double(c.beta2) << "\neps = " << detail::fmt_double(c.adam_eps) << "\n";
    os << "\n[drop]\ntrain = " << detail::fmt_double(c.train_drop) << "\neval = " << detail::fmt_double(c.eval_drop)
       << "\neval_draws = " << c.eval_draws << "\n";
    os << "\n[io]\nout_dir = " << c.out_dir << "\nthreads = " << c.threads << "\n";
}

inline void save_config(const RunConfig& c, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write config to " + path);
    save_config(c, os);
}

}  // namespace rough
