#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rough/nn/layers.hpp"

namespace rough::nn {

struct ModelConfig {
    int input_dim = 1;   // token width fed to the input affine
    int d_model = 32;
    int heads = 2;
    int blocks = 2;
    int ffn_hidden = 64;
    int out_dim = 1;     // C logits for classification, 1 for regression
    bool positional = true;
    int pos_rows = 1;    // learned positional table length (training length)

    void validate() const {
        require(input_dim >= 1, "model: input_dim must be >= 1");
        require(d_model >= 1, "model: d_model must be >= 1");
        require(heads >= 1 && d_model % heads == 0, "model: heads must divide d_model");
        require(blocks >= 1, "model: need at least 1 block");
        require(ffn_hidden >= 1, "model: ffn_hidden must be >= 1");
        require(out_dim >= 1, "model: out_dim must be >= 1");
        require(!positional || pos_rows >= 1, "model: pos_rows must be >= 1");
    }
};

// Token-sequence encoder with a pooled readout: input affine to d_model,
// optional learned additive positional embedding, pre-norm encoder blocks,
// mean pooling over tokens, affine head. The same network serves both
// signature tokens and raw-sample tokens; only the token construction
// differs.
//
// Sequences shorter or longer than pos_rows use nearest-index scaling into
// the positional table, so a model trained at one length can be evaluated on
// subsampled inputs.
template <class T>
struct Transformer {
    ModelConfig cfg;
    Linear<T> input_proj;
    Param<T> pos;
    std::vector<EncoderBlock<T>> encoder;
    Linear<T> head;
    int len_cache = 0;
    std::vector<int> pos_map_cache;

    void init(const ModelConfig& c, std::mt19937_64& rng) {
        c.validate();
        cfg = c;
        input_proj.init("input", cfg.input_dim, cfg.d_model, rng);
        pos.init_shape("pos", cfg.positional ? cfg.pos_rows : 0, cfg.positional ? cfg.d_model : 0);
        if (cfg.positional) init_uniform(pos.w, cfg.d_model, rng);
        encoder.clear();
        encoder.resize(static_cast<std::size_t>(cfg.blocks));
        for (int i = 0; i < cfg.blocks; ++i)
            encoder[static_cast<std::size_t>(i)].init("blk" + std::to_string(i), cfg.d_model, cfg.heads,
                                                      cfg.ffn_hidden, rng);
        head.init("head", cfg.d_model, cfg.out_dim, rng);
    }

    int positional_row(int r, int len) const {
        if (len == cfg.pos_rows || len <= 1) return std::min(r, cfg.pos_rows - 1);
        const double t = static_cast<double>(r) * (cfg.pos_rows - 1) / static_cast<double>(len - 1);
        return static_cast<int>(std::lround(t));
    }

    // tokens: L x input_dim. Returns 1 x out_dim.
    Tensor2<T> forward(const Tensor2<T>& tokens) {
        require(tokens.cols == cfg.input_dim, "model: token width mismatch");
        require(tokens.rows >= 1, "model: empty token sequence");
        Tensor2<T> x = input_proj.forward(tokens);
        len_cache = x.rows;
        if (cfg.positional) {
            pos_map_cache.resize(static_cast<std::size_t>(x.rows));
            for (int r = 0; r < x.rows; ++r) {
                const int p = positional_row(r, x.rows);
                pos_map_cache[static_cast<std::size_t>(r)] = p;
                const T* prow = pos.w.row(p);
                T* xr = x.row(r);
                for (int j = 0; j < cfg.d_model; ++j) xr[j] += prow[j];
            }
        }
        for (auto& blk : encoder) x = blk.forward(x);
        // mean pool over tokens
        Tensor2<T> pooled(1, cfg.d_model);
        const T inv = T(1) / static_cast<T>(x.rows);
        for (int r = 0; r < x.rows; ++r) {
            const T* xr = x.row(r);
            for (int j = 0; j < cfg.d_model; ++j) pooled.data[static_cast<std::size_t>(j)] += xr[j] * inv;
        }
        return head.forward(pooled);
    }

    // dout: 1 x out_dim gradient of the loss w.r.t. the model output.
    // Parameter gradients accumulate; call zero_grad between steps.
    void backward(const Tensor2<T>& dout) {
        Tensor2<T> dpooled = head.backward(dout);
        Tensor2<T> dx(len_cache, cfg.d_model);
        const T inv = T(1) / static_cast<T>(len_cache);
        for (int r = 0; r < len_cache; ++r) {
            T* dr = dx.row(r);
            for (int j = 0; j < cfg.d_model; ++j) dr[j] = dpooled.data[static_cast<std::size_t>(j)] * inv;
        }
        for (auto it = encoder.rbegin(); it != encoder.rend(); ++it) dx = it->backward(dx);
        if (cfg.positional) {
            for (int r = 0; r < len_cache; ++r) {
                T* prow = pos.g.row(pos_map_cache[static_cast<std::size_t>(r)]);
                const T* dr = dx.row(r);
                for (int j = 0; j < cfg.d_model; ++j) prow[j] += dr[j];
            }
        }
        input_proj.backward(dx);
    }

    std::vector<Param<T>*> params() {
        std::vector<Param<T>*> ps = {&input_proj.W, &input_proj.b};
        if (cfg.positional) ps.push_back(&pos);
        for (auto& blk : encoder) {
            ps.push_back(&blk.ln1.gamma);
            ps.push_back(&blk.ln1.beta);
            ps.push_back(&blk.attn.wq.W);
            ps.push_back(&blk.attn.wq.b);
            ps.push_back(&blk.attn.wk.W);
            ps.push_back(&blk.attn.wk.b);
            ps.push_back(&blk.attn.wv.W);
            ps.push_back(&blk.attn.wv.b);
            ps.push_back(&blk.attn.wo.W);
            ps.push_back(&blk.attn.wo.b);
            ps.push_back(&blk.ln2.gamma);
            ps.push_back(&blk.ln2.beta);
            ps.push_back(&blk.ffn.fc1.W);
            ps.push_back(&blk.ffn.fc1.b);
            ps.push_back(&blk.ffn.fc2.W);
            ps.push_back(&blk.ffn.fc2.b);
        }
        ps.push_back(&head.W);
        ps.push_back(&head.b);
        return ps;
    }

    void zero_grad() {
        for (auto* p : params()) p->zero_grad();
    }

    std::size_t param_count() {
        std::size_t n = 0;
        for (auto* p : params()) n += p->w.size();
        return n;
    }

    // Values only; gradients and caches are left alone.
    void copy_params_from(Transformer& other) {
        auto mine = params();
        auto theirs = other.params();
        require(mine.size() == theirs.size(), "copy_params_from: model mismatch");
        for (std::size_t i = 0; i < mine.size(); ++i) {
            require(mine[i]->w.same_shape(theirs[i]->w), "copy_params_from: shape mismatch");
            mine[i]->w.data = theirs[i]->w.data;
        }
    }
};

}  // namespace rough::nn
