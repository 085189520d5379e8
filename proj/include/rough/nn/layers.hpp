#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "rough/nn/tensor.hpp"

namespace rough::nn {

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)), the usual dense-layer init.
template <class T>
void init_uniform(Tensor2<T>& w, int fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& v : w.data) v = static_cast<T>(u(rng));
}

// y = x W + b with cached input. Gradients accumulate across backward calls
// until zero_grad, which is what batch accumulation relies on.
template <class T>
struct Linear {
    Param<T> W;  // in x out
    Param<T> b;  // 1 x out
    Tensor2<T> x_cache;

    void init(const std::string& name, int in, int out, std::mt19937_64& rng) {
        W.init_shape(name + ".W", in, out);
        b.init_shape(name + ".b", 1, out);
        init_uniform(W.w, in, rng);
        init_uniform(b.w, in, rng);
    }

    Tensor2<T> forward(const Tensor2<T>& x) {
        require(x.cols == W.w.rows, "Linear: input width mismatch");
        x_cache = x;
        Tensor2<T> y(x.rows, W.w.cols);
        mm_nn(x.data.data(), x.cols, W.w.data.data(), W.w.cols, y.data.data(), y.cols, x.rows, W.w.cols, x.cols);
        for (int r = 0; r < y.rows; ++r) {
            T* yr = y.row(r);
            for (int j = 0; j < y.cols; ++j) yr[j] += b.w.data[static_cast<std::size_t>(j)];
        }
        return y;
    }

    Tensor2<T> backward(const Tensor2<T>& dy) {
        require(dy.rows == x_cache.rows && dy.cols == W.w.cols, "Linear: grad shape mismatch");
        mm_tn(x_cache.data.data(), x_cache.cols, dy.data.data(), dy.cols, W.g.data.data(), W.g.cols, W.w.rows,
              W.w.cols, x_cache.rows, /*acc=*/true);
        for (int r = 0; r < dy.rows; ++r) {
            const T* d = dy.row(r);
            for (int j = 0; j < dy.cols; ++j) b.g.data[static_cast<std::size_t>(j)] += d[j];
        }
        Tensor2<T> dx(x_cache.rows, x_cache.cols);
        mm_nt(dy.data.data(), dy.cols, W.w.data.data(), W.w.cols, dx.data.data(), dx.cols, dy.rows, W.w.rows, dy.cols);
        return dx;
    }
};

// Row-wise layer norm with learned gain/bias.
template <class T>
struct LayerNorm {
    Param<T> gamma;
    Param<T> beta;
    Tensor2<T> xhat_cache;
    std::vector<T> inv_std_cache;
    static constexpr T kEps = T(1e-5);

    void init(const std::string& name, int dim) {
        gamma.init_shape(name + ".g", 1, dim);
        beta.init_shape(name + ".b", 1, dim);
        gamma.w.fill(T(1));
        beta.w.fill(T(0));
    }

    Tensor2<T> forward(const Tensor2<T>& x) {
        const int D = x.cols;
        require(D == gamma.w.cols, "LayerNorm: width mismatch");
        xhat_cache.resize(x.rows, D);
        inv_std_cache.assign(static_cast<std::size_t>(x.rows), T(0));
        Tensor2<T> y(x.rows, D);
        for (int r = 0; r < x.rows; ++r) {
            const T* xr = x.row(r);
            T mean = T(0);
            for (int j = 0; j < D; ++j) mean += xr[j];
            mean /= static_cast<T>(D);
            T var = T(0);
            for (int j = 0; j < D; ++j) {
                const T c = xr[j] - mean;
                var += c * c;
            }
            var /= static_cast<T>(D);
            const T inv = T(1) / std::sqrt(var + kEps);
            inv_std_cache[static_cast<std::size_t>(r)] = inv;
            T* hr = xhat_cache.row(r);
            T* yr = y.row(r);
            for (int j = 0; j < D; ++j) {
                hr[j] = (xr[j] - mean) * inv;
                yr[j] = gamma.w.data[static_cast<std::size_t>(j)] * hr[j] + beta.w.data[static_cast<std::size_t>(j)];
            }
        }
        return y;
    }

    Tensor2<T> backward(const Tensor2<T>& dy) {
        const int D = dy.cols;
        Tensor2<T> dx(dy.rows, D);
        for (int r = 0; r < dy.rows; ++r) {
            const T* d = dy.row(r);
            const T* h = xhat_cache.row(r);
            T mean_dh = T(0), mean_dhh = T(0);
            for (int j = 0; j < D; ++j) {
                const T dh = d[j] * gamma.w.data[static_cast<std::size_t>(j)];
                mean_dh += dh;
                mean_dhh += dh * h[j];
                gamma.g.data[static_cast<std::size_t>(j)] += d[j] * h[j];
                beta.g.data[static_cast<std::size_t>(j)] += d[j];
            }
            mean_dh /= static_cast<T>(D);
            mean_dhh /= static_cast<T>(D);
            const T inv = inv_std_cache[static_cast<std::size_t>(r)];
            T* dxr = dx.row(r);
            for (int j = 0; j < D; ++j) {
                const T dh = d[j] * gamma.w.data[static_cast<std::size_t>(j)];
                dxr[j] = inv * (dh - mean_dh - h[j] * mean_dhh);
            }
        }
        return dx;
    }
};

// Scaled dot-product multi-head attention: per head project, score, row
// softmax, weight the values; heads concatenated then output-projected.
// Score matrices are O(L^2) and are recomputed during backward instead of
// cached, so memory stays O(L * d_model) per layer.
//
// Head slices are narrow (hw = d_model / heads), so every O(L^2 * hw)
// product is arranged with the L-sized dimension innermost, transposing the
// narrow operand into an hw x L scratch first.
template <class T>
struct MultiHeadAttention {
    int heads = 1;
    Linear<T> wq, wk, wv, wo;
    Tensor2<T> q_cache, k_cache, v_cache;
    std::vector<T> scratch_a, scratch_b;   // L x L score buffers
    std::vector<T> tr_a, tr_b, tr_c;       // hw x L transposes

    void init(const std::string& name, int d_model, int num_heads, std::mt19937_64& rng) {
        require(num_heads >= 1 && d_model % num_heads == 0, "attention: heads must divide d_model");
        heads = num_heads;
        wq.init(name + ".wq", d_model, d_model, rng);
        wk.init(name + ".wk", d_model, d_model, rng);
        wv.init(name + ".wv", d_model, d_model, rng);
        wo.init(name + ".wo", d_model, d_model, rng);
    }

    // dst (hw x L) = src (L x hw slice with row stride ld) transposed
    static void transpose_slice(const T* src, int ld, int L, int hw, T* dst) {
        for (int r = 0; r < L; ++r) {
            const T* s = src + static_cast<std::size_t>(r) * ld;
            for (int j = 0; j < hw; ++j) dst[static_cast<std::size_t>(j) * L + r] = s[j];
        }
    }

    // dst slice (L x hw, row stride ld) (+)= src (hw x L) transposed
    static void scatter_slice(const T* src, int L, int hw, T* dst, int ld, bool acc) {
        for (int r = 0; r < L; ++r) {
            T* d = dst + static_cast<std::size_t>(r) * ld;
            for (int j = 0; j < hw; ++j) {
                const T v = src[static_cast<std::size_t>(j) * L + r];
                d[j] = acc ? d[j] + v : v;
            }
        }
    }

    // scores = softmax(Qh Kh^T / sqrt(hw)) into `S`, using KT = Kh^T
    void head_softmax_scores(const T* Qh, const T* KT, int L, int dm, int hw, T* S) const {
        const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(hw));
        mm_nn(Qh, dm, KT, L, S, L, L, L, hw);
        const std::size_t n2 = static_cast<std::size_t>(L) * static_cast<std::size_t>(L);
        for (std::size_t i = 0; i < n2; ++i) S[i] *= inv_sqrt;
        softmax_rows(S, L, L, L);
    }

    Tensor2<T> forward(const Tensor2<T>& x) {
        const int L = x.rows, dm = x.cols;
        const int hw = dm / heads;
        q_cache = wq.forward(x);
        k_cache = wk.forward(x);
        v_cache = wv.forward(x);
        const std::size_t n2 = static_cast<std::size_t>(L) * static_cast<std::size_t>(L);
        const std::size_t nt = static_cast<std::size_t>(L) * static_cast<std::size_t>(hw);
        if (scratch_a.size() < n2) scratch_a.resize(n2);
        if (tr_a.size() < nt) tr_a.resize(nt);
        if (tr_b.size() < nt) tr_b.resize(nt);
        if (tr_c.size() < nt) tr_c.resize(nt);
        Tensor2<T> ctx(L, dm);
        for (int h = 0; h < heads; ++h) {
            const std::size_t off = static_cast<std::size_t>(h) * hw;
            T* S = scratch_a.data();
            transpose_slice(k_cache.data.data() + off, dm, L, hw, tr_a.data());
            head_softmax_scores(q_cache.data.data() + off, tr_a.data(), L, dm, hw, S);
            // ctx_h^T = V_h^T S^T: rows of length L on both sides
            transpose_slice(v_cache.data.data() + off, dm, L, hw, tr_b.data());
            mm_nt(tr_b.data(), L, S, L, tr_c.data(), L, hw, L, L);
            scatter_slice(tr_c.data(), L, hw, ctx.data.data() + off, dm, /*acc=*/false);
        }
        return wo.forward(ctx);
    }

    Tensor2<T> backward(const Tensor2<T>& dy) {
        const int L = q_cache.rows, dm = q_cache.cols;
        const int hw = dm / heads;
        const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(hw));
        Tensor2<T> dctx = wo.backward(dy);
        Tensor2<T> dq(L, dm), dk(L, dm), dv(L, dm);
        const std::size_t n2 = static_cast<std::size_t>(L) * static_cast<std::size_t>(L);
        const std::size_t nt = static_cast<std::size_t>(L) * static_cast<std::size_t>(hw);
        if (scratch_a.size() < n2) scratch_a.resize(n2);
        if (scratch_b.size() < n2) scratch_b.resize(n2);
        if (tr_a.size() < nt) tr_a.resize(nt);
        if (tr_b.size() < nt) tr_b.resize(nt);
        if (tr_c.size() < nt) tr_c.resize(nt);
        for (int h = 0; h < heads; ++h) {
            const std::size_t off = static_cast<std::size_t>(h) * hw;
            const T* Qh = q_cache.data.data() + off;
            const T* dch = dctx.data.data() + off;
            T* A = scratch_a.data();
            T* dA = scratch_b.data();
            // recompute the softmax matrix; KT stays for the dQ product
            transpose_slice(k_cache.data.data() + off, dm, L, hw, tr_a.data());
            head_softmax_scores(Qh, tr_a.data(), L, dm, hw, A);
            // dV_h^T = dctx_h^T A: (hw x L)(L x L)
            transpose_slice(dch, dm, L, hw, tr_b.data());
            mm_nn(tr_b.data(), L, A, L, tr_c.data(), L, hw, L, L);
            scatter_slice(tr_c.data(), L, hw, dv.data.data() + off, dm, /*acc=*/true);
            // dA = dctx_h V_h^T via VT, then dS = A . (dA - rowdot(dA, A)) / sqrt(hw)
            transpose_slice(v_cache.data.data() + off, dm, L, hw, tr_c.data());
            mm_nn(dch, dm, tr_c.data(), L, dA, L, L, L, hw);
            for (int r = 0; r < L; ++r) {
                T* ar = A + static_cast<std::size_t>(r) * L;
                T* dar = dA + static_cast<std::size_t>(r) * L;
                T dot = T(0);
                for (int j = 0; j < L; ++j) dot += ar[j] * dar[j];
                for (int j = 0; j < L; ++j) dar[j] = ar[j] * (dar[j] - dot) * inv_sqrt;
            }
            // dQ_h^T = K_h^T dS^T ; dK_h^T = Q_h^T dS
            mm_nt(tr_a.data(), L, dA, L, tr_c.data(), L, hw, L, L);
            scatter_slice(tr_c.data(), L, hw, dq.data.data() + off, dm, /*acc=*/true);
            transpose_slice(Qh, dm, L, hw, tr_b.data());
            mm_nn(tr_b.data(), L, dA, L, tr_c.data(), L, hw, L, L);
            scatter_slice(tr_c.data(), L, hw, dk.data.data() + off, dm, /*acc=*/true);
        }
        Tensor2<T> dx = wq.backward(dq);
        dx.add_(wk.backward(dk));
        dx.add_(wv.backward(dv));
        return dx;
    }
};

// Two-layer ReLU feed-forward.
template <class T>
struct FeedForward {
    Linear<T> fc1, fc2;
    Tensor2<T> act_cache;

    void init(const std::string& name, int d_model, int hidden, std::mt19937_64& rng) {
        fc1.init(name + ".fc1", d_model, hidden, rng);
        fc2.init(name + ".fc2", hidden, d_model, rng);
    }

    Tensor2<T> forward(const Tensor2<T>& x) {
        act_cache = fc1.forward(x);
        Tensor2<T> a = act_cache;
        for (auto& v : a.data) v = v > T(0) ? v : T(0);
        return fc2.forward(a);
    }

    Tensor2<T> backward(const Tensor2<T>& dy) {
        Tensor2<T> da = fc2.backward(dy);
        for (std::size_t i = 0; i < da.data.size(); ++i)
            if (act_cache.data[i] <= T(0)) da.data[i] = T(0);
        return fc1.backward(da);
    }
};

// Pre-norm residual block: x + attn(LN(x)), then x + ffn(LN(x)).
template <class T>
struct EncoderBlock {
    LayerNorm<T> ln1, ln2;
    MultiHeadAttention<T> attn;
    FeedForward<T> ffn;

    void init(const std::string& name, int d_model, int heads, int ffn_hidden, std::mt19937_64& rng) {
        ln1.init(name + ".ln1", d_model);
        ln2.init(name + ".ln2", d_model);
        attn.init(name + ".attn", d_model, heads, rng);
        ffn.init(name + ".ffn", d_model, ffn_hidden, rng);
    }

    Tensor2<T> forward(const Tensor2<T>& x) {
        Tensor2<T> x1 = x;
        x1.add_(attn.forward(ln1.forward(x)));
        Tensor2<T> y = x1;
        y.add_(ffn.forward(ln2.forward(x1)));
        return y;
    }

    Tensor2<T> backward(const Tensor2<T>& dy) {
        Tensor2<T> dx1 = dy;
        dx1.add_(ln2.backward(ffn.backward(dy)));
        Tensor2<T> dx = dx1;
        dx.add_(ln1.backward(attn.backward(dx1)));
        return dx;
    }
};

// ---------------------------------------------------------------------------
// Losses on a single sample; the trainer averages over the batch.

// Log-sum-exp stabilised cross entropy. Returns the loss and fills dlogits.
template <class T>
T cross_entropy(const Tensor2<T>& logits, int label, Tensor2<T>& dlogits) {
    require(logits.rows == 1, "cross_entropy: expected a single logit row");
    const int C = logits.cols;
    require(label >= 0 && label < C, "cross_entropy: label out of range");
    const T* l = logits.row(0);
    T m = l[0];
    for (int j = 1; j < C; ++j) m = std::max(m, l[j]);
    T sum = T(0);
    for (int j = 0; j < C; ++j) sum += std::exp(l[j] - m);
    const T lse = m + std::log(sum);
    dlogits.resize(1, C);
    T* d = dlogits.row(0);
    for (int j = 0; j < C; ++j) d[j] = std::exp(l[j] - lse);
    d[label] -= T(1);
    return lse - l[label];
}

// Squared error for a scalar prediction. Returns the loss and fills dpred.
template <class T>
T squared_error(const Tensor2<T>& pred, T target, Tensor2<T>& dpred) {
    require(pred.rows == 1 && pred.cols == 1, "squared_error: expected a 1x1 prediction");
    const T diff = pred.at(0, 0) - target;
    dpred.resize(1, 1);
    dpred.at(0, 0) = T(2) * diff;
    return diff * diff;
}

}  // namespace rough::nn
