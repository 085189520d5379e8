#pragma once

#include <cmath>
#include <vector>

#include "rough/nn/tensor.hpp"

namespace rough::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list. Moment buffers are kept
// in the parameter order returned by the model, and gradients are zeroed
// after every step.
template <class T>
struct Adam {
    AdamConfig cfg;
    long step_count = 0;
    std::vector<Tensor2<T>> m, v;

    void init(const std::vector<Param<T>*>& params, const AdamConfig& c) {
        cfg = c;
        step_count = 0;
        m.clear();
        v.clear();
        for (auto* p : params) {
            m.emplace_back(p->w.rows, p->w.cols);
            v.emplace_back(p->w.rows, p->w.cols);
        }
    }

    void step(const std::vector<Param<T>*>& params) {
        require(params.size() == m.size(), "adam: parameter list changed");
        ++step_count;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_count));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_count));
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& w = params[i]->w.data;
            auto& g = params[i]->g.data;
            auto& mi = m[i].data;
            auto& vi = v[i].data;
            for (std::size_t j = 0; j < w.size(); ++j) {
                const double gj = static_cast<double>(g[j]);
                const double mj = cfg.beta1 * static_cast<double>(mi[j]) + (1.0 - cfg.beta1) * gj;
                const double vj = cfg.beta2 * static_cast<double>(vi[j]) + (1.0 - cfg.beta2) * gj * gj;
                mi[j] = static_cast<T>(mj);
                vi[j] = static_cast<T>(vj);
                const double mhat = mj / bc1;
                const double vhat = vj / bc2;
                w[j] = static_cast<T>(static_cast<double>(w[j]) - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
                g[j] = T(0);
            }
        }
    }
};

}  // namespace rough::nn
