#include "hebbnet/probe.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hebbnet/error.hpp"

namespace hebbnet {

namespace {

void require_features(const LinearProbe& p, const Tensor& features) {
    if (features.rank() != 2) throw DimensionError("probe expects [B, feat_dim] features");
    if (features.dim(1) != p.feat_dim()) {
        throw DimensionError("probe: feature dim " + std::to_string(features.dim(1)) +
                             " != " + std::to_string(p.feat_dim()));
    }
}

void require_labels(const LinearProbe& p, const Tensor& features, const std::vector<int>& labels) {
    if (labels.size() != features.dim(0)) {
        throw DimensionError("probe: label count != batch size");
    }
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= p.num_classes()) {
            throw Error("probe: invalid label " + std::to_string(l));
        }
    }
}

// softmax with max-shift; logits row in, probabilities out
void softmax_row(const double* logits, double* probs, std::size_t k) {
    double m = logits[0];
    for (std::size_t i = 1; i < k; ++i) m = std::max(m, logits[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        probs[i] = std::exp(logits[i] - m);
        sum += probs[i];
    }
    for (std::size_t i = 0; i < k; ++i) probs[i] /= sum;
}

} // namespace

LinearProbe make_probe(std::size_t num_classes, std::size_t feat_dim, double l2) {
    return LinearProbe{Tensor({num_classes, feat_dim}), Tensor({num_classes}), l2};
}

Tensor probe_forward(const LinearProbe& p, const Tensor& features) {
    require_features(p, features);
    const std::size_t b = features.dim(0), k = p.num_classes(), d = p.feat_dim();
    Tensor logits({b, k});
    for (std::size_t r = 0; r < b; ++r) {
        const double* x = features.row(r);
        double* out = logits.row(r);
        for (std::size_t c = 0; c < k; ++c) {
            const double* w = p.weights.row(c);
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += w[j] * x[j];
            out[c] = acc + p.bias[c];
        }
    }
    return logits;
}

ProbeGradient probe_gradient(const LinearProbe& p, const Tensor& features,
                             const std::vector<int>& labels) {
    require_features(p, features);
    require_labels(p, features, labels);

    const std::size_t b = features.dim(0), k = p.num_classes(), d = p.feat_dim();
    const Tensor logits = probe_forward(p, features);

    ProbeGradient g{Tensor({k, d}), Tensor({k}), 0.0};
    std::vector<double> probs(k);
    double loss = 0.0;
    for (std::size_t r = 0; r < b; ++r) {
        softmax_row(logits.row(r), probs.data(), k);
        const std::size_t label = static_cast<std::size_t>(labels[r]);
        loss -= std::log(std::max(probs[label], 1e-300));
        const double* x = features.row(r);
        for (std::size_t c = 0; c < k; ++c) {
            const double coeff = probs[c] - (c == label ? 1.0 : 0.0);
            g.db[c] += coeff;
            double* gw = g.dw.row(c);
            for (std::size_t j = 0; j < d; ++j) gw[j] += coeff * x[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < g.dw.size(); ++i) g.dw[i] *= inv;
    for (std::size_t c = 0; c < k; ++c) g.db[c] *= inv;

    double wnorm2 = 0.0;
    if (p.l2 != 0.0) {
        for (std::size_t i = 0; i < p.weights.size(); ++i) {
            g.dw[i] += p.l2 * p.weights[i];
            wnorm2 += p.weights[i] * p.weights[i];
        }
    }
    g.loss = loss * inv + 0.5 * p.l2 * wnorm2;
    return g;
}

LinearProbe probe_sgd_step(const LinearProbe& p, const Tensor& features,
                           const std::vector<int>& labels, double eta) {
    if (eta <= 0.0) throw Error("learning rate must be positive");
    const ProbeGradient g = probe_gradient(p, features, labels);
    LinearProbe out = p;
    for (std::size_t i = 0; i < out.weights.size(); ++i) out.weights[i] -= eta * g.dw[i];
    for (std::size_t c = 0; c < out.bias.size(); ++c) out.bias[c] -= eta * g.db[c];
    return out;
}

double probe_loss(const LinearProbe& p, const Tensor& features, const std::vector<int>& labels) {
    require_features(p, features);
    require_labels(p, features, labels);
    const Tensor logits = probe_forward(p, features);
    const std::size_t b = features.dim(0), k = p.num_classes();
    std::vector<double> probs(k);
    double loss = 0.0;
    for (std::size_t r = 0; r < b; ++r) {
        softmax_row(logits.row(r), probs.data(), k);
        loss -= std::log(std::max(probs[static_cast<std::size_t>(labels[r])], 1e-300));
    }
    loss /= static_cast<double>(b);
    if (p.l2 != 0.0) {
        double wnorm2 = 0.0;
        for (std::size_t i = 0; i < p.weights.size(); ++i) {
            wnorm2 += p.weights[i] * p.weights[i];
        }
        loss += 0.5 * p.l2 * wnorm2;
    }
    return loss;
}

double evaluate_accuracy(const LinearProbe& p, const Tensor& features,
                         const std::vector<int>& labels) {
    require_features(p, features);
    if (labels.size() != features.dim(0)) throw DimensionError("probe: label count != batch size");
    const Tensor logits = probe_forward(p, features);
    const std::size_t b = features.dim(0), k = p.num_classes();
    std::size_t correct = 0;
    for (std::size_t r = 0; r < b; ++r) {
        const double* row = logits.row(r);
        std::size_t arg = 0;
        for (std::size_t c = 1; c < k; ++c) {
            if (row[c] > row[arg]) arg = c; // strict: ties keep lowest index
        }
        if (labels[r] >= 0 && static_cast<std::size_t>(labels[r]) == arg) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(b);
}

} // namespace hebbnet
