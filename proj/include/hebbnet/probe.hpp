#ifndef HEBBNET_PROBE_HPP
#define HEBBNET_PROBE_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hebbnet/tensor.hpp"

namespace hebbnet {

/// Single linear layer with softmax cross-entropy loss, trained by plain
/// SGD plus L2. Used both as the network's final classifier and as the
/// evaluation probe on frozen features.
struct LinearProbe {
    Tensor weights; // [num_classes, feat_dim]
    Tensor bias;    // [num_classes]
    double l2 = 0.0;

    std::size_t num_classes() const { return weights.dim(0); }
    std::size_t feat_dim() const { return weights.dim(1); }
};

LinearProbe make_probe(std::size_t num_classes, std::size_t feat_dim, double l2);

/// logits = features * W^T + bias; features is [B, feat_dim].
Tensor probe_forward(const LinearProbe& p, const Tensor& features);

struct ProbeGradient {
    Tensor dw;   // [num_classes, feat_dim]
    Tensor db;   // [num_classes]
    double loss; // mean cross-entropy + (l2/2)*||W||^2
};

/// Gradient of the regularized mean cross-entropy w.r.t. W and bias.
ProbeGradient probe_gradient(const LinearProbe& p, const Tensor& features,
                             const std::vector<int>& labels);

/// One SGD step: parameters decremented by eta * gradient.
LinearProbe probe_sgd_step(const LinearProbe& p, const Tensor& features,
                           const std::vector<int>& labels, double eta);

/// Loss only (finite-difference oracle hook).
double probe_loss(const LinearProbe& p, const Tensor& features, const std::vector<int>& labels);

/// Fraction of argmax(logits) == label; argmax ties break to the lowest
/// class index.
double evaluate_accuracy(const LinearProbe& p, const Tensor& features,
                         const std::vector<int>& labels);

} // namespace hebbnet

#endif
