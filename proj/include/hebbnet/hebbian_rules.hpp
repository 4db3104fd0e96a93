#ifndef HEBBNET_HEBBIAN_RULES_HPP
#define HEBBNET_HEBBIAN_RULES_HPP

#include <cstddef>

#include "hebbnet/tensor.hpp"

namespace hebbnet {

/// Activation applied inside the PCA-style rules. With identity the
/// nonlinear rule degenerates to the linear one bit-for-bit.
enum class Nonlinearity { identity, relu };

inline double apply_nonlinearity(Nonlinearity f, double y) {
    return (f == Nonlinearity::relu && y < 0.0) ? 0.0 : y;
}

/// N neuron weight vectors of dimension D, one per row. Row order is
/// meaningful: it defines the component rank extracted by the PCA rules.
struct WeightMatrix {
    Tensor weights; // [N, D]

    WeightMatrix() = default;
    explicit WeightMatrix(Tensor w);

    std::size_t neurons() const { return weights.dim(0); }
    std::size_t dim() const { return weights.dim(1); }
    double* row(std::size_t i) { return weights.row(i); }
    const double* row(std::size_t i) const { return weights.row(i); }
};

/// Pre- and post-activation responses y = Wx and f(y) for a batch.
struct Activation {
    Tensor pre;  // [B, N]
    Tensor post; // [B, N]
};

/// Responses of all neurons to a batch of inputs [B, D] (or a single [D] row).
Activation activate(const WeightMatrix& w, const Tensor& x_batch, Nonlinearity f);

/// Plain Hebb: delta[i] = eta * y_i * x with y_i = dot(w_i, x).
Tensor hebb_plain(const WeightMatrix& w, const Tensor& x, double eta);

/// Hebb with weight decay: delta[i] = eta * y_i * (x - w_i).
Tensor hebb_decay(const WeightMatrix& w, const Tensor& x, double eta);

/// Index of the neuron whose weight vector is closest to x in Euclidean
/// distance; ties break to the lowest index.
std::size_t wta_select(const WeightMatrix& w, const Tensor& x);

/// Winner-takes-all update: delta[winner] = eta * (x - w_winner), other
/// rows zero. The winner moves toward the input with unit effective
/// activation, so convergence targets are cluster means.
Tensor wta_update(const WeightMatrix& w, const Tensor& x, double eta);

/// Mean of per-sample wta_update over the rows of x_batch [B, D],
/// accumulated in row order.
Tensor wta_update_batch(const WeightMatrix& w, const Tensor& x_batch, double eta);

/// PCA rule, nonlinear form: per sample,
///   delta_i = eta * f(y_i) * (x - sum_{j<=i} f(y_j) * w_j),
/// averaged over the batch rows in index order. Inputs must already be
/// centered and finite; the inner sum uses the current weights for all j
/// (simultaneous update, not a sequential sweep).
Tensor hpca_update(const WeightMatrix& w, const Tensor& x_batch, Nonlinearity f, double eta);

/// Mean over the batch of ||x - sum_{j<=k} f(y_j) * w_j||^2 (squared L2).
double representation_error(const WeightMatrix& w, const Tensor& x_batch, Nonlinearity f,
                            std::size_t k);

} // namespace hebbnet

#endif
