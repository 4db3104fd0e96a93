#ifndef HEBBNET_CONV_HEBBIAN_HPP
#define HEBBNET_CONV_HEBBIAN_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hebbnet/hebbian_rules.hpp"
#include "hebbnet/nn_core.hpp"
#include "hebbnet/tensor.hpp"

namespace hebbnet {

enum class RuleKind { hpca, wta };

/// Learning rule of a Hebbian layer; f applies to the hpca rule only.
struct HebbianRule {
    RuleKind kind = RuleKind::hpca;
    Nonlinearity f = Nonlinearity::relu;

    bool operator==(const HebbianRule&) const = default;
};

/// Running exact mean of every patch seen. count == 0 means "no estimate";
/// the mean is then all zeros.
struct CenteringStats {
    std::vector<double> mean;
    std::uint64_t count = 0;
};

/// Incremental exact mean over all patches ever seen:
/// mean' = mean + (batch_sum - batch_count*mean)/(count + batch_count).
CenteringStats update_centering(const CenteringStats& stats, const PatchMatrix& patches);

/// Convolutional layer trained by update averaging: the dense rule runs on
/// the centered patch at every spatial position and the per-patch updates
/// are averaged into the shared kernel.
///
/// `centering` is the mean subtracted from patches during learning steps;
/// `pending` keeps accumulating and replaces `centering` at epoch
/// boundaries, so updates within an epoch see a stable estimate.
struct ConvHebbianLayer {
    WeightMatrix weights; // [F, C*kh*kw]
    std::size_t in_channels = 0;
    std::size_t kh = 0, kw = 0;
    std::size_t sh = 1, sw = 1;
    std::size_t ph = 0, pw = 0;
    HebbianRule rule;
    CenteringStats centering;
    CenteringStats pending;
    std::string name;
};

/// Mean update over all B*P centered patches of input_batch [B,C,H,W]
/// (a [C,H,W] rank-3 tensor counts as B = 1), reduced batch-major then
/// row-major spatial. Does not mutate the layer.
Tensor conv_hebbian_step(const ConvHebbianLayer& layer, const Tensor& input_batch, double eta);

/// weights' = weights + delta. Throws DivergenceError naming the layer if
/// any resulting entry is non-finite.
ConvHebbianLayer apply_update(ConvHebbianLayer layer, const Tensor& delta);

/// Pure convolution of one [C,H,W] image; no centering. Downstream
/// features are raw responses, the mean subtraction belongs to the
/// learning rule only.
Tensor layer_forward(const ConvHebbianLayer& layer, const Tensor& input);

/// Patches of one image centered by the layer's frozen mean, as a
/// [P, C*kh*kw] batch tensor.
Tensor centered_patches(const ConvHebbianLayer& layer, const Tensor& input);

} // namespace hebbnet

#endif
