#include "hebbnet/conv_hebbian.hpp"

#include <cmath>
#include <string>

#include "hebbnet/error.hpp"

namespace hebbnet {

namespace {

void require_patch_dim(const ConvHebbianLayer& layer, std::size_t cols) {
    if (cols != layer.weights.dim()) {
        throw DimensionError("layer " + layer.name + ": patch dim " + std::to_string(cols) +
                             " != weight dim " + std::to_string(layer.weights.dim()));
    }
}

Tensor image_of_batch(const Tensor& batch, std::size_t b) {
    const std::size_t c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
    const std::size_t stride = c * h * w;
    std::vector<double> data(batch.data() + b * stride, batch.data() + (b + 1) * stride);
    return Tensor({c, h, w}, std::move(data));
}

} // namespace

CenteringStats update_centering(const CenteringStats& stats, const PatchMatrix& patches) {
    if (!stats.mean.empty() && stats.mean.size() != patches.cols) {
        throw DimensionError("update_centering: patch width " + std::to_string(patches.cols) +
                             " != stats dimension " + std::to_string(stats.mean.size()));
    }
    if (patches.rows == 0) return stats;

    CenteringStats out;
    out.mean.assign(patches.cols, 0.0);
    const double* prev = stats.mean.empty() ? out.mean.data() : stats.mean.data();

    std::vector<double> batch_sum(patches.cols, 0.0);
    for (std::size_t p = 0; p < patches.rows; ++p) {
        const double* row = patches.row(p);
        for (std::size_t j = 0; j < patches.cols; ++j) batch_sum[j] += row[j];
    }
    const double bc = static_cast<double>(patches.rows);
    const double total = static_cast<double>(stats.count) + bc;
    for (std::size_t j = 0; j < patches.cols; ++j) {
        out.mean[j] = prev[j] + (batch_sum[j] - bc * prev[j]) / total;
    }
    out.count = stats.count + patches.rows;
    return out;
}

Tensor centered_patches(const ConvHebbianLayer& layer, const Tensor& input) {
    PatchMatrix pm = extract_patches(input, layer.kh, layer.kw, layer.sh, layer.sw,
                                     layer.ph, layer.pw);
    require_patch_dim(layer, pm.cols);
    if (layer.centering.count > 0) {
        const double* mean = layer.centering.mean.data();
        for (std::size_t p = 0; p < pm.rows; ++p) {
            double* row = pm.row(p);
            for (std::size_t j = 0; j < pm.cols; ++j) row[j] -= mean[j];
        }
    }
    return Tensor({pm.rows, pm.cols}, std::move(pm.data));
}

Tensor conv_hebbian_step(const ConvHebbianLayer& layer, const Tensor& input_batch, double eta) {
    if (eta <= 0.0) throw Error("learning rate must be positive");
    const Tensor batch = input_batch.rank() == 3
                             ? input_batch.reshaped({1, input_batch.dim(0), input_batch.dim(1),
                                                     input_batch.dim(2)})
                             : input_batch;
    if (batch.rank() != 4) throw DimensionError("conv_hebbian_step expects [B,C,H,W] input");
    if (batch.dim(1) != layer.in_channels) {
        throw DimensionError("layer " + layer.name + ": input channels " +
                             std::to_string(batch.dim(1)) + " != " +
                             std::to_string(layer.in_channels));
    }
    if (!batch.all_finite()) throw Error("conv_hebbian_step: non-finite input");

    // One [B*P, D] batch of centered patches, batch-major then row-major
    // spatial, handed to the dense rule whose batch mean is exactly the
    // update-averaging scheme.
    const std::size_t b_count = batch.dim(0);
    std::vector<double> all;
    std::size_t cols = 0, total_rows = 0;
    for (std::size_t b = 0; b < b_count; ++b) {
        Tensor cp = centered_patches(layer, image_of_batch(batch, b));
        cols = cp.dim(1);
        total_rows += cp.dim(0);
        all.insert(all.end(), cp.data(), cp.data() + cp.size());
    }
    Tensor patch_batch({total_rows, cols}, std::move(all));

    switch (layer.rule.kind) {
    case RuleKind::hpca:
        return hpca_update(layer.weights, patch_batch, layer.rule.f, eta);
    case RuleKind::wta:
        return wta_update_batch(layer.weights, patch_batch, eta);
    }
    throw Error("unreachable rule kind");
}

ConvHebbianLayer apply_update(ConvHebbianLayer layer, const Tensor& delta) {
    if (delta.shape() != layer.weights.weights.shape()) {
        throw DimensionError("apply_update: delta shape mismatch for layer " + layer.name);
    }
    double* w = layer.weights.weights.data();
    const double* d = delta.data();
    for (std::size_t i = 0; i < delta.size(); ++i) {
        w[i] += d[i];
        if (!std::isfinite(w[i])) {
            throw DivergenceError("layer " + layer.name + ": non-finite weight after update");
        }
    }
    return layer;
}

Tensor layer_forward(const ConvHebbianLayer& layer, const Tensor& input) {
    PatchMatrix pm = extract_patches(input, layer.kh, layer.kw, layer.sh, layer.sw,
                                     layer.ph, layer.pw);
    require_patch_dim(layer, pm.cols);
    return conv_forward(pm, layer.weights.weights);
}

} // namespace hebbnet
