#ifndef HEBBNET_NN_CORE_HPP
#define HEBBNET_NN_CORE_HPP

#include <cstddef>
#include <vector>

#include "hebbnet/tensor.hpp"

namespace hebbnet {

/// Full geometry of a patch extraction; kept explicit so the conversion
/// back to spatial coordinates is exact rather than inferred.
struct PatchGeometry {
    std::size_t channels = 0;
    std::size_t in_h = 0, in_w = 0;
    std::size_t kh = 0, kw = 0;
    std::size_t sh = 1, sw = 1;
    std::size_t ph = 0, pw = 0;
    std::size_t out_h = 0, out_w = 0;

    bool operator==(const PatchGeometry&) const = default;
};

/// Receptive fields of one image laid out as matrix rows.
///
/// Row p = oy*out_w + ox holds the zero-padded window at spatial position
/// (oy, ox), channel-major then row-major within the kernel window.
struct PatchMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // rows x cols, row-major
    PatchGeometry geom;

    double* row(std::size_t p) { return data.data() + p * cols; }
    const double* row(std::size_t p) const { return data.data() + p * cols; }
};

/// Output spatial size of a convolution: floor((in + 2*pad - k)/stride) + 1.
std::size_t conv_out_dim(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad);

/// im2col. input is [C,H,W]; requires H+2ph >= kh, W+2pw >= kw, strides >= 1.
PatchMatrix extract_patches(const Tensor& input, std::size_t kh, std::size_t kw,
                            std::size_t sh, std::size_t sw, std::size_t ph, std::size_t pw);

/// Shared-weight convolution as a matrix product: out[f, p] = dot(weights[f], patches[p]).
/// weights is [F, C*kh*kw]; result is [F, out_h, out_w].
Tensor conv_forward(const PatchMatrix& patches, const Tensor& weights);

/// Max pooling over [F,H,W] without padding. Windows are placed at every
/// stride offset whose origin lies inside the input; a window that
/// overhangs the border is truncated to the valid region.
Tensor max_pool(const Tensor& input, std::size_t wh, std::size_t ww,
                std::size_t sh, std::size_t sw);

/// Elementwise max(0, x).
Tensor relu(const Tensor& x);

} // namespace hebbnet

#endif
