#include "hebbnet/nn_core.hpp"

#include <algorithm>
#include <string>

#include "hebbnet/error.hpp"

namespace hebbnet {

std::size_t conv_out_dim(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
    return (in + 2 * pad - k) / stride + 1;
}

PatchMatrix extract_patches(const Tensor& input, std::size_t kh, std::size_t kw,
                            std::size_t sh, std::size_t sw, std::size_t ph, std::size_t pw) {
    if (input.rank() != 3) {
        throw DimensionError("extract_patches expects [C,H,W] input, got rank " +
                             std::to_string(input.rank()));
    }
    const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (sh < 1 || sw < 1) throw DimensionError("stride components must be >= 1");
    if (kh == 0 || kw == 0) throw DimensionError("kernel dimensions must be positive");
    if (h + 2 * ph < kh || w + 2 * pw < kw) {
        throw DimensionError("kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                             " does not fit input " + std::to_string(h) + "x" + std::to_string(w) +
                             " with padding " + std::to_string(ph) + "x" + std::to_string(pw));
    }

    PatchMatrix pm;
    pm.geom = {c, h, w, kh, kw, sh, sw, ph, pw,
               conv_out_dim(h, kh, sh, ph), conv_out_dim(w, kw, sw, pw)};
    pm.rows = pm.geom.out_h * pm.geom.out_w;
    pm.cols = c * kh * kw;
    pm.data.assign(pm.rows * pm.cols, 0.0);

    const double* in = input.data();
    for (std::size_t oy = 0; oy < pm.geom.out_h; ++oy) {
        for (std::size_t ox = 0; ox < pm.geom.out_w; ++ox) {
            double* dst = pm.row(oy * pm.geom.out_w + ox);
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double* plane = in + ch * h * w;
                for (std::size_t ky = 0; ky < kh; ++ky) {
                    // signed coordinates: padding can take us outside the input
                    const long long iy = static_cast<long long>(oy * sh + ky) -
                                         static_cast<long long>(ph);
                    for (std::size_t kx = 0; kx < kw; ++kx) {
                        const long long ix = static_cast<long long>(ox * sw + kx) -
                                             static_cast<long long>(pw);
                        double v = 0.0;
                        if (iy >= 0 && iy < static_cast<long long>(h) && ix >= 0 &&
                            ix < static_cast<long long>(w)) {
                            v = plane[static_cast<std::size_t>(iy) * w +
                                      static_cast<std::size_t>(ix)];
                        }
                        dst[(ch * kh + ky) * kw + kx] = v;
                    }
                }
            }
        }
    }
    return pm;
}

Tensor conv_forward(const PatchMatrix& patches, const Tensor& weights) {
    if (weights.rank() != 2) {
        throw DimensionError("conv_forward expects [F, C*kh*kw] weights");
    }
    const std::size_t filters = weights.dim(0);
    if (weights.dim(1) != patches.cols) {
        throw DimensionError("conv_forward: weights cols " + std::to_string(weights.dim(1)) +
                             " != patch cols " + std::to_string(patches.cols));
    }
    Tensor out({filters, patches.geom.out_h, patches.geom.out_w});
    double* o = out.data();
    const std::size_t cols = patches.cols;
    for (std::size_t f = 0; f < filters; ++f) {
        const double* wf = weights.row(f);
        for (std::size_t p = 0; p < patches.rows; ++p) {
            const double* xp = patches.row(p);
            double acc = 0.0;
            for (std::size_t d = 0; d < cols; ++d) acc += wf[d] * xp[d];
            o[f * patches.rows + p] = acc;
        }
    }
    return out;
}

Tensor max_pool(const Tensor& input, std::size_t wh, std::size_t ww,
                std::size_t sh, std::size_t sw) {
    if (input.rank() != 3) throw DimensionError("max_pool expects [F,H,W] input");
    const std::size_t f = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (wh > h || ww > w) {
        throw DimensionError("pool window " + std::to_string(wh) + "x" + std::to_string(ww) +
                             " larger than input " + std::to_string(h) + "x" + std::to_string(w));
    }
    if (sh < 1 || sw < 1) throw DimensionError("pool stride components must be >= 1");
    // ceil-mode: every stride offset starting in-bounds produces a window,
    // truncated at the border
    const std::size_t out_h = (h - wh + sh - 1) / sh + 1;
    const std::size_t out_w = (w - ww + sw - 1) / sw + 1;

    Tensor out({f, out_h, out_w});
    for (std::size_t ch = 0; ch < f; ++ch) {
        for (std::size_t oy = 0; oy < out_h; ++oy) {
            const std::size_t y0 = oy * sh;
            const std::size_t y1 = std::min(y0 + wh, h);
            for (std::size_t ox = 0; ox < out_w; ++ox) {
                const std::size_t x0 = ox * sw;
                const std::size_t x1 = std::min(x0 + ww, w);
                double m = input.at(ch, y0, x0);
                for (std::size_t y = y0; y < y1; ++y) {
                    for (std::size_t x = x0; x < x1; ++x) {
                        m = std::max(m, input.at(ch, y, x));
                    }
                }
                out.at(ch, oy, ox) = m;
            }
        }
    }
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out = x;
    double* d = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) d[i] = d[i] > 0.0 ? d[i] : 0.0;
    return out;
}

} // namespace hebbnet
