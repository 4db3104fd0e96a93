#include "hebbnet/hebbian_rules.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hebbnet/error.hpp"

namespace hebbnet {

namespace {

// Views x as a [B, D] batch; a rank-1 tensor is a single-row batch.
struct BatchView {
    std::size_t rows;
    std::size_t cols;
    const double* data;

    const double* row(std::size_t r) const { return data + r * cols; }
};

BatchView batch_view(const Tensor& x) {
    if (x.rank() == 1) return {1, x.dim(0), x.data()};
    if (x.rank() == 2) return {x.dim(0), x.dim(1), x.data()};
    throw DimensionError("expected [B,D] or [D] input, got rank " + std::to_string(x.rank()));
}

void require_dim(const WeightMatrix& w, std::size_t d, const char* op) {
    if (w.dim() != d) {
        throw DimensionError(std::string(op) + ": input dim " + std::to_string(d) +
                             " != weight dim " + std::to_string(w.dim()));
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

} // namespace

WeightMatrix::WeightMatrix(Tensor w) : weights(std::move(w)) {
    if (weights.rank() != 2) throw DimensionError("WeightMatrix expects a [N, D] tensor");
    if (!weights.all_finite()) throw DivergenceError("WeightMatrix entries must be finite");
}

Activation activate(const WeightMatrix& w, const Tensor& x_batch, Nonlinearity f) {
    const BatchView xb = batch_view(x_batch);
    require_dim(w, xb.cols, "activate");
    const std::size_t n = w.neurons();
    Activation act{Tensor({xb.rows, n}), Tensor({xb.rows, n})};
    for (std::size_t b = 0; b < xb.rows; ++b) {
        const double* x = xb.row(b);
        for (std::size_t i = 0; i < n; ++i) {
            const double y = dot(w.row(i), x, xb.cols);
            act.pre.at(b, i) = y;
            act.post.at(b, i) = apply_nonlinearity(f, y);
        }
    }
    return act;
}

Tensor hebb_plain(const WeightMatrix& w, const Tensor& x, double eta) {
    if (x.rank() != 1) throw DimensionError("hebb_plain expects a [D] input");
    require_dim(w, x.dim(0), "hebb_plain");
    if (eta <= 0.0) throw Error("learning rate must be positive");
    if (!x.all_finite()) throw Error("hebb_plain: non-finite input");

    const std::size_t n = w.neurons(), d = w.dim();
    Tensor delta({n, d});
    for (std::size_t i = 0; i < n; ++i) {
        const double y = dot(w.row(i), x.data(), d);
        double* dr = delta.row(i);
        const double g = eta * y;
        for (std::size_t j = 0; j < d; ++j) dr[j] = g * x[j];
    }
    return delta;
}

Tensor hebb_decay(const WeightMatrix& w, const Tensor& x, double eta) {
    if (x.rank() != 1) throw DimensionError("hebb_decay expects a [D] input");
    require_dim(w, x.dim(0), "hebb_decay");
    if (eta <= 0.0) throw Error("learning rate must be positive");
    if (!x.all_finite()) throw Error("hebb_decay: non-finite input");

    const std::size_t n = w.neurons(), d = w.dim();
    Tensor delta({n, d});
    for (std::size_t i = 0; i < n; ++i) {
        const double* wi = w.row(i);
        const double y = dot(wi, x.data(), d);
        double* dr = delta.row(i);
        const double g = eta * y;
        for (std::size_t j = 0; j < d; ++j) dr[j] = g * (x[j] - wi[j]);
    }
    return delta;
}

std::size_t wta_select(const WeightMatrix& w, const Tensor& x) {
    if (x.rank() != 1) throw DimensionError("wta_select expects a [D] input");
    require_dim(w, x.dim(0), "wta_select");

    std::size_t winner = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < w.neurons(); ++i) {
        const double* wi = w.row(i);
        double dist2 = 0.0;
        for (std::size_t j = 0; j < w.dim(); ++j) {
            const double diff = x[j] - wi[j];
            dist2 += diff * diff;
        }
        if (dist2 < best) { // strict: ties keep the lowest index
            best = dist2;
            winner = i;
        }
    }
    return winner;
}

Tensor wta_update(const WeightMatrix& w, const Tensor& x, double eta) {
    if (eta <= 0.0) throw Error("learning rate must be positive");
    const std::size_t winner = wta_select(w, x);
    Tensor delta({w.neurons(), w.dim()});
    const double* wr = w.row(winner);
    double* dr = delta.row(winner);
    for (std::size_t j = 0; j < w.dim(); ++j) dr[j] = eta * (x[j] - wr[j]);
    return delta;
}

Tensor wta_update_batch(const WeightMatrix& w, const Tensor& x_batch, double eta) {
    const BatchView xb = batch_view(x_batch);
    require_dim(w, xb.cols, "wta_update_batch");
    if (eta <= 0.0) throw Error("learning rate must be positive");
    if (!x_batch.all_finite()) throw Error("wta_update_batch: non-finite input");

    const std::size_t n = w.neurons(), d = w.dim();
    Tensor acc({n, d});
    Tensor xrow({d});
    for (std::size_t b = 0; b < xb.rows; ++b) {
        const double* x = xb.row(b);
        std::size_t winner = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double* wi = w.row(i);
            double dist2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = x[j] - wi[j];
                dist2 += diff * diff;
            }
            if (dist2 < best) {
                best = dist2;
                winner = i;
            }
        }
        const double* wr = w.row(winner);
        double* ar = acc.row(winner);
        for (std::size_t j = 0; j < d; ++j) ar[j] += eta * (x[j] - wr[j]);
    }
    const double inv = 1.0 / static_cast<double>(xb.rows);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] *= inv;
    return acc;
}

Tensor hpca_update(const WeightMatrix& w, const Tensor& x_batch, Nonlinearity f, double eta) {
    const BatchView xb = batch_view(x_batch);
    require_dim(w, xb.cols, "hpca_update");
    if (eta <= 0.0) throw Error("learning rate must be positive");
    if (xb.rows < 1) throw DimensionError("hpca_update: empty batch");
    if (!x_batch.all_finite()) throw Error("hpca_update: non-finite input");

    const std::size_t n = w.neurons(), d = w.dim();
    Tensor acc({n, d});
    std::vector<double> fy(n);
    std::vector<double> run(d); // sum_{j<=i} f(y_j) * w_j, built in index order

    for (std::size_t b = 0; b < xb.rows; ++b) {
        const double* x = xb.row(b);
        for (std::size_t i = 0; i < n; ++i) {
            fy[i] = apply_nonlinearity(f, dot(w.row(i), x, d));
        }
        std::fill(run.begin(), run.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* wi = w.row(i);
            const double g = eta * fy[i];
            double* ar = acc.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                run[j] += fy[i] * wi[j];
                ar[j] += g * (x[j] - run[j]);
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(xb.rows);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] *= inv;
    return acc;
}

double representation_error(const WeightMatrix& w, const Tensor& x_batch, Nonlinearity f,
                            std::size_t k) {
    const BatchView xb = batch_view(x_batch);
    require_dim(w, xb.cols, "representation_error");
    if (k < 1 || k > w.neurons()) {
        throw DimensionError("representation_error: k = " + std::to_string(k) +
                             " out of range 1.." + std::to_string(w.neurons()));
    }

    const std::size_t d = w.dim();
    std::vector<double> recon(d);
    double total = 0.0;
    for (std::size_t b = 0; b < xb.rows; ++b) {
        const double* x = xb.row(b);
        std::fill(recon.begin(), recon.end(), 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            const double* wi = w.row(i);
            const double fy = apply_nonlinearity(f, dot(wi, x, d));
            for (std::size_t j = 0; j < d; ++j) recon[j] += fy * wi[j];
        }
        double err = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = x[j] - recon[j];
            err += diff * diff;
        }
        total += err;
    }
    return total / static_cast<double>(xb.rows);
}

} // namespace hebbnet
