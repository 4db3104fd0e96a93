#include "hebbnet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hebbnet/error.hpp"

namespace hebbnet {

namespace {

// One cyclic Jacobi pass over all (p, q) pairs of the symmetric matrix a
// (n x n, row-major), accumulating rotations into v.
void jacobi_sweep(std::vector<double>& a, std::vector<double>& v, std::size_t n) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            const double apq = a[p * n + q];
            if (apq == 0.0) continue;
            const double app = a[p * n + p];
            const double aqq = a[q * n + q];
            const double theta = (aqq - app) / (2.0 * apq);
            const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                             (std::abs(theta) + std::sqrt(theta * theta + 1.0));
            const double c = 1.0 / std::sqrt(t * t + 1.0);
            const double s = t * c;
            const double tau = s / (1.0 + c);

            a[p * n + p] = app - t * apq;
            a[q * n + q] = aqq + t * apq;
            a[p * n + q] = 0.0;
            a[q * n + p] = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                if (r != p && r != q) {
                    const double arp = a[r * n + p];
                    const double arq = a[r * n + q];
                    a[r * n + p] = a[p * n + r] = arp - s * (arq + tau * arp);
                    a[r * n + q] = a[q * n + r] = arq + s * (arp - tau * arq);
                }
                const double vrp = v[r * n + p];
                const double vrq = v[r * n + q];
                v[r * n + p] = vrp - s * (vrq + tau * vrp);
                v[r * n + q] = vrq + s * (vrp - tau * vrq);
            }
        }
    }
}

double offdiag_frobenius(const std::vector<double>& a, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) sum += a[i * n + j] * a[i * n + j];
        }
    }
    return std::sqrt(sum);
}

} // namespace

EigenBasis batch_pca(const Tensor& x, std::size_t k) {
    if (x.rank() != 2) throw DimensionError("batch_pca expects [n, D] samples");
    const std::size_t n = x.dim(0), d = x.dim(1);
    if (n < 2) throw DimensionError("batch_pca needs at least 2 samples");
    if (k < 1 || k > d) {
        throw DimensionError("batch_pca: k = " + std::to_string(k) + " out of range 1.." +
                             std::to_string(d));
    }

    std::vector<double> mean(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* xr = x.row(r);
        for (std::size_t j = 0; j < d; ++j) mean[j] += xr[j];
    }
    for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);

    std::vector<double> cov(d * d, 0.0);
    std::vector<double> xc(d);
    for (std::size_t r = 0; r < n; ++r) {
        const double* xr = x.row(r);
        for (std::size_t j = 0; j < d; ++j) xc[j] = xr[j] - mean[j];
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i; j < d; ++j) cov[i * d + j] += xc[i] * xc[j];
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            cov[i * d + j] /= static_cast<double>(n);
            cov[j * d + i] = cov[i * d + j];
        }
    }

    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) trace += cov[i * d + i];

    EigenBasis basis;
    basis.eigenvectors = Tensor({k, d});

    std::vector<double> v(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;

    if (trace <= 0.0) {
        // all rows identical: zero covariance, report an arbitrary orthonormal basis
        basis.degenerate = true;
        basis.eigenvalues.assign(k, 0.0);
        for (std::size_t i = 0; i < k; ++i) basis.eigenvectors.at(i, i) = 1.0;
        return basis;
    }

    std::vector<double> a = cov;
    const double tol = 1e-12 * trace;
    for (std::size_t sweep = 0; sweep < 64 && offdiag_frobenius(a, d) >= tol; ++sweep) {
        jacobi_sweep(a, v, d);
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> evals(d);
    for (std::size_t i = 0; i < d; ++i) evals[i] = a[i * d + i];
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return evals[l] > evals[r]; });

    basis.eigenvalues.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t col = order[i];
        basis.eigenvalues[i] = std::max(0.0, evals[col]);
        double* row = basis.eigenvectors.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] = v[j * d + col];
        // sign convention: largest-magnitude entry positive
        std::size_t arg = 0;
        for (std::size_t j = 1; j < d; ++j) {
            if (std::abs(row[j]) > std::abs(row[arg])) arg = j;
        }
        if (row[arg] < 0.0) {
            for (std::size_t j = 0; j < d; ++j) row[j] = -row[j];
        }
    }
    return basis;
}

Tensor kmeans(const Tensor& x, std::size_t k, const std::vector<std::size_t>& init,
              std::size_t max_iter) {
    if (x.rank() != 2) throw DimensionError("kmeans expects [n, D] samples");
    const std::size_t n = x.dim(0), d = x.dim(1);
    if (k > n) throw DimensionError("kmeans: k exceeds sample count");
    if (init.size() != k) throw DimensionError("kmeans: init must hold k indices");
    for (std::size_t i = 0; i < k; ++i) {
        if (init[i] >= n) throw DimensionError("kmeans: init index out of range");
        for (std::size_t j = i + 1; j < k; ++j) {
            if (init[i] == init[j]) throw DimensionError("kmeans: init indices must be distinct");
        }
    }

    Tensor centroids({k, d});
    for (std::size_t i = 0; i < k; ++i) {
        const double* src = x.row(init[i]);
        std::copy(src, src + d, centroids.row(i));
    }

    std::vector<std::size_t> assign(n, k); // k = unassigned sentinel
    std::vector<double> sums(k * d);
    std::vector<std::size_t> counts(k);

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (std::size_t r = 0; r < n; ++r) {
            const double* xr = x.row(r);
            std::size_t best = 0;
            double best_dist = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double* cc = centroids.row(c);
                double dist = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double diff = xr[j] - cc[j];
                    dist += diff * diff;
                }
                if (dist < best_dist) {
                    best_dist = dist;
                    best = c;
                }
            }
            if (assign[r] != best) {
                assign[r] = best;
                changed = true;
            }
        }
        if (!changed) break;

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0u);
        for (std::size_t r = 0; r < n; ++r) {
            const double* xr = x.row(r);
            double* s = sums.data() + assign[r] * d;
            for (std::size_t j = 0; j < d; ++j) s[j] += xr[j];
            ++counts[assign[r]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue; // empty cluster keeps its centroid
            double* cc = centroids.row(c);
            for (std::size_t j = 0; j < d; ++j) {
                cc[j] = sums[c * d + j] / static_cast<double>(counts[c]);
            }
        }
    }
    return centroids;
}

double kmeans_objective(const Tensor& x, const Tensor& centroids) {
    const std::size_t n = x.dim(0), d = x.dim(1), k = centroids.dim(0);
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double* xr = x.row(r);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            const double* cc = centroids.row(c);
            double dist = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = xr[j] - cc[j];
                dist += diff * diff;
            }
            best = std::min(best, dist);
        }
        total += best;
    }
    return total;
}

std::vector<double> cosine_alignment(const WeightMatrix& w, const EigenBasis& basis) {
    if (w.neurons() != basis.eigenvectors.dim(0) || w.dim() != basis.eigenvectors.dim(1)) {
        throw DimensionError("cosine_alignment: component count or dimension mismatch");
    }
    const std::size_t n = w.neurons(), d = w.dim();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* wi = w.row(i);
        const double* vi = basis.eigenvectors.row(i);
        double dot = 0.0, wn = 0.0, vn = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            dot += wi[j] * vi[j];
            wn += wi[j] * wi[j];
            vn += vi[j] * vi[j];
        }
        if (wn == 0.0 || vn == 0.0) continue;
        out[i] = std::abs(dot) / (std::sqrt(wn) * std::sqrt(vn));
    }
    return out;
}

} // namespace hebbnet
