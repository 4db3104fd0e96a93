#ifndef HEBBNET_ORACLE_HPP
#define HEBBNET_ORACLE_HPP

#include <cstddef>
#include <vector>

#include "hebbnet/hebbian_rules.hpp"
#include "hebbnet/tensor.hpp"

namespace hebbnet {

/// Top-k eigenpairs of an empirical covariance. Deliberately brute force;
/// test and verification use only, never on the training path.
struct EigenBasis {
    std::vector<double> eigenvalues; // descending, nonnegative
    Tensor eigenvectors;             // [k, D], orthonormal rows
    bool degenerate = false;         // zero covariance: basis is arbitrary
};

/// Eigendecomposition of (1/n) X^T X after mean-centering X, via cyclic
/// Jacobi sweeps until the off-diagonal Frobenius norm drops below
/// 1e-12 * trace. Rows of X are samples.
EigenBasis batch_pca(const Tensor& x, std::size_t k);

/// Lloyd's algorithm. init holds k distinct row indices into x used as the
/// starting centroids. Runs to assignment fixpoint or max_iter; clusters
/// that empty out keep their previous centroid.
Tensor kmeans(const Tensor& x, std::size_t k, const std::vector<std::size_t>& init,
              std::size_t max_iter);

/// Within-cluster sum of squares for the given centroids.
double kmeans_objective(const Tensor& x, const Tensor& centroids);

/// Per-component |cos(w_i, v_i)|. A zero-norm weight row yields 0.
std::vector<double> cosine_alignment(const WeightMatrix& w, const EigenBasis& basis);

} // namespace hebbnet

#endif
