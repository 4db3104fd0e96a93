#ifndef HEBBNET_DATA_IO_HPP
#define HEBBNET_DATA_IO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hebbnet/tensor.hpp"

namespace hebbnet {

struct Example {
    Tensor image; // [C,H,W]
    int label = 0;
};

/// Per-channel affine normalization applied at load time;
/// raw = (value * stddev + mean) recovers the [0,1] pixel.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> stddev;
};

/// Per-split record caps; 0 keeps the full split. Truncation takes the
/// first records of each region.
struct SplitLimits {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
};

struct DatasetSplit {
    std::vector<Example> train;
    std::vector<Example> val;
    std::vector<Example> test;
    Normalization norm;
    std::uint64_t source_checksum = 0;
    std::size_t num_classes = 0;
    std::vector<std::size_t> image_shape; // {C,H,W}
};

/// Canonical CIFAR-10 binary layout: data_batch_{1..5}.bin and
/// test_batch.bin, 10000 records of 3073 bytes each (label byte, then
/// 1024 red + 1024 green + 1024 blue row-major pixels). Train is the
/// first 40000 records of the five batches, val the last 10000, test the
/// test batch. Pixels are scaled to [0,1] and standardized per channel
/// with statistics of the (possibly limited) train split.
DatasetSplit load_cifar10(const std::string& dir, const SplitLimits& limits = {});

/// Re-encodes examples to 3073-byte CIFAR-10 records, inverting the
/// normalization recorded at load time.
std::vector<std::uint8_t> encode_cifar10_records(const std::vector<Example>& examples,
                                                 const Normalization& norm);

/// Standard IDX pair files: train-images-idx3-ubyte / train-labels-idx1-ubyte
/// and t10k-*. Big-endian headers, magic 0x00000803 (images) and
/// 0x00000801 (labels). Pixels scaled to [0,1], no standardization.
/// The train file is split 5:1 into train/val (50000/10000 at full size).
DatasetSplit load_mnist_idx(const std::string& dir, const SplitLimits& limits = {});

std::vector<std::uint8_t> encode_idx_images(const std::vector<Example>& examples);
std::vector<std::uint8_t> encode_idx_labels(const std::vector<Example>& examples);

/// Covariance given by its spectrum; with rotation_seed the eigenbasis is
/// a seeded random rotation, otherwise axis-aligned.
struct CovarianceSpec {
    std::vector<double> eigenvalues;
    std::optional<std::uint64_t> rotation_seed;
};

/// n zero-mean Gaussian samples [n, dim] with the requested covariance.
Tensor synth_gaussian(std::size_t dim, std::size_t n, const CovarianceSpec& cov,
                      std::uint64_t seed);

/// Orthonormal basis [dim, dim] whose rows are the covariance eigenvectors
/// used by synth_gaussian for the same rotation seed.
Tensor rotation_basis(std::size_t dim, std::uint64_t rotation_seed);

/// Mixture of K isotropic Gaussians around the given centroids [K, dim];
/// components chosen uniformly. Returns samples and component labels.
std::pair<Tensor, std::vector<int>> synth_mixture(const Tensor& centroids, double sigma,
                                                  std::size_t n, std::uint64_t seed);

/// FNV-1a 64-bit hash, the source checksum of loaded datasets.
std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull);

} // namespace hebbnet

#endif
