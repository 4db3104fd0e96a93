#include "hebbnet/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "hebbnet/error.hpp"
#include "hebbnet/rng.hpp"

namespace hebbnet {

namespace {

constexpr std::size_t kCifarRecord = 3073;
constexpr std::size_t kCifarRecordsPerFile = 10000;
constexpr std::size_t kCifarPlane = 1024;

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    in.seekg(0, std::ios::end);
    const std::streamoff size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw DataError("short read on " + path);
    return bytes;
}

Tensor decode_cifar_pixels(const std::uint8_t* rec) {
    Tensor img({3, 32, 32});
    double* d = img.data();
    for (std::size_t i = 0; i < 3 * kCifarPlane; ++i) {
        d[i] = static_cast<double>(rec[1 + i]) / 255.0;
    }
    return img;
}

void standardize(std::vector<Example>& split, const Normalization& norm) {
    const std::size_t channels = norm.mean.size();
    for (Example& ex : split) {
        const std::size_t plane = ex.image.dim(1) * ex.image.dim(2);
        double* d = ex.image.data();
        for (std::size_t c = 0; c < channels; ++c) {
            for (std::size_t i = 0; i < plane; ++i) {
                d[c * plane + i] = (d[c * plane + i] - norm.mean[c]) / norm.stddev[c];
            }
        }
    }
}

std::uint32_t read_be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::size_t clamp_limit(std::size_t limit, std::size_t full) {
    return limit == 0 ? full : std::min(limit, full);
}

} // namespace

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

DatasetSplit load_cifar10(const std::string& dir, const SplitLimits& limits) {
    std::vector<std::string> names;
    for (int i = 1; i <= 5; ++i) names.push_back(dir + "/data_batch_" + std::to_string(i) + ".bin");
    names.push_back(dir + "/test_batch.bin");

    std::uint64_t checksum = 0xcbf29ce484222325ull;
    std::vector<std::vector<std::uint8_t>> files;
    for (const std::string& name : names) {
        std::vector<std::uint8_t> bytes = read_file(name);
        if (bytes.size() != kCifarRecord * kCifarRecordsPerFile) {
            throw DataError(name + ": expected " +
                            std::to_string(kCifarRecord * kCifarRecordsPerFile) + " bytes, got " +
                            std::to_string(bytes.size()));
        }
        checksum = fnv1a64(bytes.data(), bytes.size(), checksum);
        files.push_back(std::move(bytes));
    }

    DatasetSplit ds;
    ds.source_checksum = checksum;
    ds.num_classes = 10;
    ds.image_shape = {3, 32, 32};

    auto decode_record = [&](const std::uint8_t* rec, const std::string& name) {
        if (rec[0] > 9) {
            throw DataError(name + ": label byte " + std::to_string(rec[0]) + " out of range");
        }
        return Example{decode_cifar_pixels(rec), static_cast<int>(rec[0])};
    };

    const std::size_t train_full = 40000, val_full = 10000, test_full = 10000;
    const std::size_t n_train = clamp_limit(limits.train, train_full);
    const std::size_t n_val = clamp_limit(limits.val, val_full);
    const std::size_t n_test = clamp_limit(limits.test, test_full);

    ds.train.reserve(n_train);
    ds.val.reserve(n_val);
    ds.test.reserve(n_test);
    for (std::size_t r = 0; r < n_train; ++r) {
        const std::size_t file = r / kCifarRecordsPerFile, idx = r % kCifarRecordsPerFile;
        ds.train.push_back(decode_record(files[file].data() + idx * kCifarRecord, names[file]));
    }
    for (std::size_t r = 0; r < n_val; ++r) {
        const std::size_t abs = train_full + r;
        const std::size_t file = abs / kCifarRecordsPerFile, idx = abs % kCifarRecordsPerFile;
        ds.val.push_back(decode_record(files[file].data() + idx * kCifarRecord, names[file]));
    }
    for (std::size_t r = 0; r < n_test; ++r) {
        ds.test.push_back(decode_record(files[5].data() + r * kCifarRecord, names[5]));
    }

    // per-channel standardization from (possibly limited) train statistics
    ds.norm.mean.assign(3, 0.0);
    ds.norm.stddev.assign(3, 1.0);
    const std::size_t plane = kCifarPlane;
    const double count = static_cast<double>(ds.train.size() * plane);
    for (std::size_t c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (const Example& ex : ds.train) {
            const double* d = ex.image.data() + c * plane;
            for (std::size_t i = 0; i < plane; ++i) sum += d[i];
        }
        const double mean = sum / count;
        double var = 0.0;
        for (const Example& ex : ds.train) {
            const double* d = ex.image.data() + c * plane;
            for (std::size_t i = 0; i < plane; ++i) var += (d[i] - mean) * (d[i] - mean);
        }
        var /= count;
        ds.norm.mean[c] = mean;
        ds.norm.stddev[c] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    standardize(ds.train, ds.norm);
    standardize(ds.val, ds.norm);
    standardize(ds.test, ds.norm);
    return ds;
}

std::vector<std::uint8_t> encode_cifar10_records(const std::vector<Example>& examples,
                                                 const Normalization& norm) {
    std::vector<std::uint8_t> out;
    out.reserve(examples.size() * kCifarRecord);
    for (const Example& ex : examples) {
        out.push_back(static_cast<std::uint8_t>(ex.label));
        const double* d = ex.image.data();
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t i = 0; i < kCifarPlane; ++i) {
                const double raw = d[c * kCifarPlane + i] * norm.stddev[c] + norm.mean[c];
                const long byte = std::lround(raw * 255.0);
                out.push_back(static_cast<std::uint8_t>(std::clamp(byte, 0l, 255l)));
            }
        }
    }
    return out;
}

DatasetSplit load_mnist_idx(const std::string& dir, const SplitLimits& limits) {
    struct IdxPair {
        std::vector<std::uint8_t> images, labels;
        std::size_t count = 0, rows = 0, cols = 0;
    };
    std::uint64_t checksum = 0xcbf29ce484222325ull;
    auto load_pair = [&](const std::string& img_name, const std::string& lbl_name) {
        IdxPair p;
        p.images = read_file(dir + "/" + img_name);
        p.labels = read_file(dir + "/" + lbl_name);
        checksum = fnv1a64(p.images.data(), p.images.size(), checksum);
        checksum = fnv1a64(p.labels.data(), p.labels.size(), checksum);
        if (p.images.size() < 16 || read_be32(p.images.data()) != 0x00000803u) {
            throw DataError(img_name + ": bad image magic");
        }
        if (p.labels.size() < 8 || read_be32(p.labels.data()) != 0x00000801u) {
            throw DataError(lbl_name + ": bad label magic");
        }
        p.count = read_be32(p.images.data() + 4);
        p.rows = read_be32(p.images.data() + 8);
        p.cols = read_be32(p.images.data() + 12);
        if (read_be32(p.labels.data() + 4) != p.count) {
            throw DataError(img_name + "/" + lbl_name + ": image/label count mismatch");
        }
        if (p.images.size() != 16 + p.count * p.rows * p.cols) {
            throw DataError(img_name + ": truncated image payload");
        }
        if (p.labels.size() != 8 + p.count) {
            throw DataError(lbl_name + ": truncated label payload");
        }
        return p;
    };

    const IdxPair train = load_pair("train-images-idx3-ubyte", "train-labels-idx1-ubyte");
    const IdxPair test = load_pair("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte");
    if (test.rows != train.rows || test.cols != train.cols) {
        throw DataError("train/test image dimensions disagree");
    }

    DatasetSplit ds;
    ds.source_checksum = checksum;
    ds.num_classes = 10;
    ds.image_shape = {1, train.rows, train.cols};
    ds.norm.mean.assign(1, 0.0);
    ds.norm.stddev.assign(1, 1.0);

    auto decode = [&](const IdxPair& p, std::size_t idx) {
        const std::size_t pixels = p.rows * p.cols;
        Tensor img({1, p.rows, p.cols});
        const std::uint8_t* src = p.images.data() + 16 + idx * pixels;
        for (std::size_t i = 0; i < pixels; ++i) {
            img[i] = static_cast<double>(src[i]) / 255.0;
        }
        const int label = static_cast<int>(p.labels[8 + idx]);
        if (label > 9) throw DataError("label out of range");
        return Example{std::move(img), label};
    };

    const std::size_t val_full = train.count / 6;
    const std::size_t train_full = train.count - val_full;
    const std::size_t n_train = clamp_limit(limits.train, train_full);
    const std::size_t n_val = clamp_limit(limits.val, val_full);
    const std::size_t n_test = clamp_limit(limits.test, test.count);

    for (std::size_t r = 0; r < n_train; ++r) ds.train.push_back(decode(train, r));
    for (std::size_t r = 0; r < n_val; ++r) ds.val.push_back(decode(train, train_full + r));
    for (std::size_t r = 0; r < n_test; ++r) ds.test.push_back(decode(test, r));
    return ds;
}

std::vector<std::uint8_t> encode_idx_images(const std::vector<Example>& examples) {
    std::vector<std::uint8_t> out;
    const std::size_t rows = examples.empty() ? 0 : examples[0].image.dim(1);
    const std::size_t cols = examples.empty() ? 0 : examples[0].image.dim(2);
    write_be32(out, 0x00000803u);
    write_be32(out, static_cast<std::uint32_t>(examples.size()));
    write_be32(out, static_cast<std::uint32_t>(rows));
    write_be32(out, static_cast<std::uint32_t>(cols));
    for (const Example& ex : examples) {
        const double* d = ex.image.data();
        for (std::size_t i = 0; i < rows * cols; ++i) {
            out.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(d[i] * 255.0), 0l, 255l)));
        }
    }
    return out;
}

std::vector<std::uint8_t> encode_idx_labels(const std::vector<Example>& examples) {
    std::vector<std::uint8_t> out;
    write_be32(out, 0x00000801u);
    write_be32(out, static_cast<std::uint32_t>(examples.size()));
    for (const Example& ex : examples) out.push_back(static_cast<std::uint8_t>(ex.label));
    return out;
}

Tensor rotation_basis(std::size_t dim, std::uint64_t rotation_seed) {
    // rows = eigenvectors: modified Gram-Schmidt on a seeded Gaussian matrix
    Rng rng(rotation_seed);
    Tensor basis({dim, dim});
    for (std::size_t i = 0; i < dim * dim; ++i) basis[i] = rng.gaussian();
    for (std::size_t i = 0; i < dim; ++i) {
        double* vi = basis.row(i);
        for (std::size_t j = 0; j < i; ++j) {
            const double* vj = basis.row(j);
            double proj = 0.0;
            for (std::size_t k = 0; k < dim; ++k) proj += vi[k] * vj[k];
            for (std::size_t k = 0; k < dim; ++k) vi[k] -= proj * vj[k];
        }
        double norm = 0.0;
        for (std::size_t k = 0; k < dim; ++k) norm += vi[k] * vi[k];
        norm = std::sqrt(norm);
        if (norm < 1e-12) throw Error("degenerate rotation draw");
        for (std::size_t k = 0; k < dim; ++k) vi[k] /= norm;
    }
    return basis;
}

Tensor synth_gaussian(std::size_t dim, std::size_t n, const CovarianceSpec& cov,
                      std::uint64_t seed) {
    if (cov.eigenvalues.size() != dim) {
        throw DimensionError("synth_gaussian: eigenvalue count != dim");
    }
    for (double ev : cov.eigenvalues) {
        if (ev < 0.0 || !std::isfinite(ev)) throw Error("synth_gaussian: invalid eigenvalue");
    }
    std::vector<double> scale(dim);
    for (std::size_t i = 0; i < dim; ++i) scale[i] = std::sqrt(cov.eigenvalues[i]);

    Tensor basis; // rows are eigenvectors
    if (cov.rotation_seed) basis = rotation_basis(dim, *cov.rotation_seed);

    Rng rng(seed);
    Tensor samples({n, dim});
    std::vector<double> z(dim);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < dim; ++i) z[i] = scale[i] * rng.gaussian();
        double* x = samples.row(r);
        if (cov.rotation_seed) {
            for (std::size_t k = 0; k < dim; ++k) {
                double acc = 0.0;
                for (std::size_t i = 0; i < dim; ++i) acc += basis.at(i, k) * z[i];
                x[k] = acc;
            }
        } else {
            std::copy(z.begin(), z.end(), x);
        }
    }
    return samples;
}

std::pair<Tensor, std::vector<int>> synth_mixture(const Tensor& centroids, double sigma,
                                                  std::size_t n, std::uint64_t seed) {
    if (centroids.rank() != 2) throw DimensionError("synth_mixture expects [K, dim] centroids");
    if (sigma < 0.0) throw Error("synth_mixture: sigma must be nonnegative");
    const std::size_t k = centroids.dim(0), dim = centroids.dim(1);
    Rng rng(seed);
    Tensor samples({n, dim});
    std::vector<int> labels(n);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t comp = static_cast<std::size_t>(rng.next_below(k));
        labels[r] = static_cast<int>(comp);
        const double* c = centroids.row(comp);
        double* x = samples.row(r);
        for (std::size_t j = 0; j < dim; ++j) x[j] = c[j] + sigma * rng.gaussian();
    }
    return {std::move(samples), std::move(labels)};
}

} // namespace hebbnet
