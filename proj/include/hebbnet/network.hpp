#ifndef HEBBNET_NETWORK_HPP
#define HEBBNET_NETWORK_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hebbnet/conv_hebbian.hpp"
#include "hebbnet/data_io.hpp"
#include "hebbnet/hebbian_rules.hpp"
#include "hebbnet/probe.hpp"
#include "hebbnet/tensor.hpp"

namespace hebbnet {

// ---------------------------------------------------------------------------
// Declarative network description

struct ConvHebbianDesc {
    std::size_t filters = 0;
    std::size_t kh = 0, kw = 0;
    std::size_t sh = 1, sw = 1;
    std::size_t ph = 0, pw = 0;
    HebbianRule rule;
    bool operator==(const ConvHebbianDesc&) const = default;
};
struct ReluDesc {
    bool operator==(const ReluDesc&) const = default;
};
struct MaxPoolDesc {
    std::size_t wh = 0, ww = 0, sh = 1, sw = 1;
    bool operator==(const MaxPoolDesc&) const = default;
};
struct FlattenDesc {
    bool operator==(const FlattenDesc&) const = default;
};
struct DenseHebbianDesc {
    std::size_t units = 0;
    HebbianRule rule;
    bool operator==(const DenseHebbianDesc&) const = default;
};
struct ProbeDesc {
    std::size_t num_classes = 0;
    bool operator==(const ProbeDesc&) const = default;
};

using LayerDesc =
    std::variant<ConvHebbianDesc, ReluDesc, MaxPoolDesc, FlattenDesc, DenseHebbianDesc, ProbeDesc>;

struct NetworkSpec {
    std::vector<LayerDesc> layers;
    std::uint64_t seed = 1;
};

/// Five Hebbian layers plus the final classifier, AlexNet-flavored with
/// shrinking spatial extent, sized for desktop-scale runs on 3x32x32 input.
NetworkSpec reference_spec();

/// flatten -> dense_hebbian(8, hpca/identity) -> probe(2); the linear-PCA
/// smoke configuration for synthetic data.
NetworkSpec reference_dense_spec();

/// Line-oriented spec text: one layer per line
/// (conv/relu/pool/flatten/dense/probe with key=value params),
/// '#' comments. Throws DataError on malformed input.
NetworkSpec parse_network_spec(const std::string& text);
std::string network_spec_to_text(const NetworkSpec& spec);

// ---------------------------------------------------------------------------
// Instantiated network

struct DenseHebbianLayer {
    WeightMatrix weights; // [units, D]
    HebbianRule rule;
    CenteringStats centering;
    CenteringStats pending;
    std::string name;
};
struct ReluLayer {};
struct MaxPoolLayer {
    std::size_t wh = 0, ww = 0, sh = 1, sw = 1;
};
struct FlattenLayer {};
struct ProbeLayer {
    LinearProbe probe;
};

using Layer =
    std::variant<ConvHebbianLayer, ReluLayer, MaxPoolLayer, FlattenLayer, DenseHebbianLayer, ProbeLayer>;

struct Network {
    NetworkSpec spec;
    std::vector<std::size_t> input_shape; // {C,H,W}
    std::vector<Layer> layers;
    std::vector<std::vector<std::size_t>> output_shapes; // per layer
    std::vector<std::size_t> hebbian_layers;             // layer indices, in depth order
    std::size_t probe_layer = 0;

    std::size_t num_hebbian() const { return hebbian_layers.size(); }
    const std::string& hebbian_name(std::size_t ordinal) const;
};

/// Instantiates and validates the spec on the given input shape. Weights
/// are drawn uniform +-1/sqrt(fan-in) from per-layer streams of the spec
/// seed, so any layer can later be re-initialized independently and
/// bit-identically.
Network build_network(const NetworkSpec& spec, const std::vector<std::size_t>& input_shape);

/// Output of layers [0, upto) for one [C,H,W] image; the probe layer is
/// never applied. upto == layers.size() yields the probe's input features.
Tensor forward_image(const Network& net, const Tensor& image, std::size_t upto);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 64;
    double eta_hebbian = 1e-3;
    double eta_probe = 1e-3;
    double probe_l2 = 5e-4;
    bool early_stopping = true;
    bool greedy = false;               // layer-wise phases instead of simultaneous updates
    std::size_t repr_error_sample = 512; // train images used for the per-epoch error metric
};

struct EpochMetrics {
    std::size_t epoch = 0; // 1-based
    double val_accuracy = 0.0;
    double probe_eta = 0.0;
    std::vector<double> repr_error; // one per Hebbian layer
};

struct TrainReport {
    std::vector<EpochMetrics> epochs;
    std::size_t chosen_epoch = 0;      // 1-based; argmax val accuracy, lowest on ties
    std::size_t convergence_epoch = 0; // first epoch within 2 points of the chosen one
    double test_accuracy = 0.0;
    double wall_clock_s = 0.0; // console-only; never written to report files
    TrainConfig config;
    std::vector<std::string> layer_names; // Hebbian layer names in depth order
    std::vector<std::string> deviations;  // protocol choices a reader must know about
    std::vector<std::pair<std::string, std::string>> extras;
};

/// Probe learning rate for a 1-based epoch: constant for the first half of
/// the budget, then halved every two epochs.
double probe_eta_for_epoch(double eta, std::size_t total_epochs, std::size_t epoch);

/// Epoch loop of the unsupervised stack: centering pre-pass on the first
/// epoch, per-batch simultaneous Hebbian updates (each layer learns from
/// its own captured input), inline probe SGD on terminal features,
/// validation accuracy + early stopping.
std::pair<Network, TrainReport> train_hebbian(const Network& net, const DatasetSplit& data,
                                              const TrainConfig& cfg);

/// Flattened features after the given Hebbian layer's trailing
/// relu/pool/flatten stages, one row per example. Read-only.
Tensor extract_features(const Network& net, const std::vector<Example>& examples,
                        std::size_t hebbian_ordinal);

/// Fits a fresh probe on frozen features of the given Hebbian layer with
/// early stopping on validation accuracy; reports test accuracy of the
/// chosen epoch.
std::pair<LinearProbe, TrainReport> train_probe_on_layer(const Network& net,
                                                         std::size_t hebbian_ordinal,
                                                         const DatasetSplit& data,
                                                         const TrainConfig& cfg);

/// Re-initializes Hebbian layers at/above from_ordinal (plus the probe)
/// from their seed streams and trains them; lower layers are frozen, with
/// centering untouched. from_ordinal == 0 is exactly train_hebbian on a
/// freshly built network.
std::pair<Network, TrainReport> retrain_upper_layers(const Network& net,
                                                     std::size_t from_ordinal,
                                                     const DatasetSplit& data,
                                                     const TrainConfig& cfg);

} // namespace hebbnet

#endif
