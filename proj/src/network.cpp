#include "hebbnet/network.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hebbnet/error.hpp"
#include "hebbnet/rng.hpp"

namespace hebbnet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Seed streams. Layer/probe init and shuffles draw from disjoint
// substreams of the spec seed so any layer can be re-initialized alone.
std::uint64_t layer_init_seed(std::uint64_t seed, std::size_t ordinal) {
    return derive_seed(derive_seed(seed, 1), ordinal);
}
std::uint64_t probe_init_seed(std::uint64_t seed) {
    return derive_seed(seed, 2);
}
std::uint64_t epoch_shuffle_seed(std::uint64_t seed, std::size_t epoch) {
    return derive_seed(derive_seed(seed, 3), epoch);
}
std::uint64_t probe_layer_seed(std::uint64_t seed, std::size_t ordinal) {
    return derive_seed(derive_seed(seed, 4), ordinal);
}
std::uint64_t probe_shuffle_seed(std::uint64_t seed, std::size_t ordinal, std::size_t epoch) {
    return derive_seed(derive_seed(derive_seed(seed, 5), ordinal), epoch);
}

WeightMatrix init_weights(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    const double a = 1.0 / std::sqrt(static_cast<double>(cols));
    Tensor w({rows, cols});
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-a, a);
    return WeightMatrix(std::move(w));
}

LinearProbe init_probe(std::size_t classes, std::size_t feat_dim, double l2, std::uint64_t seed) {
    Rng rng(seed);
    const double a = 1.0 / std::sqrt(static_cast<double>(feat_dim));
    LinearProbe p = make_probe(classes, feat_dim, l2);
    for (std::size_t i = 0; i < p.weights.size(); ++i) p.weights[i] = rng.uniform(-a, a);
    return p;
}

Tensor dense_forward(const DenseHebbianLayer& layer, const Tensor& x) {
    const std::size_t n = layer.weights.neurons(), d = layer.weights.dim();
    Tensor out({n});
    const double* xv = x.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double* wi = layer.weights.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += wi[j] * xv[j];
        out[i] = acc;
    }
    return out;
}

std::string shape_str(const std::vector<std::size_t>& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out;
}

std::vector<std::string> base_deviations() {
    return {
        "probe optimizer: plain SGD with L2 (no momentum, no Nesterov, no dropout)",
        "probe learning rate: constant for the first half of the epoch budget, then halved every 2 epochs",
    };
}

} // namespace

const std::string& Network::hebbian_name(std::size_t ordinal) const {
    const Layer& layer = layers[hebbian_layers[ordinal]];
    if (const auto* conv = std::get_if<ConvHebbianLayer>(&layer)) return conv->name;
    return std::get<DenseHebbianLayer>(layer).name;
}

NetworkSpec reference_spec() {
    NetworkSpec spec;
    const HebbianRule rule{RuleKind::hpca, Nonlinearity::relu};
    spec.layers = {
        ConvHebbianDesc{32, 5, 5, 1, 1, 2, 2, rule},
        ReluDesc{},
        MaxPoolDesc{2, 2, 2, 2},
        ConvHebbianDesc{64, 3, 3, 1, 1, 1, 1, rule},
        ReluDesc{},
        MaxPoolDesc{2, 2, 2, 2},
        ConvHebbianDesc{96, 3, 3, 1, 1, 1, 1, rule},
        ReluDesc{},
        ConvHebbianDesc{128, 3, 3, 1, 1, 1, 1, rule},
        ReluDesc{},
        MaxPoolDesc{2, 2, 2, 2},
        FlattenDesc{},
        DenseHebbianDesc{300, rule},
        ReluDesc{},
        ProbeDesc{10},
    };
    return spec;
}

NetworkSpec reference_dense_spec() {
    NetworkSpec spec;
    spec.layers = {
        FlattenDesc{},
        DenseHebbianDesc{8, HebbianRule{RuleKind::hpca, Nonlinearity::identity}},
        ProbeDesc{2},
    };
    return spec;
}

Network build_network(const NetworkSpec& spec, const std::vector<std::size_t>& input_shape) {
    if (input_shape.size() != 3) throw DimensionError("build_network expects a [C,H,W] input shape");
    Network net;
    net.spec = spec;
    net.input_shape = input_shape;

    std::vector<std::size_t> shape = input_shape;
    bool saw_probe = false;
    std::size_t conv_count = 0, dense_count = 0, learnable = 0;

    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const std::string where = "layer " + std::to_string(i);
        if (saw_probe) throw DimensionError(where + ": probe must be the terminal layer");
        std::visit(
            overloaded{
                [&](const ConvHebbianDesc& d) {
                    if (shape.size() != 3) {
                        throw DimensionError(where + " (conv): needs [C,H,W] input, got " +
                                             shape_str(shape));
                    }
                    if (d.filters == 0) throw DimensionError(where + ": filters must be positive");
                    if (shape[1] + 2 * d.ph < d.kh || shape[2] + 2 * d.pw < d.kw) {
                        throw DimensionError(where + " (conv): kernel does not fit input " +
                                             shape_str(shape));
                    }
                    ConvHebbianLayer layer;
                    layer.in_channels = shape[0];
                    layer.kh = d.kh;
                    layer.kw = d.kw;
                    layer.sh = d.sh;
                    layer.sw = d.sw;
                    layer.ph = d.ph;
                    layer.pw = d.pw;
                    layer.rule = d.rule;
                    const std::size_t fan_in = shape[0] * d.kh * d.kw;
                    layer.weights =
                        init_weights(d.filters, fan_in, layer_init_seed(spec.seed, learnable));
                    layer.centering.mean.assign(fan_in, 0.0);
                    layer.pending.mean.assign(fan_in, 0.0);
                    layer.name = "conv" + std::to_string(++conv_count + dense_count);
                    net.hebbian_layers.push_back(i);
                    ++learnable;
                    shape = {d.filters, conv_out_dim(shape[1], d.kh, d.sh, d.ph),
                             conv_out_dim(shape[2], d.kw, d.sw, d.pw)};
                    net.layers.push_back(std::move(layer));
                },
                [&](const ReluDesc&) { net.layers.push_back(ReluLayer{}); },
                [&](const MaxPoolDesc& d) {
                    if (shape.size() != 3) {
                        throw DimensionError(where + " (pool): needs [C,H,W] input");
                    }
                    if (d.wh > shape[1] || d.ww > shape[2]) {
                        throw DimensionError(where + " (pool): window larger than input " +
                                             shape_str(shape));
                    }
                    net.layers.push_back(MaxPoolLayer{d.wh, d.ww, d.sh, d.sw});
                    shape = {shape[0], (shape[1] - d.wh + d.sh - 1) / d.sh + 1,
                             (shape[2] - d.ww + d.sw - 1) / d.sw + 1};
                },
                [&](const FlattenDesc&) {
                    net.layers.push_back(FlattenLayer{});
                    shape = {shape_product(shape)};
                },
                [&](const DenseHebbianDesc& d) {
                    if (shape.size() != 1) {
                        throw DimensionError(where + " (dense): needs flattened input, got " +
                                             shape_str(shape));
                    }
                    if (d.units == 0) throw DimensionError(where + ": units must be positive");
                    DenseHebbianLayer layer;
                    layer.rule = d.rule;
                    layer.weights =
                        init_weights(d.units, shape[0], layer_init_seed(spec.seed, learnable));
                    layer.centering.mean.assign(shape[0], 0.0);
                    layer.pending.mean.assign(shape[0], 0.0);
                    layer.name = "dense" + std::to_string(conv_count + ++dense_count);
                    net.hebbian_layers.push_back(i);
                    ++learnable;
                    shape = {d.units};
                    net.layers.push_back(std::move(layer));
                },
                [&](const ProbeDesc& d) {
                    if (shape.size() != 1) {
                        throw DimensionError(where + " (probe): needs flattened input, got " +
                                             shape_str(shape));
                    }
                    if (d.num_classes == 0) throw DimensionError(where + ": classes must be positive");
                    ProbeLayer layer;
                    layer.probe =
                        init_probe(d.num_classes, shape[0], 0.0, probe_init_seed(spec.seed));
                    net.probe_layer = i;
                    saw_probe = true;
                    shape = {d.num_classes};
                    net.layers.push_back(std::move(layer));
                },
            },
            spec.layers[i]);
        net.output_shapes.push_back(shape);
    }
    if (!saw_probe) throw DimensionError("network spec needs exactly one terminal probe");
    return net;
}

Tensor forward_image(const Network& net, const Tensor& image, std::size_t upto) {
    if (upto > net.layers.size()) throw DimensionError("forward_image: layer index out of range");
    Tensor x = image;
    for (std::size_t i = 0; i < upto; ++i) {
        const Layer& layer = net.layers[i];
        if (std::holds_alternative<ProbeLayer>(layer)) break;
        x = std::visit(overloaded{
                           [&](const ConvHebbianLayer& l) { return layer_forward(l, x); },
                           [&](const ReluLayer&) { return relu(x); },
                           [&](const MaxPoolLayer& l) {
                               return max_pool(x, l.wh, l.ww, l.sh, l.sw);
                           },
                           [&](const FlattenLayer&) { return x.reshaped({x.size()}); },
                           [&](const DenseHebbianLayer& l) { return dense_forward(l, x); },
                           [&](const ProbeLayer&) { return x; },
                       },
                       layer);
    }
    return x;
}

double probe_eta_for_epoch(double eta, std::size_t total_epochs, std::size_t epoch) {
    const std::size_t hold = std::max<std::size_t>(1, total_epochs / 2);
    if (epoch <= hold) return eta;
    const std::size_t halvings = (epoch - hold + 1) / 2;
    return eta * std::pow(0.5, static_cast<double>(halvings));
}

namespace {

// ---------------------------------------------------------------------------
// Training driver shared by train_hebbian / retrain_upper_layers.

struct HebbianRef {
    WeightMatrix* weights = nullptr;
    HebbianRule rule;
    CenteringStats* centering = nullptr;
    CenteringStats* pending = nullptr;
    bool is_conv = false;
    const ConvHebbianLayer* conv = nullptr; // geometry access when is_conv
    std::string name;
};

HebbianRef hebbian_ref(Network& net, std::size_t ordinal) {
    Layer& layer = net.layers[net.hebbian_layers[ordinal]];
    HebbianRef ref;
    if (auto* conv = std::get_if<ConvHebbianLayer>(&layer)) {
        ref.weights = &conv->weights;
        ref.rule = conv->rule;
        ref.centering = &conv->centering;
        ref.pending = &conv->pending;
        ref.is_conv = true;
        ref.conv = conv;
        ref.name = conv->name;
    } else {
        auto& dense = std::get<DenseHebbianLayer>(layer);
        ref.weights = &dense.weights;
        ref.rule = dense.rule;
        ref.centering = &dense.centering;
        ref.pending = &dense.pending;
        ref.name = dense.name;
    }
    return ref;
}

Tensor rule_update(const WeightMatrix& w, const Tensor& centered_rows, const HebbianRule& rule,
                   double eta) {
    if (rule.kind == RuleKind::hpca) return hpca_update(w, centered_rows, rule.f, eta);
    return wta_update_batch(w, centered_rows, eta);
}

// Uncentered input rows of one Hebbian layer for a batch of its inputs:
// conv layers see the B*P patch rows, dense layers the B input vectors.
Tensor layer_input_rows(const HebbianRef& ref, const std::vector<Tensor>& inputs) {
    if (ref.is_conv) {
        std::vector<double> all;
        std::size_t cols = 0, rows = 0;
        for (const Tensor& in : inputs) {
            PatchMatrix pm = extract_patches(in, ref.conv->kh, ref.conv->kw, ref.conv->sh,
                                             ref.conv->sw, ref.conv->ph, ref.conv->pw);
            cols = pm.cols;
            rows += pm.rows;
            all.insert(all.end(), pm.data.begin(), pm.data.end());
        }
        return Tensor({rows, cols}, std::move(all));
    }
    const std::size_t d = inputs[0].size();
    Tensor rows({inputs.size(), d});
    for (std::size_t b = 0; b < inputs.size(); ++b) {
        std::copy(inputs[b].data(), inputs[b].data() + d, rows.row(b));
    }
    return rows;
}

struct TrainState {
    Network net;
    std::vector<std::size_t> trainable; // hebbian ordinals being updated
    std::size_t start_layer = 0;        // forward starts here (prefix cached below)
    std::vector<Tensor> cache_train, cache_val, cache_test;
    std::vector<int> y_train, y_val, y_test;
    LinearProbe probe;

    const Tensor& input_of(const std::vector<Tensor>& cache, const std::vector<Example>& split,
                           std::size_t i) const {
        return cache.empty() ? split[i].image : cache[i];
    }
};

// Forward from the cached boundary, capturing the inputs of the trainable
// Hebbian layers and the probe input.
struct Capture {
    std::vector<std::vector<Tensor>> hebbian_inputs; // per trainable ordinal
    std::vector<Tensor> terminal;
};

Capture forward_capture(const TrainState& st, const std::vector<const Tensor*>& batch) {
    Capture cap;
    cap.hebbian_inputs.resize(st.trainable.size());
    cap.terminal.reserve(batch.size());
    for (const Tensor* img : batch) {
        Tensor x = *img;
        for (std::size_t i = st.start_layer; i < st.net.layers.size(); ++i) {
            const Layer& layer = st.net.layers[i];
            if (std::holds_alternative<ProbeLayer>(layer)) break;
            for (std::size_t t = 0; t < st.trainable.size(); ++t) {
                if (st.net.hebbian_layers[st.trainable[t]] == i) {
                    cap.hebbian_inputs[t].push_back(x);
                    break;
                }
            }
            x = std::visit(overloaded{
                               [&](const ConvHebbianLayer& l) { return layer_forward(l, x); },
                               [&](const ReluLayer&) { return relu(x); },
                               [&](const MaxPoolLayer& l) {
                                   return max_pool(x, l.wh, l.ww, l.sh, l.sw);
                               },
                               [&](const FlattenLayer&) { return x.reshaped({x.size()}); },
                               [&](const DenseHebbianLayer& l) { return dense_forward(l, x); },
                               [&](const ProbeLayer&) { return x; },
                           },
                           layer);
        }
        cap.terminal.push_back(std::move(x));
    }
    return cap;
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
    const std::size_t d = rows[0].size();
    Tensor out({rows.size(), d});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i].data(), rows[i].data() + d, out.row(i));
    }
    return out;
}

double split_accuracy(const TrainState& st, const std::vector<Tensor>& cache,
                      const std::vector<Example>& split, const std::vector<int>& labels) {
    if (split.empty() && cache.empty()) return 0.0;
    const std::size_t n = cache.empty() ? split.size() : cache.size();
    constexpr std::size_t kChunk = 256;
    std::size_t correct_total = 0;
    for (std::size_t base = 0; base < n; base += kChunk) {
        const std::size_t count = std::min(kChunk, n - base);
        std::vector<const Tensor*> batch(count);
        for (std::size_t i = 0; i < count; ++i) batch[i] = &st.input_of(cache, split, base + i);
        Capture cap = forward_capture(st, batch);
        const Tensor feats = stack_rows(cap.terminal);
        const Tensor logits = probe_forward(st.probe, feats);
        for (std::size_t r = 0; r < count; ++r) {
            const double* row = logits.row(r);
            std::size_t arg = 0;
            for (std::size_t c = 1; c < st.probe.num_classes(); ++c) {
                if (row[c] > row[arg]) arg = c;
            }
            if (static_cast<std::size_t>(labels[base + r]) == arg) ++correct_total;
        }
    }
    return static_cast<double>(correct_total) / static_cast<double>(n);
}

} // namespace

std::pair<Network, TrainReport> train_hebbian(const Network& net, const DatasetSplit& data,
                                              const TrainConfig& cfg) {
    // retrain from ordinal 0 re-initializes everything, so delegating keeps
    // the two paths identical by construction
    return retrain_upper_layers(net, 0, data, cfg);
}

std::pair<Network, TrainReport> retrain_upper_layers(const Network& original,
                                                     std::size_t from_ordinal,
                                                     const DatasetSplit& data,
                                                     const TrainConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    if (original.num_hebbian() == 0) throw Error("network has no Hebbian layers to train");
    if (from_ordinal >= original.num_hebbian()) {
        throw DimensionError("retrain: layer ordinal " + std::to_string(from_ordinal) +
                             " out of range 0.." + std::to_string(original.num_hebbian() - 1));
    }
    if (data.train.empty()) throw Error("training split is empty");
    if (cfg.epochs == 0 || cfg.batch_size == 0) throw Error("epochs and batch size must be positive");
    if (cfg.eta_hebbian <= 0.0 || cfg.eta_probe <= 0.0) throw Error("learning rates must be positive");

    TrainState st;
    st.net = original;

    // re-initialize everything at/above from_ordinal plus the probe
    for (std::size_t ord = from_ordinal; ord < st.net.num_hebbian(); ++ord) {
        HebbianRef ref = hebbian_ref(st.net, ord);
        const std::size_t rows = ref.weights->neurons(), cols = ref.weights->dim();
        *ref.weights = init_weights(rows, cols, layer_init_seed(st.net.spec.seed, ord));
        ref.centering->mean.assign(cols, 0.0);
        ref.centering->count = 0;
        ref.pending->mean.assign(cols, 0.0);
        ref.pending->count = 0;
        st.trainable.push_back(ord);
    }
    {
        auto& probe_layer = std::get<ProbeLayer>(st.net.layers[st.net.probe_layer]);
        const std::size_t classes = probe_layer.probe.num_classes();
        const std::size_t feat = probe_layer.probe.feat_dim();
        probe_layer.probe = init_probe(classes, feat, cfg.probe_l2, probe_init_seed(st.net.spec.seed));
        st.probe = probe_layer.probe;
    }

    st.y_train.reserve(data.train.size());
    for (const Example& ex : data.train) st.y_train.push_back(ex.label);
    for (const Example& ex : data.val) st.y_val.push_back(ex.label);
    for (const Example& ex : data.test) st.y_test.push_back(ex.label);

    // cache the frozen prefix once; everything below from_ordinal is static
    st.start_layer = from_ordinal == 0 ? 0 : st.net.hebbian_layers[from_ordinal];
    if (st.start_layer > 0) {
        auto cache_split = [&](const std::vector<Example>& split, std::vector<Tensor>& out) {
            out.reserve(split.size());
            for (const Example& ex : split) {
                out.push_back(forward_image(st.net, ex.image, st.start_layer));
            }
        };
        cache_split(data.train, st.cache_train);
        cache_split(data.val, st.cache_val);
        cache_split(data.test, st.cache_test);
    }

    TrainReport report;
    report.config = cfg;
    report.deviations = base_deviations();
    for (std::size_t ord = 0; ord < st.net.num_hebbian(); ++ord) {
        report.layer_names.push_back(st.net.hebbian_name(ord));
    }
    report.extras.emplace_back("trained_from_ordinal", std::to_string(from_ordinal));

    const std::size_t n_train = data.train.size();
    auto batch_of = [&](const std::vector<std::size_t>& order, std::size_t base,
                        std::size_t count) {
        std::vector<const Tensor*> batch(count);
        for (std::size_t i = 0; i < count; ++i) {
            batch[i] = &st.input_of(st.cache_train, data.train, order[base + i]);
        }
        return batch;
    };

    std::vector<std::size_t> phase_order; // greedy: one Hebbian phase per trainable layer
    if (cfg.greedy) {
        report.extras.emplace_back("greedy_phases", std::to_string(st.trainable.size()));
    }

    // Representation error of frozen layers never changes; measure once.
    const std::size_t repr_n = std::min(cfg.repr_error_sample, n_train);
    std::vector<double> frozen_repr(from_ordinal, 0.0);
    if (from_ordinal > 0 && repr_n > 0) {
        for (std::size_t ord = 0; ord < from_ordinal; ++ord) {
            HebbianRef ref = hebbian_ref(st.net, ord);
            const std::size_t layer_idx = st.net.hebbian_layers[ord];
            std::vector<Tensor> inputs;
            inputs.reserve(repr_n);
            for (std::size_t i = 0; i < repr_n; ++i) {
                inputs.push_back(forward_image(st.net, data.train[i].image, layer_idx));
            }
            Tensor rows = layer_input_rows(ref, inputs);
            rows = center_rows(*ref.centering, std::move(rows));
            const Nonlinearity f =
                ref.rule.kind == RuleKind::hpca ? ref.rule.f : Nonlinearity::identity;
            frozen_repr[ord] =
                representation_error(*ref.weights, rows, f, ref.weights->neurons());
        }
    }

    auto measure_repr = [&]() {
        std::vector<double> errors(st.net.num_hebbian(), 0.0);
        for (std::size_t ord = 0; ord < from_ordinal; ++ord) errors[ord] = frozen_repr[ord];
        if (repr_n == 0) return errors;
        std::vector<const Tensor*> sample(repr_n);
        for (std::size_t i = 0; i < repr_n; ++i) {
            sample[i] = &st.input_of(st.cache_train, data.train, i);
        }
        Capture cap = forward_capture(st, sample);
        for (std::size_t t = 0; t < st.trainable.size(); ++t) {
            HebbianRef ref = hebbian_ref(st.net, st.trainable[t]);
            Tensor rows = layer_input_rows(ref, cap.hebbian_inputs[t]);
            rows = center_rows(*ref.centering, std::move(rows));
            const Nonlinearity f =
                ref.rule.kind == RuleKind::hpca ? ref.rule.f : Nonlinearity::identity;
            errors[st.trainable[t]] =
                representation_error(*ref.weights, rows, f, ref.weights->neurons());
        }
        return errors;
    };

    // centering pre-pass: one pass over the train split accumulating the
    // patch mean of every trainable layer, frozen before the first update
    auto centering_prepass = [&](const std::vector<std::size_t>& ordinals) {
        std::vector<std::size_t> keep = st.trainable;
        st.trainable = ordinals;
        std::vector<std::size_t> order(n_train);
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t base = 0; base < n_train; base += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, n_train - base);
            Capture cap = forward_capture(st, batch_of(order, base, count));
            for (std::size_t t = 0; t < ordinals.size(); ++t) {
                HebbianRef ref = hebbian_ref(st.net, ordinals[t]);
                const Tensor rows = layer_input_rows(ref, cap.hebbian_inputs[t]);
                *ref.pending = update_centering(*ref.pending, rows);
            }
        }
        for (std::size_t ord : ordinals) {
            HebbianRef ref = hebbian_ref(st.net, ord);
            *ref.centering = *ref.pending;
        }
        st.trainable = keep;
    };

    // one training epoch over shuffled mini-batches; `update_ordinals`
    // selects which Hebbian layers learn and `train_probe` gates the
    // inline probe step
    auto run_epoch = [&](std::size_t epoch, const std::vector<std::size_t>& update_ordinals,
                         bool train_probe) {
        std::vector<std::size_t> order(n_train);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(epoch_shuffle_seed(st.net.spec.seed, epoch));
        shuffle_rng.shuffle(order);
        const double probe_eta = probe_eta_for_epoch(cfg.eta_probe, cfg.epochs, epoch);

        for (std::size_t base = 0; base < n_train; base += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, n_train - base);
            Capture cap = forward_capture(st, batch_of(order, base, count));

            // compute all updates from the captured (pre-update) inputs,
            // then apply: simultaneous local updates
            std::vector<std::pair<std::size_t, Tensor>> deltas;
            for (std::size_t t = 0; t < st.trainable.size(); ++t) {
                const std::size_t ord = st.trainable[t];
                if (std::find(update_ordinals.begin(), update_ordinals.end(), ord) ==
                    update_ordinals.end()) {
                    continue;
                }
                HebbianRef ref = hebbian_ref(st.net, ord);
                Tensor rows = layer_input_rows(ref, cap.hebbian_inputs[t]);
                *ref.pending = update_centering(*ref.pending, rows);
                rows = center_rows(*ref.centering, std::move(rows));
                deltas.emplace_back(ord, rule_update(*ref.weights, rows, ref.rule,
                                                     cfg.eta_hebbian));
            }
            for (auto& [ord, delta] : deltas) {
                HebbianRef ref = hebbian_ref(st.net, ord);
                double* w = ref.weights->weights.data();
                const double* d = delta.data();
                for (std::size_t i = 0; i < delta.size(); ++i) {
                    w[i] += d[i];
                    if (!std::isfinite(w[i])) {
                        throw DivergenceError("layer " + ref.name + " diverged at epoch " +
                                              std::to_string(epoch) + ", batch " +
                                              std::to_string(base / cfg.batch_size));
                    }
                }
            }

            if (train_probe) {
                const Tensor feats = stack_rows(cap.terminal);
                std::vector<int> labels(count);
                for (std::size_t i = 0; i < count; ++i) {
                    labels[i] = st.y_train[order[base + i]];
                }
                st.probe = probe_sgd_step(st.probe, feats, labels, probe_eta);
            }
        }
        return probe_eta;
    };

    auto refresh_centering = [&](const std::vector<std::size_t>& ordinals) {
        for (std::size_t ord : ordinals) {
            HebbianRef ref = hebbian_ref(st.net, ord);
            *ref.centering = *ref.pending;
        }
    };

    if (cfg.greedy) {
        // layer-wise phases: each trainable Hebbian layer gets the full
        // epoch budget alone, then the probe trains on frozen features
        for (std::size_t ord : st.trainable) {
            centering_prepass({ord});
            for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
                run_epoch(epoch, {ord}, false);
                refresh_centering({ord});
            }
        }
    } else {
        centering_prepass(st.trainable);
    }

    const std::vector<std::size_t> epoch_updates = cfg.greedy ? std::vector<std::size_t>{}
                                                              : st.trainable;
    double best_val = -1.0;
    std::size_t best_epoch = 0;
    std::vector<Layer> best_layers;
    LinearProbe best_probe;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double probe_eta = run_epoch(epoch, epoch_updates, true);

        EpochMetrics metrics;
        metrics.epoch = epoch;
        metrics.probe_eta = probe_eta;
        metrics.repr_error = measure_repr();
        metrics.val_accuracy = st.y_val.empty()
                                   ? 0.0
                                   : split_accuracy(st, st.cache_val, data.val, st.y_val);
        report.epochs.push_back(metrics);

        if (metrics.val_accuracy > best_val) {
            best_val = metrics.val_accuracy;
            best_epoch = epoch;
            best_layers = st.net.layers;
            best_probe = st.probe;
        }
        if (!cfg.greedy) refresh_centering(st.trainable);
    }

    if (cfg.early_stopping && best_epoch > 0) {
        st.net.layers = std::move(best_layers);
        st.probe = std::move(best_probe);
        report.chosen_epoch = best_epoch;
    } else {
        report.chosen_epoch = cfg.epochs;
    }
    std::get<ProbeLayer>(st.net.layers[st.net.probe_layer]).probe = st.probe;

    const double chosen_val = report.epochs[report.chosen_epoch - 1].val_accuracy;
    for (std::size_t e = 0; e < report.epochs.size(); ++e) {
        if (report.epochs[e].val_accuracy >= chosen_val - 0.02) {
            report.convergence_epoch = e + 1;
            break;
        }
    }
    report.test_accuracy =
        st.y_test.empty() ? 0.0 : split_accuracy(st, st.cache_test, data.test, st.y_test);
    report.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(st.net), std::move(report)};
}

Tensor extract_features(const Network& net, const std::vector<Example>& examples,
                        std::size_t hebbian_ordinal) {
    if (hebbian_ordinal >= net.num_hebbian()) {
        throw DimensionError("extract_features: layer ordinal " +
                             std::to_string(hebbian_ordinal) + " out of range");
    }
    std::size_t end = net.hebbian_layers[hebbian_ordinal] + 1;
    while (end < net.layers.size() &&
           (std::holds_alternative<ReluLayer>(net.layers[end]) ||
            std::holds_alternative<MaxPoolLayer>(net.layers[end]) ||
            std::holds_alternative<FlattenLayer>(net.layers[end]))) {
        ++end;
    }
    const std::size_t feat_dim = shape_product(net.output_shapes[end - 1]);
    Tensor out({examples.size(), feat_dim});
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const Tensor f = forward_image(net, examples[i].image, end);
        std::copy(f.data(), f.data() + feat_dim, out.row(i));
    }
    return out;
}

std::pair<LinearProbe, TrainReport> train_probe_on_layer(const Network& net,
                                                         std::size_t hebbian_ordinal,
                                                         const DatasetSplit& data,
                                                         const TrainConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    if (data.train.empty()) throw Error("training split is empty");

    const Tensor f_train = extract_features(net, data.train, hebbian_ordinal);
    const Tensor f_val = data.val.empty() ? Tensor() : extract_features(net, data.val, hebbian_ordinal);
    const Tensor f_test =
        data.test.empty() ? Tensor() : extract_features(net, data.test, hebbian_ordinal);

    std::vector<int> y_train, y_val, y_test;
    for (const Example& ex : data.train) y_train.push_back(ex.label);
    for (const Example& ex : data.val) y_val.push_back(ex.label);
    for (const Example& ex : data.test) y_test.push_back(ex.label);

    LinearProbe probe = init_probe(data.num_classes, f_train.dim(1), cfg.probe_l2,
                                   probe_layer_seed(net.spec.seed, hebbian_ordinal));

    TrainReport report;
    report.config = cfg;
    report.deviations = base_deviations();
    report.layer_names = {net.hebbian_name(hebbian_ordinal)};
    report.extras.emplace_back("probe_feat_dim", std::to_string(f_train.dim(1)));

    const std::size_t n = data.train.size();
    double best_val = -1.0;
    std::size_t best_epoch = 0;
    LinearProbe best_probe = probe;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        Rng rng(probe_shuffle_seed(net.spec.seed, hebbian_ordinal, epoch));
        rng.shuffle(order);
        const double eta = probe_eta_for_epoch(cfg.eta_probe, cfg.epochs, epoch);

        for (std::size_t base = 0; base < n; base += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, n - base);
            Tensor feats({count, f_train.dim(1)});
            std::vector<int> labels(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t src = order[base + i];
                std::copy(f_train.row(src), f_train.row(src) + f_train.dim(1), feats.row(i));
                labels[i] = y_train[src];
            }
            probe = probe_sgd_step(probe, feats, labels, eta);
        }

        EpochMetrics metrics;
        metrics.epoch = epoch;
        metrics.probe_eta = eta;
        metrics.val_accuracy = y_val.empty() ? 0.0 : evaluate_accuracy(probe, f_val, y_val);
        report.epochs.push_back(metrics);
        if (metrics.val_accuracy > best_val) {
            best_val = metrics.val_accuracy;
            best_epoch = epoch;
            best_probe = probe;
        }
    }

    if (cfg.early_stopping && best_epoch > 0) {
        probe = best_probe;
        report.chosen_epoch = best_epoch;
    } else {
        report.chosen_epoch = cfg.epochs;
    }
    const double chosen_val = report.epochs[report.chosen_epoch - 1].val_accuracy;
    for (std::size_t e = 0; e < report.epochs.size(); ++e) {
        if (report.epochs[e].val_accuracy >= chosen_val - 0.02) {
            report.convergence_epoch = e + 1;
            break;
        }
    }
    report.test_accuracy = y_test.empty() ? 0.0 : evaluate_accuracy(probe, f_test, y_test);
    report.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(probe), std::move(report)};
}

namespace {

std::string rule_to_text(const HebbianRule& rule) {
    if (rule.kind == RuleKind::wta) return "rule=wta";
    return std::string("rule=hpca act=") +
           (rule.f == Nonlinearity::relu ? "relu" : "identity");
}

} // namespace

std::string network_spec_to_text(const NetworkSpec& spec) {
    std::ostringstream out;
    for (const LayerDesc& desc : spec.layers) {
        std::visit(overloaded{
                       [&](const ConvHebbianDesc& d) {
                           out << "conv filters=" << d.filters << " kernel=" << d.kh << "x" << d.kw
                               << " stride=" << d.sh << "x" << d.sw << " pad=" << d.ph << "x"
                               << d.pw << " " << rule_to_text(d.rule) << "\n";
                       },
                       [&](const ReluDesc&) { out << "relu\n"; },
                       [&](const MaxPoolDesc& d) {
                           out << "pool window=" << d.wh << "x" << d.ww << " stride=" << d.sh
                               << "x" << d.sw << "\n";
                       },
                       [&](const FlattenDesc&) { out << "flatten\n"; },
                       [&](const DenseHebbianDesc& d) {
                           out << "dense units=" << d.units << " " << rule_to_text(d.rule) << "\n";
                       },
                       [&](const ProbeDesc& d) { out << "probe classes=" << d.num_classes << "\n"; },
                   },
                   desc);
    }
    return out.str();
}

namespace {

std::pair<std::size_t, std::size_t> parse_pair(const std::string& value, const std::string& ctx) {
    const std::size_t x = value.find('x');
    if (x == std::string::npos) throw DataError("spec: expected AxB for " + ctx);
    try {
        return {std::stoul(value.substr(0, x)), std::stoul(value.substr(x + 1))};
    } catch (const std::exception&) {
        throw DataError("spec: malformed pair '" + value + "' for " + ctx);
    }
}

} // namespace

NetworkSpec parse_network_spec(const std::string& text) {
    NetworkSpec spec;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream toks(line);
        std::string kind;
        if (!(toks >> kind)) continue;

        std::map<std::string, std::string> kv;
        std::string tok;
        while (toks >> tok) {
            const std::size_t eq = tok.find('=');
            if (eq == std::string::npos) {
                throw DataError("spec line " + std::to_string(line_no) + ": expected key=value, got '" +
                                tok + "'");
            }
            kv[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
        auto get = [&](const std::string& key, const std::string& fallback) {
            auto it = kv.find(key);
            return it == kv.end() ? fallback : it->second;
        };
        auto get_num = [&](const std::string& key, const std::string& fallback) {
            try {
                return static_cast<std::size_t>(std::stoul(get(key, fallback)));
            } catch (const std::exception&) {
                throw DataError("spec line " + std::to_string(line_no) + ": bad value for " + key);
            }
        };
        auto get_rule = [&]() {
            HebbianRule rule;
            const std::string r = get("rule", "hpca");
            if (r == "hpca") {
                rule.kind = RuleKind::hpca;
            } else if (r == "wta") {
                rule.kind = RuleKind::wta;
            } else {
                throw DataError("spec line " + std::to_string(line_no) + ": unknown rule " + r);
            }
            const std::string act = get("act", "relu");
            if (act == "relu") {
                rule.f = Nonlinearity::relu;
            } else if (act == "identity") {
                rule.f = Nonlinearity::identity;
            } else {
                throw DataError("spec line " + std::to_string(line_no) + ": unknown act " + act);
            }
            return rule;
        };

        if (kind == "conv") {
            const auto [kh, kw] = parse_pair(get("kernel", "3x3"), "kernel");
            const auto [sh, sw] = parse_pair(get("stride", "1x1"), "stride");
            const auto [ph, pw] = parse_pair(get("pad", "0x0"), "pad");
            spec.layers.push_back(
                ConvHebbianDesc{get_num("filters", "0"), kh, kw, sh, sw, ph, pw, get_rule()});
        } else if (kind == "relu") {
            spec.layers.push_back(ReluDesc{});
        } else if (kind == "pool") {
            const auto [wh, ww] = parse_pair(get("window", "2x2"), "window");
            const auto [sh, sw] = parse_pair(get("stride", "2x2"), "stride");
            spec.layers.push_back(MaxPoolDesc{wh, ww, sh, sw});
        } else if (kind == "flatten") {
            spec.layers.push_back(FlattenDesc{});
        } else if (kind == "dense") {
            spec.layers.push_back(DenseHebbianDesc{get_num("units", "0"), get_rule()});
        } else if (kind == "probe") {
            spec.layers.push_back(ProbeDesc{get_num("classes", "0")});
        } else {
            throw DataError("spec line " + std::to_string(line_no) + ": unknown layer kind " + kind);
        }
    }
    return spec;
}

} // namespace hebbnet
