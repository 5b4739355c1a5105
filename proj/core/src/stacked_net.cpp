#include "hessae/stacked_net.hpp"

#include "hessae/error.hpp"
#include "hessae/linalg.hpp"

#include <algorithm>
#include <numeric>

namespace hessae {

EmbeddingUnit build_embedding(const Matrix& concat_data, int d_out) {
    const int total = static_cast<int>(concat_data.cols());
    if (d_out > total) throw ShapeError("build_embedding: d_out exceeds column count");
    if (d_out < 1) throw ConfigError("build_embedding: d_out must be >= 1");

    const Vector variances = column_variances(concat_data);
    std::vector<int> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (variances[a] != variances[b]) return variances[a] > variances[b];
        return a < b;
    });

    EmbeddingUnit unit;
    unit.input_dim = total;
    unit.selected.assign(order.begin(), order.begin() + d_out);
    return unit;
}

Vector apply_embedding(const EmbeddingUnit& unit, const Vector& x, const Vector& h_prev) {
    if (x.size() + h_prev.size() != unit.input_dim) throw ShapeError("apply_embedding: dimension mismatch");
    Vector out(unit.output_dim());
    for (std::size_t j = 0; j < unit.selected.size(); ++j) {
        const int idx = unit.selected[j];
        out[static_cast<Eigen::Index>(j)] = idx < x.size() ? x[idx] : h_prev[idx - x.size()];
    }
    return out;
}

Matrix apply_embedding(const EmbeddingUnit& unit, const Matrix& x, const Matrix& h_prev) {
    if (x.rows() != h_prev.rows()) throw ShapeError("apply_embedding: row count mismatch");
    if (x.cols() + h_prev.cols() != unit.input_dim) throw ShapeError("apply_embedding: dimension mismatch");
    Matrix out(x.rows(), unit.output_dim());
    for (std::size_t j = 0; j < unit.selected.size(); ++j) {
        const int idx = unit.selected[j];
        out.col(static_cast<Eigen::Index>(j)) = idx < x.cols() ? x.col(idx) : h_prev.col(idx - x.cols());
    }
    return out;
}

Matrix apply_embedding_concat(const EmbeddingUnit& unit, const Matrix& concat) {
    if (concat.cols() != unit.input_dim) throw ShapeError("apply_embedding_concat: dimension mismatch");
    Matrix out(concat.rows(), unit.output_dim());
    for (std::size_t j = 0; j < unit.selected.size(); ++j) {
        out.col(static_cast<Eigen::Index>(j)) = concat.col(unit.selected[j]);
    }
    return out;
}

Matrix selection_matrix(const EmbeddingUnit& unit) {
    Matrix g = Matrix::Zero(unit.input_dim, unit.output_dim());
    for (std::size_t j = 0; j < unit.selected.size(); ++j) {
        g(unit.selected[j], static_cast<Eigen::Index>(j)) = 1.0;
    }
    return g;
}

const char* variant_name(StackVariant v) {
    switch (v) {
        case StackVariant::sae: return "sae";
        case StackVariant::ssae: return "ssae";
        case StackVariant::hesae: return "hesae";
        case StackVariant::hessae: return "hessae";
    }
    return "?";
}

bool variant_uses_embedding(StackVariant v) {
    return v == StackVariant::hesae || v == StackVariant::hessae;
}

bool variant_uses_sparsity(StackVariant v) {
    return v == StackVariant::ssae || v == StackVariant::hessae;
}

std::vector<Matrix> StackedNet::forward_hidden(const Matrix& x) const {
    if (static_cast<int>(x.cols()) != input_dim) throw ShapeError("StackedNet: input dimension mismatch");
    std::vector<Matrix> hidden;
    hidden.reserve(encoders.size());
    for (std::size_t k = 0; k < encoders.size(); ++k) {
        if (k == 0) {
            hidden.push_back(encoders[0].forward(x));
        } else if (use_embedding) {
            hidden.push_back(encoders[k].forward(apply_embedding(units[k - 1], x, hidden[k - 1])));
        } else {
            hidden.push_back(encoders[k].forward(hidden[k - 1]));
        }
    }
    return hidden;
}

Matrix StackedNet::deep_features(const Matrix& x) const {
    return forward_hidden(x).back();
}

Labels StackedNet::predict(const Matrix& x) const {
    if (!head_trained) throw Error("StackedNet::predict: model has no trained head");
    return head.predict(deep_features(x));
}

Matrix StackedNet::class_probabilities(const Matrix& x) const {
    if (!head_trained) throw Error("StackedNet::class_probabilities: model has no trained head");
    return head.probabilities(deep_features(x));
}

StackedNet pretrain_stack(const Matrix& x, const StackConfig& cfg, std::uint64_t seed, PretrainResult* result) {
    if (cfg.hidden_dims.empty()) throw ConfigError("pretrain_stack: need at least one hidden layer");

    StackedNet net;
    net.use_embedding = cfg.use_embedding;
    net.input_dim = static_cast<int>(x.cols());

    PretrainResult histories;
    Matrix hidden;  // output of the previous layer over all rows
    for (std::size_t k = 0; k < cfg.hidden_dims.size(); ++k) {
        Matrix layer_input;
        if (k == 0) {
            layer_input = x;
        } else if (cfg.use_embedding) {
            Matrix concat(x.rows(), x.cols() + hidden.cols());
            concat << x, hidden;
            EmbeddingUnit unit = build_embedding(concat, static_cast<int>(hidden.cols()));
            layer_input = apply_embedding_concat(unit, concat);
            net.units.push_back(std::move(unit));
        } else {
            layer_input = hidden;
        }
        TrainResult history;
        Autoencoder ae = train_autoencoder(layer_input, cfg.hidden_dims[k], cfg.sparsity, cfg.pretrain,
                                           derive_seed(seed, 0x57ac, k), &history);
        hidden = ae.encoder.forward(layer_input);
        net.encoders.push_back(std::move(ae.encoder));
        histories.layer_histories.push_back(std::move(history));
    }
    if (result) *result = std::move(histories);
    return net;
}

TrainResult finetune_stack(StackedNet& net, const Matrix& x, const Labels& labels, int num_classes,
                           const TrainConfig& cfg, std::uint64_t seed) {
    if (net.depth() == 0) throw Error("finetune_stack: empty model");
    if (static_cast<Eigen::Index>(labels.size()) != x.rows()) throw ShapeError("finetune_stack: label count mismatch");

    Rng head_rng(derive_seed(seed, 0x4ead));
    net.head = make_softmax_head(net.encoders.back().out_dim(), num_classes, head_rng);
    net.num_classes = num_classes;
    net.head_trained = true;

    ParamRefs refs;
    for (auto& enc : net.encoders) {
        refs.mats.push_back(&enc.weights);
        refs.vecs.push_back(&enc.bias);
    }
    refs.mats.push_back(&net.head.weights);
    refs.vecs.push_back(&net.head.bias);

    const int depth = net.depth();
    const int n = net.input_dim;

    auto batch_gradients = [&](const std::vector<int>& rows, GradBuffers& out) {
        const auto batch_n = static_cast<Eigen::Index>(rows.size());
        Matrix batch(batch_n, x.cols());
        for (Eigen::Index i = 0; i < batch_n; ++i) batch.row(i) = x.row(rows[static_cast<std::size_t>(i)]);

        // Forward pass, keeping each layer's input for the weight gradients.
        std::vector<Matrix> inputs(static_cast<std::size_t>(depth));
        std::vector<Matrix> hidden(static_cast<std::size_t>(depth));
        for (int k = 0; k < depth; ++k) {
            if (k == 0) {
                inputs[0] = batch;
            } else if (net.use_embedding) {
                inputs[static_cast<std::size_t>(k)] =
                    apply_embedding(net.units[static_cast<std::size_t>(k - 1)], batch,
                                    hidden[static_cast<std::size_t>(k - 1)]);
            } else {
                inputs[static_cast<std::size_t>(k)] = hidden[static_cast<std::size_t>(k - 1)];
            }
            hidden[static_cast<std::size_t>(k)] =
                net.encoders[static_cast<std::size_t>(k)].forward(inputs[static_cast<std::size_t>(k)]);
        }

        Matrix d_logits = net.head.probabilities(hidden.back());
        for (Eigen::Index i = 0; i < batch_n; ++i) {
            d_logits(i, labels[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])] - 1) -= 1.0;
        }
        d_logits /= static_cast<double>(batch_n);

        out.mats[static_cast<std::size_t>(depth)] = d_logits.transpose() * hidden.back();
        out.vecs[static_cast<std::size_t>(depth)] = d_logits.colwise().sum().transpose();

        Matrix d_hidden = d_logits * net.head.weights;
        for (int k = depth - 1; k >= 0; --k) {
            const Matrix& h = hidden[static_cast<std::size_t>(k)];
            Matrix d_pre = d_hidden.array() * h.array() * (1.0 - h.array());
            out.mats[static_cast<std::size_t>(k)] = d_pre.transpose() * inputs[static_cast<std::size_t>(k)];
            out.vecs[static_cast<std::size_t>(k)] = d_pre.colwise().sum().transpose();
            if (k == 0) break;

            Matrix d_input = d_pre * net.encoders[static_cast<std::size_t>(k)].weights;
            if (net.use_embedding) {
                // Selection is linear: route each selected column's gradient
                // back to the previous hidden layer; original-feature
                // coordinates are inputs and take no gradient.
                const EmbeddingUnit& unit = net.units[static_cast<std::size_t>(k - 1)];
                Matrix d_prev = Matrix::Zero(batch_n, hidden[static_cast<std::size_t>(k - 1)].cols());
                for (std::size_t j = 0; j < unit.selected.size(); ++j) {
                    const int idx = unit.selected[j];
                    if (idx >= n) d_prev.col(idx - n) += d_input.col(static_cast<Eigen::Index>(j));
                }
                d_hidden = std::move(d_prev);
            } else {
                d_hidden = std::move(d_input);
            }
        }
    };

    auto full_loss = [&]() { return cross_entropy(net.head.probabilities(net.deep_features(x)), labels); };

    return run_guarded_training(refs, static_cast<int>(x.rows()), cfg, derive_seed(seed, 0x7a21),
                                batch_gradients, full_loss);
}

Matrix extract_deep_features(const StackedNet& net, const Matrix& x) {
    if (!net.head_trained) throw Error("extract_deep_features: model is not fine-tuned");
    return net.deep_features(x);
}

Matrix hybrid_features(const Matrix& original, const Matrix& deep) {
    if (original.rows() != deep.rows()) throw ShapeError("hybrid_features: row count mismatch");
    Matrix out(original.rows(), original.cols() + deep.cols());
    if (deep.cols() == 0) {
        out = original;
        return out;
    }
    out << original, deep;
    return out;
}

}  // namespace hessae
