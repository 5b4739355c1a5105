#pragma once

#include "hessae/neural.hpp"
#include "hessae/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hessae {

/// Column selection applied to the concatenation [original | previous
/// hidden]. Keeps the indices of the highest-variance columns, ordered by
/// descending variance.
struct EmbeddingUnit {
    std::vector<int> selected;  // 0-based into the concatenated columns
    int input_dim = 0;          // columns of the concatenated source

    int output_dim() const { return static_cast<int>(selected.size()); }
};

/// Ranks the columns of `concat_data` by sample variance and keeps the top
/// `d_out`, ties broken by lower column index.
EmbeddingUnit build_embedding(const Matrix& concat_data, int d_out);

/// Pure column gather, no arithmetic.
Vector apply_embedding(const EmbeddingUnit& unit, const Vector& x, const Vector& h_prev);
Matrix apply_embedding(const EmbeddingUnit& unit, const Matrix& x, const Matrix& h_prev);
Matrix apply_embedding_concat(const EmbeddingUnit& unit, const Matrix& concat);

/// The equivalent 0/1 selection matrix (input_dim x output_dim).
Matrix selection_matrix(const EmbeddingUnit& unit);

/// Table IV model family: plain stack, sparse stack, and the embedded
/// variants with and without the sparsity penalty.
enum class StackVariant { sae, ssae, hesae, hessae };

const char* variant_name(StackVariant v);
bool variant_uses_embedding(StackVariant v);
bool variant_uses_sparsity(StackVariant v);

struct StackConfig {
    std::vector<int> hidden_dims;
    SparsityConfig sparsity;
    TrainConfig pretrain;
    TrainConfig finetune;
    bool use_embedding = true;
};

/// Stack of sigmoid encoders with optional embedding units between layers
/// and a softmax classification head on top.
struct StackedNet {
    std::vector<DenseLayer> encoders;
    std::vector<EmbeddingUnit> units;  // K-1 entries when embedding is on
    SoftmaxHead head;
    bool head_trained = false;
    bool use_embedding = true;
    int input_dim = 0;
    int num_classes = 0;

    int depth() const { return static_cast<int>(encoders.size()); }

    /// Hidden activations h_1..h_K for the given input rows.
    std::vector<Matrix> forward_hidden(const Matrix& x) const;

    /// Last hidden layer output (N x q).
    Matrix deep_features(const Matrix& x) const;

    Labels predict(const Matrix& x) const;
    Matrix class_probabilities(const Matrix& x) const;
};

struct PretrainResult {
    std::vector<TrainResult> layer_histories;
};

/// Greedy layer-wise pre-training. Layer 1 is a plain sparse autoencoder on
/// x; deeper layers train on the embedded concatenation of x with the
/// previous hidden output (or on the previous output directly when
/// embedding is off). Embedding selections are fixed here and never change
/// afterwards.
StackedNet pretrain_stack(const Matrix& x, const StackConfig& cfg, std::uint64_t seed,
                          PretrainResult* result = nullptr);

/// Supervised fine-tuning of the whole stack plus a fresh softmax head,
/// minimizing cross-entropy. Embedding selections stay frozen; gradients
/// flow only through the selected previous-hidden coordinates.
TrainResult finetune_stack(StackedNet& net, const Matrix& x, const Labels& labels, int num_classes,
                           const TrainConfig& cfg, std::uint64_t seed);

/// Deep features of a fine-tuned model.
Matrix extract_deep_features(const StackedNet& net, const Matrix& x);

/// Row-wise concatenation [original | deep].
Matrix hybrid_features(const Matrix& original, const Matrix& deep);

}  // namespace hessae
