#pragma once

#include "hessae/rng.hpp"
#include "hessae/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace hessae {

/// Elementwise logistic sigmoid.
Matrix sigmoid(const Matrix& x);

/// Fully connected layer with sigmoid activation. Rows of the input are
/// samples; weights are d_out x d_in.
struct DenseLayer {
    Matrix weights;
    Vector bias;

    int in_dim() const { return static_cast<int>(weights.cols()); }
    int out_dim() const { return static_cast<int>(weights.rows()); }

    /// sigmoid(x W^T + b) for an N x d_in input.
    Matrix forward(const Matrix& x) const;
};

/// Uniform init in +-sqrt(6/(fan_in+fan_out)), zero biases.
DenseLayer make_dense_layer(int d_in, int d_out, Rng& rng);

struct SparsityConfig {
    double rho = 0.05;     // target mean activation, in (0,1)
    double beta = 0.0;     // sparsity penalty weight
    double lambda = 0.0;   // L2 weight decay
};

struct TrainConfig {
    int epochs = 100;
    double learning_rate = 0.1;
    double momentum = 0.9;
    int batch_size = 32;
    int max_lr_halvings = 10;
};

/// Sum over hidden units of the Bernoulli KL between the target rate and
/// each observed mean activation. Observed rates are clamped to
/// [1e-8, 1-1e-8] before evaluation.
double kl_sparsity(double rho, const Vector& rho_hat);

struct Autoencoder {
    DenseLayer encoder;
    DenseLayer decoder;
};

/// Mean squared reconstruction error + lambda * (squared Frobenius norms of
/// both weight matrices) + beta * KL sparsity term.
double ae_loss(const Matrix& x, const Matrix& recon, const DenseLayer& encoder, const DenseLayer& decoder,
               const Vector& rho_hat, const SparsityConfig& cfg);

struct AeGradients {
    Matrix encoder_weights;
    Vector encoder_bias;
    Matrix decoder_weights;
    Vector decoder_bias;
};

/// Exact gradients of ae_loss on the given batch, including the dependence
/// of the mean activations on the encoder parameters.
AeGradients backprop_ae(const Matrix& x, const DenseLayer& encoder, const DenseLayer& decoder,
                        const SparsityConfig& cfg);

/// Central finite differences, one parameter at a time.
Vector finite_difference_gradient(const std::function<double(const Vector&)>& fn, const Vector& params, double h);

Vector pack_ae_params(const Autoencoder& ae);
void unpack_ae_params(Autoencoder& ae, const Vector& params);

/// Momentum update: v <- momentum*v - lr*g; p <- p + v.
void gd_step(Matrix& param, const Matrix& grad, Matrix& velocity, double lr, double momentum);
void gd_step(Vector& param, const Vector& grad, Vector& velocity, double lr, double momentum);

struct TrainResult {
    std::vector<double> loss_history;  // entry 0 is the pre-training loss
    int lr_halvings = 0;
    double final_lr = 0.0;
};

/// Parameter set addressed by reference, used by the shared training loop.
struct ParamRefs {
    std::vector<Matrix*> mats;
    std::vector<Vector*> vecs;
};

struct GradBuffers {
    std::vector<Matrix> mats;
    std::vector<Vector> vecs;
};

/// Mini-batch gradient descent with momentum and a divergence guard: after
/// every epoch the full-data loss is evaluated; if it rose, the epoch is
/// rolled back and retried at half the learning rate. More than
/// `max_lr_halvings` rollbacks is a training failure.
TrainResult run_guarded_training(
    const ParamRefs& params, int num_rows, const TrainConfig& cfg, std::uint64_t seed,
    const std::function<void(const std::vector<int>& batch_rows, GradBuffers& out)>& batch_gradients,
    const std::function<double()>& full_loss);

/// Sparse autoencoder trained on x. Returns the model; optionally the loss
/// history via `result`.
Autoencoder train_autoencoder(const Matrix& x, int hidden_dim, const SparsityConfig& sparsity,
                              const TrainConfig& cfg, std::uint64_t seed, TrainResult* result = nullptr);

/// Linear layer + softmax over C classes.
struct SoftmaxHead {
    Matrix weights;  // C x d
    Vector bias;

    Matrix logits(const Matrix& x) const;
    Matrix probabilities(const Matrix& x) const;
    Labels predict(const Matrix& x) const;
};

SoftmaxHead make_softmax_head(int d_in, int num_classes, Rng& rng);

/// Mean negative log-likelihood of the true classes.
double cross_entropy(const Matrix& probs, const Labels& labels);

SoftmaxHead train_softmax_head(const Matrix& x, const Labels& labels, int num_classes, const TrainConfig& cfg,
                               std::uint64_t seed, TrainResult* result = nullptr);

}  // namespace hessae
