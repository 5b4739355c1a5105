#include "hessae/neural.hpp"

#include "hessae/error.hpp"

#include <algorithm>
#include <cmath>

namespace hessae {

namespace {
constexpr double kRateClamp = 1e-8;
// Relative slack when comparing epoch losses: floating point jitter on a
// converged plateau must not burn learning-rate halvings.
constexpr double kLossSlack = 1e-12;
}  // namespace

Matrix sigmoid(const Matrix& x) {
    return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

Matrix DenseLayer::forward(const Matrix& x) const {
    if (x.cols() != weights.cols()) throw ShapeError("DenseLayer::forward: input dimension mismatch");
    Matrix pre = x * weights.transpose();
    pre.rowwise() += bias.transpose();
    return sigmoid(pre);
}

DenseLayer make_dense_layer(int d_in, int d_out, Rng& rng) {
    DenseLayer layer;
    const double bound = std::sqrt(6.0 / static_cast<double>(d_in + d_out));
    layer.weights.resize(d_out, d_in);
    for (int i = 0; i < d_out; ++i) {
        for (int j = 0; j < d_in; ++j) {
            layer.weights(i, j) = rng.uniform(-bound, bound);
        }
    }
    layer.bias = Vector::Zero(d_out);
    return layer;
}

double kl_sparsity(double rho, const Vector& rho_hat) {
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("kl_sparsity: rho must be in (0,1)");
    double total = 0.0;
    for (Eigen::Index j = 0; j < rho_hat.size(); ++j) {
        const double r = std::clamp(rho_hat[j], kRateClamp, 1.0 - kRateClamp);
        total += rho * std::log(rho / r) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - r));
    }
    return total;
}

double ae_loss(const Matrix& x, const Matrix& recon, const DenseLayer& encoder, const DenseLayer& decoder,
               const Vector& rho_hat, const SparsityConfig& cfg) {
    if (x.rows() != recon.rows() || x.cols() != recon.cols()) throw ShapeError("ae_loss: shape mismatch");
    const double n = static_cast<double>(x.rows());
    const double mse = (x - recon).squaredNorm() / n;
    const double decay = cfg.lambda * (encoder.weights.squaredNorm() + decoder.weights.squaredNorm());
    const double sparse = cfg.beta > 0.0 ? cfg.beta * kl_sparsity(cfg.rho, rho_hat) : 0.0;
    return mse + decay + sparse;
}

AeGradients backprop_ae(const Matrix& x, const DenseLayer& encoder, const DenseLayer& decoder,
                        const SparsityConfig& cfg) {
    const double n = static_cast<double>(x.rows());
    const Matrix hidden = encoder.forward(x);
    const Matrix recon = decoder.forward(hidden);

    // d loss / d recon for the (1/N) sum of squared row norms.
    Matrix d_recon = (2.0 / n) * (recon - x);
    Matrix d_pre2 = d_recon.array() * recon.array() * (1.0 - recon.array());

    AeGradients grads;
    grads.decoder_weights = d_pre2.transpose() * hidden + 2.0 * cfg.lambda * decoder.weights;
    grads.decoder_bias = d_pre2.colwise().sum().transpose();

    Matrix d_hidden = d_pre2 * decoder.weights;
    if (cfg.beta > 0.0) {
        const Vector rho_hat = hidden.colwise().mean().transpose();
        for (Eigen::Index j = 0; j < rho_hat.size(); ++j) {
            const double raw = rho_hat[j];
            if (raw <= kRateClamp || raw >= 1.0 - kRateClamp) continue;  // clamped: flat
            const double g = cfg.beta * (-cfg.rho / raw + (1.0 - cfg.rho) / (1.0 - raw)) / n;
            d_hidden.col(j).array() += g;
        }
    }
    Matrix d_pre1 = d_hidden.array() * hidden.array() * (1.0 - hidden.array());
    grads.encoder_weights = d_pre1.transpose() * x + 2.0 * cfg.lambda * encoder.weights;
    grads.encoder_bias = d_pre1.colwise().sum().transpose();
    return grads;
}

Vector finite_difference_gradient(const std::function<double(const Vector&)>& fn, const Vector& params, double h) {
    if (!(h > 0.0)) throw ConfigError("finite_difference_gradient: h must be positive");
    Vector grad(params.size());
    Vector probe = params;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const double original = probe[i];
        probe[i] = original + h;
        const double up = fn(probe);
        probe[i] = original - h;
        const double down = fn(probe);
        probe[i] = original;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

Vector pack_ae_params(const Autoencoder& ae) {
    const Eigen::Index total = ae.encoder.weights.size() + ae.encoder.bias.size() +
                               ae.decoder.weights.size() + ae.decoder.bias.size();
    Vector packed(total);
    Eigen::Index offset = 0;
    auto put = [&](const auto& block) {
        packed.segment(offset, block.size()) = Eigen::Map<const Vector>(block.data(), block.size());
        offset += block.size();
    };
    put(ae.encoder.weights);
    put(ae.encoder.bias);
    put(ae.decoder.weights);
    put(ae.decoder.bias);
    return packed;
}

void unpack_ae_params(Autoencoder& ae, const Vector& params) {
    Eigen::Index offset = 0;
    auto take = [&](auto& block) {
        Eigen::Map<Vector>(block.data(), block.size()) = params.segment(offset, block.size());
        offset += block.size();
    };
    take(ae.encoder.weights);
    take(ae.encoder.bias);
    take(ae.decoder.weights);
    take(ae.decoder.bias);
    if (offset != params.size()) throw ShapeError("unpack_ae_params: size mismatch");
}

void gd_step(Matrix& param, const Matrix& grad, Matrix& velocity, double lr, double momentum) {
    velocity = momentum * velocity - lr * grad;
    param += velocity;
}

void gd_step(Vector& param, const Vector& grad, Vector& velocity, double lr, double momentum) {
    velocity = momentum * velocity - lr * grad;
    param += velocity;
}

namespace {

struct ParamState {
    std::vector<Matrix> mats;
    std::vector<Vector> vecs;
};

ParamState snapshot(const ParamRefs& params, const ParamState& velocity) {
    ParamState state;
    for (const auto* m : params.mats) state.mats.push_back(*m);
    for (const auto* v : params.vecs) state.vecs.push_back(*v);
    for (const auto& m : velocity.mats) state.mats.push_back(m);
    for (const auto& v : velocity.vecs) state.vecs.push_back(v);
    return state;
}

void restore(const ParamRefs& params, ParamState& velocity, const ParamState& saved) {
    const std::size_t nm = params.mats.size();
    const std::size_t nv = params.vecs.size();
    for (std::size_t i = 0; i < nm; ++i) *params.mats[i] = saved.mats[i];
    for (std::size_t i = 0; i < nv; ++i) *params.vecs[i] = saved.vecs[i];
    for (std::size_t i = 0; i < velocity.mats.size(); ++i) velocity.mats[i] = saved.mats[nm + i];
    for (std::size_t i = 0; i < velocity.vecs.size(); ++i) velocity.vecs[i] = saved.vecs[nv + i];
}

}  // namespace

TrainResult run_guarded_training(
    const ParamRefs& params, int num_rows, const TrainConfig& cfg, std::uint64_t seed,
    const std::function<void(const std::vector<int>& batch_rows, GradBuffers& out)>& batch_gradients,
    const std::function<double()>& full_loss) {
    if (cfg.epochs < 1) throw ConfigError("training: epochs must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("training: batch_size must be >= 1");

    ParamState velocity;
    for (const auto* m : params.mats) velocity.mats.emplace_back(Matrix::Zero(m->rows(), m->cols()));
    for (const auto* v : params.vecs) velocity.vecs.emplace_back(Vector::Zero(v->size()));

    GradBuffers grads;
    grads.mats.resize(params.mats.size());
    grads.vecs.resize(params.vecs.size());

    TrainResult result;
    double prev_loss = full_loss();
    result.loss_history.push_back(prev_loss);
    if (!std::isfinite(prev_loss)) throw TrainingError("training: non-finite initial loss");

    double lr = cfg.learning_rate;
    ParamState saved = snapshot(params, velocity);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        while (true) {
            Rng rng(derive_seed(seed, 0xe90c, static_cast<std::uint64_t>(epoch)));
            const std::vector<int> order = rng.permutation(num_rows);
            for (int start = 0; start < num_rows; start += cfg.batch_size) {
                const int stop = std::min(start + cfg.batch_size, num_rows);
                const std::vector<int> batch(order.begin() + start, order.begin() + stop);
                batch_gradients(batch, grads);
                for (std::size_t i = 0; i < params.mats.size(); ++i) {
                    gd_step(*params.mats[i], grads.mats[i], velocity.mats[i], lr, cfg.momentum);
                }
                for (std::size_t i = 0; i < params.vecs.size(); ++i) {
                    gd_step(*params.vecs[i], grads.vecs[i], velocity.vecs[i], lr, cfg.momentum);
                }
            }
            const double loss = full_loss();
            if (std::isfinite(loss) && loss <= prev_loss * (1.0 + kLossSlack)) {
                prev_loss = loss;
                result.loss_history.push_back(loss);
                saved = snapshot(params, velocity);
                break;
            }
            result.lr_halvings++;
            if (result.lr_halvings > cfg.max_lr_halvings) {
                throw TrainingError("training diverged: loss still increasing after " +
                                    std::to_string(cfg.max_lr_halvings) + " learning-rate halvings");
            }
            restore(params, velocity, saved);
            lr *= 0.5;
        }
    }
    result.final_lr = lr;
    return result;
}

Autoencoder train_autoencoder(const Matrix& x, int hidden_dim, const SparsityConfig& sparsity,
                              const TrainConfig& cfg, std::uint64_t seed, TrainResult* result) {
    if (hidden_dim < 1) throw ConfigError("train_autoencoder: hidden_dim must be >= 1");
    const int d_in = static_cast<int>(x.cols());
    Rng init_rng(derive_seed(seed, 0x1a17));
    Autoencoder ae;
    ae.encoder = make_dense_layer(d_in, hidden_dim, init_rng);
    ae.decoder = make_dense_layer(hidden_dim, d_in, init_rng);

    ParamRefs refs;
    refs.mats = {&ae.encoder.weights, &ae.decoder.weights};
    refs.vecs = {&ae.encoder.bias, &ae.decoder.bias};

    auto batch_gradients = [&](const std::vector<int>& rows, GradBuffers& out) {
        Matrix batch(static_cast<Eigen::Index>(rows.size()), x.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) batch.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
        AeGradients g = backprop_ae(batch, ae.encoder, ae.decoder, sparsity);
        out.mats[0] = std::move(g.encoder_weights);
        out.mats[1] = std::move(g.decoder_weights);
        out.vecs[0] = std::move(g.encoder_bias);
        out.vecs[1] = std::move(g.decoder_bias);
    };
    auto full_loss = [&]() {
        const Matrix hidden = ae.encoder.forward(x);
        const Matrix recon = ae.decoder.forward(hidden);
        const Vector rho_hat = hidden.colwise().mean().transpose();
        return ae_loss(x, recon, ae.encoder, ae.decoder, rho_hat, sparsity);
    };

    TrainResult history = run_guarded_training(refs, static_cast<int>(x.rows()), cfg,
                                               derive_seed(seed, 0x7a19), batch_gradients, full_loss);
    if (result) *result = std::move(history);
    return ae;
}

Matrix SoftmaxHead::logits(const Matrix& x) const {
    if (x.cols() != weights.cols()) throw ShapeError("SoftmaxHead: input dimension mismatch");
    Matrix z = x * weights.transpose();
    z.rowwise() += bias.transpose();
    return z;
}

Matrix SoftmaxHead::probabilities(const Matrix& x) const {
    Matrix z = logits(x);
    const Vector row_max = z.rowwise().maxCoeff();
    z.colwise() -= row_max;
    Matrix e = z.array().exp();
    const Vector sums = e.rowwise().sum();
    for (Eigen::Index i = 0; i < e.rows(); ++i) e.row(i) /= sums[i];
    return e;
}

Labels SoftmaxHead::predict(const Matrix& x) const {
    const Matrix z = logits(x);
    Labels out(static_cast<std::size_t>(z.rows()));
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        Eigen::Index best = 0;
        z.row(i).maxCoeff(&best);
        out[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
    }
    return out;
}

SoftmaxHead make_softmax_head(int d_in, int num_classes, Rng& rng) {
    SoftmaxHead head;
    const double bound = std::sqrt(6.0 / static_cast<double>(d_in + num_classes));
    head.weights.resize(num_classes, d_in);
    for (int i = 0; i < num_classes; ++i) {
        for (int j = 0; j < d_in; ++j) head.weights(i, j) = rng.uniform(-bound, bound);
    }
    head.bias = Vector::Zero(num_classes);
    return head;
}

double cross_entropy(const Matrix& probs, const Labels& labels) {
    if (probs.rows() != static_cast<Eigen::Index>(labels.size())) throw ShapeError("cross_entropy: size mismatch");
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const double p = std::max(probs(i, labels[static_cast<std::size_t>(i)] - 1), 1e-300);
        total -= std::log(p);
    }
    return total / static_cast<double>(probs.rows());
}

SoftmaxHead train_softmax_head(const Matrix& x, const Labels& labels, int num_classes, const TrainConfig& cfg,
                               std::uint64_t seed, TrainResult* result) {
    for (int label : labels) {
        if (label < 1 || label > num_classes) throw ConfigError("train_softmax_head: label out of range");
    }
    Rng init_rng(derive_seed(seed, 0x50f7));
    SoftmaxHead head = make_softmax_head(static_cast<int>(x.cols()), num_classes, init_rng);

    ParamRefs refs;
    refs.mats = {&head.weights};
    refs.vecs = {&head.bias};

    auto batch_gradients = [&](const std::vector<int>& rows, GradBuffers& out) {
        Matrix batch(static_cast<Eigen::Index>(rows.size()), x.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) batch.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
        Matrix p = head.probabilities(batch);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            p(static_cast<Eigen::Index>(i), labels[static_cast<std::size_t>(rows[i])] - 1) -= 1.0;
        }
        p /= static_cast<double>(rows.size());
        out.mats[0] = p.transpose() * batch;
        out.vecs[0] = p.colwise().sum().transpose();
    };
    auto full_loss = [&]() { return cross_entropy(head.probabilities(x), labels); };

    TrainResult history = run_guarded_training(refs, static_cast<int>(x.rows()), cfg,
                                               derive_seed(seed, 0x7a20), batch_gradients, full_loss);
    if (result) *result = std::move(history);
    return head;
}

}  // namespace hessae
