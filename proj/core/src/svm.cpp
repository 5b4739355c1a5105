#include "hessae/svm.hpp"

#include "hessae/dataset.hpp"
#include "hessae/error.hpp"
#include "hessae/linalg.hpp"
#include "hessae/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <list>
#include <unordered_map>

namespace hessae {

double kernel_value(const KernelSpec& kernel, const RowVector& a, const RowVector& b) {
    switch (kernel.kind) {
        case KernelSpec::Kind::linear:
            return a.dot(b);
        case KernelSpec::Kind::rbf:
            return std::exp(-kernel.gamma * (a - b).squaredNorm());
    }
    return 0.0;
}

Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelSpec& kernel) {
    if (kernel.kind == KernelSpec::Kind::linear) return a * b.transpose();
    return (-kernel.gamma * pairwise_squared_distances(a, b).array()).exp();
}

double BinarySvm::decision(const RowVector& x) const {
    if (x.size() != support_vectors.cols()) throw ShapeError("BinarySvm::decision: dimension mismatch");
    double value = bias;
    for (Eigen::Index i = 0; i < support_vectors.rows(); ++i) {
        value += coefficients[i] * kernel_value(kernel, support_vectors.row(i), x);
    }
    return value;
}

Vector BinarySvm::decision_batch(const Matrix& x) const {
    if (x.cols() != support_vectors.cols()) throw ShapeError("BinarySvm::decision_batch: dimension mismatch");
    return (kernel_matrix(x, support_vectors, kernel) * coefficients).array() + bias;
}

std::pair<int, double> predict_binary(const BinarySvm& model, const RowVector& x) {
    const double value = model.decision(x);
    return {value >= 0.0 ? 1 : -1, value};
}

namespace {

// Kernel rows over one training set, either fully materialized or computed
// on demand under an LRU budget. Cache policy only affects speed.
class KernelCache {
public:
    KernelCache(const Matrix& x, const KernelSpec& kernel, double cache_mb)
        : x_(x), kernel_(kernel), n_(static_cast<int>(x.rows())) {
        sq_ = x.rowwise().squaredNorm();
        const double full_bytes = static_cast<double>(n_) * n_ * 8.0;
        if (full_bytes <= cache_mb * 1e6) {
            full_ = kernel_matrix(x, x, kernel);
            use_full_ = true;
        } else {
            max_rows_ = std::max<std::size_t>(2, static_cast<std::size_t>(cache_mb * 1e6 / (n_ * 8.0)));
        }
    }

    const double* row(int i) {
        if (use_full_) return full_.data() + static_cast<std::ptrdiff_t>(i) * n_;
        if (auto it = cached_.find(i); it != cached_.end()) {
            order_.splice(order_.begin(), order_, it->second.second);
            return it->second.first.data();
        }
        Vector values;
        if (kernel_.kind == KernelSpec::Kind::linear) {
            values = x_ * x_.row(i).transpose();
        } else {
            values = (-kernel_.gamma *
                      (sq_.array() + sq_[i] - 2.0 * (x_ * x_.row(i).transpose()).array()).max(0.0))
                         .exp();
        }
        if (cached_.size() >= max_rows_) {
            cached_.erase(order_.back());
            order_.pop_back();
        }
        order_.push_front(i);
        auto [it, inserted] = cached_.emplace(i, std::make_pair(std::move(values), order_.begin()));
        return it->second.first.data();
    }

    double diagonal(int i) const {
        if (kernel_.kind == KernelSpec::Kind::linear) return sq_[i];
        return 1.0;
    }

private:
    const Matrix& x_;
    KernelSpec kernel_;
    int n_;
    Vector sq_;
    bool use_full_ = false;
    Matrix full_;  // symmetric, so a column fetched via data() is the row
    std::size_t max_rows_ = 0;
    std::unordered_map<int, std::pair<Vector, std::list<int>::iterator>> cached_;
    std::list<int> order_;
};

}  // namespace

namespace detail {

struct SmoResult {
    Vector alpha;
    double b = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Sequential minimal optimization on a kernel row provider. The working
// set is the maximally violating pair; stops when the violation gap falls
// under tol or the iteration cap (10 per row) is reached.
SmoResult smo_solve(const std::function<const double*(int)>& kernel_row, const std::vector<double>& diag,
                    const std::vector<std::int8_t>& y, double c, double tol, int max_iters) {
    const int n = static_cast<int>(y.size());
    SmoResult result;
    result.alpha = Vector::Zero(n);
    Vector f(n);
    for (int i = 0; i < n; ++i) f[i] = -static_cast<double>(y[i]);

    auto in_up = [&](int i) {
        return (y[i] > 0 && result.alpha[i] < c) || (y[i] < 0 && result.alpha[i] > 0.0);
    };
    auto in_low = [&](int i) {
        return (y[i] > 0 && result.alpha[i] > 0.0) || (y[i] < 0 && result.alpha[i] < c);
    };

    double b_up = 0.0;
    double b_low = 0.0;
    for (int iter = 1; iter <= max_iters; ++iter) {
        int i_up = -1;
        int i_low = -1;
        b_up = 0.0;
        b_low = 0.0;
        for (int i = 0; i < n; ++i) {
            if (in_up(i) && (i_up < 0 || f[i] < b_up)) {
                b_up = f[i];
                i_up = i;
            }
            if (in_low(i) && (i_low < 0 || f[i] > b_low)) {
                b_low = f[i];
                i_low = i;
            }
        }
        if (i_up < 0 || i_low < 0 || b_low - b_up <= tol) {
            result.converged = true;
            result.iterations = iter - 1;
            result.b = (i_up < 0 || i_low < 0) ? 0.0 : -(b_up + b_low) / 2.0;
            return result;
        }
        result.iterations = iter;

        const int i1 = i_up;
        const int i2 = i_low;
        const double y1 = static_cast<double>(y[i1]);
        const double y2 = static_cast<double>(y[i2]);
        const double a1_old = result.alpha[i1];
        const double a2_old = result.alpha[i2];
        const double s = y1 * y2;

        double lo;
        double hi;
        if (y1 != y2) {
            lo = std::max(0.0, a2_old - a1_old);
            hi = std::min(c, c + a2_old - a1_old);
        } else {
            lo = std::max(0.0, a1_old + a2_old - c);
            hi = std::min(c, a1_old + a2_old);
        }
        if (hi - lo < 1e-12) break;  // box corner, no feasible progress

        const double* k1 = kernel_row(i1);
        const double* k2 = kernel_row(i2);
        double eta = diag[static_cast<std::size_t>(i1)] + diag[static_cast<std::size_t>(i2)] - 2.0 * k1[i2];
        if (eta < 1e-12) eta = 1e-12;

        double a2 = a2_old + y2 * (f[i1] - f[i2]) / eta;
        a2 = std::clamp(a2, lo, hi);
        const double delta2 = a2 - a2_old;
        if (std::abs(delta2) < 1e-14) break;  // numerically stuck
        const double a1 = a1_old - s * delta2;
        result.alpha[i1] = a1;
        result.alpha[i2] = a2;

        const double w1 = y1 * (a1 - a1_old);
        const double w2 = y2 * delta2;
        for (int i = 0; i < n; ++i) f[i] += w1 * k1[i] + w2 * k2[i];
    }
    result.b = -(b_up + b_low) / 2.0;
    return result;
}

}  // namespace detail

BinarySvm train_binary(const Matrix& x, const std::vector<int>& y, const SmoOptions& options,
                       SmoDiagnostics* diagnostics) {
    const int n = static_cast<int>(x.rows());
    if (n != static_cast<int>(y.size())) throw ShapeError("train_binary: label count mismatch");
    if (options.c <= 0.0) throw ConfigError("train_binary: C must be positive");
    bool has_pos = false;
    bool has_neg = false;
    std::vector<std::int8_t> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (y[static_cast<std::size_t>(i)] == 1) {
            has_pos = true;
            labels[static_cast<std::size_t>(i)] = 1;
        } else if (y[static_cast<std::size_t>(i)] == -1) {
            has_neg = true;
            labels[static_cast<std::size_t>(i)] = -1;
        } else {
            throw ConfigError("train_binary: labels must be +1 or -1");
        }
    }
    if (!has_pos || !has_neg) throw ConfigError("train_binary: both classes must be present");

    KernelCache cache(x, options.kernel, options.cache_mb);
    std::vector<double> diag(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) diag[static_cast<std::size_t>(i)] = cache.diagonal(i);

    const int max_iters = 10 * n;
    detail::SmoResult solved = detail::smo_solve([&cache](int i) { return cache.row(i); }, diag, labels,
                                                 options.c, options.tol, max_iters);

    BinarySvm model;
    model.c = options.c;
    model.kernel = options.kernel;
    model.bias = solved.b;
    std::vector<int> sv;
    for (int i = 0; i < n; ++i) {
        if (solved.alpha[i] > 1e-12) sv.push_back(i);
    }
    model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
    model.coefficients.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t i = 0; i < sv.size(); ++i) {
        model.support_vectors.row(static_cast<Eigen::Index>(i)) = x.row(sv[i]);
        model.coefficients[static_cast<Eigen::Index>(i)] =
            solved.alpha[sv[i]] * static_cast<double>(labels[static_cast<std::size_t>(sv[i])]);
    }
    if (diagnostics) {
        diagnostics->alpha = std::move(solved.alpha);
        diagnostics->iterations = solved.iterations;
        diagnostics->converged = solved.converged;
    }
    return model;
}

namespace {

std::vector<std::pair<int, int>> make_class_pairs(int num_classes) {
    std::vector<std::pair<int, int>> pairs;
    for (int a = 1; a <= num_classes; ++a) {
        for (int b = a + 1; b <= num_classes; ++b) pairs.emplace_back(a, b);
    }
    return pairs;
}

int vote_winner(const std::vector<int>& votes, const std::vector<double>& magnitude) {
    int best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c) {
        if (votes[c] > votes[static_cast<std::size_t>(best)] ||
            (votes[c] == votes[static_cast<std::size_t>(best)] &&
             magnitude[c] > magnitude[static_cast<std::size_t>(best)])) {
            best = static_cast<int>(c);
        }
    }
    return best + 1;
}

}  // namespace

int MulticlassSvm::predict(const RowVector& x) const {
    std::vector<int> votes(static_cast<std::size_t>(num_classes), 0);
    std::vector<double> magnitude(static_cast<std::size_t>(num_classes), 0.0);
    for (std::size_t p = 0; p < class_pairs.size(); ++p) {
        const auto [label, value] = predict_binary(models[p], x);
        const int winner = label >= 0 ? class_pairs[p].first : class_pairs[p].second;
        votes[static_cast<std::size_t>(winner - 1)]++;
        magnitude[static_cast<std::size_t>(winner - 1)] += std::abs(value);
    }
    return vote_winner(votes, magnitude);
}

Labels MulticlassSvm::predict(const Matrix& x) const {
    const auto n = x.rows();
    std::vector<std::vector<int>> votes(static_cast<std::size_t>(n),
                                        std::vector<int>(static_cast<std::size_t>(num_classes), 0));
    std::vector<std::vector<double>> magnitude(static_cast<std::size_t>(n),
                                               std::vector<double>(static_cast<std::size_t>(num_classes), 0.0));
    for (std::size_t p = 0; p < class_pairs.size(); ++p) {
        const Vector values = models[p].decision_batch(x);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int winner = values[i] >= 0.0 ? class_pairs[p].first : class_pairs[p].second;
            votes[static_cast<std::size_t>(i)][static_cast<std::size_t>(winner - 1)]++;
            magnitude[static_cast<std::size_t>(i)][static_cast<std::size_t>(winner - 1)] += std::abs(values[i]);
        }
    }
    Labels out(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] =
            vote_winner(votes[static_cast<std::size_t>(i)], magnitude[static_cast<std::size_t>(i)]);
    }
    return out;
}

MulticlassSvm train_multiclass(const Matrix& x, const Labels& labels, int num_classes,
                               const SmoOptions& options, int threads) {
    if (num_classes < 2) throw ConfigError("train_multiclass: need at least two classes");
    if (x.rows() != static_cast<Eigen::Index>(labels.size())) throw ShapeError("train_multiclass: size mismatch");

    MulticlassSvm model;
    model.num_classes = num_classes;
    model.class_pairs = make_class_pairs(num_classes);
    model.models.resize(model.class_pairs.size());
    model.kernel = options.kernel;
    model.c = options.c;

    parallel_for_tasks(static_cast<int>(model.class_pairs.size()), threads, [&](int p) {
        const auto [a, b] = model.class_pairs[static_cast<std::size_t>(p)];
        std::vector<int> rows;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == a || labels[i] == b) rows.push_back(static_cast<int>(i));
        }
        Matrix sub(static_cast<Eigen::Index>(rows.size()), x.cols());
        std::vector<int> y(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            sub.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
            y[i] = labels[static_cast<std::size_t>(rows[i])] == a ? 1 : -1;
        }
        model.models[static_cast<std::size_t>(p)] = train_binary(sub, y, options);
    });
    return model;
}

MulticlassSvm train_multiclass_cv(const Matrix& x, const Labels& labels, int num_classes,
                                  const SvmGridConfig& grid, std::uint64_t seed, int threads,
                                  SvmGridChoice* choice) {
    if (x.rows() != static_cast<Eigen::Index>(labels.size())) throw ShapeError("train_multiclass_cv: size mismatch");
    const int d = static_cast<int>(x.cols());
    const int n = static_cast<int>(x.rows());

    std::vector<double> gammas;
    if (grid.kind == KernelSpec::Kind::rbf) {
        for (int e : grid.gamma_exponents) gammas.push_back(std::pow(2.0, e) / std::max(1, d));
    } else {
        gammas.push_back(0.0);
    }
    const int num_combos = static_cast<int>(gammas.size() * grid.c_grid.size());
    const auto pairs = make_class_pairs(num_classes);
    const auto folds = stratified_folds(labels, num_classes, grid.folds, derive_seed(seed, 0xcf01));

    // correct[combo] accumulates over all folds; every validation row gets
    // one prediction per combo.
    std::vector<long> correct(static_cast<std::size_t>(num_combos), 0);
    long total = 0;

    for (int f = 0; f < grid.folds; ++f) {
        const std::vector<int>& val_rows = folds[static_cast<std::size_t>(f)];
        if (val_rows.empty()) continue;
        std::vector<char> in_val(static_cast<std::size_t>(n), 0);
        for (int r : val_rows) in_val[static_cast<std::size_t>(r)] = 1;

        const int n_val = static_cast<int>(val_rows.size());
        Matrix x_val(n_val, d);
        for (int i = 0; i < n_val; ++i) x_val.row(i) = x.row(val_rows[static_cast<std::size_t>(i)]);

        // Per-pair result slabs: winner flag and decision magnitude per
        // (combo, validation row). Merged serially after the parallel part.
        struct PairSlab {
            std::vector<std::uint8_t> first_wins;  // combo-major
            std::vector<double> magnitude;
            bool active = false;
        };
        std::vector<PairSlab> slabs(pairs.size());

        parallel_for_tasks(static_cast<int>(pairs.size()), threads, [&](int p) {
            const auto [a, b] = pairs[static_cast<std::size_t>(p)];
            std::vector<int> rows;
            for (int i = 0; i < n; ++i) {
                if (in_val[static_cast<std::size_t>(i)]) continue;
                const int label = labels[static_cast<std::size_t>(i)];
                if (label == a || label == b) rows.push_back(i);
            }
            bool has_a = false;
            bool has_b = false;
            for (int r : rows) {
                if (labels[static_cast<std::size_t>(r)] == a) has_a = true;
                else has_b = true;
            }
            if (!has_a || !has_b) return;  // fold lost a class, pair abstains

            const int n_pair = static_cast<int>(rows.size());
            Matrix x_pair(n_pair, d);
            std::vector<std::int8_t> y_pair(static_cast<std::size_t>(n_pair));
            for (int i = 0; i < n_pair; ++i) {
                x_pair.row(i) = x.row(rows[static_cast<std::size_t>(i)]);
                y_pair[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])] == a ? 1 : -1;
            }

            // Distances are shared across the whole (C, gamma) grid.
            Matrix d2_tt;
            Matrix d2_vt;
            Matrix lin_tt;
            Matrix lin_vt;
            if (grid.kind == KernelSpec::Kind::rbf) {
                d2_tt = pairwise_squared_distances(x_pair, x_pair);
                d2_vt = pairwise_squared_distances(x_val, x_pair);
            } else {
                lin_tt = x_pair * x_pair.transpose();
                lin_vt = x_val * x_pair.transpose();
            }

            PairSlab& slab = slabs[static_cast<std::size_t>(p)];
            slab.first_wins.assign(static_cast<std::size_t>(num_combos) * n_val, 0);
            slab.magnitude.assign(static_cast<std::size_t>(num_combos) * n_val, 0.0);
            slab.active = true;

            std::vector<double> diag(static_cast<std::size_t>(n_pair));
            for (std::size_t g = 0; g < gammas.size(); ++g) {
                Matrix k_tt;
                Matrix k_vt;
                if (grid.kind == KernelSpec::Kind::rbf) {
                    k_tt = (-gammas[g] * d2_tt.array()).exp();
                    k_vt = (-gammas[g] * d2_vt.array()).exp();
                } else {
                    k_tt = lin_tt;
                    k_vt = lin_vt;
                }
                for (int i = 0; i < n_pair; ++i) diag[static_cast<std::size_t>(i)] = k_tt(i, i);

                for (std::size_t ci = 0; ci < grid.c_grid.size(); ++ci) {
                    const int combo = static_cast<int>(g * grid.c_grid.size() + ci);
                    detail::SmoResult solved = detail::smo_solve(
                        [&k_tt, n_pair](int i) { return k_tt.data() + static_cast<std::ptrdiff_t>(i) * n_pair; },
                        diag, y_pair, grid.c_grid[ci], grid.tol, 10 * n_pair);

                    Vector coeff = Vector::Zero(n_pair);
                    for (int i = 0; i < n_pair; ++i) {
                        coeff[i] = solved.alpha[i] * static_cast<double>(y_pair[static_cast<std::size_t>(i)]);
                    }
                    const Vector decisions = (k_vt * coeff).array() + solved.b;
                    for (int r = 0; r < n_val; ++r) {
                        const std::size_t slot = static_cast<std::size_t>(combo) * n_val + r;
                        slab.first_wins[slot] = decisions[r] >= 0.0 ? 1 : 0;
                        slab.magnitude[slot] = std::abs(decisions[r]);
                    }
                }
            }
        });

        // Merge pair votes into per-combo predictions for this fold.
        for (int combo = 0; combo < num_combos; ++combo) {
            for (int r = 0; r < n_val; ++r) {
                std::vector<int> votes(static_cast<std::size_t>(num_classes), 0);
                std::vector<double> magnitude(static_cast<std::size_t>(num_classes), 0.0);
                for (std::size_t p = 0; p < pairs.size(); ++p) {
                    const PairSlab& slab = slabs[p];
                    if (!slab.active) continue;
                    const std::size_t slot = static_cast<std::size_t>(combo) * n_val + r;
                    const int winner = slab.first_wins[slot] ? pairs[p].first : pairs[p].second;
                    votes[static_cast<std::size_t>(winner - 1)]++;
                    magnitude[static_cast<std::size_t>(winner - 1)] += slab.magnitude[slot];
                }
                const int predicted = vote_winner(votes, magnitude);
                if (predicted == labels[static_cast<std::size_t>(val_rows[static_cast<std::size_t>(r)])]) {
                    correct[static_cast<std::size_t>(combo)]++;
                }
            }
        }
        total += n_val;
    }

    int best_combo = 0;
    for (int combo = 1; combo < num_combos; ++combo) {
        if (correct[static_cast<std::size_t>(combo)] > correct[static_cast<std::size_t>(best_combo)]) {
            best_combo = combo;
        }
    }

    SmoOptions final_options;
    final_options.kernel.kind = grid.kind;
    final_options.kernel.gamma = gammas[static_cast<std::size_t>(best_combo) / grid.c_grid.size()];
    final_options.c = grid.c_grid[static_cast<std::size_t>(best_combo) % grid.c_grid.size()];
    final_options.tol = grid.tol;
    final_options.cache_mb = grid.cache_mb;

    if (choice) {
        choice->c = final_options.c;
        choice->gamma = final_options.kernel.gamma;
        choice->cv_accuracy = total > 0 ? static_cast<double>(correct[static_cast<std::size_t>(best_combo)]) /
                                              static_cast<double>(total)
                                        : 0.0;
    }
    return train_multiclass(x, labels, num_classes, final_options, threads);
}

}  // namespace hessae
