#include "hessae/lasso.hpp"

#include "hessae/dataset.hpp"
#include "hessae/error.hpp"
#include "hessae/linalg.hpp"
#include "hessae/rng.hpp"
#include "hessae/warnings.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hessae {

double soft_threshold(double u, double tau) {
    if (tau < 0.0) throw ConfigError("soft_threshold: tau must be >= 0");
    if (u > tau) return u - tau;
    if (u < -tau) return u + tau;
    return 0.0;
}

double lasso_objective(const Matrix& x, const Vector& y, const Vector& w, double kappa) {
    return (y - x * w).squaredNorm() + kappa * w.lpNorm<1>();
}

LassoResult lasso_pgd(const Matrix& x, const Vector& y, const LassoConfig& cfg) {
    if (x.rows() != y.size()) throw ShapeError("lasso_pgd: row count mismatch");
    if (cfg.kappa < 0.0) throw ConfigError("lasso_pgd: kappa must be >= 0");
    const Eigen::Index d = x.cols();

    // Rescale columns to unit sample variance so the L1 penalty treats
    // features even-handedly. Columns are not centered: the model has no
    // intercept, and a pure rescale keeps the problem equivalent, so the
    // returned coefficients map back exactly.
    Vector scale(d);
    const Vector variances = column_variances(x);
    for (Eigen::Index j = 0; j < d; ++j) {
        scale[j] = variances[j] > 0.0 ? std::sqrt(variances[j]) : 0.0;
    }
    Matrix xs(x.rows(), d);
    for (Eigen::Index j = 0; j < d; ++j) {
        xs.col(j) = scale[j] > 0.0 ? (x.col(j) / scale[j]).eval() : Vector::Zero(x.rows());
    }

    const Matrix gram = xs.transpose() * xs;
    const PowerIterationResult top = power_iteration(gram, 1e-10, 1000);
    // Tiny inflation keeps the step a true descent step when power
    // iteration approaches the eigenvalue from below.
    const double m = std::max(2.0 * top.eigenvalue * (1.0 + 1e-8), 1e-12);

    Vector w = Vector::Zero(d);
    const Vector xty = xs.transpose() * y;
    const double yty = y.squaredNorm();
    auto objective_at = [&](const Vector& v, const Vector& gram_v) {
        return yty - 2.0 * v.dot(xty) + v.dot(gram_v) + cfg.kappa * v.lpNorm<1>();
    };

    LassoResult result;
    result.objective_history.push_back(objective_at(w, Vector::Zero(d)));
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        const Vector gram_w = gram * w;
        const Vector grad = 2.0 * (gram_w - xty);
        Vector next(d);
        const double tau = cfg.kappa / m;
        for (Eigen::Index j = 0; j < d; ++j) {
            next[j] = soft_threshold(w[j] - grad[j] / m, tau);
        }
        const double delta = (next - w).lpNorm<Eigen::Infinity>();
        w = std::move(next);
        result.iterations = iter;
        result.objective_history.push_back(objective_at(w, gram * w));
        if (!std::isfinite(result.objective_history.back())) {
            throw TrainingError("lasso_pgd: non-finite objective (bad step constant)");
        }
        if (delta <= cfg.tol) {
            result.converged = true;
            break;
        }
    }
    result.objective = result.objective_history.back();

    // Back to the original column scale.
    for (Eigen::Index j = 0; j < d; ++j) {
        w[j] = scale[j] > 0.0 ? w[j] / scale[j] : 0.0;
    }
    result.w = std::move(w);
    return result;
}

SelectionMask select_support(const std::vector<Vector>& coefficient_sets, int num_columns, double threshold) {
    std::vector<double> best(static_cast<std::size_t>(num_columns), 0.0);
    for (const auto& w : coefficient_sets) {
        if (w.size() != num_columns) throw ShapeError("select_support: coefficient size mismatch");
        for (int j = 0; j < num_columns; ++j) {
            best[static_cast<std::size_t>(j)] = std::max(best[static_cast<std::size_t>(j)], std::abs(w[j]));
        }
    }
    SelectionMask mask;
    for (int j = 0; j < num_columns; ++j) {
        if (best[static_cast<std::size_t>(j)] > threshold) mask.indices.push_back(j);
    }
    if (mask.indices.empty()) {
        const int keep = std::max(1, (num_columns + 3) / 4);
        warnings::emit("select_support: empty support, falling back to the " + std::to_string(keep) +
                       " largest-magnitude columns");
        std::vector<int> order(static_cast<std::size_t>(num_columns));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double ma = best[static_cast<std::size_t>(a)];
            const double mb = best[static_cast<std::size_t>(b)];
            if (ma != mb) return ma > mb;
            return a < b;
        });
        mask.indices.assign(order.begin(), order.begin() + keep);
        std::sort(mask.indices.begin(), mask.indices.end());
    }
    return mask;
}

SelectionMask select_support(const Vector& w, double threshold) {
    return select_support(std::vector<Vector>{w}, static_cast<int>(w.size()), threshold);
}

Matrix apply_mask(const Matrix& x, const SelectionMask& mask) {
    Matrix out(x.rows(), static_cast<Eigen::Index>(mask.indices.size()));
    for (std::size_t j = 0; j < mask.indices.size(); ++j) {
        const int col = mask.indices[j];
        if (col < 0 || col >= x.cols()) throw ShapeError("apply_mask: column out of range");
        out.col(static_cast<Eigen::Index>(j)) = x.col(col);
    }
    return out;
}

namespace {

Vector one_vs_rest_targets(const Labels& labels, int cls) {
    Vector y(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        y[static_cast<Eigen::Index>(i)] = labels[i] == cls ? 1.0 : 0.0;
    }
    return y;
}

// Regression-score classifier: argmax over the per-class fits, ties to the
// lower class index.
double score_accuracy(const Matrix& x, const Labels& labels, const std::vector<Vector>& class_w) {
    if (labels.empty()) return 0.0;
    Matrix scores(x.rows(), static_cast<Eigen::Index>(class_w.size()));
    for (std::size_t c = 0; c < class_w.size(); ++c) {
        scores.col(static_cast<Eigen::Index>(c)) = x * class_w[c];
    }
    int correct = 0;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        int best = 0;
        for (int c = 1; c < static_cast<int>(class_w.size()); ++c) {
            if (scores(i, c) > scores(i, best)) best = c;
        }
        if (best + 1 == labels[static_cast<std::size_t>(i)]) correct++;
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

Matrix gather_rows(const Matrix& x, const std::vector<int>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    return out;
}

Labels gather_labels(const Labels& labels, const std::vector<int>& rows) {
    Labels out;
    out.reserve(rows.size());
    for (int r : rows) out.push_back(labels[static_cast<std::size_t>(r)]);
    return out;
}

std::vector<Vector> fit_per_class(const Matrix& x, const Labels& labels, int num_classes,
                                  const LassoConfig& cfg) {
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(num_classes));
    for (int c = 1; c <= num_classes; ++c) {
        out.push_back(lasso_pgd(x, one_vs_rest_targets(labels, c), cfg).w);
    }
    return out;
}

double kappa_upper_bound(const Matrix& x, const Labels& labels, int num_classes) {
    // Smallest kappa that zeroes every one-vs-rest problem, computed on the
    // internally rescaled columns to match lasso_pgd.
    const Vector variances = column_variances(x);
    Matrix xs(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double s = variances[j] > 0.0 ? std::sqrt(variances[j]) : 0.0;
        xs.col(j) = s > 0.0 ? (x.col(j) / s).eval() : Vector::Zero(x.rows());
    }
    double bound = 0.0;
    for (int c = 1; c <= num_classes; ++c) {
        const Vector y = one_vs_rest_targets(labels, c);
        bound = std::max(bound, 2.0 * (xs.transpose() * y).lpNorm<Eigen::Infinity>());
    }
    return bound;
}

}  // namespace

L1Selection select_features_l1(const Matrix& x, const Labels& labels, int num_classes,
                               const L1SelectConfig& cfg, std::uint64_t seed) {
    if (x.rows() != static_cast<Eigen::Index>(labels.size())) throw ShapeError("select_features_l1: size mismatch");

    const auto [fit_rows, val_rows] = stratified_validation_rows(labels, num_classes, cfg.validation_fraction, seed);
    const Matrix x_fit = gather_rows(x, fit_rows);
    const Labels y_fit = gather_labels(labels, fit_rows);
    const Matrix x_val = gather_rows(x, val_rows);
    const Labels y_val = gather_labels(labels, val_rows);

    const double kappa_base = kappa_upper_bound(x_fit, y_fit, num_classes) * cfg.kappa_max_scale;

    LassoConfig run_cfg;
    run_cfg.max_iters = cfg.max_iters;
    run_cfg.tol = cfg.tol;

    double best_kappa = 0.0;
    double best_accuracy = -1.0;
    for (double factor : cfg.kappa_grid_factors) {
        run_cfg.kappa = factor * kappa_base;
        const std::vector<Vector> ws = fit_per_class(x_fit, y_fit, num_classes, run_cfg);
        const double accuracy = val_rows.empty() ? score_accuracy(x_fit, y_fit, ws)
                                                 : score_accuracy(x_val, y_val, ws);
        // Ties go to the sparser (larger kappa) model.
        if (accuracy > best_accuracy || (accuracy == best_accuracy && run_cfg.kappa > best_kappa)) {
            best_accuracy = accuracy;
            best_kappa = run_cfg.kappa;
        }
    }

    L1Selection selection;
    selection.chosen_kappa = best_kappa;
    selection.validation_accuracy = best_accuracy;
    run_cfg.kappa = best_kappa;
    selection.class_coefficients = fit_per_class(x, labels, num_classes, run_cfg);
    selection.mask = select_support(selection.class_coefficients, static_cast<int>(x.cols()));
    return selection;
}

}  // namespace hessae
