#pragma once

#include "hessae/types.hpp"

#include <cstdint>
#include <vector>

namespace hessae {

/// Shrinkage operator: u-tau above tau, u+tau below -tau, zero between.
double soft_threshold(double u, double tau);

struct LassoConfig {
    double kappa = 0.0;    // L1 weight
    int max_iters = 2000;
    double tol = 1e-9;     // infinity-norm change between iterates
};

struct LassoResult {
    Vector w;           // coefficients in the original column basis
    int iterations = 0;
    double objective = 0.0;  // squared error + kappa * |w|_1 on the scaled problem
    std::vector<double> objective_history;  // entry per iterate, start at w = 0
    bool converged = false;
};

/// L1-regularized least squares min_w sum_i (y_i - w.x_i)^2 + kappa |w|_1,
/// solved by proximal gradient descent with step 1/M, M twice the largest
/// eigenvalue of X^T X (power iteration). Columns are rescaled to unit
/// sample variance internally; the returned coefficients are mapped back.
LassoResult lasso_pgd(const Matrix& x, const Vector& y, const LassoConfig& cfg);

/// Value of the L1 least-squares objective for given coefficients.
double lasso_objective(const Matrix& x, const Vector& y, const Vector& w, double kappa);

struct SelectionMask {
    std::vector<int> indices;  // kept columns, ascending

    int size() const { return static_cast<int>(indices.size()); }
};

/// Keeps columns whose coefficient magnitude exceeds the threshold across
/// any of the given coefficient vectors. An empty support falls back to the
/// ceil(d/4) largest-magnitude columns, with a warning.
SelectionMask select_support(const std::vector<Vector>& coefficient_sets, int num_columns,
                             double threshold = 1e-10);
SelectionMask select_support(const Vector& w, double threshold = 1e-10);

Matrix apply_mask(const Matrix& x, const SelectionMask& mask);

struct L1SelectConfig {
    std::vector<double> kappa_grid_factors = {0.001, 0.01, 0.1, 1.0, 10.0};
    double kappa_max_scale = 0.01;     // grid = factors * (kappa_max * scale)
    int max_iters = 2000;
    double tol = 1e-9;
    double validation_fraction = 0.2;  // internal split for the kappa choice
};

struct L1Selection {
    SelectionMask mask;
    double chosen_kappa = 0.0;
    double validation_accuracy = 0.0;
    std::vector<Vector> class_coefficients;  // final refit, one per class
};

/// Multiclass feature selection: one-vs-rest 0/1 targets per class, a lasso
/// run per class, union of supports. kappa comes from a grid evaluated by
/// one-vs-rest regression-score accuracy on an internal stratified split.
L1Selection select_features_l1(const Matrix& x, const Labels& labels, int num_classes,
                               const L1SelectConfig& cfg, std::uint64_t seed);

}  // namespace hessae
