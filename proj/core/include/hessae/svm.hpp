#pragma once

#include "hessae/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace hessae {

struct KernelSpec {
    enum class Kind { linear, rbf };
    Kind kind = Kind::rbf;
    double gamma = 1.0;  // rbf only
};

double kernel_value(const KernelSpec& kernel, const RowVector& a, const RowVector& b);

/// Kernel values between all row pairs of a and b.
Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelSpec& kernel);

struct BinarySvm {
    Matrix support_vectors;  // n_sv x d
    Vector coefficients;     // alpha_i * y_i per support vector
    double bias = 0.0;
    double c = 1.0;
    KernelSpec kernel;

    double decision(const RowVector& x) const;
    Vector decision_batch(const Matrix& x) const;
};

/// Sign of the decision value; exact zero counts as +1.
std::pair<int, double> predict_binary(const BinarySvm& model, const RowVector& x);

struct SmoOptions {
    double c = 1.0;
    KernelSpec kernel;
    double tol = 1e-3;        // maximal KKT violation at convergence
    double cache_mb = 256.0;  // kernel cache budget
};

struct SmoDiagnostics {
    Vector alpha;  // one entry per training row
    int iterations = 0;
    bool converged = false;
};

/// Soft-margin SVM trained with sequential minimal optimization; the
/// working pair is always the maximal KKT violator. Deterministic.
BinarySvm train_binary(const Matrix& x, const std::vector<int>& y, const SmoOptions& options,
                       SmoDiagnostics* diagnostics = nullptr);

struct MulticlassSvm {
    int num_classes = 0;
    std::vector<std::pair<int, int>> class_pairs;  // (a, b), a < b
    std::vector<BinarySvm> models;
    KernelSpec kernel;
    double c = 1.0;

    int predict(const RowVector& x) const;
    Labels predict(const Matrix& x) const;
};

/// One-vs-one decomposition over all class pairs. Vote ties go to the
/// larger summed decision magnitude, then the lower class index.
MulticlassSvm train_multiclass(const Matrix& x, const Labels& labels, int num_classes,
                               const SmoOptions& options, int threads = 1);

struct SvmGridConfig {
    std::vector<double> c_grid = {0.1, 1.0, 10.0, 100.0};
    std::vector<int> gamma_exponents = {-4, -3, -2, -1, 0, 1, 2, 3, 4};  // gamma = 2^e / d
    KernelSpec::Kind kind = KernelSpec::Kind::rbf;
    int folds = 5;
    double tol = 1e-3;
    double cache_mb = 256.0;
};

struct SvmGridChoice {
    double c = 1.0;
    double gamma = 0.0;
    double cv_accuracy = 0.0;
};

/// Grid search over (C, gamma) by stratified k-fold cross validation,
/// then a final fit on all rows at the winning combination. Ties prefer
/// the earlier grid entry (gamma ascending, then C ascending).
MulticlassSvm train_multiclass_cv(const Matrix& x, const Labels& labels, int num_classes,
                                  const SvmGridConfig& grid, std::uint64_t seed, int threads,
                                  SvmGridChoice* choice = nullptr);

}  // namespace hessae
