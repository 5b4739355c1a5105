#include "hessae/linalg.hpp"

#include "hessae/error.hpp"

#include <cmath>

namespace hessae {

PowerIterationResult power_iteration(const Matrix& a, double tol, int max_iters) {
    if (a.rows() != a.cols()) throw ShapeError("power_iteration: matrix must be square");
    const Eigen::Index n = a.rows();
    PowerIterationResult result;
    if (n == 0) return result;

    // Deterministic start; the small index-dependent tilt avoids starting
    // exactly orthogonal to the dominant eigenvector on symmetric inputs.
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 1e-3 * static_cast<double>(i % 7);
    v.normalize();

    double lambda = 0.0;
    for (int iter = 1; iter <= max_iters; ++iter) {
        Vector w = a * v;
        const double norm = w.norm();
        if (norm == 0.0) {
            result.eigenvalue = 0.0;
            result.eigenvector = v;
            result.iterations = iter;
            result.converged = true;
            return result;
        }
        v = w / norm;
        const double next_lambda = v.dot(a * v);
        if (std::abs(next_lambda - lambda) <= tol * std::max(1.0, std::abs(next_lambda))) {
            result.eigenvalue = next_lambda;
            result.eigenvector = v;
            result.iterations = iter;
            result.converged = true;
            return result;
        }
        lambda = next_lambda;
    }
    result.eigenvalue = lambda;
    result.eigenvector = v;
    result.iterations = max_iters;
    result.converged = false;
    return result;
}

Vector column_variances(const Matrix& x) {
    const Eigen::Index n = x.rows();
    Vector var = Vector::Zero(x.cols());
    if (n < 2) return var;
    const RowVector mean = x.colwise().mean();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        var[j] = (x.col(j).array() - mean[j]).square().sum() / static_cast<double>(n - 1);
    }
    return var;
}

Matrix pairwise_squared_distances(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw ShapeError("pairwise_squared_distances: dimension mismatch");
    const Vector a2 = a.rowwise().squaredNorm();
    const Vector b2 = b.rowwise().squaredNorm();
    Matrix d = -2.0 * a * b.transpose();
    d.colwise() += a2;
    d.rowwise() += b2.transpose();
    return d.cwiseMax(0.0);
}

Matrix smallest_real_eigenvectors(const Matrix& a, const Matrix& b, double eps, int k, Vector* eigenvalues) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
        throw ShapeError("smallest_real_eigenvectors: matrices must be square and same size");
    }
    const Eigen::Index d = a.rows();
    if (k < 1 || k > d) throw ShapeError("smallest_real_eigenvectors: k out of range");

    Matrix constraint = b;
    constraint.diagonal().array() += eps;
    const Matrix c = constraint.partialPivLu().solve(a);

    Eigen::EigenSolver<Matrix> solver(c);
    if (solver.info() != Eigen::Success) throw Error("smallest_real_eigenvectors: eigen solve failed");

    constexpr double kImagTol = 1e-8;
    struct Pair {
        double value;
        Eigen::Index index;
    };
    std::vector<Pair> usable;
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto lambda = solver.eigenvalues()[i];
        if (!std::isfinite(lambda.real()) || std::abs(lambda.imag()) >= kImagTol) continue;
        if (solver.eigenvectors().col(i).imag().cwiseAbs().maxCoeff() >= kImagTol) continue;
        usable.push_back({lambda.real(), i});
    }
    if (static_cast<int>(usable.size()) < k) {
        throw Error("smallest_real_eigenvectors: only " + std::to_string(usable.size()) +
                    " real eigenpairs available, " + std::to_string(k) + " requested");
    }
    std::sort(usable.begin(), usable.end(), [](const Pair& x, const Pair& y) {
        if (x.value != y.value) return x.value < y.value;
        return x.index < y.index;
    });

    Matrix vectors(d, k);
    if (eigenvalues) eigenvalues->resize(k);
    for (int j = 0; j < k; ++j) {
        Vector v = solver.eigenvectors().col(usable[static_cast<std::size_t>(j)].index).real();
        v.normalize();
        for (Eigen::Index i = 0; i < d; ++i) {
            if (std::abs(v[i]) > 1e-12) {
                if (v[i] < 0.0) v = -v;
                break;
            }
        }
        vectors.col(j) = v;
        if (eigenvalues) (*eigenvalues)[j] = usable[static_cast<std::size_t>(j)].value;
    }
    return vectors;
}

}  // namespace hessae
