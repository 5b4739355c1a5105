#pragma once

#include "hessae/types.hpp"

#include <cstdint>
#include <vector>

namespace hessae {

/// Between/within-class scatter matrices computed over outlier-trimmed
/// local neighborhoods of the class and global centers.
struct LocalScatter {
    Matrix between;               // S_LB, d x d
    Matrix within;                // S_LW, d x d
    Vector global_center;         // mean of the k_m retained rows
    std::vector<Vector> between_class_centers;  // per class in the local part
    std::vector<Vector> within_class_centers;   // per class
    std::vector<int> local_class_counts;        // rows of each class in the local part
    std::vector<int> within_counts;             // k_mc per class
    int local_count = 0;                        // k_m
};

/// Trims each class to its floor(r_w * N_c) members nearest the class mean
/// for the within scatter, and the data to its floor(r_b * N) rows nearest
/// the global mean for the between scatter.
LocalScatter local_scatter(const Matrix& x, const Labels& labels, double r_b, double r_w);

/// Symmetric k-nearest-neighbor graph: an edge when either endpoint ranks
/// the other among its k nearest (ties by index). No self loops.
struct GraphReg {
    std::vector<std::vector<int>> neighbors;  // sorted adjacency lists
    Vector degrees;
    int k_nn = 0;

    Matrix affinity_dense() const;
    Matrix laplacian_dense() const;
};

GraphReg knn_affinity(const Matrix& x, int k_nn);

/// X^T L X for row-major samples; d x d, symmetric PSD.
Matrix graph_scatter(const Matrix& x, const GraphReg& graph);

/// Discriminant directions: eigenvectors of inv(S_LB - gamma*G + eps*I) S_LW
/// with the k smallest eigenvalues, unit-normalized, ascending.
Matrix solve_projection(const Matrix& s_lw, const Matrix& s_lb, const Matrix& graph_scatter_term,
                        double gamma, int k, double eps, Vector* eigenvalues = nullptr);

struct WlppdConfig {
    double r_b = 0.9;
    double r_w = 0.9;
    double gamma = 0.1;
    int k = 0;                        // output dimension; 0 = auto
    int k_nn = 5;
    int num_subspaces = 5;            // P
    double subspace_fraction = 0.8;   // per-subspace feature share
    double eps = 1e-6;
    bool alpha_grid_search = true;
    double validation_fraction = 0.2;
};

/// Weighted combination of per-subspace projections.
struct Projector {
    Matrix combined;                          // d x k
    std::vector<Matrix> subspace_projections; // P lifted d x k matrices
    std::vector<double> weights;              // alpha, nonneg, sums to 1
    double gamma = 0.0;
    double eps = 0.0;
    int k = 0;
    int k_nn = 0;

    int input_dim() const { return static_cast<int>(combined.rows()); }
};

/// Fits projections on random feature subspaces and combines them with
/// simplex weights chosen by a 0.1-step grid against an internal
/// validation split (uniform weights when the search is off).
Projector fit_wlppd(const Matrix& x, const Labels& labels, const WlppdConfig& cfg, std::uint64_t seed);

Matrix project(const Projector& projector, const Matrix& x);

/// All weight vectors on the P-simplex with entries in steps of 0.1,
/// lexicographic order. Exposed for the grid-search oracle.
std::vector<std::vector<double>> simplex_grid(int parts, int steps = 10);

}  // namespace hessae
