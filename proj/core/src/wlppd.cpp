#include "hessae/wlppd.hpp"

#include "hessae/dataset.hpp"
#include "hessae/error.hpp"
#include "hessae/linalg.hpp"
#include "hessae/rng.hpp"
#include "hessae/warnings.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hessae {

namespace {

// Indices of the `count` rows nearest to `center`, distance ties broken by
// lower row index.
std::vector<int> nearest_rows(const Matrix& x, const std::vector<int>& candidates, const Vector& center,
                              int count) {
    std::vector<std::pair<double, int>> ranked;
    ranked.reserve(candidates.size());
    for (int row : candidates) {
        const double d2 = (x.row(row).transpose() - center).squaredNorm();
        ranked.emplace_back(d2, row);
    }
    std::sort(ranked.begin(), ranked.end());
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(ranked[static_cast<std::size_t>(i)].second);
    return out;
}

Vector rows_mean(const Matrix& x, const std::vector<int>& rows) {
    Vector mean = Vector::Zero(x.cols());
    for (int r : rows) mean += x.row(r).transpose();
    return mean / static_cast<double>(rows.size());
}

}  // namespace

LocalScatter local_scatter(const Matrix& x, const Labels& labels, double r_b, double r_w) {
    if (x.rows() != static_cast<Eigen::Index>(labels.size())) throw ShapeError("local_scatter: size mismatch");
    if (!(r_b > 0.0 && r_b <= 1.0) || !(r_w > 0.0 && r_w <= 1.0)) {
        throw ConfigError("local_scatter: r_b and r_w must be in (0,1]");
    }
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    const int num_classes = *std::max_element(labels.begin(), labels.end());

    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(num_classes));
    for (int i = 0; i < n; ++i) by_class[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)] - 1)].push_back(i);

    LocalScatter scatter;
    scatter.within = Matrix::Zero(d, d);
    scatter.between = Matrix::Zero(d, d);
    scatter.within_class_centers.resize(static_cast<std::size_t>(num_classes));
    scatter.between_class_centers.resize(static_cast<std::size_t>(num_classes));
    scatter.local_class_counts.assign(static_cast<std::size_t>(num_classes), 0);
    scatter.within_counts.assign(static_cast<std::size_t>(num_classes), 0);

    // Within scatter: per class, keep the floor(r_w * N_c) rows nearest the
    // class mean, center on the kept rows.
    for (int c = 0; c < num_classes; ++c) {
        const auto& rows = by_class[static_cast<std::size_t>(c)];
        if (rows.empty()) continue;
        const int keep = static_cast<int>(std::floor(r_w * static_cast<double>(rows.size())));
        if (keep < 1) {
            throw ConfigError("local_scatter: r_w leaves class " + std::to_string(c + 1) + " empty");
        }
        const Vector class_mean = rows_mean(x, rows);
        const std::vector<int> kept = nearest_rows(x, rows, class_mean, keep);
        const Vector center = rows_mean(x, kept);
        for (int r : kept) {
            const Vector diff = x.row(r).transpose() - center;
            scatter.within.noalias() += diff * diff.transpose();
        }
        scatter.within_class_centers[static_cast<std::size_t>(c)] = center;
        scatter.within_counts[static_cast<std::size_t>(c)] = keep;
    }

    // Between scatter: keep the floor(r_b * N) rows nearest the overall
    // mean, recompute the center over them, then the usual weighted outer
    // products of class centers within that local part.
    const int keep_global = static_cast<int>(std::floor(r_b * static_cast<double>(n)));
    if (keep_global < 1) throw ConfigError("local_scatter: r_b leaves no samples");
    std::vector<int> all_rows(static_cast<std::size_t>(n));
    std::iota(all_rows.begin(), all_rows.end(), 0);
    const Vector full_mean = rows_mean(x, all_rows);
    const std::vector<int> local_part = nearest_rows(x, all_rows, full_mean, keep_global);
    scatter.global_center = rows_mean(x, local_part);
    scatter.local_count = keep_global;

    std::vector<std::vector<int>> local_by_class(static_cast<std::size_t>(num_classes));
    for (int r : local_part) {
        local_by_class[static_cast<std::size_t>(labels[static_cast<std::size_t>(r)] - 1)].push_back(r);
    }
    for (int c = 0; c < num_classes; ++c) {
        const auto& rows = local_by_class[static_cast<std::size_t>(c)];
        scatter.local_class_counts[static_cast<std::size_t>(c)] = static_cast<int>(rows.size());
        if (rows.empty()) continue;
        const Vector center = rows_mean(x, rows);
        scatter.between_class_centers[static_cast<std::size_t>(c)] = center;
        const Vector diff = center - scatter.global_center;
        scatter.between.noalias() += static_cast<double>(rows.size()) * (diff * diff.transpose());
    }
    return scatter;
}

Matrix GraphReg::affinity_dense() const {
    const auto n = static_cast<Eigen::Index>(neighbors.size());
    Matrix a = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j : neighbors[static_cast<std::size_t>(i)]) a(i, j) = 1.0;
    }
    return a;
}

Matrix GraphReg::laplacian_dense() const {
    Matrix l = -affinity_dense();
    l.diagonal() = degrees;
    return l;
}

GraphReg knn_affinity(const Matrix& x, int k_nn) {
    const int n = static_cast<int>(x.rows());
    if (k_nn < 1 || k_nn >= n) throw ConfigError("knn_affinity: need 1 <= k_nn < N");

    GraphReg graph;
    graph.k_nn = k_nn;
    graph.neighbors.assign(static_cast<std::size_t>(n), {});

    const Vector sq = x.rowwise().squaredNorm();
    std::vector<std::pair<double, int>> ranked(static_cast<std::size_t>(n - 1));
    for (int i = 0; i < n; ++i) {
        ranked.clear();
        const Vector dots = x * x.row(i).transpose();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d2 = std::max(0.0, sq[i] + sq[j] - 2.0 * dots[j]);
            ranked.emplace_back(d2, j);
        }
        std::partial_sort(ranked.begin(), ranked.begin() + k_nn, ranked.end());
        for (int t = 0; t < k_nn; ++t) {
            const int j = ranked[static_cast<std::size_t>(t)].second;
            graph.neighbors[static_cast<std::size_t>(i)].push_back(j);
            graph.neighbors[static_cast<std::size_t>(j)].push_back(i);  // symmetric OR
        }
    }
    graph.degrees = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
        auto& adj = graph.neighbors[static_cast<std::size_t>(i)];
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
        graph.degrees[i] = static_cast<double>(adj.size());
    }
    return graph;
}

Matrix graph_scatter(const Matrix& x, const GraphReg& graph) {
    if (x.rows() != static_cast<Eigen::Index>(graph.neighbors.size())) {
        throw ShapeError("graph_scatter: row count mismatch");
    }
    // X^T L X = X^T D X - X^T A X, with the adjacency term accumulated from
    // per-row neighbor sums, so the N x N matrices never materialize.
    Matrix weighted = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i) weighted.row(i) *= graph.degrees[i];
    Matrix result = x.transpose() * weighted;

    Matrix neighbor_sums = Matrix::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (int j : graph.neighbors[static_cast<std::size_t>(i)]) {
            neighbor_sums.row(i) += x.row(j);
        }
    }
    result.noalias() -= x.transpose() * neighbor_sums;
    return 0.5 * (result + result.transpose());
}

Matrix solve_projection(const Matrix& s_lw, const Matrix& s_lb, const Matrix& graph_scatter_term,
                        double gamma, int k, double eps, Vector* eigenvalues) {
    const Matrix constraint = s_lb - gamma * graph_scatter_term;
    return smallest_real_eigenvectors(s_lw, constraint, eps, k, eigenvalues);
}

std::vector<std::vector<double>> simplex_grid(int parts, int steps) {
    std::vector<std::vector<double>> grid;
    std::vector<int> current(static_cast<std::size_t>(parts), 0);
    // Lexicographic enumeration of compositions of `steps` into `parts`.
    auto recurse = [&](auto&& self, int position, int remaining) -> void {
        if (position == parts - 1) {
            current[static_cast<std::size_t>(position)] = remaining;
            std::vector<double> weights(static_cast<std::size_t>(parts));
            for (int i = 0; i < parts; ++i) {
                weights[static_cast<std::size_t>(i)] =
                    static_cast<double>(current[static_cast<std::size_t>(i)]) / static_cast<double>(steps);
            }
            grid.push_back(std::move(weights));
            return;
        }
        for (int take = 0; take <= remaining; ++take) {
            current[static_cast<std::size_t>(position)] = take;
            self(self, position + 1, remaining - take);
        }
    };
    recurse(recurse, 0, steps);
    return grid;
}

namespace {

int resolve_output_dim(const WlppdConfig& cfg, int subspace_dim, int num_classes) {
    if (cfg.k > 0) {
        if (cfg.k > subspace_dim) {
            throw ConfigError("fit_wlppd: k exceeds the subspace dimension");
        }
        return cfg.k;
    }
    return std::clamp(std::max(num_classes - 1, 8), 1, subspace_dim);
}

Labels gather(const Labels& labels, const std::vector<int>& rows) {
    Labels out;
    out.reserve(rows.size());
    for (int r : rows) out.push_back(labels[static_cast<std::size_t>(r)]);
    return out;
}

}  // namespace

Projector fit_wlppd(const Matrix& x, const Labels& labels, const WlppdConfig& cfg, std::uint64_t seed) {
    if (x.rows() != static_cast<Eigen::Index>(labels.size())) throw ShapeError("fit_wlppd: size mismatch");
    const int d = static_cast<int>(x.cols());
    const int n = static_cast<int>(x.rows());
    const int num_classes = *std::max_element(labels.begin(), labels.end());
    {
        std::vector<bool> seen(static_cast<std::size_t>(num_classes), false);
        for (int l : labels) seen[static_cast<std::size_t>(l - 1)] = true;
        if (std::count(seen.begin(), seen.end(), true) < 2) {
            throw ConfigError("fit_wlppd: need at least two classes");
        }
    }
    if (cfg.num_subspaces < 1) throw ConfigError("fit_wlppd: num_subspaces must be >= 1");

    const int subspace_dim = std::clamp(
        static_cast<int>(std::ceil(cfg.subspace_fraction * static_cast<double>(d))), 1, d);
    const int k = resolve_output_dim(cfg, subspace_dim, num_classes);
    const int k_nn = std::min(cfg.k_nn, n - 1);

    Projector projector;
    projector.gamma = cfg.gamma;
    projector.eps = cfg.eps;
    projector.k = k;
    projector.k_nn = k_nn;

    for (int p = 0; p < cfg.num_subspaces; ++p) {
        Rng rng(derive_seed(seed, 0x5ab5, static_cast<std::uint64_t>(p)));
        std::vector<int> features = rng.sample_without_replacement(d, subspace_dim);
        std::sort(features.begin(), features.end());

        Matrix xs(x.rows(), subspace_dim);
        for (int j = 0; j < subspace_dim; ++j) xs.col(j) = x.col(features[static_cast<std::size_t>(j)]);

        const LocalScatter scatter = local_scatter(xs, labels, cfg.r_b, cfg.r_w);
        const GraphReg graph = knn_affinity(xs, k_nn);
        const Matrix graph_term = graph_scatter(xs, graph);
        const Matrix w_sub = solve_projection(scatter.within, scatter.between, graph_term, cfg.gamma, k, cfg.eps);

        Matrix lifted = Matrix::Zero(d, k);
        for (int j = 0; j < subspace_dim; ++j) {
            lifted.row(features[static_cast<std::size_t>(j)]) = w_sub.row(j);
        }
        projector.subspace_projections.push_back(std::move(lifted));
    }

    const int parts = cfg.num_subspaces;
    projector.weights.assign(static_cast<std::size_t>(parts), 1.0 / static_cast<double>(parts));

    if (cfg.alpha_grid_search && parts > 1) {
        if (parts > 8) {
            warnings::emit("fit_wlppd: weight grid search disabled for more than 8 subspaces, using uniform weights");
        } else {
            const auto [fit_rows, val_rows] =
                stratified_validation_rows(labels, num_classes, cfg.validation_fraction, derive_seed(seed, 0xa1fa));
            if (!val_rows.empty()) {
                const Labels y_fit = gather(labels, fit_rows);
                const Labels y_val = gather(labels, val_rows);

                // Projections are linear in alpha, so per-subspace class
                // centroids and validation projections combine directly.
                std::vector<Matrix> centroid_parts;  // per subspace: C x k
                std::vector<Matrix> val_parts;       // per subspace: val x k
                std::vector<std::vector<int>> class_rows(static_cast<std::size_t>(num_classes));
                for (std::size_t i = 0; i < fit_rows.size(); ++i) {
                    class_rows[static_cast<std::size_t>(y_fit[i] - 1)].push_back(static_cast<int>(i));
                }
                for (const auto& w_i : projector.subspace_projections) {
                    Matrix proj_fit(static_cast<Eigen::Index>(fit_rows.size()), k);
                    for (std::size_t i = 0; i < fit_rows.size(); ++i) {
                        proj_fit.row(static_cast<Eigen::Index>(i)) = x.row(fit_rows[i]) * w_i;
                    }
                    Matrix centroids = Matrix::Zero(num_classes, k);
                    for (int c = 0; c < num_classes; ++c) {
                        for (int r : class_rows[static_cast<std::size_t>(c)]) centroids.row(c) += proj_fit.row(r);
                        if (!class_rows[static_cast<std::size_t>(c)].empty()) {
                            centroids.row(c) /= static_cast<double>(class_rows[static_cast<std::size_t>(c)].size());
                        }
                    }
                    centroid_parts.push_back(std::move(centroids));
                    Matrix proj_val(static_cast<Eigen::Index>(val_rows.size()), k);
                    for (std::size_t i = 0; i < val_rows.size(); ++i) {
                        proj_val.row(static_cast<Eigen::Index>(i)) = x.row(val_rows[i]) * w_i;
                    }
                    val_parts.push_back(std::move(proj_val));
                }

                int best_correct = -1;
                std::vector<double> best_weights = projector.weights;
                for (const auto& candidate : simplex_grid(parts)) {
                    Matrix centroids = Matrix::Zero(num_classes, k);
                    Matrix val = Matrix::Zero(static_cast<Eigen::Index>(val_rows.size()), k);
                    for (int i = 0; i < parts; ++i) {
                        if (candidate[static_cast<std::size_t>(i)] == 0.0) continue;
                        centroids += candidate[static_cast<std::size_t>(i)] * centroid_parts[static_cast<std::size_t>(i)];
                        val += candidate[static_cast<std::size_t>(i)] * val_parts[static_cast<std::size_t>(i)];
                    }
                    int correct = 0;
                    for (Eigen::Index r = 0; r < val.rows(); ++r) {
                        int best_class = 0;
                        double best_dist = (val.row(r) - centroids.row(0)).squaredNorm();
                        for (int c = 1; c < num_classes; ++c) {
                            const double dist = (val.row(r) - centroids.row(c)).squaredNorm();
                            if (dist < best_dist) {
                                best_dist = dist;
                                best_class = c;
                            }
                        }
                        if (best_class + 1 == y_val[static_cast<std::size_t>(r)]) correct++;
                    }
                    if (correct > best_correct) {
                        best_correct = correct;
                        best_weights = candidate;
                    }
                }
                projector.weights = best_weights;
            }
        }
    }

    projector.combined = Matrix::Zero(d, k);
    for (int i = 0; i < parts; ++i) {
        projector.combined += projector.weights[static_cast<std::size_t>(i)] *
                              projector.subspace_projections[static_cast<std::size_t>(i)];
    }
    return projector;
}

Matrix project(const Projector& projector, const Matrix& x) {
    if (x.cols() != projector.combined.rows()) throw ShapeError("project: dimension mismatch");
    return x * projector.combined;
}

}  // namespace hessae
