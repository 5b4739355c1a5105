#pragma once

#include "hessae/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hessae {

/// Labeled tabular classification data. Labels are remapped to 1..C at load
/// time; class_names keeps the original label text in sorted order.
struct Dataset {
    Matrix features;                        // N x n
    Labels labels;                          // N values in 1..C
    std::vector<std::string> feature_ids;   // n entries
    std::vector<std::string> class_names;   // C entries

    int rows() const { return static_cast<int>(features.rows()); }
    int cols() const { return static_cast<int>(features.cols()); }
    int num_classes() const { return static_cast<int>(class_names.size()); }

    std::vector<int> class_counts() const;

    /// Throws if shapes, label range or finiteness are violated.
    void validate() const;
};

struct NormStats {
    Vector min;  // per feature, from training data
    Vector max;
};

struct BagSample {
    std::vector<int> sample_indices;   // floor(delta1 * N) row indices
    std::vector<int> feature_indices;  // floor(delta2 * n), distinct, ascending
    std::uint64_t seed = 0;
};

enum class HeaderMode { Auto, Yes, No };

struct LoadOptions {
    /// Integer (0-based, negative counts from the end) or a header name.
    std::string label_column = "-1";
    HeaderMode header = HeaderMode::Auto;
};

/// Loads one or more delimited text files (comma, semicolon, tab or
/// whitespace separated) into a single Dataset. Feature cells must be
/// numeric; the label column may be text.
Dataset load_table(const std::vector<std::string>& paths, const LoadOptions& options = {});
Dataset load_table(const std::string& path, const LoadOptions& options = {});

/// Min/max statistics of the training features.
NormStats compute_norm_stats(const Dataset& train);

/// Scales features into [0,1] using `stats`, clipping out-of-range values.
/// Constant columns map to 0.
void apply_minmax(Dataset& data, const NormStats& stats);

/// Normalizes train in place from its own statistics and test with the
/// train statistics. Returns the statistics used.
NormStats normalize_minmax(Dataset& train, Dataset& test);

struct SplitIndices {
    std::vector<int> train;
    std::vector<int> test;
};

/// Stratified holdout split: per class, round(N_c * test_fraction) test
/// rows. Classes too small to give up a row stay entirely in train (with a
/// warning). Same seed, same split.
SplitIndices stratified_holdout_split(const Dataset& data, double test_fraction, std::uint64_t seed);

/// Materializes the rows named by `indices` in order.
Dataset subset_rows(const Dataset& data, std::span<const int> indices);

/// Row subsample (stratified, without replacement) plus a uniform feature
/// subset. Redraws with seed+1 (up to 10 times) if fewer than two classes
/// survive, then fails.
BagSample bagging_sample(const Dataset& data, double delta1, double delta2, std::uint64_t seed);

/// Applies a bag: selected rows and selected feature columns.
Dataset apply_bag(const Dataset& data, const BagSample& bag);

/// Small synthetic three-class Gaussian dataset (90 x 32) used by smoke
/// tests. Class clusters overlap heavily on purpose.
Dataset make_synthetic_clusters(std::uint64_t seed);

/// Stratified row partition: roughly `fraction` of each class goes into the
/// second set (never a whole class). Returns (kept, held_out), both sorted.
std::pair<std::vector<int>, std::vector<int>> stratified_validation_rows(const Labels& labels, int num_classes,
                                                                         double fraction, std::uint64_t seed);

/// Stratified fold assignment for cross validation; folds are balanced per
/// class and deterministic in the seed.
std::vector<std::vector<int>> stratified_folds(const Labels& labels, int num_classes, int folds,
                                               std::uint64_t seed);

}  // namespace hessae
