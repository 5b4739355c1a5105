#include "hessae/dataset.hpp"

#include "hessae/error.hpp"
#include "hessae/rng.hpp"
#include "hessae/warnings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

namespace hessae {

namespace {

std::optional<double> parse_number(const std::string& cell) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
    if (begin == end) return std::nullopt;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

char detect_delimiter(const std::string& line) {
    if (line.find('\t') != std::string::npos) return '\t';
    if (line.find(',') != std::string::npos) return ',';
    if (line.find(';') != std::string::npos) return ';';
    return ' ';
}

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> cells;
    if (delim == ' ') {
        std::istringstream in(line);
        std::string tok;
        while (in >> tok) cells.push_back(tok);
        return cells;
    }
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, delim)) cells.push_back(trim(cell));
    return cells;
}

struct RawTable {
    std::vector<std::string> header;  // empty if none
    std::vector<std::vector<std::string>> rows;
};

RawTable read_raw_table(const std::string& path, HeaderMode header_mode) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);

    std::vector<std::vector<std::string>> lines;
    std::string line;
    char delim = 0;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (delim == 0) delim = detect_delimiter(t);
        auto cells = split_line(t, delim);
        if (!cells.empty()) lines.push_back(std::move(cells));
    }
    if (lines.empty()) throw ParseError("empty table: " + path);

    RawTable table;
    bool has_header = false;
    if (header_mode == HeaderMode::Yes) {
        has_header = true;
    } else if (header_mode == HeaderMode::Auto && lines.size() > 1) {
        // Header if some column is text in row 0 but numeric in row 1.
        const auto& first = lines[0];
        const auto& second = lines[1];
        for (std::size_t j = 0; j < first.size() && j < second.size(); ++j) {
            if (!parse_number(first[j]) && parse_number(second[j])) {
                has_header = true;
                break;
            }
        }
    }
    std::size_t start = 0;
    if (has_header) {
        table.header = lines[0];
        start = 1;
    }
    if (start >= lines.size()) throw ParseError("empty table (header only): " + path);
    for (std::size_t i = start; i < lines.size(); ++i) table.rows.push_back(std::move(lines[i]));
    return table;
}

int resolve_label_column(const std::string& spec, const RawTable& table, std::size_t width, const std::string& path) {
    const std::string s = trim(spec);
    if (s.empty()) throw ConfigError("label column spec is empty");
    int idx = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), idx);
    if (ec == std::errc{} && ptr == s.data() + s.size()) {
        if (idx < 0) idx += static_cast<int>(width);
        if (idx < 0 || idx >= static_cast<int>(width)) {
            throw ConfigError("label column index " + s + " out of range for " + path);
        }
        return idx;
    }
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        if (trim(table.header[j]) == s) return static_cast<int>(j);
    }
    throw ConfigError("label column '" + s + "' not found in header of " + path);
}

}  // namespace

std::vector<int> Dataset::class_counts() const {
    std::vector<int> counts(static_cast<std::size_t>(num_classes()), 0);
    for (int label : labels) counts[static_cast<std::size_t>(label - 1)]++;
    return counts;
}

void Dataset::validate() const {
    if (static_cast<int>(labels.size()) != rows()) throw ShapeError("dataset: label count != row count");
    if (static_cast<int>(feature_ids.size()) != cols()) throw ShapeError("dataset: feature_ids size != column count");
    const int c = num_classes();
    if (c < 1) throw ShapeError("dataset: no classes");
    std::vector<int> counts(static_cast<std::size_t>(c), 0);
    for (int label : labels) {
        if (label < 1 || label > c) throw ShapeError("dataset: label out of range 1..C");
        counts[static_cast<std::size_t>(label - 1)]++;
    }
    for (int count : counts) {
        if (count == 0) throw ShapeError("dataset: empty class");
    }
    if (!features.allFinite()) throw ShapeError("dataset: non-finite feature value");
}

Dataset load_table(const std::string& path, const LoadOptions& options) {
    return load_table(std::vector<std::string>{path}, options);
}

Dataset load_table(const std::vector<std::string>& paths, const LoadOptions& options) {
    if (paths.empty()) throw ConfigError("load_table: no input files");

    std::vector<std::vector<double>> feature_rows;
    std::vector<std::string> raw_labels;
    std::vector<std::string> feature_ids;
    std::size_t width = 0;

    for (const auto& path : paths) {
        RawTable table = read_raw_table(path, options.header);
        const std::size_t file_width = table.rows.front().size();
        if (file_width < 2) throw ParseError("table needs at least one feature and a label column: " + path);
        if (width == 0) {
            width = file_width;
        } else if (width != file_width) {
            throw ParseError("column count mismatch between input files: " + path);
        }
        const int label_col = resolve_label_column(options.label_column, table, width, path);

        if (feature_ids.empty()) {
            for (std::size_t j = 0; j < width; ++j) {
                if (static_cast<int>(j) == label_col) continue;
                if (j < table.header.size() && !trim(table.header[j]).empty()) {
                    feature_ids.push_back(trim(table.header[j]));
                } else {
                    feature_ids.push_back("f" + std::to_string(feature_ids.size() + 1));
                }
            }
        }

        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& cells = table.rows[r];
            if (cells.size() != width) {
                throw ParseError("ragged row " + std::to_string(r + 1) + " in " + path);
            }
            std::vector<double> row;
            row.reserve(width - 1);
            for (std::size_t j = 0; j < width; ++j) {
                if (static_cast<int>(j) == label_col) continue;
                const auto value = parse_number(cells[j]);
                if (!value) {
                    throw ParseError("non-numeric feature cell '" + cells[j] + "' at row " +
                                     std::to_string(r + 1) + ", column " + std::to_string(j + 1) + " in " + path);
                }
                if (!std::isfinite(*value)) {
                    throw ParseError("non-finite feature value at row " + std::to_string(r + 1) + " in " + path);
                }
                row.push_back(*value);
            }
            feature_rows.push_back(std::move(row));
            raw_labels.push_back(trim(cells[static_cast<std::size_t>(label_col)]));
        }
    }

    // Remap labels to 1..C preserving the sorted original order: numeric
    // sort when every label parses as a number, lexicographic otherwise.
    bool all_numeric = true;
    for (const auto& l : raw_labels) {
        if (!parse_number(l)) {
            all_numeric = false;
            break;
        }
    }
    std::vector<std::string> unique_labels = raw_labels;
    std::sort(unique_labels.begin(), unique_labels.end());
    unique_labels.erase(std::unique(unique_labels.begin(), unique_labels.end()), unique_labels.end());
    if (all_numeric) {
        std::sort(unique_labels.begin(), unique_labels.end(), [](const std::string& a, const std::string& b) {
            return *parse_number(a) < *parse_number(b);
        });
    }
    if (unique_labels.size() < 2) throw ParseError("single-class table: need at least two distinct labels");

    std::map<std::string, int> label_index;
    for (std::size_t i = 0; i < unique_labels.size(); ++i) {
        label_index[unique_labels[i]] = static_cast<int>(i) + 1;
    }

    Dataset data;
    data.features.resize(static_cast<Eigen::Index>(feature_rows.size()), static_cast<Eigen::Index>(width - 1));
    for (std::size_t i = 0; i < feature_rows.size(); ++i) {
        for (std::size_t j = 0; j + 1 < width; ++j) {
            data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = feature_rows[i][j];
        }
    }
    data.labels.reserve(raw_labels.size());
    for (const auto& l : raw_labels) data.labels.push_back(label_index[l]);
    data.feature_ids = std::move(feature_ids);
    data.class_names = std::move(unique_labels);
    data.validate();
    return data;
}

NormStats compute_norm_stats(const Dataset& train) {
    if (train.rows() == 0) throw ShapeError("compute_norm_stats: empty training data");
    NormStats stats;
    stats.min = train.features.colwise().minCoeff();
    stats.max = train.features.colwise().maxCoeff();
    return stats;
}

void apply_minmax(Dataset& data, const NormStats& stats) {
    if (data.cols() != stats.min.size()) throw ShapeError("apply_minmax: feature count mismatch");
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
        const double lo = stats.min[j];
        const double range = stats.max[j] - stats.min[j];
        if (range <= 0.0) {
            data.features.col(j).setZero();
            continue;
        }
        data.features.col(j) = ((data.features.col(j).array() - lo) / range).cwiseMax(0.0).cwiseMin(1.0);
    }
}

NormStats normalize_minmax(Dataset& train, Dataset& test) {
    NormStats stats = compute_norm_stats(train);
    apply_minmax(train, stats);
    if (test.rows() > 0) apply_minmax(test, stats);
    return stats;
}

SplitIndices stratified_holdout_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("stratified_holdout_split: test_fraction must be in (0,1)");
    }
    const int c = data.num_classes();
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(c));
    for (int i = 0; i < data.rows(); ++i) {
        by_class[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)] - 1)].push_back(i);
    }

    SplitIndices split;
    for (int cls = 0; cls < c; ++cls) {
        auto rows = by_class[static_cast<std::size_t>(cls)];
        const int nc = static_cast<int>(rows.size());
        int take = static_cast<int>(std::lround(static_cast<double>(nc) * test_fraction));
        if (take >= nc) {
            // Never strip a class out of the training set.
            take = nc - 1;
            if (take > 0) {
                warnings::emit("split: class '" + data.class_names[static_cast<std::size_t>(cls)] +
                               "' capped at " + std::to_string(take) + " test rows to keep one in train");
            }
        }
        if (take <= 0) {
            if (nc > 0) {
                warnings::emit("split: class '" + data.class_names[static_cast<std::size_t>(cls)] +
                               "' too small for a test sample, kept in train");
            }
            split.train.insert(split.train.end(), rows.begin(), rows.end());
            continue;
        }
        Rng rng(derive_seed(seed, 0x5911, static_cast<std::uint64_t>(cls)));
        rng.shuffle(rows);
        split.test.insert(split.test.end(), rows.begin(), rows.begin() + take);
        split.train.insert(split.train.end(), rows.begin() + take, rows.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

Dataset subset_rows(const Dataset& data, std::span<const int> indices) {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), data.features.cols());
    out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const int row = indices[i];
        if (row < 0 || row >= data.rows()) throw ShapeError("subset_rows: index out of range");
        out.features.row(static_cast<Eigen::Index>(i)) = data.features.row(row);
        out.labels.push_back(data.labels[static_cast<std::size_t>(row)]);
    }
    out.feature_ids = data.feature_ids;
    out.class_names = data.class_names;
    return out;
}

namespace {

// Largest-remainder allocation of `total` draws across classes, capped by
// class size, deterministic tie-break by class index.
std::vector<int> stratified_quota(const std::vector<int>& class_sizes, int total) {
    const std::size_t c = class_sizes.size();
    const int n = std::accumulate(class_sizes.begin(), class_sizes.end(), 0);
    std::vector<int> quota(c, 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t i = 0; i < c; ++i) {
        const double exact = static_cast<double>(total) * class_sizes[i] / static_cast<double>(n);
        quota[i] = std::min(class_sizes[i], static_cast<int>(std::floor(exact)));
        assigned += quota[i];
        remainders.emplace_back(exact - std::floor(exact), i);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::size_t cursor = 0;
    while (assigned < total && cursor < 4 * c) {
        const std::size_t cls = remainders[cursor % c].second;
        if (quota[cls] < class_sizes[cls]) {
            quota[cls]++;
            assigned++;
        }
        cursor++;
    }
    return quota;
}

}  // namespace

BagSample bagging_sample(const Dataset& data, double delta1, double delta2, std::uint64_t seed) {
    if (!(delta1 > 0.0 && delta1 <= 1.0) || !(delta2 > 0.0 && delta2 <= 1.0)) {
        throw ConfigError("bagging_sample: delta1 and delta2 must be in (0,1]");
    }
    const int n_rows = data.rows();
    const int n_feats = data.cols();
    const int want_rows = static_cast<int>(std::floor(delta1 * n_rows));
    const int want_feats = static_cast<int>(std::floor(delta2 * n_feats));
    if (want_rows < 1 || want_feats < 1) throw ConfigError("bagging_sample: sampling ratios leave nothing");

    const std::vector<int> class_sizes = data.class_counts();
    std::vector<std::vector<int>> by_class(class_sizes.size());
    for (int i = 0; i < n_rows; ++i) {
        by_class[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)] - 1)].push_back(i);
    }

    for (int attempt = 0; attempt < 10; ++attempt) {
        const std::uint64_t attempt_seed = seed + static_cast<std::uint64_t>(attempt);
        BagSample bag;
        bag.seed = attempt_seed;

        const std::vector<int> quota = stratified_quota(class_sizes, want_rows);
        int classes_present = 0;
        for (std::size_t cls = 0; cls < quota.size(); ++cls) {
            if (quota[cls] == 0) continue;
            classes_present++;
            Rng rng(derive_seed(attempt_seed, 0xba6, cls));
            auto picks = rng.sample_without_replacement(static_cast<int>(by_class[cls].size()), quota[cls]);
            for (int p : picks) bag.sample_indices.push_back(by_class[cls][static_cast<std::size_t>(p)]);
        }
        std::sort(bag.sample_indices.begin(), bag.sample_indices.end());

        if (classes_present < 2) {
            continue;  // redraw with incremented seed
        }

        Rng feat_rng(derive_seed(attempt_seed, 0xfea7));
        bag.feature_indices = feat_rng.sample_without_replacement(n_feats, want_feats);
        std::sort(bag.feature_indices.begin(), bag.feature_indices.end());
        return bag;
    }
    throw Error("bagging_sample: fewer than two classes after 10 redraw attempts");
}

Dataset apply_bag(const Dataset& data, const BagSample& bag) {
    Dataset rows = subset_rows(data, bag.sample_indices);
    Dataset out;
    out.features.resize(rows.features.rows(), static_cast<Eigen::Index>(bag.feature_indices.size()));
    for (std::size_t j = 0; j < bag.feature_indices.size(); ++j) {
        const int col = bag.feature_indices[j];
        if (col < 0 || col >= rows.cols()) throw ShapeError("apply_bag: feature index out of range");
        out.features.col(static_cast<Eigen::Index>(j)) = rows.features.col(col);
        out.feature_ids.push_back(rows.feature_ids[static_cast<std::size_t>(col)]);
    }
    out.labels = std::move(rows.labels);
    out.class_names = rows.class_names;
    return out;
}

std::pair<std::vector<int>, std::vector<int>> stratified_validation_rows(const Labels& labels, int num_classes,
                                                                         double fraction, std::uint64_t seed) {
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[static_cast<std::size_t>(labels[i] - 1)].push_back(static_cast<int>(i));
    }
    std::vector<int> kept;
    std::vector<int> held;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto rows = by_class[c];
        Rng rng(derive_seed(seed, 0x1a55, c));
        rng.shuffle(rows);
        int take = static_cast<int>(std::lround(fraction * static_cast<double>(rows.size())));
        take = std::clamp(take, 0, static_cast<int>(rows.size()) - 1);
        held.insert(held.end(), rows.begin(), rows.begin() + take);
        kept.insert(kept.end(), rows.begin() + take, rows.end());
    }
    std::sort(kept.begin(), kept.end());
    std::sort(held.begin(), held.end());
    return {kept, held};
}

std::vector<std::vector<int>> stratified_folds(const Labels& labels, int num_classes, int folds,
                                               std::uint64_t seed) {
    if (folds < 2) throw ConfigError("stratified_folds: need at least 2 folds");
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[static_cast<std::size_t>(labels[i] - 1)].push_back(static_cast<int>(i));
    }
    std::vector<std::vector<int>> assignment(static_cast<std::size_t>(folds));
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto rows = by_class[c];
        Rng rng(derive_seed(seed, 0xf01d, c));
        rng.shuffle(rows);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            assignment[i % static_cast<std::size_t>(folds)].push_back(rows[i]);
        }
    }
    for (auto& fold : assignment) std::sort(fold.begin(), fold.end());
    return assignment;
}

Dataset make_synthetic_clusters(std::uint64_t seed) {
    constexpr int kRowsPerClass = 30;
    constexpr int kFeatures = 32;
    constexpr int kClasses = 3;

    Rng rng(derive_seed(seed, 0xad5));
    Dataset data;
    data.features.resize(kRowsPerClass * kClasses, kFeatures);
    data.labels.reserve(kRowsPerClass * kClasses);

    // Class centers close enough that a tuned classifier lands well below
    // ceiling accuracy; only a handful of columns carry signal.
    Matrix centers(kClasses, kFeatures);
    for (int c = 0; c < kClasses; ++c) {
        for (int j = 0; j < kFeatures; ++j) {
            centers(c, j) = (j % 8 == c % 8) ? 0.9 * (c + 1) : 0.15 * rng.normal();
        }
    }
    int row = 0;
    for (int c = 0; c < kClasses; ++c) {
        for (int i = 0; i < kRowsPerClass; ++i, ++row) {
            for (int j = 0; j < kFeatures; ++j) {
                data.features(row, j) = centers(c, j) + 1.6 * rng.normal();
            }
            data.labels.push_back(c + 1);
        }
    }
    for (int j = 0; j < kFeatures; ++j) data.feature_ids.push_back("f" + std::to_string(j + 1));
    data.class_names = {"a", "b", "c"};
    return data;
}

}  // namespace hessae
