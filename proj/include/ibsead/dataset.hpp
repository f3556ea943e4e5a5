#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace ibsead {

struct data_row {
    std::vector<double> features;
    int label = 0;
};

struct dataset {
    std::vector<std::string> feature_names; // optional; generators fill it for audits
    std::vector<data_row> rows;

    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
    int n_features() const { return rows.empty() ? 0 : static_cast<int>(rows.front().features.size()); }
    int n_classes() const;

    // throws arity_mismatch_error on ragged feature vectors
    void validate() const;
};

// Per-row evaluation metadata kept out of the feature file on purpose:
// learners never see it, scoring and the quality-aware path do.
struct row_truth {
    bool hidden_affected = false;
    double felt_effect = 0.0;
    double quality = 1.0;
};

using truth_table = std::vector<row_truth>;

// one {"features":[...],"label":n} object per line
dataset load_jsonl(const std::filesystem::path& path);
void save_jsonl(const dataset& ds, const std::filesystem::path& path);

truth_table load_truth(const std::filesystem::path& path);
void save_truth(const truth_table& truth, const std::filesystem::path& path);

} // namespace ibsead
