#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "ibsead/dataset.hpp"

namespace ibsead::baselines {

struct dt_params {
    int max_depth = 6;
};

struct dt_node {
    bool leaf = true;
    int label = 0;
    int feature = -1;
    double threshold = 0.0;
    std::unique_ptr<dt_node> left;  // x[feature] <= threshold
    std::unique_ptr<dt_node> right; // x[feature] > threshold
};

struct decision_tree {
    dt_params params;
    int n_features = 0;
    std::unique_ptr<dt_node> root;
};

// Top-down induction, information gain in bits, midpoint thresholds.
// Ties break to the lowest feature index, then the lowest threshold; an
// impure node with zero-gain candidates still splits so parity-style
// targets are reachable. throws empty_dataset_error
decision_tree dt_train(const dataset& ds, const dt_params& params = {});

// throws arity_mismatch_error
int dt_predict(const decision_tree& tree, const std::vector<double>& features);

double dt_accuracy(const decision_tree& tree, const dataset& ds);
int dt_depth(const decision_tree& tree);
std::size_t dt_node_count(const decision_tree& tree);

} // namespace ibsead::baselines
