#include "ibsead/decision_tree.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ibsead/errors.hpp"

namespace ibsead::baselines {

namespace {

constexpr double gain_eps = 1e-12;

double entropy_bits(const std::map<int, std::size_t>& counts, std::size_t total) {
    double h = 0.0;
    for (const auto& [label, n] : counts) {
        if (n == 0) continue;
        const double p = static_cast<double>(n) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

int majority_label(const dataset& ds, const std::vector<std::size_t>& idx) {
    std::map<int, std::size_t> counts;
    for (std::size_t i : idx) ++counts[ds.rows[i].label];
    int best = 0;
    std::size_t best_n = 0;
    for (const auto& [label, n] : counts) // map order: lower label wins ties
        if (n > best_n) {
            best = label;
            best_n = n;
        }
    return best;
}

struct split_choice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

split_choice best_split(const dataset& ds, const std::vector<std::size_t>& idx) {
    const std::size_t total = idx.size();
    std::map<int, std::size_t> counts;
    for (std::size_t i : idx) ++counts[ds.rows[i].label];
    const double h_parent = entropy_bits(counts, total);

    split_choice best;
    const int nf = ds.n_features();
    std::vector<double> values(total);
    for (int f = 0; f < nf; ++f) {
        for (std::size_t k = 0; k < total; ++k) values[k] = ds.rows[idx[k]].features[static_cast<std::size_t>(f)];
        std::vector<double> uniq = values;
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (std::size_t u = 0; u + 1 < uniq.size(); ++u) {
            const double thr = (uniq[u] + uniq[u + 1]) / 2.0;
            std::map<int, std::size_t> lc, rc;
            std::size_t nl = 0;
            for (std::size_t k = 0; k < total; ++k) {
                if (values[k] <= thr) {
                    ++lc[ds.rows[idx[k]].label];
                    ++nl;
                } else {
                    ++rc[ds.rows[idx[k]].label];
                }
            }
            const std::size_t nr = total - nl;
            const double gain = h_parent -
                                (static_cast<double>(nl) / total) * entropy_bits(lc, nl) -
                                (static_cast<double>(nr) / total) * entropy_bits(rc, nr);
            if (!best.found || gain > best.gain + gain_eps) {
                best = split_choice{true, f, thr, gain};
            }
            // equal gain keeps the earlier (lower feature, lower threshold) pick
        }
    }
    return best;
}

std::unique_ptr<dt_node> build(const dataset& ds, const std::vector<std::size_t>& idx,
                               int depth, int max_depth) {
    auto node = std::make_unique<dt_node>();
    node->label = majority_label(ds, idx);

    bool pure = true;
    for (std::size_t i : idx)
        if (ds.rows[i].label != ds.rows[idx.front()].label) {
            pure = false;
            break;
        }
    if (pure || depth >= max_depth) return node;

    const split_choice s = best_split(ds, idx);
    if (!s.found) return node; // indistinguishable rows: nothing to split on

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
        if (ds.rows[i].features[static_cast<std::size_t>(s.feature)] <= s.threshold)
            left_idx.push_back(i);
        else
            right_idx.push_back(i);
    }
    node->leaf = false;
    node->feature = s.feature;
    node->threshold = s.threshold;
    node->left = build(ds, left_idx, depth + 1, max_depth);
    node->right = build(ds, right_idx, depth + 1, max_depth);
    return node;
}

} // namespace

decision_tree dt_train(const dataset& ds, const dt_params& params) {
    if (ds.empty()) throw empty_dataset_error();
    ds.validate();
    decision_tree tree;
    tree.params = params;
    tree.n_features = ds.n_features();
    std::vector<std::size_t> idx(ds.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    tree.root = build(ds, idx, 0, params.max_depth);
    return tree;
}

int dt_predict(const decision_tree& tree, const std::vector<double>& features) {
    if (static_cast<int>(features.size()) != tree.n_features)
        throw arity_mismatch_error(features.size(), static_cast<std::size_t>(tree.n_features));
    const dt_node* node = tree.root.get();
    while (!node->leaf)
        node = features[static_cast<std::size_t>(node->feature)] <= node->threshold
                   ? node->left.get()
                   : node->right.get();
    return node->label;
}

double dt_accuracy(const decision_tree& tree, const dataset& ds) {
    if (ds.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& r : ds.rows)
        if (dt_predict(tree, r.features) == r.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

namespace {
int depth_of(const dt_node* n) {
    if (!n || n->leaf) return 0;
    return 1 + std::max(depth_of(n->left.get()), depth_of(n->right.get()));
}
std::size_t count_of(const dt_node* n) {
    if (!n) return 0;
    return 1 + count_of(n->left.get()) + count_of(n->right.get());
}
} // namespace

int dt_depth(const decision_tree& tree) { return depth_of(tree.root.get()); }
std::size_t dt_node_count(const decision_tree& tree) { return count_of(tree.root.get()); }

} // namespace ibsead::baselines
