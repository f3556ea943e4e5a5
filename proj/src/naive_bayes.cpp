#include "ibsead/naive_bayes.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ibsead/errors.hpp"

namespace ibsead::baselines {

nb_model nb_train(const dataset& ds, const nb_params& params) {
    if (ds.empty()) throw empty_dataset_error();
    ds.validate();

    std::map<int, std::vector<const data_row*>> by_class;
    for (const auto& r : ds.rows) by_class[r.label].push_back(&r);
    for (const auto& [label, rows] : by_class)
        if (rows.size() < 2) throw insufficient_class_data_error(label);

    nb_model m;
    m.n_features = ds.n_features();
    m.var_floor = params.var_floor;
    const std::size_t nf = static_cast<std::size_t>(m.n_features);
    for (const auto& [label, rows] : by_class) {
        m.labels.push_back(label);
        m.log_prior.push_back(std::log(static_cast<double>(rows.size()) / ds.size()));
        std::vector<double> mean(nf, 0.0), var(nf, 0.0);
        for (const data_row* r : rows)
            for (std::size_t f = 0; f < nf; ++f) mean[f] += r->features[f];
        for (double& v : mean) v /= static_cast<double>(rows.size());
        for (const data_row* r : rows)
            for (std::size_t f = 0; f < nf; ++f) {
                const double d = r->features[f] - mean[f];
                var[f] += d * d;
            }
        for (double& v : var) v = std::max(v / static_cast<double>(rows.size()), params.var_floor);
        m.mean.push_back(std::move(mean));
        m.var.push_back(std::move(var));
    }
    return m;
}

std::vector<double> nb_log_posterior(const nb_model& m, const std::vector<double>& features) {
    if (static_cast<int>(features.size()) != m.n_features)
        throw arity_mismatch_error(features.size(), static_cast<std::size_t>(m.n_features));
    constexpr double log_2pi = 1.8378770664093454836;
    std::vector<double> post(m.labels.size());
    for (std::size_t c = 0; c < m.labels.size(); ++c) {
        double lp = m.log_prior[c];
        for (std::size_t f = 0; f < features.size(); ++f) {
            const double d = features[f] - m.mean[c][f];
            lp -= 0.5 * (log_2pi + std::log(m.var[c][f]) + d * d / m.var[c][f]);
        }
        post[c] = lp;
    }
    return post;
}

int nb_predict(const nb_model& m, const std::vector<double>& features) {
    const auto post = nb_log_posterior(m, features);
    std::size_t best = 0;
    for (std::size_t c = 1; c < post.size(); ++c)
        if (post[c] > post[best]) best = c; // strict: ties keep the lower label
    return m.labels[best];
}

double nb_accuracy(const nb_model& m, const dataset& ds) {
    if (ds.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& r : ds.rows)
        if (nb_predict(m, r.features) == r.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

} // namespace ibsead::baselines
