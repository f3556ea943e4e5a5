#pragma once

#include <vector>

#include "ibsead/dataset.hpp"

namespace ibsead::baselines {

struct nb_params {
    double var_floor = 1e-6;
};

// Gaussian naive Bayes: per-class, per-feature normal likelihoods with a
// variance floor, class priors from counts.
struct nb_model {
    int n_features = 0;
    double var_floor = 1e-6;
    std::vector<int> labels;                 // ascending
    std::vector<double> log_prior;           // per class, same order as labels
    std::vector<std::vector<double>> mean;   // class x feature
    std::vector<std::vector<double>> var;    // class x feature, floored
};

// throws empty_dataset_error, insufficient_class_data_error (< 2 rows in a class)
nb_model nb_train(const dataset& ds, const nb_params& params = {});

// joint log-density per class (labels order); throws arity_mismatch_error
std::vector<double> nb_log_posterior(const nb_model& m, const std::vector<double>& features);

int nb_predict(const nb_model& m, const std::vector<double>& features); // tie -> lower label
double nb_accuracy(const nb_model& m, const dataset& ds);

} // namespace ibsead::baselines
