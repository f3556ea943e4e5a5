#pragma once

#include <cstdint>
#include <vector>

#include "ibsead/dataset.hpp"

namespace ibsead::baselines {

struct mlp_params {
    int hidden = 16;
    int epochs = 400;
    double lr = 0.5;
    std::uint64_t seed = 0;
};

// One sigmoid hidden layer, softmax output, trained with full-batch
// gradient descent on mean cross-entropy.
struct mlp_model {
    int n_in = 0;
    int n_hidden = 0;
    int n_out = 0;
    std::vector<double> w1; // n_hidden x n_in, row-major
    std::vector<double> b1; // n_hidden
    std::vector<double> w2; // n_out x n_hidden, row-major
    std::vector<double> b2; // n_out
};

mlp_model make_mlp(int n_in, int n_hidden, int n_out, std::uint64_t seed);

// class probabilities; throws arity_mismatch_error
std::vector<double> mlp_forward(const mlp_model& m, const std::vector<double>& x);
int mlp_predict(const mlp_model& m, const std::vector<double>& x); // argmax, tie -> lower

struct mlp_gradient {
    double loss = 0.0;
    std::vector<double> grad; // same layout as mlp_flatten
};

// Analytic loss and gradient over the whole dataset, for training and for
// finite-difference checks.
mlp_gradient mlp_loss_and_grad(const mlp_model& m, const dataset& ds);

std::vector<double> mlp_flatten(const mlp_model& m);
void mlp_unflatten(mlp_model& m, const std::vector<double>& flat);

// throws empty_dataset_error, invalid_config_error
mlp_model mlp_train(const dataset& ds, const mlp_params& params = {});
double mlp_accuracy(const mlp_model& m, const dataset& ds);

} // namespace ibsead::baselines
