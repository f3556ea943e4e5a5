#pragma once

#include <random>
#include <vector>

namespace ibsead::baselines {

struct hmm_model {
    int n_states = 0;
    int n_symbols = 0;
    std::vector<double> initial;                  // n_states
    std::vector<std::vector<double>> transition;  // n_states x n_states
    std::vector<std::vector<double>> emission;    // n_states x n_symbols

    // shape and stochasticity checks; throws invalid_config_error
    void validate() const;
};

hmm_model make_random_hmm(int n_states, int n_symbols, std::mt19937_64& rng);

// Scaled forward pass; returns the log-likelihood of the sequence
// (-inf for impossible sequences).
// throws empty_sequence_error, symbol_out_of_range_error
double hmm_forward(const hmm_model& m, const std::vector<int>& seq);

struct viterbi_result {
    std::vector<int> path;
    double log_prob = 0.0;
};

// Log-space Viterbi; ties prefer the lower state index.
viterbi_result hmm_viterbi(const hmm_model& m, const std::vector<int>& seq);

// Baum-Welch re-estimation. loglik_trace, when given, receives the model
// log-likelihood before each update (length == iterations).
hmm_model baum_welch(const hmm_model& m, const std::vector<int>& seq, int iterations,
                     std::vector<double>* loglik_trace = nullptr);
hmm_model baum_welch(const hmm_model& m, const std::vector<std::vector<int>>& seqs,
                     int iterations, std::vector<double>* loglik_trace = nullptr);

} // namespace ibsead::baselines
