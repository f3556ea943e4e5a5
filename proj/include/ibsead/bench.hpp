#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ibsead/learner.hpp"
#include "ibsead/scenarios.hpp"

namespace ibsead::bench {

struct learner_config {
    std::string name;        // ibsead | dtree | hmm | mlp | nbayes
    learner_params ibsead;   // alpha, tau, window, rho
    int max_depth = 6;       // dtree
    int hidden = 16;         // mlp
    int epochs = 400;        // mlp
    double lr = 0.5;         // mlp

    void validate() const;   // throws unknown_learner_error / invalid_config_error
};

struct experiment_config {
    std::vector<scenarios::scenario_config> scenario_list;
    std::vector<learner_config> learner_list;
    int trials = 1;
    std::uint64_t base_seed = 0;  // trial i runs with seed base_seed + i
    std::string out_path;
    std::string format = "csv";   // csv | json
    bool timing = true;           // false pins wall_time_ms to 0 for byte-stable reports
    bool parallel = false;

    void validate() const;        // throws invalid_config_error naming the key
};

struct report_row {
    std::string scenario;
    std::string learner;
    int trial = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double accuracy_hidden = 0.0; // on hidden-affected rows; equals accuracy when none exist
    double wall_time_ms = 0.0;
};

struct report {
    std::vector<report_row> rows; // canonically ordered (scenario, learner, trial)
};

struct trial_result {
    double accuracy = 0.0;
    double accuracy_hidden = 0.0;
};

// Train on the scenario's train split, score on the test split. The seed
// feeds seed-sensitive learners (mlp init); everything else is deterministic.
trial_result evaluate_learner(const learner_config& lc, const scenarios::scenario_output& data,
                              std::uint64_t seed = 0);

// The full matrix: scenarios x learners x trials. Deterministic per config,
// including under parallel scheduling.
report run_experiment(const experiment_config& cfg);

// CSV header is exactly:
//   scenario,learner,trial,seed,accuracy,accuracy_hidden,wall_time_ms
// Reals carry at least six significant digits.
void emit_report(const report& rep, const std::string& format, std::ostream& out);
void emit_report_file(const report& rep, const std::string& format, const std::string& path);

nlohmann::json report_to_json(const report& rep);
report report_from_json(const nlohmann::json& j);

struct summary_row {
    std::string scenario;
    std::string learner;
    int trials = 0;
    double median = 0.0;
    double q1 = 0.0;  // Tukey hinges
    double q3 = 0.0;
    double iqr = 0.0;
};

// Per (scenario, learner): median and interquartile range of accuracy.
// throws empty_report_error
std::vector<summary_row> summarize(const report& rep);
std::string summary_table(const std::vector<summary_row>& rows);

double median(std::vector<double> values);
std::pair<double, double> tukey_hinges(std::vector<double> values); // (q1, q3)

// throws invalid_config_error naming the missing/bad key
experiment_config config_from_json(const nlohmann::json& j);

} // namespace ibsead::bench
