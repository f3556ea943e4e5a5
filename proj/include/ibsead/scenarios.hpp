#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ibsead/dataset.hpp"
#include "ibsead/world.hpp"

namespace ibsead::scenarios {

// Size knobs cover all four generators; each generator reads only its own.
struct scenario_config {
    std::string name;                // stock | train_route | visual | loans
    std::uint64_t seed = 0;
    double hidden_strength = 0.5;    // share of outcome variance carried by hidden drivers

    // visual
    int train_per_class = 20;
    int test_per_class = 10;
    int feature_dim = 16;
    double noise_fraction = 0.3;     // fraction of test rows with a degraded channel

    // loans
    int rows = 500;
    double volatile_fraction = 0.2;  // fraction of rows whose label the hidden drivers flip

    // stock
    int ticks = 240;

    // train_route
    int episodes = 200;

    double train_fraction = 0.6;     // chronological split for stock/train_route, row split for loans

    // throws unknown_scenario_error / invalid_config_error naming the bad key
    void validate() const;
};

// What the quality-aware learner sees for one row, alongside the flat
// features: the observation (readings, outcome, felt effect) and the
// candidate links whose gates and quality apply to it.
struct row_view {
    observation obs;
    std::vector<interaction_link> links;
    bool hidden_affected = false;
    double quality = 1.0;
};

struct scenario_output {
    std::string name;
    world w; // template world: one entity per role, used for inspection/serialization
    dataset train;
    dataset test;
    std::vector<row_view> train_view;
    std::vector<row_view> test_view;
    truth_table train_truth;
    truth_table test_truth;
};

// Each generator is a pure function of its config (same seed, same bytes).
// Feature order is the alphabetical order of the attribute names listed in
// each generator's notes below.
scenario_output gen_visual(const scenario_config& cfg);      // f00..f15
scenario_output gen_loans(const scenario_config& cfg);       // advance_emi, dependents, experience, income, qualifications, rent
scenario_output gen_stock(const scenario_config& cfg);       // accounts, ret, trend
scenario_output gen_train_route(const scenario_config& cfg); // congestion, rain, rain_prev

// dispatch by cfg.name; throws unknown_scenario_error
scenario_output generate_scenario(const scenario_config& cfg);

// rust state on the unknown entity follows
//   rust_e = rust_decay * rust_{e-1} + rust_coef * rain_e
// and contributes hidden_strength * rust_weight * rust_e to the delay.
inline constexpr double rust_decay = 0.9;
inline constexpr double rust_coef = 0.15;
inline constexpr double rust_weight = 0.8;

} // namespace ibsead::scenarios
