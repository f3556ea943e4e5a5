#pragma once

#include <stdexcept>
#include <string>

namespace ibsead {

// Base for every error this library throws.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct empty_group_error : error {
    empty_group_error() : error("group has no members") {}
};

struct unknown_id_error : error {
    explicit unknown_id_error(long long id)
        : error("entity id not present in world: " + std::to_string(id)) {}
};

struct gate_closed_error : error {
    gate_closed_error() : error("interaction gate is closed (switch off or channel fully blocked)") {}
};

struct empty_dataset_error : error {
    empty_dataset_error() : error("dataset has no rows") {}
};

struct arity_mismatch_error : error {
    arity_mismatch_error(std::size_t got, std::size_t want)
        : error("feature arity mismatch: got " + std::to_string(got) +
                ", expected " + std::to_string(want)) {}
};

struct empty_sequence_error : error {
    empty_sequence_error() : error("observation sequence is empty") {}
};

struct symbol_out_of_range_error : error {
    symbol_out_of_range_error(int symbol, int n_symbols)
        : error("symbol " + std::to_string(symbol) + " out of range [0, " +
                std::to_string(n_symbols) + ")") {}
};

struct insufficient_class_data_error : error {
    explicit insufficient_class_data_error(int label)
        : error("class " + std::to_string(label) + " has fewer than 2 rows") {}
};

struct unknown_learner_error : error {
    explicit unknown_learner_error(const std::string& name)
        : error("unknown learner: \"" + name + "\""), key(name) {}
    std::string key;
};

struct unknown_scenario_error : error {
    explicit unknown_scenario_error(const std::string& name)
        : error("unknown scenario: \"" + name + "\""), key(name) {}
    std::string key;
};

struct invalid_config_error : error {
    explicit invalid_config_error(const std::string& what_key)
        : error("invalid config: " + what_key), key(what_key) {}
    std::string key;
};

struct empty_report_error : error {
    empty_report_error() : error("report has no rows") {}
};

struct io_error : error {
    explicit io_error(const std::string& path) : error("i/o failure: " + path) {}
};

} // namespace ibsead
