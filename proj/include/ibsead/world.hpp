#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace ibsead {

using entity_id = std::int64_t;

// Exactly one class per entity per tick; classes may change across ticks.
enum class visibility_class { known, invisible, unknown };

enum class environment { internal, external };

enum class blockage_kind { noise, darkness, ignorance };

std::string to_string(visibility_class v);
std::string to_string(environment e);
std::string to_string(blockage_kind k);
visibility_class visibility_from_string(const std::string& s);
environment environment_from_string(const std::string& s);
blockage_kind blockage_kind_from_string(const std::string& s);

// strength 1 means full blockage, 0 means no effect.
struct blockage_agent {
    blockage_kind kind = blockage_kind::noise;
    double strength = 0.0;
};

struct entity {
    entity_id id = 0;
    environment env = environment::external;
    visibility_class visibility = visibility_class::known;
    std::map<std::string, double> attributes;
    std::vector<double> true_impact;   // per-outcome contribution, dimensionless
    bool switch_default = true;

    // Abstract position used for the scope check; entities without a "pos"
    // attribute sit at the origin.
    double position() const;
    // Net scalar contribution: component sum of true_impact.
    double impact_sum() const;
};

struct interaction_link {
    entity_id from_id = 0;
    entity_id to_id = 0;
    bool switch_from = true;
    bool switch_to = true;
    double quality = 1.0;              // in [0,1]
    std::vector<blockage_agent> blockages;

    entity_id counterpart_of(entity_id id) const {
        return from_id == id ? to_id : from_id;
    }
    bool touches(entity_id id) const { return from_id == id || to_id == id; }
};

struct entity_group {
    int group_id = 0;
    std::vector<entity_id> member_ids; // non-empty, sorted
};

// What the CB perceives at one tick. `detected` only ever holds Known
// entities with an open channel; `felt_effect` includes the contribution of
// every entity regardless of visibility.
struct observation {
    std::int64_t tick = 0;
    std::set<entity_id> detected;
    std::map<std::pair<entity_id, std::string>, double> readings;
    std::vector<double> outcome;
    double felt_effect = 0.0;

    std::optional<double> reading(entity_id id, const std::string& attr) const;
    // Mean over an entity's attribute readings this tick (used as its
    // per-tick correlation signal).
    std::optional<double> mean_reading(entity_id id) const;
};

struct world {
    std::map<entity_id, entity> entities;
    std::vector<interaction_link> links;
    std::vector<entity_group> groups;
    entity_id cb_id = 0;
    double scope_radius = 0.0;
    std::int64_t tick = 0;
    std::uint64_t rng_seed = 0;

    const entity* find(entity_id id) const;
    entity* find(entity_id id);
    // First link connecting `a` and `b` in either direction, if any.
    const interaction_link* link_between(entity_id a, entity_id b) const;
    interaction_link* link_between(entity_id a, entity_id b);
    std::vector<interaction_link> links_of(entity_id id) const;

    // Throws invalid_config_error on a malformed world (missing cb, bad
    // quality/strength ranges, overlapping groups, dangling ids).
    void validate() const;
};

// quality * prod(1 - strength_i); always in [0,1] for valid links.
double effective_quality(const interaction_link& link);

// AND gating: both switches on and a strictly positive effective quality.
bool can_interact(const interaction_link& link);

// Componentwise arithmetic mean of the members' true_impact vectors.
// Throws empty_group_error / unknown_id_error.
std::vector<double> group_impact(const entity_group& group, const world& w);

// Advances the world one tick and assembles the CB's observation:
//   detected  = Known entities within scope whose CB link passes can_interact
//   readings  = true attribute + u*(1-effective_quality), u ~ U[-1,1]
//   outcome   = componentwise sum of detected entities' impacts (gate-filtered)
//   felt      = exact sum of every non-CB entity's scalar impact
// `advance`, when given, mutates the world (scenario dynamics) before the
// observation is assembled. Deterministic given (world, rng state).
observation step_world(world& w, std::mt19937_64& rng,
                       const std::function<void(world&)>& advance = {});

// Snapshot serialization. Top-level keys: tick, cb_id, scope_radius,
// entities, links, groups.
nlohmann::json world_to_json(const world& w);
world world_from_json(const nlohmann::json& j);

} // namespace ibsead
