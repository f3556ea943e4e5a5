#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <json.hpp>

#include "ibsead/world.hpp"

namespace ibsead {

struct learner_params {
    double alpha = 0.3;      // impact learning rate, in (0,1]
    double tau = 0.1;        // invisible-inference threshold, > 0
    int window = 5;          // residual window length k, >= 1
    double rho = 0.9;        // correlation threshold for grouping
    int history_cap = 64;    // reading history kept per entity
    double confidence_gain = 0.5;
};

struct belief_entity {
    entity_id id = 0;
    visibility_class believed_class = visibility_class::known;
    std::vector<double> impact_estimate;
    double confidence = 0.0;            // in [0,1]
    std::int64_t last_seen_tick = -1;

    double impact_sum() const;
    double impact_norm() const;
    bool is_synthetic() const { return id < 0; }
};

struct channel_state {
    bool open = false;
    double quality = 0.0;
};

// The learner's whole state. A plain value: every operation below takes a
// model and returns the updated one.
struct belief_model {
    learner_params params;
    entity_id cb_id = 0;

    std::map<entity_id, belief_entity> beliefs;
    std::map<int, std::vector<entity_id>> group_map;      // group id -> sorted members
    std::map<int, std::vector<double>> group_impacts;
    double unknown_reserve = 0.0;                         // >= 0
    std::deque<double> residual_window;                   // length <= params.window

    // Tracked connections to the CB (step 4 bookkeeping) and the per-entity
    // reading series the correlation grouping runs on.
    std::map<entity_id, channel_state> channels;
    std::map<entity_id, std::deque<double>> reading_history;

    entity_id next_synthetic_id = -1;
    int outcome_dim = 0;
    std::int64_t current_tick = 0;

    int group_of(entity_id id) const;                     // -1 if ungrouped
    std::vector<const belief_entity*> inferred_invisible() const;
};

belief_model make_model(const learner_params& params, entity_id cb_id);

// Step 1: the CB can only scan what the world lets it detect; the world
// view adds nothing the observation doesn't already encode.
std::set<entity_id> scan_physical_scope(const observation& obs);
std::set<entity_id> scan_physical_scope(const observation& obs, const world& world_view);

// Step 4 bookkeeping: refresh channel state from the CB's current links.
belief_model track_connections(belief_model m, const std::vector<interaction_link>& links);

// Step 2: detected ids become Known; Known beliefs absent for > window ticks
// with a nonzero impact estimate flip to Invisible.
belief_model classify_beliefs(belief_model m, const observation& obs);

// Step 3: entities whose reading series correlate at >= rho share a group,
// everything else is a singleton. Constant series never group (correlation
// undefined). Groups partition the believed ids.
belief_model map_groups(belief_model m,
                        const std::map<entity_id, std::vector<double>>& correlation_history);
belief_model map_groups(belief_model m);   // uses the stored reading history

// Step 4: EWMA update of per-group impacts from the quality-weighted
// attribution of the observed outcome; open-channel members' belief
// impacts are refreshed with their share of the current attribution.
belief_model estimate_impacts(belief_model m, const observation& obs);

// One interaction per tick: the gated candidate whose counterpart group has
// the largest impact-estimate norm; ties to the lowest counterpart id.
std::optional<interaction_link> select_focus(const std::vector<interaction_link>& candidates,
                                             const belief_model& m);

// Step 5: classify -> map_groups -> estimate_impacts for the focused link;
// counterpart confidence rises monotonically with effective quality.
// Throws gate_closed_error when can_interact(link) is false.
belief_model interact_and_learn(belief_model m, const interaction_link& link,
                                const observation& obs);

// Residual attribution: the gap between the felt effect and what the
// detected entities' believed impacts explain. A full window with
// |mean| > tau materializes one synthetic Invisible belief carrying the
// mean residual; small persistent scatter feeds the unknown reserve.
belief_model infer_invisible(belief_model m, const observation& obs);

// Quality-weighted sum of group impacts plus inferred invisible impacts.
// Deterministic; the unknown reserve widens the variance, not the point value.
std::vector<double> predict(const belief_model& m, const observation& obs);
double predict_variance(const belief_model& m);

// Full per-tick pipeline: track -> scan/classify -> map_groups ->
// [focus -> interact_and_learn when learning] -> infer_invisible.
belief_model observe_tick(belief_model m, const observation& obs,
                          const std::vector<interaction_link>& candidates,
                          bool learn = true);

nlohmann::json model_to_json(const belief_model& m);
belief_model model_from_json(const nlohmann::json& j);

} // namespace ibsead
