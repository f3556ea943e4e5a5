#include "ibsead/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ibsead/errors.hpp"

namespace ibsead {

std::string to_string(visibility_class v) {
    switch (v) {
    case visibility_class::known: return "Known";
    case visibility_class::invisible: return "Invisible";
    case visibility_class::unknown: return "Unknown";
    }
    return "Known";
}

std::string to_string(environment e) {
    return e == environment::internal ? "Internal" : "External";
}

std::string to_string(blockage_kind k) {
    switch (k) {
    case blockage_kind::noise: return "Noise";
    case blockage_kind::darkness: return "Darkness";
    case blockage_kind::ignorance: return "Ignorance";
    }
    return "Noise";
}

visibility_class visibility_from_string(const std::string& s) {
    if (s == "Known") return visibility_class::known;
    if (s == "Invisible") return visibility_class::invisible;
    if (s == "Unknown") return visibility_class::unknown;
    throw invalid_config_error("visibility: " + s);
}

environment environment_from_string(const std::string& s) {
    if (s == "Internal") return environment::internal;
    if (s == "External") return environment::external;
    throw invalid_config_error("env: " + s);
}

blockage_kind blockage_kind_from_string(const std::string& s) {
    if (s == "Noise") return blockage_kind::noise;
    if (s == "Darkness") return blockage_kind::darkness;
    if (s == "Ignorance") return blockage_kind::ignorance;
    throw invalid_config_error("blockage kind: " + s);
}

double entity::position() const {
    auto it = attributes.find("pos");
    return it == attributes.end() ? 0.0 : it->second;
}

double entity::impact_sum() const {
    return std::accumulate(true_impact.begin(), true_impact.end(), 0.0);
}

std::optional<double> observation::reading(entity_id id, const std::string& attr) const {
    auto it = readings.find({id, attr});
    if (it == readings.end()) return std::nullopt;
    return it->second;
}

std::optional<double> observation::mean_reading(entity_id id) const {
    double sum = 0.0;
    int n = 0;
    for (auto it = readings.lower_bound({id, std::string()});
         it != readings.end() && it->first.first == id; ++it) {
        sum += it->second;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

const entity* world::find(entity_id id) const {
    auto it = entities.find(id);
    return it == entities.end() ? nullptr : &it->second;
}

entity* world::find(entity_id id) {
    auto it = entities.find(id);
    return it == entities.end() ? nullptr : &it->second;
}

const interaction_link* world::link_between(entity_id a, entity_id b) const {
    for (const auto& l : links)
        if ((l.from_id == a && l.to_id == b) || (l.from_id == b && l.to_id == a))
            return &l;
    return nullptr;
}

interaction_link* world::link_between(entity_id a, entity_id b) {
    for (auto& l : links)
        if ((l.from_id == a && l.to_id == b) || (l.from_id == b && l.to_id == a))
            return &l;
    return nullptr;
}

std::vector<interaction_link> world::links_of(entity_id id) const {
    std::vector<interaction_link> out;
    for (const auto& l : links)
        if (l.touches(id)) out.push_back(l);
    return out;
}

void world::validate() const {
    if (!find(cb_id)) throw invalid_config_error("cb_id not present in entities");
    if (scope_radius < 0) throw invalid_config_error("scope_radius must be >= 0");
    for (const auto& [id, e] : entities) {
        if (e.id != id) throw invalid_config_error("entity key/id mismatch");
        for (double v : e.true_impact)
            if (!std::isfinite(v)) throw invalid_config_error("true_impact must be finite");
        for (const auto& [name, v] : e.attributes)
            if (!std::isfinite(v)) throw invalid_config_error("attribute " + name + " must be finite");
    }
    for (const auto& l : links) {
        if (l.from_id == l.to_id) throw invalid_config_error("link endpoints must differ");
        if (l.quality < 0.0 || l.quality > 1.0) throw invalid_config_error("link quality outside [0,1]");
        if (!find(l.from_id)) throw invalid_config_error("link from_id unknown");
        if (!find(l.to_id)) throw invalid_config_error("link to_id unknown");
        for (const auto& b : l.blockages)
            if (b.strength < 0.0 || b.strength > 1.0)
                throw invalid_config_error("blockage strength outside [0,1]");
    }
    std::set<entity_id> grouped;
    for (const auto& g : groups) {
        if (g.member_ids.empty()) throw empty_group_error();
        for (entity_id m : g.member_ids) {
            if (!find(m)) throw unknown_id_error(m);
            if (!grouped.insert(m).second)
                throw invalid_config_error("entity " + std::to_string(m) + " in two groups");
        }
    }
}

double effective_quality(const interaction_link& link) {
    double q = link.quality;
    for (const auto& b : link.blockages) q *= (1.0 - b.strength);
    return std::clamp(q, 0.0, 1.0);
}

bool can_interact(const interaction_link& link) {
    return link.switch_from && link.switch_to && effective_quality(link) > 0.0;
}

std::vector<double> group_impact(const entity_group& group, const world& w) {
    if (group.member_ids.empty()) throw empty_group_error();
    std::size_t dim = 0;
    for (entity_id id : group.member_ids) {
        const entity* e = w.find(id);
        if (!e) throw unknown_id_error(id);
        dim = std::max(dim, e->true_impact.size());
    }
    std::vector<double> mean(dim, 0.0);
    for (entity_id id : group.member_ids) {
        const entity& e = *w.find(id);
        for (std::size_t d = 0; d < e.true_impact.size(); ++d)
            mean[d] += e.true_impact[d];
    }
    for (double& v : mean) v /= static_cast<double>(group.member_ids.size());
    return mean;
}

observation step_world(world& w, std::mt19937_64& rng,
                       const std::function<void(world&)>& advance) {
    if (advance) advance(w);
    w.tick += 1;

    observation obs;
    obs.tick = w.tick;

    const entity* cb = w.find(w.cb_id);
    const double cb_pos = cb ? cb->position() : 0.0;

    // Detection pass: Known, in scope, open channel to the CB.
    std::size_t outcome_dim = 0;
    for (const auto& [id, e] : w.entities) {
        if (id == w.cb_id) continue;
        outcome_dim = std::max(outcome_dim, e.true_impact.size());
        if (e.visibility != visibility_class::known) continue;
        if (std::abs(e.position() - cb_pos) > w.scope_radius) continue;
        const interaction_link* l = w.link_between(w.cb_id, id);
        if (!l || !can_interact(*l)) continue;
        obs.detected.insert(id);
    }

    // Readings, corrupted by uniform noise scaled by (1 - effective_quality).
    std::uniform_real_distribution<double> noise(-1.0, 1.0);
    for (entity_id id : obs.detected) {
        const entity& e = *w.find(id);
        const double q = effective_quality(*w.link_between(w.cb_id, id));
        for (const auto& [name, value] : e.attributes) {
            const double u = noise(rng);
            obs.readings[{id, name}] = value + u * (1.0 - q);
        }
    }

    // Gate-filtered outcome vs the all-inclusive felt effect.
    obs.outcome.assign(outcome_dim, 0.0);
    for (entity_id id : obs.detected) {
        const entity& e = *w.find(id);
        for (std::size_t d = 0; d < e.true_impact.size(); ++d)
            obs.outcome[d] += e.true_impact[d];
    }
    obs.felt_effect = 0.0;
    for (const auto& [id, e] : w.entities) {
        if (id == w.cb_id) continue;
        obs.felt_effect += e.impact_sum();
    }
    return obs;
}

nlohmann::json world_to_json(const world& w) {
    nlohmann::json j;
    j["tick"] = w.tick;
    j["cb_id"] = w.cb_id;
    j["scope_radius"] = w.scope_radius;
    auto entities = nlohmann::json::array();
    for (const auto& [id, e] : w.entities) {
        nlohmann::json je;
        je["id"] = e.id;
        je["env"] = to_string(e.env);
        je["visibility"] = to_string(e.visibility);
        je["attributes"] = e.attributes;
        je["true_impact"] = e.true_impact;
        je["switch_default"] = e.switch_default;
        entities.push_back(std::move(je));
    }
    j["entities"] = std::move(entities);
    auto links = nlohmann::json::array();
    for (const auto& l : w.links) {
        nlohmann::json jl;
        jl["from_id"] = l.from_id;
        jl["to_id"] = l.to_id;
        jl["switch_from"] = l.switch_from;
        jl["switch_to"] = l.switch_to;
        jl["quality"] = l.quality;
        auto blockages = nlohmann::json::array();
        for (const auto& b : l.blockages)
            blockages.push_back({{"kind", to_string(b.kind)}, {"strength", b.strength}});
        jl["blockages"] = std::move(blockages);
        links.push_back(std::move(jl));
    }
    j["links"] = std::move(links);
    auto groups = nlohmann::json::array();
    for (const auto& g : w.groups)
        groups.push_back({{"group_id", g.group_id}, {"member_ids", g.member_ids}});
    j["groups"] = std::move(groups);
    return j;
}

world world_from_json(const nlohmann::json& j) {
    world w;
    w.tick = j.at("tick").get<std::int64_t>();
    w.cb_id = j.at("cb_id").get<entity_id>();
    w.scope_radius = j.at("scope_radius").get<double>();
    for (const auto& je : j.at("entities")) {
        entity e;
        e.id = je.at("id").get<entity_id>();
        e.env = environment_from_string(je.at("env").get<std::string>());
        e.visibility = visibility_from_string(je.at("visibility").get<std::string>());
        e.attributes = je.at("attributes").get<std::map<std::string, double>>();
        e.true_impact = je.at("true_impact").get<std::vector<double>>();
        e.switch_default = je.at("switch_default").get<bool>();
        w.entities[e.id] = std::move(e);
    }
    for (const auto& jl : j.at("links")) {
        interaction_link l;
        l.from_id = jl.at("from_id").get<entity_id>();
        l.to_id = jl.at("to_id").get<entity_id>();
        l.switch_from = jl.at("switch_from").get<bool>();
        l.switch_to = jl.at("switch_to").get<bool>();
        l.quality = jl.at("quality").get<double>();
        for (const auto& jb : jl.at("blockages")) {
            blockage_agent b;
            b.kind = blockage_kind_from_string(jb.at("kind").get<std::string>());
            b.strength = jb.at("strength").get<double>();
            l.blockages.push_back(b);
        }
        w.links.push_back(std::move(l));
    }
    for (const auto& jg : j.at("groups")) {
        entity_group g;
        g.group_id = jg.at("group_id").get<int>();
        g.member_ids = jg.at("member_ids").get<std::vector<entity_id>>();
        w.groups.push_back(std::move(g));
    }
    return w;
}

} // namespace ibsead
