#include "ibsead/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ibsead/errors.hpp"

namespace ibsead {

namespace {

double vector_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double vector_sum(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0);
}

// Pearson correlation over the aligned tails of two series; nullopt when
// either side is too short or has no variance.
std::optional<double> pearson(const std::deque<double>& a, const std::deque<double>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    if (n < 3) return std::nullopt;
    const std::size_t oa = a.size() - n;
    const std::size_t ob = b.size() - n;
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[oa + i];
        mb += b[ob + i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[oa + i] - ma;
        const double db = b[ob + i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va <= 1e-24 || vb <= 1e-24) return std::nullopt;
    return cov / std::sqrt(va * vb);
}

struct union_find {
    std::map<entity_id, entity_id> parent;
    entity_id find(entity_id x) {
        auto it = parent.find(x);
        if (it == parent.end() || it->second == x) return x;
        return it->second = find(it->second);
    }
    void unite(entity_id a, entity_id b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

std::vector<double> padded(std::vector<double> v, std::size_t dim) {
    v.resize(std::max(v.size(), dim), 0.0);
    return v;
}

} // namespace

double belief_entity::impact_sum() const { return vector_sum(impact_estimate); }
double belief_entity::impact_norm() const { return vector_norm(impact_estimate); }

int belief_model::group_of(entity_id id) const {
    for (const auto& [gid, members] : group_map)
        if (std::binary_search(members.begin(), members.end(), id)) return gid;
    return -1;
}

std::vector<const belief_entity*> belief_model::inferred_invisible() const {
    std::vector<const belief_entity*> out;
    for (const auto& [id, b] : beliefs)
        if (b.is_synthetic()) out.push_back(&b);
    return out;
}

belief_model make_model(const learner_params& params, entity_id cb_id) {
    if (!(params.alpha > 0.0 && params.alpha <= 1.0)) throw invalid_config_error("alpha must be in (0,1]");
    if (!(params.tau > 0.0)) throw invalid_config_error("tau must be > 0");
    if (params.window < 1) throw invalid_config_error("window must be >= 1");
    if (params.history_cap < 3) throw invalid_config_error("history_cap must be >= 3");
    belief_model m;
    m.params = params;
    m.cb_id = cb_id;
    return m;
}

std::set<entity_id> scan_physical_scope(const observation& obs) {
    return obs.detected;
}

std::set<entity_id> scan_physical_scope(const observation& obs, const world& world_view) {
    (void)world_view;
    return obs.detected;
}

belief_model track_connections(belief_model m, const std::vector<interaction_link>& links) {
    for (const auto& l : links) {
        if (!l.touches(m.cb_id)) continue;
        const entity_id other = l.counterpart_of(m.cb_id);
        m.channels[other] = channel_state{can_interact(l), effective_quality(l)};
    }
    return m;
}

belief_model classify_beliefs(belief_model m, const observation& obs) {
    m.current_tick = std::max(m.current_tick, obs.tick);
    if (!obs.outcome.empty())
        m.outcome_dim = std::max<int>(m.outcome_dim, static_cast<int>(obs.outcome.size()));

    for (entity_id id : obs.detected) {
        auto [it, inserted] = m.beliefs.try_emplace(id);
        belief_entity& b = it->second;
        b.id = id;
        b.believed_class = visibility_class::known;
        b.last_seen_tick = obs.tick;
        if (inserted) b.confidence = 0.3;
        if (auto r = obs.mean_reading(id)) {
            auto& hist = m.reading_history[id];
            hist.push_back(*r);
            while (static_cast<int>(hist.size()) > m.params.history_cap) hist.pop_front();
        }
    }

    // Entities that drop off the scan but keep a nonzero impact estimate are
    // understood to still exist: Known -> Invisible.
    for (auto& [id, b] : m.beliefs) {
        if (b.is_synthetic() || obs.detected.count(id)) continue;
        if (b.believed_class != visibility_class::known) continue;
        if (obs.tick - b.last_seen_tick > m.params.window && b.impact_norm() > 0.0)
            b.believed_class = visibility_class::invisible;
    }
    return m;
}

belief_model map_groups(belief_model m,
                        const std::map<entity_id, std::vector<double>>& correlation_history) {
    std::map<entity_id, std::deque<double>> hist;
    for (const auto& [id, v] : correlation_history)
        hist.emplace(id, std::deque<double>(v.begin(), v.end()));

    std::vector<entity_id> real_ids, synthetic_ids;
    for (const auto& [id, b] : m.beliefs)
        (b.is_synthetic() ? synthetic_ids : real_ids).push_back(id);

    union_find uf;
    for (std::size_t i = 0; i < real_ids.size(); ++i) {
        for (std::size_t j = i + 1; j < real_ids.size(); ++j) {
            auto ha = hist.find(real_ids[i]);
            auto hb = hist.find(real_ids[j]);
            if (ha == hist.end() || hb == hist.end()) continue;
            if (auto r = pearson(ha->second, hb->second); r && *r >= m.params.rho)
                uf.unite(real_ids[i], real_ids[j]);
        }
    }

    std::map<entity_id, std::vector<entity_id>> components;
    for (entity_id id : real_ids) components[uf.find(id)].push_back(id);
    for (entity_id id : synthetic_ids) components[id].push_back(id);

    // Old member sets keep their accumulated impact; reshaped groups restart
    // from the sum of their members' current belief estimates.
    std::map<std::vector<entity_id>, std::vector<double>> old_impacts;
    for (const auto& [gid, members] : m.group_map) {
        auto it = m.group_impacts.find(gid);
        if (it != m.group_impacts.end()) old_impacts[members] = it->second;
    }

    m.group_map.clear();
    m.group_impacts.clear();
    int next_gid = 0;
    for (auto& [root, members] : components) {
        std::sort(members.begin(), members.end());
        const int gid = next_gid++;
        if (auto it = old_impacts.find(members); it != old_impacts.end()) {
            m.group_impacts[gid] = it->second;
        } else {
            std::size_t dim = 0;
            for (entity_id id : members)
                dim = std::max(dim, m.beliefs.at(id).impact_estimate.size());
            std::vector<double> sum(dim, 0.0);
            for (entity_id id : members) {
                const auto& v = m.beliefs.at(id).impact_estimate;
                for (std::size_t d = 0; d < v.size(); ++d) sum[d] += v[d];
            }
            m.group_impacts[gid] = std::move(sum);
        }
        m.group_map[gid] = std::move(members);
    }
    return m;
}

belief_model map_groups(belief_model m) {
    std::map<entity_id, std::vector<double>> hist;
    for (const auto& [id, dq] : m.reading_history)
        hist.emplace(id, std::vector<double>(dq.begin(), dq.end()));
    return map_groups(std::move(m), hist);
}

belief_model estimate_impacts(belief_model m, const observation& obs) {
    if (obs.outcome.empty()) return m;
    m.outcome_dim = std::max<int>(m.outcome_dim, static_cast<int>(obs.outcome.size()));
    const std::size_t dim = obs.outcome.size();
    const double alpha = m.params.alpha;

    // A member takes part in the attribution only when its channel is open
    // and it was actually detected this tick.
    std::map<int, std::vector<entity_id>> active;
    std::map<int, double> weight;
    double total_weight = 0.0;
    for (const auto& [gid, members] : m.group_map) {
        double q_sum = 0.0;
        std::vector<entity_id> act;
        for (entity_id id : members) {
            auto ch = m.channels.find(id);
            if (ch == m.channels.end() || !ch->second.open || ch->second.quality <= 0.0) continue;
            if (!obs.detected.count(id)) continue;
            act.push_back(id);
            q_sum += ch->second.quality;
        }
        if (act.empty()) continue;
        const double w = q_sum / static_cast<double>(act.size());
        active[gid] = std::move(act);
        weight[gid] = w;
        total_weight += w;
    }
    if (total_weight <= 0.0) return m;

    for (const auto& [gid, act] : active) {
        const double share = weight[gid] / total_weight;
        std::vector<double> target(dim);
        for (std::size_t d = 0; d < dim; ++d) target[d] = share * obs.outcome[d];

        auto& impact = m.group_impacts[gid];
        impact = padded(std::move(impact), dim);
        for (std::size_t d = 0; d < dim; ++d)
            impact[d] = (1.0 - alpha) * impact[d] + alpha * target[d];

        // Detected members' beliefs mirror the current attribution, so the
        // felt-effect residual measures exactly what the open channels
        // cannot explain.
        const double inv_n = 1.0 / static_cast<double>(act.size());
        for (entity_id id : act) {
            auto& b = m.beliefs.at(id);
            b.impact_estimate.assign(dim, 0.0);
            for (std::size_t d = 0; d < dim; ++d) b.impact_estimate[d] = target[d] * inv_n;
        }
    }
    return m;
}

std::optional<interaction_link> select_focus(const std::vector<interaction_link>& candidates,
                                             const belief_model& m) {
    std::optional<interaction_link> best;
    double best_score = -1.0;
    entity_id best_id = 0;
    for (const auto& l : candidates) {
        if (!can_interact(l)) continue;
        const entity_id other = l.counterpart_of(m.cb_id);
        double score = 0.0;
        if (int gid = m.group_of(other); gid >= 0) {
            auto it = m.group_impacts.find(gid);
            if (it != m.group_impacts.end()) score = vector_norm(it->second);
        } else if (auto it = m.beliefs.find(other); it != m.beliefs.end()) {
            score = it->second.impact_norm();
        }
        if (!best || score > best_score || (score == best_score && other < best_id)) {
            best = l;
            best_score = score;
            best_id = other;
        }
    }
    return best;
}

belief_model interact_and_learn(belief_model m, const interaction_link& link,
                                const observation& obs) {
    if (!can_interact(link)) throw gate_closed_error();
    const entity_id other = link.counterpart_of(m.cb_id);
    const double q = effective_quality(link);
    m.channels[other] = channel_state{true, q};

    m = classify_beliefs(std::move(m), obs);
    m = map_groups(std::move(m));
    m = estimate_impacts(std::move(m), obs);

    auto [it, inserted] = m.beliefs.try_emplace(other);
    belief_entity& b = it->second;
    if (inserted) {
        b.id = other;
        b.believed_class = visibility_class::known;
        b.last_seen_tick = obs.tick;
    }
    b.confidence = std::clamp(b.confidence + (1.0 - b.confidence) * m.params.confidence_gain * q,
                              0.0, 1.0);
    return m;
}

belief_model infer_invisible(belief_model m, const observation& obs) {
    m.current_tick = std::max(m.current_tick, obs.tick);

    // Felt effect minus everything already explained: detected entities'
    // believed impacts plus previously inferred invisible ones.
    double explained = 0.0;
    for (entity_id id : obs.detected) {
        auto it = m.beliefs.find(id);
        if (it != m.beliefs.end()) explained += it->second.impact_sum();
    }
    for (const auto& [id, b] : m.beliefs) {
        if (obs.detected.count(id)) continue;
        if (b.believed_class == visibility_class::invisible) explained += b.impact_sum();
    }

    const double r = obs.felt_effect - explained;
    m.residual_window.push_back(r);
    while (static_cast<int>(m.residual_window.size()) > m.params.window)
        m.residual_window.pop_front();

    if (static_cast<int>(m.residual_window.size()) == m.params.window) {
        const double mean = std::accumulate(m.residual_window.begin(), m.residual_window.end(), 0.0) /
                            static_cast<double>(m.params.window);
        if (std::abs(mean) > m.params.tau) {
            const int dim = std::max(m.outcome_dim, 1);
            belief_entity b;
            b.id = m.next_synthetic_id--;
            b.believed_class = visibility_class::invisible;
            b.impact_estimate.assign(static_cast<std::size_t>(dim), mean / dim);
            b.confidence = 0.5;
            b.last_seen_tick = obs.tick;
            m.beliefs[b.id] = std::move(b);
            m.residual_window.clear();
        } else if (m.params.window > 1) {
            // Sub-threshold scatter feeds the risk reserve for what is felt
            // but never resolved into an entity.
            double var = 0.0;
            for (double x : m.residual_window) var += (x - mean) * (x - mean);
            var /= static_cast<double>(m.params.window - 1);
            m.unknown_reserve = std::max(0.0, (1.0 - m.params.alpha) * m.unknown_reserve +
                                                  m.params.alpha * std::sqrt(var));
        }
    }
    return m;
}

std::vector<double> predict(const belief_model& m, const observation& obs) {
    (void)obs;
    std::size_t dim = static_cast<std::size_t>(std::max(m.outcome_dim, 0));
    for (const auto& [gid, v] : m.group_impacts) dim = std::max(dim, v.size());
    for (const auto& [id, b] : m.beliefs)
        if (b.is_synthetic()) dim = std::max(dim, b.impact_estimate.size());

    std::vector<double> y(dim, 0.0);
    for (const auto& [gid, members] : m.group_map) {
        double q_sum = 0.0;
        int n_open = 0;
        for (entity_id id : members) {
            auto ch = m.channels.find(id);
            if (ch != m.channels.end() && ch->second.open && ch->second.quality > 0.0) {
                q_sum += ch->second.quality;
                ++n_open;
            }
        }
        if (n_open == 0) continue;
        const double q = q_sum / n_open;
        auto it = m.group_impacts.find(gid);
        if (it == m.group_impacts.end()) continue;
        for (std::size_t d = 0; d < it->second.size() && d < dim; ++d)
            y[d] += q * it->second[d];
    }
    for (const auto& [id, b] : m.beliefs) {
        if (!b.is_synthetic()) continue;
        for (std::size_t d = 0; d < b.impact_estimate.size() && d < dim; ++d)
            y[d] += b.impact_estimate[d];
    }
    return y;
}

double predict_variance(const belief_model& m) {
    double var = 0.0;
    if (m.residual_window.size() >= 2) {
        const double mean = std::accumulate(m.residual_window.begin(), m.residual_window.end(), 0.0) /
                            static_cast<double>(m.residual_window.size());
        for (double x : m.residual_window) var += (x - mean) * (x - mean);
        var /= static_cast<double>(m.residual_window.size() - 1);
    }
    return var + m.unknown_reserve;
}

belief_model observe_tick(belief_model m, const observation& obs,
                          const std::vector<interaction_link>& candidates, bool learn) {
    m = track_connections(std::move(m), candidates);
    m = classify_beliefs(std::move(m), obs);
    m = map_groups(std::move(m));
    if (learn) {
        if (auto focus = select_focus(candidates, m))
            m = interact_and_learn(std::move(m), *focus, obs);
    }
    return infer_invisible(std::move(m), obs);
}

nlohmann::json model_to_json(const belief_model& m) {
    nlohmann::json j;
    j["params"] = {{"alpha", m.params.alpha},
                   {"tau", m.params.tau},
                   {"window", m.params.window},
                   {"rho", m.params.rho},
                   {"history_cap", m.params.history_cap},
                   {"confidence_gain", m.params.confidence_gain}};
    j["cb_id"] = m.cb_id;
    auto beliefs = nlohmann::json::array();
    for (const auto& [id, b] : m.beliefs)
        beliefs.push_back({{"id", b.id},
                           {"believed_class", to_string(b.believed_class)},
                           {"impact_estimate", b.impact_estimate},
                           {"confidence", b.confidence},
                           {"last_seen_tick", b.last_seen_tick}});
    j["beliefs"] = std::move(beliefs);
    auto groups = nlohmann::json::array();
    for (const auto& [gid, members] : m.group_map) {
        nlohmann::json jg{{"group_id", gid}, {"member_ids", members}};
        if (auto it = m.group_impacts.find(gid); it != m.group_impacts.end())
            jg["impact"] = it->second;
        groups.push_back(std::move(jg));
    }
    j["groups"] = std::move(groups);
    j["unknown_reserve"] = m.unknown_reserve;
    j["residual_window"] = std::vector<double>(m.residual_window.begin(), m.residual_window.end());
    auto channels = nlohmann::json::array();
    for (const auto& [id, ch] : m.channels)
        channels.push_back({{"id", id}, {"open", ch.open}, {"quality", ch.quality}});
    j["channels"] = std::move(channels);
    auto history = nlohmann::json::array();
    for (const auto& [id, dq] : m.reading_history)
        history.push_back({{"id", id}, {"values", std::vector<double>(dq.begin(), dq.end())}});
    j["reading_history"] = std::move(history);
    j["next_synthetic_id"] = m.next_synthetic_id;
    j["outcome_dim"] = m.outcome_dim;
    j["current_tick"] = m.current_tick;
    return j;
}

belief_model model_from_json(const nlohmann::json& j) {
    learner_params p;
    const auto& jp = j.at("params");
    p.alpha = jp.at("alpha").get<double>();
    p.tau = jp.at("tau").get<double>();
    p.window = jp.at("window").get<int>();
    p.rho = jp.at("rho").get<double>();
    p.history_cap = jp.at("history_cap").get<int>();
    p.confidence_gain = jp.at("confidence_gain").get<double>();
    belief_model m = make_model(p, j.at("cb_id").get<entity_id>());
    for (const auto& jb : j.at("beliefs")) {
        belief_entity b;
        b.id = jb.at("id").get<entity_id>();
        b.believed_class = visibility_from_string(jb.at("believed_class").get<std::string>());
        b.impact_estimate = jb.at("impact_estimate").get<std::vector<double>>();
        b.confidence = jb.at("confidence").get<double>();
        b.last_seen_tick = jb.at("last_seen_tick").get<std::int64_t>();
        m.beliefs[b.id] = std::move(b);
    }
    for (const auto& jg : j.at("groups")) {
        const int gid = jg.at("group_id").get<int>();
        m.group_map[gid] = jg.at("member_ids").get<std::vector<entity_id>>();
        if (jg.contains("impact")) m.group_impacts[gid] = jg.at("impact").get<std::vector<double>>();
    }
    m.unknown_reserve = j.at("unknown_reserve").get<double>();
    for (double r : j.at("residual_window")) m.residual_window.push_back(r);
    for (const auto& jc : j.at("channels"))
        m.channels[jc.at("id").get<entity_id>()] =
            channel_state{jc.at("open").get<bool>(), jc.at("quality").get<double>()};
    for (const auto& jh : j.at("reading_history")) {
        auto vals = jh.at("values").get<std::vector<double>>();
        m.reading_history[jh.at("id").get<entity_id>()] = std::deque<double>(vals.begin(), vals.end());
    }
    m.next_synthetic_id = j.at("next_synthetic_id").get<entity_id>();
    m.outcome_dim = j.at("outcome_dim").get<int>();
    m.current_tick = j.at("current_tick").get<std::int64_t>();
    return m;
}

} // namespace ibsead
