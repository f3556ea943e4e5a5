#include "ibsead/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "ibsead/errors.hpp"

namespace ibsead::scenarios {

namespace {

double unit(std::mt19937_64& rng) { // U[0,1)
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double sym(std::mt19937_64& rng) { // U[-1,1]
    return std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
}

struct hidden_entity_spec {
    visibility_class vis = visibility_class::invisible;
    std::vector<double> impact;
};

// One-subject world for a single row: the CB, one detectable subject whose
// attributes become the row features, and the hidden drivers that only show
// up in felt_effect. Everything sits at the origin, inside scope.
row_view make_row(const std::map<std::string, double>& attrs,
                  const std::vector<double>& subject_impact,
                  const std::vector<hidden_entity_spec>& hidden,
                  double noise_strength, std::mt19937_64& rng) {
    world w;
    w.cb_id = 0;
    w.scope_radius = 10.0;

    entity cb;
    cb.id = 0;
    cb.env = environment::internal;
    cb.visibility = visibility_class::known;
    w.entities[0] = cb;

    entity subject;
    subject.id = 1;
    subject.env = environment::external;
    subject.visibility = visibility_class::known;
    subject.attributes = attrs;
    subject.true_impact = subject_impact;
    w.entities[1] = subject;

    entity_id next_id = 2;
    for (const auto& spec : hidden) {
        entity h;
        h.id = next_id++;
        h.env = environment::external;
        h.visibility = spec.vis;
        h.true_impact = spec.impact;
        h.switch_default = false;
        w.entities[h.id] = h;
    }

    interaction_link link;
    link.from_id = 0;
    link.to_id = 1;
    link.quality = 1.0;
    if (noise_strength > 0.0)
        link.blockages.push_back(blockage_agent{blockage_kind::noise, noise_strength});
    w.links.push_back(link);

    row_view rv;
    rv.obs = step_world(w, rng);
    rv.links = w.links;
    rv.quality = effective_quality(w.links.front());
    return rv;
}

std::vector<double> features_of(const observation& obs) {
    std::vector<double> f;
    f.reserve(obs.readings.size());
    for (const auto& [key, value] : obs.readings) f.push_back(value);
    return f;
}

void push_row(scenario_output& out, bool to_train, row_view rv, int label) {
    data_row row;
    row.features = features_of(rv.obs);
    row.label = label;
    if (out.train.feature_names.empty()) {
        for (const auto& [key, value] : rv.obs.readings) out.train.feature_names.push_back(key.second);
        out.test.feature_names = out.train.feature_names;
    }
    row_truth truth{rv.hidden_affected, rv.obs.felt_effect, rv.quality};
    if (to_train) {
        out.train.rows.push_back(std::move(row));
        out.train_truth.push_back(truth);
        out.train_view.push_back(std::move(rv));
    } else {
        out.test.rows.push_back(std::move(row));
        out.test_truth.push_back(truth);
        out.test_view.push_back(std::move(rv));
    }
}

entity make_entity(entity_id id, visibility_class vis, std::vector<double> impact,
                   std::map<std::string, double> attrs = {}) {
    entity e;
    e.id = id;
    e.env = id == 0 ? environment::internal : environment::external;
    e.visibility = vis;
    e.true_impact = std::move(impact);
    e.attributes = std::move(attrs);
    e.switch_default = vis == visibility_class::known;
    return e;
}

world template_world(const std::vector<entity>& entities) {
    world w;
    w.cb_id = 0;
    w.scope_radius = 10.0;
    for (const auto& e : entities) w.entities[e.id] = e;
    for (const auto& e : entities) {
        if (e.id == 0 || e.visibility != visibility_class::known) continue;
        interaction_link l;
        l.from_id = 0;
        l.to_id = e.id;
        w.links.push_back(l);
    }
    return w;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void require(bool ok, const char* key) {
    if (!ok) throw invalid_config_error(key);
}

} // namespace

void scenario_config::validate() const {
    static const std::set<std::string> names{"stock", "train_route", "visual", "loans"};
    if (!names.count(name)) throw unknown_scenario_error(name);
    require(hidden_strength >= 0.0 && hidden_strength <= 1.0, "hidden_strength");
    require(train_per_class >= 1, "train_per_class");
    require(test_per_class >= 1, "test_per_class");
    require(feature_dim >= 1, "feature_dim");
    require(noise_fraction >= 0.0 && noise_fraction <= 1.0, "noise_fraction");
    require(rows >= 1, "rows");
    require(volatile_fraction >= 0.0 && volatile_fraction <= 1.0, "volatile_fraction");
    require(ticks >= 1, "ticks");
    require(episodes >= 1, "episodes");
    require(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction");
}

scenario_output gen_visual(const scenario_config& cfg) {
    cfg.validate();
    require(cfg.name == "visual", "name");
    std::mt19937_64 rng(cfg.seed);
    const int n_classes = 3;
    const std::size_t dim = static_cast<std::size_t>(cfg.feature_dim);
    const double h = cfg.hidden_strength;

    // Class centers kept well apart so clean rows are separable every seed.
    std::vector<std::vector<double>> centers;
    for (int attempt = 0; attempt < 100; ++attempt) {
        centers.assign(n_classes, std::vector<double>(dim));
        for (auto& c : centers)
            for (double& x : c) x = 0.2 * unit(rng);
        double min_dist = 1e300;
        for (int a = 0; a < n_classes; ++a)
            for (int b = a + 1; b < n_classes; ++b) {
                double d2 = 0.0;
                for (std::size_t d = 0; d < dim; ++d) {
                    const double dd = centers[static_cast<std::size_t>(a)][d] -
                                      centers[static_cast<std::size_t>(b)][d];
                    d2 += dd * dd;
                }
                min_dist = std::min(min_dist, std::sqrt(d2));
            }
        if (min_dist >= 0.18) break;
    }

    auto attr_name = [](std::size_t d) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "f%02zu", d);
        return std::string(buf);
    };

    scenario_output out;
    out.name = cfg.name;
    const double severity_scale = std::clamp(2.0 * h, 0.0, 1.0);

    auto emit = [&](bool to_train, int cls, bool corrupt) {
        std::map<std::string, double> attrs;
        for (std::size_t d = 0; d < dim; ++d)
            attrs[attr_name(d)] = centers[static_cast<std::size_t>(cls)][d] + 0.04 * sym(rng);
        const double magnitude = 0.5 * (cls + 1) + 0.05 * sym(rng);
        double strength = 0.0;
        if (corrupt) strength = (0.93 + 0.065 * unit(rng)) * severity_scale;
        row_view rv = make_row(attrs, {magnitude},
                               {hidden_entity_spec{visibility_class::unknown, {}}},
                               strength, rng);
        rv.hidden_affected = corrupt;
        push_row(out, to_train, std::move(rv), cls);
    };

    const int n_train = n_classes * cfg.train_per_class;
    const int n_test = n_classes * cfg.test_per_class;
    const int n_corrupt = h > 0.0 ? static_cast<int>(std::lround(cfg.noise_fraction * n_test)) : 0;
    for (int i = 0; i < n_train; ++i) emit(true, i % n_classes, false);
    for (int i = 0; i < n_test; ++i) emit(false, i % n_classes, i < n_corrupt);

    out.w = template_world({make_entity(0, visibility_class::known, {}),
                            make_entity(1, visibility_class::known, {0.5}, {{"f00", centers[0][0]}}),
                            make_entity(2, visibility_class::known, {1.0}, {{"f00", centers[1][0]}}),
                            make_entity(3, visibility_class::known, {1.5}, {{"f00", centers[2][0]}}),
                            make_entity(4, visibility_class::unknown, {})});
    return out;
}

scenario_output gen_loans(const scenario_config& cfg) {
    cfg.validate();
    require(cfg.name == "loans", "name");
    std::mt19937_64 rng(cfg.seed);
    const int n = cfg.rows;
    const int n_train = static_cast<int>(std::lround(cfg.train_fraction * n));
    const double h = cfg.hidden_strength;

    scenario_output out;
    out.name = cfg.name;
    for (int i = 0; i < n; ++i) {
        // evenly spread volatile rows: exact floor(n * fraction) of them
        const bool flagged = std::floor((i + 1) * cfg.volatile_fraction) >
                             std::floor(i * cfg.volatile_fraction);
        const bool is_volatile = flagged && h > 0.0;

        double income = 0, emi = 0, rent = 0, qual = 0, dep = 0, exp = 0, z = 0;
        for (int attempt = 0; attempt < 500; ++attempt) {
            income = 2.0 + 10.0 * unit(rng);
            emi = 4.0 * unit(rng);
            rent = 3.0 * unit(rng);
            qual = std::min(3.0, std::floor(4.0 * unit(rng)));
            dep = std::min(4.0, std::floor(5.0 * unit(rng)));
            exp = 30.0 * unit(rng);
            z = 0.40 * (income - 7.0) / 5.0 + 0.06 * (qual - 1.5) / 1.5 +
                0.18 * (exp - 15.0) / 15.0 - 0.30 * (emi - 2.0) / 2.0 -
                0.10 * (rent - 1.5) / 1.5 - 0.06 * (dep - 2.0) / 2.0;
            if (std::abs(z) >= 0.40) break; // margin keeps the visible rule learnable
        }
        const int visible_label = z > 0.0 ? 1 : 0;
        const int label = is_volatile ? 1 - visible_label : visible_label;

        double felt;
        if (is_volatile)
            felt = (label == 1 ? 1.0 : -1.0) * h * (1.0 + 0.15 * sym(rng));
        else
            felt = 0.06 * sym(rng);

        const std::map<std::string, double> attrs{{"advance_emi", emi}, {"dependents", dep},
                                                  {"experience", exp},  {"income", income},
                                                  {"qualifications", qual}, {"rent", rent}};
        row_view rv = make_row(attrs, {},
                               {hidden_entity_spec{visibility_class::invisible, {0.5 * felt}},
                                hidden_entity_spec{visibility_class::invisible, {0.3 * felt}},
                                hidden_entity_spec{visibility_class::unknown, {0.2 * felt}}},
                               0.0, rng);
        rv.hidden_affected = is_volatile;
        push_row(out, i < n_train, std::move(rv), label);
    }

    out.w = template_world({make_entity(0, visibility_class::known, {}),
                            make_entity(1, visibility_class::known, {}, {{"income", 7.0}}),
                            make_entity(2, visibility_class::invisible, {0.0}),  // black-money income
                            make_entity(3, visibility_class::invisible, {0.0}),  // influence on the process
                            make_entity(4, visibility_class::unknown, {0.0})});  // corruption
    return out;
}

scenario_output gen_stock(const scenario_config& cfg) {
    cfg.validate();
    require(cfg.name == "stock", "name");
    std::mt19937_64 rng(cfg.seed);
    const int T = cfg.ticks;
    const double h = cfg.hidden_strength;
    const double phase = 2.0 * M_PI * unit(rng);

    scenario_output out;
    out.name = cfg.name;
    const int n_train = static_cast<int>(std::lround(cfg.train_fraction * T));

    double ret = 0.0; // realized return entering tick t
    for (int t = 0; t < T; ++t) {
        const double trend = 0.6 * std::sin(2.0 * M_PI * t / 40.0 + phase);
        const double accounts = 0.8 * trend + 0.1 * sym(rng);

        const double draw = unit(rng);
        const double shock = draw < 0.125 ? -0.9 * h : (draw < 0.25 ? 0.9 * h : 0.0);
        const double calamity = unit(rng) < 0.05 ? -0.3 * h : 0.0;

        const double next_ret = trend + shock + calamity;
        const int label = next_ret > 0.0 ? 1 : 0;

        const std::map<std::string, double> attrs{{"accounts", accounts}, {"ret", ret}, {"trend", trend}};
        row_view rv = make_row(attrs, {0.0},
                               {hidden_entity_spec{visibility_class::invisible, {shock}},
                                hidden_entity_spec{visibility_class::unknown, {calamity}}},
                               0.0, rng);
        rv.hidden_affected = shock != 0.0 || calamity != 0.0;
        push_row(out, t < n_train, std::move(rv), label);
        ret = next_ret;
    }

    out.w = template_world({make_entity(0, visibility_class::known, {}),
                            make_entity(1, visibility_class::known, {0.0}, {{"trend", 0.0}}),
                            make_entity(2, visibility_class::invisible, {0.0}),  // insider trading
                            make_entity(3, visibility_class::unknown, {0.0})});  // calamity
    return out;
}

scenario_output gen_train_route(const scenario_config& cfg) {
    cfg.validate();
    require(cfg.name == "train_route", "name");
    std::mt19937_64 rng(cfg.seed);
    const int E = cfg.episodes;
    const double h = cfg.hidden_strength;

    struct episode {
        double rain, rain_prev, congestion, hidden, delay, delay_without;
    };
    std::vector<episode> eps;
    eps.reserve(static_cast<std::size_t>(E));
    double rust = 0.0, rain_prev = 0.0;
    for (int e = 0; e < E; ++e) {
        const double rain = unit(rng);
        const double congestion = 0.3 * unit(rng);
        const double noise = 0.05 * sym(rng);
        rust = rust_decay * rust + rust_coef * rain;
        const double hidden = h * rust_weight * rust;
        eps.push_back(episode{rain, rain_prev, congestion, hidden,
                              0.2 + congestion + hidden + noise, 0.2 + congestion + noise});
        rain_prev = rain;
    }
    std::vector<double> delays;
    for (const auto& ep : eps) delays.push_back(ep.delay);
    const double threshold = median_of(delays);

    scenario_output out;
    out.name = cfg.name;
    const int n_train = static_cast<int>(std::lround(cfg.train_fraction * E));
    for (int e = 0; e < E; ++e) {
        const auto& ep = eps[static_cast<std::size_t>(e)];
        const int label = ep.delay > threshold ? 1 : 0;
        const bool counterfactual = ep.delay_without > threshold;
        const std::map<std::string, double> attrs{
            {"congestion", ep.congestion}, {"rain", ep.rain}, {"rain_prev", ep.rain_prev}};
        row_view rv = make_row(attrs, {0.0},
                               {hidden_entity_spec{visibility_class::unknown, {ep.hidden}}},
                               0.0, rng);
        rv.hidden_affected = (label == 1) != counterfactual;
        push_row(out, e < n_train, std::move(rv), label);
    }

    out.w = template_world({make_entity(0, visibility_class::known, {}),
                            make_entity(1, visibility_class::known, {0.0}, {{"rain", 0.0}}),
                            make_entity(2, visibility_class::unknown, {0.0})}); // rusting parts
    return out;
}

scenario_output generate_scenario(const scenario_config& cfg) {
    cfg.validate();
    if (cfg.name == "visual") return gen_visual(cfg);
    if (cfg.name == "loans") return gen_loans(cfg);
    if (cfg.name == "stock") return gen_stock(cfg);
    if (cfg.name == "train_route") return gen_train_route(cfg);
    throw unknown_scenario_error(cfg.name);
}

} // namespace ibsead::scenarios
