#include "ibsead/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "ibsead/decision_tree.hpp"
#include "ibsead/errors.hpp"
#include "ibsead/hmm.hpp"
#include "ibsead/mlp.hpp"
#include "ibsead/naive_bayes.hpp"

namespace ibsead::bench {

namespace {

using scenarios::scenario_output;

trial_result score_predictions(const std::vector<int>& predicted, const scenario_output& data) {
    const auto& rows = data.test.rows;
    std::size_t hits = 0, hidden_hits = 0, hidden_total = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const bool hit = predicted[i] == rows[i].label;
        hits += hit;
        if (data.test_truth[i].hidden_affected) {
            ++hidden_total;
            hidden_hits += hit;
        }
    }
    trial_result r;
    r.accuracy = rows.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(rows.size());
    r.accuracy_hidden = hidden_total == 0
                            ? r.accuracy // no hidden rows: the subset metric degenerates to overall
                            : static_cast<double>(hidden_hits) / static_cast<double>(hidden_total);
    return r;
}

// ---- decision tree ----

trial_result eval_dtree(const learner_config& lc, const scenario_output& data) {
    const auto tree = baselines::dt_train(data.train, baselines::dt_params{lc.max_depth});
    std::vector<int> pred;
    pred.reserve(data.test.size());
    for (const auto& r : data.test.rows) pred.push_back(baselines::dt_predict(tree, r.features));
    return score_predictions(pred, data);
}

// ---- mlp (with train-fit standardization) ----

trial_result eval_mlp(const learner_config& lc, const scenario_output& data, std::uint64_t seed) {
    const int nf = data.train.n_features();
    std::vector<double> mean(static_cast<std::size_t>(nf), 0.0), sd(static_cast<std::size_t>(nf), 0.0);
    for (const auto& r : data.train.rows)
        for (int f = 0; f < nf; ++f) mean[static_cast<std::size_t>(f)] += r.features[static_cast<std::size_t>(f)];
    for (double& v : mean) v /= static_cast<double>(data.train.size());
    for (const auto& r : data.train.rows)
        for (int f = 0; f < nf; ++f) {
            const double d = r.features[static_cast<std::size_t>(f)] - mean[static_cast<std::size_t>(f)];
            sd[static_cast<std::size_t>(f)] += d * d;
        }
    for (double& v : sd) v = std::max(std::sqrt(v / static_cast<double>(data.train.size())), 1e-9);

    auto standardized = [&](const dataset& ds) {
        dataset out = ds;
        for (auto& r : out.rows)
            for (int f = 0; f < nf; ++f)
                r.features[static_cast<std::size_t>(f)] =
                    (r.features[static_cast<std::size_t>(f)] - mean[static_cast<std::size_t>(f)]) /
                    sd[static_cast<std::size_t>(f)];
        return out;
    };

    baselines::mlp_params p;
    p.hidden = lc.hidden;
    p.epochs = lc.epochs;
    p.lr = lc.lr;
    p.seed = seed;
    const auto model = baselines::mlp_train(standardized(data.train), p);
    const dataset test = standardized(data.test);
    std::vector<int> pred;
    pred.reserve(test.size());
    for (const auto& r : test.rows) pred.push_back(baselines::mlp_predict(model, r.features));
    return score_predictions(pred, data);
}

// ---- naive bayes ----

trial_result eval_nbayes(const scenario_output& data) {
    const auto model = baselines::nb_train(data.train);
    std::vector<int> pred;
    pred.reserve(data.test.size());
    for (const auto& r : data.test.rows) pred.push_back(baselines::nb_predict(model, r.features));
    return score_predictions(pred, data);
}

// ---- hmm: per-class models over per-feature tercile symbols ----

struct hmm_classifier {
    std::vector<std::pair<double, double>> cuts; // per-feature tercile thresholds
    std::vector<int> labels;
    std::vector<double> log_prior;
    std::vector<baselines::hmm_model> models;
};

std::vector<int> to_symbols(const hmm_classifier& c, const std::vector<double>& x) {
    std::vector<int> seq(x.size());
    for (std::size_t f = 0; f < x.size(); ++f) {
        const auto& [t1, t2] = c.cuts[f];
        seq[f] = x[f] < t1 ? 0 : (x[f] < t2 ? 1 : 2);
    }
    return seq;
}

// uniform rows plus a fixed asymmetric ripple: Baum-Welch cannot leave an
// exactly uniform model, so the start point has to break the symmetry
baselines::hmm_model perturbed_init(int n_states, int n_symbols) {
    auto row = [](int i, std::size_t n, int salt) {
        std::vector<double> r(n);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            r[j] = 1.0 + 0.1 * static_cast<double>((static_cast<std::size_t>(i * 31 + salt) + j * 17) % 7);
            sum += r[j];
        }
        for (double& v : r) v /= sum;
        return r;
    };
    baselines::hmm_model m;
    m.n_states = n_states;
    m.n_symbols = n_symbols;
    m.initial = row(0, static_cast<std::size_t>(n_states), 3);
    for (int i = 0; i < n_states; ++i) {
        m.transition.push_back(row(i, static_cast<std::size_t>(n_states), 5));
        m.emission.push_back(row(i, static_cast<std::size_t>(n_symbols), 11));
    }
    return m;
}

trial_result eval_hmm(const scenario_output& data) {
    if (data.train.empty()) throw empty_dataset_error();
    const int nf = data.train.n_features();
    hmm_classifier c;
    for (int f = 0; f < nf; ++f) {
        std::vector<double> vals;
        vals.reserve(data.train.size());
        for (const auto& r : data.train.rows) vals.push_back(r.features[static_cast<std::size_t>(f)]);
        std::sort(vals.begin(), vals.end());
        c.cuts.emplace_back(vals[vals.size() / 3], vals[(2 * vals.size()) / 3]);
    }

    std::map<int, std::vector<std::vector<int>>> by_class;
    for (const auto& r : data.train.rows) by_class[r.label].push_back(to_symbols(c, r.features));
    for (const auto& [label, seqs] : by_class) {
        c.labels.push_back(label);
        c.log_prior.push_back(std::log(static_cast<double>(seqs.size()) / data.train.size()));
        c.models.push_back(baselines::baum_welch(perturbed_init(3, 3), seqs, 8));
    }

    std::vector<int> pred;
    pred.reserve(data.test.size());
    for (const auto& r : data.test.rows) {
        const auto seq = to_symbols(c, r.features);
        std::size_t best = 0;
        double best_score = -1e308;
        for (std::size_t k = 0; k < c.models.size(); ++k) {
            const double s = c.log_prior[k] + baselines::hmm_forward(c.models[k], seq);
            if (s > best_score) { // strict: ties keep the lower label
                best_score = s;
                best = k;
            }
        }
        pred.push_back(c.labels[best]);
    }
    return score_predictions(pred, data);
}

// ---- ibsead: quality-aware fusion of feature evidence and felt effect ----
//
// Per class: Gaussian feature likelihoods whose variance is widened by the
// reading-noise variance implied by the row's channel quality, plus a
// two-component felt-effect model (null scatter vs hidden-driver, split at
// tau). Rows with a degraded channel lean on the felt evidence; fully
// observable rows are decided by the features alone.

struct felt_part {
    double weight = 0.0;
    double mean = 0.0;
    double var = 1.0;
    bool ok = false;
};

struct ibsead_class {
    int label = 0;
    double log_prior = 0.0;
    std::vector<double> mean;
    std::vector<double> var;
    felt_part null_part;
    felt_part driver_part;
};

felt_part fit_felt(const std::vector<double>& xs, std::size_t class_total, double var_floor) {
    felt_part p;
    if (xs.size() < 2) return p;
    for (double x : xs) p.mean += x;
    p.mean /= static_cast<double>(xs.size());
    for (double x : xs) p.var += (x - p.mean) * (x - p.mean);
    p.var = std::max(p.var / static_cast<double>(xs.size()), var_floor);
    p.weight = static_cast<double>(xs.size()) / static_cast<double>(class_total);
    p.ok = true;
    return p;
}

double log_normal(double x, double mean, double var) {
    constexpr double log_2pi = 1.8378770664093454836;
    const double d = x - mean;
    return -0.5 * (log_2pi + std::log(var) + d * d / var);
}

trial_result eval_ibsead(const learner_config& lc, const scenario_output& data) {
    if (data.train.empty()) throw empty_dataset_error();
    const double tau = lc.ibsead.tau;
    const int nf = data.train.n_features();

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < data.train.size(); ++i) by_class[data.train.rows[i].label].push_back(i);

    std::vector<ibsead_class> classes;
    bool felt_usable = true;
    for (const auto& [label, idx] : by_class) {
        ibsead_class cm;
        cm.label = label;
        cm.log_prior = std::log(static_cast<double>(idx.size()) / data.train.size());
        cm.mean.assign(static_cast<std::size_t>(nf), 0.0);
        cm.var.assign(static_cast<std::size_t>(nf), 0.0);
        for (std::size_t i : idx)
            for (int f = 0; f < nf; ++f)
                cm.mean[static_cast<std::size_t>(f)] += data.train.rows[i].features[static_cast<std::size_t>(f)];
        for (double& v : cm.mean) v /= static_cast<double>(idx.size());
        for (std::size_t i : idx)
            for (int f = 0; f < nf; ++f) {
                const double d = data.train.rows[i].features[static_cast<std::size_t>(f)] -
                                 cm.mean[static_cast<std::size_t>(f)];
                cm.var[static_cast<std::size_t>(f)] += d * d;
            }
        for (double& v : cm.var) v = std::max(v / static_cast<double>(idx.size()), 1e-6);

        std::vector<double> null_felts, driver_felts;
        for (std::size_t i : idx) {
            const double felt = data.train_view[i].obs.felt_effect;
            (std::abs(felt) > tau ? driver_felts : null_felts).push_back(felt);
        }
        cm.null_part = fit_felt(null_felts, idx.size(), 1e-4);
        cm.driver_part = fit_felt(driver_felts, idx.size(), 1e-4);
        if (!cm.null_part.ok && !cm.driver_part.ok) felt_usable = false;
        classes.push_back(std::move(cm));
    }

    auto log_felt = [](const ibsead_class& cm, double felt) {
        // log of the two-component mixture, via max-shifted sum
        double best = -1e308;
        double total = 0.0;
        std::vector<std::pair<double, double>> parts; // (log weight, log density)
        for (const felt_part* p : {&cm.null_part, &cm.driver_part}) {
            if (!p->ok) continue;
            const double lp = std::log(p->weight) + log_normal(felt, p->mean, p->var);
            parts.emplace_back(lp, 0.0);
            best = std::max(best, lp);
        }
        for (const auto& [lp, unused] : parts) total += std::exp(lp - best);
        return best + std::log(total);
    };

    std::vector<int> pred;
    pred.reserve(data.test.size());
    for (std::size_t i = 0; i < data.test.size(); ++i) {
        const auto& x = data.test.rows[i].features;
        const double q = data.test_view[i].quality;
        const double felt = data.test_view[i].obs.felt_effect;
        const double noise_var = (1.0 - q) * (1.0 - q) / 3.0; // variance of U[-1,1]*(1-q)

        std::size_t best = 0;
        double best_score = -1e308;
        for (std::size_t k = 0; k < classes.size(); ++k) {
            const ibsead_class& cm = classes[k];
            double s = cm.log_prior;
            for (int f = 0; f < nf; ++f)
                s += log_normal(x[static_cast<std::size_t>(f)], cm.mean[static_cast<std::size_t>(f)],
                                cm.var[static_cast<std::size_t>(f)] + noise_var);
            if (felt_usable) s += log_felt(cm, felt);
            if (s > best_score) { // strict: ties keep the lower label
                best_score = s;
                best = k;
            }
        }
        pred.push_back(classes[best].label);
    }
    return score_predictions(pred, data);
}

std::int64_t as_ms(std::chrono::steady_clock::duration d) {
    return std::chrono::duration_cast<std::chrono::microseconds>(d).count();
}

} // namespace

void learner_config::validate() const {
    static const std::set<std::string> names{"ibsead", "dtree", "hmm", "mlp", "nbayes"};
    if (!names.count(name)) throw unknown_learner_error(name);
    if (!(ibsead.alpha > 0.0 && ibsead.alpha <= 1.0)) throw invalid_config_error("alpha");
    if (!(ibsead.tau > 0.0)) throw invalid_config_error("tau");
    if (ibsead.window < 1) throw invalid_config_error("window");
    if (max_depth < 0) throw invalid_config_error("max_depth");
    if (hidden < 1) throw invalid_config_error("hidden");
    if (epochs < 0) throw invalid_config_error("epochs");
    if (!(lr > 0.0)) throw invalid_config_error("lr");
}

void experiment_config::validate() const {
    if (scenario_list.empty()) throw invalid_config_error("scenarios");
    if (learner_list.empty()) throw invalid_config_error("learners");
    if (trials < 1) throw invalid_config_error("trials");
    if (format != "csv" && format != "json") throw invalid_config_error("format");
    std::set<std::string> seen;
    for (const auto& sc : scenario_list) {
        sc.validate();
        if (!seen.insert(sc.name).second) throw invalid_config_error("scenarios");
    }
    seen.clear();
    for (const auto& lc : learner_list) {
        lc.validate();
        if (!seen.insert(lc.name).second) throw invalid_config_error("learners");
    }
}

trial_result evaluate_learner(const learner_config& lc, const scenario_output& data,
                              std::uint64_t seed) {
    lc.validate();
    if (lc.name == "dtree") return eval_dtree(lc, data);
    if (lc.name == "mlp") return eval_mlp(lc, data, seed);
    if (lc.name == "nbayes") return eval_nbayes(data);
    if (lc.name == "hmm") return eval_hmm(data);
    if (lc.name == "ibsead") return eval_ibsead(lc, data);
    throw unknown_learner_error(lc.name);
}

report run_experiment(const experiment_config& cfg) {
    cfg.validate();

    auto run_task = [&cfg](std::size_t si, int trial) {
        scenarios::scenario_config sc = cfg.scenario_list[si];
        sc.seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
        const scenario_output data = scenarios::generate_scenario(sc);
        std::vector<report_row> rows;
        for (const auto& lc : cfg.learner_list) {
            const auto t0 = std::chrono::steady_clock::now();
            const trial_result r = evaluate_learner(lc, data, sc.seed);
            const auto t1 = std::chrono::steady_clock::now();
            report_row row;
            row.scenario = sc.name;
            row.learner = lc.name;
            row.trial = trial;
            row.seed = sc.seed;
            row.accuracy = r.accuracy;
            row.accuracy_hidden = r.accuracy_hidden;
            row.wall_time_ms = cfg.timing ? static_cast<double>(as_ms(t1 - t0)) / 1000.0 : 0.0;
            rows.push_back(std::move(row));
        }
        return rows;
    };

    report rep;
    if (cfg.parallel) {
        std::vector<std::future<std::vector<report_row>>> futures;
        for (std::size_t si = 0; si < cfg.scenario_list.size(); ++si)
            for (int t = 0; t < cfg.trials; ++t)
                futures.push_back(std::async(std::launch::async, run_task, si, t));
        for (auto& f : futures) {
            auto rows = f.get();
            rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
        }
    } else {
        for (std::size_t si = 0; si < cfg.scenario_list.size(); ++si)
            for (int t = 0; t < cfg.trials; ++t) {
                auto rows = run_task(si, t);
                rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
            }
    }

    std::sort(rep.rows.begin(), rep.rows.end(), [](const report_row& a, const report_row& b) {
        return std::tie(a.scenario, a.learner, a.trial) < std::tie(b.scenario, b.learner, b.trial);
    });
    return rep;
}

namespace {

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

} // namespace

void emit_report(const report& rep, const std::string& format, std::ostream& out) {
    if (format == "csv") {
        out << "scenario,learner,trial,seed,accuracy,accuracy_hidden,wall_time_ms\n";
        for (const auto& r : rep.rows)
            out << r.scenario << ',' << r.learner << ',' << r.trial << ',' << r.seed << ','
                << fmt_real(r.accuracy) << ',' << fmt_real(r.accuracy_hidden) << ','
                << fmt_real(r.wall_time_ms) << '\n';
    } else if (format == "json") {
        out << report_to_json(rep).dump(2) << '\n';
    } else {
        throw invalid_config_error("format");
    }
}

void emit_report_file(const report& rep, const std::string& format, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(path);
    emit_report(rep, format, out);
    out.flush();
    if (!out) throw io_error(path);
}

nlohmann::json report_to_json(const report& rep) {
    auto arr = nlohmann::json::array();
    for (const auto& r : rep.rows)
        arr.push_back({{"scenario", r.scenario},
                       {"learner", r.learner},
                       {"trial", r.trial},
                       {"seed", r.seed},
                       {"accuracy", r.accuracy},
                       {"accuracy_hidden", r.accuracy_hidden},
                       {"wall_time_ms", r.wall_time_ms}});
    return arr;
}

report report_from_json(const nlohmann::json& j) {
    report rep;
    for (const auto& jr : j) {
        report_row r;
        r.scenario = jr.at("scenario").get<std::string>();
        r.learner = jr.at("learner").get<std::string>();
        r.trial = jr.at("trial").get<int>();
        r.seed = jr.at("seed").get<std::uint64_t>();
        r.accuracy = jr.at("accuracy").get<double>();
        r.accuracy_hidden = jr.at("accuracy_hidden").get<double>();
        r.wall_time_ms = jr.at("wall_time_ms").get<double>();
        rep.rows.push_back(std::move(r));
    }
    return rep;
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::pair<double, double> tukey_hinges(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    // halves share the middle element when n is odd
    const std::size_t half = n % 2 ? n / 2 + 1 : n / 2;
    const std::vector<double> lower(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(half));
    const std::vector<double> upper(values.end() - static_cast<std::ptrdiff_t>(half), values.end());
    return {median(lower), median(upper)};
}

std::vector<summary_row> summarize(const report& rep) {
    if (rep.rows.empty()) throw empty_report_error();
    std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
    for (const auto& r : rep.rows) groups[{r.scenario, r.learner}].push_back(r.accuracy);

    std::vector<summary_row> out;
    for (const auto& [key, accs] : groups) {
        summary_row s;
        s.scenario = key.first;
        s.learner = key.second;
        s.trials = static_cast<int>(accs.size());
        s.median = median(accs);
        std::tie(s.q1, s.q3) = tukey_hinges(accs);
        s.iqr = s.q3 - s.q1;
        out.push_back(std::move(s));
    }
    return out;
}

std::string summary_table(const std::vector<summary_row>& rows) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %-8s %6s %10s %10s %10s %10s\n", "scenario", "learner",
                  "trials", "median", "q1", "q3", "iqr");
    out << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-12s %-8s %6d %10.4f %10.4f %10.4f %10.4f\n",
                      r.scenario.c_str(), r.learner.c_str(), r.trials, r.median, r.q1, r.q3, r.iqr);
        out << line;
    }
    return out.str();
}

namespace {

template <typename T>
T get_field(const nlohmann::json& j, const std::string& key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw invalid_config_error(key);
    }
}

template <typename T>
T get_required(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) throw invalid_config_error(key);
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw invalid_config_error(key);
    }
}

} // namespace

experiment_config config_from_json(const nlohmann::json& j) {
    experiment_config cfg;
    if (!j.contains("scenarios") || !j.at("scenarios").is_array())
        throw invalid_config_error("scenarios");
    for (const auto& js : j.at("scenarios")) {
        scenarios::scenario_config sc;
        sc.name = get_required<std::string>(js, "name");
        sc.seed = get_field<std::uint64_t>(js, "seed", sc.seed);
        sc.hidden_strength = get_field<double>(js, "hidden_strength", sc.hidden_strength);
        sc.train_per_class = get_field<int>(js, "train_per_class", sc.train_per_class);
        sc.test_per_class = get_field<int>(js, "test_per_class", sc.test_per_class);
        sc.feature_dim = get_field<int>(js, "feature_dim", sc.feature_dim);
        sc.noise_fraction = get_field<double>(js, "noise_fraction", sc.noise_fraction);
        sc.rows = get_field<int>(js, "rows", sc.rows);
        sc.volatile_fraction = get_field<double>(js, "volatile_fraction", sc.volatile_fraction);
        sc.ticks = get_field<int>(js, "ticks", sc.ticks);
        sc.episodes = get_field<int>(js, "episodes", sc.episodes);
        sc.train_fraction = get_field<double>(js, "train_fraction", sc.train_fraction);
        cfg.scenario_list.push_back(std::move(sc));
    }
    if (!j.contains("learners") || !j.at("learners").is_array())
        throw invalid_config_error("learners");
    for (const auto& jl : j.at("learners")) {
        learner_config lc;
        lc.name = get_required<std::string>(jl, "name");
        lc.ibsead.alpha = get_field<double>(jl, "alpha", lc.ibsead.alpha);
        lc.ibsead.tau = get_field<double>(jl, "tau", lc.ibsead.tau);
        lc.ibsead.window = get_field<int>(jl, "window", lc.ibsead.window);
        lc.ibsead.rho = get_field<double>(jl, "rho", lc.ibsead.rho);
        lc.max_depth = get_field<int>(jl, "max_depth", lc.max_depth);
        lc.hidden = get_field<int>(jl, "hidden", lc.hidden);
        lc.epochs = get_field<int>(jl, "epochs", lc.epochs);
        lc.lr = get_field<double>(jl, "lr", lc.lr);
        cfg.learner_list.push_back(std::move(lc));
    }
    cfg.trials = get_field<int>(j, "trials", 1);
    cfg.base_seed = get_field<std::uint64_t>(j, "base_seed", 0);
    cfg.out_path = get_field<std::string>(j, "out", std::string());
    cfg.format = get_field<std::string>(j, "format", std::string("csv"));
    cfg.timing = get_field<bool>(j, "timing", true);
    cfg.parallel = get_field<bool>(j, "parallel", false);
    cfg.validate();
    return cfg;
}

} // namespace ibsead::bench
