#include "ibsead/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ibsead/errors.hpp"

namespace ibsead::baselines {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct activations {
    std::vector<double> hidden; // post-sigmoid
    std::vector<double> probs;  // post-softmax
};

activations run_forward(const mlp_model& m, const std::vector<double>& x) {
    activations a;
    a.hidden.resize(static_cast<std::size_t>(m.n_hidden));
    for (int h = 0; h < m.n_hidden; ++h) {
        double z = m.b1[static_cast<std::size_t>(h)];
        const double* row = &m.w1[static_cast<std::size_t>(h) * m.n_in];
        for (int i = 0; i < m.n_in; ++i) z += row[i] * x[static_cast<std::size_t>(i)];
        a.hidden[static_cast<std::size_t>(h)] = sigmoid(z);
    }
    a.probs.resize(static_cast<std::size_t>(m.n_out));
    double zmax = -1e300;
    for (int o = 0; o < m.n_out; ++o) {
        double z = m.b2[static_cast<std::size_t>(o)];
        const double* row = &m.w2[static_cast<std::size_t>(o) * m.n_hidden];
        for (int h = 0; h < m.n_hidden; ++h) z += row[h] * a.hidden[static_cast<std::size_t>(h)];
        a.probs[static_cast<std::size_t>(o)] = z;
        zmax = std::max(zmax, z);
    }
    double sum = 0.0;
    for (double& p : a.probs) {
        p = std::exp(p - zmax);
        sum += p;
    }
    for (double& p : a.probs) p /= sum;
    return a;
}

} // namespace

mlp_model make_mlp(int n_in, int n_hidden, int n_out, std::uint64_t seed) {
    if (n_in < 1 || n_hidden < 1 || n_out < 1) throw invalid_config_error("mlp layer sizes");
    mlp_model m;
    m.n_in = n_in;
    m.n_hidden = n_hidden;
    m.n_out = n_out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(n_in));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(n_hidden));
    m.w1.resize(static_cast<std::size_t>(n_hidden) * n_in);
    for (double& w : m.w1) w = u(rng) * s1;
    m.b1.assign(static_cast<std::size_t>(n_hidden), 0.0);
    m.w2.resize(static_cast<std::size_t>(n_out) * n_hidden);
    for (double& w : m.w2) w = u(rng) * s2;
    m.b2.assign(static_cast<std::size_t>(n_out), 0.0);
    return m;
}

std::vector<double> mlp_forward(const mlp_model& m, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != m.n_in)
        throw arity_mismatch_error(x.size(), static_cast<std::size_t>(m.n_in));
    return run_forward(m, x).probs;
}

int mlp_predict(const mlp_model& m, const std::vector<double>& x) {
    const auto p = mlp_forward(m, x);
    int best = 0;
    for (int o = 1; o < m.n_out; ++o)
        if (p[static_cast<std::size_t>(o)] > p[static_cast<std::size_t>(best)]) best = o;
    return best;
}

mlp_gradient mlp_loss_and_grad(const mlp_model& m, const dataset& ds) {
    if (ds.empty()) throw empty_dataset_error();
    mlp_gradient g;
    std::vector<double> gw1(m.w1.size(), 0.0), gb1(m.b1.size(), 0.0);
    std::vector<double> gw2(m.w2.size(), 0.0), gb2(m.b2.size(), 0.0);
    const double inv_r = 1.0 / static_cast<double>(ds.size());

    for (const auto& row : ds.rows) {
        if (static_cast<int>(row.features.size()) != m.n_in)
            throw arity_mismatch_error(row.features.size(), static_cast<std::size_t>(m.n_in));
        if (row.label < 0 || row.label >= m.n_out) throw invalid_config_error("label out of range");
        const activations a = run_forward(m, row.features);
        g.loss -= std::log(std::max(a.probs[static_cast<std::size_t>(row.label)], 1e-300)) * inv_r;

        std::vector<double> dz2(static_cast<std::size_t>(m.n_out));
        for (int o = 0; o < m.n_out; ++o)
            dz2[static_cast<std::size_t>(o)] =
                (a.probs[static_cast<std::size_t>(o)] - (o == row.label ? 1.0 : 0.0)) * inv_r;
        for (int o = 0; o < m.n_out; ++o) {
            gb2[static_cast<std::size_t>(o)] += dz2[static_cast<std::size_t>(o)];
            for (int h = 0; h < m.n_hidden; ++h)
                gw2[static_cast<std::size_t>(o) * m.n_hidden + h] +=
                    dz2[static_cast<std::size_t>(o)] * a.hidden[static_cast<std::size_t>(h)];
        }
        for (int h = 0; h < m.n_hidden; ++h) {
            double dh = 0.0;
            for (int o = 0; o < m.n_out; ++o)
                dh += m.w2[static_cast<std::size_t>(o) * m.n_hidden + h] * dz2[static_cast<std::size_t>(o)];
            const double hv = a.hidden[static_cast<std::size_t>(h)];
            const double dz1 = dh * hv * (1.0 - hv);
            gb1[static_cast<std::size_t>(h)] += dz1;
            for (int i = 0; i < m.n_in; ++i)
                gw1[static_cast<std::size_t>(h) * m.n_in + i] += dz1 * row.features[static_cast<std::size_t>(i)];
        }
    }

    g.grad.reserve(gw1.size() + gb1.size() + gw2.size() + gb2.size());
    g.grad.insert(g.grad.end(), gw1.begin(), gw1.end());
    g.grad.insert(g.grad.end(), gb1.begin(), gb1.end());
    g.grad.insert(g.grad.end(), gw2.begin(), gw2.end());
    g.grad.insert(g.grad.end(), gb2.begin(), gb2.end());
    return g;
}

std::vector<double> mlp_flatten(const mlp_model& m) {
    std::vector<double> flat;
    flat.reserve(m.w1.size() + m.b1.size() + m.w2.size() + m.b2.size());
    flat.insert(flat.end(), m.w1.begin(), m.w1.end());
    flat.insert(flat.end(), m.b1.begin(), m.b1.end());
    flat.insert(flat.end(), m.w2.begin(), m.w2.end());
    flat.insert(flat.end(), m.b2.begin(), m.b2.end());
    return flat;
}

void mlp_unflatten(mlp_model& m, const std::vector<double>& flat) {
    const std::size_t want = m.w1.size() + m.b1.size() + m.w2.size() + m.b2.size();
    if (flat.size() != want) throw arity_mismatch_error(flat.size(), want);
    auto it = flat.begin();
    std::copy(it, it + static_cast<std::ptrdiff_t>(m.w1.size()), m.w1.begin());
    it += static_cast<std::ptrdiff_t>(m.w1.size());
    std::copy(it, it + static_cast<std::ptrdiff_t>(m.b1.size()), m.b1.begin());
    it += static_cast<std::ptrdiff_t>(m.b1.size());
    std::copy(it, it + static_cast<std::ptrdiff_t>(m.w2.size()), m.w2.begin());
    it += static_cast<std::ptrdiff_t>(m.w2.size());
    std::copy(it, it + static_cast<std::ptrdiff_t>(m.b2.size()), m.b2.begin());
}

mlp_model mlp_train(const dataset& ds, const mlp_params& params) {
    if (ds.empty()) throw empty_dataset_error();
    ds.validate();
    if (params.hidden < 1 || params.epochs < 0 || params.lr <= 0.0)
        throw invalid_config_error("mlp training parameters");
    const int n_out = std::max(ds.n_classes(), 2);
    for (const auto& r : ds.rows)
        if (r.label < 0) throw invalid_config_error("negative label");

    mlp_model m = make_mlp(ds.n_features(), params.hidden, n_out, params.seed);
    for (int e = 0; e < params.epochs; ++e) {
        const mlp_gradient g = mlp_loss_and_grad(m, ds);
        std::vector<double> flat = mlp_flatten(m);
        for (std::size_t i = 0; i < flat.size(); ++i) flat[i] -= params.lr * g.grad[i];
        mlp_unflatten(m, flat);
    }
    return m;
}

double mlp_accuracy(const mlp_model& m, const dataset& ds) {
    if (ds.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& r : ds.rows)
        if (mlp_predict(m, r.features) == r.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

} // namespace ibsead::baselines
