#include "ibsead/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ibsead/errors.hpp"

namespace ibsead::baselines {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

void check_row(const std::vector<double>& row, std::size_t want, const char* what) {
    if (row.size() != want) throw invalid_config_error(std::string(what) + " row size");
    double sum = 0.0;
    for (double p : row) {
        if (!(p >= 0.0)) throw invalid_config_error(std::string(what) + " has negative entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw invalid_config_error(std::string(what) + " row not stochastic");
}

void check_sequence(const hmm_model& m, const std::vector<int>& seq) {
    if (seq.empty()) throw empty_sequence_error();
    for (int s : seq)
        if (s < 0 || s >= m.n_symbols) throw symbol_out_of_range_error(s, static_cast<std::size_t>(m.n_symbols));
}

struct forward_backward {
    std::vector<std::vector<double>> alpha; // row-normalized
    std::vector<std::vector<double>> beta;  // row-normalized
    double loglik = 0.0;
    bool degenerate = false;
};

forward_backward run_forward_backward(const hmm_model& m, const std::vector<int>& seq) {
    const std::size_t T = seq.size();
    const std::size_t N = static_cast<std::size_t>(m.n_states);
    forward_backward fb;
    fb.alpha.assign(T, std::vector<double>(N, 0.0));
    fb.beta.assign(T, std::vector<double>(N, 0.0));

    for (std::size_t i = 0; i < N; ++i)
        fb.alpha[0][i] = m.initial[i] * m.emission[i][static_cast<std::size_t>(seq[0])];
    for (std::size_t t = 0; t < T; ++t) {
        if (t > 0) {
            for (std::size_t j = 0; j < N; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < N; ++i) s += fb.alpha[t - 1][i] * m.transition[i][j];
                fb.alpha[t][j] = s * m.emission[j][static_cast<std::size_t>(seq[t])];
            }
        }
        double scale = 0.0;
        for (double a : fb.alpha[t]) scale += a;
        if (scale <= 0.0) {
            fb.loglik = neg_inf;
            fb.degenerate = true;
            return fb;
        }
        for (double& a : fb.alpha[t]) a /= scale;
        fb.loglik += std::log(scale);
    }

    // Any per-step scaling of beta cancels later: gamma and xi are
    // renormalized at each t.
    for (std::size_t i = 0; i < N; ++i) fb.beta[T - 1][i] = 1.0;
    for (std::size_t t = T - 1; t-- > 0;) {
        double scale = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < N; ++j)
                s += m.transition[i][j] * m.emission[j][static_cast<std::size_t>(seq[t + 1])] * fb.beta[t + 1][j];
            fb.beta[t][i] = s;
            scale += s;
        }
        if (scale <= 0.0) {
            fb.degenerate = true;
            return fb;
        }
        for (std::size_t i = 0; i < N; ++i) fb.beta[t][i] /= scale;
    }
    return fb;
}

struct bw_accumulator {
    std::vector<double> initial;
    std::vector<std::vector<double>> trans_num;
    std::vector<double> trans_den;
    std::vector<std::vector<double>> emit_num;
    std::vector<double> emit_den;
    double loglik = 0.0;
    int n_sequences = 0;

    explicit bw_accumulator(const hmm_model& m)
        : initial(static_cast<std::size_t>(m.n_states), 0.0),
          trans_num(static_cast<std::size_t>(m.n_states),
                    std::vector<double>(static_cast<std::size_t>(m.n_states), 0.0)),
          trans_den(static_cast<std::size_t>(m.n_states), 0.0),
          emit_num(static_cast<std::size_t>(m.n_states),
                   std::vector<double>(static_cast<std::size_t>(m.n_symbols), 0.0)),
          emit_den(static_cast<std::size_t>(m.n_states), 0.0) {}
};

void accumulate(bw_accumulator& acc, const hmm_model& m, const std::vector<int>& seq) {
    const forward_backward fb = run_forward_backward(m, seq);
    acc.loglik += fb.loglik;
    if (fb.degenerate) return;
    const std::size_t T = seq.size();
    const std::size_t N = static_cast<std::size_t>(m.n_states);

    std::vector<double> gamma(N);
    for (std::size_t t = 0; t < T; ++t) {
        double norm = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            gamma[i] = fb.alpha[t][i] * fb.beta[t][i];
            norm += gamma[i];
        }
        if (norm <= 0.0) continue;
        for (std::size_t i = 0; i < N; ++i) {
            gamma[i] /= norm;
            if (t == 0) acc.initial[i] += gamma[i];
            if (t + 1 < T) acc.trans_den[i] += gamma[i];
            acc.emit_num[i][static_cast<std::size_t>(seq[t])] += gamma[i];
            acc.emit_den[i] += gamma[i];
        }
        if (t + 1 < T) {
            double xi_norm = 0.0;
            std::vector<std::vector<double>> xi(N, std::vector<double>(N, 0.0));
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) {
                    xi[i][j] = fb.alpha[t][i] * m.transition[i][j] *
                               m.emission[j][static_cast<std::size_t>(seq[t + 1])] * fb.beta[t + 1][j];
                    xi_norm += xi[i][j];
                }
            if (xi_norm <= 0.0) continue;
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) acc.trans_num[i][j] += xi[i][j] / xi_norm;
        }
    }
    ++acc.n_sequences;
}

hmm_model apply_update(const hmm_model& m, const bw_accumulator& acc) {
    if (acc.n_sequences == 0) return m;
    hmm_model out = m;
    const std::size_t N = static_cast<std::size_t>(m.n_states);
    const std::size_t M = static_cast<std::size_t>(m.n_symbols);
    for (std::size_t i = 0; i < N; ++i) out.initial[i] = acc.initial[i] / acc.n_sequences;
    for (std::size_t i = 0; i < N; ++i) {
        if (acc.trans_den[i] > 0.0)
            for (std::size_t j = 0; j < N; ++j) out.transition[i][j] = acc.trans_num[i][j] / acc.trans_den[i];
        if (acc.emit_den[i] > 0.0)
            for (std::size_t k = 0; k < M; ++k) out.emission[i][k] = acc.emit_num[i][k] / acc.emit_den[i];
    }
    return out;
}

} // namespace

void hmm_model::validate() const {
    if (n_states < 1 || n_symbols < 1) throw invalid_config_error("hmm has no states or symbols");
    check_row(initial, static_cast<std::size_t>(n_states), "initial");
    if (transition.size() != static_cast<std::size_t>(n_states))
        throw invalid_config_error("transition shape");
    if (emission.size() != static_cast<std::size_t>(n_states))
        throw invalid_config_error("emission shape");
    for (const auto& row : transition) check_row(row, static_cast<std::size_t>(n_states), "transition");
    for (const auto& row : emission) check_row(row, static_cast<std::size_t>(n_symbols), "emission");
}

hmm_model make_random_hmm(int n_states, int n_symbols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    auto random_row = [&](std::size_t n) {
        std::vector<double> row(n);
        double sum = 0.0;
        for (double& p : row) {
            p = u(rng);
            sum += p;
        }
        for (double& p : row) p /= sum;
        return row;
    };
    hmm_model m;
    m.n_states = n_states;
    m.n_symbols = n_symbols;
    m.initial = random_row(static_cast<std::size_t>(n_states));
    for (int i = 0; i < n_states; ++i) {
        m.transition.push_back(random_row(static_cast<std::size_t>(n_states)));
        m.emission.push_back(random_row(static_cast<std::size_t>(n_symbols)));
    }
    return m;
}

double hmm_forward(const hmm_model& m, const std::vector<int>& seq) {
    m.validate();
    check_sequence(m, seq);
    const std::size_t N = static_cast<std::size_t>(m.n_states);
    std::vector<double> alpha(N), next(N);
    for (std::size_t i = 0; i < N; ++i)
        alpha[i] = m.initial[i] * m.emission[i][static_cast<std::size_t>(seq[0])];
    double loglik = 0.0;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        if (t > 0) {
            for (std::size_t j = 0; j < N; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < N; ++i) s += alpha[i] * m.transition[i][j];
                next[j] = s * m.emission[j][static_cast<std::size_t>(seq[t])];
            }
            alpha = next;
        }
        double scale = 0.0;
        for (double a : alpha) scale += a;
        if (scale <= 0.0) return neg_inf;
        for (double& a : alpha) a /= scale;
        loglik += std::log(scale);
    }
    return loglik;
}

viterbi_result hmm_viterbi(const hmm_model& m, const std::vector<int>& seq) {
    m.validate();
    check_sequence(m, seq);
    const std::size_t T = seq.size();
    const std::size_t N = static_cast<std::size_t>(m.n_states);
    auto safe_log = [](double p) { return p > 0.0 ? std::log(p) : neg_inf; };

    std::vector<std::vector<double>> delta(T, std::vector<double>(N, neg_inf));
    std::vector<std::vector<int>> from(T, std::vector<int>(N, 0));
    for (std::size_t i = 0; i < N; ++i)
        delta[0][i] = safe_log(m.initial[i]) + safe_log(m.emission[i][static_cast<std::size_t>(seq[0])]);
    for (std::size_t t = 1; t < T; ++t)
        for (std::size_t j = 0; j < N; ++j) {
            double best = neg_inf;
            int arg = 0;
            for (std::size_t i = 0; i < N; ++i) {
                const double v = delta[t - 1][i] + safe_log(m.transition[i][j]);
                if (v > best) { // strict: ties keep the lower state
                    best = v;
                    arg = static_cast<int>(i);
                }
            }
            delta[t][j] = best + safe_log(m.emission[j][static_cast<std::size_t>(seq[t])]);
            from[t][j] = arg;
        }

    viterbi_result res;
    res.path.assign(T, 0);
    double best = neg_inf;
    int last = 0;
    for (std::size_t i = 0; i < N; ++i)
        if (delta[T - 1][i] > best) {
            best = delta[T - 1][i];
            last = static_cast<int>(i);
        }
    res.log_prob = best;
    res.path[T - 1] = last;
    for (std::size_t t = T - 1; t-- > 0;) res.path[t] = from[t + 1][static_cast<std::size_t>(res.path[t + 1])];
    return res;
}

hmm_model baum_welch(const hmm_model& m, const std::vector<int>& seq, int iterations,
                     std::vector<double>* loglik_trace) {
    return baum_welch(m, std::vector<std::vector<int>>{seq}, iterations, loglik_trace);
}

hmm_model baum_welch(const hmm_model& m, const std::vector<std::vector<int>>& seqs,
                     int iterations, std::vector<double>* loglik_trace) {
    m.validate();
    if (seqs.empty()) throw empty_sequence_error();
    for (const auto& seq : seqs) check_sequence(m, seq);
    if (loglik_trace) loglik_trace->clear();

    hmm_model cur = m;
    for (int it = 0; it < iterations; ++it) {
        bw_accumulator acc(cur);
        for (const auto& seq : seqs) accumulate(acc, cur, seq);
        if (loglik_trace) loglik_trace->push_back(acc.loglik);
        cur = apply_update(cur, acc);
    }
    return cur;
}

} // namespace ibsead::baselines
