#include "covert/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace covert {

namespace {

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

void check_rows(const Table& t, const char* what, ValidationReport& report) {
    for (std::size_t r = 0; r < t.rows(); ++r) {
        double sum = 0.0;
        bool bad = false;
        for (double p : t.row(r)) {
            if (p < 0.0 || !std::isfinite(p)) bad = true;
            sum += p;
        }
        std::ostringstream os;
        if (bad) {
            os << what << " row " << r << " has a negative or non-finite entry";
            report.violations.push_back(os.str());
        } else if (std::abs(sum - 1.0) > 1e-12) {
            os << what << " row " << r << " sums to " << sum;
            report.violations.push_back(os.str());
        }
    }
}

}  // namespace

Table ObsModel::null_action_emission(std::size_t num_states, std::size_t num_actions,
                                     std::size_t alphabet_size, Symbol null_symbol) {
    if (null_symbol >= alphabet_size) throw std::invalid_argument("null symbol outside alphabet");
    Table t(num_states * num_actions, alphabet_size);
    for (std::size_t r = 0; r < t.rows(); ++r) t(r, null_symbol) = 1.0;
    return t;
}

ValidationReport validate_obs_model(const ObsModel& obs, std::size_t num_states,
                                    std::size_t num_actions) {
    ValidationReport report;
    if (obs.alphabet_size == 0) report.violations.emplace_back("empty observation alphabet");
    if (obs.state_emission.rows() != num_states || obs.state_emission.cols() != obs.alphabet_size) {
        report.violations.emplace_back("state emission table has wrong shape");
    }
    if (obs.action_emission.rows() != num_states * num_actions ||
        obs.action_emission.cols() != obs.alphabet_size) {
        report.violations.emplace_back("action emission table has wrong shape");
    }
    if (!report.ok()) return report;
    check_rows(obs.state_emission, "state emission", report);
    check_rows(obs.action_emission, "action emission", report);
    return report;
}

Hmm::Hmm(const Table& transition, const Table& emission, std::vector<double> initial) {
    const std::size_t n = transition.rows();
    if (transition.cols() != n || emission.rows() != n || initial.size() != n) {
        throw InvalidModel("HMM table dimensions disagree");
    }
    ValidationReport report;
    check_rows(transition, "transition", report);
    check_rows(emission, "emission", report);
    double total = 0.0;
    for (double p : initial) total += p;
    if (std::abs(total - 1.0) > 1e-12) report.violations.emplace_back("initial distribution does not sum to 1");
    if (!report.ok()) throw InvalidModel("invalid HMM: " + report.violations.front());

    num_states_ = n;
    alphabet_size_ = emission.cols();
    log_initial_.resize(n);
    std::transform(initial.begin(), initial.end(), log_initial_.begin(), safe_log);
    log_emission_ = Table(n, alphabet_size_);
    for (std::size_t i = 0; i < emission.size(); ++i) log_emission_.data()[i] = safe_log(emission.data()[i]);

    std::vector<std::vector<Edge>> in(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (transition(i, j) > 0.0) in[j].push_back({i, std::log(transition(i, j))});
        }
    }
    finalize_edges(std::move(in));
}

void Hmm::finalize_edges(std::vector<std::vector<Edge>> incoming) {
    edge_offset_.assign(num_states_ + 1, 0);
    edges_.clear();
    for (std::size_t j = 0; j < num_states_; ++j) {
        edge_offset_[j] = edges_.size();
        edges_.insert(edges_.end(), incoming[j].begin(), incoming[j].end());
    }
    edge_offset_[num_states_] = edges_.size();
}

std::span<const Hmm::Edge> Hmm::incoming(std::size_t to) const {
    return {edges_.data() + edge_offset_[to], edge_offset_[to + 1] - edge_offset_[to]};
}

double Hmm::transition_probability(std::size_t from, std::size_t to) const {
    for (const auto& e : incoming(to)) {
        if (e.from == from) return std::exp(e.log_p);
    }
    return 0.0;
}

double Hmm::emission_probability(std::size_t state, Symbol o) const {
    return std::exp(log_emission_(state, o));
}

double Hmm::initial_probability(std::size_t state) const { return std::exp(log_initial_[state]); }

Table Hmm::dense_transition() const {
    Table t(num_states_, num_states_);
    for (std::size_t j = 0; j < num_states_; ++j) {
        for (const auto& e : incoming(j)) t(e.from, j) = std::exp(e.log_p);
    }
    return t;
}

Hmm build_hmm(const Mdp& mdp, const PolicyTable& policy, const ObsModel& obs) {
    const std::size_t S = mdp.num_states;
    const std::size_t A = mdp.num_actions;
    if (policy.num_states() != S || policy.num_actions() != A) {
        throw InvalidModel("policy dimensions do not match the MDP");
    }
    if (obs.state_emission.rows() != S || obs.action_emission.rows() != S * A) {
        throw InvalidModel("observation model dimensions do not match the MDP");
    }
    if (auto report = validate_obs_model(obs, S, A); !report.ok()) {
        throw InvalidModel("invalid observation model: " + report.violations.front());
    }
    for (StateId s = 0; s < S; ++s) {
        double sum = 0.0;
        for (double p : policy.prob.row(s)) {
            if (p < 0.0) throw InvalidModel("policy has a negative probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw InvalidModel("policy row is not a distribution");
    }

    Hmm hmm;
    const std::size_t n = S + S * A;
    hmm.num_states_ = n;
    hmm.alphabet_size_ = obs.alphabet_size;
    hmm.log_initial_.assign(n, kNegInf);
    hmm.log_initial_[decision_state(mdp.initial_state)] = 0.0;
    hmm.log_emission_ = Table(n, obs.alphabet_size);
    for (StateId s = 0; s < S; ++s) {
        for (Symbol o = 0; o < obs.alphabet_size; ++o) {
            hmm.log_emission_(decision_state(s), o) = safe_log(obs.state_emission(s, o));
        }
        for (ActionId a = 0; a < A; ++a) {
            for (Symbol o = 0; o < obs.alphabet_size; ++o) {
                hmm.log_emission_(nature_state(mdp, s, a), o) = safe_log(obs.action_emission(s * A + a, o));
            }
        }
    }

    std::vector<std::vector<Hmm::Edge>> in(n);
    for (StateId s = 0; s < S; ++s) {
        for (ActionId a = 0; a < A; ++a) {
            const double pa = policy.prob(s, a);
            if (pa > 0.0) in[nature_state(mdp, s, a)].push_back({decision_state(s), std::log(pa)});
            auto row = mdp.successors(s, a);
            for (StateId next = 0; next < S; ++next) {
                if (row[next] > 0.0) in[decision_state(next)].push_back({nature_state(mdp, s, a), std::log(row[next])});
            }
        }
    }
    hmm.finalize_edges(std::move(in));
    return hmm;
}

Hmm build_hmm(const Mdp& mdp, const PolicyParams& params, const ObsModel& obs) {
    return build_hmm(mdp, softmax_policy(params), obs);
}

ObsSequence sample_observation(const ObsModel& obs, const Run& run, RandomStream& rng) {
    const std::size_t A = obs.num_actions();
    ObsSequence y;
    y.reserve(2 * run.length() + 1);
    for (std::size_t t = 0; t < run.length(); ++t) {
        y.push_back(rng.categorical(obs.state_emission.row(run.states[t])));
        y.push_back(rng.categorical(obs.action_emission.row(run.states[t] * A + run.actions[t])));
    }
    y.push_back(rng.categorical(obs.state_emission.row(run.states.back())));
    return y;
}

double log_sum_exp(std::span<const double> xs) {
    double m = kNegInf;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    double sum = 0.0;
    for (double x : xs) sum += std::exp(x - m);
    return m + std::log(sum);
}

double log_likelihood(const Hmm& hmm, std::span<const Symbol> y) {
    if (y.empty()) return 0.0;
    const std::size_t n = hmm.num_states();
    for (Symbol o : y) {
        if (o >= hmm.alphabet_size()) throw std::out_of_range("observation symbol outside the alphabet");
    }
    std::vector<double> alpha(n), next(n);
    bool any = false;
    for (std::size_t j = 0; j < n; ++j) {
        alpha[j] = hmm.log_initial(j) + hmm.log_emission(j, y[0]);
        any = any || alpha[j] > kNegInf;
    }
    if (!any) return kNegInf;

    for (std::size_t t = 1; t < y.size(); ++t) {
        any = false;
        for (std::size_t j = 0; j < n; ++j) {
            const double le = hmm.log_emission(j, y[t]);
            if (le == kNegInf) {
                next[j] = kNegInf;
                continue;
            }
            auto edges = hmm.incoming(j);
            double m = kNegInf;
            for (const auto& e : edges) m = std::max(m, alpha[e.from] + e.log_p);
            if (m == kNegInf) {
                next[j] = kNegInf;
                continue;
            }
            double sum = 0.0;
            for (const auto& e : edges) {
                const double x = alpha[e.from];
                if (x > kNegInf) sum += std::exp(x + e.log_p - m);
            }
            next[j] = m + std::log(sum) + le;
            any = true;
        }
        if (!any) return kNegInf;
        std::swap(alpha, next);
    }
    return log_sum_exp(alpha);
}

}  // namespace covert
