#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stigmergy/calcium_kernel.hpp"
#include "stigmergy/errors.hpp"
#include "stigmergy/rng.hpp"

namespace stigmergy {

// Weights of the selection rule. `additive` keeps the state and heuristic
// terms as a sum, which produces the jitter the multiplicative form removes.
struct SelectionParams {
    enum class Mode { additive, multiplicative };

    double alpha = 2.0;
    double beta = 2.0;
    double n_sel = 2.0;
    Mode mode = Mode::multiplicative;

    void validate() const {
        if (alpha <= 0.0 || beta <= 0.0) throw config_error("selection: alpha and beta must be > 0");
        if (n_sel < 1.0) throw config_error("selection: n must be >= 1");
    }
};

// Scale factors and clamps of the state-update rules.
struct UpdateParams {
    double rho1 = 0.001;       // local update scale
    double rho2 = 1.0;         // propagated update scale
    double factor = 0.5;       // distance step per regulation
    double clamp_local = 0.01; // max |local delta|
    // Propagated deltas land every turn on every agent in range, local ones
    // only when an agent acts; the default caps keep the propagated drift
    // from outrunning the reward-anchored local signal.
    double clamp_prop = 0.0002; // max |propagated delta|

    void validate() const {
        if (rho1 <= 0.0 || rho2 <= 0.0 || factor <= 0.0 || clamp_local <= 0.0 || clamp_prop <= 0.0) {
            throw config_error("update: all scale factors and clamps must be > 0");
        }
    }
};

// Directed pairwise inter-agent distances with bounds and the interaction
// threshold d_th. The diagonal is unused; reads of self-distances throw.
class DistanceMatrix {
public:
    DistanceMatrix(std::size_t agents, double d_min, double d_max, double d_th, double d_init)
        : n_(agents), d_min_(d_min), d_max_(d_max), d_th_(d_th),
          d_(agents * agents, d_init) {
        if (agents < 2) throw config_error("distances: need at least 2 agents");
        if (d_min <= 0.0 || d_min > d_max) throw config_error("distances: need 0 < d_min <= d_max");
        if (d_init < d_min || d_init > d_max) throw config_error("distances: d_init must lie in [d_min, d_max]");
        if (d_th <= 0.0) throw config_error("distances: d_th must be > 0");
    }

    std::size_t size() const { return n_; }
    double d_min() const { return d_min_; }
    double d_max() const { return d_max_; }
    double d_th() const { return d_th_; }

    double get(std::size_t from, std::size_t to) const {
        check_pair(from, to);
        return d_[from * n_ + to];
    }

    // Clamps to [d_min, d_max]; returns the stored value.
    double set(std::size_t from, std::size_t to, double value) {
        check_pair(from, to);
        const double clamped = std::clamp(value, d_min_, d_max_);
        d_[from * n_ + to] = clamped;
        return clamped;
    }

    double nudge(std::size_t from, std::size_t to, double delta) {
        return set(from, to, get(from, to) + delta);
    }

    double avg_outgoing(std::size_t from) const {
        double sum = 0.0;
        for (std::size_t to = 0; to < n_; ++to) {
            if (to != from) sum += d_[from * n_ + to];
        }
        return sum / static_cast<double>(n_ - 1);
    }

    double avg_incoming(std::size_t to) const {
        double sum = 0.0;
        for (std::size_t from = 0; from < n_; ++from) {
            if (from != to) sum += d_[from * n_ + to];
        }
        return sum / static_cast<double>(n_ - 1);
    }

private:
    void check_pair(std::size_t from, std::size_t to) const {
        if (from >= n_ || to >= n_ || from == to) {
            throw std::invalid_argument("DistanceMatrix: invalid agent pair");
        }
    }

    std::size_t n_;
    double d_min_, d_max_, d_th_;
    std::vector<double> d_;
};

// Per-agent rewards, remaining abilities, state values per task and the
// ability-derived heuristic factor.
class AgentPool {
public:
    AgentPool(std::vector<double> rewards, std::vector<int> abilities, std::size_t task_count,
              double theta_init = 0.5, double eps_phi = 0.01)
        : rewards_(std::move(rewards)), abilities_(std::move(abilities)), eps_phi_(eps_phi) {
        if (rewards_.empty() || rewards_.size() != abilities_.size()) {
            throw config_error("agents: rewards and abilities must be non-empty and equal-sized");
        }
        if (task_count == 0) throw config_error("agents: need at least one task");
        if (eps_phi_ <= 0.0) throw config_error("agents: heuristic floor must be > 0");
        if (theta_init < 0.0 || theta_init > 1.0) throw config_error("agents: theta_init must lie in [0, 1]");
        for (int a : abilities_) {
            if (a < 0) throw config_error("agents: abilities must be >= 0");
        }
        initial_abilities_ = abilities_;
        ability_max_init_ = *std::max_element(abilities_.begin(), abilities_.end());
        theta_.assign(rewards_.size(), std::vector<double>(task_count, theta_init));
    }

    // Restores every agent's remaining ability to its initial draw; state
    // values are untouched.
    void restore_abilities() { abilities_ = initial_abilities_; }

    std::size_t size() const { return rewards_.size(); }
    std::size_t task_count() const { return theta_.front().size(); }

    double reward(std::size_t i) const { return rewards_.at(i); }
    int ability(std::size_t i) const { return abilities_.at(i); }
    bool eligible(std::size_t i) const { return abilities_.at(i) > 0; }

    void consume_ability(std::size_t i) {
        if (abilities_.at(i) <= 0) throw std::logic_error("AgentPool: agent has no actions left");
        --abilities_[i];
    }

    double theta(std::size_t i, std::size_t j) const { return theta_.at(i).at(j); }

    // Applies a state-value delta, clamping theta to [0, 1].
    void apply_theta_delta(std::size_t i, std::size_t j, double delta) {
        double& value = theta_.at(i).at(j);
        value = std::clamp(value + delta, 0.0, 1.0);
    }

    // Heuristic factor: agents with more remaining ability get a smaller
    // value, which places them higher in the selection rule. Mapped onto
    // [0.5, 1] so its spread matches the state value's working range; an
    // unbounded 1 - a/a_max ratio lets the few top-ability agents dominate
    // every early batch through the inverse-square weight.
    double heuristic(std::size_t i) const {
        if (ability_max_init_ == 0) return 1.0;
        const double a = static_cast<double>(abilities_.at(i));
        const double a_max = static_cast<double>(ability_max_init_);
        return std::max(1.0 - 0.5 * a / a_max, eps_phi_);
    }

    int ability_max_init() const { return ability_max_init_; }
    double eps_phi() const { return eps_phi_; }

private:
    std::vector<double> rewards_;
    std::vector<int> abilities_;
    std::vector<int> initial_abilities_;
    std::vector<std::vector<double>> theta_;
    int ability_max_init_ = 0;
    double eps_phi_;
};

// Per-task requirement, accumulated reward and the floored emergency degree.
class TaskBoard {
public:
    explicit TaskBoard(double eps_s = 0.01) : eps_s_(eps_s) {
        if (eps_s_ <= 0.0) throw config_error("tasks: emergency floor must be > 0");
    }

    std::size_t add_task(double requirement) {
        if (requirement < 0.0) throw config_error("tasks: requirement must be >= 0");
        requirements_.push_back(requirement);
        accumulated_.push_back(0.0);
        return requirements_.size() - 1;
    }

    std::size_t size() const { return requirements_.size(); }
    double requirement(std::size_t j) const { return requirements_.at(j); }
    double accumulated(std::size_t j) const { return accumulated_.at(j); }

    double emergency(std::size_t j) const {
        const double t = requirements_.at(j);
        if (t <= 0.0) return 1.0;
        return std::max(accumulated_.at(j) / t, eps_s_);
    }

    void accumulate(std::size_t j, double reward_sum) {
        if (!(reward_sum >= 0.0)) throw std::invalid_argument("TaskBoard: rewards must be finite and >= 0");
        accumulated_.at(j) += reward_sum;
    }

    double eps_s() const { return eps_s_; }

private:
    double eps_s_;
    std::vector<double> requirements_;
    std::vector<double> accumulated_;
};

// Selection weight of one agent for one task. Zero for an all-zero
// denominator by convention.
inline double selection_weight(double s, double theta, double phi, const SelectionParams& p) {
    const double sn = std::pow(s, p.n_sel);
    const double state_term = p.alpha * std::pow(theta, p.n_sel);
    const double heuristic_term = p.beta * std::pow(phi, p.n_sel);
    const double denom = p.mode == SelectionParams::Mode::additive
                             ? sn + state_term + heuristic_term
                             : sn + state_term * heuristic_term;
    return denom > 0.0 ? sn / denom : 0.0;
}

// Weighted sampling without replacement among eligible agents, proportional
// to the given weights. Returns exactly batch_size distinct indices.
inline std::vector<std::size_t> sample_batch(std::span<const double> weights, std::size_t batch_size,
                                             std::span<const std::uint8_t> eligible, Rng& rng) {
    if (weights.size() != eligible.size()) {
        throw std::invalid_argument("sample_batch: weights and eligibility sizes differ");
    }
    std::vector<double> pool(weights.begin(), weights.end());
    std::size_t candidates = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (!eligible[i] || pool[i] < 0.0 || !std::isfinite(pool[i])) pool[i] = 0.0;
        candidates += pool[i] > 0.0;
    }
    if (candidates < batch_size) {
        throw exhaustion_error("sample_batch: only " + std::to_string(candidates) +
                               " eligible agents with positive weight for a batch of " +
                               std::to_string(batch_size));
    }

    std::vector<std::size_t> batch;
    batch.reserve(batch_size);
    double total = 0.0;
    for (double w : pool) total += w;
    for (std::size_t draw = 0; draw < batch_size; ++draw) {
        const double target = rng.uniform() * total;
        double cum = 0.0;
        std::size_t picked = pool.size();
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (pool[i] <= 0.0) continue;
            cum += pool[i];
            picked = i;
            if (cum > target) break;
        }
        batch.push_back(picked);
        total -= pool[picked];
        pool[picked] = 0.0;
    }
    return batch;
}

// Accumulates a batch's rewards into the task.
inline void update_task_stimulus(TaskBoard& board, std::size_t task,
                                 std::span<const double> batch_rewards) {
    double sum = 0.0;
    for (double r : batch_rewards) {
        if (!(r >= 0.0) || !std::isfinite(r)) {
            throw std::invalid_argument("update_task_stimulus: rewards must be finite and >= 0");
        }
        sum += r;
    }
    board.accumulate(task, sum);
}

// Local state update for a batch member: the clamped difference between the
// batch's mean reward and the agent's own. Applies the delta to the pool and
// returns it (before the [0, 1] truncation of theta).
inline double local_state_delta(AgentPool& pool, std::size_t agent, std::size_t task,
                                std::span<const std::size_t> batch, double rho1,
                                double clamp_local) {
    if (batch.empty()) throw std::invalid_argument("local_state_delta: batch is empty");
    bool member = false;
    double mean = 0.0;
    for (std::size_t m : batch) {
        mean += pool.reward(m);
        member |= m == agent;
    }
    if (!member) throw std::invalid_argument("local_state_delta: agent is not in the batch");
    mean /= static_cast<double>(batch.size());

    const double delta = std::clamp(rho1 * (mean - pool.reward(agent)), -clamp_local, clamp_local);
    pool.apply_theta_delta(agent, task, delta);
    return delta;
}

// Propagated state update: kernel-weighted sum of the previous deltas of all
// agents within d_th of the receiver. Applies the clamped delta and returns it.
inline double propagate_influence(AgentPool& pool, std::size_t agent, std::size_t task,
                                  std::span<const double> prev_deltas, const DistanceMatrix& dm,
                                  const KernelTable& kernel, double rho2, double clamp_prop) {
    if (prev_deltas.size() != pool.size()) {
        throw std::invalid_argument("propagate_influence: delta vector size mismatch");
    }
    if (std::abs(kernel.d_th() - dm.d_th()) > 1e-12) {
        throw config_error("propagate_influence: kernel d_th differs from distance-matrix d_th");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < pool.size(); ++k) {
        if (k == agent || prev_deltas[k] == 0.0) continue;
        const double d = dm.get(k, agent);
        if (d < dm.d_th()) {
            sum += kernel.eval(d) * prev_deltas[k];
        }
    }
    const double delta = std::clamp(rho2 * sum, -clamp_prop, clamp_prop);
    pool.apply_theta_delta(agent, task, delta);
    return delta;
}

// Distance regulation for one directed pair: the sign of the product of the
// two state changes moves the pair closer (positive) or apart (negative).
// An exactly zero product leaves the distance unchanged. With `symmetric`
// the mirrored direction receives the same update.
inline void regulate_distance(DistanceMatrix& dm, std::size_t from, std::size_t to,
                              double delta_to_now, double delta_from_prev, double factor,
                              bool symmetric) {
    const double correlation = delta_to_now * delta_from_prev;
    if (correlation == 0.0) return;
    const double step = correlation > 0.0 ? -factor : factor;
    dm.nudge(from, to, step);
    if (symmetric) dm.nudge(to, from, step);
}

} // namespace stigmergy
