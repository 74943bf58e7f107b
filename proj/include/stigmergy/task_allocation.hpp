#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stigmergy/calcium_kernel.hpp"
#include "stigmergy/errors.hpp"
#include "stigmergy/metrics.hpp"
#include "stigmergy/rng.hpp"
#include "stigmergy/stigmergy_core.hpp"

namespace stigmergy {

// Single-task batch-selection experiment. Defaults follow the reference
// parameter set: 30 agents, requirement 1100, batches of 5 at cost 10 each,
// rewards in [1,10], abilities in [50,120], 500 episodes.
struct Experiment1Config {
    std::size_t agent_count = 30;
    double requirement = 1100.0;
    std::size_t batch_size = 5;
    int reward_min = 1;
    int reward_max = 10;
    int ability_min = 50;
    int ability_max = 120;
    double cost_per_action = 10.0;
    std::size_t episodes = 500;

    SelectionParams selection;
    UpdateParams update;
    double eps_s = 0.01;
    double eps_phi = 0.01;

    double d_min = 0.5;
    double d_max = 10.0;
    double d_init = 5.25;
    bool distance_adjust = true;
    KernelChoice kernel = KernelChoice::gaussian;

    void validate() const {
        if (agent_count < 2) throw config_error("experiment1: need at least 2 agents");
        if (batch_size == 0 || batch_size > agent_count) {
            throw config_error("experiment1: batch_size must lie in [1, agent_count]");
        }
        if (requirement < 0.0) throw config_error("experiment1: requirement must be >= 0");
        if (reward_min < 0 || reward_min > reward_max) {
            throw config_error("experiment1: need 0 <= reward_min <= reward_max");
        }
        if (ability_min < 0 || ability_min > ability_max) {
            throw config_error("experiment1: need 0 <= ability_min <= ability_max");
        }
        if (cost_per_action <= 0.0) throw config_error("experiment1: cost_per_action must be > 0");
        if (episodes == 0) throw config_error("experiment1: need at least one episode");
        if (eps_s <= 0.0 || eps_phi <= 0.0) throw config_error("experiment1: floors must be > 0");
        selection.validate();
        update.validate();
    }
};

struct TurnRecord {
    std::vector<std::size_t> selected;
    double reward_sum = 0.0;
    double cost = 0.0;
    double utility = 0.0;
    double emergency = 0.0;
    double cumulative = 0.0;
};

using TurnLog = std::vector<TurnRecord>;

enum class EpisodeStatus { completed, exhausted };

struct EpisodeResult {
    TurnLog log;
    EpisodeStatus status = EpisodeStatus::completed;
};

// One episode against a fresh task: select batches, update the task
// stimulus, apply local and propagated state updates and, when enabled,
// regulate distances, until the accumulated reward meets the requirement.
// Runs that deplete the eligible agents first end with a partial log and
// EpisodeStatus::exhausted.
inline EpisodeResult run_episode(AgentPool& pool, DistanceMatrix& dm, const KernelTable& kernel,
                                 const Experiment1Config& cfg, Rng& rng) {
    TaskBoard board(cfg.eps_s);
    const std::size_t task = board.add_task(cfg.requirement);
    const std::size_t n = pool.size();
    EpisodeResult result;

    std::vector<double> weights(n);
    std::vector<std::uint8_t> eligible(n);
    std::vector<double> deltas(n);
    std::vector<double> propagated(n);
    std::vector<std::uint8_t> in_batch(n);

    while (board.accumulated(task) < cfg.requirement) {
        std::size_t eligible_count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            eligible[i] = pool.eligible(i) ? 1 : 0;
            eligible_count += eligible[i];
        }
        if (eligible_count < cfg.batch_size) {
            result.status = EpisodeStatus::exhausted;
            return result;
        }

        const double s = board.emergency(task);
        for (std::size_t i = 0; i < n; ++i) {
            weights[i] = eligible[i]
                             ? selection_weight(s, pool.theta(i, task), pool.heuristic(i), cfg.selection)
                             : 0.0;
        }
        const auto batch = sample_batch(weights, cfg.batch_size, eligible, rng);

        std::vector<double> batch_rewards;
        batch_rewards.reserve(batch.size());
        for (std::size_t m : batch) {
            pool.consume_ability(m);
            batch_rewards.push_back(pool.reward(m));
        }
        update_task_stimulus(board, task, batch_rewards);

        std::fill(deltas.begin(), deltas.end(), 0.0);
        for (std::size_t m : batch) {
            deltas[m] = local_state_delta(pool, m, task, batch, cfg.update.rho1, cfg.update.clamp_local);
        }
        // Propagation uses the pre-regulation distances of this turn.
        for (std::size_t i = 0; i < n; ++i) {
            propagated[i] = propagate_influence(pool, i, task, deltas, dm, kernel, cfg.update.rho2,
                                                cfg.update.clamp_prop);
        }

        if (cfg.distance_adjust) {
            std::fill(in_batch.begin(), in_batch.end(), 0);
            for (std::size_t m : batch) in_batch[m] = 1;
            // Within-batch pairs correlate the members' local deltas.
            for (std::size_t a = 0; a < batch.size(); ++a) {
                for (std::size_t b = a + 1; b < batch.size(); ++b) {
                    regulate_distance(dm, batch[a], batch[b], deltas[batch[b]], deltas[batch[a]],
                                      cfg.update.factor, /*symmetric=*/true);
                }
            }
            // Batch members against the agents their influence reached.
            for (std::size_t k : batch) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (in_batch[i] || i == k) continue;
                    if (dm.get(k, i) < dm.d_th()) {
                        regulate_distance(dm, k, i, propagated[i], deltas[k], cfg.update.factor,
                                          /*symmetric=*/true);
                    }
                }
            }
        }

        TurnRecord turn;
        turn.selected = batch;
        for (double r : batch_rewards) turn.reward_sum += r;
        turn.cost = static_cast<double>(cfg.batch_size) * cfg.cost_per_action;
        turn.utility = batch_utility(turn.reward_sum, turn.cost);
        turn.emergency = board.emergency(task);
        turn.cumulative = board.accumulated(task);
        result.log.push_back(std::move(turn));
    }
    result.status = EpisodeStatus::completed;
    return result;
}

struct EpisodeSummary {
    std::size_t turns = 0;
    bool completed = false;
    double reward_total = 0.0;
    double mean_utility = 0.0;
};

struct AgentProfile {
    std::size_t id = 0;
    double theta = 0.0;
    double reward = 0.0;
    int ability = 0;
    double avg_distance = 0.0;
};

struct LearningResult {
    std::vector<EpisodeSummary> episodes;
    std::size_t episodes_completed = 0;
    TurnLog last_completed_log;  // turn log of the last completed learning episode
    long last_completed_episode = -1;
    TurnLog evaluation_log;      // post-learning episode on a restored ability budget
    bool evaluation_completed = false;
    std::vector<AgentProfile> profile;
    std::string status;          // "completed" or "exhausted"
};

// Repeated episodes sharing state values and distances. Rewards and
// abilities are drawn once at initialization; abilities are never reset
// during learning, so depletion emerges late in the run and the loop stops
// once a full batch can no longer be formed. A final evaluation episode
// then runs from the learned state on a restored ability budget, measuring
// the learned organization without the depletion confound.
inline LearningResult run_learning(const Experiment1Config& cfg, const KernelTable& kernel,
                                   std::uint64_t seed) {
    cfg.validate();

    Rng reward_rng = Rng::stream(seed, "exp1.rewards");
    Rng ability_rng = Rng::stream(seed, "exp1.abilities");
    Rng sampling_rng = Rng::stream(seed, "exp1.sampling");

    std::vector<double> rewards(cfg.agent_count);
    std::vector<int> abilities(cfg.agent_count);
    for (std::size_t i = 0; i < cfg.agent_count; ++i) {
        rewards[i] = static_cast<double>(reward_rng.uniform_int(cfg.reward_min, cfg.reward_max));
    }
    for (std::size_t i = 0; i < cfg.agent_count; ++i) {
        abilities[i] = ability_rng.uniform_int(cfg.ability_min, cfg.ability_max);
    }

    AgentPool pool(std::move(rewards), std::move(abilities), 1, 0.5, cfg.eps_phi);
    DistanceMatrix dm(cfg.agent_count, cfg.d_min, cfg.d_max, kernel.d_th(), cfg.d_init);

    LearningResult result;
    result.status = "completed";
    for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
        std::size_t eligible_count = 0;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            eligible_count += pool.eligible(i);
        }
        // Abilities never reset, so once a full batch can no longer be
        // formed every remaining episode would fail on its first turn.
        if (eligible_count < cfg.batch_size) {
            result.status = "exhausted";
            break;
        }

        EpisodeResult episode = run_episode(pool, dm, kernel, cfg, sampling_rng);
        EpisodeSummary summary;
        summary.turns = episode.log.size();
        summary.completed = episode.status == EpisodeStatus::completed;
        if (!episode.log.empty()) {
            summary.reward_total = episode.log.back().cumulative;
            double utility_sum = 0.0;
            for (const auto& turn : episode.log) utility_sum += turn.utility;
            summary.mean_utility = utility_sum / static_cast<double>(episode.log.size());
        }
        if (summary.completed) {
            ++result.episodes_completed;
            result.last_completed_log = episode.log;
            result.last_completed_episode = static_cast<long>(ep);
        }
        result.episodes.push_back(summary);
    }

    // learned state, captured before the evaluation episode touches it
    result.profile.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        AgentProfile p;
        p.id = i;
        p.theta = pool.theta(i, 0);
        p.reward = pool.reward(i);
        p.ability = pool.ability(i);
        p.avg_distance = dm.avg_outgoing(i);
        result.profile.push_back(p);
    }

    pool.restore_abilities();
    EpisodeResult evaluation = run_episode(pool, dm, kernel, cfg, sampling_rng);
    result.evaluation_log = std::move(evaluation.log);
    result.evaluation_completed = evaluation.status == EpisodeStatus::completed;
    return result;
}

} // namespace stigmergy
