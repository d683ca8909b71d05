#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cpsim/comms.hpp"
#include "cpsim/errors.hpp"
#include "cpsim/objectives.hpp"
#include "cpsim/random.hpp"
#include "cpsim/scenario.hpp"
#include "cpsim/selector.hpp"

namespace cpsim {

enum class AllocationPolicy { optimal, proportional, uniform, random };

inline const char* to_string(AllocationPolicy p) {
    switch (p) {
        case AllocationPolicy::optimal: return "optimal";
        case AllocationPolicy::proportional: return "proportional";
        case AllocationPolicy::uniform: return "uniform";
        case AllocationPolicy::random: return "random";
    }
    return "?";
}

inline std::optional<AllocationPolicy> parse_allocation_policy(const std::string& name) {
    for (auto p : {AllocationPolicy::optimal, AllocationPolicy::proportional,
                   AllocationPolicy::uniform, AllocationPolicy::random})
        if (name == to_string(p)) return p;
    return std::nullopt;
}

// How the shared power budget is split across the funded vehicles. The energy
// term does not couple power to throughput, so its literal optimum under the
// budget equality degenerates to concentrating all power on the best channel;
// that variant stays available behind best_channel, while equal_split is the
// default every policy uses.
enum class PowerPolicy { equal_split, best_channel };

// Per-candidate resource assignment. Unselected and delay-infeasible vehicles
// hold zero blocks and zero power in every policy; when the plan is feasible
// the block counts sum exactly to the pool and the powers to the budget.
struct AllocationPlan {
    std::vector<int> rb_counts;
    std::vector<double> powers;
    double achieved_throughput = 0.0;  // bit/s
    double achieved_energy = 0.0;      // W
    bool feasible = false;
};

namespace detail {

// Selected candidates that pass the mean-delay admission check.
inline std::vector<std::size_t> funded_indices(const Scenario& s, const SelectionVector& alpha) {
    check_selection(alpha, s);
    std::vector<std::size_t> funded;
    for (std::size_t i = 0; i < s.candidates.size(); ++i)
        if (alpha.selected(i) && meets_delay_constraint(s.candidates[i], s.comms))
            funded.push_back(i);
    return funded;
}

inline std::vector<double> split_power(const Scenario& s, const std::vector<std::size_t>& funded,
                                       PowerPolicy power) {
    std::vector<double> powers(s.candidates.size(), 0.0);
    if (funded.empty()) return powers;
    if (power == PowerPolicy::equal_split) {
        double share = s.comms.total_power / static_cast<double>(funded.size());
        for (std::size_t i : funded) powers[i] = share;
    } else {
        std::size_t best = funded.front();
        for (std::size_t i : funded)
            if (s.candidates[i].packet_error_prob < s.candidates[best].packet_error_prob)
                best = i;
        powers[best] = s.comms.total_power;
    }
    return powers;
}

inline AllocationPlan finish_plan(const Scenario& s, const SelectionVector& alpha,
                                  std::vector<int> rb_counts, std::vector<double> powers) {
    AllocationPlan plan;
    plan.rb_counts = std::move(rb_counts);
    plan.powers = std::move(powers);
    plan.achieved_throughput = total_throughput(alpha, plan.rb_counts, s.comms, s.candidates);
    plan.achieved_energy = energy_cost(alpha, plan.powers, s.comms, s.candidates);
    plan.feasible = true;
    return plan;
}

inline AllocationPlan infeasible_plan(std::size_t n) {
    AllocationPlan plan;
    plan.rb_counts.assign(n, 0);
    plan.powers.assign(n, 0.0);
    return plan;
}

} // namespace detail

// Exact optimum of the step-2 objective over integer block vectors that
// exhaust the pool. Throughput is linear in the block counts with per-block
// gain proportional to (1 - beta), and the energy term does not depend on
// them, so the argmax hands the whole pool to the funded vehicle with the
// best weighted gain; ties go to the lowest index.
inline AllocationPlan allocate(const Scenario& s, const SelectionVector& alpha,
                               const ObjectiveWeights& w,
                               PowerPolicy power = PowerPolicy::equal_split) {
    auto funded = detail::funded_indices(s, alpha);
    if (funded.empty()) return detail::infeasible_plan(s.candidates.size());

    std::size_t winner = funded.front();
    double winner_gain = w.throughput * (1.0 - s.candidates[winner].packet_error_prob);
    for (std::size_t i : funded) {
        double gain = w.throughput * (1.0 - s.candidates[i].packet_error_prob);
        if (gain > winner_gain) {
            winner_gain = gain;
            winner = i;
        }
    }

    std::vector<int> rb_counts(s.candidates.size(), 0);
    rb_counts[winner] = s.comms.total_rb_count;
    return detail::finish_plan(s, alpha, std::move(rb_counts),
                               detail::split_power(s, funded, power));
}

// Default plan of the experiment driver: every funded helper keeps streaming,
// with blocks split in proportion to delivery probability (1 - beta) and
// rounded by largest remainder. Remainder ties go to the lowest index.
inline AllocationPlan allocate_proportional(const Scenario& s, const SelectionVector& alpha,
                                            PowerPolicy power = PowerPolicy::equal_split) {
    auto funded = detail::funded_indices(s, alpha);
    if (funded.empty()) return detail::infeasible_plan(s.candidates.size());

    const int pool = s.comms.total_rb_count;
    double total_weight = 0.0;
    for (std::size_t i : funded) total_weight += 1.0 - s.candidates[i].packet_error_prob;

    std::vector<int> rb_counts(s.candidates.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;  // (-fraction, index): sortable
    int assigned = 0;
    for (std::size_t i : funded) {
        double share = pool * (1.0 - s.candidates[i].packet_error_prob) / total_weight;
        int whole = static_cast<int>(share);
        rb_counts[i] = whole;
        assigned += whole;
        remainders.emplace_back(-(share - whole), i);
    }
    std::sort(remainders.begin(), remainders.end());
    for (int leftover = pool - assigned, r = 0; leftover > 0; --leftover, ++r)
        rb_counts[remainders[static_cast<std::size_t>(r)].second] += 1;

    return detail::finish_plan(s, alpha, std::move(rb_counts),
                               detail::split_power(s, funded, power));
}

// uniform: as even an integer split as possible, remainder to the lowest
// indices; random: a uniformly drawn integer composition of the pool.
inline AllocationPlan allocate_baseline(const Scenario& s, const SelectionVector& alpha,
                                        AllocationPolicy policy, std::uint64_t seed = 0,
                                        PowerPolicy power = PowerPolicy::equal_split) {
    auto funded = detail::funded_indices(s, alpha);
    if (funded.empty()) return detail::infeasible_plan(s.candidates.size());

    const int pool = s.comms.total_rb_count;
    const std::size_t k = funded.size();
    std::vector<int> rb_counts(s.candidates.size(), 0);

    switch (policy) {
        case AllocationPolicy::uniform: {
            int base = pool / static_cast<int>(k);
            int remainder = pool % static_cast<int>(k);
            for (std::size_t r = 0; r < k; ++r)
                rb_counts[funded[r]] = base + (static_cast<int>(r) < remainder ? 1 : 0);
            break;
        }
        case AllocationPolicy::random: {
            // composition of pool into k parts <-> k-1 distinct cuts in [1, pool+k-1]
            Rng rng(seed);
            std::vector<int> cuts(static_cast<std::size_t>(pool) + k - 1);
            std::iota(cuts.begin(), cuts.end(), 1);
            for (std::size_t i = 0; i + 1 < k; ++i) {
                std::size_t j = i + rng.uniform_index(cuts.size() - i);
                std::swap(cuts[i], cuts[j]);
            }
            std::vector<int> chosen(cuts.begin(), cuts.begin() + static_cast<long>(k) - 1);
            std::sort(chosen.begin(), chosen.end());
            int prev = 0;
            for (std::size_t r = 0; r < k; ++r) {
                int next = (r + 1 < k) ? chosen[r] : pool + static_cast<int>(k);
                rb_counts[funded[r]] = next - prev - 1;
                prev = next;
            }
            break;
        }
        default:
            throw config_error("allocate_baseline: policy must be uniform or random");
    }

    return detail::finish_plan(s, alpha, std::move(rb_counts),
                               detail::split_power(s, funded, power));
}

// GA over integer compositions of the pool, kept for parity checks against
// the closed-form optimum. Mutation moves one block between funded vehicles.
inline AllocationPlan allocate_ga(const Scenario& s, const SelectionVector& alpha,
                                  const ObjectiveWeights& w, const GaConfig& cfg = {},
                                  PowerPolicy power = PowerPolicy::equal_split) {
    check_ga_config(cfg);
    auto funded = detail::funded_indices(s, alpha);
    if (funded.empty()) return detail::infeasible_plan(s.candidates.size());

    const int pool = s.comms.total_rb_count;
    const std::size_t k = funded.size();
    auto powers = detail::split_power(s, funded, power);
    const double energy_term =
        w.energy * energy_cost(alpha, powers, s.comms, s.candidates);

    auto fitness = [&](const std::vector<int>& counts) {
        double throughput = 0.0;
        for (std::size_t r = 0; r < k; ++r)
            throughput += effective_throughput(s.candidates[funded[r]], counts[r], s.comms);
        return w.throughput * throughput + energy_term;
    };

    Rng rng(cfg.seed);
    auto random_composition = [&]() {
        std::vector<int> counts(k, 0);
        for (int b = 0; b < pool; ++b) counts[rng.uniform_index(k)] += 1;
        return counts;
    };

    std::vector<std::vector<int>> population(cfg.population_size);
    std::vector<double> scores(cfg.population_size);
    for (auto& individual : population) individual = random_composition();
    for (std::size_t i = 0; i < population.size(); ++i) scores[i] = fitness(population[i]);

    std::vector<int> best = population[0];
    double best_score = scores[0];
    auto note = [&](const std::vector<int>& counts, double score) {
        if (score > best_score) {
            best_score = score;
            best = counts;
        }
    };
    for (std::size_t i = 0; i < population.size(); ++i) note(population[i], scores[i]);

    auto tournament = [&]() -> std::size_t {
        std::size_t winner = rng.uniform_index(population.size());
        for (int t = 1; t < cfg.tournament_size; ++t) {
            std::size_t rival = rng.uniform_index(population.size());
            if (scores[rival] > scores[winner]) winner = rival;
        }
        return winner;
    };

    std::vector<std::vector<int>> next;
    for (int gen = 0; gen < cfg.generations; ++gen) {
        next.clear();
        std::vector<std::size_t> order(population.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        for (int e = 0; e < cfg.elitism_count; ++e) next.push_back(population[order[e]]);

        while (static_cast<int>(next.size()) < cfg.population_size) {
            std::vector<int> child = population[tournament()];
            if (k > 1 && rng.bernoulli(cfg.crossover_prob)) {
                // blend with a second parent, then repair the pool sum
                const std::vector<int>& other = population[tournament()];
                for (std::size_t r = 0; r < k; ++r)
                    if (rng.bernoulli(0.5)) child[r] = other[r];
                int sum = std::accumulate(child.begin(), child.end(), 0);
                while (sum > pool) {
                    std::size_t r = rng.uniform_index(k);
                    if (child[r] > 0) {
                        child[r] -= 1;
                        --sum;
                    }
                }
                while (sum < pool) {
                    child[rng.uniform_index(k)] += 1;
                    ++sum;
                }
            }
            if (k > 1 && rng.bernoulli(0.8)) {  // move one block
                std::size_t from = rng.uniform_index(k);
                if (child[from] > 0) {
                    child[from] -= 1;
                    child[rng.uniform_index(k)] += 1;
                }
            }
            next.push_back(std::move(child));
        }
        population.swap(next);
        for (std::size_t i = 0; i < population.size(); ++i) {
            scores[i] = fitness(population[i]);
            note(population[i], scores[i]);
        }
    }

    std::vector<int> rb_counts(s.candidates.size(), 0);
    for (std::size_t r = 0; r < k; ++r) rb_counts[funded[r]] = best[r];
    return detail::finish_plan(s, alpha, std::move(rb_counts), std::move(powers));
}

// One sweep point per (policy, shift): every candidate's error probability is
// moved by the shift and the plan re-evaluated. The random composition is
// drawn once per sweep so its curve responds to the channel alone.
struct SweepRow {
    AllocationPolicy policy = AllocationPolicy::optimal;
    double beta_param = 0.0;     // additive shift applied to every beta
    double throughput_bps = 0.0;
    double energy_w = 0.0;
};

inline std::vector<SweepRow> sweep_error(
    const Scenario& s, const SelectionVector& alpha, const std::vector<double>& beta_grid,
    std::uint64_t seed = 0,
    const std::vector<AllocationPolicy>& policies = {AllocationPolicy::optimal,
                                                     AllocationPolicy::uniform,
                                                     AllocationPolicy::random},
    PowerPolicy power = PowerPolicy::equal_split) {
    check_selection(alpha, s);
    for (double shift : beta_grid)
        for (const Vehicle& v : s.candidates) {
            double moved = v.packet_error_prob + shift;
            if (moved >= 1.0 || moved < 0.0)
                throw std::domain_error(
                    "sweep_error: shifted packet_error_prob leaves [0, 1) at shift " +
                    std::to_string(shift));
        }

    ObjectiveWeights weights;  // step-2 terms only; defaults are fine here
    std::vector<SweepRow> rows;
    rows.reserve(policies.size() * beta_grid.size());
    for (AllocationPolicy policy : policies) {
        for (double shift : beta_grid) {
            Scenario moved = s;
            for (Vehicle& v : moved.candidates) v.packet_error_prob += shift;
            AllocationPlan plan;
            switch (policy) {
                case AllocationPolicy::optimal:
                    plan = allocate(moved, alpha, weights, power);
                    break;
                case AllocationPolicy::proportional:
                    plan = allocate_proportional(moved, alpha, power);
                    break;
                default:
                    // same seed at every grid point: the composition is fixed
                    plan = allocate_baseline(moved, alpha, policy, seed, power);
                    break;
            }
            rows.push_back({policy, shift, plan.achieved_throughput, plan.achieved_energy});
        }
    }
    return rows;
}

} // namespace cpsim
