#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cpsim/errors.hpp"
#include "cpsim/objectives.hpp"
#include "cpsim/random.hpp"
#include "cpsim/scenario.hpp"

namespace cpsim {

// Weights of the four objective terms. Blur and energy are costs, so their
// weights are conventionally negative. With standardize on, the perception
// terms are divided by their best single-vehicle value before weighting,
// which makes the default weights scale-free across scenarios. The default
// blur weight keeps range the dominant criterion and blur the tie-breaker,
// which is what reproduces the range dominance of informed selection.
struct ObjectiveWeights {
    double visual_range = 1.0;
    double motion_blur = -0.1;
    double throughput = 1.0;
    double energy = -1.0;
    bool standardize = true;
};

enum class SelectionPolicy { ga, oracle, random, closest, farthest, slowest };

inline const char* to_string(SelectionPolicy p) {
    switch (p) {
        case SelectionPolicy::ga: return "ga";
        case SelectionPolicy::oracle: return "oracle";
        case SelectionPolicy::random: return "random";
        case SelectionPolicy::closest: return "closest";
        case SelectionPolicy::farthest: return "farthest";
        case SelectionPolicy::slowest: return "slowest";
    }
    return "?";
}

inline std::optional<SelectionPolicy> parse_selection_policy(const std::string& name) {
    for (auto p : {SelectionPolicy::ga, SelectionPolicy::oracle, SelectionPolicy::random,
                   SelectionPolicy::closest, SelectionPolicy::farthest, SelectionPolicy::slowest})
        if (name == to_string(p)) return p;
    return std::nullopt;
}

struct GaConfig {
    int population_size = 50;
    int generations = 100;
    double crossover_prob = 0.9;                 // uniform crossover
    std::optional<double> mutation_prob{};       // per-bit flip rate; default 1/N
    int tournament_size = 3;
    int elitism_count = 2;
    std::uint64_t seed = 1;
};

inline void check_ga_config(const GaConfig& g) {
    if (g.population_size < 2) throw config_error("GaConfig: population_size must be >= 2");
    if (g.generations < 1) throw config_error("GaConfig: generations must be >= 1");
    if (g.crossover_prob < 0.0 || g.crossover_prob > 1.0)
        throw config_error("GaConfig: crossover_prob must lie in [0, 1]");
    if (g.mutation_prob && (*g.mutation_prob < 0.0 || *g.mutation_prob > 1.0))
        throw config_error("GaConfig: mutation_prob must lie in [0, 1]");
    if (g.tournament_size < 1) throw config_error("GaConfig: tournament_size must be >= 1");
    if (g.elitism_count < 0 || g.elitism_count >= g.population_size)
        throw config_error("GaConfig: elitism_count must lie in [0, population_size)");
}

// Values entering the weighted sum plus the raw (unstandardized) scores.
struct ObjectiveBreakdown {
    double visual_range = 0.0;
    double motion_blur = 0.0;
    double visual_range_raw = 0.0;
    double motion_blur_raw = 0.0;
};

struct SelectionResult {
    SelectionVector alpha;
    double objective_value = 0.0;
    ObjectiveBreakdown per_term;
    std::int64_t evaluations = 0;
    SelectionPolicy method = SelectionPolicy::oracle;
};

// Best single-vehicle value of each perception term; used as the
// standardization scale. A term whose best singleton is zero (all speeds
// zero, say) keeps scale 1 so the division stays harmless.
struct TermScales {
    double visual_range = 1.0;
    double motion_blur = 1.0;
};

inline TermScales singleton_scales(const Scenario& s) {
    TermScales scales;
    double best_range = 0.0;
    double best_blur = 0.0;
    for (std::size_t i = 0; i < s.candidates.size(); ++i) {
        SelectionVector one(s.candidates.size());
        one.mask[i] = 1;
        best_range = std::max(best_range, visual_range_score(one, s));
        best_blur = std::max(best_blur, motion_blur_score(one, s));
    }
    if (best_range > 0.0) scales.visual_range = best_range;
    if (best_blur > 0.0) scales.motion_blur = best_blur;
    return scales;
}

// Step-1 objective: weighted sum of the two perception terms. The
// communication terms are deliberately absent here; they drive step 2.
class PerceptionObjective {
public:
    PerceptionObjective(const Scenario& s, const ObjectiveWeights& w)
        : scenario_(&s), weights_(w) {
        if (w.standardize) scales_ = singleton_scales(s);
    }

    ObjectiveBreakdown breakdown(const SelectionVector& alpha) const {
        ObjectiveBreakdown b;
        b.visual_range_raw = visual_range_score(alpha, *scenario_);
        b.motion_blur_raw = motion_blur_score(alpha, *scenario_);
        b.visual_range = b.visual_range_raw / scales_.visual_range;
        b.motion_blur = b.motion_blur_raw / scales_.motion_blur;
        return b;
    }

    double value(const ObjectiveBreakdown& b) const {
        return weights_.visual_range * b.visual_range + weights_.motion_blur * b.motion_blur;
    }

    double operator()(const SelectionVector& alpha) const { return value(breakdown(alpha)); }

    const TermScales& scales() const { return scales_; }

private:
    const Scenario* scenario_;
    ObjectiveWeights weights_;
    TermScales scales_;  // {1, 1} when standardization is off
};

namespace detail {

// strictly better, or equal with a lexicographically smaller mask
inline bool improves(double value, const SelectionVector& alpha, double best_value,
                     const SelectionVector& best_alpha) {
    if (value > best_value) return true;
    return value == best_value && lex_less(alpha, best_alpha);
}

inline SelectionResult make_result(const PerceptionObjective& objective,
                                   SelectionVector alpha, std::int64_t evaluations,
                                   SelectionPolicy method) {
    SelectionResult r;
    r.per_term = objective.breakdown(alpha);
    r.objective_value = objective.value(r.per_term);
    r.alpha = std::move(alpha);
    r.evaluations = evaluations;
    r.method = method;
    return r;
}

} // namespace detail

// Exhaustive search over every mask with at most max_helpers ones. Exact but
// exponential, so it refuses large candidate lists.
inline SelectionResult select_oracle(const Scenario& s, const ObjectiveWeights& w) {
    const std::size_t n = s.candidates.size();
    if (n > 25)
        throw config_error("select_oracle: enumeration limited to 25 candidates, got " +
                           std::to_string(n));
    if (s.max_helpers < 0) throw config_error("select_oracle: max_helpers must be >= 0");

    PerceptionObjective objective(s, w);

    SelectionVector best(n);  // empty selection is always feasible
    double best_value = objective(best);
    std::int64_t evaluations = 1;

    const int m = std::min<int>(s.max_helpers, static_cast<int>(n));
    for (int k = 1; k <= m; ++k) {
        // Gosper's hack: all n-bit words with exactly k bits set
        std::uint32_t bits = (1u << k) - 1u;
        const std::uint32_t limit = 1u << n;
        while (bits < limit) {
            SelectionVector alpha(n);
            for (std::size_t i = 0; i < n; ++i)
                alpha.mask[i] = (bits >> i) & 1u;
            double value = objective(alpha);
            ++evaluations;
            if (detail::improves(value, alpha, best_value, best)) {
                best_value = value;
                best = alpha;
            }
            std::uint32_t c = bits & (~bits + 1u);
            std::uint32_t r = bits + c;
            bits = (((r ^ bits) >> 2) / c) | r;
        }
    }
    return detail::make_result(objective, std::move(best), evaluations, SelectionPolicy::oracle);
}

namespace detail {

// Clears uniformly chosen ones until the cardinality bound holds.
inline void repair(SelectionVector& alpha, int max_helpers, Rng& rng) {
    int ones = alpha.popcount();
    while (ones > max_helpers) {
        std::uint64_t drop = rng.uniform_index(static_cast<std::uint64_t>(ones));
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            if (alpha.mask[i] && drop-- == 0) {
                alpha.mask[i] = 0;
                break;
            }
        }
        --ones;
    }
}

} // namespace detail

// Binary GA with tournament selection, uniform crossover, per-bit mutation,
// elitism, and feasibility kept by repair. Fixed seed, fixed result.
inline SelectionResult select_ga(const Scenario& s, const ObjectiveWeights& w,
                                 const GaConfig& cfg = {}) {
    check_ga_config(cfg);
    if (s.max_helpers < 0) throw config_error("select_ga: max_helpers must be >= 0");
    const std::size_t n = s.candidates.size();

    PerceptionObjective objective(s, w);
    Rng rng(cfg.seed);
    const double mutation = cfg.mutation_prob.value_or(1.0 / static_cast<double>(n));

    std::vector<SelectionVector> population(cfg.population_size);
    std::vector<double> fitness(cfg.population_size);
    std::int64_t evaluations = 0;

    SelectionVector best(n);
    double best_value = objective(best);
    ++evaluations;

    auto note = [&](const SelectionVector& alpha, double value) {
        if (detail::improves(value, alpha, best_value, best)) {
            best_value = value;
            best = alpha;
        }
    };

    for (auto& individual : population) {
        individual = SelectionVector(n);
        for (auto& bit : individual.mask) bit = rng.bernoulli(0.5) ? 1 : 0;
        detail::repair(individual, s.max_helpers, rng);
    }
    for (int i = 0; i < cfg.population_size; ++i) {
        fitness[i] = objective(population[i]);
        ++evaluations;
        note(population[i], fitness[i]);
    }

    auto tournament = [&]() -> const SelectionVector& {
        std::size_t winner = rng.uniform_index(population.size());
        for (int t = 1; t < cfg.tournament_size; ++t) {
            std::size_t rival = rng.uniform_index(population.size());
            if (fitness[rival] > fitness[winner]) winner = rival;
        }
        return population[winner];
    };

    std::vector<SelectionVector> next;
    next.reserve(population.size());
    for (int gen = 0; gen < cfg.generations; ++gen) {
        next.clear();

        if (cfg.elitism_count > 0) {
            std::vector<std::size_t> order(population.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (fitness[a] != fitness[b]) return fitness[a] > fitness[b];
                return lex_less(population[a], population[b]);
            });
            for (int e = 0; e < cfg.elitism_count; ++e) next.push_back(population[order[e]]);
        }

        while (static_cast<int>(next.size()) < cfg.population_size) {
            SelectionVector child = tournament();
            if (rng.bernoulli(cfg.crossover_prob)) {
                const SelectionVector& other = tournament();
                for (std::size_t i = 0; i < n; ++i)
                    if (rng.bernoulli(0.5)) child.mask[i] = other.mask[i];
            }
            for (std::size_t i = 0; i < n; ++i)
                if (rng.bernoulli(mutation)) child.mask[i] ^= 1;
            detail::repair(child, s.max_helpers, rng);
            next.push_back(std::move(child));
        }

        population.swap(next);
        for (int i = 0; i < cfg.population_size; ++i) {
            fitness[i] = objective(population[i]);
            ++evaluations;
            note(population[i], fitness[i]);
        }
    }

    return detail::make_result(objective, std::move(best), evaluations, SelectionPolicy::ga);
}

// Reference policies: random subset, the M nearest / farthest candidates, or
// the M slowest ones. All return exactly max_helpers vehicles.
inline SelectionResult select_baseline(const Scenario& s, SelectionPolicy policy,
                                       const ObjectiveWeights& w, std::uint64_t seed = 0) {
    const std::size_t n = s.candidates.size();
    const int m = s.max_helpers;
    if (m < 1 || m > static_cast<int>(n))
        throw config_error("select_baseline: need 1 <= max_helpers <= candidate count");

    PerceptionObjective objective(s, w);
    SelectionVector alpha(n);

    switch (policy) {
        case SelectionPolicy::closest:
            for (int i = 0; i < m; ++i) alpha.mask[i] = 1;
            break;
        case SelectionPolicy::farthest:
            for (int i = 0; i < m; ++i) alpha.mask[n - 1 - i] = 1;
            break;
        case SelectionPolicy::slowest: {
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return s.candidates[a].speed < s.candidates[b].speed;
            });
            for (int i = 0; i < m; ++i) alpha.mask[order[i]] = 1;
            break;
        }
        case SelectionPolicy::random: {
            Rng rng(seed);
            std::vector<std::size_t> pool(n);
            std::iota(pool.begin(), pool.end(), std::size_t{0});
            for (int i = 0; i < m; ++i) {  // partial Fisher-Yates
                std::size_t j = i + rng.uniform_index(n - static_cast<std::size_t>(i));
                std::swap(pool[i], pool[j]);
                alpha.mask[pool[i]] = 1;
            }
            break;
        }
        default:
            throw config_error("select_baseline: policy must be one of random/closest/farthest/slowest");
    }

    return detail::make_result(objective, std::move(alpha), 1, policy);
}

} // namespace cpsim
