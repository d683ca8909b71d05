#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cpsim/allocator.hpp"
#include "cpsim/comms.hpp"
#include "cpsim/errors.hpp"
#include "cpsim/fusion.hpp"
#include "cpsim/io.hpp"
#include "cpsim/objectives.hpp"
#include "cpsim/scenario.hpp"
#include "cpsim/selector.hpp"

namespace cpsim {

struct FusionConfig {
    SyntheticDetectionConfig synthetic;
    double iou_threshold = 0.5;
    std::string fixtures_path;  // when set, detection views are loaded, not synthesized
};

// One batch run: seeded scenarios, the policies to compare, and the knobs of
// each stage. The whole batch is a pure function of this struct, so repeated
// runs (at any worker count) emit identical bytes.
struct ExperimentConfig {
    int n_candidates = 10;
    ScenarioConfig scenario;
    ObjectiveWeights weights;
    GaConfig ga;
    std::vector<SelectionPolicy> policies = {
        SelectionPolicy::oracle, SelectionPolicy::ga,       SelectionPolicy::random,
        SelectionPolicy::closest, SelectionPolicy::farthest, SelectionPolicy::slowest};
    int repetitions = 100;
    std::uint64_t base_seed = 1;
    int random_draws = 100;          // draws behind one random-policy data point
    std::vector<double> beta_grid;   // empty: derived from the batch headroom
    int beta_grid_points = 10;
    FusionConfig fusion;
    int workers = 1;
    std::string out_dir = "bench_out";  // default destination of the full batch
};

inline void check_experiment_config(const ExperimentConfig& cfg) {
    if (cfg.repetitions < 1) throw config_error("ExperimentConfig: repetitions must be >= 1");
    if (cfg.policies.empty()) throw config_error("ExperimentConfig: at least one policy");
    if (cfg.random_draws < 1) throw config_error("ExperimentConfig: random_draws must be >= 1");
    if (cfg.beta_grid_points < 1)
        throw config_error("ExperimentConfig: beta_grid_points must be >= 1");
    if (cfg.workers < 1) throw config_error("ExperimentConfig: workers must be >= 1");
}

namespace detail {

// rng stream tags, one per purpose, so no two stages share a stream
inline constexpr std::uint64_t kStreamGa = 11;
inline constexpr std::uint64_t kStreamRandomSelect = 12;
inline constexpr std::uint64_t kStreamAllocation = 13;
inline constexpr std::uint64_t kStreamFixtures = 14;
inline constexpr std::uint64_t kStreamDegrade = 15;

inline std::uint64_t scenario_seed(const ExperimentConfig& cfg, int rep) {
    return mix64(cfg.base_seed, static_cast<std::uint64_t>(rep));
}

// Runs fn(0..n-1) on a small pool; each index writes only its own slot, so
// results are identical for any worker count.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (n == 0) return;
    int use = std::min<int>(workers, static_cast<int>(n));
    if (use <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(use));
    for (int t = 0; t < use; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline std::vector<Scenario> generate_batch(const ExperimentConfig& cfg) {
    std::vector<Scenario> out;
    out.reserve(static_cast<std::size_t>(cfg.repetitions));
    for (int rep = 0; rep < cfg.repetitions; ++rep)
        out.push_back(generate_scenario(scenario_seed(cfg, rep), cfg.n_candidates, cfg.scenario));
    return out;
}

struct RunningStat {
    double sum = 0.0;
    double sum_sq = 0.0;
    int n = 0;
    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++n;
    }
    double mean() const { return n > 0 ? sum / n : 0.0; }
    double stddev() const {  // sample standard deviation
        if (n < 2) return 0.0;
        double var = (sum_sq - sum * sum / n) / (n - 1);
        return var > 0.0 ? std::sqrt(var) : 0.0;
    }
};

} // namespace detail

// One-sided sign test: probability of at least `wins` successes out of
// wins+losses fair coin flips. Small p-values reject "no dominance".
inline double sign_test_p_value(int wins, int losses) {
    if (wins < 0 || losses < 0) throw std::invalid_argument("sign_test_p_value: negative counts");
    const int n = wins + losses;
    if (n == 0) return 1.0;
    double p = 0.0;
    for (int k = wins; k <= n; ++k) {
        double log_term = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                          std::lgamma(n - k + 1.0) - n * std::log(2.0);
        p += std::exp(log_term);
    }
    return std::min(p, 1.0);
}

// ---------------------------------------------------------------------------
// Selection experiment: per scenario, every policy's perception scores; the
// random policy reports the average over cfg.random_draws seeded draws.
// ---------------------------------------------------------------------------

struct PerceptionSample {
    double visual_range = 0.0;  // raw score
    double motion_blur = 0.0;   // raw score
    double objective = 0.0;     // weighted (standardized) value
};

struct SelectionAggregate {
    SelectionPolicy policy = SelectionPolicy::oracle;
    int scenarios = 0;
    double mean_visual_range = 0.0;
    double stddev_visual_range = 0.0;
    double mean_motion_blur = 0.0;
    double stddev_motion_blur = 0.0;
    double mean_objective = 0.0;
    double stddev_objective = 0.0;
};

struct SelectionExperimentResult {
    std::vector<SelectionPolicy> policies;
    std::vector<std::vector<PerceptionSample>> per_rep;  // [rep][policy]
    std::vector<SelectionAggregate> table;
};

inline SelectionExperimentResult run_selection_experiment(const ExperimentConfig& cfg) {
    check_experiment_config(cfg);
    auto scenarios = detail::generate_batch(cfg);

    SelectionExperimentResult result;
    result.policies = cfg.policies;
    result.per_rep.assign(scenarios.size(), {});

    detail::parallel_for(scenarios.size(), cfg.workers, [&](std::size_t rep) {
        const Scenario& s = scenarios[rep];
        const std::uint64_t seed = detail::scenario_seed(cfg, static_cast<int>(rep));
        std::vector<PerceptionSample> samples;
        samples.reserve(cfg.policies.size());
        for (SelectionPolicy policy : cfg.policies) {
            PerceptionSample sample;
            switch (policy) {
                case SelectionPolicy::oracle: {
                    SelectionResult r = select_oracle(s, cfg.weights);
                    sample = {r.per_term.visual_range_raw, r.per_term.motion_blur_raw,
                              r.objective_value};
                    break;
                }
                case SelectionPolicy::ga: {
                    GaConfig ga = cfg.ga;
                    ga.seed = mix64(seed, detail::kStreamGa);
                    SelectionResult r = select_ga(s, cfg.weights, ga);
                    sample = {r.per_term.visual_range_raw, r.per_term.motion_blur_raw,
                              r.objective_value};
                    break;
                }
                case SelectionPolicy::random: {
                    for (int d = 0; d < cfg.random_draws; ++d) {
                        SelectionResult r =
                            select_baseline(s, SelectionPolicy::random, cfg.weights,
                                            mix64(seed, detail::kStreamRandomSelect,
                                                  static_cast<std::uint64_t>(d)));
                        sample.visual_range += r.per_term.visual_range_raw;
                        sample.motion_blur += r.per_term.motion_blur_raw;
                        sample.objective += r.objective_value;
                    }
                    sample.visual_range /= cfg.random_draws;
                    sample.motion_blur /= cfg.random_draws;
                    sample.objective /= cfg.random_draws;
                    break;
                }
                default: {
                    SelectionResult r = select_baseline(s, policy, cfg.weights);
                    sample = {r.per_term.visual_range_raw, r.per_term.motion_blur_raw,
                              r.objective_value};
                    break;
                }
            }
            samples.push_back(sample);
        }
        result.per_rep[rep] = std::move(samples);
    });

    for (std::size_t pi = 0; pi < cfg.policies.size(); ++pi) {
        detail::RunningStat range_stat, blur_stat, objective_stat;
        for (const auto& samples : result.per_rep) {
            range_stat.add(samples[pi].visual_range);
            blur_stat.add(samples[pi].motion_blur);
            objective_stat.add(samples[pi].objective);
        }
        SelectionAggregate row;
        row.policy = cfg.policies[pi];
        row.scenarios = range_stat.n;
        row.mean_visual_range = range_stat.mean();
        row.stddev_visual_range = range_stat.stddev();
        row.mean_motion_blur = blur_stat.mean();
        row.stddev_motion_blur = blur_stat.stddev();
        row.mean_objective = objective_stat.mean();
        row.stddev_objective = objective_stat.stddev();
        result.table.push_back(row);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Allocation experiment: step-1 selection per scenario, then an error sweep
// whose curves are averaged per policy across the batch.
// ---------------------------------------------------------------------------

struct AllocationExperimentResult {
    std::vector<double> grid;                       // shifts shared by the batch
    std::vector<AllocationPolicy> policies;
    std::vector<std::vector<SweepRow>> per_rep;     // [rep], policy-major rows
    std::vector<SweepRow> mean_rows;                // averaged curves
};

// Shared shift grid sized to the batch: stays strictly inside beta < 1 on
// every scenario, starts at zero.
inline std::vector<double> derive_beta_grid(const std::vector<Scenario>& scenarios, int points,
                                            double beta_clamp) {
    double max_beta = 0.0;
    for (const Scenario& s : scenarios)
        for (const Vehicle& v : s.candidates) max_beta = std::max(max_beta, v.packet_error_prob);
    double headroom = (1.0 - beta_clamp) - max_beta;
    if (headroom < 0.0) headroom = 0.0;
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(points));
    for (int j = 0; j < points; ++j)
        grid.push_back(points > 1 ? 0.9 * headroom * j / (points - 1) : 0.0);
    return grid;
}

inline AllocationExperimentResult run_allocation_experiment(const ExperimentConfig& cfg,
                                                            std::vector<double> beta_grid = {}) {
    check_experiment_config(cfg);
    auto scenarios = detail::generate_batch(cfg);

    AllocationExperimentResult result;
    result.grid = !beta_grid.empty() ? std::move(beta_grid)
                  : !cfg.beta_grid.empty()
                      ? cfg.beta_grid
                      : derive_beta_grid(scenarios, cfg.beta_grid_points, cfg.scenario.beta_clamp);
    result.policies = {AllocationPolicy::optimal, AllocationPolicy::uniform,
                       AllocationPolicy::random};
    result.per_rep.assign(scenarios.size(), {});

    detail::parallel_for(scenarios.size(), cfg.workers, [&](std::size_t rep) {
        const Scenario& s = scenarios[rep];
        const std::uint64_t seed = detail::scenario_seed(cfg, static_cast<int>(rep));
        SelectionResult selected = select_oracle(s, cfg.weights);
        result.per_rep[rep] = sweep_error(s, selected.alpha, result.grid,
                                          mix64(seed, detail::kStreamAllocation),
                                          result.policies);
    });

    if (result.per_rep.empty()) return result;
    const std::size_t rows = result.per_rep.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        detail::RunningStat throughput_stat, energy_stat;
        for (const auto& rep_rows : result.per_rep) {
            throughput_stat.add(rep_rows[r].throughput_bps);
            energy_stat.add(rep_rows[r].energy_w);
        }
        SweepRow row = result.per_rep.front()[r];
        row.throughput_bps = throughput_stat.mean();
        row.energy_w = energy_stat.mean();
        result.mean_rows.push_back(row);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Fusion experiment: selection -> per-helper channel degradation -> IoU-max
// fusion -> detection metrics, per policy, plus an ego-only reference row.
// Degradation draws are shared across policies, so two policies picking the
// same helper see the same surviving boxes.
// ---------------------------------------------------------------------------

struct FusionSample {
    double mean_iou = 0.0;
    double recall = 0.0;
    double f1_score = 0.0;
};

struct FusionAggregate {
    std::string policy;  // "ego" or a selection policy name
    int scenarios = 0;
    double mean_iou = 0.0;
    double stddev_iou = 0.0;
    double mean_recall = 0.0;
    double mean_f1_score = 0.0;
};

struct FusionExperimentResult {
    std::vector<std::string> rows;                     // "ego" + policy names
    std::vector<std::vector<FusionSample>> per_rep;    // [rep][row]
    std::vector<FusionAggregate> table;
};

inline FusionExperimentResult run_fusion_experiment(const ExperimentConfig& cfg) {
    check_experiment_config(cfg);
    auto scenarios = detail::generate_batch(cfg);

    std::vector<DetectionSet> fixture_views;
    if (!cfg.fusion.fixtures_path.empty()) {
        fixture_views = load_detection_sets(cfg.fusion.fixtures_path);
        if (fixture_views.size() != static_cast<std::size_t>(cfg.n_candidates) + 1)
            throw config_error("fusion fixtures must hold one view per vehicle (ego + " +
                               std::to_string(cfg.n_candidates) + " candidates), got " +
                               std::to_string(fixture_views.size()));
    }

    FusionExperimentResult result;
    result.rows.push_back("ego");
    for (SelectionPolicy p : cfg.policies) result.rows.emplace_back(to_string(p));
    result.per_rep.assign(scenarios.size(), {});

    detail::parallel_for(scenarios.size(), cfg.workers, [&](std::size_t rep) {
        const Scenario& s = scenarios[rep];
        const std::uint64_t seed = detail::scenario_seed(cfg, static_cast<int>(rep));

        std::vector<DetectionSet> views =
            fixture_views.empty()
                ? make_synthetic_detections(s, cfg.fusion.synthetic,
                                            mix64(seed, detail::kStreamFixtures))
                : fixture_views;

        // views[0] is the ego (local, lossless); helpers lose boxes per channel
        std::vector<DetectionSet> degraded;
        degraded.reserve(s.candidates.size());
        for (std::size_t i = 0; i < s.candidates.size(); ++i) {
            Rng rng(mix64(seed, detail::kStreamDegrade, static_cast<std::uint64_t>(i)), 0);
            degraded.push_back(degrade(views[i + 1], s.candidates[i].packet_error_prob, rng));
        }

        auto sample_for = [&](const SelectionVector& alpha) {
            std::vector<DetectionSet> helpers;
            for (std::size_t i = 0; i < alpha.size(); ++i)
                if (alpha.selected(i)) helpers.push_back(degraded[i]);
            DetectionMetrics m = metrics(fuse_many(views[0], helpers), cfg.fusion.iou_threshold);
            return FusionSample{m.mean_iou, m.recall, m.f1_score};
        };

        std::vector<FusionSample> samples;
        samples.reserve(result.rows.size());
        samples.push_back(sample_for(SelectionVector(s.candidates.size())));  // ego alone
        for (SelectionPolicy policy : cfg.policies) {
            SelectionVector alpha;
            switch (policy) {
                case SelectionPolicy::oracle:
                    alpha = select_oracle(s, cfg.weights).alpha;
                    break;
                case SelectionPolicy::ga: {
                    GaConfig ga = cfg.ga;
                    ga.seed = mix64(seed, detail::kStreamGa);
                    alpha = select_ga(s, cfg.weights, ga).alpha;
                    break;
                }
                case SelectionPolicy::random:
                    alpha = select_baseline(s, SelectionPolicy::random, cfg.weights,
                                            mix64(seed, detail::kStreamRandomSelect))
                                .alpha;
                    break;
                default:
                    alpha = select_baseline(s, policy, cfg.weights).alpha;
                    break;
            }
            samples.push_back(sample_for(alpha));
        }
        result.per_rep[rep] = std::move(samples);
    });

    for (std::size_t ri = 0; ri < result.rows.size(); ++ri) {
        detail::RunningStat iou_stat, recall_stat, f1_stat;
        for (const auto& samples : result.per_rep) {
            iou_stat.add(samples[ri].mean_iou);
            recall_stat.add(samples[ri].recall);
            f1_stat.add(samples[ri].f1_score);
        }
        FusionAggregate row;
        row.policy = result.rows[ri];
        row.scenarios = iou_stat.n;
        row.mean_iou = iou_stat.mean();
        row.stddev_iou = iou_stat.stddev();
        row.mean_recall = recall_stat.mean();
        row.mean_f1_score = f1_stat.mean();
        result.table.push_back(row);
    }
    return result;
}

// ---------------------------------------------------------------------------
// CSV emission and the matching parsers. Numbers use shortest round-trip
// formatting, so emitted rows parse back to the exact values.
// ---------------------------------------------------------------------------

inline std::string to_csv(const std::vector<SelectionAggregate>& table) {
    std::ostringstream os;
    os << "policy,scenarios,mean_visual_range,stddev_visual_range,mean_motion_blur,"
          "stddev_motion_blur,mean_objective,stddev_objective\n";
    for (const SelectionAggregate& r : table)
        os << to_string(r.policy) << ',' << r.scenarios << ',' << format_double(r.mean_visual_range)
           << ',' << format_double(r.stddev_visual_range) << ','
           << format_double(r.mean_motion_blur) << ',' << format_double(r.stddev_motion_blur)
           << ',' << format_double(r.mean_objective) << ',' << format_double(r.stddev_objective)
           << '\n';
    return os.str();
}

inline std::vector<SelectionAggregate> parse_selection_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw io_error("selection csv: missing header");
    std::vector<SelectionAggregate> out;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        auto f = split(trim(line), ',');
        if (f.size() != 8) throw io_error("selection csv: expected 8 fields");
        SelectionAggregate r;
        auto policy = parse_selection_policy(f[0]);
        if (!policy) throw io_error("selection csv: unknown policy '" + f[0] + "'");
        r.policy = *policy;
        r.scenarios = static_cast<int>(parse_int(f[1], "scenarios"));
        r.mean_visual_range = parse_double(f[2], "mean_visual_range");
        r.stddev_visual_range = parse_double(f[3], "stddev_visual_range");
        r.mean_motion_blur = parse_double(f[4], "mean_motion_blur");
        r.stddev_motion_blur = parse_double(f[5], "stddev_motion_blur");
        r.mean_objective = parse_double(f[6], "mean_objective");
        r.stddev_objective = parse_double(f[7], "stddev_objective");
        out.push_back(r);
    }
    return out;
}

inline std::string to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "policy,beta_param,throughput_bps,energy_w\n";
    for (const SweepRow& r : rows)
        os << to_string(r.policy) << ',' << format_double(r.beta_param) << ','
           << format_double(r.throughput_bps) << ',' << format_double(r.energy_w) << '\n';
    return os.str();
}

inline std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw io_error("sweep csv: missing header");
    std::vector<SweepRow> out;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        auto f = split(trim(line), ',');
        if (f.size() != 4) throw io_error("sweep csv: expected 4 fields");
        SweepRow r;
        auto policy = parse_allocation_policy(f[0]);
        if (!policy) throw io_error("sweep csv: unknown policy '" + f[0] + "'");
        r.policy = *policy;
        r.beta_param = parse_double(f[1], "beta_param");
        r.throughput_bps = parse_double(f[2], "throughput_bps");
        r.energy_w = parse_double(f[3], "energy_w");
        out.push_back(r);
    }
    return out;
}

inline std::string to_csv(const std::vector<FusionAggregate>& table) {
    std::ostringstream os;
    os << "policy,scenarios,mean_iou,stddev_iou,mean_recall,mean_f1_score\n";
    for (const FusionAggregate& r : table)
        os << r.policy << ',' << r.scenarios << ',' << format_double(r.mean_iou) << ','
           << format_double(r.stddev_iou) << ',' << format_double(r.mean_recall) << ','
           << format_double(r.mean_f1_score) << '\n';
    return os.str();
}

inline std::vector<FusionAggregate> parse_fusion_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw io_error("fusion csv: missing header");
    std::vector<FusionAggregate> out;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        auto f = split(trim(line), ',');
        if (f.size() != 6) throw io_error("fusion csv: expected 6 fields");
        FusionAggregate r;
        r.policy = f[0];
        if (r.policy != "ego" && !parse_selection_policy(r.policy))
            throw io_error("fusion csv: unknown policy '" + r.policy + "'");
        r.scenarios = static_cast<int>(parse_int(f[1], "scenarios"));
        r.mean_iou = parse_double(f[2], "mean_iou");
        r.stddev_iou = parse_double(f[3], "stddev_iou");
        r.mean_recall = parse_double(f[4], "mean_recall");
        r.mean_f1_score = parse_double(f[5], "mean_f1_score");
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Full batch: all three experiments, written to out_dir as selection.csv,
// allocation.csv and fusion.csv.
// ---------------------------------------------------------------------------

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open output file: " + path.string());
    os << text;
    if (!os) throw io_error("failed while writing: " + path.string());
}

inline void run_bench(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    check_experiment_config(cfg);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create output directory: " + out_dir.string());

    write_text_file(out_dir / "selection.csv", to_csv(run_selection_experiment(cfg).table));
    write_text_file(out_dir / "allocation.csv", to_csv(run_allocation_experiment(cfg).mean_rows));
    write_text_file(out_dir / "fusion.csv", to_csv(run_fusion_experiment(cfg).table));
}

} // namespace cpsim
