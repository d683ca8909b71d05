// Acceptance suite: one line per criterion, PASS or FAIL, nonzero exit when
// anything fails. Runs the library the way the experiment driver does, plus
// the real CLI binary for the determinism check.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cpsim/cpsim.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace cpsim;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
};

int g_failures = 0;

void report(const std::string& name, const Outcome& outcome) {
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " - " << name;
    std::string d = outcome.detail.str();
    if (!d.empty()) std::cout << " (" << d << ")";
    std::cout << '\n';
    if (!outcome.pass) ++g_failures;
}

void require(Outcome& o, bool condition, const std::string& why) {
    if (!condition) {
        if (!o.pass) o.detail << "; ";
        o.pass = false;
        o.detail << why;
    }
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

// ---------------------------------------------------------------------------
// 1. GA equals the exhaustive optimum on >= 99 of 100 scenarios, under 10 s.
// ---------------------------------------------------------------------------
void criterion_oracle_equivalence() {
    Outcome o;
    auto start = std::chrono::steady_clock::now();

    int exact = 0;
    const int scenarios = 100;
    for (int i = 0; i < scenarios; ++i) {
        std::uint64_t seed = mix64(9001, static_cast<std::uint64_t>(i));
        Scenario s = generate_scenario(seed, 10);  // N=10, M=3
        GaConfig ga;
        ga.seed = mix64(seed, 1);
        SelectionResult by_ga = select_ga(s, {}, ga);
        SelectionResult by_oracle = select_oracle(s, {});
        require(o, by_ga.objective_value <= by_oracle.objective_value,
                "GA exceeded the exhaustive optimum");
        if (by_ga.objective_value == by_oracle.objective_value) ++exact;
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    require(o, exact >= 99, "exact matches " + std::to_string(exact) + "/100 < 99");
    require(o, elapsed < 10.0, "runtime " + std::to_string(elapsed) + " s >= 10 s");
    o.detail << exact << "/100 exact, " << elapsed << " s";
    report("oracle equivalence: GA matches brute force on 100 scenarios", o);
}

// ---------------------------------------------------------------------------
// 2. Informed selection beats every baseline on visual range on >= 95 of 100
//    scenarios; the slowest-car baseline always has the least blur.
// ---------------------------------------------------------------------------
void criterion_selection_dominance() {
    Outcome o;
    const int scenarios = 100;
    const int random_draws = 100;
    int range_wins = 0;
    int blur_wins = 0;
    for (int i = 0; i < scenarios; ++i) {
        std::uint64_t seed = mix64(9002, static_cast<std::uint64_t>(i));
        Scenario s = generate_scenario(seed, 10);
        double best_range = select_oracle(s, {}).per_term.visual_range_raw;

        double random_range = 0.0, random_blur = 0.0;
        for (int d = 0; d < random_draws; ++d) {
            SelectionResult r = select_baseline(s, SelectionPolicy::random, {},
                                                mix64(seed, static_cast<std::uint64_t>(d)));
            random_range += r.per_term.visual_range_raw;
            random_blur += r.per_term.motion_blur_raw;
        }
        random_range /= random_draws;
        random_blur /= random_draws;

        double closest_range =
            select_baseline(s, SelectionPolicy::closest, {}).per_term.visual_range_raw;
        double farthest_range =
            select_baseline(s, SelectionPolicy::farthest, {}).per_term.visual_range_raw;
        SelectionResult slowest = select_baseline(s, SelectionPolicy::slowest, {});
        double slowest_range = slowest.per_term.visual_range_raw;

        if (best_range > random_range && best_range > closest_range &&
            best_range > farthest_range && best_range > slowest_range)
            ++range_wins;

        double closest_blur =
            select_baseline(s, SelectionPolicy::closest, {}).per_term.motion_blur_raw;
        double farthest_blur =
            select_baseline(s, SelectionPolicy::farthest, {}).per_term.motion_blur_raw;
        double slowest_blur = slowest.per_term.motion_blur_raw;
        if (slowest_blur <= closest_blur && slowest_blur <= farthest_blur &&
            slowest_blur <= random_blur)
            ++blur_wins;
    }
    require(o, range_wins >= 95,
            "visual-range wins " + std::to_string(range_wins) + "/100 < 95");
    require(o, blur_wins == scenarios,
            "slowest-car blur minimal on only " + std::to_string(blur_wins) + "/100");
    o.detail << range_wins << "/100 range wins, " << blur_wins << "/100 blur wins";
    report("selection dominance over random/closest/farthest/slowest baselines", o);
}

// ---------------------------------------------------------------------------
// 3. Exact allocation dominates uniform/random pointwise on a 10-point error
//    grid, matches full composition enumeration, and all curves are monotone.
// ---------------------------------------------------------------------------
void criterion_allocation_dominance() {
    Outcome o;
    ScenarioConfig cfg;
    cfg.comms.total_rb_count = 20;  // small enough for full enumeration
    cfg.max_helpers = 4;

    const int scenarios = 25;
    for (int i = 0; i < scenarios; ++i) {
        std::uint64_t seed = mix64(9003, static_cast<std::uint64_t>(i));
        Scenario s = generate_scenario(seed, 10, cfg);
        SelectionVector alpha = select_oracle(s, {}).alpha;

        std::vector<std::size_t> funded;
        for (std::size_t c = 0; c < s.candidates.size(); ++c)
            if (alpha.selected(c) && meets_delay_constraint(s.candidates[c], s.comms))
                funded.push_back(c);
        if (funded.empty()) continue;

        double max_beta = 0.0;
        for (const Vehicle& v : s.candidates)
            max_beta = std::max(max_beta, v.packet_error_prob);
        double headroom = 0.999 - max_beta;
        std::vector<double> grid;
        for (int j = 0; j < 10; ++j) grid.push_back(0.9 * headroom * j / 9.0);

        auto rows = sweep_error(s, alpha, grid, mix64(seed, 2));
        auto row_at = [&](AllocationPolicy p, int j) -> const SweepRow& {
            for (const SweepRow& r : rows)
                if (r.policy == p && r.beta_param == grid[static_cast<std::size_t>(j)]) return r;
            throw std::logic_error("sweep row missing");
        };

        for (int j = 0; j < 10; ++j) {
            const SweepRow& best = row_at(AllocationPolicy::optimal, j);

            // full integer-composition enumeration at this grid point
            Scenario moved = s;
            for (Vehicle& v : moved.candidates)
                v.packet_error_prob += grid[static_cast<std::size_t>(j)];
            double enumerated = -1.0;
            oracle::for_each_composition(
                s.comms.total_rb_count, static_cast<int>(funded.size()),
                [&](const std::vector<int>& parts) {
                    std::vector<int> rb(s.candidates.size(), 0);
                    for (std::size_t r = 0; r < funded.size(); ++r) rb[funded[r]] = parts[r];
                    enumerated = std::max(
                        enumerated, total_throughput(alpha, rb, moved.comms, moved.candidates));
                });

            require(o, oracle::close_rel(best.throughput_bps, enumerated, 1e-9),
                    "optimal differs from enumeration");
            require(o,
                    best.throughput_bps >=
                        row_at(AllocationPolicy::uniform, j).throughput_bps * (1.0 - 1e-9),
                    "uniform beat optimal");
            require(o,
                    best.throughput_bps >=
                        row_at(AllocationPolicy::random, j).throughput_bps * (1.0 - 1e-9),
                    "random beat optimal");
        }
        for (auto policy : {AllocationPolicy::optimal, AllocationPolicy::uniform,
                            AllocationPolicy::random})
            for (int j = 1; j < 10; ++j) {
                require(o,
                        row_at(policy, j).throughput_bps <=
                            row_at(policy, j - 1).throughput_bps * (1.0 + 1e-9),
                        "throughput increased along the error grid");
                require(o,
                        row_at(policy, j).energy_w >=
                            row_at(policy, j - 1).energy_w * (1.0 - 1e-9),
                        "energy decreased along the error grid");
            }
    }
    o.detail << scenarios << " scenarios x 10 grid points, enumeration cross-checked";
    report("allocation dominance and monotonicity on the error grid", o);
}

// ---------------------------------------------------------------------------
// 4. Monte-Carlo estimates against the closed forms, and the closed-form
//    range integral against trapezoid quadrature.
// ---------------------------------------------------------------------------
void criterion_closed_forms() {
    Outcome o;

    for (double beta : {0.1, 0.3, 0.5}) {
        Rng rng(mix64(9004, static_cast<std::uint64_t>(beta * 1000)));
        const int n = 1000000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.geometric_trials(beta));
        double expected = 1.0 / (1.0 - beta);
        require(o, oracle::close_rel(sum / n, expected, 0.01),
                "retransmission mean off at beta=" + std::to_string(beta));
    }

    {
        Vehicle v;
        v.mean_delay = 0.05;
        Rng rng(9005);
        const int n = 1000000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += sample_delay(v, rng);
        require(o, oracle::close_rel(sum / n, 0.05, 0.01), "delay mean off by more than 1%");
    }

    int checked = 0;
    for (int i = 0; i < 20; ++i) {
        std::uint64_t seed = mix64(9006, static_cast<std::uint64_t>(i));
        Scenario s = generate_scenario(seed, 10);
        SelectionVector alpha =
            select_baseline(s, SelectionPolicy::random, {}, mix64(seed, 3)).alpha;
        double closed = visual_range_score(alpha, s);
        double numeric = oracle::trapezoid_visual_range(alpha, s, 0.01);
        require(o, oracle::close_rel(closed, numeric, 1e-4),
                "closed form vs quadrature off at scenario " + std::to_string(i));
        ++checked;
    }
    o.detail << "3 retransmission points, 1e6 delay draws, " << checked
             << " quadrature scenarios";
    report("closed-form checks: retransmissions, delay, range integral", o);
}

// ---------------------------------------------------------------------------
// 5. Fusion takes the per-object maximum exactly, commutes, is idempotent,
//    and recall degrades monotonically with the drop rate.
// ---------------------------------------------------------------------------
void criterion_fusion_properties() {
    Outcome o;

    Rng rng(9007);
    BoundingBox gt;
    gt.x_min = 0;
    gt.y_min = 0;
    gt.x_max = 40;
    gt.y_max = 80;
    gt.object_id = 0;
    auto pred_with_quality = [&](double q) {
        BoundingBox p = gt;
        double shift = 40.0 * (1.0 - q) / (1.0 + q);
        p.x_min += shift;
        p.x_max += shift;
        p.confidence = q;
        return p;
    };

    bool max_ok = true, commute_ok = true, idempotent_ok = true;
    for (int t = 0; t < 10000; ++t) {
        DetectionSet ego, helper;
        ego.vehicle_id = 0;
        helper.vehicle_id = 1;
        ego.ground_truth = {gt};
        helper.ground_truth = {gt};
        ego.predictions = {pred_with_quality(rng.uniform(0.0, 0.99))};
        helper.predictions = {pred_with_quality(rng.uniform(0.0, 0.99))};

        double ego_iou = iou(gt, ego.predictions[0]);
        double helper_iou = iou(gt, helper.predictions[0]);
        FusionResult ab = fuse_iou_max(ego, helper);
        FusionResult ba = fuse_iou_max(helper, ego);
        FusionResult self = fuse_iou_max(ego, ego);

        max_ok &= ab.per_object[0].iou == std::max(ego_iou, helper_iou);
        commute_ok &= ab.per_object[0].iou == ba.per_object[0].iou;
        idempotent_ok &= self.per_object[0].iou == ego_iou;
    }
    require(o, max_ok, "fused IoU != max(ego, helper) on some pair");
    require(o, commute_ok, "fusion is not commutative");
    require(o, idempotent_ok, "fusion is not idempotent");

    // monotone degradation: one-sided sign test at 95% confidence per step
    DetectionSet many;
    many.vehicle_id = 2;
    for (int k = 0; k < 50; ++k) {
        BoundingBox g = gt;
        g.x_min += 200.0 * k;
        g.x_max += 200.0 * k;
        g.object_id = k;
        many.ground_truth.push_back(g);
        BoundingBox p = pred_with_quality(0.8);
        p.x_min += 200.0 * k;
        p.x_max += 200.0 * k;
        p.object_id = k;
        many.predictions.push_back(p);
    }
    const std::vector<double> drop_rates = {0.1, 0.3, 0.5, 0.7};
    for (std::size_t step = 1; step < drop_rates.size(); ++step) {
        int wins = 0, losses = 0;
        for (int t = 0; t < 200; ++t) {
            Rng low_rng(mix64(9008, static_cast<std::uint64_t>(t)), step);
            Rng high_rng(mix64(9009, static_cast<std::uint64_t>(t)), step);
            double low =
                metrics(evaluate_set(degrade(many, drop_rates[step - 1], low_rng)), 0.5).recall;
            double high =
                metrics(evaluate_set(degrade(many, drop_rates[step], high_rng)), 0.5).recall;
            if (low > high) ++wins;
            if (low < high) ++losses;
        }
        require(o, sign_test_p_value(wins, losses) < 0.05,
                "recall not monotone between drop rates " +
                    std::to_string(drop_rates[step - 1]) + " and " +
                    std::to_string(drop_rates[step]));
    }

    // policy orderings on the synthetic fixtures under channel errors:
    // every fused view >= the ego alone, and informed > random > closest
    {
        ExperimentConfig cfg;
        cfg.repetitions = 100;
        cfg.base_seed = 9010;
        cfg.policies = {SelectionPolicy::oracle, SelectionPolicy::random,
                        SelectionPolicy::closest};
        FusionExperimentResult r = run_fusion_experiment(cfg);
        bool fused_dominates = true;
        int ours_rnd_w = 0, ours_rnd_l = 0, ours_cl_w = 0, ours_cl_l = 0;
        int rnd_cl_w = 0, rnd_cl_l = 0;
        for (const auto& samples : r.per_rep) {
            for (std::size_t ri = 1; ri < samples.size(); ++ri)
                fused_dominates &= samples[ri].mean_iou >= samples[0].mean_iou;
            if (samples[1].mean_iou > samples[2].mean_iou) ++ours_rnd_w;
            if (samples[1].mean_iou < samples[2].mean_iou) ++ours_rnd_l;
            if (samples[1].mean_iou > samples[3].mean_iou) ++ours_cl_w;
            if (samples[1].mean_iou < samples[3].mean_iou) ++ours_cl_l;
            if (samples[2].mean_iou > samples[3].mean_iou) ++rnd_cl_w;
            if (samples[2].mean_iou < samples[3].mean_iou) ++rnd_cl_l;
        }
        require(o, fused_dominates, "a fused view scored below the ego alone");
        require(o, sign_test_p_value(ours_rnd_w, ours_rnd_l) < 0.05,
                "informed selection does not beat random fusion");
        require(o, sign_test_p_value(ours_cl_w, ours_cl_l) < 0.05,
                "informed selection does not beat closest-car fusion");
        require(o, sign_test_p_value(rnd_cl_w, rnd_cl_l) < 0.05,
                "random does not beat closest-car fusion");
    }

    o.detail << "10000 box pairs exact, monotone degradation, policy ordering on 100 seeds";
    report("fusion properties: per-object max, symmetry, degradation, ordering", o);
}

// ---------------------------------------------------------------------------
// 6. The bench verb emits byte-identical CSVs across runs and worker counts.
// ---------------------------------------------------------------------------
void criterion_determinism() {
    Outcome o;
    fs::path root = fs::temp_directory_path() / "cpsim_acceptance_bench";
    std::error_code ec;
    fs::remove_all(root, ec);
    fs::create_directories(root);

    fs::path config_path = root / "config.json";
    {
        std::ofstream cfg(config_path);
        cfg << R"({
  "repetitions": 10,
  "random_draws": 20,
  "ga": {"generations": 25},
  "fusion": {"synthetic": {"objects": 6}}
})";
    }

    auto run = [&](const std::string& out_dir, int workers) {
        std::ostringstream cmd;
        cmd << '"' << CPSIM_CLI_PATH << '"' << " bench --config " << config_path.string()
            << " --seed 7 --workers " << workers << " --out-dir " << (root / out_dir).string();
        return std::system(cmd.str().c_str());
    };

    require(o, run("serial_a", 1) == 0, "bench run 1 failed");
    require(o, run("serial_b", 1) == 0, "bench run 2 failed");
    require(o, run("pooled", 4) == 0, "bench run with 4 workers failed");

    if (o.pass) {
        for (const char* name : {"selection.csv", "allocation.csv", "fusion.csv"}) {
            std::string a = slurp(root / "serial_a" / name);
            require(o, !a.empty(), std::string(name) + " is empty");
            require(o, a == slurp(root / "serial_b" / name),
                    std::string(name) + " differs between identical runs");
            require(o, a == slurp(root / "pooled" / name),
                    std::string(name) + " differs between worker counts 1 and 4");
        }
    }
    fs::remove_all(root, ec);
    o.detail << "bench x3 (workers 1,1,4), three CSVs compared bytewise";
    report("determinism: bench output is byte-identical across runs and workers", o);
}

} // namespace

int main() {
    struct Named {
        const char* name;
        void (*run)();
    };
    const Named criteria[] = {
        {"oracle equivalence", criterion_oracle_equivalence},
        {"selection dominance", criterion_selection_dominance},
        {"allocation dominance", criterion_allocation_dominance},
        {"closed forms", criterion_closed_forms},
        {"fusion properties", criterion_fusion_properties},
        {"determinism", criterion_determinism},
    };
    for (const Named& c : criteria) {
        try {
            c.run();
        } catch (const std::exception& e) {
            Outcome o;
            o.pass = false;
            o.detail << "unexpected exception: " << e.what();
            report(c.name, o);
        }
    }

    if (g_failures > 0) {
        std::cout << g_failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all acceptance criteria passed\n";
    return 0;
}
