// Command-line front end: scenario generation, step-1 selection, step-2
// resource allocation, error sweeps, fusion evaluation and full batches.
// Exit codes: 0 success, 1 configuration error, 2 infeasible experiment,
// 3 I/O error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpsim/cpsim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kConfigDirEnv = "CPSIM_CONFIG_DIR";

// --config resolution: the path itself, then $CPSIM_CONFIG_DIR/<path>
fs::path resolve_config_path(const std::string& given) {
    fs::path direct(given);
    if (fs::exists(direct)) return direct;
    if (direct.is_relative()) {
        if (const char* dir = std::getenv(kConfigDirEnv)) {
            fs::path fallback = fs::path(dir) / direct;
            if (fs::exists(fallback)) return fallback;
        }
    }
    throw cpsim::io_error("config file not found: " + given);
}

// strict JSON object reader: every key must be consumed
class ObjectReader {
public:
    ObjectReader(const json& j, std::string where) : where_(std::move(where)) {
        if (!j.is_object())
            throw cpsim::config_error(where_ + ": expected a JSON object");
        object_ = j;
    }

    template <typename T>
    void get(const char* key, T& out) {
        auto it = object_.find(key);
        if (it == object_.end()) return;
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw cpsim::config_error(where_ + "." + key + ": wrong type");
        }
        object_.erase(it);
    }

    std::optional<json> take_object(const char* key) {
        auto it = object_.find(key);
        if (it == object_.end()) return std::nullopt;
        json j = *it;
        object_.erase(it);
        return j;
    }

    void finish() const {
        if (!object_.empty())
            throw cpsim::config_error(where_ + ": unknown key '" +
                                      object_.begin().key() + "'");
    }

private:
    json object_;
    std::string where_;
};

void read_camera(const json& j, cpsim::CameraModel& c) {
    ObjectReader r(j, "camera");
    r.get("exposure_time", c.exposure_time);
    r.get("focal_length", c.focal_length);
    r.get("ccd_pixel_size", c.ccd_pixel_size);
    r.get("object_start_px", c.object_start_px);
    r.get("motion_angle", c.motion_angle);
    r.get("depth", c.depth);
    r.get("pixel_pitch", c.pixel_pitch);
    r.finish();
}

void read_environment(const json& j, cpsim::Environment& e) {
    ObjectReader r(j, "environment");
    r.get("visibility_threshold", e.visibility_threshold);
    r.get("road_angle", e.road_angle);
    r.get("decay_rate", e.decay_rate);
    r.get("range_horizon", e.range_horizon);
    r.finish();
}

void read_comms(const json& j, cpsim::CommsBudget& b) {
    ObjectReader r(j, "comms");
    r.get("channel_rate", b.channel_rate);
    r.get("total_rb_count", b.total_rb_count);
    r.get("rb_width", b.rb_width);
    r.get("total_power", b.total_power);
    r.get("delay_threshold", b.delay_threshold);
    r.get("packet_length", b.packet_length);
    r.finish();
}

void read_scenario_config(const json& j, cpsim::ScenarioConfig& cfg) {
    ObjectReader r(j, "scenario");
    r.get("beta_shape_a", cfg.beta_shape_a);
    r.get("beta_shape_b", cfg.beta_shape_b);
    r.get("beta_clamp", cfg.beta_clamp);
    r.get("mean_delay_mean", cfg.mean_delay_mean);
    r.get("speed_min", cfg.speed_min);
    r.get("speed_max", cfg.speed_max);
    r.get("position_gap_min", cfg.position_gap_min);
    r.get("road_length", cfg.road_length);
    r.get("max_helpers", cfg.max_helpers);
    if (auto sub = r.take_object("camera")) read_camera(*sub, cfg.camera);
    if (auto sub = r.take_object("environment")) read_environment(*sub, cfg.environment);
    if (auto sub = r.take_object("comms")) read_comms(*sub, cfg.comms);
    r.finish();
}

void read_weights(const json& j, cpsim::ObjectiveWeights& w) {
    ObjectReader r(j, "weights");
    r.get("visual_range", w.visual_range);
    r.get("motion_blur", w.motion_blur);
    r.get("throughput", w.throughput);
    r.get("energy", w.energy);
    r.get("standardize", w.standardize);
    r.finish();
}

void read_ga(const json& j, cpsim::GaConfig& g) {
    ObjectReader r(j, "ga");
    r.get("population_size", g.population_size);
    r.get("generations", g.generations);
    r.get("crossover_prob", g.crossover_prob);
    double mutation = -1.0;
    r.get("mutation_prob", mutation);
    if (mutation >= 0.0) g.mutation_prob = mutation;
    r.get("tournament_size", g.tournament_size);
    r.get("elitism_count", g.elitism_count);
    r.get("seed", g.seed);
    r.finish();
}

void read_fusion(const json& j, cpsim::FusionConfig& f) {
    ObjectReader r(j, "fusion");
    r.get("iou_threshold", f.iou_threshold);
    r.get("fixtures_path", f.fixtures_path);
    if (auto sub = r.take_object("synthetic")) {
        ObjectReader sr(*sub, "fusion.synthetic");
        sr.get("objects", f.synthetic.objects);
        sr.get("box_width", f.synthetic.box_width);
        sr.get("box_height", f.synthetic.box_height);
        sr.get("quality_ceiling", f.synthetic.quality_ceiling);
        sr.get("miss_floor", f.synthetic.miss_floor);
        sr.get("blur_attenuation", f.synthetic.blur_attenuation);
        sr.get("fp_prob", f.synthetic.fp_prob);
        sr.get("noise", f.synthetic.noise);
        sr.finish();
    }
    r.finish();
}

cpsim::ExperimentConfig load_experiment_config(const std::string& path) {
    fs::path resolved = resolve_config_path(path);
    std::ifstream is(resolved);
    if (!is) throw cpsim::io_error("cannot open config file: " + resolved.string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw cpsim::config_error(resolved.string() + ": " + e.what());
    }

    cpsim::ExperimentConfig cfg;
    ObjectReader r(j, resolved.string());
    r.get("n_candidates", cfg.n_candidates);
    r.get("repetitions", cfg.repetitions);
    r.get("base_seed", cfg.base_seed);
    r.get("random_draws", cfg.random_draws);
    r.get("workers", cfg.workers);
    r.get("beta_grid_points", cfg.beta_grid_points);
    r.get("beta_grid", cfg.beta_grid);
    r.get("out_dir", cfg.out_dir);
    std::vector<std::string> policy_names;
    r.get("policies", policy_names);
    if (!policy_names.empty()) {
        cfg.policies.clear();
        for (const std::string& name : policy_names) {
            auto p = cpsim::parse_selection_policy(name);
            if (!p) throw cpsim::config_error("unknown selection policy '" + name + "'");
            cfg.policies.push_back(*p);
        }
    }
    if (auto sub = r.take_object("scenario")) read_scenario_config(*sub, cfg.scenario);
    if (auto sub = r.take_object("weights")) read_weights(*sub, cfg.weights);
    if (auto sub = r.take_object("ga")) read_ga(*sub, cfg.ga);
    if (auto sub = r.take_object("fusion")) read_fusion(*sub, cfg.fusion);
    r.finish();
    return cfg;
}

cpsim::SelectionVector parse_mask(const std::string& text, std::size_t expected) {
    cpsim::SelectionVector alpha(expected);
    std::size_t bit = 0;
    for (char c : text) {
        if (c == ',' || c == ' ') continue;
        if (bit >= expected)
            throw cpsim::config_error("--mask has more bits than candidates");
        if (c != '0' && c != '1')
            throw cpsim::config_error("--mask must contain only 0 and 1");
        alpha.mask[bit++] = static_cast<std::uint8_t>(c - '0');
    }
    if (bit != expected)
        throw cpsim::config_error("--mask needs exactly one bit per candidate");
    return alpha;
}

std::string mask_string(const cpsim::SelectionVector& alpha) {
    std::string s;
    for (auto b : alpha.mask) s.push_back(b ? '1' : '0');
    return s;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    cpsim::write_text_file(out_path, text);
}

json selection_to_json(const cpsim::SelectionResult& r) {
    return json{{"method", cpsim::to_string(r.method)},
                {"mask", mask_string(r.alpha)},
                {"objective", r.objective_value},
                {"visual_range", r.per_term.visual_range},
                {"motion_blur", r.per_term.motion_blur},
                {"visual_range_raw", r.per_term.visual_range_raw},
                {"motion_blur_raw", r.per_term.motion_blur_raw},
                {"evaluations", r.evaluations}};
}

std::string selection_to_csv(const cpsim::SelectionResult& r) {
    std::ostringstream os;
    os << "method,mask,objective,visual_range,motion_blur,visual_range_raw,motion_blur_raw,"
          "evaluations\n";
    os << cpsim::to_string(r.method) << ',' << mask_string(r.alpha) << ','
       << cpsim::format_double(r.objective_value) << ','
       << cpsim::format_double(r.per_term.visual_range) << ','
       << cpsim::format_double(r.per_term.motion_blur) << ','
       << cpsim::format_double(r.per_term.visual_range_raw) << ','
       << cpsim::format_double(r.per_term.motion_blur_raw) << ',' << r.evaluations << '\n';
    return os.str();
}

json plan_to_json(const cpsim::AllocationPlan& plan, const std::string& policy,
                  const cpsim::SelectionVector& alpha) {
    return json{{"policy", policy},
                {"mask", mask_string(alpha)},
                {"feasible", plan.feasible},
                {"rb_counts", plan.rb_counts},
                {"powers", plan.powers},
                {"throughput_bps", plan.achieved_throughput},
                {"energy_w", plan.achieved_energy}};
}

std::string plan_to_csv(const cpsim::AllocationPlan& plan, const std::string& policy,
                        const cpsim::SelectionVector& alpha) {
    std::ostringstream os;
    os << "policy,mask,feasible,throughput_bps,energy_w,rb_counts,powers\n";
    os << policy << ',' << mask_string(alpha) << ',' << (plan.feasible ? 1 : 0) << ','
       << cpsim::format_double(plan.achieved_throughput) << ','
       << cpsim::format_double(plan.achieved_energy) << ',';
    for (std::size_t i = 0; i < plan.rb_counts.size(); ++i)
        os << (i ? " " : "") << plan.rb_counts[i];
    os << ',';
    for (std::size_t i = 0; i < plan.powers.size(); ++i)
        os << (i ? " " : "") << cpsim::format_double(plan.powers[i]);
    os << '\n';
    return os.str();
}

struct CommonFlags {
    std::string config;
    std::string out;
    std::string format = "csv";
    std::uint64_t seed = 0;
    bool seed_given = false;
};

cpsim::ExperimentConfig experiment_config_for(const CommonFlags& flags) {
    cpsim::ExperimentConfig cfg;
    if (!flags.config.empty()) cfg = load_experiment_config(flags.config);
    if (flags.seed_given) cfg.base_seed = flags.seed;
    return cfg;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"cooperative-perception helper selection and resource allocation"};
    app.require_subcommand(1);

    // ---- gen ----------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate a scenario file");
    CommonFlags gen_flags;
    int gen_n = 10;
    int gen_m = -1;
    gen->add_option("--seed", gen_flags.seed, "scenario seed")->required();
    gen->add_option("--n", gen_n, "number of candidate helpers");
    gen->add_option("--m", gen_m, "helper budget (defaults to the config value)");
    gen->add_option("--config", gen_flags.config, "experiment config (JSON)");
    gen->add_option("--out", gen_flags.out, "output path (stdout when omitted)");

    // ---- select -------------------------------------------------------
    auto* select = app.add_subcommand("select", "run step-1 helper selection on a scenario");
    CommonFlags select_flags;
    std::string select_scenario;
    std::string select_policy = "ga";
    select->add_option("--scenario", select_scenario, "scenario file")->required();
    select->add_option("--policy", select_policy,
                       "ga|oracle|random|closest|farthest|slowest");
    auto* select_seed = select->add_option("--seed", select_flags.seed, "seed for seeded policies");
    select->add_option("--config", select_flags.config, "experiment config (JSON)");
    select->add_option("--out", select_flags.out, "output path (stdout when omitted)");
    select->add_option("--format", select_flags.format, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}));

    // ---- allocate -----------------------------------------------------
    auto* allocate_cmd = app.add_subcommand("allocate", "run step-2 resource allocation");
    CommonFlags alloc_flags;
    std::string alloc_scenario;
    std::string alloc_policy = "optimal";
    std::string alloc_mask;
    std::string alloc_power = "equal";
    allocate_cmd->add_option("--scenario", alloc_scenario, "scenario file")->required();
    allocate_cmd->add_option("--mask", alloc_mask,
                             "selection mask, e.g. 0101000100 (oracle selection when omitted)");
    allocate_cmd->add_option("--policy", alloc_policy, "optimal|proportional|uniform|random");
    allocate_cmd->add_option("--power", alloc_power, "equal|concentrated");
    allocate_cmd->add_option("--seed", alloc_flags.seed, "seed for the random policy");
    allocate_cmd->add_option("--config", alloc_flags.config, "experiment config (JSON)");
    allocate_cmd->add_option("--out", alloc_flags.out, "output path (stdout when omitted)");
    allocate_cmd->add_option("--format", alloc_flags.format, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}));

    // ---- sweep --------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "error sweep: throughput/energy per policy");
    CommonFlags sweep_flags;
    std::string sweep_scenario;
    std::string sweep_mask;
    std::vector<double> sweep_grid;
    double sweep_start = 0.0, sweep_stop = 0.0;
    int sweep_points = 0;
    sweep->add_option("--scenario", sweep_scenario, "scenario file")->required();
    sweep->add_option("--mask", sweep_mask, "selection mask (oracle selection when omitted)");
    sweep->add_option("--grid", sweep_grid, "explicit shift values")->delimiter(',');
    sweep->add_option("--grid-start", sweep_start, "first shift");
    sweep->add_option("--grid-stop", sweep_stop, "last shift");
    sweep->add_option("--grid-points", sweep_points, "number of shifts");
    sweep->add_option("--seed", sweep_flags.seed, "seed for the random policy");
    sweep->add_option("--config", sweep_flags.config, "experiment config (JSON)");
    sweep->add_option("--out", sweep_flags.out, "output path (stdout when omitted)");

    // ---- fuse ---------------------------------------------------------
    auto* fuse = app.add_subcommand("fuse", "fusion experiment: metrics per selection policy");
    CommonFlags fuse_flags;
    int fuse_workers = 0;
    fuse->add_option("--config", fuse_flags.config, "experiment config (JSON)");
    auto* fuse_seed = fuse->add_option("--seed", fuse_flags.seed, "batch base seed");
    fuse->add_option("--workers", fuse_workers, "worker threads");
    fuse->add_option("--out", fuse_flags.out, "output path (stdout when omitted)");

    // ---- bench --------------------------------------------------------
    auto* bench = app.add_subcommand("bench", "full batch: selection, allocation and fusion");
    CommonFlags bench_flags;
    std::string bench_out_dir;
    int bench_workers = 0;
    bench->add_option("--config", bench_flags.config, "experiment config (JSON)");
    auto* bench_seed = bench->add_option("--seed", bench_flags.seed, "batch base seed");
    bench->add_option("--workers", bench_workers, "worker threads");
    bench->add_option("--out-dir", bench_out_dir, "output directory (default from config)");

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        gen_flags.seed_given = true;
        cpsim::ExperimentConfig cfg = experiment_config_for(gen_flags);
        if (gen_m > 0) cfg.scenario.max_helpers = gen_m;
        cpsim::Scenario s = cpsim::generate_scenario(gen_flags.seed, gen_n, cfg.scenario);
        std::ostringstream os;
        cpsim::write_scenario(os, s);
        emit(os.str(), gen_flags.out);
        return 0;
    }

    if (select->parsed()) {
        cpsim::ExperimentConfig cfg = experiment_config_for(select_flags);
        cpsim::Scenario s = cpsim::load_scenario(select_scenario);
        auto policy = cpsim::parse_selection_policy(select_policy);
        if (!policy) throw cpsim::config_error("unknown policy '" + select_policy + "'");
        cpsim::SelectionResult r;
        switch (*policy) {
            case cpsim::SelectionPolicy::ga: {
                cpsim::GaConfig ga = cfg.ga;
                if (select_seed->count() > 0) ga.seed = select_flags.seed;
                r = cpsim::select_ga(s, cfg.weights, ga);
                break;
            }
            case cpsim::SelectionPolicy::oracle:
                r = cpsim::select_oracle(s, cfg.weights);
                break;
            default:
                r = cpsim::select_baseline(s, *policy, cfg.weights, select_flags.seed);
                break;
        }
        emit(select_flags.format == "json" ? selection_to_json(r).dump(2) + "\n"
                                           : selection_to_csv(r),
             select_flags.out);
        return 0;
    }

    if (allocate_cmd->parsed()) {
        cpsim::ExperimentConfig cfg = experiment_config_for(alloc_flags);
        cpsim::Scenario s = cpsim::load_scenario(alloc_scenario);
        cpsim::SelectionVector alpha =
            alloc_mask.empty() ? cpsim::select_oracle(s, cfg.weights).alpha
                               : parse_mask(alloc_mask, s.candidates.size());
        auto policy = cpsim::parse_allocation_policy(alloc_policy);
        if (!policy) throw cpsim::config_error("unknown policy '" + alloc_policy + "'");
        cpsim::PowerPolicy power;
        if (alloc_power == "equal")
            power = cpsim::PowerPolicy::equal_split;
        else if (alloc_power == "concentrated")
            power = cpsim::PowerPolicy::best_channel;
        else
            throw cpsim::config_error("--power must be equal or concentrated");

        cpsim::AllocationPlan plan;
        switch (*policy) {
            case cpsim::AllocationPolicy::optimal:
                plan = cpsim::allocate(s, alpha, cfg.weights, power);
                break;
            case cpsim::AllocationPolicy::proportional:
                plan = cpsim::allocate_proportional(s, alpha, power);
                break;
            default:
                plan = cpsim::allocate_baseline(s, alpha, *policy, alloc_flags.seed, power);
                break;
        }
        emit(alloc_flags.format == "json" ? plan_to_json(plan, alloc_policy, alpha).dump(2) + "\n"
                                          : plan_to_csv(plan, alloc_policy, alpha),
             alloc_flags.out);
        if (!plan.feasible) {
            std::cerr << "infeasible: no selected helper satisfies the delay bound\n";
            return 2;
        }
        return 0;
    }

    if (sweep->parsed()) {
        cpsim::ExperimentConfig cfg = experiment_config_for(sweep_flags);
        cpsim::Scenario s = cpsim::load_scenario(sweep_scenario);
        cpsim::SelectionVector alpha =
            sweep_mask.empty() ? cpsim::select_oracle(s, cfg.weights).alpha
                               : parse_mask(sweep_mask, s.candidates.size());
        std::vector<double> grid = sweep_grid;
        if (grid.empty() && sweep_points > 0) {
            for (int j = 0; j < sweep_points; ++j)
                grid.push_back(sweep_points > 1
                                   ? sweep_start +
                                         (sweep_stop - sweep_start) * j / (sweep_points - 1)
                                   : sweep_start);
        }
        auto rows = cpsim::sweep_error(s, alpha, grid, sweep_flags.seed);
        emit(cpsim::to_csv(rows), sweep_flags.out);
        return 0;
    }

    if (fuse->parsed()) {
        fuse_flags.seed_given = fuse_seed->count() > 0;
        cpsim::ExperimentConfig cfg = experiment_config_for(fuse_flags);
        if (fuse_workers > 0) cfg.workers = fuse_workers;
        auto result = cpsim::run_fusion_experiment(cfg);
        emit(cpsim::to_csv(result.table), fuse_flags.out);
        return 0;
    }

    if (bench->parsed()) {
        bench_flags.seed_given = bench_seed->count() > 0;
        cpsim::ExperimentConfig cfg = experiment_config_for(bench_flags);
        if (bench_workers > 0) cfg.workers = bench_workers;
        if (!bench_out_dir.empty()) cfg.out_dir = bench_out_dir;
        cpsim::run_bench(cfg, cfg.out_dir);
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const cpsim::io_error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 3;
    } catch (const cpsim::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const cpsim::contract_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
