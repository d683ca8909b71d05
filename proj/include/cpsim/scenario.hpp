#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cpsim/errors.hpp"
#include "cpsim/random.hpp"

namespace cpsim {

// One vehicle: the ego or a candidate helper driving ahead of it.
struct Vehicle {
    int id = 0;
    double position_x = 0.0;         // meters, longitudinal along the road
    double position_y = 0.0;         // meters
    double speed = 0.0;              // m/s, relative to the scene
    double packet_error_prob = 0.0;  // combined effective packet error probability, in [0, 1)
    double mean_delay = 1e-3;        // seconds, expectation of the per-packet delay
    double tx_power = 0.2;           // watts, nominal transmit power
};

// Camera shared by every vehicle in a scenario (all helpers carry the same
// sensor, so only speed differentiates their blur).
struct CameraModel {
    double exposure_time = 0.01;     // s
    double focal_length = 0.004;     // m
    double ccd_pixel_size = 4e-6;    // m, horizontal CCD pixel size
    double object_start_px = 120.0;  // pixels, object start position in the image
    double motion_angle = 0.0;       // rad, between motion direction and image plane
    double depth = 20.0;             // m, perpendicular distance to the imaged object
    double pixel_pitch = 4e-6;       // m
};

struct Environment {
    double visibility_threshold = 50.0;  // m, weather/light-limited individual range
    double road_angle = 0.0;             // rad, road direction vs. x-axis
    double decay_rate = 0.005;           // 1/m, proximity weighting constant
    double range_horizon = 260.0;        // m, upper limit used by numerical integration
};

struct CommsBudget {
    double channel_rate = 150e3;    // bit/s carried by one resource block
    int total_rb_count = 50;        // size of the shared RB pool
    double rb_width = 180e3;        // Hz, fixed by the LTE grid
    double total_power = 1.0;       // W, shared transmit power budget
    double delay_threshold = 0.1;   // s, bound on the per-packet mean delay
    double packet_length = 12000.0; // bits
};

// RB pool size for the two LTE-V2X channel bandwidths: 50 RBs at 10 MHz and
// 100 at 20 MHz, the standard RB-grid figures for the 180 kHz block width.
inline int rb_pool_for_bandwidth_mhz(int mhz) {
    if (mhz == 10) return 50;
    if (mhz == 20) return 100;
    throw config_error("unsupported LTE-V2X channel bandwidth: " + std::to_string(mhz) + " MHz");
}

// World state for one optimization run: the ego plus the front vehicles that
// volunteered (acknowledged a help request with their position, speed and
// channel state). Candidates are kept sorted strictly ascending by position_x
// and all sit ahead of the ego.
struct Scenario {
    Vehicle ego;
    std::vector<Vehicle> candidates;
    CameraModel camera;
    Environment environment;
    CommsBudget comms;
    int max_helpers = 3;
};

// Distribution parameters for generate_scenario. Positions are uniform over
// (ego_x + position_gap_min, ego_x + road_length] and then sorted; speeds are
// uniform; packet error probabilities follow a Beta prior clamped away from 1
// so the expected retransmission count stays finite; per-vehicle mean delays
// are exponential.
struct ScenarioConfig {
    double beta_shape_a = 2.0;
    double beta_shape_b = 8.0;
    double beta_clamp = 1e-3;       // error probabilities clamped to [0, 1 - beta_clamp]
    double mean_delay_mean = 0.05;  // s
    double speed_min = 0.0;         // m/s
    double speed_max = 30.0;        // m/s
    double position_gap_min = 5.0;  // m
    double road_length = 200.0;     // m
    int max_helpers = 3;
    CameraModel camera;
    Environment environment;
    CommsBudget comms;
};

struct Violation {
    std::string code;     // stable machine-readable identifier
    std::string message;  // human-readable context
};

// Collects every invariant violation; never throws and never stops early.
inline std::vector<Violation> validate_scenario(const Scenario& s) {
    std::vector<Violation> out;
    auto add = [&](std::string code, std::string msg) {
        out.push_back({std::move(code), std::move(msg)});
    };

    if (s.candidates.empty()) add("no_candidates", "scenario has no candidate helpers");

    auto check_vehicle = [&](const Vehicle& v, const std::string& who) {
        if (!(v.packet_error_prob >= 0.0) || v.packet_error_prob >= 1.0)
            add("beta_out_of_range", who + ": packet_error_prob must lie in [0, 1)");
        if (!(v.mean_delay > 0.0))
            add("mean_delay_not_positive", who + ": mean_delay must be > 0");
        if (v.speed < 0.0) add("speed_negative", who + ": speed must be >= 0");
        if (v.tx_power < 0.0) add("tx_power_negative", who + ": tx_power must be >= 0");
    };
    check_vehicle(s.ego, "ego");
    for (std::size_t i = 0; i < s.candidates.size(); ++i)
        check_vehicle(s.candidates[i], "candidate " + std::to_string(i));

    for (std::size_t i = 0; i < s.candidates.size(); ++i) {
        if (s.candidates[i].position_x <= s.ego.position_x)
            add("candidate_not_ahead_of_ego",
                "candidate " + std::to_string(i) + " is not ahead of the ego vehicle");
        if (i + 1 < s.candidates.size() &&
            !(s.candidates[i].position_x < s.candidates[i + 1].position_x))
            add("candidates_not_sorted",
                "candidates " + std::to_string(i) + " and " + std::to_string(i + 1) +
                    " are not strictly ascending in position_x");
    }

    if (s.max_helpers < 1) add("max_helpers_not_positive", "max_helpers must be >= 1");
    if (s.max_helpers > static_cast<int>(s.candidates.size()))
        add("max_helpers_exceeds_candidates",
            "max_helpers " + std::to_string(s.max_helpers) + " exceeds candidate count " +
                std::to_string(s.candidates.size()));

    const CameraModel& c = s.camera;
    if (!(c.exposure_time > 0.0) || !(c.focal_length > 0.0) || !(c.depth > 0.0) ||
        !(c.pixel_pitch > 0.0))
        add("camera_parameter_not_positive",
            "exposure_time, focal_length, depth and pixel_pitch must be > 0");

    const Environment& e = s.environment;
    if (!(e.visibility_threshold > 0.0))
        add("visibility_threshold_not_positive", "visibility_threshold must be > 0");
    if (!(e.decay_rate > 0.0)) add("decay_rate_not_positive", "decay_rate must be > 0");
    if (!s.candidates.empty()) {
        double needed = s.candidates.back().position_x + e.visibility_threshold;
        if (e.range_horizon < needed)
            add("range_horizon_too_small",
                "range_horizon must cover the last candidate plus the visibility threshold");
    }

    const CommsBudget& b = s.comms;
    if (b.total_rb_count < 1) add("rb_pool_empty", "total_rb_count must be >= 1");
    if (b.rb_width != 180e3) add("rb_width_not_180khz", "rb_width must be exactly 180 kHz");
    if (!(b.total_power > 0.0)) add("total_power_not_positive", "total_power must be > 0");
    if (!(b.delay_threshold > 0.0))
        add("delay_threshold_not_positive", "delay_threshold must be > 0");
    if (!(b.channel_rate > 0.0)) add("channel_rate_not_positive", "channel_rate must be > 0");
    if (!(b.packet_length > 0.0)) add("packet_length_not_positive", "packet_length must be > 0");

    return out;
}

inline bool is_valid(const Scenario& s) { return validate_scenario(s).empty(); }

// Pure function of (seed, n_candidates, cfg): repeated calls agree bit for bit.
// The range horizon is widened automatically when the drawn layout needs it.
inline Scenario generate_scenario(std::uint64_t seed, int n_candidates,
                                  const ScenarioConfig& cfg = {}) {
    if (n_candidates < 1) throw config_error("generate_scenario: n_candidates must be >= 1");
    if (!(cfg.beta_shape_a > 0.0) || !(cfg.beta_shape_b > 0.0))
        throw config_error("generate_scenario: Beta shape parameters must be > 0");
    if (!(cfg.mean_delay_mean > 0.0))
        throw config_error("generate_scenario: mean_delay_mean must be > 0");
    if (!(cfg.beta_clamp > 0.0) || cfg.beta_clamp >= 1.0)
        throw config_error("generate_scenario: beta_clamp must lie in (0, 1)");
    if (cfg.speed_min < 0.0 || cfg.speed_max < cfg.speed_min)
        throw config_error("generate_scenario: speed range must satisfy 0 <= min <= max");
    if (!(cfg.position_gap_min > 0.0) || !(cfg.road_length > cfg.position_gap_min))
        throw config_error("generate_scenario: need 0 < position_gap_min < road_length");
    if (cfg.max_helpers < 1 || cfg.max_helpers > n_candidates)
        throw config_error("generate_scenario: need 1 <= max_helpers <= n_candidates");

    Rng rng(seed);
    Scenario s;
    s.camera = cfg.camera;
    s.environment = cfg.environment;
    s.comms = cfg.comms;
    s.max_helpers = cfg.max_helpers;

    s.ego.id = 0;
    s.ego.position_x = 0.0;
    s.ego.position_y = 0.0;
    s.ego.speed = 0.0;  // speeds are relative to the ego's frame
    s.ego.packet_error_prob = 0.0;
    s.ego.mean_delay = 1e-3;
    s.ego.tx_power = 0.2;

    const int n = n_candidates;
    std::vector<double> xs(n);
    for (;;) {  // exact ties have probability ~0 but would break strict ordering
        for (double& x : xs)
            x = s.ego.position_x + rng.uniform(cfg.position_gap_min, cfg.road_length);
        std::sort(xs.begin(), xs.end());
        if (std::adjacent_find(xs.begin(), xs.end()) == xs.end()) break;
    }

    s.candidates.resize(n);
    for (int i = 0; i < n; ++i) {
        Vehicle& v = s.candidates[i];
        v.id = i + 1;
        v.position_x = xs[i];
        v.position_y = 0.0;
        v.speed = rng.uniform(cfg.speed_min, cfg.speed_max);
        v.packet_error_prob =
            std::min(rng.beta(cfg.beta_shape_a, cfg.beta_shape_b), 1.0 - cfg.beta_clamp);
        v.mean_delay = std::max(rng.exponential(cfg.mean_delay_mean),
                                std::numeric_limits<double>::min());
        v.tx_power = 0.2;
    }

    double needed = s.candidates.back().position_x + s.environment.visibility_threshold;
    if (s.environment.range_horizon < needed) s.environment.range_horizon = needed + 1.0;

    return s;
}

} // namespace cpsim
