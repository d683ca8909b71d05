#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cpsim/objectives.hpp"
#include "cpsim/scenario.hpp"
#include "oracles.hpp"

using namespace cpsim;

namespace {

// bare scenario with hand-placed candidates; camera/env defaults unless set
Scenario scenario_at(std::initializer_list<double> xs, double threshold = 50.0) {
    Scenario s;
    s.ego.position_x = -10.0;
    int id = 1;
    for (double x : xs) {
        Vehicle v;
        v.id = id++;
        v.position_x = x;
        s.candidates.push_back(v);
    }
    s.environment.visibility_threshold = threshold;
    s.environment.range_horizon = (xs.size() ? *(xs.end() - 1) : 0.0) + threshold + 1.0;
    s.max_helpers = static_cast<int>(s.candidates.size());
    return s;
}

SelectionVector all_of(const Scenario& s) {
    SelectionVector a(s.candidates.size());
    for (auto& b : a.mask) b = 1;
    return a;
}

} // namespace

TEST_CASE("pulse length is the gap or the threshold, whichever is shorter", "[objectives]") {
    Scenario s = scenario_at({100.0, 130.0, 300.0});

    Pulse first = pulse_for(0, s);  // gap 30 < threshold 50
    REQUIRE(first.start == 100.0);
    REQUIRE(first.length == 30.0);

    Scenario wide = scenario_at({100.0, 200.0});
    Pulse bound = pulse_for(0, wide);  // gap 100 > threshold 50
    REQUIRE(bound.start == 100.0);
    REQUIRE(bound.length == 50.0);

    Pulse last = pulse_for(2, s);  // nobody ahead: threshold alone
    REQUIRE(last.start == 300.0);
    REQUIRE(last.length == 50.0);
}

TEST_CASE("pulses agree with direct unit-step evaluation on a fine grid", "[objectives]") {
    Scenario s = scenario_at({100.0, 130.0, 300.0});
    for (std::size_t i = 0; i < s.candidates.size(); ++i) {
        Pulse p = pulse_for(i, s);
        for (double x = p.start - 2.0; x <= p.start + p.length + 2.0; x += 0.125) {
            double direct = oracle::pulse_indicator(x, p.start, p.length);
            double from_bounds = (x >= p.start && x < p.start + p.length) ? 1.0 : 0.0;
            REQUIRE(direct == from_bounds);
        }
    }
}

TEST_CASE("visual range of the empty selection is zero", "[objectives]") {
    Scenario s = scenario_at({100.0, 200.0});
    REQUIRE(visual_range_score(SelectionVector(2), s) == 0.0);
}

TEST_CASE("single pulse from the origin integrates to nearly 1/a", "[objectives]") {
    Scenario s = scenario_at({0.0});
    s.environment.decay_rate = 1.0;
    SelectionVector alpha = SelectionVector::of({0}, 1);
    // exp(-50) of the mass lies beyond the 50 m pulse
    REQUIRE(std::abs(visual_range_score(alpha, s) - 1.0) < 1e-6);
}

TEST_CASE("closed-form range matches trapezoid integration", "[objectives]") {
    Scenario s = scenario_at({20.0, 90.0, 130.0, 250.0});
    s.environment.decay_rate = 0.01;
    SelectionVector alpha = SelectionVector::of({0, 2, 3}, 4);
    double closed = visual_range_score(alpha, s);
    double numeric = oracle::trapezoid_visual_range(alpha, s, 0.01);
    REQUIRE(oracle::close_rel(closed, numeric, 1e-4));
}

TEST_CASE("range contributions add because pulses never overlap", "[objectives]") {
    Scenario s = generate_scenario(11, 8);
    SelectionVector base = SelectionVector::of({1, 4}, 8);
    SelectionVector with = SelectionVector::of({1, 4, 6}, 8);
    SelectionVector alone = SelectionVector::of({6}, 8);
    double gain = visual_range_score(with, s) - visual_range_score(base, s);
    REQUIRE(oracle::close_rel(gain, visual_range_score(alone, s), 1e-12));
}

TEST_CASE("with equal pulse lengths the closer vehicle contributes more", "[objectives]") {
    // gaps 60 and 60 with threshold 50: both pulses have length 50
    Scenario s = scenario_at({40.0, 100.0, 160.0});
    double near = visual_range_score(SelectionVector::of({0}, 3), s);
    double far = visual_range_score(SelectionVector::of({1}, 3), s);
    REQUIRE(pulse_for(0, s).length == pulse_for(1, s).length);
    REQUIRE(near > far);
}

TEST_CASE("adding any vehicle never lowers the visual range", "[objectives]") {
    Scenario s = generate_scenario(23, 10);
    s.max_helpers = 10;
    SelectionVector alpha(10);
    double previous = 0.0;
    for (std::size_t i : {3u, 7u, 1u, 9u, 0u}) {
        alpha.mask[i] = 1;
        double now = visual_range_score(alpha, s);
        REQUIRE(now >= previous);
        previous = now;
    }
}

TEST_CASE("unselected candidates' attributes do not affect the scores", "[objectives]") {
    Scenario s = generate_scenario(29, 6);
    s.max_helpers = 6;
    SelectionVector alpha = SelectionVector::of({0, 3}, 6);
    double f1 = visual_range_score(alpha, s);
    double f2 = motion_blur_score(alpha, s);

    // swap everything but the positions between two unselected candidates
    auto swap_attrs = [](Vehicle& a, Vehicle& b) {
        std::swap(a.speed, b.speed);
        std::swap(a.packet_error_prob, b.packet_error_prob);
        std::swap(a.mean_delay, b.mean_delay);
        std::swap(a.tx_power, b.tx_power);
        std::swap(a.id, b.id);
    };
    swap_attrs(s.candidates[1], s.candidates[4]);

    REQUIRE(visual_range_score(alpha, s) == f1);
    REQUIRE(motion_blur_score(alpha, s) == f2);
}

TEST_CASE("motion blur of parked vehicles is zero", "[objectives]") {
    Scenario s = scenario_at({50.0, 100.0});
    REQUIRE(motion_blur_score(all_of(s), s) == 0.0);
}

TEST_CASE("parallel-plane blur matches the hand-computed value", "[objectives]") {
    // v=10 m/s, exposure 0.01 s, focal 0.004 m, depth 20 m, pitch 4e-6 m
    // -> 10 * 0.01 * 0.004 / (20 * 4e-6) = 5 px
    Scenario s = scenario_at({50.0});
    s.candidates[0].speed = 10.0;
    s.camera.exposure_time = 0.01;
    s.camera.focal_length = 0.004;
    s.camera.depth = 20.0;
    s.camera.pixel_pitch = 4e-6;
    s.camera.motion_angle = 0.0;
    REQUIRE(oracle::close_rel(motion_blur_score(SelectionVector::of({0}, 1), s), 5.0, 1e-12));
}

TEST_CASE("general blur converges to the parallel-plane form as the angle vanishes",
          "[objectives]") {
    Scenario s = scenario_at({50.0});
    s.candidates[0].speed = 17.0;
    double parallel = motion_blur_for(s.candidates[0], s.camera);
    s.camera.motion_angle = 1e-9;
    double tilted = motion_blur_for(s.candidates[0], s.camera);
    REQUIRE(oracle::close_rel(tilted, parallel, 1e-9));
}

TEST_CASE("blur is linear in speed when the plane is parallel", "[objectives]") {
    Scenario s = generate_scenario(4, 5);
    s.camera.motion_angle = 0.0;
    s.max_helpers = 5;
    SelectionVector alpha = all_of(s);
    double base = motion_blur_score(alpha, s);
    for (Vehicle& v : s.candidates) v.speed *= 2.0;
    REQUIRE(motion_blur_score(alpha, s) == 2.0 * base);
}

TEST_CASE("degenerate inputs raise the documented errors", "[objectives]") {
    Scenario s = scenario_at({50.0});
    SelectionVector alpha = SelectionVector::of({0}, 1);

    Scenario bad = s;
    bad.environment.decay_rate = 0.0;
    REQUIRE_THROWS_AS(visual_range_score(alpha, bad), config_error);

    // parked vehicle plus zero depth collapses the blur denominator exactly
    Scenario zero_den = s;
    zero_den.candidates[0].speed = 0.0;
    zero_den.camera.depth = 0.0;
    REQUIRE_THROWS_AS(motion_blur_score(alpha, zero_den), std::domain_error);

    SelectionVector wrong(2);
    REQUIRE_THROWS_AS(visual_range_score(wrong, s), contract_error);

    SelectionVector over = SelectionVector::of({0}, 1);
    Scenario strict = s;
    strict.max_helpers = 0;
    REQUIRE_THROWS_AS(visual_range_score(over, strict), contract_error);
}

TEST_CASE("selected pulses never overlap on a straight road", "[objectives]") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Scenario s = generate_scenario(seed, 10);
        s.max_helpers = 10;
        auto profile = visual_range_profile(all_of(s), s);
        REQUIRE(profile.size() == 10);
        for (std::size_t i = 0; i + 1 < profile.size(); ++i) {
            REQUIRE(profile[i].length >= 0.0);
            REQUIRE(profile[i].start + profile[i].length <= profile[i + 1].start + 1e-12);
        }
    }
}

TEST_CASE("road angle projects pulse starts but not lengths", "[objectives]") {
    Scenario s = scenario_at({100.0, 130.0});
    s.environment.road_angle = 0.3;
    Pulse p = pulse_for(0, s);
    REQUIRE(p.start == 100.0 * std::cos(0.3));
    REQUIRE(p.length == 30.0);
}
