#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "cpsim/errors.hpp"
#include "cpsim/scenario.hpp"

namespace cpsim {

// Binary inclusion mask over the scenario's candidates.
struct SelectionVector {
    std::vector<std::uint8_t> mask;  // entries in {0, 1}

    SelectionVector() = default;
    explicit SelectionVector(std::size_t n) : mask(n, 0) {}

    static SelectionVector of(std::initializer_list<std::size_t> indices, std::size_t n) {
        SelectionVector a(n);
        for (std::size_t i : indices) a.mask.at(i) = 1;
        return a;
    }

    int popcount() const {
        int c = 0;
        for (auto b : mask) c += (b != 0);
        return c;
    }

    bool selected(std::size_t i) const { return mask[i] != 0; }
    std::size_t size() const { return mask.size(); }

    friend bool operator==(const SelectionVector& a, const SelectionVector& b) {
        return a.mask == b.mask;
    }
};

// Deterministic tie-break order used across the whole library.
inline bool lex_less(const SelectionVector& a, const SelectionVector& b) {
    return std::lexicographical_compare(a.mask.begin(), a.mask.end(), b.mask.begin(),
                                        b.mask.end());
}

inline void check_selection(const SelectionVector& alpha, const Scenario& s) {
    if (alpha.size() != s.candidates.size())
        throw contract_error("selection mask length does not match candidate count");
    for (auto b : alpha.mask)
        if (b != 0 && b != 1) throw contract_error("selection mask entries must be 0 or 1");
    if (alpha.popcount() > s.max_helpers)
        throw contract_error("selection exceeds the max_helpers bound");
}

// One vehicle's visual-range interval on the road axis.
struct Pulse {
    double start = 0.0;   // meters (projected when the road is angled)
    double length = 0.0;  // meters
};

// Interval a candidate contributes: from its (projected) position until the
// visibility threshold or the next candidate, whichever comes first. The last
// candidate has no one ahead, so the threshold alone limits it.
inline Pulse pulse_for(std::size_t candidate_index, const Scenario& s) {
    if (candidate_index >= s.candidates.size())
        throw contract_error("pulse_for: candidate index out of range");
    const double threshold = s.environment.visibility_threshold;
    const double proj = std::cos(s.environment.road_angle);
    const Vehicle& v = s.candidates[candidate_index];
    double length = threshold;
    if (candidate_index + 1 < s.candidates.size()) {
        double gap = s.candidates[candidate_index + 1].position_x - v.position_x;
        length = std::min(threshold, gap);
    }
    return {v.position_x * proj, length};
}

// Pulses of the selected candidates, in candidate order. With a straight road
// (road_angle = 0) these never overlap because each pulse stops at the next
// candidate's position.
inline std::vector<Pulse> visual_range_profile(const SelectionVector& alpha,
                                               const Scenario& s) {
    check_selection(alpha, s);
    std::vector<Pulse> out;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        if (alpha.selected(i)) out.push_back(pulse_for(i, s));
    return out;
}

// Decay-weighted augmented visual range of a selection: the integral of
// exp(-a x) over every selected pulse, evaluated in closed form per pulse as
// (exp(-a start) - exp(-a (start+length))) / a. Monotone nondecreasing when
// vehicles are added.
inline double visual_range_score(const SelectionVector& alpha, const Scenario& s) {
    check_selection(alpha, s);
    const double a = s.environment.decay_rate;
    if (!(a > 0.0)) throw config_error("visual_range_score: decay_rate must be > 0");
    double total = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (!alpha.selected(i)) continue;
        Pulse p = pulse_for(i, s);
        total += (std::exp(-a * p.start) - std::exp(-a * (p.start + p.length))) / a;
    }
    return total;
}

// Blur displacement in pixels for one vehicle. With the image plane parallel
// to the motion (angle 0) this reduces to speed * exposure * focal / (depth * pitch),
// linear in speed.
inline double motion_blur_for(const Vehicle& v, const CameraModel& c) {
    const double phi = c.motion_angle;
    const double vt = v.speed * c.exposure_time;
    const double numerator =
        vt * (c.focal_length * std::cos(phi) - c.ccd_pixel_size * c.object_start_px * std::sin(phi));
    const double denominator = vt * c.ccd_pixel_size * std::sin(phi) + c.depth * c.pixel_pitch;
    if (denominator == 0.0)
        throw std::domain_error("motion_blur_for: blur denominator is zero");
    return numerator / denominator;
}

// Summed blur score of the selected vehicles (pixels). Larger is worse; the
// sign convention lives in the objective weights, not here.
inline double motion_blur_score(const SelectionVector& alpha, const Scenario& s) {
    check_selection(alpha, s);
    double total = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        if (alpha.selected(i)) total += motion_blur_for(s.candidates[i], s.camera);
    return total;
}

} // namespace cpsim
