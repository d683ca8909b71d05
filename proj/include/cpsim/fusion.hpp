#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "cpsim/errors.hpp"
#include "cpsim/random.hpp"
#include "cpsim/scenario.hpp"

namespace cpsim {

// Axis-aligned box in image pixels. object_id links a prediction to its
// ground-truth object in synthetic data; kFalsePositive marks spurious boxes.
struct BoundingBox {
    static constexpr int kFalsePositive = -1;

    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;
    double confidence = 1.0;
    int object_id = kFalsePositive;

    double area() const { return (x_max - x_min) * (y_max - y_min); }
    bool degenerate() const { return !(x_min < x_max) || !(y_min < y_max); }
};

inline double iou(const BoundingBox& a, const BoundingBox& b) {
    if (a.degenerate() || b.degenerate())
        throw std::invalid_argument("iou: boxes must satisfy x_min < x_max and y_min < y_max");
    double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

// One vehicle's view: the shared ground truth plus its predicted boxes.
struct DetectionSet {
    int vehicle_id = 0;
    std::vector<BoundingBox> ground_truth;  // object_id >= 0, unique per set
    std::vector<BoundingBox> predictions;   // object_id >= 0 or kFalsePositive
};

struct FusedObject {
    int object_id = 0;
    double iou = 0.0;
};

// Per-ground-truth-object fused scores, in ground-truth order. The surviving
// prediction count backs precision: one fused box per covered object plus
// every false positive carried by the inputs.
struct FusionResult {
    std::vector<FusedObject> per_object;
    int surviving_predictions = 0;
};

namespace detail {

inline double best_iou_for(const BoundingBox& gt, const DetectionSet& set, bool* covered) {
    double best = 0.0;
    for (const BoundingBox& p : set.predictions) {
        if (p.object_id != gt.object_id) continue;
        if (covered) *covered = true;
        best = std::max(best, iou(gt, p));
    }
    return best;
}

// predictions that link to no ground-truth object (the sentinel, or an id the
// set does not know) count as false positives
inline int false_positive_count(const DetectionSet& set) {
    int n = 0;
    for (const BoundingBox& p : set.predictions) {
        bool linked = false;
        if (p.object_id != BoundingBox::kFalsePositive)
            for (const BoundingBox& g : set.ground_truth)
                if (g.object_id == p.object_id) {
                    linked = true;
                    break;
                }
        if (!linked) ++n;
    }
    return n;
}

inline void check_same_ground_truth(const DetectionSet& a, const DetectionSet& b) {
    auto ids = [](const DetectionSet& s) {
        std::vector<int> v;
        v.reserve(s.ground_truth.size());
        for (const BoundingBox& g : s.ground_truth) v.push_back(g.object_id);
        std::sort(v.begin(), v.end());
        return v;
    };
    if (ids(a) != ids(b))
        throw contract_error("fusion requires both views to share the same ground-truth object ids");
}

} // namespace detail

// Scores of a single view on its own: per object the best prediction IoU;
// every prediction of the set counts as surviving.
inline FusionResult evaluate_set(const DetectionSet& set) {
    FusionResult r;
    r.per_object.reserve(set.ground_truth.size());
    for (const BoundingBox& gt : set.ground_truth)
        r.per_object.push_back({gt.object_id, detail::best_iou_for(gt, set, nullptr)});
    r.surviving_predictions = static_cast<int>(set.predictions.size());
    return r;
}

// Late fusion of two views over a common ground truth: each object keeps the
// better of the two per-view best IoUs. Objects missed by both score zero.
inline FusionResult fuse_iou_max(const DetectionSet& ego, const DetectionSet& helper) {
    detail::check_same_ground_truth(ego, helper);
    FusionResult r;
    r.per_object.reserve(ego.ground_truth.size());
    int covered_objects = 0;
    for (const BoundingBox& gt : ego.ground_truth) {
        bool covered = false;
        double best = std::max(detail::best_iou_for(gt, ego, &covered),
                               detail::best_iou_for(gt, helper, &covered));
        covered_objects += covered ? 1 : 0;
        r.per_object.push_back({gt.object_id, best});
    }
    r.surviving_predictions =
        covered_objects + detail::false_positive_count(ego) + detail::false_positive_count(helper);
    return r;
}

// Fold of fuse_iou_max over any number of helpers (zero helpers reduces to
// evaluating the ego view alone).
inline FusionResult fuse_many(const DetectionSet& ego, std::span<const DetectionSet> helpers) {
    for (const DetectionSet& h : helpers) detail::check_same_ground_truth(ego, h);
    FusionResult r;
    r.per_object.reserve(ego.ground_truth.size());
    int covered_objects = 0;
    for (const BoundingBox& gt : ego.ground_truth) {
        bool covered = false;
        double best = detail::best_iou_for(gt, ego, &covered);
        for (const DetectionSet& h : helpers)
            best = std::max(best, detail::best_iou_for(gt, h, &covered));
        covered_objects += covered ? 1 : 0;
        r.per_object.push_back({gt.object_id, best});
    }
    r.surviving_predictions = covered_objects + detail::false_positive_count(ego);
    for (const DetectionSet& h : helpers)
        r.surviving_predictions += detail::false_positive_count(h);
    if (helpers.empty()) r.surviving_predictions = static_cast<int>(ego.predictions.size());
    return r;
}

// Deployment-style variant that needs no ground truth at decision time: per
// object keep the box with the higher confidence, then score it.
inline FusionResult fuse_confidence_max(const DetectionSet& ego, const DetectionSet& helper) {
    detail::check_same_ground_truth(ego, helper);
    FusionResult r;
    int covered_objects = 0;
    for (const BoundingBox& gt : ego.ground_truth) {
        const BoundingBox* chosen = nullptr;
        for (const DetectionSet* set : {&ego, &helper})
            for (const BoundingBox& p : set->predictions)
                if (p.object_id == gt.object_id && (!chosen || p.confidence > chosen->confidence))
                    chosen = &p;
        covered_objects += chosen ? 1 : 0;
        r.per_object.push_back({gt.object_id, chosen ? iou(gt, *chosen) : 0.0});
    }
    r.surviving_predictions =
        covered_objects + detail::false_positive_count(ego) + detail::false_positive_count(helper);
    return r;
}

// Channel-loss model at detection granularity: each predicted box is dropped
// independently with probability beta (one uniform draw per box, in order);
// the ground truth is untouched.
inline DetectionSet degrade(const DetectionSet& set, double beta, Rng& rng) {
    if (!(beta >= 0.0) || beta >= 1.0)
        throw std::domain_error("degrade: beta must lie in [0, 1)");
    DetectionSet out;
    out.vehicle_id = set.vehicle_id;
    out.ground_truth = set.ground_truth;
    out.predictions.reserve(set.predictions.size());
    for (const BoundingBox& p : set.predictions)
        if (rng.uniform01() >= beta) out.predictions.push_back(p);
    return out;
}

struct DetectionMetrics {
    double mean_iou = 0.0;
    double recall = 0.0;
    double precision = 0.0;
    double f1_score = 0.0;
};

inline DetectionMetrics metrics(const FusionResult& fused, double iou_threshold) {
    if (!(iou_threshold > 0.0) || !(iou_threshold < 1.0))
        throw std::invalid_argument("metrics: iou_threshold must lie in (0, 1)");
    if (fused.per_object.empty())
        throw std::domain_error("metrics: undefined without ground-truth objects");

    DetectionMetrics m;
    int true_positives = 0;
    for (const FusedObject& o : fused.per_object) {
        m.mean_iou += o.iou;
        if (o.iou >= iou_threshold) ++true_positives;
    }
    m.mean_iou /= static_cast<double>(fused.per_object.size());
    m.recall = static_cast<double>(true_positives) / static_cast<double>(fused.per_object.size());
    m.precision = fused.surviving_predictions > 0
                      ? static_cast<double>(true_positives) /
                            static_cast<double>(fused.surviving_predictions)
                      : 0.0;
    m.f1_score = (m.precision + m.recall) > 0.0
                     ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                     : 0.0;
    return m;
}

// Greedy highest-IoU matching for imported data that lacks object links:
// assigns each prediction to at most one ground-truth object, best pairs first.
inline DetectionSet assign_object_ids_by_iou(const DetectionSet& set) {
    DetectionSet out = set;
    struct Pair {
        double overlap;
        std::size_t pred;
        std::size_t gt;
    };
    std::vector<Pair> pairs;
    for (std::size_t pi = 0; pi < out.predictions.size(); ++pi)
        for (std::size_t gi = 0; gi < out.ground_truth.size(); ++gi) {
            double v = iou(out.predictions[pi], out.ground_truth[gi]);
            if (v > 0.0) pairs.push_back({v, pi, gi});
        }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return a.overlap > b.overlap;
    });
    std::vector<bool> pred_used(out.predictions.size(), false);
    std::vector<bool> gt_used(out.ground_truth.size(), false);
    for (auto& p : out.predictions) p.object_id = BoundingBox::kFalsePositive;
    for (const Pair& pr : pairs) {
        if (pred_used[pr.pred] || gt_used[pr.gt]) continue;
        pred_used[pr.pred] = true;
        gt_used[pr.gt] = true;
        out.predictions[pr.pred].object_id = out.ground_truth[pr.gt].object_id;
    }
    return out;
}

// Synthetic detection fixtures: pedestrians along the road, one shared ground
// truth, and per-vehicle predictions. A vehicle can detect an object only
// inside its fog-limited forward window; within the window the achievable IoU
// falls off with distance and with the vehicle's motion blur. The prediction
// box is the ground truth shifted horizontally by exactly the amount that
// realizes the target IoU, so fixture quality is controlled, not approximated.
struct SyntheticDetectionConfig {
    int objects = 12;
    double box_width = 40.0;        // px
    double box_height = 80.0;       // px
    double quality_ceiling = 0.95;  // best reachable IoU at distance zero
    double miss_floor = 0.10;       // detections below this quality are dropped
    double blur_attenuation = 0.05; // quality divisor per pixel of blur
    double fp_prob = 0.15;          // chance of one false positive per view
    double noise = 0.05;            // relative jitter on the target quality
    // remaining quality per vehicle standing between the camera and the
    // object: 1 means free sight past traffic, 0 means a hard block at the
    // first vehicle ahead (the visual-range pulse geometry)
    double occlusion_attenuation = 0.7;
    // objects placed with density exp(-decay_rate * x) instead of uniformly,
    // mirroring the proximity weighting of the selection stage
    bool near_bias = false;
};

// Returns views indexed [0] = ego, [1..N] = candidates, all sharing the same
// ground-truth boxes and object ids.
inline std::vector<DetectionSet> make_synthetic_detections(const Scenario& s,
                                                           const SyntheticDetectionConfig& cfg,
                                                           std::uint64_t seed) {
    if (cfg.objects < 1) throw config_error("make_synthetic_detections: objects must be >= 1");

    const double threshold = s.environment.visibility_threshold;
    const double road_start = s.ego.position_x + 1.0;
    const double road_end = s.candidates.back().position_x + threshold;
    const double decay = s.environment.decay_rate;
    Rng world_rng(seed, 0);

    std::vector<double> object_x(static_cast<std::size_t>(cfg.objects));
    std::vector<BoundingBox> ground_truth(static_cast<std::size_t>(cfg.objects));
    for (int k = 0; k < cfg.objects; ++k) {
        double x;
        if (cfg.near_bias) {
            // inverse-CDF draw from the truncated exponential over the road
            double span_mass = 1.0 - std::exp(-decay * (road_end - road_start));
            x = road_start - std::log1p(-world_rng.uniform01() * span_mass) / decay;
        } else {
            x = world_rng.uniform(road_start, road_end);
        }
        object_x[static_cast<std::size_t>(k)] = x;
        BoundingBox gt;
        gt.x_min = 200.0 * k;
        gt.y_min = 0.0;
        gt.x_max = gt.x_min + cfg.box_width;
        gt.y_max = cfg.box_height;
        gt.confidence = 1.0;
        gt.object_id = k;
        ground_truth[static_cast<std::size_t>(k)] = gt;
    }

    // vehicles standing between a camera at x and an object d meters ahead;
    // each one costs a factor of occlusion_attenuation
    auto blockers_between = [&](double x, double object) {
        int blockers = 0;
        for (const Vehicle& c : s.candidates)
            if (c.position_x > x && c.position_x < object) ++blockers;
        return blockers;
    };

    auto view_for = [&](const Vehicle& v, std::uint64_t stream) {
        Rng rng(seed, stream);
        DetectionSet set;
        set.vehicle_id = v.id;
        set.ground_truth = ground_truth;
        const double blur =
            v.speed * s.camera.exposure_time * s.camera.focal_length /
            (s.camera.depth * s.camera.pixel_pitch);
        for (int k = 0; k < cfg.objects; ++k) {
            double distance = object_x[static_cast<std::size_t>(k)] - v.position_x;
            double jitter = 1.0 + cfg.noise * (2.0 * rng.uniform01() - 1.0);
            if (distance < 0.0 || distance >= threshold) continue;  // outside the view
            double quality = cfg.quality_ceiling * std::exp(-distance / threshold) /
                             (1.0 + cfg.blur_attenuation * blur);
            quality *= std::pow(cfg.occlusion_attenuation,
                                blockers_between(v.position_x,
                                                 object_x[static_cast<std::size_t>(k)]));
            quality *= jitter;
            quality = std::clamp(quality, 0.0, 0.99);
            if (quality < cfg.miss_floor) continue;
            const BoundingBox& gt = ground_truth[static_cast<std::size_t>(k)];
            double shift = cfg.box_width * (1.0 - quality) / (1.0 + quality);
            BoundingBox pred = gt;
            pred.x_min += shift;
            pred.x_max += shift;
            pred.confidence = quality;
            pred.object_id = k;
            set.predictions.push_back(pred);
        }
        if (rng.uniform01() < cfg.fp_prob) {
            BoundingBox fp;
            fp.x_min = 200.0 * cfg.objects + 50.0 * v.id;
            fp.y_min = 0.0;
            fp.x_max = fp.x_min + cfg.box_width;
            fp.y_max = cfg.box_height;
            fp.confidence = 0.3;
            fp.object_id = BoundingBox::kFalsePositive;
            set.predictions.push_back(fp);
        }
        return set;
    };

    std::vector<DetectionSet> views;
    views.reserve(s.candidates.size() + 1);
    views.push_back(view_for(s.ego, 1));
    for (std::size_t i = 0; i < s.candidates.size(); ++i)
        views.push_back(view_for(s.candidates[i], 2 + i));
    return views;
}

} // namespace cpsim
