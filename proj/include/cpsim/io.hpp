#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cpsim/errors.hpp"
#include "cpsim/fusion.hpp"
#include "cpsim/scenario.hpp"

namespace cpsim {

// Shortest representation that parses back to the identical double, so every
// text format round-trips bit for bit.
inline std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw io_error("format_double: conversion failed");
    return std::string(buf, end);
}

inline double parse_double(std::string_view text, const std::string& context) {
    double v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw io_error("expected a number for " + context + ", got '" + std::string(text) + "'");
    return v;
}

inline long long parse_int(std::string_view text, const std::string& context) {
    long long v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw io_error("expected an integer for " + context + ", got '" + std::string(text) + "'");
    return v;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == sep) {
            out.emplace_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scenario files: one `key = value` pair per line, dotted paths for nesting,
// `candidates.<i>.<field>` for the list. Blank lines and `#` comments are
// ignored. Unknown or missing keys are errors so silent drift is impossible.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_vehicle(std::ostream& os, const std::string& prefix, const Vehicle& v) {
    os << prefix << ".id = " << v.id << '\n';
    os << prefix << ".position_x = " << format_double(v.position_x) << '\n';
    os << prefix << ".position_y = " << format_double(v.position_y) << '\n';
    os << prefix << ".speed = " << format_double(v.speed) << '\n';
    os << prefix << ".packet_error_prob = " << format_double(v.packet_error_prob) << '\n';
    os << prefix << ".mean_delay = " << format_double(v.mean_delay) << '\n';
    os << prefix << ".tx_power = " << format_double(v.tx_power) << '\n';
}

} // namespace detail

inline void write_scenario(std::ostream& os, const Scenario& s) {
    os << "# cpsim scenario\n";
    os << "format_version = 1\n";
    os << "max_helpers = " << s.max_helpers << '\n';
    detail::write_vehicle(os, "ego", s.ego);
    os << "camera.exposure_time = " << format_double(s.camera.exposure_time) << '\n';
    os << "camera.focal_length = " << format_double(s.camera.focal_length) << '\n';
    os << "camera.ccd_pixel_size = " << format_double(s.camera.ccd_pixel_size) << '\n';
    os << "camera.object_start_px = " << format_double(s.camera.object_start_px) << '\n';
    os << "camera.motion_angle = " << format_double(s.camera.motion_angle) << '\n';
    os << "camera.depth = " << format_double(s.camera.depth) << '\n';
    os << "camera.pixel_pitch = " << format_double(s.camera.pixel_pitch) << '\n';
    os << "environment.visibility_threshold = "
       << format_double(s.environment.visibility_threshold) << '\n';
    os << "environment.road_angle = " << format_double(s.environment.road_angle) << '\n';
    os << "environment.decay_rate = " << format_double(s.environment.decay_rate) << '\n';
    os << "environment.range_horizon = " << format_double(s.environment.range_horizon) << '\n';
    os << "comms.channel_rate = " << format_double(s.comms.channel_rate) << '\n';
    os << "comms.total_rb_count = " << s.comms.total_rb_count << '\n';
    os << "comms.rb_width = " << format_double(s.comms.rb_width) << '\n';
    os << "comms.total_power = " << format_double(s.comms.total_power) << '\n';
    os << "comms.delay_threshold = " << format_double(s.comms.delay_threshold) << '\n';
    os << "comms.packet_length = " << format_double(s.comms.packet_length) << '\n';
    os << "candidates.count = " << s.candidates.size() << '\n';
    for (std::size_t i = 0; i < s.candidates.size(); ++i)
        detail::write_vehicle(os, "candidates." + std::to_string(i), s.candidates[i]);
}

inline void save_scenario(const std::string& path, const Scenario& s) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open scenario file for writing: " + path);
    write_scenario(os, s);
    if (!os) throw io_error("failed while writing scenario file: " + path);
}

inline Scenario read_scenario(std::istream& is, const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        std::size_t eq = sv.find('=');
        if (eq == std::string_view::npos)
            throw io_error(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        std::string key(trim(sv.substr(0, eq)));
        std::string value(trim(sv.substr(eq + 1)));
        if (!kv.emplace(key, value).second)
            throw io_error(origin + ": duplicate key '" + key + "'");
    }

    auto take = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw io_error(origin + ": missing key '" + key + "'");
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto take_double = [&](const std::string& key) { return parse_double(take(key), key); };
    auto take_int = [&](const std::string& key) {
        return static_cast<int>(parse_int(take(key), key));
    };

    if (take_int("format_version") != 1) throw io_error(origin + ": unsupported format_version");

    auto read_vehicle = [&](const std::string& prefix) {
        Vehicle v;
        v.id = take_int(prefix + ".id");
        v.position_x = take_double(prefix + ".position_x");
        v.position_y = take_double(prefix + ".position_y");
        v.speed = take_double(prefix + ".speed");
        v.packet_error_prob = take_double(prefix + ".packet_error_prob");
        v.mean_delay = take_double(prefix + ".mean_delay");
        v.tx_power = take_double(prefix + ".tx_power");
        return v;
    };

    Scenario s;
    s.max_helpers = take_int("max_helpers");
    s.ego = read_vehicle("ego");
    s.camera.exposure_time = take_double("camera.exposure_time");
    s.camera.focal_length = take_double("camera.focal_length");
    s.camera.ccd_pixel_size = take_double("camera.ccd_pixel_size");
    s.camera.object_start_px = take_double("camera.object_start_px");
    s.camera.motion_angle = take_double("camera.motion_angle");
    s.camera.depth = take_double("camera.depth");
    s.camera.pixel_pitch = take_double("camera.pixel_pitch");
    s.environment.visibility_threshold = take_double("environment.visibility_threshold");
    s.environment.road_angle = take_double("environment.road_angle");
    s.environment.decay_rate = take_double("environment.decay_rate");
    s.environment.range_horizon = take_double("environment.range_horizon");
    s.comms.channel_rate = take_double("comms.channel_rate");
    s.comms.total_rb_count = take_int("comms.total_rb_count");
    s.comms.rb_width = take_double("comms.rb_width");
    s.comms.total_power = take_double("comms.total_power");
    s.comms.delay_threshold = take_double("comms.delay_threshold");
    s.comms.packet_length = take_double("comms.packet_length");
    int count = take_int("candidates.count");
    if (count < 0) throw io_error(origin + ": candidates.count must be >= 0");
    s.candidates.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        s.candidates.push_back(read_vehicle("candidates." + std::to_string(i)));

    if (!kv.empty()) throw io_error(origin + ": unknown key '" + kv.begin()->first + "'");
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open scenario file: " + path);
    return read_scenario(is, path);
}

// ---------------------------------------------------------------------------
// Detection sets: line-delimited, one box per line,
//   vehicle_id kind object_id x_min y_min x_max y_max confidence
// with kind `gt` or `pred`. A file may hold the views of several vehicles.
// ---------------------------------------------------------------------------

inline void write_detection_sets(std::ostream& os, const std::vector<DetectionSet>& sets) {
    os << "# cpsim detections: vehicle_id kind object_id x_min y_min x_max y_max confidence\n";
    for (const DetectionSet& set : sets) {
        auto write_box = [&](const char* kind, const BoundingBox& b) {
            os << set.vehicle_id << ' ' << kind << ' ' << b.object_id << ' '
               << format_double(b.x_min) << ' ' << format_double(b.y_min) << ' '
               << format_double(b.x_max) << ' ' << format_double(b.y_max) << ' '
               << format_double(b.confidence) << '\n';
        };
        for (const BoundingBox& b : set.ground_truth) write_box("gt", b);
        for (const BoundingBox& b : set.predictions) write_box("pred", b);
    }
}

inline void save_detection_sets(const std::string& path, const std::vector<DetectionSet>& sets) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open detections file for writing: " + path);
    write_detection_sets(os, sets);
    if (!os) throw io_error("failed while writing detections file: " + path);
}

inline std::vector<DetectionSet> read_detection_sets(std::istream& is,
                                                     const std::string& origin) {
    std::vector<DetectionSet> sets;
    auto set_for = [&](int vehicle_id) -> DetectionSet& {
        for (DetectionSet& s : sets)
            if (s.vehicle_id == vehicle_id) return s;
        sets.emplace_back();
        sets.back().vehicle_id = vehicle_id;
        return sets.back();
    };

    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        std::istringstream fields{std::string(sv)};
        std::string kind;
        int vehicle_id = 0, object_id = 0;
        std::string xmin, ymin, xmax, ymax, conf;
        if (!(fields >> vehicle_id >> kind >> object_id >> xmin >> ymin >> xmax >> ymax >> conf))
            throw io_error(origin + ":" + std::to_string(line_no) + ": malformed detection line");
        std::string extra;
        if (fields >> extra)
            throw io_error(origin + ":" + std::to_string(line_no) + ": trailing fields");
        BoundingBox b;
        b.object_id = object_id;
        b.x_min = parse_double(xmin, "x_min");
        b.y_min = parse_double(ymin, "y_min");
        b.x_max = parse_double(xmax, "x_max");
        b.y_max = parse_double(ymax, "y_max");
        b.confidence = parse_double(conf, "confidence");
        if (b.degenerate())
            throw io_error(origin + ":" + std::to_string(line_no) + ": degenerate box");
        DetectionSet& set = set_for(vehicle_id);
        if (kind == "gt")
            set.ground_truth.push_back(b);
        else if (kind == "pred")
            set.predictions.push_back(b);
        else
            throw io_error(origin + ":" + std::to_string(line_no) + ": kind must be gt or pred");
    }
    return sets;
}

inline std::vector<DetectionSet> load_detection_sets(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open detections file: " + path);
    return read_detection_sets(is, path);
}

} // namespace cpsim
