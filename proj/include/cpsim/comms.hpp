#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cpsim/errors.hpp"
#include "cpsim/objectives.hpp"
#include "cpsim/random.hpp"
#include "cpsim/scenario.hpp"

namespace cpsim {

// One Monte-Carlo realization of a vehicle's channel: how often the packet
// had to be sent until it got through, and the per-packet end-to-end delays.
struct ChannelDraw {
    std::uint64_t retransmission_count = 1;  // >= 1
    std::vector<double> delays;              // seconds, all >= 0
};

// Expected number of transmissions of one packet over a channel that drops
// each attempt with probability beta: 1 / (1 - beta). Diverges at beta = 1,
// hence the open upper bound.
inline double expected_retransmissions(double beta) {
    if (!(beta >= 0.0) || beta >= 1.0)
        throw std::domain_error("expected_retransmissions: beta must lie in [0, 1)");
    return 1.0 / (1.0 - beta);
}

// Goodput of one vehicle: per-RB channel rate, discounted by the delivery
// probability and scaled by the number of resource blocks it holds. The
// 180 kHz block width is folded into channel_rate, so rb_count stays a
// dimensionless block count.
inline double effective_throughput(const Vehicle& v, int rb_count, const CommsBudget& b) {
    if (rb_count < 0) throw std::invalid_argument("effective_throughput: rb_count must be >= 0");
    if (rb_count == 0) return 0.0;
    if (v.packet_error_prob >= 1.0 || v.packet_error_prob < 0.0)
        throw std::domain_error("effective_throughput: packet_error_prob must lie in [0, 1)");
    return b.channel_rate * (1.0 - v.packet_error_prob) * static_cast<double>(rb_count);
}

// Aggregate goodput of a selection under a per-candidate RB assignment.
// Assigning blocks to an unselected vehicle is a caller bug.
inline double total_throughput(const SelectionVector& alpha, const std::vector<int>& rb_counts,
                               const CommsBudget& b, const std::vector<Vehicle>& vehicles) {
    if (rb_counts.size() != vehicles.size() || alpha.size() != vehicles.size())
        throw contract_error("total_throughput: per-candidate vector sizes disagree");
    double total = 0.0;
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
        if (!alpha.selected(i)) {
            if (rb_counts[i] != 0)
                throw contract_error("total_throughput: resource blocks assigned to an unselected vehicle");
            continue;
        }
        total += effective_throughput(vehicles[i], rb_counts[i], b);
    }
    return total;
}

// Expected power cost of a selection: each selected vehicle pays its transmit
// power inflated by the retransmission factor 1/(1-beta), normalized by the
// channel rate.
inline double energy_cost(const SelectionVector& alpha, const std::vector<double>& powers,
                          const CommsBudget& b, const std::vector<Vehicle>& vehicles) {
    if (powers.size() != vehicles.size() || alpha.size() != vehicles.size())
        throw contract_error("energy_cost: per-candidate vector sizes disagree");
    double total = 0.0;
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
        if (!alpha.selected(i)) {
            if (powers[i] != 0.0)
                throw contract_error("energy_cost: power assigned to an unselected vehicle");
            continue;
        }
        if (powers[i] < 0.0) throw contract_error("energy_cost: powers must be >= 0");
        double beta = vehicles[i].packet_error_prob;
        if (beta >= 1.0 || beta < 0.0)
            throw std::domain_error("energy_cost: packet_error_prob must lie in [0, 1)");
        total += powers[i] / (b.channel_rate * (1.0 - beta));
    }
    return total;
}

// One end-to-end per-packet delay draw: exponential with the vehicle's mean.
inline double sample_delay(const Vehicle& v, Rng& rng) {
    if (!(v.mean_delay > 0.0)) throw std::domain_error("sample_delay: mean_delay must be > 0");
    return rng.exponential(v.mean_delay);
}

// One realization of the per-packet transmission count (geometric on {1,2,...}
// with success probability 1 - beta).
inline std::uint64_t sample_retransmissions(const Vehicle& v, Rng& rng) {
    return rng.geometric_trials(v.packet_error_prob);
}

// One channel realization: a retransmission count plus a delay sample per
// attempted transmission.
inline ChannelDraw sample_channel(const Vehicle& v, Rng& rng) {
    ChannelDraw draw;
    draw.retransmission_count = sample_retransmissions(v, rng);
    draw.delays.reserve(static_cast<std::size_t>(draw.retransmission_count));
    for (std::uint64_t i = 0; i < draw.retransmission_count; ++i)
        draw.delays.push_back(sample_delay(v, rng));
    return draw;
}

// Mean-delay admission check, inclusive at the threshold.
inline bool meets_delay_constraint(const Vehicle& v, const CommsBudget& b) {
    return v.mean_delay <= b.delay_threshold;
}

// Constant serialization delay of one packet. Available as an add-on for
// callers that model the delay budget; the optimization itself never uses it.
inline double transmission_delay(const CommsBudget& b) {
    return b.packet_length / b.channel_rate;
}

} // namespace cpsim
