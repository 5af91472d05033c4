#include "schelling/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "schelling/errors.hpp"
#include "schelling/moving_distribution.hpp"
#include "schelling/rng.hpp"

namespace schelling {

void ModelParams::validate() const {
    if (types < 2 || types > kMaxTypes) {
        throw ParameterError("number of types must be in 2.." + std::to_string(kMaxTypes));
    }
    if (p.size() != static_cast<std::size_t>(types)) {
        throw ParameterError("expected " + std::to_string(types) + " type frequencies, got " + std::to_string(p.size()));
    }
    for (double pi : p) {
        if (!(pi > 0.0 && pi < 1.0)) {
            throw ParameterError("every type frequency must lie in (0, 1)");
        }
    }
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) {
        throw ParameterError("type frequencies must sum to 1 (sum = " + std::to_string(total) + ")");
    }
}

void ModelParams::validate_for_length(std::size_t length) const {
    validate();
    if (length < 3) {
        throw ParameterError("ring length must be at least 3, got " + std::to_string(length));
    }
    if (horizon.is_finite() && 2 * horizon.h() + 1 > length) {
        throw ParameterError("moving horizon h=" + std::to_string(horizon.h()) + " needs 2h+1 <= L=" +
                             std::to_string(length));
    }
}

RingConfiguration::RingConfiguration(std::vector<Color> colors, int types)
    : colors_(std::move(colors)), counts_(types > 0 ? static_cast<std::size_t>(types) : 0, 0), types_(types) {
    if (types < 2 || types > kMaxTypes) {
        throw ParameterError("number of types must be in 2.." + std::to_string(kMaxTypes));
    }
    if (colors_.size() < 3) {
        throw ParameterError("ring length must be at least 3, got " + std::to_string(colors_.size()));
    }
    for (Color c : colors_) {
        if (c < 1 || c > types) {
            throw ParameterError("color " + std::to_string(c) + " outside 1.." + std::to_string(types));
        }
        ++counts_[c - 1];
    }
}

Color RingConfiguration::at(Site v) const {
    if (v >= colors_.size()) {
        throw std::out_of_range("site " + std::to_string(v) + " outside ring of length " + std::to_string(colors_.size()));
    }
    return colors_[v];
}

bool RingConfiguration::is_monochromatic() const {
    return std::ranges::any_of(counts_, [n = colors_.size()](std::size_t k) { return k == n; });
}

void RingConfiguration::swap_sites(Site v, Site u) {
    if (colors_.at(v) == colors_.at(u)) {
        throw ContractViolation("swap of sites " + std::to_string(v) + " and " + std::to_string(u) +
                                " holding the same color");
    }
    std::swap(colors_[v], colors_[u]);
}

std::string_view to_string(SwapReason reason) {
    switch (reason) {
    case SwapReason::Accepted: return "Accepted";
    case SwapReason::SameType: return "SameType";
    case SwapReason::TargetSatisfied: return "TargetSatisfied";
    case SwapReason::InitiatorWorse: return "InitiatorWorse";
    case SwapReason::TargetWorse: return "TargetWorse";
    case SwapReason::LazyNoStrictGain: return "LazyNoStrictGain";
    case SwapReason::SelfOffset: return "SelfOffset";
    }
    return "Unknown";
}

RingConfiguration initial_configuration(std::size_t length, const ModelParams& params, Rng& rng) {
    params.validate_for_length(length);
    std::vector<double> cumulative(params.p.size());
    std::partial_sum(params.p.begin(), params.p.end(), cumulative.begin());
    std::vector<Color> colors(length);
    for (Color& c : colors) {
        const double x = rng.uniform01();
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end() - 1, x);
        c = static_cast<Color>(1 + (it - cumulative.begin()));
    }
    return RingConfiguration(std::move(colors), params.types);
}

int satisfaction(const RingConfiguration& config, Site v) {
    const Color c = config.at(v);
    const int same = (config[config.left(v)] == c) + (config[config.right(v)] == c);
    return 2 * same - 2;
}

bool is_dissatisfied(const RingConfiguration& config, Site v, int tau) {
    return satisfaction(config, v) <= tau;
}

namespace detail {

SwapVerdict evaluate_swap_unchecked(const RingConfiguration& config, Site v, Site u, const ModelParams& params) {
    SwapVerdict verdict;
    if (u == v) {
        verdict.reason = SwapReason::SelfOffset;
        return verdict;
    }
    const Color cv = config[v];
    const Color cu = config[u];
    if (cv == cu) {
        verdict.reason = SwapReason::SameType;
        return verdict;
    }
    const int sat_v = satisfaction(config, v);
    const int sat_u = satisfaction(config, u);
    if (params.require_target_dissatisfied && sat_u > params.tau) {
        verdict.reason = SwapReason::TargetSatisfied;
        return verdict;
    }
    // Satisfaction of the agent now at x in the exchanged configuration.
    const auto post = [&](Site x) {
        return x == v ? cu : x == u ? cv : config[x];
    };
    const auto post_sat = [&](Site x) {
        const Color c = post(x);
        const int same = (post(config.left(x)) == c) + (post(config.right(x)) == c);
        return 2 * same - 2;
    };
    verdict.delta_initiator = post_sat(u) - sat_v;
    verdict.delta_target = post_sat(v) - sat_u;
    if (verdict.delta_initiator < 0) {
        verdict.reason = SwapReason::InitiatorWorse;
    } else if (verdict.delta_target < 0) {
        verdict.reason = SwapReason::TargetWorse;
    } else if (params.lazy && (verdict.delta_initiator == 0 || verdict.delta_target == 0)) {
        verdict.reason = SwapReason::LazyNoStrictGain;
    } else {
        verdict.accepted = true;
        verdict.reason = SwapReason::Accepted;
    }
    return verdict;
}

} // namespace detail

SwapVerdict evaluate_swap(const RingConfiguration& config, Site v, Site u, const ModelParams& params) {
    if (u >= config.size()) {
        throw std::out_of_range("target site " + std::to_string(u) + " outside ring");
    }
    if (!is_dissatisfied(config, v, params.tau)) {
        throw ContractViolation("initiator at site " + std::to_string(v) + " is not dissatisfied");
    }
    return detail::evaluate_swap_unchecked(config, v, u, params);
}

RingConfiguration apply_swap(const RingConfiguration& config, Site v, Site u) {
    RingConfiguration next = config;
    next.swap_sites(v, u);
    return next;
}

namespace {

void require_compatible(const RingConfiguration& config, const MovingDistribution& mu) {
    if (mu.length() != config.size()) {
        throw ParameterError("moving distribution built for L=" + std::to_string(mu.length()) +
                             " used on a ring of length " + std::to_string(config.size()));
    }
}

// Calls visit(v, u) for each accepted request with positive probability until it returns false.
template <class Visit>
void scan_admissible(const RingConfiguration& config, const MovingDistribution& mu, const ModelParams& params,
                     Visit&& visit) {
    require_compatible(config, mu);
    const std::size_t n = config.size();
    std::vector<Site> dissatisfied;
    for (Site v = 0; v < n; ++v) {
        if (satisfaction(config, v) <= params.tau) dissatisfied.push_back(v);
    }
    // Accepted targets are dissatisfied themselves, so with a wide support it is
    // cheaper to enumerate them directly.
    const bool by_target = params.require_target_dissatisfied && dissatisfied.size() < mu.support().size();
    for (Site v : dissatisfied) {
        if (by_target) {
            for (Site u : dissatisfied) {
                if (mu.pmf((u + n - v) % n) <= 0.0) continue;
                if (detail::evaluate_swap_unchecked(config, v, u, params).accepted && !visit(v, u)) return;
            }
        } else {
            for (std::size_t q : mu.support()) {
                const Site u = (v + q) % n;
                if (detail::evaluate_swap_unchecked(config, v, u, params).accepted && !visit(v, u)) return;
            }
        }
    }
}

} // namespace

std::vector<std::pair<Site, Site>> admissible_swaps(const RingConfiguration& config, const MovingDistribution& mu,
                                                    const ModelParams& params) {
    std::vector<std::pair<Site, Site>> pairs;
    scan_admissible(config, mu, params, [&](Site v, Site u) {
        pairs.emplace_back(v, u);
        return true;
    });
    std::ranges::sort(pairs);
    return pairs;
}

bool is_absorbing(const RingConfiguration& config, const MovingDistribution& mu, const ModelParams& params) {
    bool found = false;
    scan_admissible(config, mu, params, [&](Site, Site) {
        found = true;
        return false;
    });
    return !found;
}

std::size_t separator_count(const RingConfiguration& config) {
    std::size_t count = 0;
    for (Site v = 0; v < config.size(); ++v) {
        count += config[v] != config[config.right(v)];
    }
    return count;
}

} // namespace schelling
