#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace schelling {

class MovingDistribution;
class Rng;

/// Agent type, 1..c.
using Color = std::uint8_t;
using Site = std::size_t;

inline constexpr int kMaxTypes = 255;

/// Moving horizon: the largest ring distance a swap request may reach, or the
/// whole ring.
class Horizon {
public:
    static Horizon finite(std::size_t h) { return Horizon(false, h); }
    static Horizon full_ring() { return Horizon(true, 0); }

    bool is_full_ring() const { return full_; }
    bool is_finite() const { return !full_; }
    /// Only meaningful for finite horizons.
    std::size_t h() const { return h_; }

    bool operator==(const Horizon&) const = default;

private:
    Horizon(bool full, std::size_t h) : full_(full), h_(h) {}
    bool full_;
    std::size_t h_;
};

struct ModelParams {
    int types = 2;
    std::vector<double> p{0.5, 0.5};
    /// An agent is dissatisfied iff its satisfaction is <= tau.
    int tau = 0;
    /// Lazy agents only swap on a strict improvement.
    bool lazy = false;
    Horizon horizon = Horizon::finite(1);
    /// Compatibility switch: when false, the target of a request need not be
    /// dissatisfied. Off the default path; never used by the acceptance checks.
    bool require_target_dissatisfied = true;

    /// Throws ParameterError on an invalid combination.
    void validate() const;
    /// validate() plus the ring-size dependent checks (L >= 3, 2h+1 <= L).
    void validate_for_length(std::size_t length) const;
};

/// Agent types on a periodic line of `size()` sites, with cached per-type counts.
class RingConfiguration {
public:
    RingConfiguration(std::vector<Color> colors, int types);

    std::size_t size() const { return colors_.size(); }
    int types() const { return types_; }

    Color operator[](Site v) const { return colors_[v]; }
    /// Bounds-checked access; throws std::out_of_range.
    Color at(Site v) const;

    std::span<const Color> colors() const { return colors_; }
    /// counts()[i] is the number of sites holding color i + 1.
    std::span<const std::size_t> counts() const { return counts_; }
    std::size_t count(Color c) const { return counts_[c - 1]; }

    Site left(Site v) const { return v == 0 ? colors_.size() - 1 : v - 1; }
    Site right(Site v) const { return v + 1 == colors_.size() ? 0 : v + 1; }
    Site wrap(std::size_t v) const { return v % colors_.size(); }

    bool is_monochromatic() const;

    /// Exchanges the agents at v and u in place. Throws ContractViolation when
    /// both hold the same color.
    void swap_sites(Site v, Site u);

    bool operator==(const RingConfiguration& other) const {
        return types_ == other.types_ && colors_ == other.colors_;
    }

private:
    std::vector<Color> colors_;
    std::vector<std::size_t> counts_;
    int types_;
};

enum class SwapReason : std::uint8_t {
    Accepted,
    SameType,
    TargetSatisfied,
    InitiatorWorse,
    TargetWorse,
    LazyNoStrictGain,
    SelfOffset,
};

inline constexpr std::size_t kSwapReasonCount = 7;

std::string_view to_string(SwapReason reason);

struct SwapVerdict {
    bool accepted = false;
    SwapReason reason = SwapReason::SelfOffset;
    /// Post-swap minus pre-swap satisfaction of each participant.
    int delta_initiator = 0;
    int delta_target = 0;
};

/// i.i.d. colors with law `params.p`.
RingConfiguration initial_configuration(std::size_t length, const ModelParams& params, Rng& rng);

/// Same-colored minus differently-colored ring neighbors of v: one of -2, 0, 2.
/// Throws std::out_of_range for v >= L.
int satisfaction(const RingConfiguration& config, Site v);

bool is_dissatisfied(const RingConfiguration& config, Site v, int tau);

/// Verdict for the agent at v requesting a swap with the agent at u.
/// Throws ContractViolation when v is not dissatisfied.
SwapVerdict evaluate_swap(const RingConfiguration& config, Site v, Site u, const ModelParams& params);

RingConfiguration apply_swap(const RingConfiguration& config, Site v, Site u);

/// All ordered pairs (v, v + q) with mu(q) > 0 whose request is accepted.
std::vector<std::pair<Site, Site>> admissible_swaps(const RingConfiguration& config,
                                                    const MovingDistribution& mu,
                                                    const ModelParams& params);

/// True iff no request with positive probability can change the configuration.
bool is_absorbing(const RingConfiguration& config, const MovingDistribution& mu, const ModelParams& params);

/// Number of edges <v, v+1> with unlike endpoints.
std::size_t separator_count(const RingConfiguration& config);

namespace detail {

/// evaluate_swap without the initiator precondition check.
SwapVerdict evaluate_swap_unchecked(const RingConfiguration& config, Site v, Site u, const ModelParams& params);

} // namespace detail

} // namespace schelling
