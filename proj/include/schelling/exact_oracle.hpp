#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "schelling/model.hpp"
#include "schelling/moving_distribution.hpp"

namespace schelling::exact {

/// Default bound on c^L.
inline constexpr std::size_t kDefaultCapacity = 2'000'000;

using StateIndex = std::uint32_t;

/// Base-c code of a configuration, site 0 least significant, color k stored as digit k-1.
class StateCodec {
public:
    /// Throws CapacityError when c^L exceeds `capacity`.
    StateCodec(std::size_t length, int types, std::size_t capacity = kDefaultCapacity);

    std::size_t length() const { return length_; }
    int types() const { return types_; }
    std::size_t state_count() const { return count_; }

    StateIndex encode(const RingConfiguration& config) const;
    RingConfiguration decode(StateIndex code) const;
    void decode_into(StateIndex code, std::vector<Color>& colors) const;

private:
    std::size_t length_;
    int types_;
    std::size_t count_;
};

/// Sparse CTMC generator over all c^L configurations. Off-diagonal rates are
/// stored per row in CSR form; the diagonal is minus the exit rate.
struct GeneratorMatrix {
    StateCodec codec;
    std::vector<std::size_t> row_start;
    std::vector<StateIndex> target;
    std::vector<double> rate;
    std::vector<double> exit_rate;

    std::size_t dimension() const { return exit_rate.size(); }
    double diagonal(StateIndex s) const { return -exit_rate[s]; }
    /// Off-diagonal entry s -> s2 (0 if absent).
    double entry(StateIndex s, StateIndex s2) const;
};

/// Builds the generator: rate(s -> s') sums mu(q) over dissatisfied sites v of
/// s and offsets q whose accepted request (v, v+q) turns s into s'. Rows are
/// built in parallel over state ranges (`threads` = 0 uses all cores).
GeneratorMatrix build_generator(std::size_t length, const ModelParams& params, const MovingDistribution& mu,
                                std::size_t capacity = kDefaultCapacity, unsigned threads = 0);

/// States with no outgoing rate, ascending.
std::vector<StateIndex> absorbing_states(const GeneratorMatrix& g);

/// Law of the initial configuration: independent colors with law p.
std::vector<double> product_law(const StateCodec& codec, std::span<const double> p);

/// Unit mass on one state.
std::vector<double> point_mass(const StateCodec& codec, StateIndex state);

struct TransientResult {
    std::vector<double> distribution;
    /// Poisson mass left out of the truncated uniformization series.
    double truncation_error = 0.0;
    /// Uniformization rate (maximal exit rate).
    double rate = 0.0;
    std::size_t terms = 0;
};

/// pi0 exp(tG) by uniformization, truncated once the Poisson tail is below `tolerance`.
TransientResult transient_distribution(const GeneratorMatrix& g, std::span<const double> pi0, double t,
                                       double tolerance = 1e-10);

struct AbsorptionReport {
    /// Every absorbing state of the generator.
    std::vector<StateIndex> absorbing;
    /// Closed communicating classes of more than one state reachable from pi0.
    std::vector<std::vector<StateIndex>> recurrent_classes;
    /// Probability of ending in each absorbing state (listed when positive).
    std::vector<std::pair<StateIndex, double>> hitting;
    /// Probability of ending in each entry of recurrent_classes.
    std::vector<double> class_hitting;
    bool absorption_certain = true;
    /// Expected absorption time; empty when absorption is not certain.
    std::optional<double> expected_time;
};

/// Reachability, closed-class detection (Tarjan SCC on the jump graph) and a
/// linear solve on the transient block for hitting probabilities and the
/// expected absorption time.
AbsorptionReport absorption_analysis(const GeneratorMatrix& g, std::span<const double> pi0);

/// Strongly connected components of the jump graph restricted to `states`;
/// helper exposed for tests. Each component is sorted.
std::vector<std::vector<StateIndex>> strongly_connected_components(const GeneratorMatrix& g,
                                                                   std::span<const StateIndex> states);

double total_variation(std::span<const double> a, std::span<const double> b);

struct ComparisonReport {
    double tv = 0.0;
    double truncation_error = 0.0;
    double t = 0.0;
    std::size_t replicates = 0;
    std::vector<double> exact;
    std::vector<double> empirical;
};

/// Total-variation distance between the end states of `n_reps` simulated
/// trajectories (i.i.d. start with law p) and the exact transient law at t.
/// `engine_params`, when given, drives the simulator instead of `params`
/// (used to check that a deliberately wrong engine is caught).
ComparisonReport mc_vs_exact(std::size_t length, const ModelParams& params, const MovingDistribution& mu, double t,
                             std::size_t n_reps, std::uint64_t seed,
                             const std::optional<ModelParams>& engine_params = std::nullopt,
                             std::size_t capacity = kDefaultCapacity);

/// {absorbing, recurrent_classes, hitting, expected_time, tv, truncation_error, ...}
nlohmann::ordered_json report_json(const GeneratorMatrix& g, const AbsorptionReport& report,
                                   std::optional<double> tv = std::nullopt,
                                   std::optional<double> truncation_error = std::nullopt);

} // namespace schelling::exact
