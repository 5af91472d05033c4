#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "schelling/model.hpp"
#include "schelling/moving_distribution.hpp"
#include "schelling/rng.hpp"

namespace schelling {

/// Set of sites with O(1) insert, erase, membership and uniform draw.
class IndexedSiteSet {
public:
    explicit IndexedSiteSet(std::size_t capacity = 0) : position_(capacity, kAbsent) {}

    bool contains(Site v) const { return position_[v] != kAbsent; }
    std::size_t size() const { return members_.size(); }
    bool empty() const { return members_.empty(); }
    Site operator[](std::size_t i) const { return members_[i]; }
    std::span<const Site> members() const { return members_; }

    void insert(Site v) {
        if (contains(v)) return;
        position_[v] = members_.size();
        members_.push_back(v);
    }

    void erase(Site v) {
        const std::size_t i = position_[v];
        if (i == kAbsent) return;
        const Site last = members_.back();
        members_[i] = last;
        position_[last] = i;
        members_.pop_back();
        position_[v] = kAbsent;
    }

private:
    static constexpr std::size_t kAbsent = std::numeric_limits<std::size_t>::max();
    std::vector<Site> members_;
    std::vector<std::size_t> position_;
};

/// One clock firing of a dissatisfied site: who asked, whom, and the outcome.
struct EventRecord {
    double time = 0.0;
    Site initiator = 0;
    Site target = 0;
    SwapVerdict verdict;
};

/// Trajectory hook. All callbacks default to no-ops.
class Observer {
public:
    virtual ~Observer() = default;
    virtual void on_start(const RingConfiguration& /*config*/, double /*t*/) {}
    /// Called for every attempt, accepted or denied; `after` is the configuration once the event is applied.
    virtual void on_event(const EventRecord& /*event*/, const RingConfiguration& /*after*/) {}
    /// Scheduled metric sample at time t.
    virtual void on_sample(double /*t*/, const RingConfiguration& /*config*/) {}
    virtual void on_finish(const RingConfiguration& /*config*/, double /*t*/) {}
};

struct StepOutcome {
    enum class Kind { Event, Absorbed, Limited };
    Kind kind = Kind::Event;
    /// Holding time before the event; +inf when absorbed.
    double dt = 0.0;
    EventRecord event;
};

/// Running state of one trajectory of the swap dynamics.
///
/// Only dissatisfied sites are simulated: the next firing happens after an
/// exponential time with rate |dissatisfied| at a uniformly chosen dissatisfied
/// site. Firings at satisfied sites do nothing and are skipped.
class Trajectory {
public:
    Trajectory(RingConfiguration initial, ModelParams params, const MovingDistribution& mu, std::uint64_t seed);
    Trajectory(RingConfiguration initial, ModelParams params, const MovingDistribution& mu, Rng rng);

    /// Advances to the next event, unless it would happen after `t_limit`, in
    /// which case the clock stops at t_limit and nothing changes. The pending
    /// firing time is kept, so stopping at intermediate times does not alter
    /// the random stream.
    StepOutcome step(double t_limit = std::numeric_limits<double>::infinity());

    double time() const { return time_; }
    const RingConfiguration& config() const { return config_; }
    const ModelParams& params() const { return params_; }
    const MovingDistribution& mu() const { return *mu_; }
    const IndexedSiteSet& dissatisfied() const { return dissatisfied_; }

    std::uint64_t attempts() const { return attempts_; }
    std::uint64_t accepted() const { return accepted_; }
    const std::array<std::uint64_t, kSwapReasonCount>& reason_counts() const { return reason_counts_; }
    /// Time of the last accepted swap (0 if none).
    double last_change_time() const { return last_change_time_; }
    std::uint64_t attempts_since_change() const { return attempts_since_change_; }

    /// When on, every event re-derives the dissatisfied set and type counts from
    /// scratch and compares them with the incremental state.
    void set_full_checks(bool on) { full_checks_ = on; }
    /// Throws InvariantViolation if the incremental dissatisfied set is stale.
    void verify_dissatisfied_set() const;

private:
    void refresh(Site v);
    void check_event(const SwapVerdict& verdict, Site v, Site u, const std::array<int, 2>& pre_sat,
                     std::size_t separators_before) const;
    std::size_t local_separators(Site v, Site u) const;

    RingConfiguration config_;
    ModelParams params_;
    const MovingDistribution* mu_;
    Rng rng_;
    IndexedSiteSet dissatisfied_;
    double time_ = 0.0;
    std::optional<double> pending_;
    std::uint64_t attempts_ = 0;
    std::uint64_t accepted_ = 0;
    std::uint64_t attempts_since_change_ = 0;
    std::array<std::uint64_t, kSwapReasonCount> reason_counts_{};
    double last_change_time_ = 0.0;
    bool full_checks_ = false;
};

struct RunOptions {
    double t_max = 0.0;
    /// Metric sample times, ascending; each is delivered through Observer::on_sample.
    std::vector<double> sample_times;
    /// Attempts without an accepted swap before the absorption test runs; 0 means 50 L.
    std::uint64_t absorption_window = 0;
    /// Start from this configuration instead of an i.i.d. draw.
    std::optional<RingConfiguration> initial;
    bool full_checks = false;
};

struct RunSummary {
    RingConfiguration initial;
    RingConfiguration final_config;
    std::uint64_t seed = 0;
    /// Clock at the end of the run: t_max, or the time absorption was detected.
    double t_end = 0.0;
    bool absorbed = false;
    /// For absorbed runs, the time the configuration froze (last accepted swap, or 0).
    double t_absorbed = 0.0;
    std::uint64_t attempts = 0;
    std::uint64_t accepted = 0;
    std::array<std::uint64_t, kSwapReasonCount> reason_counts{};
    double last_change_time = 0.0;
};

/// Runs one trajectory from time 0 until t_max or absorption. The initial
/// configuration is drawn from the trajectory's own random stream unless
/// given in `options`.
RunSummary run(std::size_t length, const ModelParams& params, const MovingDistribution& mu, std::uint64_t seed,
               const RunOptions& options, std::span<Observer* const> hooks = {});

/// Evaluates fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Results are stored by index, so the output does not depend on
/// scheduling.
template <class Fn>
auto parallel_map(std::size_t n, Fn&& fn, unsigned threads = 0) -> std::vector<decltype(fn(std::size_t{}))> {
    using Result = decltype(fn(std::size_t{}));
    std::vector<std::optional<Result>> slots(n);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) slots[i].emplace(fn(i));
    } else {
        std::vector<std::jthread> workers;
        std::vector<std::exception_ptr> errors(threads);
        for (unsigned w = 0; w < threads; ++w) {
            workers.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += threads) slots[i].emplace(fn(i));
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        workers.clear();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    std::vector<Result> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

/// n independent runs; replicate k uses derive_seed(base_seed, k).
std::vector<RunSummary> run_replicates(std::size_t n, std::uint64_t base_seed, std::size_t length,
                                       const ModelParams& params, const MovingDistribution& mu,
                                       const RunOptions& options, unsigned threads = 0);

/// Number of logged attempts with target v and time in (t, t + epsilon].
std::size_t attempt_rate_audit(std::span<const EventRecord> log, double t, double epsilon, Site v);

/// Keeps every event in memory.
class EventLog : public Observer {
public:
    void on_event(const EventRecord& event, const RingConfiguration&) override { events_.push_back(event); }
    std::span<const EventRecord> events() const { return events_; }

private:
    std::vector<EventRecord> events_;
};

} // namespace schelling
