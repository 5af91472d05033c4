#include "schelling/engine.hpp"

#include <algorithm>
#include <string>

#include "schelling/errors.hpp"

namespace schelling {

Trajectory::Trajectory(RingConfiguration initial, ModelParams params, const MovingDistribution& mu,
                       std::uint64_t seed)
    : Trajectory(std::move(initial), std::move(params), mu, Rng(seed)) {}

Trajectory::Trajectory(RingConfiguration initial, ModelParams params, const MovingDistribution& mu, Rng rng)
    : config_(std::move(initial)),
      params_(std::move(params)),
      mu_(&mu),
      rng_(std::move(rng)),
      dissatisfied_(config_.size()) {
    params_.validate_for_length(config_.size());
    if (mu.length() != config_.size()) {
        throw ParameterError("moving distribution built for L=" + std::to_string(mu.length()) +
                             " used on a ring of length " + std::to_string(config_.size()));
    }
    if (config_.types() != params_.types) {
        throw ParameterError("configuration has " + std::to_string(config_.types()) + " types, parameters " +
                             std::to_string(params_.types));
    }
    for (Site v = 0; v < config_.size(); ++v) refresh(v);
}

void Trajectory::refresh(Site v) {
    if (satisfaction(config_, v) <= params_.tau) {
        dissatisfied_.insert(v);
    } else {
        dissatisfied_.erase(v);
    }
}

std::size_t Trajectory::local_separators(Site v, Site u) const {
    // Edges <x, x+1> touching v or u, each counted once.
    std::array<Site, 4> edges{config_.left(v), v, config_.left(u), u};
    std::ranges::sort(edges);
    const auto last = std::unique(edges.begin(), edges.end());
    std::size_t count = 0;
    for (auto it = edges.begin(); it != last; ++it) {
        count += config_[*it] != config_[config_.right(*it)];
    }
    return count;
}

StepOutcome Trajectory::step(double t_limit) {
    StepOutcome out;
    if (dissatisfied_.empty()) {
        pending_.reset();
        out.kind = StepOutcome::Kind::Absorbed;
        out.dt = std::numeric_limits<double>::infinity();
        return out;
    }
    if (!pending_) {
        pending_ = time_ + rng_.exponential(static_cast<double>(dissatisfied_.size()));
    }
    if (*pending_ > t_limit) {
        time_ = std::max(time_, t_limit);
        out.kind = StepOutcome::Kind::Limited;
        return out;
    }
    out.dt = *pending_ - time_;
    time_ = *pending_;
    pending_.reset();

    const std::size_t n = config_.size();
    const Site v = dissatisfied_[rng_.uniform_below(dissatisfied_.size())];
    const Site u = (v + mu_->sample(rng_)) % n;
    const SwapVerdict verdict = detail::evaluate_swap_unchecked(config_, v, u, params_);

    ++attempts_;
    ++reason_counts_[static_cast<std::size_t>(verdict.reason)];
    if (verdict.accepted) {
        const std::array<int, 2> pre_sat{satisfaction(config_, v), satisfaction(config_, u)};
        const std::size_t separators_before = local_separators(v, u);
        config_.swap_sites(v, u);
        for (Site x : {config_.left(v), v, config_.right(v), config_.left(u), u, config_.right(u)}) refresh(x);
        ++accepted_;
        attempts_since_change_ = 0;
        last_change_time_ = time_;
        check_event(verdict, v, u, pre_sat, separators_before);
    } else {
        ++attempts_since_change_;
    }
    if (full_checks_) verify_dissatisfied_set();

    out.event = EventRecord{time_, v, u, verdict};
    return out;
}

void Trajectory::check_event(const SwapVerdict& verdict, Site v, Site u, const std::array<int, 2>& pre_sat,
                             std::size_t separators_before) const {
    const auto where = [&] {
        return " (swap " + std::to_string(v) + "<->" + std::to_string(u) + " at t=" + std::to_string(time_) + ")";
    };
    if (verdict.delta_initiator < 0 || verdict.delta_target < 0) {
        throw InvariantViolation("accepted swap lowered a satisfaction" + where());
    }
    if (local_separators(v, u) > separators_before) {
        throw InvariantViolation("accepted swap created a separator" + where());
    }
    if (params_.lazy) {
        const bool singleton_gain = (pre_sat[0] == -2 && verdict.delta_initiator > 0) ||
                                    (pre_sat[1] == -2 && verdict.delta_target > 0);
        if (!singleton_gain) {
            throw InvariantViolation("lazy swap without an improving singleton" + where());
        }
    }
    if (params_.tau <= -1) {
        const bool target_ok = !params_.require_target_dissatisfied || pre_sat[1] == -2;
        if (pre_sat[0] != -2 || !target_ok) {
            throw InvariantViolation("swap between non-singletons under a negative threshold" + where());
        }
    }
}

void Trajectory::verify_dissatisfied_set() const {
    std::size_t expected = 0;
    std::vector<std::size_t> counts(static_cast<std::size_t>(config_.types()), 0);
    for (Site v = 0; v < config_.size(); ++v) {
        ++counts[config_[v] - 1];
        const bool should = satisfaction(config_, v) <= params_.tau;
        expected += should;
        if (should != dissatisfied_.contains(v)) {
            throw InvariantViolation("dissatisfied set out of date at site " + std::to_string(v));
        }
    }
    if (expected != dissatisfied_.size()) {
        throw InvariantViolation("dissatisfied set has stale members");
    }
    if (!std::ranges::equal(counts, config_.counts())) {
        throw InvariantViolation("type counts changed");
    }
}

RunSummary run(std::size_t length, const ModelParams& params, const MovingDistribution& mu, std::uint64_t seed,
               const RunOptions& options, std::span<Observer* const> hooks) {
    params.validate_for_length(length);
    if (options.t_max < 0.0) throw ParameterError("t_max must be non-negative");
    if (!std::ranges::is_sorted(options.sample_times)) throw ParameterError("sample times must be ascending");

    Rng rng(seed);
    RingConfiguration initial = options.initial ? *options.initial : initial_configuration(length, params, rng);
    if (initial.size() != length) {
        throw ParameterError("initial configuration has length " + std::to_string(initial.size()) + ", expected " +
                             std::to_string(length));
    }
    Trajectory traj(initial, params, mu, std::move(rng));
    traj.set_full_checks(options.full_checks);

    const std::uint64_t window = options.absorption_window ? options.absorption_window : 50 * length;
    const auto& samples = options.sample_times;
    std::size_t next = 0;
    bool absorbed = false;

    for (Observer* hook : hooks) hook->on_start(traj.config(), 0.0);
    while (true) {
        while (next < samples.size() && samples[next] <= traj.time() && samples[next] <= options.t_max) {
            for (Observer* hook : hooks) hook->on_sample(samples[next], traj.config());
            ++next;
        }
        if (traj.dissatisfied().empty()) {
            absorbed = true;
            break;
        }
        if (traj.time() >= options.t_max) break;
        const double limit = next < samples.size() ? std::min(samples[next], options.t_max) : options.t_max;
        const StepOutcome out = traj.step(limit);
        if (out.kind != StepOutcome::Kind::Event) continue;
        for (Observer* hook : hooks) hook->on_event(out.event, traj.config());
        const std::uint64_t idle = traj.attempts_since_change();
        if (idle > 0 && idle % window == 0 && is_absorbing(traj.config(), mu, params)) {
            absorbed = true;
            break;
        }
    }
    for (; next < samples.size() && samples[next] <= options.t_max; ++next) {
        for (Observer* hook : hooks) hook->on_sample(samples[next], traj.config());
    }
    for (Observer* hook : hooks) hook->on_finish(traj.config(), traj.time());

    RunSummary summary{.initial = std::move(initial), .final_config = traj.config()};
    summary.seed = seed;
    summary.t_end = absorbed ? traj.time() : options.t_max;
    summary.absorbed = absorbed;
    summary.t_absorbed = absorbed ? traj.last_change_time() : 0.0;
    summary.attempts = traj.attempts();
    summary.accepted = traj.accepted();
    summary.reason_counts = traj.reason_counts();
    summary.last_change_time = traj.last_change_time();
    return summary;
}

std::vector<RunSummary> run_replicates(std::size_t n, std::uint64_t base_seed, std::size_t length,
                                       const ModelParams& params, const MovingDistribution& mu,
                                       const RunOptions& options, unsigned threads) {
    if (n == 0) throw ParameterError("replicate count must be at least 1");
    return parallel_map(
        n, [&](std::size_t k) { return run(length, params, mu, derive_seed(base_seed, k), options); }, threads);
}

std::size_t attempt_rate_audit(std::span<const EventRecord> log, double t, double epsilon, Site v) {
    return static_cast<std::size_t>(std::ranges::count_if(log, [&](const EventRecord& e) {
        return e.target == v && e.time > t && e.time <= t + epsilon;
    }));
}

} // namespace schelling
