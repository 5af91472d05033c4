#include "schelling/observables.hpp"

#include <algorithm>
#include <string>

#include "schelling/errors.hpp"

namespace schelling {

std::vector<Section> sections(const RingConfiguration& config) {
    const std::size_t n = config.size();
    std::vector<Section> out;
    Site first = n;
    for (Site v = 0; v < n; ++v) {
        if (config[config.left(v)] != config[v]) {
            first = v;
            break;
        }
    }
    if (first == n) {
        out.push_back({0, n, config[0]});
        return out;
    }
    Site v = first;
    do {
        Section s{v, 0, config[v]};
        do {
            ++s.length;
            v = config.right(v);
        } while (config[v] == s.color && v != first);
        out.push_back(s);
    } while (v != first);
    std::ranges::sort(out, {}, &Section::start);
    return out;
}

std::vector<Site> separators(const RingConfiguration& config) {
    std::vector<Site> out;
    for (Site v = 0; v < config.size(); ++v) {
        if (config[v] != config[config.right(v)]) out.push_back(v);
    }
    return out;
}

std::size_t section_length(const RingConfiguration& config, Site v) {
    const std::size_t n = config.size();
    const Color c = config.at(v);
    std::size_t length = 1;
    for (Site x = config.right(v); length < n && config[x] == c; x = config.right(x)) ++length;
    for (Site x = config.left(v); length < n && config[x] == c; x = config.left(x)) ++length;
    return length;
}

double q_l(const RingConfiguration& config, std::size_t l) {
    if (l < 1) throw ParameterError("section length bound l must be at least 1");
    std::size_t short_sites = 0;
    for (const Section& s : sections(config)) {
        if (s.length <= l) short_sites += s.length;
    }
    return static_cast<double>(short_sites) / static_cast<double>(config.size());
}

Shade shade(const RingConfiguration& config, Site v, const Horizon& horizon) {
    if (horizon.is_full_ring()) {
        throw ParameterError("shades need a finite moving horizon");
    }
    const Color c = config.at(v);
    return {section_length(config, v) <= horizon.h() ? Shade::Tone::Light : Shade::Tone::Dark, c};
}

void FlipTracker::on_event(const EventRecord& event, const RingConfiguration&) {
    if (!event.verdict.accepted) return;
    for (Site x : {event.initiator, event.target}) {
        ++change_count_[x];
        ++participations_[x];
        last_change_time_[x] = event.time;
    }
    total_changes_ += 2;
    history_.push_back({event.time, event.initiator, event.target});
}

FlipStats flip_stats(const FlipTracker& tracker, double t1, double t2) {
    if (t1 > t2) throw ParameterError("flip window needs t1 <= t2");
    const std::size_t n = tracker.change_count().size();
    FlipStats stats;
    stats.changes.assign(n, 0);
    stats.participations.assign(n, 0);
    for (const auto& change : tracker.history()) {
        if (change.time < t1 || change.time > t2) continue;
        for (Site x : {change.v, change.u}) {
            ++stats.changes[x];
            ++stats.participations[x];
        }
    }
    std::uint64_t total = 0;
    std::size_t flipped = 0;
    for (std::size_t x = 0; x < n; ++x) {
        total += stats.changes[x];
        flipped += stats.changes[x] > 0;
        stats.max_changes = std::max(stats.max_changes, stats.changes[x]);
    }
    const double size = static_cast<double>(n);
    stats.mean_changes = static_cast<double>(total) / size;
    stats.mean_participations = stats.mean_changes;
    stats.fraction_flipped = static_cast<double>(flipped) / size;
    return stats;
}

TimelineTracker::TimelineTracker(const RingConfiguration& initial, Site site, std::size_t h)
    : color_(initial.at(site)), left_(site), right_(site), length_(1), h_(h) {
    if (initial.is_monochromatic()) {
        throw ParameterError("a monochromatic ring has no section bounded by separators");
    }
    while (initial[initial.right(right_)] == color_) {
        right_ = initial.right(right_);
        ++length_;
    }
    while (initial[initial.left(left_)] == color_) {
        left_ = initial.left(left_);
        ++length_;
    }
}

bool TimelineTracker::touches(Site x, std::size_t n) const {
    const Site from = left_ == 0 ? n - 1 : left_ - 1;
    return (x + n - from) % n <= length_ + 1;
}

void TimelineTracker::on_event(const EventRecord& event, const RingConfiguration& after) {
    if (!alive() || !event.verdict.accepted) return;
    const std::size_t n = after.size();
    const Site v = event.initiator;
    const Site u = event.target;
    if (!touches(v, n) && !touches(u, n)) return;

    const auto is_right_end = [&](Site r) {
        return after[r] == color_ && after[after.right(r)] != color_;
    };
    std::optional<Site> next;
    for (Site r : {right_, after.left(right_), after.right(right_)}) {
        if (is_right_end(r)) {
            next = r;
            break;
        }
    }
    if (!next) {
        if (length_ == 1 && (v == right_ || u == right_)) {
            events_.push_back({event.time, EventKind::Vanished, 0});
            termination_ = Termination::Vanished;
        } else {
            termination_ = Termination::Merged;
        }
        termination_time_ = event.time;
        return;
    }

    Site left = *next;
    std::size_t length = 1;
    while (length < n && after[after.left(left)] == color_) {
        left = after.left(left);
        ++length;
    }
    if (*next != right_) {
        events_.push_back({event.time, EventKind::EndpointMoved, *next == after.right(right_) ? +1 : -1});
    }
    const bool was_mobile = length_ <= h_;
    const bool is_mobile = length <= h_;
    if (!was_mobile && is_mobile) events_.push_back({event.time, EventKind::BecameMobile, 0});
    if (was_mobile && !is_mobile) events_.push_back({event.time, EventKind::BecameImmobile, 0});
    left_ = left;
    right_ = *next;
    length_ = length;
}

MetricsSample metrics_sample(const RingConfiguration& config, int tau, std::uint64_t flips_cum, double t,
                             std::span<const std::size_t> l_list) {
    MetricsSample m;
    m.t = t;
    const auto secs = sections(config);
    m.separators = secs.size() > 1 ? secs.size() : 0;
    m.density = static_cast<double>(m.separators) / static_cast<double>(config.size());
    for (std::size_t l : l_list) {
        if (l < 1) throw ParameterError("section length bound l must be at least 1");
        std::size_t short_sites = 0;
        for (const Section& s : secs) {
            if (s.length <= l) short_sites += s.length;
        }
        m.q.push_back(static_cast<double>(short_sites) / static_cast<double>(config.size()));
    }
    for (Site v = 0; v < config.size(); ++v) m.dissatisfied += satisfaction(config, v) <= tau;
    m.flips_cum = flips_cum;
    m.counts.assign(config.counts().begin(), config.counts().end());
    return m;
}

} // namespace schelling
