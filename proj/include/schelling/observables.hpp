#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "schelling/engine.hpp"
#include "schelling/model.hpp"

namespace schelling {

struct Section {
    Site start = 0;
    std::size_t length = 0;
    Color color = 0;

    bool operator==(const Section&) const = default;
};

/// Maximal constant-color runs of the ring, ordered by start site. A
/// monochromatic ring is a single section of length L starting at 0.
std::vector<Section> sections(const RingConfiguration& config);

/// Indices v of the separator edges <v, v+1 mod L>, ascending.
std::vector<Site> separators(const RingConfiguration& config);

/// Length of the section containing v.
std::size_t section_length(const RingConfiguration& config, Site v);

/// Fraction of sites lying in a section of length at most l (l >= 1).
double q_l(const RingConfiguration& config, std::size_t l);

struct Shade {
    enum class Tone { Light, Dark };
    Tone tone;
    Color color;

    bool operator==(const Shade&) const = default;
};

/// Light if the section containing v has length <= h, Dark otherwise.
/// Throws ParameterError for a full-ring horizon.
Shade shade(const RingConfiguration& config, Site v, const Horizon& horizon);

/// Per-site color changes and swap participations along a trajectory.
class FlipTracker : public Observer {
public:
    explicit FlipTracker(std::size_t length)
        : last_change_time_(length, 0.0), change_count_(length, 0), participations_(length, 0) {}

    void on_event(const EventRecord& event, const RingConfiguration& after) override;

    std::span<const double> last_change_time() const { return last_change_time_; }
    std::span<const std::uint64_t> change_count() const { return change_count_; }
    std::span<const std::uint64_t> participations() const { return participations_; }
    /// Total color changes over all sites so far.
    std::uint64_t total_changes() const { return total_changes_; }

    struct Change {
        double time;
        Site v;
        Site u;
    };
    /// Accepted swaps in chronological order.
    std::span<const Change> history() const { return history_; }

private:
    std::vector<double> last_change_time_;
    std::vector<std::uint64_t> change_count_;
    std::vector<std::uint64_t> participations_;
    std::vector<Change> history_;
    std::uint64_t total_changes_ = 0;
};

struct FlipStats {
    std::vector<std::uint64_t> changes;
    std::vector<std::uint64_t> participations;
    double mean_changes = 0.0;
    double mean_participations = 0.0;
    std::uint64_t max_changes = 0;
    /// Fraction of sites that changed color at least once in the window.
    double fraction_flipped = 0.0;
};

/// Counts restricted to swaps with time in [t1, t2].
FlipStats flip_stats(const FlipTracker& tracker, double t1, double t2);

/// Follows one monochromatic section through time by its right endpoint.
///
/// After each accepted swap the continuation is the section of the same color
/// whose right endpoint is within one site of the previous one. When none
/// exists the timeline ends: a singleton that loses its agent vanishes, any
/// other section has been merged into its right neighbor.
class TimelineTracker : public Observer {
public:
    enum class EventKind { BecameMobile, BecameImmobile, Vanished, EndpointMoved };
    enum class Termination { None, Vanished, Merged };

    struct Event {
        double time;
        EventKind kind;
        /// +1 or -1 for EndpointMoved, 0 otherwise.
        int direction = 0;
    };

    /// Tags the section containing `site` in `initial`. Throws ParameterError if
    /// the ring is monochromatic (no section is bounded by separators).
    TimelineTracker(const RingConfiguration& initial, Site site, std::size_t h);

    void on_event(const EventRecord& event, const RingConfiguration& after) override;

    std::span<const Event> events() const { return events_; }
    Termination termination() const { return termination_; }
    std::optional<double> termination_time() const { return termination_time_; }
    bool alive() const { return termination_ == Termination::None; }
    Color color() const { return color_; }
    Site left_end() const { return left_; }
    Site right_end() const { return right_; }
    std::size_t length() const { return length_; }
    bool mobile() const { return length_ <= h_; }

private:
    bool touches(Site x, std::size_t n) const;

    Color color_;
    Site left_;
    Site right_;
    std::size_t length_;
    std::size_t h_;
    std::vector<Event> events_;
    Termination termination_ = Termination::None;
    std::optional<double> termination_time_;
};

struct MetricsSample {
    double t = 0.0;
    std::size_t separators = 0;
    double density = 0.0;
    std::vector<double> q;
    std::size_t dissatisfied = 0;
    std::uint64_t flips_cum = 0;
    std::vector<std::size_t> counts;
};

MetricsSample metrics_sample(const RingConfiguration& config, int tau, std::uint64_t flips_cum, double t,
                             std::span<const std::size_t> l_list);

/// Collects a MetricsSample at every scheduled sample time. Attach after the
/// FlipTracker it reads so flips_cum is current.
class MetricsRecorder : public Observer {
public:
    MetricsRecorder(int tau, std::vector<std::size_t> l_list, const FlipTracker* flips = nullptr)
        : tau_(tau), l_list_(std::move(l_list)), flips_(flips) {}

    void on_sample(double t, const RingConfiguration& config) override {
        samples_.push_back(metrics_sample(config, tau_, flips_ ? flips_->total_changes() : 0, t, l_list_));
    }

    std::span<const MetricsSample> samples() const { return samples_; }
    std::span<const std::size_t> l_list() const { return l_list_; }

private:
    int tau_;
    std::vector<std::size_t> l_list_;
    const FlipTracker* flips_;
    std::vector<MetricsSample> samples_;
};

} // namespace schelling
