#include "doctest.h"
#include "test_support.hpp"

#include "schelling/engine.hpp"
#include "schelling/errors.hpp"
#include "schelling/io.hpp"
#include "schelling/observables.hpp"

using namespace schelling;
using namespace testsupport;

namespace {

EventRecord accepted(double t, Site v, Site u) {
    EventRecord e{t, v, u, {}};
    e.verdict.accepted = true;
    e.verdict.reason = SwapReason::Accepted;
    return e;
}

/// Feeds a scripted swap to a tracker and returns the new configuration.
RingConfiguration play(TimelineTracker& tracker, const RingConfiguration& config, double t, Site v, Site u) {
    RingConfiguration after = apply_swap(config, v, u);
    tracker.on_event(accepted(t, v, u), after);
    return after;
}

using Kind = TimelineTracker::EventKind;

/// Strict alternation of mobility transitions and Vanished only last.
bool well_formed(const TimelineTracker& tracker) {
    std::optional<Kind> last_mobility;
    const auto events = tracker.events();
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Kind k = events[i].kind;
        if (k == Kind::Vanished && i + 1 != events.size()) return false;
        if (k == Kind::BecameMobile || k == Kind::BecameImmobile) {
            if (last_mobility && *last_mobility == k) return false;
            last_mobility = k;
        }
        if (k == Kind::EndpointMoved && std::abs(events[i].direction) != 1) return false;
    }
    return true;
}

} // namespace

TEST_CASE("separators") {
    CHECK(separators(ring({1, 1, 1, 1}, 2)).empty());
    CHECK(separators(ring({1, 1, 2, 1, 2, 2}, 2)) == std::vector<Site>{1, 2, 3, 5});
    CHECK(separators(ring({1, 2, 1, 2}, 2)).size() == 4);
}

TEST_CASE("sections") {
    const auto secs = sections(ring({1, 1, 2, 1, 2, 2}, 2));
    REQUIRE(secs.size() == 4);
    std::vector<std::size_t> lengths;
    std::vector<int> colors;
    for (const auto& s : secs) {
        lengths.push_back(s.length);
        colors.push_back(s.color);
    }
    CHECK(lengths == std::vector<std::size_t>{2, 1, 1, 2});
    CHECK(colors == std::vector<int>{1, 2, 1, 2});
    CHECK(secs[0].start == 0);
    CHECK(secs[3].start == 4);

    const auto mono = sections(ring({2, 2, 2, 2, 2}, 2));
    REQUIRE(mono.size() == 1);
    CHECK(mono[0].length == 5);
    // The section 3..5 continues through site 0.
    const auto wrap = sections(ring({1, 2, 2, 1, 1, 1}, 2));
    REQUIRE(wrap.size() == 2);
    CHECK(wrap[1].start == 3);
    CHECK(wrap[1].length == 4);
}

TEST_CASE("section decomposition properties") {
    for (int types = 2; types <= 3; ++types) {
        for (std::size_t length = 3; length <= 8; ++length) {
            for_each_coloring(length, types, [&](const Colors& x) {
                const auto cfg = ring(x, types);
                const auto secs = sections(cfg);
                const auto seps = separators(cfg);
                std::size_t total = 0;
                std::vector<int> covered(length, 0);
                for (std::size_t i = 0; i < secs.size(); ++i) {
                    total += secs[i].length;
                    REQUIRE(secs[i].length >= 1);
                    for (std::size_t k = 0; k < secs[i].length; ++k) {
                        const Site s = (secs[i].start + k) % length;
                        REQUIRE(x[s] == secs[i].color);
                        ++covered[s];
                    }
                    if (secs.size() > 1) REQUIRE(secs[i].color != secs[(i + 1) % secs.size()].color);
                }
                REQUIRE(total == length);
                REQUIRE(std::ranges::all_of(covered, [](int c) { return c == 1; }));
                REQUIRE((secs.size() == 1) == cfg.is_monochromatic());
                REQUIRE(seps.size() == (secs.size() == 1 ? 0 : secs.size()));
                REQUIRE(seps.size() == ref_separators(x));
                if (types == 2) REQUIRE(seps.size() % 2 == 0);
                const double p = static_cast<double>(seps.size()) / static_cast<double>(length);
                // A monochromatic ring is one separator-free section of length L.
                const std::size_t l_max = cfg.is_monochromatic() ? length - 1 : length;
                for (std::size_t l = 1; l <= l_max; ++l) REQUIRE(p >= q_l(cfg, l) / static_cast<double>(l) - 1e-12);
                for (Site v = 0; v < length; ++v) {
                    std::size_t len = 0;
                    for (const auto& s : secs) {
                        if ((v + length - s.start) % length < s.length) len = s.length;
                    }
                    REQUIRE(section_length(cfg, v) == len);
                }
            });
        }
    }
}

TEST_CASE("q_l") {
    const auto x = ring({1, 1, 2, 1, 2, 2}, 2);
    CHECK(q_l(x, 1) == doctest::Approx(2.0 / 6));
    CHECK(q_l(x, 2) == doctest::Approx(1.0));
    CHECK(q_l(ring({1, 1, 1, 1, 1}, 2), 4) == 0.0);
    CHECK_THROWS_AS(q_l(x, 0), ParameterError);
}

TEST_CASE("shades") {
    const auto x = ring({1, 1, 2, 1, 2, 2}, 2);
    CHECK(shade(x, 2, Horizon::finite(1)) == Shade{Shade::Tone::Light, 2});
    CHECK(shade(x, 0, Horizon::finite(1)) == Shade{Shade::Tone::Dark, 1});
    CHECK(shade(x, 0, Horizon::finite(2)) == Shade{Shade::Tone::Light, 1});
    const auto y = ring({3, 3, 3, 1, 2, 2, 2}, 3);
    CHECK(shade(y, 0, Horizon::finite(3)).tone == Shade::Tone::Light);
    CHECK(shade(y, 0, Horizon::finite(2)).tone == Shade::Tone::Dark);
    CHECK_THROWS_AS(shade(x, 0, Horizon::full_ring()), ParameterError);
}

TEST_CASE("flip tracker and window statistics") {
    FlipTracker tracker(6);
    tracker.on_event(EventRecord{0.5, 1, 2, {}}, ring({1, 1, 1, 1, 1, 1}, 2));
    CHECK(tracker.total_changes() == 0);
    tracker.on_event(accepted(1.0, 2, 3), ring({1, 1, 1, 2, 2, 2}, 2));
    tracker.on_event(accepted(2.0, 3, 5), ring({1, 1, 1, 2, 2, 2}, 2));
    CHECK(tracker.change_count()[2] == 1);
    CHECK(tracker.change_count()[3] == 2);
    CHECK(tracker.change_count()[0] == 0);
    CHECK(tracker.last_change_time()[5] == 2.0);
    CHECK(tracker.total_changes() == 4);

    const FlipStats before = flip_stats(tracker, 0.0, 0.9);
    CHECK(before.mean_changes == 0.0);
    CHECK(before.max_changes == 0);
    CHECK(before.fraction_flipped == 0.0);

    const FlipStats first = flip_stats(tracker, 0.0, 1.0);
    CHECK(first.changes == std::vector<std::uint64_t>{0, 0, 1, 1, 0, 0});
    CHECK(first.fraction_flipped == doctest::Approx(2.0 / 6));

    const FlipStats all = flip_stats(tracker, 0.0, 10.0);
    CHECK(all.max_changes == 2);
    CHECK(all.mean_participations == doctest::Approx(4.0 / 6));
    CHECK_THROWS_AS(flip_stats(tracker, 2.0, 1.0), ParameterError);
}

TEST_CASE("timeline: no accepted events") {
    const auto x = ring({1, 1, 2, 2, 2, 1, 1, 1}, 2);
    TimelineTracker tracker(x, 3, 2);
    CHECK(tracker.left_end() == 2);
    CHECK(tracker.right_end() == 4);
    CHECK_FALSE(tracker.mobile());
    tracker.on_event(EventRecord{1.0, 4, 5, {}}, x);
    CHECK(tracker.events().empty());
    CHECK(tracker.alive());
    CHECK_THROWS_AS(TimelineTracker(ring({1, 1, 1}, 2), 0, 1), ParameterError);
}

TEST_CASE("timeline: shrinking below the horizon") {
    // Section of 2s at sites 2..4 (length 3), h = 2. Its right end trades with
    // a 1 further right, the section shrinks to length 2.
    auto x = ring({1, 1, 2, 2, 2, 1, 2, 1, 1, 1}, 2);
    TimelineTracker tracker(x, 3, 2);
    x = play(tracker, x, 1.0, 4, 5);
    // Now (1,1,2,2,1,2,2,1,1,1): the tracked section is sites 2..3.
    REQUIRE(tracker.events().size() == 2);
    CHECK(tracker.events()[0].kind == Kind::EndpointMoved);
    CHECK(tracker.events()[0].direction == -1);
    CHECK(tracker.events()[1].kind == Kind::BecameMobile);
    CHECK(tracker.length() == 2);
    CHECK(tracker.mobile());
    // Growing back to length 3 makes it immobile again.
    x = play(tracker, x, 2.0, 4, 5);
    CHECK(tracker.length() == 3);
    CHECK(tracker.events().back().kind == Kind::BecameImmobile);
    CHECK(tracker.events()[2].direction == +1);
    CHECK(well_formed(tracker));
}

TEST_CASE("timeline: a vanishing singleton merges its neighbours") {
    // 1 1 1 | 2 2 2 | 1 | 2 2 2 | 1 1 : the singleton 1 at site 6 swaps with
    // the left end of the left section of 2s.
    const auto start = ring({1, 1, 1, 2, 2, 2, 1, 2, 2, 2, 1, 1}, 2);
    TimelineTracker left(start, 4, 1);
    TimelineTracker single(start, 6, 1);
    TimelineTracker right(start, 8, 1);
    const auto after = apply_swap(start, 6, 3);
    for (TimelineTracker* t : {&left, &single, &right}) t->on_event(accepted(3.0, 6, 3), after);

    CHECK(left.termination() == TimelineTracker::Termination::Merged);
    CHECK(left.termination_time() == 3.0);
    CHECK(single.termination() == TimelineTracker::Termination::Vanished);
    REQUIRE_FALSE(single.events().empty());
    CHECK(single.events().back().kind == Kind::Vanished);
    CHECK(right.alive());
    CHECK(right.left_end() == 4);
    CHECK(right.right_end() == 9);
    CHECK(right.length() == 6);
    CHECK(right.events().empty());

    // Later events leave terminated timelines untouched.
    left.on_event(accepted(4.0, 3, 4), after);
    CHECK(left.events().empty());
}

TEST_CASE("timelines along simulated trajectories are well formed") {
    const std::size_t length = 60;
    for (std::size_t h : {1u, 2u, 3u}) {
        const auto mu = MovingDistribution::bounded_uniform(length, h);
        ModelParams p;
        p.horizon = Horizon::finite(h);
        for (std::uint64_t seed = 1; seed <= 30; ++seed) {
            Rng rng(seed);
            const auto start = initial_configuration(length, p, rng);
            if (start.is_monochromatic()) continue;
            std::vector<std::unique_ptr<TimelineTracker>> trackers;
            std::vector<Observer*> hooks;
            for (Site v = 0; v < length; v += 7) {
                trackers.push_back(std::make_unique<TimelineTracker>(start, v, h));
                hooks.push_back(trackers.back().get());
            }
            RunOptions options;
            options.t_max = 100.0;
            options.initial = start;
            const RunSummary s = run(length, p, mu, seed, options, hooks);
            for (const auto& t : trackers) {
                REQUIRE(well_formed(*t));
                if (t->alive()) {
                    // A live timeline describes a real section of the final configuration.
                    REQUIRE(s.final_config[t->right_end()] == t->color());
                    REQUIRE(s.final_config[s.final_config.right(t->right_end())] != t->color());
                    REQUIRE(section_length(s.final_config, t->right_end()) == t->length());
                }
            }
        }
    }
}

TEST_CASE("metrics samples") {
    const std::vector<std::size_t> ls{1, 2};
    const auto x = ring({1, 1, 2, 1, 2, 2}, 2);
    const MetricsSample m = metrics_sample(x, 0, 5, 1.5, ls);
    CHECK(m.separators == 4);
    CHECK(m.density == doctest::Approx(4.0 / 6));
    CHECK(m.q[0] == doctest::Approx(2.0 / 6));
    CHECK(m.q[1] == doctest::Approx(1.0));
    CHECK(m.dissatisfied == 6);
    CHECK(m.flips_cum == 5);
    CHECK(m.counts == std::vector<std::size_t>{3, 3});

    const MetricsSample mono = metrics_sample(ring({2, 2, 2, 2}, 2), 0, 0, 0.0, ls);
    CHECK(mono.separators == 0);
    CHECK(mono.q[0] == 0.0);
    CHECK(mono.dissatisfied == 0);

    // Counts are conserved at every sample along a run.
    const auto mu = MovingDistribution::bounded_uniform(50, 2);
    ModelParams p;
    p.types = 3;
    p.p = {0.2, 0.3, 0.5};
    p.horizon = Horizon::finite(2);
    FlipTracker flips(50);
    MetricsRecorder rec(0, {1, 2, 3}, &flips);
    std::vector<Observer*> hooks{&flips, &rec};
    RunOptions options;
    options.t_max = 20.0;
    for (int k = 0; k <= 20; ++k) options.sample_times.push_back(k);
    run(50, p, mu, 3, options, hooks);
    REQUIRE(rec.samples().size() == 21);
    for (const auto& s : rec.samples()) CHECK(s.counts == rec.samples()[0].counts);
    for (std::size_t i = 1; i < rec.samples().size(); ++i) {
        CHECK(rec.samples()[i].flips_cum >= rec.samples()[i - 1].flips_cum);
        CHECK(rec.samples()[i].t > rec.samples()[i - 1].t);
    }
}

TEST_CASE("snapshots, event lines and CSV text") {
    const auto x = ring({1, 1, 2, 1, 2, 2}, 2);
    CHECK(snapshot(x) == "1:2,2:1,1:1,2:2");
    CHECK(parse_snapshot("1:2,2:1,1:1,2:2", 2) == x);
    CHECK(snapshot(ring({2, 1, 1, 2}, 2)) == "2:1,1:2,2:1");
    CHECK_THROWS_AS(parse_snapshot("1:2,3:1,2:1", 2), ParameterError);
    CHECK_THROWS_AS(parse_snapshot("1:0,2:4", 2), ParameterError);
    CHECK_THROWS_AS(parse_snapshot("1-2", 2), ParameterError);
    CHECK_THROWS_AS(parse_snapshot("1:1,2:1", 2), ParameterError);
    for_each_coloring(6, 3, [](const Colors& c) {
        const auto cfg = ring(c, 3);
        REQUIRE(parse_snapshot(snapshot(cfg), 3) == cfg);
    });

    EventRecord e = accepted(0.25, 3, 4);
    CHECK(event_json(e) == R"({"t":0.25,"v":3,"u":4,"accepted":true,"reason":"Accepted"})");
    e.verdict = {};
    e.verdict.reason = SwapReason::TargetWorse;
    CHECK(event_json(e) == R"({"t":0.25,"v":3,"u":4,"accepted":false,"reason":"TargetWorse"})");

    const std::vector<std::size_t> ls{1, 3};
    CHECK(metrics_csv_header(ls, 3) == "t,separators,density,q_1,q_3,dissatisfied,flips_cum,count_1,count_2,count_3");
    const MetricsSample m = metrics_sample(x, 0, 7, 2.0, ls);
    CHECK(metrics_csv_row(m) == "2,4," + format_double(4.0 / 6) + "," + format_double(2.0 / 6) + ",1,6,7,3,3");

    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e-300) == "1e-300");
    CHECK(std::stod(format_double(2.0 / 3)) == 2.0 / 3);
}
