#pragma once

#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "schelling/engine.hpp"
#include "schelling/model.hpp"
#include "schelling/observables.hpp"

namespace schelling {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

/// Run-length snapshot "type:count,type:count,..." read from site 0 upward.
/// Runs are not merged across the 0 / L-1 boundary.
std::string snapshot(const RingConfiguration& config);

/// Inverse of snapshot(). Throws ParameterError on malformed input.
RingConfiguration parse_snapshot(std::string_view text, int types);

/// {"t":...,"v":...,"u":...,"accepted":...,"reason":"..."}
std::string event_json(const EventRecord& event);

/// Streams every event as one JSON line.
class JsonlEventWriter : public Observer {
public:
    explicit JsonlEventWriter(std::ostream& out) : out_(&out) {}
    void on_event(const EventRecord& event, const RingConfiguration&) override { *out_ << event_json(event) << '\n'; }

private:
    std::ostream* out_;
};

/// Header "t,separators,density,q_<l>...,dissatisfied,flips_cum,count_1..count_c".
std::string metrics_csv_header(std::span<const std::size_t> l_list, int types);
std::string metrics_csv_row(const MetricsSample& sample);

} // namespace schelling
