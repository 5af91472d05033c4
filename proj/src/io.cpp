#include "schelling/io.hpp"

#include <charconv>
#include <cmath>
#include "json.hpp"

#include "schelling/errors.hpp"

namespace schelling {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string snapshot(const RingConfiguration& config) {
    std::string out;
    Site v = 0;
    while (v < config.size()) {
        const Color c = config[v];
        std::size_t run = 0;
        while (v < config.size() && config[v] == c) {
            ++run;
            ++v;
        }
        if (!out.empty()) out += ',';
        out += std::to_string(c) + ':' + std::to_string(run);
    }
    return out;
}

RingConfiguration parse_snapshot(std::string_view text, int types) {
    std::vector<Color> colors;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const std::string_view item = text.substr(0, comma);
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) {
            throw ParameterError("snapshot run \"" + std::string(item) + "\" is not type:count");
        }
        unsigned color = 0;
        std::size_t count = 0;
        const auto c1 = std::from_chars(item.data(), item.data() + colon, color);
        const auto c2 = std::from_chars(item.data() + colon + 1, item.data() + item.size(), count);
        if (c1.ec != std::errc{} || c1.ptr != item.data() + colon || c2.ec != std::errc{} ||
            c2.ptr != item.data() + item.size() || count == 0) {
            throw ParameterError("snapshot run \"" + std::string(item) + "\" is not type:count");
        }
        if (color < 1 || color > static_cast<unsigned>(types)) {
            throw ParameterError("snapshot color " + std::to_string(color) + " outside 1.." + std::to_string(types));
        }
        colors.insert(colors.end(), count, static_cast<Color>(color));
    }
    return RingConfiguration(std::move(colors), types);
}

std::string event_json(const EventRecord& event) {
    nlohmann::ordered_json j;
    j["t"] = event.time;
    j["v"] = event.initiator;
    j["u"] = event.target;
    j["accepted"] = event.verdict.accepted;
    j["reason"] = to_string(event.verdict.reason);
    return j.dump();
}

std::string metrics_csv_header(std::span<const std::size_t> l_list, int types) {
    std::string h = "t,separators,density";
    for (std::size_t l : l_list) h += ",q_" + std::to_string(l);
    h += ",dissatisfied,flips_cum";
    for (int i = 1; i <= types; ++i) h += ",count_" + std::to_string(i);
    return h;
}

std::string metrics_csv_row(const MetricsSample& s) {
    std::string row = format_double(s.t) + ',' + std::to_string(s.separators) + ',' + format_double(s.density);
    for (double q : s.q) row += ',' + format_double(q);
    row += ',' + std::to_string(s.dissatisfied) + ',' + std::to_string(s.flips_cum);
    for (std::size_t c : s.counts) row += ',' + std::to_string(c);
    return row;
}

} // namespace schelling
