#include "schelling/run_spec.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "schelling/errors.hpp"
#include "schelling/io.hpp"

namespace schelling {

namespace {

constexpr std::string_view kSpecPrefix = "# spec: ";

template <class T>
T get_as(const nlohmann::json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("config key \"") + key + "\": " + e.what());
    }
}

std::size_t parse_size(std::string_view text, const std::string& what) {
    std::size_t value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ParameterError(what + ": \"" + std::string(text) + "\" is not a non-negative integer");
    }
    return value;
}

double parse_double(std::string_view text, const std::string& what) {
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ParameterError(what + ": \"" + std::string(text) + "\" is not a number");
    }
    return value;
}

Horizon parse_horizon(const std::string& text) {
    if (text.starts_with("h:")) return Horizon::finite(parse_size(std::string_view(text).substr(2), "horizon"));
    if (text == "full-uniform" || text.starts_with("full-geometric:") || text.starts_with("custom:")) {
        return Horizon::full_ring();
    }
    throw ParameterError("horizon \"" + text + "\" is not h:<int>, full-uniform, full-geometric:<rho> or custom:<path>");
}

} // namespace

nlohmann::ordered_json to_json(const RunSpec& spec) {
    nlohmann::ordered_json j;
    j["length"] = spec.length;
    j["types"] = spec.types;
    j["p"] = spec.p;
    j["horizon"] = spec.horizon;
    j["tau"] = spec.tau;
    j["lazy"] = spec.lazy;
    j["tmax"] = spec.tmax;
    j["seed"] = spec.seed;
    j["reps"] = spec.reps;
    if (spec.sample_every) j["sample-every"] = *spec.sample_every;
    j["sample-times"] = spec.sample_times;
    j["qlist"] = spec.qlist;
    j["preset"] = spec.preset;
    j["initial"] = spec.initial;
    j["tv-threshold"] = spec.tv_threshold;
    j["capacity"] = spec.capacity;
    j["grid"] = spec.grid;
    j["corrupt-engine"] = spec.corrupt_engine;
    return j;
}

RunSpec merge_json(RunSpec spec, const nlohmann::json& j) {
    if (!j.is_object()) throw ParameterError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        const char* k = key.c_str();
        if (key == "length") spec.length = get_as<std::size_t>(j, k);
        else if (key == "types") spec.types = get_as<int>(j, k);
        else if (key == "p") spec.p = get_as<std::vector<double>>(j, k);
        else if (key == "horizon") spec.horizon = get_as<std::string>(j, k);
        else if (key == "tau") spec.tau = get_as<int>(j, k);
        else if (key == "lazy") spec.lazy = get_as<bool>(j, k);
        else if (key == "tmax") spec.tmax = get_as<double>(j, k);
        else if (key == "seed") spec.seed = get_as<std::uint64_t>(j, k);
        else if (key == "reps") spec.reps = get_as<std::size_t>(j, k);
        else if (key == "sample-every") {
            if (value.is_null()) spec.sample_every.reset();
            else spec.sample_every = get_as<double>(j, k);
        } else if (key == "sample-times") spec.sample_times = get_as<std::vector<double>>(j, k);
        else if (key == "qlist") spec.qlist = get_as<std::vector<std::size_t>>(j, k);
        else if (key == "preset") spec.preset = get_as<std::string>(j, k);
        else if (key == "initial") spec.initial = get_as<std::string>(j, k);
        else if (key == "tv-threshold") spec.tv_threshold = get_as<double>(j, k);
        else if (key == "capacity") spec.capacity = get_as<std::size_t>(j, k);
        else if (key == "grid") spec.grid = get_as<std::vector<std::string>>(j, k);
        else if (key == "corrupt-engine") spec.corrupt_engine = get_as<bool>(j, k);
        else if (key == "out") spec.out = get_as<std::string>(j, k);
        else if (key == "events-out") spec.events_out = get_as<std::string>(j, k);
        else if (key == "snapshot-out") spec.snapshot_out = get_as<std::string>(j, k);
        else throw ParameterError("unknown config key \"" + key + "\"");
    }
    return spec;
}

nlohmann::json read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("cannot open config file " + path.string());
    std::string first;
    std::getline(in, first);
    std::string text;
    if (first.starts_with(kSpecPrefix)) {
        text = first.substr(kSpecPrefix.size());
    } else {
        std::ostringstream rest;
        rest << in.rdbuf();
        text = first + "\n" + rest.str();
    }
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        // JSON reports carry the spec under "spec".
        if (j.is_object() && j.contains("spec") && j["spec"].is_object()) return j["spec"];
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError("config file " + path.string() + ": " + e.what());
    }
}

std::string spec_comment(const RunSpec& spec) {
    return std::string(kSpecPrefix) + to_json(spec).dump();
}

RunSpec resolve(RunSpec spec) {
    if (!spec.preset.empty()) {
        if (spec.preset != "fig7") throw ParameterError("unknown preset \"" + spec.preset + "\"");
        if (!spec.initial.empty()) throw ParameterError("--preset and --initial are mutually exclusive");
        const Horizon horizon = parse_horizon(spec.horizon);
        if (!horizon.is_finite() || horizon.h() < 1) throw ParameterError("preset fig7 needs a horizon h:<int> with h >= 1");
        spec.length = 2 * horizon.h() + 3;
        spec.types = 3;
    }
    if (spec.types < 2) throw ParameterError("--types must be at least 2");
    if (spec.p.empty()) spec.p.assign(static_cast<std::size_t>(spec.types), 1.0 / spec.types);
    if (!(spec.tmax >= 0.0) || !std::isfinite(spec.tmax)) throw ParameterError("--tmax must be finite and non-negative");
    if (spec.reps < 1) throw ParameterError("--reps must be at least 1");
    if (spec.sample_every && !(*spec.sample_every > 0.0)) throw ParameterError("--sample-every must be positive");
    if (!std::ranges::is_sorted(spec.sample_times)) throw ParameterError("sample times must be sorted ascending");
    for (std::size_t l : spec.qlist) {
        if (l < 1) throw ParameterError("--qlist entries must be at least 1");
    }
    model_params(spec).validate_for_length(spec.length);
    return spec;
}

ModelParams model_params(const RunSpec& spec) {
    ModelParams params;
    params.types = spec.types;
    params.p = spec.p.empty() ? std::vector<double>(static_cast<std::size_t>(spec.types), 1.0 / spec.types) : spec.p;
    params.tau = spec.tau;
    params.lazy = spec.lazy;
    params.horizon = parse_horizon(spec.horizon);
    return params;
}

MovingDistribution moving_distribution(const RunSpec& spec) {
    const std::string& h = spec.horizon;
    if (h.starts_with("h:")) return MovingDistribution::bounded_uniform(spec.length, parse_horizon(h).h());
    if (h == "full-uniform") return MovingDistribution::ring_uniform(spec.length);
    if (h.starts_with("full-geometric:")) {
        return MovingDistribution::folded_geometric(spec.length,
                                                    parse_double(std::string_view(h).substr(15), "geometric ratio"));
    }
    if (h.starts_with("custom:")) return MovingDistribution::load(h.substr(7), spec.length);
    parse_horizon(h);
    throw ParameterError("bad horizon " + h);
}

std::vector<double> sample_schedule(const RunSpec& spec) {
    if (!spec.sample_times.empty()) return spec.sample_times;
    std::vector<double> times;
    if (spec.sample_every) {
        for (std::size_t k = 0;; ++k) {
            const double t = static_cast<double>(k) * *spec.sample_every;
            if (t > spec.tmax * (1.0 + 1e-12)) break;
            times.push_back(std::min(t, spec.tmax));
        }
        return times;
    }
    times.push_back(0.0);
    if (spec.tmax > 0.0) times.push_back(spec.tmax);
    return times;
}

std::optional<RingConfiguration> preset_configuration(const RunSpec& spec) {
    if (spec.preset == "fig7") return fig7_configuration(parse_horizon(spec.horizon).h());
    if (!spec.initial.empty()) {
        RingConfiguration config = parse_snapshot(spec.initial, spec.types);
        if (config.size() != spec.length) {
            throw ParameterError("--initial has " + std::to_string(config.size()) + " sites but --length is " +
                                 std::to_string(spec.length));
        }
        return config;
    }
    return std::nullopt;
}

RingConfiguration fig7_configuration(std::size_t h) {
    if (h < 1) throw ParameterError("fig7 configuration needs h >= 1");
    std::vector<Color> colors;
    colors.push_back(3);
    colors.insert(colors.end(), h, 2);
    colors.insert(colors.end(), h + 2, 1);
    return RingConfiguration(std::move(colors), 3);
}

} // namespace schelling
