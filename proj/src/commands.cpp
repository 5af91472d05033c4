#include "schelling/commands.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>

#include "CLI11.hpp"
#include "schelling/engine.hpp"
#include "schelling/errors.hpp"
#include "schelling/exact_oracle.hpp"
#include "schelling/io.hpp"
#include "schelling/observables.hpp"

namespace schelling {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Writes to the named file, or to `fallback` when the name is empty.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw ParameterError("cannot open output file " + path);
            stream_ = file_.get();
        }
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

RunOptions run_options(const RunSpec& spec) {
    RunOptions options;
    options.t_max = spec.tmax;
    options.initial = preset_configuration(spec);
    return options;
}

std::string csv_field(std::string s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char ch : s) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    return quoted + '"';
}

/// Splits "v1,v2,..." on commas outside brackets.
std::vector<std::string> split_values(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char ch : text) {
        if (ch == '[' || ch == '{') ++depth;
        if (ch == ']' || ch == '}') --depth;
        if (ch == ',' && depth == 0) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

struct GridAxis {
    std::string key;
    std::vector<nlohmann::json> values;
};

std::vector<GridAxis> parse_grid(const std::vector<std::string>& grid) {
    std::vector<GridAxis> axes;
    for (const std::string& entry : grid) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == entry.size()) {
            throw ParameterError("grid axis \"" + entry + "\" is not key=v1,v2,...");
        }
        GridAxis axis{entry.substr(0, eq), {}};
        if (axis.key == "grid" || axis.key == "seed" || axis.key == "reps" || axis.key == "out" || axis.key == "events-out" || axis.key == "snapshot-out") {
            throw ParameterError("grid axis \"" + axis.key + "\" cannot be swept");
        }
        for (const std::string& v : split_values(entry.substr(eq + 1))) {
            if (v.empty()) throw ParameterError("grid axis \"" + axis.key + "\" has an empty value");
            nlohmann::json value = nlohmann::json::parse(v, nullptr, false);
            if (value.is_discarded() || axis.key == "horizon" || axis.key == "preset" || axis.key == "initial") {
                value = v;
            }
            axis.values.push_back(std::move(value));
        }
        axes.push_back(std::move(axis));
    }
    return axes;
}

std::string grid_value_text(const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
}

nlohmann::ordered_json with_spec(const RunSpec& spec, const nlohmann::ordered_json& body) {
    nlohmann::ordered_json j;
    j["spec"] = to_json(spec);
    for (const auto& [key, value] : body.items()) j[key] = value;
    return j;
}

} // namespace

int cmd_simulate(const RunSpec& raw, std::ostream& out) {
    const RunSpec spec = resolve(raw);
    if (spec.reps != 1) throw ParameterError("simulate runs a single trajectory; use sweep for --reps > 1");
    const ModelParams params = model_params(spec);
    const MovingDistribution mu = moving_distribution(spec);
    RunOptions options = run_options(spec);
    options.sample_times = sample_schedule(spec);

    FlipTracker flips(spec.length);
    MetricsRecorder metrics(spec.tau, spec.qlist, &flips);
    std::vector<Observer*> hooks{&flips, &metrics};
    std::unique_ptr<std::ofstream> events;
    std::unique_ptr<JsonlEventWriter> writer;
    if (!spec.events_out.empty()) {
        events = std::make_unique<std::ofstream>(spec.events_out, std::ios::binary);
        if (!*events) throw ParameterError("cannot open output file " + spec.events_out);
        writer = std::make_unique<JsonlEventWriter>(*events);
        hooks.push_back(writer.get());
    }

    const RunSummary summary = run(spec.length, params, mu, spec.seed, options, hooks);

    {
        Sink csv(spec.out, out);
        *csv << spec_comment(spec) << '\n' << metrics_csv_header(spec.qlist, spec.types) << '\n';
        for (const MetricsSample& s : metrics.samples()) *csv << metrics_csv_row(s) << '\n';
    }
    if (!spec.snapshot_out.empty()) {
        Sink snap(spec.snapshot_out, out);
        *snap << spec_comment(spec) << '\n' << snapshot(summary.final_config) << '\n';
    }
    if (!spec.out.empty()) {
        out << "t_end=" << format_double(summary.t_end) << " absorbed=" << (summary.absorbed ? "true" : "false")
            << " attempts=" << summary.attempts << " accepted=" << summary.accepted
            << " final=" << snapshot(summary.final_config) << '\n';
    }
    return kExitOk;
}

int cmd_sweep(const RunSpec& raw, std::ostream& out) {
    if (raw.grid.empty()) throw ParameterError("sweep needs at least one --grid axis");
    const std::vector<GridAxis> axes = parse_grid(raw.grid);
    std::size_t points = 1;
    for (const GridAxis& axis : axes) points *= axis.values.size();

    struct Point {
        RunSpec spec;
        std::vector<std::string> labels;
        std::uint64_t seed;
    };
    std::vector<Point> grid;
    for (std::size_t g = 0; g < points; ++g) {
        nlohmann::json overlay = nlohmann::json::object();
        std::vector<std::string> labels;
        std::size_t rest = g;
        // Last axis varies fastest.
        std::vector<std::size_t> idx(axes.size());
        for (std::size_t a = axes.size(); a-- > 0;) {
            idx[a] = rest % axes[a].values.size();
            rest /= axes[a].values.size();
        }
        for (std::size_t a = 0; a < axes.size(); ++a) {
            overlay[axes[a].key] = axes[a].values[idx[a]];
            labels.push_back(grid_value_text(axes[a].values[idx[a]]));
        }
        RunSpec point = resolve(merge_json(raw, overlay));
        grid.push_back({std::move(point), std::move(labels), derive_seed(raw.seed, g)});
    }

    struct Row {
        RunSummary summary;
        std::uint64_t seed;
    };
    const std::size_t reps = raw.reps;
    auto rows = parallel_map(points * reps, [&](std::size_t i) {
        const Point& point = grid[i / reps];
        const std::uint64_t seed = derive_seed(point.seed, i % reps);
        const RunSpec& s = point.spec;
        return Row{run(s.length, model_params(s), moving_distribution(s), seed, run_options(s)), seed};
    });

    Sink csv(raw.out, out);
    *csv << spec_comment(raw) << '\n';
    for (const GridAxis& axis : axes) *csv << csv_field(axis.key) << ',';
    *csv << "replicate,seed,absorbed,t_absorbed,final_density,final_q_h,swaps_per_site_mean,mean_section_length\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Point& point = grid[i / reps];
        const RunSummary& sum = rows[i].summary;
        const RingConfiguration& fin = sum.final_config;
        const double length = static_cast<double>(fin.size());
        const auto secs = sections(fin);
        const std::size_t seps = secs.size() > 1 ? secs.size() : 0;
        const Horizon horizon = model_params(point.spec).horizon;
        const double qh = horizon.is_finite() && horizon.h() >= 1 ? q_l(fin, horizon.h()) : kNaN;
        for (const std::string& label : point.labels) *csv << csv_field(label) << ',';
        *csv << i % reps << ',' << rows[i].seed << ',' << (sum.absorbed ? "true" : "false") << ','
             << format_double(sum.absorbed ? sum.t_absorbed : kNaN) << ','
             << format_double(static_cast<double>(seps) / length) << ',' << format_double(qh) << ','
             << format_double(2.0 * static_cast<double>(sum.accepted) / length) << ','
             << format_double(length / static_cast<double>(secs.size())) << '\n';
    }
    return kExitOk;
}

int cmd_oracle(const RunSpec& raw, std::ostream& out) {
    const RunSpec spec = resolve(raw);
    const ModelParams params = model_params(spec);
    const MovingDistribution mu = moving_distribution(spec);
    const exact::GeneratorMatrix g = exact::build_generator(spec.length, params, mu, spec.capacity);
    const auto start = preset_configuration(spec);
    const std::vector<double> pi0 =
        start ? exact::point_mass(g.codec, g.codec.encode(*start)) : exact::product_law(g.codec, params.p);
    const exact::AbsorptionReport report = exact::absorption_analysis(g, pi0);
    Sink sink(spec.out, out);
    *sink << with_spec(spec, exact::report_json(g, report)).dump(2) << '\n';
    return kExitOk;
}

int cmd_compare(const RunSpec& raw, std::ostream& out) {
    const RunSpec spec = resolve(raw);
    if (!spec.initial.empty() || !spec.preset.empty()) {
        throw ParameterError("compare starts from the i.i.d. initial law; --initial and --preset do not apply");
    }
    const ModelParams params = model_params(spec);
    const MovingDistribution mu = moving_distribution(spec);
    std::optional<ModelParams> engine;
    if (spec.corrupt_engine) {
        engine = params;
        engine->require_target_dissatisfied = false;
    }
    const exact::ComparisonReport report =
        exact::mc_vs_exact(spec.length, params, mu, spec.tmax, spec.reps, spec.seed, engine, spec.capacity);
    const bool pass = report.tv <= spec.tv_threshold;

    out << "tv=" << format_double(report.tv) << " threshold=" << format_double(spec.tv_threshold)
        << " truncation_error=" << format_double(report.truncation_error) << " replicates=" << report.replicates
        << ' ' << (pass ? "PASS" : "FAIL") << '\n';
    if (!spec.out.empty()) {
        nlohmann::ordered_json body;
        body["t"] = report.t;
        body["replicates"] = report.replicates;
        body["tv"] = report.tv;
        body["threshold"] = spec.tv_threshold;
        body["truncation_error"] = report.truncation_error;
        body["pass"] = pass;
        Sink sink(spec.out, out);
        *sink << with_spec(spec, body).dump(2) << '\n';
    }
    return pass ? kExitOk : kExitCheckFailed;
}

namespace {

struct Binding {
    CLI::Option* option;
    std::function<void(RunSpec&, const RunSpec&)> copy;
};

struct SubcommandState {
    CLI::App* app = nullptr;
    RunSpec flags;
    double sample_every = 0.0;
    std::string config;
    std::vector<Binding> bindings;
};

template <class T>
void bind_option(SubcommandState& st, const std::string& name, T RunSpec::*field, const std::string& help) {
    CLI::Option* opt = st.app->add_option(name, st.flags.*field, help);
    st.bindings.push_back({opt, [field](RunSpec& dst, const RunSpec& src) { dst.*field = src.*field; }});
}

void bind_flag(SubcommandState& st, const std::string& name, bool RunSpec::*field, const std::string& help) {
    CLI::Option* opt = st.app->add_flag(name, st.flags.*field, help);
    st.bindings.push_back({opt, [field](RunSpec& dst, const RunSpec& src) { dst.*field = src.*field; }});
}

void add_spec_options(SubcommandState& st) {
    bind_option(st, "--length", &RunSpec::length, "ring length L");
    bind_option(st, "--types", &RunSpec::types, "number of agent types c");
    bind_option(st, "--p", &RunSpec::p, "initial type law, comma separated (default uniform)");
    st.bindings.back().option->delimiter(',');
    bind_option(st, "--horizon", &RunSpec::horizon, "h:<int> | full-uniform | full-geometric:<rho> | custom:<path>");
    bind_option(st, "--tau", &RunSpec::tau, "dissatisfaction threshold");
    bind_flag(st, "--lazy", &RunSpec::lazy, "agents need a strict gain to swap");
    bind_option(st, "--tmax", &RunSpec::tmax, "time horizon (compare: evaluation time t)");
    bind_option(st, "--seed", &RunSpec::seed, "base seed");
    bind_option(st, "--reps", &RunSpec::reps, "replicates per grid point (compare: n_reps)");
    CLI::Option* every = st.app->add_option("--sample-every", st.sample_every, "metric sample spacing");
    st.bindings.push_back({every, [&st](RunSpec& dst, const RunSpec&) { dst.sample_every = st.sample_every; }});
    bind_option(st, "--sample-times", &RunSpec::sample_times, "explicit metric sample times, comma separated");
    st.bindings.back().option->delimiter(',');
    bind_option(st, "--qlist", &RunSpec::qlist, "section length bounds l for the q_l columns, comma separated");
    st.bindings.back().option->delimiter(',');
    bind_option(st, "--out", &RunSpec::out, "main output file (default stdout)");
    bind_option(st, "--events-out", &RunSpec::events_out, "event log, one JSON object per line");
    bind_option(st, "--snapshot-out", &RunSpec::snapshot_out, "final configuration snapshot");
    bind_option(st, "--preset", &RunSpec::preset, "named starting configuration (fig7)");
    bind_option(st, "--initial", &RunSpec::initial, "starting configuration as type:count,...");
    bind_option(st, "--tv-threshold", &RunSpec::tv_threshold, "compare pass threshold on total variation");
    bind_option(st, "--capacity", &RunSpec::capacity, "largest state space c^L the exact solver accepts");
    bind_option(st, "--grid", &RunSpec::grid, "sweep axis key=v1,v2,...; repeatable");
    bind_flag(st, "--corrupt-engine", &RunSpec::corrupt_engine,
              "compare test hook: the simulator skips the target check");
    st.bindings.back().option->group("");
    st.app->add_option("--config", st.config, "JSON config file, or an output file with a '# spec:' header");
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Swap dynamics of agents on a ring: simulation, sweeps and exact analysis"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "schelling 1.0");

    using Command = int (*)(const RunSpec&, std::ostream&);
    struct Entry {
        const char* name;
        const char* help;
        Command command;
    };
    const std::array<Entry, 4> entries{{
        {"simulate", "run one trajectory and write metrics", cmd_simulate},
        {"sweep", "replicates over a parameter grid, one summary row each", cmd_sweep},
        {"oracle", "exact absorption analysis for small rings", cmd_oracle},
        {"compare", "simulated versus exact law at time tmax", cmd_compare},
    }};
    std::array<SubcommandState, 4> states;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        states[i].app = app.add_subcommand(entries[i].name, entries[i].help);
        add_spec_options(states[i]);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalidSpec;
    }

    try {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            SubcommandState& st = states[i];
            if (!st.app->parsed()) continue;
            RunSpec spec;
            if (!st.config.empty()) spec = merge_json(spec, read_config(st.config));
            for (const Binding& b : st.bindings) {
                if (b.option->count() > 0) b.copy(spec, st.flags);
            }
            return entries[i].command(spec, out);
        }
    } catch (const CapacityError& e) {
        err << "error: " << e.what() << '\n';
        return kExitCapacity;
    } catch (const InvariantViolation& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalidSpec;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalidSpec;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitInvalidSpec;
}

} // namespace schelling
