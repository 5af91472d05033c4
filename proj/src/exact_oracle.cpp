#include "schelling/exact_oracle.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "schelling/engine.hpp"
#include "schelling/errors.hpp"
#include "schelling/io.hpp"

namespace schelling::exact {

StateCodec::StateCodec(std::size_t length, int types, std::size_t capacity)
    : length_(length), types_(types), count_(1) {
    if (length < 3) throw ParameterError("ring length must be at least 3");
    if (types < 2 || types > kMaxTypes) throw ParameterError("number of types must be in 2.." + std::to_string(kMaxTypes));
    const std::size_t limit = std::min<std::size_t>(capacity, std::numeric_limits<StateIndex>::max());
    for (std::size_t i = 0; i < length; ++i) {
        if (count_ > limit / static_cast<std::size_t>(types)) {
            throw CapacityError(std::to_string(types) + "^" + std::to_string(length) + " states exceed the capacity of " +
                                std::to_string(limit));
        }
        count_ *= static_cast<std::size_t>(types);
    }
}

StateIndex StateCodec::encode(const RingConfiguration& config) const {
    if (config.size() != length_ || config.types() != types_) {
        throw ParameterError("configuration does not match the state space");
    }
    std::size_t code = 0;
    for (std::size_t i = length_; i-- > 0;) code = code * static_cast<std::size_t>(types_) + (config[i] - 1);
    return static_cast<StateIndex>(code);
}

void StateCodec::decode_into(StateIndex code, std::vector<Color>& colors) const {
    if (code >= count_) throw std::out_of_range("state code " + std::to_string(code) + " out of range");
    colors.resize(length_);
    std::size_t rest = code;
    for (std::size_t i = 0; i < length_; ++i) {
        colors[i] = static_cast<Color>(1 + rest % static_cast<std::size_t>(types_));
        rest /= static_cast<std::size_t>(types_);
    }
}

RingConfiguration StateCodec::decode(StateIndex code) const {
    std::vector<Color> colors;
    decode_into(code, colors);
    return RingConfiguration(std::move(colors), types_);
}

double GeneratorMatrix::entry(StateIndex s, StateIndex s2) const {
    const auto first = target.begin() + static_cast<std::ptrdiff_t>(row_start[s]);
    const auto last = target.begin() + static_cast<std::ptrdiff_t>(row_start[s + 1]);
    const auto it = std::lower_bound(first, last, s2);
    if (it == last || *it != s2) return 0.0;
    return rate[static_cast<std::size_t>(it - target.begin())];
}

namespace {

struct RowBlock {
    std::vector<std::size_t> row_size;
    std::vector<StateIndex> target;
    std::vector<double> rate;
};

RowBlock build_rows(const StateCodec& codec, const ModelParams& params, const MovingDistribution& mu,
                    std::size_t begin, std::size_t end) {
    const std::size_t n = codec.length();
    const auto c = static_cast<std::int64_t>(codec.types());
    std::vector<std::int64_t> power(n, 1);
    for (std::size_t i = 1; i < n; ++i) power[i] = power[i - 1] * c;

    RowBlock block;
    block.row_size.reserve(end - begin);
    std::vector<Color> colors;
    std::vector<std::pair<StateIndex, double>> row;
    for (std::size_t s = begin; s < end; ++s) {
        codec.decode_into(static_cast<StateIndex>(s), colors);
        const RingConfiguration config(colors, codec.types());
        row.clear();
        for (Site v = 0; v < n; ++v) {
            if (satisfaction(config, v) > params.tau) continue;
            for (std::size_t q : mu.support()) {
                const Site u = (v + q) % n;
                if (!detail::evaluate_swap_unchecked(config, v, u, params).accepted) continue;
                const std::int64_t dv = config[v];
                const std::int64_t du = config[u];
                const auto next = static_cast<std::int64_t>(s) + (du - dv) * power[v] + (dv - du) * power[u];
                row.emplace_back(static_cast<StateIndex>(next), mu.pmf(q));
            }
        }
        std::ranges::sort(row);
        std::size_t size = 0;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (size > 0 && block.target.back() == row[i].first) {
                block.rate.back() += row[i].second;
            } else {
                block.target.push_back(row[i].first);
                block.rate.push_back(row[i].second);
                ++size;
            }
        }
        block.row_size.push_back(size);
    }
    return block;
}

} // namespace

GeneratorMatrix build_generator(std::size_t length, const ModelParams& params, const MovingDistribution& mu,
                                std::size_t capacity, unsigned threads) {
    params.validate_for_length(length);
    if (mu.length() != length) {
        throw ParameterError("moving distribution built for L=" + std::to_string(mu.length()) +
                             " used on a ring of length " + std::to_string(length));
    }
    StateCodec codec(length, params.types, capacity);
    const std::size_t count = codec.state_count();
    const std::size_t chunk = 1u << 14;
    const std::size_t blocks = (count + chunk - 1) / chunk;
    auto parts = parallel_map(
        blocks,
        [&](std::size_t b) { return build_rows(codec, params, mu, b * chunk, std::min(count, (b + 1) * chunk)); },
        threads);

    GeneratorMatrix g{codec, {}, {}, {}, {}};
    g.row_start.reserve(count + 1);
    g.row_start.push_back(0);
    g.exit_rate.reserve(count);
    for (const RowBlock& part : parts) {
        std::size_t offset = 0;
        for (std::size_t size : part.row_size) {
            double exit = 0.0;
            for (std::size_t k = offset; k < offset + size; ++k) exit += part.rate[k];
            g.exit_rate.push_back(exit);
            g.row_start.push_back(g.row_start.back() + size);
            offset += size;
        }
        g.target.insert(g.target.end(), part.target.begin(), part.target.end());
        g.rate.insert(g.rate.end(), part.rate.begin(), part.rate.end());
    }
    return g;
}

std::vector<StateIndex> absorbing_states(const GeneratorMatrix& g) {
    std::vector<StateIndex> out;
    for (std::size_t s = 0; s < g.dimension(); ++s) {
        if (g.row_start[s] == g.row_start[s + 1]) out.push_back(static_cast<StateIndex>(s));
    }
    return out;
}

std::vector<double> product_law(const StateCodec& codec, std::span<const double> p) {
    if (p.size() != static_cast<std::size_t>(codec.types())) {
        throw ParameterError("type frequencies do not match the number of types");
    }
    std::vector<double> pi(codec.state_count());
    std::vector<Color> colors;
    for (std::size_t s = 0; s < pi.size(); ++s) {
        codec.decode_into(static_cast<StateIndex>(s), colors);
        double prob = 1.0;
        for (Color c : colors) prob *= p[c - 1];
        pi[s] = prob;
    }
    return pi;
}

std::vector<double> point_mass(const StateCodec& codec, StateIndex state) {
    if (state >= codec.state_count()) throw std::out_of_range("state code out of range");
    std::vector<double> pi(codec.state_count(), 0.0);
    pi[state] = 1.0;
    return pi;
}

TransientResult transient_distribution(const GeneratorMatrix& g, std::span<const double> pi0, double t,
                                       double tolerance) {
    const std::size_t dim = g.dimension();
    if (pi0.size() != dim) throw ParameterError("initial distribution has the wrong dimension");
    if (t < 0.0) throw ParameterError("time must be non-negative");
    TransientResult result;
    result.rate = dim ? *std::ranges::max_element(g.exit_rate) : 0.0;
    if (t == 0.0 || result.rate == 0.0) {
        result.distribution.assign(pi0.begin(), pi0.end());
        return result;
    }
    const double lambda = result.rate;
    const double mean = lambda * t;
    const double log_mean = std::log(mean);
    // Hard stop far beyond any reasonable Poisson tail.
    const auto max_terms = static_cast<std::size_t>(mean + 40.0 * std::sqrt(mean) + 1000.0);

    std::vector<double> current(pi0.begin(), pi0.end());
    std::vector<double> next(dim);
    result.distribution.assign(dim, 0.0);
    double cumulative = 0.0;
    for (std::size_t k = 0;; ++k) {
        const double kk = static_cast<double>(k);
        const double weight = std::exp(-mean + kk * log_mean - std::lgamma(kk + 1.0));
        if (weight > 0.0) {
            for (std::size_t s = 0; s < dim; ++s) result.distribution[s] += weight * current[s];
        }
        cumulative += weight;
        result.terms = k + 1;
        if ((kk >= mean && 1.0 - cumulative < tolerance) || k + 1 >= max_terms) break;
        // next = current (I + G / lambda)
        for (std::size_t s = 0; s < dim; ++s) next[s] = current[s] * (1.0 - g.exit_rate[s] / lambda);
        for (std::size_t s = 0; s < dim; ++s) {
            const double mass = current[s];
            if (mass == 0.0) continue;
            for (std::size_t k2 = g.row_start[s]; k2 < g.row_start[s + 1]; ++k2) {
                next[g.target[k2]] += mass * g.rate[k2] / lambda;
            }
        }
        current.swap(next);
    }
    result.truncation_error = std::max(0.0, 1.0 - cumulative);
    return result;
}

std::vector<std::vector<StateIndex>> strongly_connected_components(const GeneratorMatrix& g,
                                                                   std::span<const StateIndex> states) {
    // Iterative Tarjan restricted to `states`.
    constexpr std::uint32_t kUnvisited = std::numeric_limits<std::uint32_t>::max();
    const std::size_t dim = g.dimension();
    std::vector<std::uint8_t> member(dim, 0);
    for (StateIndex s : states) member[s] = 1;
    std::vector<std::uint32_t> index(dim, kUnvisited);
    std::vector<std::uint32_t> low(dim, 0);
    std::vector<std::uint8_t> on_stack(dim, 0);
    std::vector<StateIndex> stack;
    std::vector<std::pair<StateIndex, std::size_t>> call;
    std::vector<std::vector<StateIndex>> components;
    std::uint32_t counter = 0;

    for (StateIndex root : states) {
        if (index[root] != kUnvisited) continue;
        call.emplace_back(root, g.row_start[root]);
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            auto& [s, edge] = call.back();
            if (edge < g.row_start[s + 1]) {
                const StateIndex w = g.target[edge++];
                if (!member[w]) continue;
                if (index[w] == kUnvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.emplace_back(w, g.row_start[w]);
                } else if (on_stack[w]) {
                    low[s] = std::min(low[s], index[w]);
                }
                continue;
            }
            const StateIndex done = s;
            call.pop_back();
            if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
            if (low[done] == index[done]) {
                std::vector<StateIndex> component;
                StateIndex w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    component.push_back(w);
                } while (w != done);
                std::ranges::sort(component);
                components.push_back(std::move(component));
            }
        }
    }
    return components;
}

AbsorptionReport absorption_analysis(const GeneratorMatrix& g, std::span<const double> pi0) {
    const std::size_t dim = g.dimension();
    if (pi0.size() != dim) throw ParameterError("initial distribution has the wrong dimension");
    AbsorptionReport report;
    report.absorbing = absorbing_states(g);

    // States reachable from the support of pi0.
    std::vector<std::uint8_t> seen(dim, 0);
    std::vector<StateIndex> reachable;
    for (std::size_t s = 0; s < dim; ++s) {
        if (pi0[s] > 0.0) {
            seen[s] = 1;
            reachable.push_back(static_cast<StateIndex>(s));
        }
    }
    for (std::size_t head = 0; head < reachable.size(); ++head) {
        const StateIndex s = reachable[head];
        for (std::size_t k = g.row_start[s]; k < g.row_start[s + 1]; ++k) {
            if (!seen[g.target[k]]) {
                seen[g.target[k]] = 1;
                reachable.push_back(g.target[k]);
            }
        }
    }
    std::ranges::sort(reachable);

    // Closed classes; label -1 marks transient states.
    constexpr std::int64_t kTransient = -1;
    std::vector<std::int64_t> closed_label(dim, kTransient);
    std::vector<std::vector<StateIndex>> closed;
    for (auto& component : strongly_connected_components(g, reachable)) {
        bool is_closed = true;
        for (StateIndex s : component) {
            for (std::size_t k = g.row_start[s]; k < g.row_start[s + 1] && is_closed; ++k) {
                is_closed = std::ranges::binary_search(component, g.target[k]);
            }
            if (!is_closed) break;
        }
        if (!is_closed) continue;
        for (StateIndex s : component) closed_label[s] = static_cast<std::int64_t>(closed.size());
        closed.push_back(std::move(component));
    }
    std::ranges::sort(closed);
    for (std::size_t i = 0; i < closed.size(); ++i) {
        for (StateIndex s : closed[i]) closed_label[s] = static_cast<std::int64_t>(i);
    }

    std::vector<StateIndex> transient;
    std::vector<std::int64_t> position(dim, -1);
    for (StateIndex s : reachable) {
        if (closed_label[s] == kTransient) {
            position[s] = static_cast<std::int64_t>(transient.size());
            transient.push_back(s);
        }
    }

    // Expected occupation times y solve (-G_TT)^T y = pi0_T.
    std::vector<double> occupation(transient.size(), 0.0);
    if (!transient.empty()) {
        const auto m = static_cast<Eigen::Index>(transient.size());
        std::vector<Eigen::Triplet<double>> triplets;
        Eigen::VectorXd rhs(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const StateIndex s = transient[static_cast<std::size_t>(i)];
            rhs[i] = pi0[s];
            triplets.emplace_back(i, i, g.exit_rate[s]);
            for (std::size_t k = g.row_start[s]; k < g.row_start[s + 1]; ++k) {
                const std::int64_t j = position[g.target[k]];
                if (j >= 0) triplets.emplace_back(j, i, -g.rate[k]);
            }
        }
        Eigen::SparseMatrix<double> system(m, m);
        system.setFromTriplets(triplets.begin(), triplets.end());
        system.makeCompressed();
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> solver;
        solver.compute(system);
        if (solver.info() != Eigen::Success) {
            throw InvariantViolation("transient block of the generator is singular");
        }
        const Eigen::VectorXd y = solver.solve(rhs);
        for (Eigen::Index i = 0; i < m; ++i) occupation[static_cast<std::size_t>(i)] = y[i];
    }

    std::vector<double> class_mass(closed.size(), 0.0);
    for (std::size_t i = 0; i < closed.size(); ++i) {
        for (StateIndex s : closed[i]) class_mass[i] += pi0[s];
    }
    for (std::size_t i = 0; i < transient.size(); ++i) {
        const StateIndex s = transient[i];
        for (std::size_t k = g.row_start[s]; k < g.row_start[s + 1]; ++k) {
            const std::int64_t label = closed_label[g.target[k]];
            if (label != kTransient) class_mass[static_cast<std::size_t>(label)] += occupation[i] * g.rate[k];
        }
    }

    for (std::size_t i = 0; i < closed.size(); ++i) {
        if (closed[i].size() == 1) {
            if (class_mass[i] > 0.0) report.hitting.emplace_back(closed[i].front(), class_mass[i]);
        } else {
            report.recurrent_classes.push_back(closed[i]);
            report.class_hitting.push_back(class_mass[i]);
        }
    }
    report.absorption_certain = report.recurrent_classes.empty();
    if (report.absorption_certain) {
        report.expected_time = std::accumulate(occupation.begin(), occupation.end(), 0.0);
    }
    return report;
}

double total_variation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ParameterError("distributions have different dimensions");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return 0.5 * sum;
}

ComparisonReport mc_vs_exact(std::size_t length, const ModelParams& params, const MovingDistribution& mu, double t,
                             std::size_t n_reps, std::uint64_t seed, const std::optional<ModelParams>& engine_params,
                             std::size_t capacity) {
    if (n_reps < 10'000) throw ParameterError("comparison needs at least 10^4 replicates");
    const GeneratorMatrix g = build_generator(length, params, mu, capacity);
    const std::vector<double> pi0 = product_law(g.codec, params.p);
    const TransientResult exact = transient_distribution(g, pi0, t);

    RunOptions options;
    options.t_max = t;
    const auto runs = run_replicates(n_reps, seed, length, engine_params.value_or(params), mu, options);
    std::vector<double> empirical(g.dimension(), 0.0);
    const double weight = 1.0 / static_cast<double>(n_reps);
    for (const RunSummary& r : runs) empirical[g.codec.encode(r.final_config)] += weight;

    ComparisonReport report;
    report.tv = total_variation(empirical, exact.distribution);
    report.truncation_error = exact.truncation_error;
    report.t = t;
    report.replicates = n_reps;
    report.exact = exact.distribution;
    report.empirical = std::move(empirical);
    return report;
}

nlohmann::ordered_json report_json(const GeneratorMatrix& g, const AbsorptionReport& report, std::optional<double> tv,
                                   std::optional<double> truncation_error) {
    nlohmann::ordered_json j;
    j["length"] = g.codec.length();
    j["types"] = g.codec.types();
    j["states"] = g.dimension();
    j["absorbing"] = report.absorbing;
    auto snapshots = nlohmann::ordered_json::array();
    for (StateIndex s : report.absorbing) snapshots.push_back(snapshot(g.codec.decode(s)));
    j["absorbing_snapshots"] = std::move(snapshots);
    j["recurrent_classes"] = report.recurrent_classes;
    auto class_snapshots = nlohmann::ordered_json::array();
    for (const auto& cls : report.recurrent_classes) {
        auto members = nlohmann::ordered_json::array();
        for (StateIndex s : cls) members.push_back(snapshot(g.codec.decode(s)));
        class_snapshots.push_back(std::move(members));
    }
    j["recurrent_class_snapshots"] = std::move(class_snapshots);
    j["class_hitting"] = report.class_hitting;
    auto hitting = nlohmann::ordered_json::object();
    for (const auto& [state, prob] : report.hitting) hitting[std::to_string(state)] = prob;
    j["hitting"] = std::move(hitting);
    j["absorption_certain"] = report.absorption_certain;
    j["expected_time"] = report.expected_time ? nlohmann::ordered_json(*report.expected_time) : nlohmann::ordered_json();
    j["tv"] = tv ? nlohmann::ordered_json(*tv) : nlohmann::ordered_json();
    j["truncation_error"] = truncation_error ? nlohmann::ordered_json(*truncation_error) : nlohmann::ordered_json();
    return j;
}

} // namespace schelling::exact
