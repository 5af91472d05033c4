#include "schelling/moving_distribution.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "schelling/errors.hpp"
#include "schelling/rng.hpp"

namespace schelling {

namespace {

constexpr double kNormTolerance = 1e-12;

void require_length(std::size_t length) {
    if (length < 3) {
        throw ParameterError("ring length must be at least 3, got " + std::to_string(length));
    }
}

} // namespace

MovingDistribution::MovingDistribution(std::vector<double> pmf, Horizon horizon)
    : pmf_(std::move(pmf)), horizon_(horizon) {
    const double total = std::accumulate(pmf_.begin(), pmf_.end(), 0.0);
    if (std::abs(total - 1.0) > kNormTolerance) {
        throw ParameterError("moving distribution does not sum to 1 (sum = " + std::to_string(total) + ")");
    }
    const std::size_t n = pmf_.size();
    for (std::size_t q = 0; q < n; ++q) {
        if (!(pmf_[q] >= 0.0)) {
            throw ParameterError("moving distribution has a negative or NaN entry at offset " + std::to_string(q));
        }
        const bool positive = pmf_[q] > 0.0;
        const bool in_support = horizon_.is_full_ring() || ring_distance(q, n) <= horizon_.h();
        if (positive != in_support) {
            throw ParameterError("moving distribution support does not match its horizon at offset " +
                                 std::to_string(q));
        }
        if (positive) support_.push_back(q);
    }
    build_sampler();
}

MovingDistribution MovingDistribution::bounded_uniform(std::size_t length, std::size_t h) {
    require_length(length);
    if (2 * h + 1 > length) {
        throw ParameterError("moving horizon h=" + std::to_string(h) + " needs 2h+1 <= L=" + std::to_string(length));
    }
    std::vector<double> pmf(length, 0.0);
    const double mass = 1.0 / static_cast<double>(2 * h + 1);
    for (std::size_t k = 0; k <= h; ++k) {
        pmf[k] = mass;
        pmf[(length - k) % length] = mass;
    }
    return MovingDistribution(std::move(pmf), Horizon::finite(h));
}

MovingDistribution MovingDistribution::folded_geometric(std::size_t length, double rho) {
    require_length(length);
    if (!(rho > 0.0 && rho < 1.0)) {
        throw ParameterError("geometric ratio must lie in (0, 1)");
    }
    // sum over k = q (mod L) of rho^|k| = (rho^q + rho^(L-q)) / (1 - rho^L)
    const double n = static_cast<double>(length);
    std::vector<double> pmf(length);
    for (std::size_t q = 0; q < length; ++q) {
        const double d = static_cast<double>(q);
        pmf[q] = std::pow(rho, d) + std::pow(rho, n - d);
    }
    const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
    for (double& x : pmf) x /= total;
    return MovingDistribution(std::move(pmf), Horizon::full_ring());
}

MovingDistribution MovingDistribution::ring_uniform(std::size_t length) {
    require_length(length);
    return MovingDistribution(std::vector<double>(length, 1.0 / static_cast<double>(length)), Horizon::full_ring());
}

MovingDistribution MovingDistribution::from_pmf(std::vector<double> pmf) {
    require_length(pmf.size());
    const std::size_t n = pmf.size();
    bool all_positive = true;
    std::size_t reach = 0;
    for (std::size_t q = 0; q < n; ++q) {
        if (pmf[q] > 0.0) {
            reach = std::max(reach, ring_distance(q, n));
        } else {
            all_positive = false;
        }
    }
    const Horizon horizon = all_positive ? Horizon::full_ring() : Horizon::finite(reach);
    // The constructor rejects supports that are not a ball of radius `reach`.
    return MovingDistribution(std::move(pmf), horizon);
}

MovingDistribution MovingDistribution::load(const std::filesystem::path& path, std::size_t length) {
    require_length(length);
    std::ifstream in(path);
    if (!in) {
        throw ParameterError("cannot open moving distribution file " + path.string());
    }
    const long n = static_cast<long>(length);
    const long lo = -(n / 2);
    const long hi = (n + 1) / 2 - 1;
    std::vector<double> pmf(length, 0.0);
    std::vector<bool> seen(length, false);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        long q = 0;
        double mass = 0.0;
        std::string extra;
        if (!(fields >> q >> mass) || (fields >> extra)) {
            throw ParameterError(path.string() + ":" + std::to_string(line_no) + ": expected \"q p_q\"");
        }
        if (q < lo || q > hi) {
            throw ParameterError(path.string() + ":" + std::to_string(line_no) + ": offset " + std::to_string(q) +
                                 " outside " + std::to_string(lo) + ".." + std::to_string(hi));
        }
        const auto idx = static_cast<std::size_t>((q % n + n) % n);
        if (seen[idx]) {
            throw ParameterError(path.string() + ":" + std::to_string(line_no) + ": duplicate offset " +
                                 std::to_string(q));
        }
        seen[idx] = true;
        pmf[idx] = mass;
    }
    for (std::size_t q = 0; q < length; ++q) {
        if (!seen[q]) {
            throw ParameterError(path.string() + ": missing offset " + std::to_string(q <= length / 2 ? static_cast<long>(q) : static_cast<long>(q) - n));
        }
    }
    return from_pmf(std::move(pmf));
}

void MovingDistribution::build_sampler() {
    const double first = pmf_[support_.front()];
    uniform_on_support_ = true;
    for (std::size_t q : support_) {
        if (pmf_[q] != first) {
            uniform_on_support_ = false;
            break;
        }
    }
    if (uniform_on_support_) return;

    // Vose's alias method.
    const std::size_t n = pmf_.size();
    alias_prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    std::vector<std::size_t> small;
    std::vector<std::size_t> large;
    for (std::size_t i = 0; i < n; ++i) {
        scaled[i] = pmf_[i] * static_cast<double>(n);
        (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
        const std::size_t s = small.back();
        small.pop_back();
        const std::size_t l = large.back();
        large.pop_back();
        alias_prob_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    for (std::size_t i : large) alias_prob_[i] = 1.0;
    // Leftovers in `small` are rounding residue; keep them only if they carry mass.
    for (std::size_t i : small) alias_prob_[i] = pmf_[i] > 0.0 ? 1.0 : 0.0;
}

std::size_t MovingDistribution::sample(Rng& rng) const {
    if (uniform_on_support_) {
        return support_[rng.uniform_below(support_.size())];
    }
    const std::size_t column = rng.uniform_below(pmf_.size());
    return rng.uniform01() < alias_prob_[column] ? column : alias_[column];
}

} // namespace schelling
