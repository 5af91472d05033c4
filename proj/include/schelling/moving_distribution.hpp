#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "schelling/model.hpp"

namespace schelling {

class Rng;

/// Minimal distance of ring offset q (0 <= q < L) from the origin.
inline std::size_t ring_distance(std::size_t offset, std::size_t length) {
    return offset <= length - offset ? offset : length - offset;
}

/// Law of the offset between a requesting agent and the site it evaluates.
///
/// pmf()[q] is the probability that the agent at v evaluates v + q (mod L).
/// With a finite horizon h the support is exactly the offsets at ring distance
/// at most h; with a full-ring horizon every offset has positive mass.
/// Immutable after construction.
class MovingDistribution {
public:
    /// Uniform on offsets -h..h. Requires 2h + 1 <= L.
    static MovingDistribution bounded_uniform(std::size_t length, std::size_t h);
    /// Two-sided geometric law with ratio rho, folded onto the ring.
    static MovingDistribution folded_geometric(std::size_t length, double rho);
    /// Uniform over all L offsets.
    static MovingDistribution ring_uniform(std::size_t length);
    /// Arbitrary pmf indexed by offset 0..L-1; the horizon is inferred from the
    /// support, which must be a full ring or a symmetric ball around 0.
    static MovingDistribution from_pmf(std::vector<double> pmf);
    /// Text file with one "q p_q" line per offset q in -floor(L/2)..ceil(L/2)-1.
    /// Blank lines and lines starting with '#' are ignored.
    static MovingDistribution load(const std::filesystem::path& path, std::size_t length);

    std::size_t length() const { return pmf_.size(); }
    const Horizon& horizon() const { return horizon_; }
    double pmf(std::size_t offset) const { return pmf_[offset]; }
    std::span<const double> pmf() const { return pmf_; }
    /// Offsets with positive mass, ascending.
    std::span<const std::size_t> support() const { return support_; }

    std::size_t sample(Rng& rng) const;

private:
    MovingDistribution(std::vector<double> pmf, Horizon horizon);
    void build_sampler();

    std::vector<double> pmf_;
    Horizon horizon_;
    std::vector<std::size_t> support_;
    bool uniform_on_support_ = false;
    // Walker alias tables over all offsets.
    std::vector<double> alias_prob_;
    std::vector<std::size_t> alias_;
};

} // namespace schelling
