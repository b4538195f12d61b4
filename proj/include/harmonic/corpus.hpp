#pragma once

// Seeded test functions on a Grid: centered and shifted Gaussians,
// Hermite-Gaussian products and band-limited fields. Every member decays
// below 1e-10 (relative) at the box boundary and its transform decays
// likewise at the dual box boundary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "harmonic/sampled_field.hpp"

namespace harmonic {

enum class CorpusKind { centered_gaussian, shifted_gaussian, hermite_gaussian, band_limited };

inline std::string to_string(CorpusKind k) {
    switch (k) {
        case CorpusKind::centered_gaussian: return "centered_gaussian";
        case CorpusKind::shifted_gaussian: return "shifted_gaussian";
        case CorpusKind::hermite_gaussian: return "hermite_gaussian";
        case CorpusKind::band_limited: return "band_limited";
    }
    return "unknown";
}

struct CorpusMember {
    std::string id;         // "<kind>#<index>"
    CorpusKind requested;   // kind by position in the cycle
    CorpusKind kind;        // kind actually built (may fall back on small grids)
    SampledField field;
};

/// Relative amplitude allowed at the box boundary.
inline constexpr double corpus_decay_tolerance = 1e-10;

namespace detail {

// exp(-r^2/2) < 1e-10 beyond r = 6.79; a little margin on top.
inline constexpr double gaussian_reach = 7.0;
inline constexpr double hermite_reach = 9.0;

struct WidthRange {
    double lo, hi;
    bool feasible() const { return lo <= hi; }
};

// Admissible widths sigma of exp(-x^2/(2 sigma^2)) so that the function
// reaches the tolerance before the outermost samples (-L and L - h, less
// any shift) and its transform
// (width 1/(2 pi sigma)) inside the dual box.
inline WidthRange width_range(const Grid& g, double reach) {
    double lo = 0.0, hi = 1e300;
    for (std::size_t d = 0; d < g.dim(); ++d) {
        lo = std::max(lo, reach / (2.0 * pi * g.dual_half_extent(d)));
        hi = std::min(hi, (g.half_extent(d) - g.spacing(d)) / reach);
    }
    return {lo, hi};
}

inline double hermite_poly(unsigned k, double x) { return std::hermite(k, x); }

inline SampledField gaussian_member(const Grid& grid, std::mt19937_64& rng, bool shifted) {
    const auto w = width_range(grid, gaussian_reach);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // Shifted members use the narrow end so the shift has room.
    const double sigma = shifted ? w.lo + 0.3 * u(rng) * (w.hi - w.lo) : w.lo + (0.35 + 0.5 * u(rng)) * (w.hi - w.lo);
    std::vector<double> center(grid.dim(), 0.0);
    if (shifted)
        for (std::size_t d = 0; d < grid.dim(); ++d) {
            const double room = std::max(0.0, grid.half_extent(d) - grid.spacing(d) - gaussian_reach * sigma);
            center[d] = (2.0 * u(rng) - 1.0) * room;
        }
    const cplx amp = std::polar(0.5 + u(rng), 2.0 * pi * u(rng));
    return sample(grid, [&](std::span<const double> x) {
        double r2 = 0.0;
        for (std::size_t d = 0; d < x.size(); ++d) r2 += (x[d] - center[d]) * (x[d] - center[d]);
        return amp * std::exp(-r2 / (2.0 * sigma * sigma));
    });
}

inline SampledField hermite_member(const Grid& grid, std::mt19937_64& rng) {
    const auto w = width_range(grid, hermite_reach);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<unsigned> deg(1, 3);
    const double sigma = w.lo + (0.3 + 0.5 * u(rng)) * (w.hi - w.lo);
    std::vector<unsigned> degrees(grid.dim());
    for (auto& k : degrees) k = deg(rng);
    const cplx amp = std::polar(0.5 + u(rng), 2.0 * pi * u(rng));
    return sample(grid, [&](std::span<const double> x) {
        cplx v = amp;
        for (std::size_t d = 0; d < x.size(); ++d) {
            const double s = x[d] / sigma;
            v *= hermite_poly(degrees[d], s / std::sqrt(2.0)) * std::exp(-0.5 * s * s);
        }
        return v;
    });
}

// Packets exp(-|xi - mu|^2/(2 s^2)) sampled on the dual grid, cut to the
// inner quarter of the dual box, then inverse-transformed. The packet width
// s must keep both the cut (in xi) and the spatial tail (width 1/(2 pi s))
// below tolerance; the geometric mean of the two bounds balances them.
inline constexpr double band_reach = 6.8;

inline bool band_limited_feasible(const Grid& grid, double& packet_width) {
    double lo = 0.0, hi = 1e300;
    for (std::size_t d = 0; d < grid.dim(); ++d) {
        lo = std::max(lo, band_reach / (2.0 * pi * grid.half_extent(d)));
        hi = std::min(hi, grid.dual_half_extent(d) / 4.0 / band_reach);
    }
    packet_width = std::sqrt(lo * hi);
    return lo <= hi;
}

// Packet centres stay at moderate frequency whatever the grid resolution.
inline constexpr double band_center_cap = 2.0;

inline SampledField band_limited_member(const Grid& grid, std::mt19937_64& rng, double s) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nrm(0.0, 1.0);
    const Grid dual = grid.dual();
    constexpr int packets = 3;
    std::vector<std::vector<double>> mu(packets, std::vector<double>(grid.dim()));
    std::vector<cplx> coef(packets);
    for (int p = 0; p < packets; ++p) {
        for (std::size_t d = 0; d < grid.dim(); ++d) {
            const double room = std::min(dual.half_extent(d) / 4.0 - band_reach * s, band_center_cap);
            mu[p][d] = (2.0 * u(rng) - 1.0) * room;
        }
        coef[p] = {nrm(rng), nrm(rng)};
    }
    auto spectrum = sample(dual, [&](std::span<const double> xi) {
        for (std::size_t d = 0; d < xi.size(); ++d)
            if (std::abs(xi[d]) > dual.half_extent(d) / 4.0) return cplx{};
        cplx v{};
        for (int p = 0; p < packets; ++p) {
            double r2 = 0.0;
            for (std::size_t d = 0; d < xi.size(); ++d) r2 += (xi[d] - mu[p][d]) * (xi[d] - mu[p][d]);
            v += coef[p] * std::exp(-r2 / (2.0 * s * s));
        }
        return v;
    });
    auto f = inverse_euclidean_ft(spectrum);
    return SampledField(grid, std::vector<cplx>(f.values().begin(), f.values().end()));
}

}  // namespace detail

/// Builds member `index` of the corpus for `seed`; independent of how many
/// other members are requested.
inline CorpusMember corpus_member(const Grid& grid, std::uint64_t seed, std::size_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index)};
    std::mt19937_64 rng(seq);
    if (!detail::width_range(grid, detail::gaussian_reach).feasible())
        throw std::invalid_argument("test_corpus: grid too coarse for decaying test functions");

    CorpusMember m;
    m.requested = static_cast<CorpusKind>(index % 4);
    m.kind = m.requested;
    if (m.kind == CorpusKind::hermite_gaussian && !detail::width_range(grid, detail::hermite_reach).feasible())
        m.kind = CorpusKind::shifted_gaussian;
    double packet = 0.0;
    if (m.kind == CorpusKind::band_limited && !detail::band_limited_feasible(grid, packet))
        m.kind = CorpusKind::shifted_gaussian;

    switch (m.kind) {
        case CorpusKind::centered_gaussian: m.field = detail::gaussian_member(grid, rng, false); break;
        case CorpusKind::shifted_gaussian: m.field = detail::gaussian_member(grid, rng, true); break;
        case CorpusKind::hermite_gaussian: m.field = detail::hermite_member(grid, rng); break;
        case CorpusKind::band_limited: m.field = detail::band_limited_member(grid, rng, packet); break;
    }
    m.id = to_string(m.kind) + "#" + std::to_string(index);
    if (boundary_amplitude_ratio(m.field) > corpus_decay_tolerance)
        throw std::runtime_error("test_corpus: member " + m.id + " does not decay at the box boundary");
    return m;
}

inline std::vector<CorpusMember> corpus_members(const Grid& grid, std::uint64_t seed, std::size_t count) {
    if (count == 0) throw std::invalid_argument("test_corpus: count must be >= 1");
    std::vector<CorpusMember> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(corpus_member(grid, seed, i));
    return out;
}

inline std::vector<SampledField> test_corpus(const Grid& grid, std::uint64_t seed, std::size_t count) {
    std::vector<SampledField> out;
    for (auto& m : corpus_members(grid, seed, count)) out.push_back(std::move(m.field));
    return out;
}

/// f(x) * exp(2 pi i <freq, x>); shifts the transform by freq.
inline SampledField modulated(const SampledField& f, std::span<const double> freq) {
    const Grid& grid = f.grid();
    if (freq.size() != grid.dim()) throw std::invalid_argument("modulated: frequency dimension mismatch");
    std::vector<cplx> v(f.values().begin(), f.values().end());
    std::vector<std::size_t> idx(grid.dim());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.unravel(i, idx);
        double phase = 0.0;
        for (std::size_t d = 0; d < grid.dim(); ++d) phase += freq[d] * grid.point(d, idx[d]);
        const cplx e = std::polar(1.0, 2.0 * pi * phase);
        for (std::size_t g = 0; g < f.group_size(); ++g) v[g * grid.size() + i] *= e;
    }
    return with_values(f, std::move(v));
}

/// Gaussian exp(-pi |x|^2), the extremal function of the basic inequality.
inline SampledField standard_gaussian(const Grid& grid) {
    return sample(grid, [](std::span<const double> x) {
        double r2 = 0.0;
        for (double c : x) r2 += c * c;
        return cplx(std::exp(-pi * r2), 0.0);
    });
}

}  // namespace harmonic
