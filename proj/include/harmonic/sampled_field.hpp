#pragma once

// Uniform grids, sampled complex fields and the Euclidean Fourier machinery
// every group module is built on.
//
// Fourier convention (used everywhere in the library):
//
//     F(xi) = integral f(x) exp(-2 pi i <x, xi>) dx
//
// A grid axis with half-extent L and N samples holds x_j = -L + j h with
// h = 2L/N. Its dual axis has half-extent N/(4L) and spacing 1/(2L), so the
// dual of the dual is the original grid. With that pairing the Riemann sum
// h * sum_j f_j exp(-2 pi i x_j xi_k) reduces to a plain DFT with exact
// +-1/+-i phase factors, for every N.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "harmonic/fft.hpp"

namespace harmonic {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

namespace detail {

/// Row-major multi-index increment; false once every index wrapped to 0.
inline bool advance(std::span<std::size_t> idx, std::span<const std::size_t> shape) {
    for (std::size_t d = idx.size(); d-- > 0;) {
        if (++idx[d] < shape[d]) return true;
        idx[d] = 0;
    }
    return false;
}

}  // namespace detail

class Grid {
public:
    Grid() = default;
    Grid(std::vector<double> half_extents, std::vector<std::size_t> counts)
        : half_extents_(std::move(half_extents)), counts_(std::move(counts)) {
        if (half_extents_.empty()) throw std::invalid_argument("grid: dimension must be >= 1");
        if (half_extents_.size() != counts_.size())
            throw std::invalid_argument("grid: extents and counts differ in dimension");
        for (std::size_t d = 0; d < counts_.size(); ++d) {
            if (!(half_extents_[d] > 0.0) || !std::isfinite(half_extents_[d]))
                throw std::invalid_argument("grid: half-extent must be positive, axis " + std::to_string(d));
            if (counts_[d] < 2) throw std::invalid_argument("grid: sample count must be >= 2, axis " + std::to_string(d));
        }
    }

    std::size_t dim() const noexcept { return counts_.size(); }
    double half_extent(std::size_t axis) const { return half_extents_.at(axis); }
    std::size_t count(std::size_t axis) const { return counts_.at(axis); }
    const std::vector<double>& half_extents() const noexcept { return half_extents_; }
    const std::vector<std::size_t>& counts() const noexcept { return counts_; }

    double spacing(std::size_t axis) const { return 2.0 * half_extent(axis) / static_cast<double>(count(axis)); }
    double point(std::size_t axis, std::size_t j) const {
        return -half_extent(axis) + static_cast<double>(j) * spacing(axis);
    }
    std::size_t size() const noexcept {
        return std::accumulate(counts_.begin(), counts_.end(), std::size_t{1}, std::multiplies<>());
    }
    double cell_volume() const {
        double v = 1.0;
        for (std::size_t d = 0; d < dim(); ++d) v *= spacing(d);
        return v;
    }
    std::vector<std::size_t> strides() const { return detail::row_major_strides(counts_); }

    /// Dual half-extent N/(4L) of one axis.
    double dual_half_extent(std::size_t axis) const {
        return static_cast<double>(count(axis)) / (4.0 * half_extent(axis));
    }
    Grid dual() const {
        std::vector<double> ext(dim());
        for (std::size_t d = 0; d < dim(); ++d) ext[d] = dual_half_extent(d);
        return Grid(std::move(ext), counts_);
    }
    /// Grid with only the listed axes replaced by their duals.
    Grid dual_along(std::span<const std::size_t> axes) const {
        auto ext = half_extents_;
        for (auto a : axes) ext.at(a) = dual_half_extent(a);
        return Grid(std::move(ext), counts_);
    }

    /// Multi-index of a flat row-major index.
    void unravel(std::size_t flat, std::span<std::size_t> idx) const {
        for (std::size_t d = dim(); d-- > 0;) {
            idx[d] = flat % counts_[d];
            flat /= counts_[d];
        }
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::vector<double> half_extents_;
    std::vector<std::size_t> counts_;
};

inline Grid make_grid(std::size_t dim, std::vector<double> half_extents, std::vector<std::size_t> counts) {
    if (dim == 0) throw std::invalid_argument("make_grid: dimension must be >= 1");
    if (half_extents.size() != dim || counts.size() != dim)
        throw std::invalid_argument("make_grid: expected " + std::to_string(dim) + " extents and counts");
    return Grid(std::move(half_extents), std::move(counts));
}

/// Complex samples on a Grid, optionally crossed with a discrete group axis
/// (finite group elements or circle samples) carrying quadrature weights.
///
/// Storage is row-major with the group axis outermost:
/// values[g * grid.size() + spatial_flat_index].
class SampledField {
public:
    SampledField() = default;
    SampledField(Grid grid, std::vector<cplx> values) : SampledField(std::move(grid), {}, std::move(values)) {}
    SampledField(Grid grid, std::vector<double> group_weights, std::vector<cplx> values)
        : grid_(std::move(grid)), weights_(std::move(group_weights)), values_(std::move(values)) {
        if (values_.size() != grid_.size() * group_size())
            throw std::invalid_argument("sampled field: expected " + std::to_string(grid_.size() * group_size()) +
                                        " values, got " + std::to_string(values_.size()));
        for (double w : weights_)
            if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("sampled field: group weights must be positive");
        for (const auto& v : values_)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw std::invalid_argument("sampled field: non-finite sample");
    }

    static SampledField zeros(Grid grid, std::vector<double> group_weights = {}) {
        const std::size_t n = grid.size() * std::max<std::size_t>(group_weights.size(), 1);
        return SampledField(std::move(grid), std::move(group_weights), std::vector<cplx>(n));
    }

    const Grid& grid() const noexcept { return grid_; }
    bool has_group_axis() const noexcept { return !weights_.empty(); }
    std::size_t group_size() const noexcept { return std::max<std::size_t>(weights_.size(), 1); }
    std::span<const double> group_weights() const noexcept { return weights_; }
    double group_weight(std::size_t g) const { return weights_.empty() ? 1.0 : weights_.at(g); }
    std::span<const cplx> values() const noexcept { return values_; }
    std::span<const cplx> slice(std::size_t g) const {
        return std::span<const cplx>(values_).subspan(g * grid_.size(), grid_.size());
    }

private:
    Grid grid_;
    std::vector<double> weights_;
    std::vector<cplx> values_;
};

/// Samples fn(x) at every grid point.
template <class Fn>
SampledField sample(const Grid& grid, Fn&& fn) {
    std::vector<cplx> v(grid.size());
    std::vector<std::size_t> idx(grid.dim());
    std::vector<double> x(grid.dim());
    for (std::size_t i = 0; i < v.size(); ++i, detail::advance(idx, grid.counts())) {
        for (std::size_t d = 0; d < grid.dim(); ++d) x[d] = grid.point(d, idx[d]);
        v[i] = fn(std::span<const double>(x));
    }
    return SampledField(grid, std::move(v));
}

/// Samples fn(x, g) on grid x group axis.
template <class Fn>
SampledField sample_with_group(const Grid& grid, std::vector<double> weights, Fn&& fn) {
    const std::size_t groups = weights.size();
    std::vector<cplx> v(grid.size() * groups);
    std::vector<std::size_t> idx(grid.dim());
    std::vector<double> x(grid.dim());
    for (std::size_t i = 0; i < grid.size(); ++i, detail::advance(idx, grid.counts())) {
        for (std::size_t d = 0; d < grid.dim(); ++d) x[d] = grid.point(d, idx[d]);
        for (std::size_t g = 0; g < groups; ++g) v[g * grid.size() + i] = fn(std::span<const double>(x), g);
    }
    return SampledField(grid, std::move(weights), std::move(v));
}

inline SampledField with_values(const SampledField& like, std::vector<cplx> values) {
    return SampledField(like.grid(), std::vector<double>(like.group_weights().begin(), like.group_weights().end()),
                        std::move(values));
}

inline SampledField scaled(const SampledField& f, cplx c) {
    std::vector<cplx> v(f.values().begin(), f.values().end());
    for (auto& z : v) z *= c;
    return with_values(f, std::move(v));
}

/// alpha f + beta g on a common grid and group axis.
inline SampledField linear_combination(cplx alpha, const SampledField& f, cplx beta, const SampledField& g) {
    if (!(f.grid() == g.grid()) || f.group_size() != g.group_size())
        throw std::invalid_argument("linear_combination: fields live on different grids");
    std::vector<cplx> v(f.values().size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = alpha * f.values()[i] + beta * g.values()[i];
    return with_values(f, std::move(v));
}

/// Extracts the spatial slice of one group point as a group-free field.
inline SampledField group_slice(const SampledField& f, std::size_t g) {
    auto s = f.slice(g);
    return SampledField(f.grid(), std::vector<cplx>(s.begin(), s.end()));
}

struct MomentSpec {
    double a = 1.0;
    double b = 1.0;

    MomentSpec() = default;
    MomentSpec(double a_, double b_) : a(a_), b(b_) {
        if (!(a >= 1.0)) throw std::invalid_argument("a must be >= 1");
        if (!(b >= 1.0)) throw std::invalid_argument("b must be >= 1");
    }
};

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// A weighted moment together with the share of it carried by the outermost
/// layer of grid cells, which is how truncation of a non-decaying integrand
/// shows up.
struct MomentEstimate {
    double value = 0.0;
    double boundary_fraction = 0.0;
};

namespace detail {

inline bool on_boundary(const Grid& grid, std::span<const std::size_t> idx) {
    for (std::size_t d = 0; d < grid.dim(); ++d)
        if (idx[d] == 0 || idx[d] + 1 == grid.count(d)) return true;
    return false;
}

}  // namespace detail

/// Riemann sum of ||x||^exponent |f|^2 (times group weights).
inline MomentEstimate moment_estimate(const SampledField& f, double exponent) {
    if (!(exponent >= 0.0)) throw std::invalid_argument("weighted_moment: exponent must be nonnegative");
    const Grid& grid = f.grid();
    const std::size_t n = grid.size();
    std::vector<std::size_t> idx(grid.dim());
    double total = 0.0;
    double boundary = 0.0;
    // even integer exponents by repeated multiplication
    const bool even = exponent == std::floor(exponent) && std::fmod(exponent, 2.0) == 0.0 && exponent <= 64.0;
    const int half = even ? static_cast<int>(exponent / 2.0) : 0;
    for (std::size_t i = 0; i < n; ++i, detail::advance(idx, grid.counts())) {
        double r2 = 0.0;
        for (std::size_t d = 0; d < grid.dim(); ++d) {
            const double x = grid.point(d, idx[d]);
            r2 += x * x;
        }
        double w = 1.0;
        if (even)
            for (int k = 0; k < half; ++k) w *= r2;
        else
            w = std::pow(std::sqrt(r2), exponent);
        double acc = 0.0;
        for (std::size_t g = 0; g < f.group_size(); ++g) acc += f.group_weight(g) * std::norm(f.values()[g * n + i]);
        const double term = w * acc;
        total += term;
        if (detail::on_boundary(grid, idx)) boundary += term;
    }
    const double vol = grid.cell_volume();
    MomentEstimate m;
    m.value = total * vol;
    m.boundary_fraction = total > 0.0 ? boundary / total : 0.0;
    return m;
}

inline double weighted_moment(const SampledField& f, double exponent) { return moment_estimate(f, exponent).value; }

inline double l2_norm_sq(const SampledField& f) { return moment_estimate(f, 0.0).value; }

/// Share of |f|^2 mass on the outermost cells (no moment weight).
inline double boundary_mass_fraction(const SampledField& f) { return moment_estimate(f, 0.0).boundary_fraction; }

/// Largest |f| on boundary cells relative to the largest |f| overall.
inline double boundary_amplitude_ratio(const SampledField& f) {
    const Grid& grid = f.grid();
    std::vector<std::size_t> idx(grid.dim());
    double peak = 0.0, edge = 0.0;
    for (std::size_t g = 0; g < f.group_size(); ++g) {
        auto s = f.slice(g);
        std::fill(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < s.size(); ++i, detail::advance(idx, grid.counts())) {
            const double a = std::abs(s[i]);
            peak = std::max(peak, a);
            if (detail::on_boundary(grid, idx)) edge = std::max(edge, a);
        }
    }
    return peak > 0.0 ? edge / peak : 0.0;
}

// ---------------------------------------------------------------------------
// Fourier transforms
// ---------------------------------------------------------------------------

namespace detail {

// (-i)^N for the forward transform, i^N for the inverse.
inline cplx quarter_turn_power(std::size_t n, bool forward) {
    static constexpr cplx fwd[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
    static constexpr cplx bwd[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return forward ? fwd[n % 4] : bwd[n % 4];
}

/// Continuous-transform approximation along `axes` of every group slice.
/// Returns values on grid.dual_along(axes).
inline std::vector<cplx> transform_axes(const Grid& grid, std::size_t groups, std::span<const cplx> in,
                                        std::span<const std::size_t> axes, bool forward) {
    std::vector<cplx> out(in.begin(), in.end());
    if (axes.empty()) return out;
    std::vector<std::size_t> shape;
    shape.reserve(grid.dim() + 1);
    shape.push_back(groups);
    for (auto n : grid.counts()) shape.push_back(n);
    const auto strides = row_major_strides(shape);

    // Pre- and post-multiply by (-1)^index along each transformed axis and
    // scale by spacing * (-+i)^N.
    cplx scale = 1.0;
    for (auto a : axes) scale *= grid.spacing(a) * quarter_turn_power(grid.count(a), forward);
    std::vector<std::size_t> idx(shape.size(), 0);
    auto parity = [&] {
        std::size_t p = 0;
        for (auto a : axes) p += idx[a + 1];
        return (p & 1U) != 0;
    };
    for (std::size_t i = 0; i < out.size(); ++i, detail::advance(idx, shape))
        if (parity()) out[i] = -out[i];
    std::vector<std::size_t> fft_axes;
    for (auto a : axes) fft_axes.push_back(a + 1);
    dft_axes(out, shape, fft_axes, forward ? Direction::forward : Direction::backward);
    for (std::size_t i = 0; i < out.size(); ++i, detail::advance(idx, shape)) out[i] *= parity() ? -scale : scale;
    return out;
}

inline std::vector<std::size_t> all_axes(const Grid& g) {
    std::vector<std::size_t> axes(g.dim());
    std::iota(axes.begin(), axes.end(), std::size_t{0});
    return axes;
}

}  // namespace detail

/// Approximates the transform at the dual grid points; the group axis (if
/// any) is carried along untouched.
inline SampledField euclidean_ft(const SampledField& f) {
    const auto axes = detail::all_axes(f.grid());
    auto v = detail::transform_axes(f.grid(), f.group_size(), f.values(), axes, true);
    return SampledField(f.grid().dual(), {f.group_weights().begin(), f.group_weights().end()}, std::move(v));
}

/// Exact inverse of euclidean_ft: maps dual-grid samples back to the grid
/// whose dual is F's grid.
inline SampledField inverse_euclidean_ft(const SampledField& F) {
    const auto axes = detail::all_axes(F.grid());
    auto v = detail::transform_axes(F.grid(), F.group_size(), F.values(), axes, false);
    return SampledField(F.grid().dual(), {F.group_weights().begin(), F.group_weights().end()}, std::move(v));
}

/// Transform along a subset of axes only; the remaining axes stay in x.
inline SampledField partial_ft(const SampledField& f, std::span<const std::size_t> axes) {
    auto v = detail::transform_axes(f.grid(), f.group_size(), f.values(), axes, true);
    return SampledField(f.grid().dual_along(axes), {f.group_weights().begin(), f.group_weights().end()}, std::move(v));
}

/// Direct-summation transform of a group-free field at arbitrary points of
/// its dual box.
inline std::vector<cplx> nudft_at(const SampledField& f, std::span<const std::vector<double>> points) {
    if (f.has_group_axis()) throw std::invalid_argument("nudft_at: field carries a group axis; transform a slice");
    const Grid& grid = f.grid();
    const std::size_t dim = grid.dim();
    std::vector<cplx> result;
    result.reserve(points.size());
    std::vector<std::vector<cplx>> phase(dim);
    std::vector<cplx> work, next;
    for (const auto& xi : points) {
        if (xi.size() != dim) throw std::invalid_argument("nudft_at: point dimension mismatch");
        for (std::size_t d = 0; d < dim; ++d) {
            const double bound = grid.dual_half_extent(d);
            if (!(std::abs(xi[d]) <= bound * (1.0 + 1e-12)))
                throw std::domain_error("nudft_at: point outside dual box on axis " + std::to_string(d));
            phase[d].resize(grid.count(d));
            for (std::size_t j = 0; j < grid.count(d); ++j)
                phase[d][j] = std::polar(1.0, -2.0 * pi * grid.point(d, j) * xi[d]);
        }
        // Contract the last axis first.
        work.assign(f.values().begin(), f.values().end());
        for (std::size_t d = dim; d-- > 0;) {
            const std::size_t n = grid.count(d);
            const std::size_t outer = work.size() / n;
            next.assign(outer, cplx{});
            for (std::size_t o = 0; o < outer; ++o) {
                cplx acc{};
                const cplx* row = work.data() + o * n;
                for (std::size_t j = 0; j < n; ++j) acc += row[j] * phase[d][j];
                next[o] = acc;
            }
            work.swap(next);
        }
        result.push_back(work[0] * grid.cell_volume());
    }
    return result;
}

/// d f / d x_axis via transform, multiplication by 2 pi i xi, inverse
/// transform. The unpaired Nyquist mode of an even-length axis is dropped.
inline SampledField spectral_partial(const SampledField& f, std::size_t axis) {
    const Grid& grid = f.grid();
    if (axis >= grid.dim()) throw std::invalid_argument("spectral_partial: axis out of range");
    const std::size_t ax[1] = {axis};
    auto spec = detail::transform_axes(grid, f.group_size(), f.values(), ax, true);
    const Grid dual = grid.dual_along(ax);
    const std::size_t n = grid.count(axis);
    const auto strides = grid.strides();
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const std::size_t k = (i / strides[axis]) % n;
        if (n % 2 == 0 && k == 0) {
            spec[i] = 0.0;
            continue;
        }
        spec[i] *= cplx(0.0, 2.0 * pi * dual.point(axis, k));
    }
    auto v = detail::transform_axes(dual, f.group_size(), spec, ax, false);
    return with_values(f, std::move(v));
}

/// Samples x -> f(t x) on f's own grid by trigonometric interpolation of
/// the transform along each axis; points with |t x_i| >= L_i are set to 0.
/// Valid when f has decayed at its box boundary.
inline SampledField resample_scaled(const SampledField& f, double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("resample_scaled: scale must be positive");
    if (t == 1.0) return f;
    const Grid& grid = f.grid();
    std::vector<cplx> cur(f.values().begin(), f.values().end());
    std::vector<std::size_t> shape{f.group_size()};
    for (auto n : grid.counts()) shape.push_back(n);
    const auto strides = detail::row_major_strides(shape);
    for (std::size_t d = 0; d < grid.dim(); ++d) {
        const std::size_t n = grid.count(d);
        const std::size_t ax[1] = {d};
        auto spec = detail::transform_axes(grid, f.group_size(), cur, ax, true);
        const Grid dual = grid.dual_along(ax);
        const double hd = dual.spacing(d);
        std::vector<cplx> mat(n * n);
        for (std::size_t j = 0; j < n; ++j) {
            const double y = t * grid.point(d, j);
            if (std::abs(y) >= grid.half_extent(d)) continue;
            for (std::size_t k = 0; k < n; ++k) mat[j * n + k] = hd * std::polar(1.0, 2.0 * pi * y * dual.point(d, k));
        }
        const std::size_t stride = strides[d + 1];
        const std::size_t outer = cur.size() / (n * stride);
        std::vector<cplx> line(n);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t in = 0; in < stride; ++in) {
                const std::size_t base = o * n * stride + in;
                for (std::size_t j = 0; j < n; ++j) {
                    cplx acc{};
                    for (std::size_t k = 0; k < n; ++k) acc += mat[j * n + k] * spec[base + k * stride];
                    line[j] = acc;
                }
                for (std::size_t j = 0; j < n; ++j) cur[base + j * stride] = line[j];
            }
    }
    return with_values(f, std::move(cur));
}

// ---------------------------------------------------------------------------
// Binary serialization
//
//   bytes 0..7   magic "HRMFIELD"
//   u32          format version (1)
//   u32          dim
//   f64[dim]     half extents
//   u64[dim]     counts
//   u64          group size G (0 = no group axis)
//   f64[G]       group weights
//   f64[2*M]     values as interleaved (re, im), storage order of SampledField
//
// All scalars in host byte order (little-endian on every supported target).
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr char field_magic[8] = {'H', 'R', 'M', 'F', 'I', 'E', 'L', 'D'};

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("read_field: truncated stream");
    return v;
}

}  // namespace detail

inline void write_field(std::ostream& os, const SampledField& f) {
    os.write(detail::field_magic, sizeof detail::field_magic);
    detail::put<std::uint32_t>(os, 1);
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid().dim()));
    for (double L : f.grid().half_extents()) detail::put<double>(os, L);
    for (auto n : f.grid().counts()) detail::put<std::uint64_t>(os, n);
    detail::put<std::uint64_t>(os, f.group_weights().size());
    for (double w : f.group_weights()) detail::put<double>(os, w);
    for (const auto& v : f.values()) {
        detail::put<double>(os, v.real());
        detail::put<double>(os, v.imag());
    }
    if (!os) throw std::runtime_error("write_field: stream error");
}

inline SampledField read_field(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, detail::field_magic, sizeof magic) != 0)
        throw std::runtime_error("read_field: bad magic");
    if (detail::get<std::uint32_t>(is) != 1) throw std::runtime_error("read_field: unsupported version");
    const auto dim = detail::get<std::uint32_t>(is);
    if (dim == 0 || dim > 16) throw std::runtime_error("read_field: implausible dimension");
    std::vector<double> ext(dim);
    std::vector<std::size_t> counts(dim);
    for (auto& L : ext) L = detail::get<double>(is);
    for (auto& n : counts) n = static_cast<std::size_t>(detail::get<std::uint64_t>(is));
    Grid grid(std::move(ext), std::move(counts));
    const auto groups = detail::get<std::uint64_t>(is);
    std::vector<double> weights(groups);
    for (auto& w : weights) w = detail::get<double>(is);
    std::vector<cplx> values(grid.size() * std::max<std::uint64_t>(groups, 1));
    for (auto& v : values) {
        const double re = detail::get<double>(is);
        const double im = detail::get<double>(is);
        v = {re, im};
    }
    return SampledField(std::move(grid), std::move(weights), std::move(values));
}

}  // namespace harmonic
