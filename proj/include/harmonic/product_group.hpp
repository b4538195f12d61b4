#pragma once

// Fourier transform on R^n x K:
//
//   f^(y, sigma) = int_K int_R^n f(x, k) exp(-2 pi i <x, y>) sigma(k^-1) dx dk
//
// with normalized Haar measure on K and the dual measure on K^ weighted by
// d_sigma, so that  int sum_sigma d_sigma ||f^(y, sigma)||_HS^2 dy = ||f||^2.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "harmonic/compact_dual.hpp"
#include "harmonic/corpus.hpp"
#include "harmonic/euclidean_uncertainty.hpp"
#include "harmonic/sampled_field.hpp"

namespace harmonic {

struct ProductField {
    SampledField base;  // group axis = samples of K
    GroupQuadrature group;

    ProductField(SampledField f, GroupQuadrature q) : base(std::move(f)), group(std::move(q)) {
        if (!base.has_group_axis() || base.group_size() != group.size())
            throw std::invalid_argument("product field: group axis does not match the group");
        double total = 0.0;
        for (std::size_t k = 0; k < group.size(); ++k) {
            total += group.weights[k];
            if (base.group_weight(k) != group.weights[k])
                throw std::invalid_argument("product field: field weights differ from the group's Haar weights");
        }
        if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("product field: Haar weights must sum to 1");
    }
};

/// Per irrep, a d x d matrix at every dual grid point, stored
/// entries[s][y * d * d + i * d + j].
struct ProductDualField {
    Grid dual;
    std::vector<int> dims;
    std::vector<std::vector<cplx>> entries;

    Matrix at(std::size_t s, std::size_t y) const {
        const int d = dims[s];
        Matrix m(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = entries[s][y * d * d + i * d + j];
        return m;
    }
    /// sum_sigma d_sigma ||f^(y, sigma)||_HS^2 at dual point y.
    double weighted_hs_sq(std::size_t y) const {
        double acc = 0.0;
        for (std::size_t s = 0; s < dims.size(); ++s) {
            const std::size_t dd = static_cast<std::size_t>(dims[s]) * dims[s];
            double hs = 0.0;
            for (std::size_t e = 0; e < dd; ++e) hs += std::norm(entries[s][y * dd + e]);
            acc += dims[s] * hs;
        }
        return acc;
    }
};

namespace detail {

// out_s(p) = sum_k w_k sigma(k^-1) in_k(p) for samples laid out in[k * P + p].
inline ProductDualField apply_k_transform(const Grid& g, const GroupQuadrature& q, std::span<const cplx> in) {
    const std::size_t P = g.size();
    ProductDualField out{g, q.dims, {}};
    for (std::size_t s = 0; s < q.dims.size(); ++s) {
        const int d = q.dims[s];
        const std::size_t dd = static_cast<std::size_t>(d) * d;
        std::vector<cplx> e(P * dd);
        for (std::size_t k = 0; k < q.size(); ++k) {
            const Matrix& m = q.inverse_matrices[s][k];
            const double w = q.weights[k];
            const cplx* src = in.data() + k * P;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    const cplx c = w * m(i, j);
                    if (c == cplx{}) continue;
                    cplx* dst = e.data() + i * d + j;
                    for (std::size_t p = 0; p < P; ++p) dst[p * dd] += c * src[p];
                }
        }
        out.entries.push_back(std::move(e));
    }
    return out;
}

}  // namespace detail

/// Euclidean transform first, then the K transform.
inline ProductDualField product_ft(const ProductField& f) {
    const auto F1 = euclidean_ft(f.base);
    return detail::apply_k_transform(F1.grid(), f.group, F1.values());
}

/// K transform first, then the Euclidean transform of every matrix entry.
inline ProductDualField product_ft_k_first(const ProductField& f) {
    auto K = detail::apply_k_transform(f.base.grid(), f.group, f.base.values());
    const Grid& g = f.base.grid();
    const auto axes = detail::all_axes(g);
    for (std::size_t s = 0; s < K.dims.size(); ++s) {
        const std::size_t dd = static_cast<std::size_t>(K.dims[s]) * K.dims[s];
        // Entry-major copy so each matrix entry is one field slice.
        std::vector<cplx> slices(g.size() * dd);
        for (std::size_t p = 0; p < g.size(); ++p)
            for (std::size_t e = 0; e < dd; ++e) slices[e * g.size() + p] = K.entries[s][p * dd + e];
        auto t = detail::transform_axes(g, dd, slices, axes, true);
        for (std::size_t p = 0; p < g.size(); ++p)
            for (std::size_t e = 0; e < dd; ++e) K.entries[s][p * dd + e] = t[e * g.size() + p];
    }
    K.dual = g.dual();
    return K;
}

/// Transform plus the integrals needed for Plancherel and the inequality.
class ProductSpectrum {
public:
    explicit ProductSpectrum(const ProductField& f) : f_(f), hat_(product_ft(f)) {
        norm_sq_ = l2_norm_sq(f_.base);
        require_valid(norm_sq_);
    }

    const ProductDualField& dual() const noexcept { return hat_; }
    double norm_sq() const noexcept { return norm_sq_; }

    /// int |y|^exponent sum_sigma d_sigma ||f^||^2 dy with its boundary share.
    MomentEstimate dual_moment(double exponent) const {
        const Grid& g = hat_.dual;
        std::vector<std::size_t> idx(g.dim());
        double total = 0.0, boundary = 0.0;
        for (std::size_t y = 0; y < g.size(); ++y) {
            g.unravel(y, idx);
            double r2 = 0.0;
            for (std::size_t d = 0; d < g.dim(); ++d) r2 += g.point(d, idx[d]) * g.point(d, idx[d]);
            const double term = (exponent == 0.0 ? 1.0 : std::pow(std::sqrt(r2), exponent)) * hat_.weighted_hs_sq(y);
            total += term;
            if (detail::on_boundary(g, idx)) boundary += term;
        }
        return {total * g.cell_volume(), total > 0.0 ? boundary / total : 0.0};
    }

    double plancherel_ratio() const { return dual_moment(0.0).value / norm_sq_; }

    UncertaintyTerms terms(const MomentSpec& spec) const {
        const auto pos = moment_estimate(f_.base, 2.0 * spec.a);
        const auto mom = dual_moment(2.0 * spec.b);
        const double n = static_cast<double>(f_.base.grid().dim());
        auto t = assemble_terms(norm_sq_, pos.value, mom.value, spec, n / (4.0 * pi));
        note_moment(t.diagnostics, "position", pos);
        note_moment(t.diagnostics, "momentum", mom);
        return t;
    }

    /// Both sides of  int |y|^2 ||f^||^2 <= (int |y|^2b ||f^||^2)^(1/b) ||f||^(2 - 2/b).
    std::pair<double, double> holder_step(double b) const {
        if (!(b >= 1.0)) throw std::invalid_argument("b must be >= 1");
        const double left = dual_moment(2.0).value;
        const double right = std::pow(dual_moment(2.0 * b).value, 1.0 / b) * std::pow(norm_sq_, 1.0 - 1.0 / b);
        return {left, right};
    }

private:
    ProductField f_;
    ProductDualField hat_;
    double norm_sq_ = 0.0;
};

inline double product_plancherel_ratio(const ProductField& f) { return ProductSpectrum(f).plancherel_ratio(); }

inline UncertaintyTerms product_uncertainty(const ProductField& f, const MomentSpec& spec) {
    return ProductSpectrum(f).terms(spec);
}

/// f(x, k) = sum_p g_p(x) phi_p(k) with two Euclidean corpus members g_p and
/// random phi_p on K. On the circle phi_p is a trigonometric polynomial of
/// degree <= M/2, so the character truncation loses nothing.
inline ProductField product_corpus_member(const Grid& grid, const GroupQuadrature& q, std::uint64_t seed,
                                          std::size_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), 0x6b5au};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> nd;
    const std::size_t G = q.size();
    std::vector<cplx> values(grid.size() * G);
    for (std::size_t p = 0; p < 2; ++p) {
        const auto g = corpus_member(grid, seed, 2 * index + p).field;
        std::vector<cplx> phi(G);
        if (q.circle_truncation > 0) {
            const int deg = q.circle_truncation / 2;
            std::vector<cplx> c(2 * deg + 1);
            for (auto& v : c) v = {nd(rng), nd(rng)};
            for (std::size_t j = 0; j < G; ++j) {
                const double th = 2.0 * pi * static_cast<double>(j) / static_cast<double>(G);
                for (int m = -deg; m <= deg; ++m) phi[j] += c[m + deg] * std::polar(1.0, m * th);
            }
        } else {
            for (auto& v : phi) v = {nd(rng), nd(rng)};
        }
        for (std::size_t k = 0; k < G; ++k)
            for (std::size_t i = 0; i < grid.size(); ++i) values[k * grid.size() + i] += phi[k] * g.values()[i];
    }
    return ProductField(SampledField(grid, q.weights, std::move(values)), q);
}

/// g(x) phi(k) for a given spatial field and function on the group samples.
inline ProductField tensor_field(const SampledField& g, std::span<const cplx> phi, const GroupQuadrature& q) {
    if (phi.size() != q.size()) throw std::invalid_argument("tensor_field: phi size does not match the group");
    std::vector<cplx> values(g.grid().size() * q.size());
    for (std::size_t k = 0; k < q.size(); ++k)
        for (std::size_t i = 0; i < g.grid().size(); ++i) values[k * g.grid().size() + i] = phi[k] * g.values()[i];
    return ProductField(SampledField(g.grid(), q.weights, std::move(values)), q);
}

}  // namespace harmonic
