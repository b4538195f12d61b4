#pragma once

// Position/momentum moment inequality on R^n and the term bookkeeping shared
// by the other groups.
//
//   n ||f||^(1/a + 1/b) / (4 pi)
//       <= (int |x|^2a |f|^2)^(1/2a) * (int |xi|^2b |F f|^2)^(1/2b)

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "harmonic/sampled_field.hpp"

namespace harmonic {

struct UncertaintyTerms {
    double lhs = 0.0;
    double position_term = 0.0;
    double momentum_term = 0.0;
    double ratio = 0.0;
    double norm_sq = 0.0;
    double position_moment = 0.0;
    double momentum_moment = 0.0;
    // Non-fatal findings: untrusted moments, spectral tails, excluded bands.
    // Each entry starts with a stable tag followed by ": ".
    std::vector<std::string> diagnostics;

    bool has_diagnostic(std::string_view tag) const {
        for (const auto& d : diagnostics)
            if (d.starts_with(tag)) return true;
        return false;
    }
};

namespace diag {
inline constexpr std::string_view untrusted_moment = "untrusted moment";
inline constexpr std::string_view lambda_tail = "lambda tail mass";
inline constexpr std::string_view singular_band = "singular band mass";
inline constexpr std::string_view spectrum_not_decayed = "spectrum not decayed";
inline constexpr std::string_view lambda_unstable = "lambda quadrature unstable";
}  // namespace diag

/// Boundary-cell share above which a moment is reported as untrusted.
inline constexpr double moment_trust_threshold = 1e-6;

inline std::string format_number(double v) {
    std::ostringstream os;
    os.precision(6);
    os << std::scientific << v;
    return os.str();
}

inline void require_valid(double norm_sq) {
    if (!(norm_sq > 0.0)) throw std::invalid_argument("zero field");
}

inline void note_moment(std::vector<std::string>& out, const char* which, const MomentEstimate& m) {
    if (m.boundary_fraction > moment_trust_threshold)
        out.push_back(std::string(diag::untrusted_moment) + ": " + which + " boundary fraction " +
                      format_number(m.boundary_fraction));
}

/// Assembles the terms from the three integrals: lhs = lhs_constant *
/// ||f||^(1/a+1/b), position = moment^(1/2a), momentum = moment^(1/2b).
inline UncertaintyTerms assemble_terms(double norm_sq, double position_moment, double momentum_moment,
                                       const MomentSpec& spec, double lhs_constant) {
    require_valid(norm_sq);
    UncertaintyTerms t;
    t.norm_sq = norm_sq;
    t.position_moment = position_moment;
    t.momentum_moment = momentum_moment;
    t.lhs = lhs_constant * std::pow(std::sqrt(norm_sq), 1.0 / spec.a + 1.0 / spec.b);
    t.position_term = std::pow(position_moment, 1.0 / (2.0 * spec.a));
    t.momentum_term = std::pow(momentum_moment, 1.0 / (2.0 * spec.b));
    t.ratio = t.position_term * t.momentum_term / t.lhs;
    return t;
}

/// A field together with its transform, so a lattice of exponents reuses one
/// FFT.
class EuclideanMoments {
public:
    explicit EuclideanMoments(SampledField f) : f_(std::move(f)), spectrum_(euclidean_ft(f_)) {
        norm_sq_ = l2_norm_sq(f_);
        require_valid(norm_sq_);
    }

    const SampledField& field() const noexcept { return f_; }
    const SampledField& spectrum() const noexcept { return spectrum_; }
    double norm_sq() const noexcept { return norm_sq_; }

    UncertaintyTerms terms(const MomentSpec& spec) const {
        const auto pos = moment_estimate(f_, 2.0 * spec.a);
        const auto mom = moment_estimate(spectrum_, 2.0 * spec.b);
        const double n = static_cast<double>(f_.grid().dim());
        auto t = assemble_terms(norm_sq_, pos.value, mom.value, spec, n / (4.0 * pi));
        note_moment(t.diagnostics, "position", pos);
        note_moment(t.diagnostics, "momentum", mom);
        return t;
    }

private:
    SampledField f_;
    SampledField spectrum_;
    double norm_sq_ = 0.0;
};

inline UncertaintyTerms rn_uncertainty(const SampledField& f, const MomentSpec& spec) {
    if (f.has_group_axis()) throw std::invalid_argument("rn_uncertainty: field carries a group axis");
    return EuclideanMoments(f).terms(spec);
}

/// Terms for f_t(x) = t^(n/2) f(t x) at each scale t.
inline std::vector<UncertaintyTerms> dilation_sweep(const SampledField& f, const MomentSpec& spec,
                                                    std::span<const double> scales) {
    if (f.has_group_axis()) throw std::invalid_argument("dilation_sweep: field carries a group axis");
    const double base = l2_norm_sq(f);
    require_valid(base);
    const double n = static_cast<double>(f.grid().dim());
    std::vector<UncertaintyTerms> out;
    out.reserve(scales.size());
    for (double t : scales) {
        if (!(t > 0.0)) throw std::invalid_argument("dilation_sweep: scales must be positive");
        const auto ft = t == 1.0 ? f : scaled(resample_scaled(f, t), std::pow(t, n / 2.0));
        EuclideanMoments em(ft);
        const double drift = std::abs(em.norm_sq() - base) / base;
        if (drift > 1e-8 || boundary_amplitude_ratio(ft) > 1e-8 || boundary_amplitude_ratio(em.spectrum()) > 1e-8)
            throw std::domain_error("dilation_sweep: scale " + format_number(t) +
                                    " pushes the field out of the box (norm drift " + format_number(drift) + ")");
        out.push_back(em.terms(spec));
    }
    return out;
}

}  // namespace harmonic
