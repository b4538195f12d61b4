#pragma once

// Operator-valued Fourier transform on the motion group M(2) = R^2 x| SO(2).
//
// For lambda > 0 the representation acts on L^2(SO(2)) by
//     pi_lambda(z, theta) phi(alpha) = exp(i lambda <u_alpha^-1 e1, z>) phi(alpha + theta),
// u_alpha^-1 e1 = (cos alpha, -sin alpha). In the character basis
// e_m(alpha) = exp(i m alpha) its matrix elements are
//     <pi_lambda(z, theta) e_m, e_m'> = e^{i m theta} e^{-i (m-m') phi} i^(m-m') J_(m-m')(lambda |z|),
// phi = arg z. The transform f^(lambda) = int f(z, theta) pi_lambda(z, theta)^* dz dtheta/2pi
// has entries
//     F_(m,m') = int dalpha/2pi e^{-i (m-m') alpha} Ff_m(lambda (cos alpha, -sin alpha) / 2pi),
// f_m the m-th circle coefficient of f and F the Euclidean transform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "harmonic/corpus.hpp"
#include "harmonic/euclidean_uncertainty.hpp"
#include "harmonic/sampled_field.hpp"

namespace harmonic {

using Matrix = Eigen::MatrixXcd;

/// Truncated matrix of f^(lambda): rows/columns m = -M..M at index m + M.
struct OperatorMatrix {
    double lambda = 0.0;
    int M = 0;
    Matrix F;

    cplx at(int m, int mp) const { return F(m + M, mp + M); }
};

inline double mn_hs_norm_sq(const OperatorMatrix& F) { return F.F.squaredNorm(); }

/// Nodes and weights for int_0^Lambda g(lambda) lambda^(n-1) d lambda (n = 2),
/// composite Gauss-Legendre with 8 nodes per panel. Weights include the
/// lambda^(n-1) factor.
struct LambdaGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
    double cutoff = 0.0;
    int panels = 0;
    static constexpr int dimension = 2;
    static constexpr double c2 = 1.0;  // 2 / (2^(n/2) Gamma(n/2)) at n = 2
};

inline LambdaGrid make_lambda_grid(double cutoff, int panels) {
    if (!(cutoff > 0.0)) throw std::invalid_argument("lambda grid: cutoff must be positive");
    if (panels < 1) throw std::invalid_argument("lambda grid: need at least one panel");
    using GL = boost::math::quadrature::gauss<double, 8>;
    LambdaGrid g;
    g.cutoff = cutoff;
    g.panels = panels;
    const double width = cutoff / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * width, half = 0.5 * width;
        for (std::size_t i = GL::abscissa().size(); i-- > 0;) {
            const double x = mid - half * GL::abscissa()[i];
            g.nodes.push_back(x);
            g.weights.push_back(half * GL::weights()[i] * x);
        }
        for (std::size_t i = 0; i < GL::abscissa().size(); ++i) {
            const double x = mid + half * GL::abscissa()[i];
            g.nodes.push_back(x);
            g.weights.push_back(half * GL::weights()[i] * x);
        }
    }
    return g;
}

/// f(z, theta) on a 2-D grid times theta_j = 2 pi j / N_theta.
inline std::vector<double> circle_weights(std::size_t n_theta) {
    return std::vector<double>(n_theta, 1.0 / static_cast<double>(n_theta));
}

inline double circle_angle(std::size_t j, std::size_t n_theta) {
    return 2.0 * pi * static_cast<double>(j) / static_cast<double>(n_theta);
}

/// <pi_lambda(z, theta) e_m, e_n> by the trapezoid rule on n_alpha points.
inline cplx mn_rep_matrix_element(double lambda, double z1, double z2, double theta, int m, int n,
                                  std::size_t n_alpha = 256) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    cplx acc{};
    for (std::size_t j = 0; j < n_alpha; ++j) {
        const double a = circle_angle(j, n_alpha);
        acc += std::polar(1.0, lambda * (z1 * std::cos(a) - z2 * std::sin(a)) + (m - n) * a);
    }
    return std::polar(1.0, m * theta) * acc / static_cast<double>(n_alpha);
}

struct MotionOptions {
    int M = 32;                 // operator truncation
    std::size_t n_alpha = 0;    // points for the u-integral; 0 = the field's circle grid
    unsigned workers = 1;       // threads across lambda nodes
};

/// Circle coefficients of a motion field and the machinery to evaluate its
/// operator transform at any lambda inside the dual disc.
class MotionTransform {
public:
    MotionTransform(const SampledField& f, MotionOptions opt) : opt_(opt), grid_(f.grid()) {
        if (grid_.dim() != 2) throw std::invalid_argument("motion field: spatial grid must be 2-D");
        if (!f.has_group_axis()) throw std::invalid_argument("motion field: missing circle axis");
        const std::size_t nt = f.group_size();
        for (std::size_t j = 0; j < nt; ++j)
            if (std::abs(f.group_weight(j) - 1.0 / static_cast<double>(nt)) > 1e-15)
                throw std::invalid_argument("motion field: circle weights must be uniform");
        if (opt_.M < 1) throw std::invalid_argument("truncation M must be >= 1");
        if (nt < static_cast<std::size_t>(2 * opt_.M + 2))
            throw std::invalid_argument("N_theta = " + std::to_string(nt) + " is too small for M = " +
                                        std::to_string(opt_.M) + " (need N_theta >= 2M+2)");
        if (opt_.n_alpha == 0) opt_.n_alpha = nt;
        if (opt_.n_alpha < static_cast<std::size_t>(2 * opt_.M + 2))
            throw std::invalid_argument("n_alpha too small for the truncation");

        norm_sq_ = l2_norm_sq(f);
        const std::size_t P = grid_.size();
        // Modes beyond M+1 are needed only as a margin for the derivative check.
        const int reach = std::min<int>(opt_.M + 1, static_cast<int>(nt / 2) - 1);
        for (int m = -reach; m <= reach; ++m) {
            std::vector<cplx> fm(P);
            for (std::size_t j = 0; j < nt; ++j) {
                const cplx e = std::polar(1.0 / static_cast<double>(nt), -m * circle_angle(j, nt));
                auto s = f.slice(j);
                for (std::size_t p = 0; p < P; ++p) fm[p] += e * s[p];
            }
            double e2 = 0.0;
            for (auto v : fm) e2 += std::norm(v);
            e2 *= grid_.cell_volume();
            mode_energy_.push_back(e2);
            modes_.push_back({m, std::move(fm)});
        }
        const double total = std::max(norm_sq_, 1e-300);
        std::erase_if(modes_, [&](const Mode& md) { return mode_energy_[md.m + reach] <= 1e-24 * total; });
    }

    double norm_sq() const noexcept { return norm_sq_; }
    const Grid& grid() const noexcept { return grid_; }
    const MotionOptions& options() const noexcept { return opt_; }
    std::size_t active_modes() const noexcept { return modes_.size(); }

    /// Radius of the disc inscribed in the dual box, in lambda units.
    double max_lambda() const {
        return 2.0 * pi * std::min(grid_.dual_half_extent(0), grid_.dual_half_extent(1));
    }

    /// Truncated transform with rows/columns |m| <= M_out.
    OperatorMatrix transform(double lambda, int M_out) const {
        if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
        if (lambda > max_lambda() * (1.0 + 1e-12))
            throw std::domain_error("lambda " + format_number(lambda) + " exceeds the dual disc radius " +
                                    format_number(max_lambda()));
        const std::size_t na = opt_.n_alpha;
        const std::size_t n0 = grid_.count(0), n1 = grid_.count(1);
        using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        RowMat ex(na, n0), ey(na, n1);
        const double r = lambda / (2.0 * pi);
        for (std::size_t a = 0; a < na; ++a) {
            const double al = circle_angle(a, na);
            const double xi0 = r * std::cos(al), xi1 = -r * std::sin(al);
            for (std::size_t j = 0; j < n0; ++j) ex(a, j) = std::polar(1.0, -2.0 * pi * grid_.point(0, j) * xi0);
            for (std::size_t l = 0; l < n1; ++l) ey(a, l) = std::polar(1.0, -2.0 * pi * grid_.point(1, l) * xi1);
        }
        OperatorMatrix out{lambda, M_out, Matrix::Zero(2 * M_out + 1, 2 * M_out + 1)};
        const double vol = grid_.cell_volume();
        std::vector<cplx> phi(na);
        for (const auto& md : modes_) {
            if (std::abs(md.m) > M_out) continue;
            Eigen::Map<const RowMat> fm(md.values.data(), n0, n1);
            const RowMat t = ex * fm;
            for (std::size_t a = 0; a < na; ++a) phi[a] = vol * (t.row(a).cwiseProduct(ey.row(a))).sum();
            for (int mp = -M_out; mp <= M_out; ++mp) {
                const int k = md.m - mp;
                cplx acc{};
                for (std::size_t a = 0; a < na; ++a) acc += phi[a] * std::polar(1.0, -k * circle_angle(a, na));
                out.F(md.m + M_out, mp + M_out) = acc / static_cast<double>(na);
            }
        }
        return out;
    }

    OperatorMatrix transform(double lambda) const { return transform(lambda, opt_.M); }

    /// ||f^(lambda_q)||_HS^2 at every node, computed across opt.workers threads.
    std::vector<double> hs_profile(std::span<const double> nodes) const {
        std::vector<double> out(nodes.size());
        const unsigned w = std::max(1u, std::min<unsigned>(opt_.workers, static_cast<unsigned>(nodes.size())));
        auto job = [&](unsigned id) {
            for (std::size_t q = id; q < nodes.size(); q += w) out[q] = mn_hs_norm_sq(transform(nodes[q]));
        };
        if (w == 1) {
            job(0);
        } else {
            std::vector<std::jthread> pool;
            for (unsigned id = 0; id < w; ++id) pool.emplace_back(job, id);
        }
        return out;
    }

    /// Share of Euclidean spectral energy of the circle modes lying outside
    /// the lambda disc.
    double tail_fraction() const {
        double outside = 0.0, total = 0.0;
        const double r2max = std::pow(max_lambda() / (2.0 * pi), 2);
        for (const auto& md : modes_) {
            auto F = euclidean_ft(SampledField(grid_, md.values));
            std::size_t idx[2];
            for (std::size_t i = 0; i < F.grid().size(); ++i) {
                F.grid().unravel(i, idx);
                const double a = F.grid().point(0, idx[0]), b = F.grid().point(1, idx[1]);
                const double e = std::norm(F.values()[i]);
                total += e;
                if (a * a + b * b > r2max) outside += e;
            }
        }
        return total > 0.0 ? outside / total : 0.0;
    }

private:
    struct Mode {
        int m;
        std::vector<cplx> values;
    };
    MotionOptions opt_;
    Grid grid_;
    double norm_sq_ = 0.0;
    std::vector<double> mode_energy_;
    std::vector<Mode> modes_;
};

inline OperatorMatrix mn_ft(const SampledField& f, double lambda, int M) {
    MotionOptions opt;
    opt.M = M;
    return MotionTransform(f, opt).transform(lambda);
}

/// Spectral integrals of one field on a lambda grid.
struct MotionSpectrum {
    LambdaGrid lambdas;
    std::vector<double> hs;  // ||f^(lambda_q)||^2
    double norm_sq = 0.0;
    double tail_fraction = 0.0;

    /// c2 * int lambda^exponent ||f^||^2 lambda d lambda.
    double moment(double exponent) const {
        double acc = 0.0;
        for (std::size_t q = 0; q < hs.size(); ++q)
            acc += lambdas.weights[q] * (exponent == 0.0 ? 1.0 : std::pow(lambdas.nodes[q], exponent)) * hs[q];
        return LambdaGrid::c2 * acc;
    }
    double plancherel_ratio() const { return moment(0.0) / norm_sq; }
};

inline constexpr double lambda_tail_budget = 0.01;

inline MotionSpectrum mn_spectrum(const MotionTransform& T, const LambdaGrid& grid) {
    require_valid(T.norm_sq());
    MotionSpectrum s;
    s.lambdas = grid;
    s.norm_sq = T.norm_sq();
    s.hs = T.hs_profile(grid.nodes);
    s.tail_fraction = T.tail_fraction();
    return s;
}

struct PlancherelEstimate {
    double ratio = 0.0;
    MotionSpectrum spectrum;  // at the finest panel count used
    std::vector<std::string> diagnostics;
};

inline void note_tail(std::vector<std::string>& out, double tail) {
    if (tail > lambda_tail_budget)
        out.push_back(std::string(diag::lambda_tail) + ": " + format_number(tail) + " of spectral energy beyond the lambda cutoff");
}

/// Ratio for a fixed lambda grid; reported raw (the constant is not assumed).
inline PlancherelEstimate mn_plancherel_ratio(const MotionTransform& T, const LambdaGrid& grid) {
    PlancherelEstimate e;
    e.spectrum = mn_spectrum(T, grid);
    e.ratio = e.spectrum.plancherel_ratio();
    note_tail(e.diagnostics, e.spectrum.tail_fraction);
    return e;
}

/// Panel doubling from `start_panels` until successive ratios agree to
/// `rel_tol` (relative) or `max_panels` is reached.
inline PlancherelEstimate mn_plancherel_adaptive(const MotionTransform& T, int start_panels = 4,
                                                 int max_panels = 32, double rel_tol = 1e-4) {
    require_valid(T.norm_sq());
    const double cutoff = T.max_lambda();
    auto prev = mn_plancherel_ratio(T, make_lambda_grid(cutoff, start_panels));
    for (int p = 2 * start_panels; p <= max_panels; p *= 2) {
        auto cur = mn_plancherel_ratio(T, make_lambda_grid(cutoff, p));
        const bool stable = std::abs(cur.ratio - prev.ratio) <= rel_tol * std::abs(cur.ratio);
        prev = std::move(cur);
        if (stable) return prev;
    }
    prev.diagnostics.push_back(std::string(diag::lambda_unstable) + ": ratio not stable to " + format_number(rel_tol) +
                               " at " + std::to_string(max_panels) + " panels");
    return prev;
}

struct DerivativeIdentityCheck {
    double residual = 0.0;        // ||D - i lambda F C|| / (lambda ||F||)
    double derivative_hs = 0.0;   // ||(d1 f)^(lambda)||_HS
    double bound = 0.0;           // lambda ||f^(lambda)||_HS
};

/// (d f/d z1)^(lambda) against i lambda f^(lambda) C, where C multiplies by
/// cos(alpha) (C_(m, m+-1) = 1/2). The product is formed with truncation M+1
/// and compared on |m|, |m'| <= M.
inline DerivativeIdentityCheck mn_derivative_identity_residual(const SampledField& f, double lambda,
                                                               MotionOptions opt = {}) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    const int M = opt.M;
    MotionTransform T(f, opt);
    DerivativeIdentityCheck r;
    if (T.norm_sq() == 0.0) return r;
    MotionTransform D(spectral_partial(f, 0), opt);
    const auto Fw = T.transform(lambda, M + 1);
    const auto Dm = D.transform(lambda, M);
    const int Mw = M + 1;
    Matrix C = Matrix::Zero(2 * Mw + 1, 2 * Mw + 1);
    for (int i = 0; i + 1 < 2 * Mw + 1; ++i) C(i, i + 1) = C(i + 1, i) = 0.5;
    const Matrix FC = cplx(0.0, lambda) * (Fw.F * C);
    const Matrix diff = Dm.F - FC.block(1, 1, 2 * M + 1, 2 * M + 1);
    const double fnorm = Fw.F.block(1, 1, 2 * M + 1, 2 * M + 1).norm();
    r.derivative_hs = Dm.F.norm();
    r.bound = lambda * fnorm;
    r.residual = fnorm > 0.0 ? diff.norm() / (lambda * fnorm) : 0.0;
    return r;
}

/// Inequality terms with the momentum integral divided by the measured
/// Plancherel constant kappa:
///   lhs = ||f||^(1/a+1/b) / (2 sqrt(c2)),
///   momentum = (c2 int lambda^2b ||f^||^2 lambda d lambda / kappa)^(1/2b).
inline UncertaintyTerms mn_uncertainty(const SampledField& f, const MotionSpectrum& s, double kappa,
                                       const MomentSpec& spec) {
    if (!(kappa > 0.0)) throw std::invalid_argument("Plancherel constant must be positive");
    const auto pos = moment_estimate(f, 2.0 * spec.a);
    auto t = assemble_terms(s.norm_sq, pos.value, s.moment(2.0 * spec.b) / kappa, spec,
                            1.0 / (2.0 * std::sqrt(LambdaGrid::c2)));
    note_moment(t.diagnostics, "position", pos);
    note_tail(t.diagnostics, s.tail_fraction);
    return t;
}

/// Convenience: adaptive Plancherel estimate, then the inequality with that
/// function's own kappa.
inline UncertaintyTerms mn_uncertainty(const SampledField& f, const MomentSpec& spec, MotionOptions opt = {}) {
    MotionTransform T(f, opt);
    require_valid(T.norm_sq());
    auto p = mn_plancherel_adaptive(T);
    auto t = mn_uncertainty(f, p.spectrum, p.ratio, spec);
    t.diagnostics.insert(t.diagnostics.end(), p.diagnostics.begin(), p.diagnostics.end());
    return t;
}

/// f(z, theta) = sum_p g_p(z) phi_p(theta): two 2-D corpus members times
/// random trigonometric polynomials of degree <= `degree`.
inline SampledField motion_corpus_member(const Grid& grid, std::size_t n_theta, std::uint64_t seed, std::size_t index,
                                         int degree = 8) {
    if (grid.dim() != 2) throw std::invalid_argument("motion corpus: grid must be 2-D");
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), 0x4d32u};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> nd;
    std::vector<cplx> values(grid.size() * n_theta);
    for (std::size_t p = 0; p < 2; ++p) {
        const auto g = corpus_member(grid, seed, 2 * index + p).field;
        std::vector<cplx> c(2 * degree + 1);
        for (auto& v : c) v = {nd(rng), nd(rng)};
        for (std::size_t j = 0; j < n_theta; ++j) {
            cplx phi{};
            for (int m = -degree; m <= degree; ++m) phi += c[m + degree] * std::polar(1.0, m * circle_angle(j, n_theta));
            for (std::size_t i = 0; i < grid.size(); ++i) values[j * grid.size() + i] += phi * g.values()[i];
        }
    }
    return SampledField(grid, circle_weights(n_theta), std::move(values));
}

/// g(z) * exp(i m theta) on the circle grid.
inline SampledField motion_tensor(const SampledField& g, std::size_t n_theta, int m) {
    std::vector<cplx> v(g.grid().size() * n_theta);
    for (std::size_t j = 0; j < n_theta; ++j) {
        const cplx e = std::polar(1.0, m * circle_angle(j, n_theta));
        for (std::size_t i = 0; i < g.grid().size(); ++i) v[j * g.grid().size() + i] = e * g.values()[i];
    }
    return SampledField(g.grid(), circle_weights(n_theta), std::move(v));
}

}  // namespace harmonic
