#pragma once

// Nilpotent groups through cross-section descriptors.
//
// G is identified with R^n through exponential coordinates of a strong Malcev
// basis; f is sampled in those coordinates. For xi on the cross-section W
//
//   ||pi_xi(f)||_HS^2 = |h(xi)| int |F f(subst(xi, t))|^2 dt,
//
// with F the Euclidean transform (e^{-2 pi i <x, xi>}) and t the integration
// variables sitting in the vanishing slots. Plancherel measure |pf(xi)| d xi.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "harmonic/corpus.hpp"
#include "harmonic/euclidean_uncertainty.hpp"
#include "harmonic/expression.hpp"
#include "harmonic/sampled_field.hpp"

namespace harmonic {

// ---------------------------------------------------------------------------
// Lie algebra data, jump indices, Pfaffian
// ---------------------------------------------------------------------------

/// [X_i, X_j] = sum_k c(i, j, k) X_k, 0-based indices internally.
struct LieAlgebraData {
    std::size_t n = 0;
    std::vector<std::string> labels;
    std::vector<double> c;  // c[(i * n + j) * n + k]

    explicit LieAlgebraData(std::size_t dim = 0) : n(dim), c(dim * dim * dim, 0.0) {
        for (std::size_t i = 0; i < dim; ++i) labels.push_back("X" + std::to_string(i + 1));
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return c[(i * n + j) * n + k]; }
    /// Sets [X_i, X_j] component k and its antisymmetric partner.
    void set_bracket(std::size_t i, std::size_t j, std::size_t k, double v) {
        c[(i * n + j) * n + k] = v;
        c[(j * n + i) * n + k] = -v;
    }
};

/// Antisymmetry, Jacobi and the strong Malcev flag condition [g, g_j] in g_(j-1).
inline std::vector<std::string> validate_lie(const LieAlgebraData& g, double tol = 1e-12) {
    std::vector<std::string> bad;
    const std::size_t n = g.n;
    if (g.c.size() != n * n * n) return {"structure constant array has the wrong size"};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                if (std::abs(g.at(i, j, k) + g.at(j, i, k)) > tol)
                    bad.push_back("antisymmetry fails for [X" + std::to_string(i + 1) + ", X" + std::to_string(j + 1) + "]");
                if (g.at(i, j, k) != 0.0 && k >= std::min(i, j))
                    bad.push_back("[X" + std::to_string(i + 1) + ", X" + std::to_string(j + 1) + "] leaves the flag (component X" +
                                  std::to_string(k + 1) + ")");
            }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t l = 0; l < n; ++l)
                for (std::size_t m = 0; m < n; ++m) {
                    // [X_i,[X_j,X_l]] + [X_j,[X_l,X_i]] + [X_l,[X_i,X_j]], component m
                    double s = 0.0;
                    for (std::size_t k = 0; k < n; ++k)
                        s += g.at(j, l, k) * g.at(i, k, m) + g.at(l, i, k) * g.at(j, k, m) + g.at(i, j, k) * g.at(l, k, m);
                    if (std::abs(s) > tol)
                        bad.push_back("Jacobi fails for (X" + std::to_string(i + 1) + ", X" + std::to_string(j + 1) + ", X" +
                                      std::to_string(l + 1) + ")");
                }
    return bad;
}

/// Thread-like algebra: [X_n, X_j] = X_(j-1) for 2 <= j <= n-1.
inline LieAlgebraData threadlike_algebra(std::size_t n) {
    if (n < 3) throw std::invalid_argument("thread-like algebra needs n >= 3");
    LieAlgebraData g(n);
    for (std::size_t j = 2; j <= n - 1; ++j) g.set_bracket(n - 1, j - 1, j - 2, 1.0);
    return g;
}

struct JumpData {
    std::vector<std::size_t> indices;  // e(xi), 1-based; S = e(xi)
    std::vector<std::size_t> rest;     // T
    Eigen::MatrixXd skew;              // M_S(xi)
    bool ill_conditioned = false;
    std::string note;
};

/// B_xi(X_i, X_j) = xi([X_i, X_j]).
inline Eigen::MatrixXd skew_form(const LieAlgebraData& g, std::span<const double> xi) {
    if (xi.size() != g.n) throw std::invalid_argument("functional dimension differs from the algebra");
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(g.n, g.n);
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::size_t j = 0; j < g.n; ++j)
            for (std::size_t k = 0; k < g.n; ++k) B(i, j) += g.at(i, j, k) * xi[k];
    return B;
}

namespace detail {

inline constexpr double rank_tol = 1e-9;
inline constexpr double gray_low = 1e-13;

// Numerical rank with a flag when a singular value sits between the clear
// zero and clear nonzero levels.
inline int rank_of(const Eigen::MatrixXd& A, bool& gray) {
    if (A.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& s = svd.singularValues();
    const double scale = std::max(1.0, s.size() ? s(0) : 0.0);
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > rank_tol * scale) ++r;
        else if (s(i) > gray_low * scale) gray = true;
    }
    return r;
}

}  // namespace detail

inline JumpData jump_indices(const LieAlgebraData& g, std::span<const double> xi) {
    const Eigen::MatrixXd B = skew_form(g, xi);
    JumpData jd;
    bool gray = false;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double scale = std::max(1.0, s.size() ? s(0) : 0.0);
    std::vector<Eigen::Index> kernel_cols;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) <= detail::rank_tol * scale) kernel_cols.push_back(i);
        if (s(i) <= detail::rank_tol * scale && s(i) > detail::gray_low * scale) gray = true;
    }
    if (gray) {
        jd.ill_conditioned = true;
        jd.note = "orbit dimension is numerically ambiguous at this functional";
        return jd;
    }
    const std::size_t n = g.n;
    Eigen::MatrixXd span(n, kernel_cols.size() + n);
    for (std::size_t c = 0; c < kernel_cols.size(); ++c) span.col(c) = svd.matrixV().col(kernel_cols[c]);
    int prev = detail::rank_of(span.leftCols(kernel_cols.size()), gray);
    for (std::size_t j = 1; j <= n; ++j) {
        span.col(kernel_cols.size() + j - 1) = Eigen::VectorXd::Unit(n, j - 1);
        const int r = detail::rank_of(span.leftCols(kernel_cols.size() + j), gray);
        (r > prev ? jd.indices : jd.rest).push_back(j);
        prev = r;
    }
    if (gray) {
        jd.ill_conditioned = true;
        jd.note = "flag rank is numerically ambiguous at this functional";
        jd.indices.clear();
        jd.rest.clear();
        return jd;
    }
    const std::size_t d = jd.indices.size();
    jd.skew.resize(d, d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) jd.skew(a, b) = B(jd.indices[a] - 1, jd.indices[b] - 1);
    return jd;
}

/// det M_S(xi), the squared Pfaffian.
inline double pfaffian_sq(const JumpData& jd) {
    if (jd.ill_conditioned) throw std::domain_error("pfaffian: " + jd.note);
    if (jd.indices.empty()) throw std::domain_error("no jump indices");
    if (jd.skew.rows() % 2 != 0) throw std::domain_error("pfaffian: odd-dimensional skew matrix");
    return jd.skew.determinant();
}

// ---------------------------------------------------------------------------
// Cross-section descriptors
// ---------------------------------------------------------------------------

inline constexpr const char* descriptor_schema = "harmonic.descriptor/1";

struct CrossSectionDescriptor {
    std::string name;
    std::size_t n = 0;
    std::vector<std::size_t> vanishing;     // 1-based slots forced to 0 on W
    std::vector<std::size_t> w_slots;       // 1-based slots of the W coordinates
    std::vector<std::string> variables;     // W names ("xi<slot>") then integration names
    std::optional<Expression> pf, h;
    std::vector<Expression> substitute;     // one per slot
    double singular_band = 0.05;            // |pf| below this is excluded from W
    std::optional<LieAlgebraData> lie;

    std::size_t w_count() const noexcept { return w_slots.size(); }
    std::size_t t_count() const noexcept { return vanishing.size(); }

    double pfaffian(std::span<const double> w) const { return pf->eval(padded(w)); }
    double h_value(std::span<const double> w) const { return h->eval(padded(w)); }

    /// Full point (xi with inserted integration variables) in R^n.
    std::vector<double> substitute_point(std::span<const double> w, std::span<const double> t) const {
        if (w.size() != w_count() || t.size() != t_count()) throw std::invalid_argument("substitute: argument sizes");
        std::vector<double> vars(w.begin(), w.end());
        vars.insert(vars.end(), t.begin(), t.end());
        std::vector<double> out(n);
        for (std::size_t j = 0; j < n; ++j) out[j] = substitute[j].eval(vars);
        return out;
    }

    /// xi in R^n with zeros in the vanishing slots.
    std::vector<double> embed(std::span<const double> w) const {
        if (w.size() != w_count()) throw std::invalid_argument("embed: expected one value per W coordinate");
        std::vector<double> xi(n, 0.0);
        for (std::size_t i = 0; i < w_count(); ++i) xi[w_slots[i] - 1] = w[i];
        return xi;
    }

private:
    std::vector<double> padded(std::span<const double> w) const {
        if (w.size() != w_count()) throw std::invalid_argument("descriptor: expected one value per W coordinate");
        std::vector<double> v(w.begin(), w.end());
        v.resize(variables.size(), 0.0);
        return v;
    }
};

/// Builds and checks a descriptor from expression strings.
inline CrossSectionDescriptor make_descriptor(std::string name, std::size_t n, std::vector<std::size_t> vanishing,
                                              std::vector<std::string> integration_names, const std::string& pf_text,
                                              const std::string& h_text, const std::vector<std::string>& subst_text,
                                              double singular_band = 0.05) {
    CrossSectionDescriptor d;
    d.name = std::move(name);
    d.n = n;
    if (n < 1) throw std::invalid_argument("descriptor: n must be >= 1");
    std::sort(vanishing.begin(), vanishing.end());
    for (std::size_t i = 0; i < vanishing.size(); ++i) {
        if (vanishing[i] < 1 || vanishing[i] > n) throw std::invalid_argument("descriptor: vanishing index out of range");
        if (i && vanishing[i] == vanishing[i - 1]) throw std::invalid_argument("descriptor: repeated vanishing index");
    }
    if (integration_names.size() != vanishing.size())
        throw std::invalid_argument("descriptor: need one integration variable per vanishing index");
    d.vanishing = std::move(vanishing);
    for (std::size_t j = 1; j <= n; ++j)
        if (!std::binary_search(d.vanishing.begin(), d.vanishing.end(), j)) {
            d.w_slots.push_back(j);
            d.variables.push_back("xi" + std::to_string(j));
        }
    for (auto& t : integration_names) {
        if (std::find(d.variables.begin(), d.variables.end(), t) != d.variables.end())
            throw std::invalid_argument("descriptor: duplicate variable name '" + t + "'");
        d.variables.push_back(std::move(t));
    }
    if (subst_text.size() != n) throw std::invalid_argument("descriptor: substitute needs one expression per slot");
    auto parse = [&](const std::string& what, const std::string& text) {
        try {
            return Expression::parse(text, d.variables);
        } catch (const ExpressionError& e) {
            throw std::invalid_argument("descriptor " + what + ": " + e.what());
        }
    };
    d.pf = parse("pfaffian", pf_text);
    d.h = parse("h", h_text);
    for (std::size_t v = d.w_count(); v < d.variables.size(); ++v)
        if (d.pf->uses(v) || d.h->uses(v))
            throw std::invalid_argument("descriptor: pfaffian and h may depend on W coordinates only");
    for (std::size_t j = 0; j < n; ++j) d.substitute.push_back(parse("substitute[" + std::to_string(j + 1) + "]", subst_text[j]));
    if (!(singular_band >= 0.0)) throw std::invalid_argument("descriptor: singular band must be >= 0");
    d.singular_band = singular_band;
    return d;
}

/// Thread-like group of dimension n in {3,4,5}: V = {2, n}, pf = xi1,
/// h = 1/|xi1|, slot j shifted by Q_j = sum_k t^k/(k! xi1^k) xi_(j-k), xi2 = 0.
inline CrossSectionDescriptor threadlike_descriptor(std::size_t n) {
    if (n < 3 || n > 5) throw std::invalid_argument("thread-like descriptor: n must be 3, 4 or 5");
    std::vector<std::string> subst(n);
    subst[0] = "xi1";
    subst[1] = "t";
    subst[n - 1] = "s";
    for (std::size_t j = 3; j + 1 <= n; ++j) {
        std::string e = "xi" + std::to_string(j);
        for (std::size_t k = 1; k <= j - 1; ++k) {
            const std::size_t m = j - k;
            if (m == 2) continue;
            const std::string ks = std::to_string(k);
            if (m == 1)
                e += " + t^" + ks + "/(" + ks + "!*xi1^" + std::to_string(k - 1) + ")";
            else
                e += " + t^" + ks + "/(" + ks + "!*xi1^" + ks + ")*xi" + std::to_string(m);
        }
        subst[j - 1] = e;
    }
    auto d = make_descriptor("threadlike-" + std::to_string(n), n, {2, n}, {"t", "s"}, "xi1", "1/abs(xi1)", subst);
    d.lie = threadlike_algebra(n);
    return d;
}

inline nlohmann::json descriptor_to_json(const CrossSectionDescriptor& d) {
    nlohmann::json j;
    j["schema"] = descriptor_schema;
    j["name"] = d.name;
    j["n"] = d.n;
    j["vanishing"] = d.vanishing;
    j["integration_variables"] =
        std::vector<std::string>(d.variables.begin() + static_cast<std::ptrdiff_t>(d.w_count()), d.variables.end());
    j["pfaffian"] = d.pf->text();
    j["h"] = d.h->text();
    auto s = nlohmann::json::array();
    for (const auto& e : d.substitute) s.push_back(e.text());
    j["substitute"] = s;
    j["singular_band"] = d.singular_band;
    if (d.lie) {
        auto br = nlohmann::json::array();
        for (std::size_t a = 0; a < d.n; ++a)
            for (std::size_t b = a + 1; b < d.n; ++b)
                for (std::size_t k = 0; k < d.n; ++k)
                    if (d.lie->at(a, b, k) != 0.0) br.push_back({a + 1, b + 1, k + 1, d.lie->at(a, b, k)});
        j["brackets"] = br;
    }
    return j;
}

inline CrossSectionDescriptor descriptor_from_json(const nlohmann::json& j) {
    try {
        if (j.value("schema", std::string{}) != descriptor_schema)
            throw std::invalid_argument(std::string("descriptor file: schema must be \"") + descriptor_schema + "\"");
        const auto n = j.at("n").get<std::size_t>();
        auto d = make_descriptor(j.value("name", std::string("custom")), n, j.at("vanishing").get<std::vector<std::size_t>>(),
                                 j.at("integration_variables").get<std::vector<std::string>>(),
                                 j.at("pfaffian").get<std::string>(), j.at("h").get<std::string>(),
                                 j.at("substitute").get<std::vector<std::string>>(), j.value("singular_band", 0.05));
        if (j.contains("brackets")) {
            LieAlgebraData g(n);
            for (const auto& b : j.at("brackets")) {
                const auto i = b.at(0).get<std::size_t>(), k = b.at(1).get<std::size_t>(), m = b.at(2).get<std::size_t>();
                if (i < 1 || i > n || k < 1 || k > n || m < 1 || m > n)
                    throw std::invalid_argument("descriptor file: bracket index out of range");
                if (i == k) throw std::invalid_argument("descriptor file: bracket of a basis vector with itself");
                g.set_bracket(i - 1, k - 1, m - 1, b.at(3).get<double>());
            }
            d.lie = std::move(g);
        }
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("descriptor file: ") + e.what());
    }
}

inline CrossSectionDescriptor load_descriptor(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open descriptor file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("descriptor file " + path + ": " + e.what());
    }
    return descriptor_from_json(j);
}

// ---------------------------------------------------------------------------
// Evaluation plan
// ---------------------------------------------------------------------------

namespace detail {

enum class SlotRole { fft, parseval, direct };

// Axis order after permutation: fft axes carrying W coordinates, fft axes
// carrying integration variables, direct axes in slot order, parseval axes.
struct NilPlan {
    std::vector<SlotRole> role;        // per slot
    std::vector<std::size_t> order;    // permuted axis -> slot
    std::size_t fft_w = 0, fft_t = 0, direct = 0, parseval = 0;
    std::vector<std::size_t> fft_var;  // per fft axis
    std::vector<int> home;             // per direct axis: W coordinate enumerated there, or -1
};

// Checks that slot expression e moves by exactly dw when variable v moves by dw.
inline bool unit_affine(const Expression& e, std::size_t v, std::size_t nvars) {
    const double probes[3][5] = {{0.7, -1.3, 0.4, 1.1, -0.6}, {1.9, 0.8, -1.7, -0.3, 2.2}, {-1.2, 2.5, 1.4, -2.1, 0.9}};
    for (const auto& p : probes) {
        std::vector<double> x(nvars);
        for (std::size_t i = 0; i < nvars; ++i) x[i] = p[i % 5] * (1.0 + 0.1 * static_cast<double>(i / 5));
        x[v] = 0.0;
        const double e0 = e.eval(x);
        x[v] = 1.0;
        const double e1 = e.eval(x);
        x[v] = -2.5;
        const double e2 = e.eval(x);
        if (!(std::abs(e1 - e0 - 1.0) <= 1e-9 * std::max(1.0, std::abs(e0))) ||
            !(std::abs(e2 - e0 + 2.5) <= 1e-9 * std::max(1.0, std::abs(e0))))
            return false;
    }
    return true;
}

/// cross = true: W coordinates are quadrature variables; false: W is fixed.
inline NilPlan make_plan(const CrossSectionDescriptor& d, bool cross) {
    const std::size_t n = d.n, k = d.w_count(), nv = d.variables.size();
    NilPlan p;
    p.role.assign(n, SlotRole::direct);
    std::vector<int> fft_slot_of(nv, -1);
    std::vector<std::size_t> slot_var(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        const auto bare = d.substitute[j].bare_variable();
        if (!bare) continue;
        const std::size_t v = *bare;
        const bool integ = v >= k;
        bool elsewhere = d.pf->uses(v) || d.h->uses(v);
        for (std::size_t i = 0; i < n; ++i)
            if (i != j && d.substitute[i].uses(v)) elsewhere = true;
        if (integ && !elsewhere) {
            p.role[j] = SlotRole::parseval;
            fft_slot_of[v] = static_cast<int>(j);
        } else if ((integ || cross) && fft_slot_of[v] < 0) {
            p.role[j] = SlotRole::fft;
            fft_slot_of[v] = static_cast<int>(j);
            slot_var[j] = v;
        }
    }
    for (std::size_t v = k; v < nv; ++v)
        if (fft_slot_of[v] < 0)
            throw std::invalid_argument("descriptor " + d.name + ": integration variable '" + d.variables[v] +
                                        "' must appear alone in some slot");
    for (int pass = 0; pass < 2; ++pass)
        for (std::size_t j = 0; j < n; ++j)
            if (p.role[j] == SlotRole::fft && ((slot_var[j] < k) == (pass == 0))) {
                p.order.push_back(j);
                p.fft_var.push_back(slot_var[j]);
                ++(pass == 0 ? p.fft_w : p.fft_t);
            }
    std::vector<int> homed(nv, -1);
    for (std::size_t j = 0; j < n; ++j) {
        if (p.role[j] != SlotRole::direct) continue;
        int home = -1;
        if (cross)
            for (std::size_t v = 0; v < k; ++v) {
                if (fft_slot_of[v] >= 0 || homed[v] >= 0 || !d.substitute[j].uses(v)) continue;
                if (home >= 0)
                    throw std::invalid_argument("descriptor " + d.name + ": slot " + std::to_string(j + 1) +
                                                " introduces two W coordinates; the substitution must be triangular");
                if (!unit_affine(d.substitute[j], v, nv))
                    throw std::invalid_argument("descriptor " + d.name + ": slot " + std::to_string(j + 1) + " must be " +
                                                d.variables[v] + " plus terms free of it");
                home = static_cast<int>(v);
                homed[v] = static_cast<int>(j);
            }
        p.order.push_back(j);
        p.home.push_back(home);
        ++p.direct;
    }
    if (cross)
        for (std::size_t v = 0; v < k; ++v)
            if (fft_slot_of[v] < 0 && homed[v] < 0)
                throw std::invalid_argument("descriptor " + d.name + ": W coordinate " + d.variables[v] +
                                            " does not enter the substitution");
    for (std::size_t j = 0; j < n; ++j)
        if (p.role[j] == SlotRole::parseval) {
            p.order.push_back(j);
            ++p.parseval;
        }
    return p;
}

// f permuted into plan order and transformed along the fft axes.
struct PlannedSpectrum {
    Grid grid;  // permuted spatial grid
    std::vector<cplx> values;
};

inline PlannedSpectrum planned_spectrum(const SampledField& f, const NilPlan& p) {
    const Grid& g = f.grid();
    const std::size_t n = g.dim();
    std::vector<double> ext(n);
    std::vector<std::size_t> cnt(n);
    for (std::size_t a = 0; a < n; ++a) {
        ext[a] = g.half_extent(p.order[a]);
        cnt[a] = g.count(p.order[a]);
    }
    Grid pg(ext, cnt);
    std::vector<cplx> perm(g.size());
    const auto src_strides = g.strides();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < pg.size(); ++i, detail::advance(idx, pg.counts())) {
        std::size_t s = 0;
        for (std::size_t a = 0; a < n; ++a) s += idx[a] * src_strides[p.order[a]];
        perm[i] = f.values()[s];
    }
    std::vector<std::size_t> axes(p.fft_w + p.fft_t);
    for (std::size_t a = 0; a < axes.size(); ++a) axes[a] = a;
    return {pg, transform_axes(pg, 1, perm, axes, true)};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Spectral energy share on the outermost dual cells above which values
/// outside the dual box may not be replaced by zero.
inline constexpr double spectrum_decay_budget = 1e-10;
/// Excluded singular-band share above which a diagnostic is raised.
inline constexpr double singular_band_budget = 0.005;

struct NilpotentOptions {
    unsigned workers = 1;
};

struct WSample {
    std::vector<double> w;
    double weight = 0.0;
    double hs = 0.0;
    double pf = 0.0;
    double h = 0.0;
};

struct NilpotentSpectrum {
    std::vector<WSample> samples;
    double norm_sq = 0.0;
    double spectrum_norm_sq = 0.0;
    double excluded_fraction = 0.0;    // spectral energy share in the singular band (NaN if unknown)
    double boundary_fraction = 0.0;    // spectral energy share on the outermost dual cells
    std::vector<std::string> diagnostics;

    double plancherel_integral() const {
        double acc = 0.0;
        for (const auto& s : samples) acc += s.weight * s.hs * std::abs(s.pf);
        return acc;
    }
    double plancherel_ratio() const {
        if (!(norm_sq > 0.0)) throw std::invalid_argument("nilpotent: Plancherel ratio of the zero function is undefined");
        return plancherel_integral() / norm_sq;
    }
    /// Ratio with the excluded band mass added back.
    double band_adjusted_ratio() const { return plancherel_ratio() / (1.0 - excluded_fraction); }

    /// int_W ||w||^(2b) hs(w) (|h|^b |pf|^(b-1))^-1 dw.
    double momentum_moment(double b) const {
        double acc = 0.0;
        for (const auto& s : samples) {
            double r2 = 0.0;
            for (double v : s.w) r2 += v * v;
            const double denom = std::pow(std::abs(s.h), b) * std::pow(std::abs(s.pf), b - 1.0);
            acc += s.weight * std::pow(r2, b) * s.hs / denom;
        }
        return acc;
    }
};

namespace detail {

struct ActiveRow {
    std::vector<double> t;        // integration values per fft_t axis
    double weight = 0.0;
    std::vector<cplx> block;      // remaining axes, row-major
};

class NilCore {
public:
    NilCore(const SampledField& f, const CrossSectionDescriptor& d, bool cross)
        : plan_(make_plan(d, cross)), spec_(planned_spectrum(f, plan_)) {
        if (f.has_group_axis()) throw std::invalid_argument("nilpotent: field carries a group axis");
        if (f.grid().dim() != d.n) throw std::invalid_argument("nilpotent: field dimension differs from the descriptor");
        const std::size_t n = d.n;
        block_ = 1;
        for (std::size_t a = plan_.fft_w + plan_.fft_t; a < n; ++a) block_ *= spec_.grid.count(a);
        t_rows_ = 1;
        for (std::size_t a = plan_.fft_w; a < plan_.fft_w + plan_.fft_t; ++a) t_rows_ *= spec_.grid.count(a);
        parseval_vol_ = 1.0;
        for (std::size_t a = n - plan_.parseval; a < n; ++a) parseval_vol_ *= spec_.grid.spacing(a);
    }

    const NilPlan& plan() const noexcept { return plan_; }
    const Grid& grid() const noexcept { return spec_.grid; }
    bool zero_fill = true;  // false: a target outside the dual box throws

    std::size_t w_rows() const {
        std::size_t r = 1;
        for (std::size_t a = 0; a < plan_.fft_w; ++a) r *= spec_.grid.count(a);
        return r;
    }

    // Rows of one W-aligned combination, with their integration values.
    std::vector<ActiveRow> rows(std::size_t w_row, std::vector<double>& vars, double floor) const {
        std::vector<std::size_t> idx(plan_.fft_w + plan_.fft_t);
        unravel_fft(w_row, 0, plan_.fft_w, idx);
        for (std::size_t a = 0; a < plan_.fft_w; ++a) vars[plan_.fft_var[a]] = dual_point(a, idx[a]);
        std::vector<ActiveRow> out;
        for (std::size_t r = 0; r < t_rows_; ++r) {
            const cplx* src = spec_.values.data() + (w_row * t_rows_ + r) * block_;
            double e = 0.0;
            for (std::size_t i = 0; i < block_; ++i) e += std::norm(src[i]);
            if (e <= floor) continue;
            ActiveRow row;
            unravel_fft(r, plan_.fft_w, plan_.fft_t, idx);
            row.weight = 1.0;
            for (std::size_t a = plan_.fft_w; a < plan_.fft_w + plan_.fft_t; ++a) {
                row.t.push_back(dual_point(a, idx[a]));
                row.weight *= 1.0 / (2.0 * spec_.grid.half_extent(a));
            }
            row.block.assign(src, src + block_);
            out.push_back(std::move(row));
        }
        return out;
    }

    double row_energy_total() const {
        double e = 0.0;
        for (auto v : spec_.values) e += std::norm(v);
        return e;
    }

    void set_t(std::vector<double>& vars, const ActiveRow& r) const {
        for (std::size_t a = 0; a < plan_.fft_t; ++a) vars[plan_.fft_var[plan_.fft_w + a]] = r.t[a];
    }

    // Contracts the first remaining axis (direct axis `level`) at `target`.
    // Returns false if the target lies outside the dual box.
    bool contract(std::size_t level, double target, const std::vector<cplx>& in, std::vector<cplx>& out) const {
        const std::size_t a = plan_.fft_w + plan_.fft_t + level;
        if (!in_box(level, target)) {
            if (!zero_fill)
                throw std::domain_error("nilpotent: substitute target " + format_number(target) + " leaves the dual box on axis " +
                                        std::to_string(plan_.order[a] + 1) + " and the spectrum has not decayed");
            return false;
        }
        const std::size_t na = spec_.grid.count(a);
        const std::size_t rest = in.size() / na;
        const double hx = spec_.grid.spacing(a);
        out.assign(rest, cplx{});
        for (std::size_t j = 0; j < na; ++j) {
            const cplx e = hx * std::polar(1.0, -2.0 * pi * spec_.grid.point(a, j) * target);
            const cplx* src = in.data() + j * rest;
            for (std::size_t r = 0; r < rest; ++r) out[r] += e * src[r];
        }
        return true;
    }

    bool in_box(std::size_t level, double target) const {
        const double bound = direct_dual_bound(level);
        return target >= -bound * (1.0 + 1e-13) && target < bound * (1.0 - 1e-13);
    }

    std::size_t direct_count(std::size_t level) const { return spec_.grid.count(plan_.fft_w + plan_.fft_t + level); }

    // h sum_j in_j e^{-2 pi i x_j q} e^{-2 pi i j k / N} along direct axis
    // `level`; entry k equals the contraction at target k/(2L) + q up to (-1)^k.
    std::vector<cplx> shifted_transform(std::size_t level, double q, const std::vector<cplx>& in) const {
        const std::size_t a = plan_.fft_w + plan_.fft_t + level;
        const std::size_t na = spec_.grid.count(a);
        const std::size_t rest = in.size() / na;
        const double hx = spec_.grid.spacing(a);
        std::vector<cplx> out(in.size());
        for (std::size_t j = 0; j < na; ++j) {
            const cplx e = hx * std::polar(1.0, -2.0 * pi * spec_.grid.point(a, j) * q);
            for (std::size_t r = 0; r < rest; ++r) out[j * rest + r] = e * in[j * rest + r];
        }
        const std::size_t shape[2] = {na, rest};
        const std::size_t axes[1] = {0};
        dft_axes(out, shape, axes, Direction::forward);
        return out;
    }

    double leaf_energy(const std::vector<ActiveRow>& rows) const {
        double acc = 0.0;
        for (const auto& r : rows) {
            double e = 0.0;
            for (auto v : r.block) e += std::norm(v);
            acc += r.weight * e;
        }
        return acc * parseval_vol_;
    }

    double direct_dual_spacing(std::size_t level) const {
        return 1.0 / (2.0 * spec_.grid.half_extent(plan_.fft_w + plan_.fft_t + level));
    }
    double direct_dual_bound(std::size_t level) const {
        return spec_.grid.dual_half_extent(plan_.fft_w + plan_.fft_t + level);
    }
    std::size_t direct_slot(std::size_t level) const { return plan_.order[plan_.fft_w + plan_.fft_t + level]; }
    double w_weight() const {
        double w = 1.0;
        for (std::size_t a = 0; a < plan_.fft_w; ++a) w *= 1.0 / (2.0 * spec_.grid.half_extent(a));
        return w;
    }

private:
    double dual_point(std::size_t a, std::size_t k) const {
        return -spec_.grid.dual_half_extent(a) + static_cast<double>(k) / (2.0 * spec_.grid.half_extent(a));
    }
    void unravel_fft(std::size_t flat, std::size_t first, std::size_t count, std::vector<std::size_t>& idx) const {
        for (std::size_t a = first + count; a-- > first;) {
            idx[a] = flat % spec_.grid.count(a);
            flat /= spec_.grid.count(a);
        }
    }

    NilPlan plan_;
    PlannedSpectrum spec_;
    std::size_t block_ = 1, t_rows_ = 1;
    double parseval_vol_ = 1.0;
};

}  // namespace detail

/// ||pi_xi(f)||_HS^2 at points of W, reusing one partial transform.
class NilpotentPointEvaluator {
public:
    NilpotentPointEvaluator(const SampledField& f, const CrossSectionDescriptor& d)
        : d_(d), core_(f, d, false) {
        core_.zero_fill = boundary_mass_fraction(euclidean_ft(f)) <= spectrum_decay_budget;
    }

    double operator()(std::span<const double> w) const {
        if (w.size() != d_.w_count()) throw std::invalid_argument("nilpotent: expected one value per W coordinate");
        const double pf = d_.pfaffian(w);
        if (!(std::abs(pf) >= d_.singular_band) || pf == 0.0)
            throw std::domain_error("nilpotent: xi lies in the singular band |pf| < " + format_number(d_.singular_band));
        const double h = d_.h_value(w);
        if (!std::isfinite(h) || h == 0.0) throw std::domain_error("nilpotent: h vanishes or is undefined at xi");
        std::vector<double> vars(d_.variables.size(), 0.0);
        std::copy(w.begin(), w.end(), vars.begin());
        auto rows = core_.rows(0, vars, 0.0);
        std::vector<cplx> next;
        for (std::size_t level = 0; level < core_.plan().direct; ++level) {
            const auto& e = d_.substitute[core_.direct_slot(level)];
            std::vector<detail::ActiveRow> kept;
            for (auto& r : rows) {
                core_.set_t(vars, r);
                if (core_.contract(level, e.eval(vars), r.block, next)) {
                    r.block.swap(next);
                    kept.push_back(std::move(r));
                }
            }
            rows.swap(kept);
        }
        return std::abs(h) * core_.leaf_energy(rows);
    }

private:
    CrossSectionDescriptor d_;
    detail::NilCore core_;
};

inline double nilpotent_hs_norm_sq(const SampledField& f, const CrossSectionDescriptor& d, std::span<const double> w) {
    return NilpotentPointEvaluator(f, d)(w);
}

namespace detail {

// Walks the direct axes; at an axis that introduces a W coordinate, that
// coordinate runs over every multiple of the dual spacing that puts some
// active row's target inside the box.
inline void walk(const NilCore& core, const CrossSectionDescriptor& d, std::size_t level, std::vector<ActiveRow> rows,
                 std::vector<double>& vars, double weight, std::vector<WSample>& out) {
    const auto& plan = core.plan();
    if (level == plan.direct) {
        std::vector<double> w(vars.begin(), vars.begin() + static_cast<std::ptrdiff_t>(d.w_count()));
        const double pf = d.pfaffian(w);
        const double h = d.h_value(w);
        if (!(std::abs(pf) >= d.singular_band) || pf == 0.0 || !std::isfinite(h) || h == 0.0) return;
        const double hs = std::abs(h) * core.leaf_energy(rows);
        out.push_back({std::move(w), weight, hs, pf, h});
        return;
    }
    const auto& e = d.substitute[core.direct_slot(level)];
    const int home = plan.home[level];
    std::vector<cplx> next;
    auto descend = [&](double node_weight) {
        std::vector<ActiveRow> kept;
        for (const auto& r : rows) {
            core.set_t(vars, r);
            ActiveRow nr{r.t, r.weight, {}};
            if (core.contract(level, e.eval(vars), r.block, nr.block)) kept.push_back(std::move(nr));
        }
        if (!kept.empty()) walk(core, d, level + 1, std::move(kept), vars, node_weight, out);
    };
    if (home < 0) {
        descend(weight);
        return;
    }
    // Targets w + q_r with w on multiples of the dual spacing form a shifted
    // DFT grid, so one FFT per row yields every node exactly.
    const double hw = core.direct_dual_spacing(level), bound = core.direct_dual_bound(level);
    const std::size_t na = core.direct_count(level);
    std::vector<double> q(rows.size());
    std::vector<std::vector<cplx>> shifted(rows.size());
    vars[home] = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        core.set_t(vars, rows[i]);
        q[i] = e.eval(vars);
        shifted[i] = core.shifted_transform(level, q[i], rows[i].block);
    }
    const double qmin = *std::min_element(q.begin(), q.end()), qmax = *std::max_element(q.begin(), q.end());
    const auto m_lo = static_cast<long long>(std::ceil((-bound - qmax) / hw - 1e-9));
    const auto m_hi = static_cast<long long>(std::floor((bound - qmin) / hw + 1e-9));
    for (long long m = m_lo; m <= m_hi; ++m) {
        vars[home] = static_cast<double>(m) * hw;
        const std::size_t k = static_cast<std::size_t>(((m % static_cast<long long>(na)) + static_cast<long long>(na)) %
                                                       static_cast<long long>(na));
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        std::vector<ActiveRow> kept;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!core.in_box(level, vars[home] + q[i])) continue;
            const std::size_t rest = shifted[i].size() / na;
            ActiveRow nr{rows[i].t, rows[i].weight, std::vector<cplx>(rest)};
            const cplx* src = shifted[i].data() + k * rest;
            for (std::size_t r = 0; r < rest; ++r) nr.block[r] = sign * src[r];
            kept.push_back(std::move(nr));
        }
        if (!kept.empty()) walk(core, d, level + 1, std::move(kept), vars, weight * hw, out);
    }
}

}  // namespace detail

/// W quadrature of the HS norms, with the singular band excluded.
inline NilpotentSpectrum nilpotent_spectrum(const SampledField& f, const CrossSectionDescriptor& d,
                                            const NilpotentOptions& opt = {}) {
    NilpotentSpectrum s;
    s.norm_sq = l2_norm_sq(f);
    require_valid(s.norm_sq);
    const auto F = euclidean_ft(f);
    s.spectrum_norm_sq = l2_norm_sq(F);
    s.boundary_fraction = boundary_mass_fraction(F);
    if (s.boundary_fraction > spectrum_decay_budget)
        s.diagnostics.push_back(std::string(diag::spectrum_not_decayed) + ": boundary energy fraction " +
                                format_number(s.boundary_fraction) + " of the Euclidean spectrum");

    detail::NilCore core(f, d, true);
    const auto& plan = core.plan();

    // Band mass straight from the Euclidean spectrum when pf reads only
    // coordinates that sit alone in their slots.
    bool pf_on_fft = true;
    for (std::size_t v = 0; v < d.w_count(); ++v) {
        if (!d.pf->uses(v)) continue;
        bool aligned = false;
        for (std::size_t a = 0; a < plan.fft_w; ++a)
            if (plan.fft_var[a] == v) aligned = true;
        pf_on_fft = pf_on_fft && aligned;
    }
    if (pf_on_fft) {
        const Grid& dg = F.grid();
        std::vector<std::size_t> idx(dg.dim());
        std::vector<double> vars(d.variables.size(), 0.0);
        double band = 0.0, total = 0.0;
        for (std::size_t i = 0; i < dg.size(); ++i, detail::advance(idx, dg.counts())) {
            for (std::size_t a = 0; a < plan.fft_w; ++a) {
                const std::size_t slot = plan.order[a];
                vars[plan.fft_var[a]] = dg.point(slot, idx[slot]);
            }
            const double e = std::norm(F.values()[i]);
            total += e;
            const double pf = d.pf->eval(vars);
            if (!(std::abs(pf) >= d.singular_band) || pf == 0.0) band += e;
        }
        s.excluded_fraction = total > 0.0 ? band / total : 0.0;
        if (s.excluded_fraction >= singular_band_budget)
            s.diagnostics.push_back(std::string(diag::singular_band) + ": " + format_number(s.excluded_fraction) +
                                    " of spectral energy lies in |pf| < " + format_number(d.singular_band));
    } else {
        s.excluded_fraction = std::numeric_limits<double>::quiet_NaN();
        s.diagnostics.push_back(std::string(diag::singular_band) +
                                ": not computable, the Pfaffian reads coordinates that are not grid-aligned");
    }

    const double floor = 1e-28 * core.row_energy_total();
    const std::size_t W = core.w_rows();
    const unsigned workers = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(W)));
    std::vector<std::vector<WSample>> per_row(W);
    auto job = [&](unsigned id) {
        std::vector<double> vars(d.variables.size(), 0.0);
        for (std::size_t r = id; r < W; r += workers) {
            auto rows = core.rows(r, vars, floor);
            if (rows.empty()) continue;
            // skip whole rows in the band when pf is known here
            if (pf_on_fft) {
                std::vector<double> w(vars.begin(), vars.begin() + static_cast<std::ptrdiff_t>(d.w_count()));
                const double pf = d.pfaffian(w);
                if (!(std::abs(pf) >= d.singular_band) || pf == 0.0) continue;
            }
            detail::walk(core, d, 0, std::move(rows), vars, core.w_weight(), per_row[r]);
        }
    };
    if (workers == 1) {
        job(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned id = 0; id < workers; ++id) pool.emplace_back(job, id);
    }
    for (auto& v : per_row)
        for (auto& smp : v) s.samples.push_back(std::move(smp));
    return s;
}

inline double nilpotent_plancherel_ratio(const SampledField& f, const CrossSectionDescriptor& d,
                                         const NilpotentOptions& opt = {}) {
    return nilpotent_spectrum(f, d, opt).plancherel_ratio();
}

/// lhs = ||f||^(1/a+1/b) / (4 pi); momentum from the W samples.
inline UncertaintyTerms nilpotent_uncertainty(const SampledField& f, const NilpotentSpectrum& s, const MomentSpec& spec) {
    const auto pos = moment_estimate(f, 2.0 * spec.a);
    auto t = assemble_terms(s.norm_sq, pos.value, s.momentum_moment(spec.b), spec, 1.0 / (4.0 * pi));
    note_moment(t.diagnostics, "position", pos);
    t.diagnostics.insert(t.diagnostics.end(), s.diagnostics.begin(), s.diagnostics.end());
    return t;
}

inline UncertaintyTerms nilpotent_uncertainty(const SampledField& f, const CrossSectionDescriptor& d, const MomentSpec& spec,
                                              const NilpotentOptions& opt = {}) {
    return nilpotent_uncertainty(f, nilpotent_spectrum(f, d, opt), spec);
}

// ---------------------------------------------------------------------------
// Descriptor validation
// ---------------------------------------------------------------------------

struct DescriptorValidation {
    std::vector<std::string> violations;
    double max_pfaffian_defect = 0.0;  // |det M_S - pf^2| / max(1, pf^2)
    bool ok() const noexcept { return violations.empty(); }
};

/// Sampled checks: pf and h nonzero off the band, injectivity of the
/// substitution in t, the evaluator's structural requirements, and (with
/// structure constants) the jump set and Pfaffian against the algebra.
inline DescriptorValidation validate_descriptor(const CrossSectionDescriptor& d, std::size_t samples = 64,
                                                std::uint64_t seed = 1) {
    DescriptorValidation v;
    try {
        detail::make_plan(d, true);
    } catch (const std::invalid_argument& e) {
        v.violations.push_back(e.what());
    }
    if (d.lie)
        for (const auto& m : validate_lie(*d.lie)) v.violations.push_back("algebra: " + m);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    std::size_t taken = 0;
    for (std::size_t attempt = 0; taken < samples && attempt < 50 * samples; ++attempt) {
        std::vector<double> w(d.w_count());
        for (auto& x : w) x = U(rng);
        const double pf = d.pfaffian(w);
        if (!(std::abs(pf) >= std::max(d.singular_band, 1e-3))) continue;
        ++taken;
        const double h = d.h_value(w);
        if (!std::isfinite(h) || h == 0.0) v.violations.push_back("h vanishes or is undefined at a W sample");
        if (!std::isfinite(pf)) v.violations.push_back("pfaffian undefined at a W sample");
        // central-difference Jacobian in t must have full column rank
        std::vector<double> t(d.t_count());
        for (auto& x : t) x = U(rng);
        Eigen::MatrixXd J(d.n, d.t_count());
        for (std::size_t c = 0; c < d.t_count(); ++c) {
            auto tp = t, tm = t;
            tp[c] += 1e-5;
            tm[c] -= 1e-5;
            const auto pp = d.substitute_point(w, tp), pm = d.substitute_point(w, tm);
            for (std::size_t j = 0; j < d.n; ++j) J(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = (pp[j] - pm[j]) / 2e-5;
        }
        if (d.t_count() > 0) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
            const auto& sv = svd.singularValues();
            if (!(sv(sv.size() - 1) > 1e-6 * std::max(1.0, sv(0))))
                v.violations.push_back("substitution is not injective in the integration variables");
        }
        if (d.lie && d.lie->n == d.n) {
            const auto xi = d.embed(w);
            const auto jd = jump_indices(*d.lie, xi);
            if (jd.ill_conditioned) {
                v.violations.push_back("jump indices ill-conditioned at a W sample");
                continue;
            }
            if (jd.indices != d.vanishing) v.violations.push_back("jump indices differ from the vanishing set");
            if (jd.indices.empty()) continue;
            const double defect = std::abs(pfaffian_sq(jd) - pf * pf) / std::max(1.0, pf * pf);
            v.max_pfaffian_defect = std::max(v.max_pfaffian_defect, defect);
            if (defect > 1e-10) v.violations.push_back("det M_S differs from pfaffian^2 at a W sample");
        }
    }
    if (taken == 0) v.violations.push_back("no W samples outside the singular band");
    std::sort(v.violations.begin(), v.violations.end());
    v.violations.erase(std::unique(v.violations.begin(), v.violations.end()), v.violations.end());
    return v;
}

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

/// Correlated, shifted Gaussian times a random linear factor, modulated by
/// about `omega` along the first axis so that the spectrum sits away from
/// xi1 = 0. Widths are fitted per axis to the box and dual box.
inline SampledField nilpotent_corpus_member(const Grid& grid, std::uint64_t seed, std::size_t index, double omega = 1.2) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), 0x9e17u};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const std::size_t n = grid.dim();
    const double om = omega * (0.95 + 0.1 * U(rng));
    std::vector<double> c(n), a(n), room(n), droom(n);
    double reach = 28.0;
    for (std::size_t i = 0; i < n; ++i) {
        c[i] = (U(rng) - 0.5) * 0.2 * std::min(1.0, grid.half_extent(i) / 3.0);
        room[i] = grid.half_extent(i) - grid.spacing(i) - std::abs(c[i]);
        droom[i] = grid.dual_half_extent(i) - (i == 0 ? om : 0.0);
        if (!(room[i] > 0.0 && droom[i] > 0.0)) throw std::invalid_argument("nilpotent corpus: grid too small for the modulation");
        reach = std::min(reach, 0.7 * pi * room[i] * droom[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = reach / (pi * room[i] * room[i]), hi = pi * droom[i] * droom[i] / reach;
        a[i] = lo * std::pow(hi / lo, 0.3 + 0.4 * U(rng));
    }
    // A = D^(1/2) (I + rho S) D^(1/2), S symmetric with +-1 off the diagonal
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) A(i, j) = A(j, i) = (U(rng) < 0.5 ? -1.0 : 1.0) * 0.08;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) A(i, j) *= std::sqrt(a[i] * a[j]);
    std::vector<double> slope(n);
    for (auto& s : slope) s = (U(rng) - 0.5) * 0.6;
    auto f = sample(grid, [&](std::span<const double> x) {
        double q = 0.0, lin = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            lin += slope[i] * (x[i] - c[i]);
            for (std::size_t j = 0; j < n; ++j) q += (x[i] - c[i]) * A(i, j) * (x[j] - c[j]);
        }
        return lin * std::exp(-pi * q) * std::polar(1.0, 2.0 * pi * om * x[0]);
    });
    const double tol = std::max(corpus_decay_tolerance, 20.0 * std::exp(-reach));
    if (boundary_amplitude_ratio(f) > tol || boundary_amplitude_ratio(euclidean_ft(f)) > tol)
        throw std::runtime_error("nilpotent corpus: member " + std::to_string(index) + " does not decay inside the box");
    return f;
}

}  // namespace harmonic
