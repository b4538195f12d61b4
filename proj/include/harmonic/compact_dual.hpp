#pragma once

// Compact factors K: finite groups given by a multiplication table plus
// explicit unitary irreps, and the circle truncated to characters |m| <= M.
// Haar measure is normalized to total mass 1 in both cases, so the
// Plancherel weight of an irrep is its dimension.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "harmonic/sampled_field.hpp"

namespace harmonic {

using Matrix = Eigen::MatrixXcd;

struct Irrep {
    std::string name;
    int dim = 1;
    std::vector<Matrix> matrices;  // one per group element
};

struct FiniteGroupData {
    std::string name;
    int order = 0;
    std::vector<int> table;    // table[g * order + h] = g h
    std::vector<int> inverse;  // filled by validate/derive_inverses
    std::vector<Irrep> irreps;

    int mul(int g, int h) const { return table[static_cast<std::size_t>(g) * order + h]; }
};

/// Inverse table from the multiplication table; throws if some element has
/// no inverse.
inline std::vector<int> derive_inverses(int order, const std::vector<int>& table) {
    std::vector<int> inv(order, -1);
    for (int g = 0; g < order; ++g)
        for (int h = 0; h < order; ++h)
            if (table[static_cast<std::size_t>(g) * order + h] == 0) {
                inv[g] = h;
                break;
            }
    for (int g = 0; g < order; ++g)
        if (inv[g] < 0) throw std::invalid_argument("group element " + std::to_string(g) + " has no inverse");
    return inv;
}

struct GroupValidation {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Exhaustive check of the group axioms and of every irrep (shape,
/// unitarity, homomorphism, irreducibility, pairwise inequivalence,
/// completeness).
inline GroupValidation validate_group(const FiniteGroupData& K, double tol = 1e-12) {
    GroupValidation r;
    auto fail = [&](std::string s) { r.violations.push_back(std::move(s)); };
    const int n = K.order;
    if (n < 1) {
        fail("order must be positive");
        return r;
    }
    if (K.table.size() != static_cast<std::size_t>(n) * n) {
        fail("multiplication table must have order^2 entries");
        return r;
    }
    for (int v : K.table)
        if (v < 0 || v >= n) {
            fail("multiplication table entry out of range");
            return r;
        }
    for (int g = 0; g < n; ++g)
        if (K.mul(0, g) != g || K.mul(g, 0) != g) fail("element 0 is not an identity for " + std::to_string(g));
    for (int g = 0; g < n; ++g) {
        std::vector<bool> seen(n, false);
        for (int h = 0; h < n; ++h) seen[K.mul(g, h)] = true;
        if (std::find(seen.begin(), seen.end(), false) != seen.end())
            fail("row " + std::to_string(g) + " is not a permutation (no inverse)");
    }
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                if (K.mul(K.mul(a, b), c) != K.mul(a, K.mul(b, c)))
                    fail("associativity fails at (" + std::to_string(a) + "," + std::to_string(b) + "," +
                         std::to_string(c) + ")");
    if (!r.ok()) return r;

    int dim_sq = 0;
    std::vector<bool> usable(K.irreps.size(), true);
    for (std::size_t s = 0; s < K.irreps.size(); ++s) {
        const auto& rho = K.irreps[s];
        const std::string tag = "irrep " + (rho.name.empty() ? std::to_string(s) : rho.name) + ": ";
        dim_sq += rho.dim * rho.dim;
        if (rho.dim < 1 || rho.matrices.size() != static_cast<std::size_t>(n)) {
            fail(tag + "needs one matrix per element");
            usable[s] = false;
            continue;
        }
        bool shapes = true;
        for (const auto& m : rho.matrices) shapes = shapes && m.rows() == rho.dim && m.cols() == rho.dim;
        if (!shapes) {
            fail(tag + "matrix shape does not match dimension");
            usable[s] = false;
            continue;
        }
        const Matrix I = Matrix::Identity(rho.dim, rho.dim);
        for (int g = 0; g < n; ++g)
            if ((rho.matrices[g].adjoint() * rho.matrices[g] - I).cwiseAbs().maxCoeff() > tol)
                fail(tag + "not unitary at element " + std::to_string(g));
        for (int g = 0; g < n; ++g)
            for (int h = 0; h < n; ++h)
                if ((rho.matrices[K.mul(g, h)] - rho.matrices[g] * rho.matrices[h]).cwiseAbs().maxCoeff() > tol)
                    fail(tag + "not a homomorphism at (" + std::to_string(g) + "," + std::to_string(h) + ")");
    }
    // Character inner products with normalized Haar measure.
    auto chi_inner = [&](const Irrep& p, const Irrep& q) {
        cplx acc{};
        for (int g = 0; g < n; ++g) acc += p.matrices[g].trace() * std::conj(q.matrices[g].trace());
        return acc / static_cast<double>(n);
    };
    for (std::size_t s = 0; s < K.irreps.size(); ++s) {
        if (!usable[s]) continue;
        if (std::abs(chi_inner(K.irreps[s], K.irreps[s]) - 1.0) > 1e-9)
            fail("irrep " + std::to_string(s) + ": not irreducible (character norm != 1)");
        for (std::size_t t = s + 1; t < K.irreps.size(); ++t)
            if (usable[t] && std::abs(chi_inner(K.irreps[s], K.irreps[t])) > 1e-9)
                fail("irreps " + std::to_string(s) + " and " + std::to_string(t) + " are equivalent");
    }
    if (dim_sq != n)
        fail("completeness: sum of squared dimensions is " + std::to_string(dim_sq) + ", order is " + std::to_string(n));
    return r;
}

// ---------------------------------------------------------------------------
// Built-in groups
// ---------------------------------------------------------------------------

inline FiniteGroupData cyclic_group(int n) {
    if (n < 1) throw std::invalid_argument("cyclic_group: order must be positive");
    FiniteGroupData K;
    K.name = "Z" + std::to_string(n);
    K.order = n;
    K.table.resize(static_cast<std::size_t>(n) * n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) K.table[static_cast<std::size_t>(a) * n + b] = (a + b) % n;
    K.inverse = derive_inverses(n, K.table);
    for (int m = 0; m < n; ++m) {
        Irrep chi{"chi" + std::to_string(m), 1, {}};
        for (int k = 0; k < n; ++k) {
            // Quarter turns are stored exactly (i^km for Z4).
            static constexpr cplx quarter[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
            const int e = (k * m) % n;
            const cplx v = (4 * e) % n == 0 ? quarter[4 * e / n] : std::polar(1.0, 2.0 * pi * e / n);
            chi.matrices.push_back(Matrix::Constant(1, 1, v));
        }
        K.irreps.push_back(std::move(chi));
    }
    return K;
}

/// Symmetric group S3 as the dihedral group of the triangle: element
/// a + 3b stands for r^a s^b (r rotation by 2 pi/3, s a reflection), with
/// r^a s^b r^c s^d = r^(a + (-1)^b c) s^(b + d).
inline FiniteGroupData s3_group() {
    FiniteGroupData K;
    K.name = "S3";
    K.order = 6;
    K.table.resize(36);
    for (int x = 0; x < 6; ++x)
        for (int y = 0; y < 6; ++y) {
            const int a = x % 3, b = x / 3, c = y % 3, d = y / 3;
            const int rot = ((a + (b ? -c : c)) % 3 + 3) % 3;
            K.table[x * 6 + y] = rot + 3 * ((b + d) % 2);
        }
    K.inverse = derive_inverses(6, K.table);

    Irrep triv{"trivial", 1, {}}, sign{"sign", 1, {}}, std2{"standard", 2, {}};
    const double c = -0.5, s = std::sqrt(3.0) / 2.0;
    Matrix R(2, 2), S(2, 2);
    R << c, -s, s, c;
    S << 1, 0, 0, -1;
    for (int x = 0; x < 6; ++x) {
        const int a = x % 3, b = x / 3;
        triv.matrices.push_back(Matrix::Ones(1, 1));
        sign.matrices.push_back(Matrix::Constant(1, 1, b ? -1.0 : 1.0));
        Matrix m = Matrix::Identity(2, 2);
        for (int i = 0; i < a; ++i) m = m * R;
        if (b) m = m * S;
        std2.matrices.push_back(m);
    }
    K.irreps = {triv, sign, std2};
    return K;
}

inline FiniteGroupData builtin_group(const std::string& name) {
    if (name == "Z4") return cyclic_group(4);
    if (name == "S3") return s3_group();
    throw std::invalid_argument("unknown built-in group '" + name + "' (expected Z4 or S3)");
}

// ---------------------------------------------------------------------------
// Fourier analysis on K
// ---------------------------------------------------------------------------

/// phi^(sigma) = sum_k phi(k) sigma(k^-1) / |K| for every irrep.
inline std::vector<Matrix> k_transform(const FiniteGroupData& K, std::span<const cplx> phi) {
    if (phi.size() != static_cast<std::size_t>(K.order))
        throw std::invalid_argument("k_transform: function size does not match group order");
    std::vector<Matrix> out;
    const double w = 1.0 / K.order;
    for (const auto& rho : K.irreps) {
        Matrix acc = Matrix::Zero(rho.dim, rho.dim);
        for (int k = 0; k < K.order; ++k) acc += (w * phi[k]) * rho.matrices[K.inverse[k]];
        out.push_back(std::move(acc));
    }
    return out;
}

inline double k_plancherel_defect(const FiniteGroupData& K, std::span<const cplx> phi) {
    if (auto v = validate_group(K); !v.ok()) throw std::invalid_argument("invalid group: " + v.violations.front());
    const auto hat = k_transform(K, phi);
    double dual = 0.0;
    for (std::size_t s = 0; s < hat.size(); ++s) dual += K.irreps[s].dim * hat[s].squaredNorm();
    double direct = 0.0;
    for (auto v : phi) direct += std::norm(v) / K.order;
    return std::abs(dual - direct);
}

/// Circle characters e^{i m theta}, |m| <= M, sampled at the 2M+1 points
/// theta_j = 2 pi j/(2M+1) with weights 1/(2M+1). Projection and resummation
/// are exact for trigonometric polynomials of degree <= M.
struct CircleDual {
    int M = 1;

    explicit CircleDual(int truncation) : M(truncation) {
        if (M < 1) throw std::invalid_argument("circle truncation must be >= 1");
    }
    int samples() const { return 2 * M + 1; }
    double angle(int j) const { return 2.0 * pi * j / samples(); }
    std::vector<double> weights() const { return std::vector<double>(samples(), 1.0 / samples()); }

    /// Coefficients c_m, index m + M.
    std::vector<cplx> project(std::span<const cplx> values) const {
        if (values.size() != static_cast<std::size_t>(samples()))
            throw std::invalid_argument("circle projection: expected 2M+1 samples");
        std::vector<cplx> c(samples());
        for (int m = -M; m <= M; ++m) {
            cplx acc{};
            for (int j = 0; j < samples(); ++j) acc += values[j] * std::polar(1.0, -m * angle(j));
            c[m + M] = acc / static_cast<double>(samples());
        }
        return c;
    }
    cplx resum(std::span<const cplx> coeffs, double theta) const {
        cplx acc{};
        for (int m = -M; m <= M; ++m) acc += coeffs[m + M] * std::polar(1.0, m * theta);
        return acc;
    }
};

/// Common quadrature view of K used by the product transform: sample
/// points with weights and, per irrep, the matrices sigma(k^-1).
struct GroupQuadrature {
    std::string name;
    std::vector<double> weights;
    std::vector<int> dims;
    std::vector<std::vector<Matrix>> inverse_matrices;  // [irrep][sample]
    int circle_truncation = 0;                           // M for the circle, 0 for finite groups

    std::size_t size() const { return weights.size(); }
};

inline GroupQuadrature quadrature_of(const FiniteGroupData& K) {
    GroupQuadrature q;
    q.name = K.name;
    q.weights.assign(K.order, 1.0 / K.order);
    for (const auto& rho : K.irreps) {
        q.dims.push_back(rho.dim);
        std::vector<Matrix> inv;
        for (int k = 0; k < K.order; ++k) inv.push_back(rho.matrices[K.inverse[k]]);
        q.inverse_matrices.push_back(std::move(inv));
    }
    return q;
}

inline GroupQuadrature quadrature_of(const CircleDual& C) {
    GroupQuadrature q;
    q.name = "SO2_M" + std::to_string(C.M);
    q.circle_truncation = C.M;
    q.weights = C.weights();
    for (int m = -C.M; m <= C.M; ++m) {
        q.dims.push_back(1);
        std::vector<Matrix> inv;
        for (int j = 0; j < C.samples(); ++j) inv.push_back(Matrix::Constant(1, 1, std::polar(1.0, -m * C.angle(j))));
        q.inverse_matrices.push_back(std::move(inv));
    }
    return q;
}

// ---------------------------------------------------------------------------
// JSON group files
//
// {
//   "schema": "harmonic.group/1",
//   "name": "S3",
//   "order": 6,
//   "table": [[0,1,2,3,4,5], ...],          // table[g][h] = index of g*h
//   "irreps": [
//     {"name": "standard", "dim": 2,
//      "matrices": [ [[[re,im],[re,im]],[[re,im],[re,im]]], ... ]}   // per element, row-major
//   ]
// }
// ---------------------------------------------------------------------------

inline constexpr const char* group_schema = "harmonic.group/1";

inline nlohmann::json group_to_json(const FiniteGroupData& K) {
    nlohmann::json j;
    j["schema"] = group_schema;
    j["name"] = K.name;
    j["order"] = K.order;
    auto table = nlohmann::json::array();
    for (int g = 0; g < K.order; ++g) {
        auto row = nlohmann::json::array();
        for (int h = 0; h < K.order; ++h) row.push_back(K.mul(g, h));
        table.push_back(row);
    }
    j["table"] = table;
    auto irreps = nlohmann::json::array();
    for (const auto& rho : K.irreps) {
        nlohmann::json r;
        r["name"] = rho.name;
        r["dim"] = rho.dim;
        auto mats = nlohmann::json::array();
        for (const auto& m : rho.matrices) {
            auto rows = nlohmann::json::array();
            for (int a = 0; a < m.rows(); ++a) {
                auto row = nlohmann::json::array();
                for (int b = 0; b < m.cols(); ++b) row.push_back({m(a, b).real(), m(a, b).imag()});
                rows.push_back(row);
            }
            mats.push_back(rows);
        }
        r["matrices"] = mats;
        irreps.push_back(r);
    }
    j["irreps"] = irreps;
    return j;
}

/// Parses a group file; structural problems throw, algebraic ones are left
/// for validate_group.
inline FiniteGroupData group_from_json(const nlohmann::json& j) {
    try {
        if (j.value("schema", std::string{}) != group_schema)
            throw std::invalid_argument(std::string("group file: schema must be \"") + group_schema + "\"");
        FiniteGroupData K;
        K.name = j.value("name", std::string("custom"));
        K.order = j.at("order").get<int>();
        if (K.order < 1) throw std::invalid_argument("group file: order must be positive");
        const auto& table = j.at("table");
        if (!table.is_array() || table.size() != static_cast<std::size_t>(K.order))
            throw std::invalid_argument("group file: table must have 'order' rows");
        for (const auto& row : table) {
            if (!row.is_array() || row.size() != static_cast<std::size_t>(K.order))
                throw std::invalid_argument("group file: every table row must have 'order' entries");
            for (const auto& v : row) K.table.push_back(v.get<int>());
        }
        for (int v : K.table)
            if (v < 0 || v >= K.order) throw std::invalid_argument("group file: table entry out of range");
        K.inverse = derive_inverses(K.order, K.table);
        for (const auto& r : j.at("irreps")) {
            Irrep rho;
            rho.name = r.value("name", std::string{});
            rho.dim = r.at("dim").get<int>();
            for (const auto& m : r.at("matrices")) {
                if (m.size() != static_cast<std::size_t>(rho.dim))
                    throw std::invalid_argument("group file: matrix row count differs from dim");
                Matrix M(rho.dim, rho.dim);
                for (int a = 0; a < rho.dim; ++a) {
                    if (m[a].size() != static_cast<std::size_t>(rho.dim))
                        throw std::invalid_argument("group file: matrix column count differs from dim");
                    for (int b = 0; b < rho.dim; ++b) M(a, b) = cplx(m[a][b].at(0).get<double>(), m[a][b].at(1).get<double>());
                }
                rho.matrices.push_back(M);
            }
            K.irreps.push_back(std::move(rho));
        }
        return K;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("group file: ") + e.what());
    }
}

inline FiniteGroupData load_group(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open group file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("group file " + path + ": " + e.what());
    }
    return group_from_json(j);
}

}  // namespace harmonic
