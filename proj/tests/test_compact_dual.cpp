#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "harmonic/compact_dual.hpp"

using namespace harmonic;

namespace {

std::vector<cplx> random_function(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<cplx> phi(n);
    for (auto& v : phi) v = {nd(rng), nd(rng)};
    return phi;
}

}  // namespace

TEST_CASE("built-in groups validate") {
    auto s3 = s3_group();
    auto r = validate_group(s3);
    CHECK(r.ok());
    int dsq = 0;
    for (const auto& rho : s3.irreps) dsq += rho.dim * rho.dim;
    CHECK(dsq == 6);
    CHECK(s3.irreps[2].dim == 2);

    CHECK(validate_group(cyclic_group(4)).ok());
    CHECK(cyclic_group(4).irreps[1].matrices[1](0, 0) == cplx(0, 1));
    CHECK(validate_group(cyclic_group(7)).ok());
}

TEST_CASE("S3 is nonabelian and the table matches the dihedral presentation") {
    auto K = s3_group();
    // r s = s r^-1
    CHECK(K.mul(1, 3) == K.mul(3, 2));
    CHECK(K.mul(1, 3) != K.mul(3, 1));
    for (int g = 0; g < 6; ++g) CHECK(K.mul(g, K.inverse[g]) == 0);
}

TEST_CASE("validation reports broken data") {
    auto K = s3_group();
    for (auto& m : K.irreps[2].matrices) m *= 1.1;
    auto r = validate_group(K);
    REQUIRE_FALSE(r.ok());
    bool unitary = false;
    for (const auto& v : r.violations) unitary = unitary || v.find("not unitary") != std::string::npos;
    CHECK(unitary);

    auto missing = s3_group();
    missing.irreps.pop_back();
    auto r2 = validate_group(missing);
    REQUIRE_FALSE(r2.ok());
    CHECK(r2.violations.back().find("completeness") != std::string::npos);

    auto bad_table = cyclic_group(4);
    std::swap(bad_table.table[5], bad_table.table[6]);
    CHECK_FALSE(validate_group(bad_table).ok());

    auto dup = cyclic_group(4);
    dup.irreps[3] = dup.irreps[1];
    CHECK_FALSE(validate_group(dup).ok());
}

TEST_CASE("Schur orthogonality of matrix coefficients") {
    for (const auto& K : {s3_group(), cyclic_group(4)}) {
        // <s_ij, t_kl> = delta / d_s under normalized Haar measure.
        for (std::size_t s = 0; s < K.irreps.size(); ++s)
            for (std::size_t t = 0; t < K.irreps.size(); ++t) {
                const int ds = K.irreps[s].dim, dt = K.irreps[t].dim;
                for (int i = 0; i < ds; ++i)
                    for (int j = 0; j < ds; ++j)
                        for (int k = 0; k < dt; ++k)
                            for (int l = 0; l < dt; ++l) {
                                cplx acc{};
                                for (int g = 0; g < K.order; ++g)
                                    acc += K.irreps[s].matrices[g](i, j) * std::conj(K.irreps[t].matrices[g](k, l));
                                acc /= K.order;
                                const double expect = (s == t && i == k && j == l) ? 1.0 / ds : 0.0;
                                CHECK(std::abs(acc - expect) <= 1e-12);
                            }
            }
    }
}

TEST_CASE("Plancherel on K") {
    auto s3 = s3_group();
    std::vector<cplx> delta(6, 0.0);
    delta[0] = 1.0;
    CHECK(k_plancherel_defect(s3, delta) <= 1e-12);
    CHECK(k_plancherel_defect(s3, std::vector<cplx>(6)) == 0.0);

    auto z4 = cyclic_group(4);
    for (unsigned seed = 0; seed < 20; ++seed) CHECK(k_plancherel_defect(z4, random_function(4, seed)) <= 1e-12);
    for (unsigned seed = 0; seed < 20; ++seed) CHECK(k_plancherel_defect(s3, random_function(6, seed)) <= 1e-12);

    auto broken = s3;
    broken.irreps.pop_back();
    CHECK_THROWS_AS(k_plancherel_defect(broken, delta), std::invalid_argument);
}

TEST_CASE("circle characters reproduce trigonometric polynomials") {
    CircleDual C(6);
    CHECK(C.samples() == 13);
    auto coeffs_true = random_function(13, 3);
    std::vector<cplx> samples(13);
    for (int j = 0; j < 13; ++j) samples[j] = C.resum(coeffs_true, C.angle(j));
    auto c = C.project(samples);
    for (int i = 0; i < 13; ++i) CHECK(std::abs(c[i] - coeffs_true[i]) <= 1e-10);
    for (double th : {0.1, 1.7, 4.0}) {
        cplx direct{};
        for (int m = -6; m <= 6; ++m) direct += coeffs_true[m + 6] * std::polar(1.0, m * th);
        CHECK(std::abs(C.resum(c, th) - direct) <= 1e-10);
    }
    // Orthonormality under the sample quadrature.
    for (int m = -6; m <= 6; ++m)
        for (int k = -6; k <= 6; ++k) {
            cplx acc{};
            for (int j = 0; j < 13; ++j) acc += std::polar(1.0, (m - k) * C.angle(j)) / 13.0;
            CHECK(std::abs(acc - (m == k ? 1.0 : 0.0)) <= 1e-12);
        }
    CHECK_THROWS(CircleDual(0));
}

TEST_CASE("group JSON round trip") {
    for (const auto& K : {s3_group(), cyclic_group(4)}) {
        auto j = group_to_json(K);
        auto back = group_from_json(nlohmann::json::parse(j.dump()));
        CHECK(back.order == K.order);
        CHECK(back.table == K.table);
        CHECK(back.inverse == K.inverse);
        REQUIRE(back.irreps.size() == K.irreps.size());
        for (std::size_t s = 0; s < K.irreps.size(); ++s)
            for (int g = 0; g < K.order; ++g) CHECK(back.irreps[s].matrices[g] == K.irreps[s].matrices[g]);
        CHECK(validate_group(back).ok());
    }
    auto j = group_to_json(s3_group());
    j["schema"] = "other/1";
    CHECK_THROWS_AS(group_from_json(j), std::invalid_argument);
    auto j2 = group_to_json(s3_group());
    j2["table"][0].erase(0);
    CHECK_THROWS_AS(group_from_json(j2), std::invalid_argument);
}

TEST_CASE("shipped group files match the built-ins") {
    for (const char* name : {"S3", "Z4"}) {
        auto K = load_group(std::string(HARMONIC_DATA_DIR) + "/groups/" + name + ".json");
        CHECK(validate_group(K).ok());
        CHECK(K.table == builtin_group(name).table);
    }
}
