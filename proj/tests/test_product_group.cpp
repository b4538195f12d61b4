#include <catch2/catch_amalgamated.hpp>

#include "harmonic/product_group.hpp"

using namespace harmonic;

namespace {

double max_entry(const ProductDualField& F, std::size_t s) {
    double m = 0.0;
    for (auto v : F.entries[s]) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

TEST_CASE("constant in k leaves only the trivial irrep") {
    auto g = make_grid(1, {8.0}, {512});
    auto q = quadrature_of(s3_group());
    auto f = tensor_field(standard_gaussian(g), std::vector<cplx>(6, 1.0), q);
    auto F = product_ft(f);
    const double ghat_max = max_entry(F, 0);
    CHECK(ghat_max == Catch::Approx(1.0).margin(1e-9));
    CHECK(max_entry(F, 1) <= 1e-12 * ghat_max);
    CHECK(max_entry(F, 2) <= 1e-12 * ghat_max);
}

TEST_CASE("identity indicator gives a scaled identity matrix") {
    auto g = make_grid(1, {8.0}, {512});
    auto K = s3_group();
    auto q = quadrature_of(K);
    std::vector<cplx> delta(6, 0.0);
    delta[0] = 1.0;
    auto gauss = standard_gaussian(g);
    auto F = product_ft(tensor_field(gauss, delta, q));
    auto ghat = euclidean_ft(gauss);
    double err = 0.0;
    for (std::size_t y = 0; y < g.size(); ++y)
        for (std::size_t s = 0; s < 3; ++s) {
            const int d = K.irreps[s].dim;
            err = std::max(err, (F.at(s, y) - (ghat.values()[y] / 6.0) * Matrix::Identity(d, d)).cwiseAbs().maxCoeff());
        }
    CHECK(err <= 1e-15);
}

TEST_CASE("zero field has zero transform and rejects ratios") {
    auto g = make_grid(1, {4.0}, {64});
    auto q = quadrature_of(cyclic_group(4));
    ProductField f(SampledField::zeros(g, q.weights), q);
    auto F = product_ft(f);
    for (std::size_t s = 0; s < 4; ++s) CHECK(max_entry(F, s) == 0.0);
    CHECK_THROWS_WITH(product_plancherel_ratio(f), "zero field");
    CHECK_THROWS_WITH(product_uncertainty(f, MomentSpec(1, 1)), "zero field");
}

TEST_CASE("field and group must agree") {
    auto g = make_grid(1, {4.0}, {64});
    auto q = quadrature_of(s3_group());
    CHECK_THROWS(ProductField(SampledField::zeros(g, std::vector<double>(4, 0.25)), q));
}

TEST_CASE("Plancherel on R x K") {
    auto g = make_grid(1, {8.0}, {1024});
    SECTION("Gaussian times random function on S3") {
        auto q = quadrature_of(s3_group());
        std::vector<cplx> phi{{0.3, -1}, {1.2, 0.1}, {-0.7, 0.4}, {0.05, 2}, {1, 1}, {-1.5, 0}};
        CHECK(std::abs(product_plancherel_ratio(tensor_field(standard_gaussian(g), phi, q)) - 1.0) <= 1e-8);
    }
    SECTION("Gaussian times a single circle character") {
        CircleDual C(4);
        auto q = quadrature_of(C);
        std::vector<cplx> phi(C.samples());
        for (int j = 0; j < C.samples(); ++j) phi[j] = std::polar(1.0, 3 * C.angle(j));
        auto f = tensor_field(standard_gaussian(g), phi, q);
        CHECK(std::abs(product_plancherel_ratio(f) - 1.0) <= 1e-8);
        auto F = product_ft(f);
        // Only the m = 3 character survives.
        for (int m = -4; m <= 4; ++m)
            if (m != 3) CHECK(max_entry(F, m + 4) <= 1e-12);
    }
    SECTION("seeded corpus on all built-in groups") {
        for (const auto& q : {quadrature_of(cyclic_group(4)), quadrature_of(s3_group()), quadrature_of(CircleDual(8))})
            for (std::size_t i = 0; i < 20; ++i) {
                auto f = product_corpus_member(g, q, 42, i);
                INFO(q.name << " #" << i);
                CHECK(std::abs(product_plancherel_ratio(f) - 1.0) <= 1e-7);
            }
    }
}

TEST_CASE("transform order does not matter") {
    auto g = make_grid(2, {5.0, 5.0}, {64, 64});
    for (const auto& q : {quadrature_of(s3_group()), quadrature_of(CircleDual(3))}) {
        auto f = product_corpus_member(g, q, 9, 1);
        auto A = product_ft(f);
        auto B = product_ft_k_first(f);
        REQUIRE(A.dual == B.dual);
        double scale = 0.0, err = 0.0;
        for (std::size_t s = 0; s < A.dims.size(); ++s) {
            scale = std::max(scale, max_entry(A, s));
            for (std::size_t e = 0; e < A.entries[s].size(); ++e)
                err = std::max(err, std::abs(A.entries[s][e] - B.entries[s][e]));
        }
        CHECK(err <= 1e-12 * scale);
    }
}

TEST_CASE("Gaussian tensor constant on Z4 attains equality") {
    auto g = make_grid(1, {8.0}, {1024});
    auto f = tensor_field(standard_gaussian(g), std::vector<cplx>(4, 1.0), quadrature_of(cyclic_group(4)));
    auto t = product_uncertainty(f, MomentSpec(1, 1));
    CHECK(std::abs(t.ratio - 1.0) <= 1e-3);
}

TEST_CASE("inequality on R x S3 corpus") {
    auto g = make_grid(1, {8.0}, {1024});
    auto q = quadrature_of(s3_group());
    for (std::size_t i = 0; i < 30; ++i) {
        ProductSpectrum ps(product_corpus_member(g, q, 77, i));
        for (double a : {1.0, 2.0})
            for (double b : {1.0, 2.0}) {
                auto t = ps.terms(MomentSpec(a, b));
                INFO("#" << i << " a=" << a << " b=" << b);
                CHECK(t.ratio >= 1.0 - 1e-6);
                CHECK(t.diagnostics.empty());
            }
        for (double b : {1.5, 2.0}) {
            auto [left, right] = ps.holder_step(b);
            CHECK(left <= right * (1.0 + 1e-8));
        }
    }
}
