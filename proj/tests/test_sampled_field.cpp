#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "harmonic/corpus.hpp"
#include "harmonic/sampled_field.hpp"

using namespace harmonic;
using Catch::Approx;

namespace {

double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_abs(std::span<const cplx> a) {
    double m = 0.0;
    for (auto z : a) m = std::max(m, std::abs(z));
    return m;
}

}  // namespace

TEST_CASE("grid construction and spacing") {
    auto g = make_grid(1, {8.0}, {1024});
    CHECK(g.spacing(0) == 0.015625);
    CHECK(g.point(0, 0) == -8.0);

    auto g2 = make_grid(2, {6.0, 6.0}, {128, 128});
    CHECK(g2.dual().spacing(0) == Approx(1.0 / 12.0).epsilon(1e-15));
    CHECK(g2.dual().half_extent(1) == Approx(128.0 / 24.0));
    CHECK(g2.dual().dual() == g2);

    CHECK_THROWS_AS(make_grid(1, {0.0}, {64}), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1, {1.0}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(2, {1.0}, {4, 4}), std::invalid_argument);
}

TEST_CASE("field rejects non-finite samples and size mismatch") {
    auto g = make_grid(1, {1.0}, {4});
    CHECK_THROWS(SampledField(g, std::vector<cplx>(3)));
    CHECK_THROWS(SampledField(g, {cplx(1, 0), cplx(NAN, 0), 0, 0}));
}

TEST_CASE("norm and moments of the standard Gaussian") {
    auto g = make_grid(1, {8.0}, {1024});
    auto f = standard_gaussian(g);
    CHECK(l2_norm_sq(f) == Approx(std::sqrt(0.5)).margin(1e-9));
    CHECK(weighted_moment(f, 2.0) == Approx(std::sqrt(0.5) / (4 * pi)).margin(1e-7));
    CHECK(weighted_moment(f, 2.0) == Approx(0.0562698).margin(1e-7));
    CHECK(weighted_moment(f, 4.0) == Approx(3.0 / (16 * pi * pi * std::sqrt(2.0))).margin(1e-7));
    CHECK(weighted_moment(f, 0.0) == l2_norm_sq(f));
    CHECK_THROWS_AS(weighted_moment(f, -1.0), std::invalid_argument);

    auto zero = SampledField::zeros(g);
    CHECK(l2_norm_sq(zero) == 0.0);
    CHECK(weighted_moment(zero, 4.0) == 0.0);
}

TEST_CASE("unit box has unit norm up to one cell") {
    auto g = make_grid(1, {4.0}, {512});
    auto f = sample(g, [](std::span<const double> x) { return cplx(std::abs(x[0]) <= 0.5 ? 1.0 : 0.0); });
    CHECK(std::abs(l2_norm_sq(f) - 1.0) <= g.spacing(0));
}

TEST_CASE("Gaussian is self-dual under the transform") {
    auto g = make_grid(1, {8.0}, {1024});
    auto F = euclidean_ft(standard_gaussian(g));
    REQUIRE(F.grid() == g.dual());
    double err = 0.0;
    for (std::size_t k = 0; k < F.grid().count(0); ++k) {
        const double xi = F.grid().point(0, k);
        err = std::max(err, std::abs(F.values()[k] - std::exp(-pi * xi * xi)));
    }
    CHECK(err <= 1e-9);

    auto Z = euclidean_ft(SampledField::zeros(g));
    CHECK(max_abs(Z.values()) == 0.0);
}

TEST_CASE("2-D Gaussian self-duality and odd sample counts") {
    auto g = make_grid(2, {5.0, 6.0}, {63, 81});
    auto F = euclidean_ft(standard_gaussian(g));
    double err = 0.0;
    std::size_t idx[2];
    for (std::size_t i = 0; i < F.grid().size(); ++i) {
        F.grid().unravel(i, idx);
        const double a = F.grid().point(0, idx[0]), b = F.grid().point(1, idx[1]);
        err = std::max(err, std::abs(F.values()[i] - std::exp(-pi * (a * a + b * b))));
    }
    CHECK(err <= 1e-9);
}

TEST_CASE("translation becomes modulation") {
    auto g = make_grid(1, {8.0}, {1024});
    const double c = 1.25;
    auto shifted = sample(g, [&](std::span<const double> x) { return cplx(std::exp(-pi * (x[0] - c) * (x[0] - c))); });
    auto F0 = euclidean_ft(standard_gaussian(g));
    auto F1 = euclidean_ft(shifted);
    double err = 0.0;
    for (std::size_t k = 0; k < g.count(0); ++k) {
        const double xi = F0.grid().point(0, k);
        err = std::max(err, std::abs(F1.values()[k] - std::polar(1.0, -2 * pi * c * xi) * F0.values()[k]));
    }
    CHECK(err <= 1e-9);
}

TEST_CASE("nudft matches closed form and the grid transform") {
    auto g = make_grid(1, {8.0}, {1024});
    auto f = standard_gaussian(g);
    std::vector<std::vector<double>> pts{{0.3}};
    CHECK(std::abs(nudft_at(f, pts)[0] - std::exp(-pi * 0.09)) <= 1e-9);

    auto F = euclidean_ft(f);
    std::vector<std::vector<double>> grid_pts;
    for (std::size_t k = 0; k < 1024; k += 37) grid_pts.push_back({F.grid().point(0, k)});
    auto v = nudft_at(f, grid_pts);
    const double scale = max_abs(F.values());
    for (std::size_t i = 0; i < grid_pts.size(); ++i) CHECK(std::abs(v[i] - F.values()[i * 37]) <= 1e-12 * scale);

    CHECK_THROWS_AS(nudft_at(f, std::vector<std::vector<double>>{{40.0}}), std::domain_error);
    auto z = nudft_at(SampledField::zeros(g), pts);
    CHECK(z[0] == cplx{});
}

TEST_CASE("nudft in 2-D agrees with grid transform for a corpus member") {
    auto g = make_grid(2, {6.0, 6.0}, {64, 64});
    auto f = test_corpus(g, 3, 3)[2];
    auto F = euclidean_ft(f);
    std::vector<std::vector<double>> pts;
    std::vector<cplx> expect;
    std::size_t idx[2];
    for (std::size_t i = 5; i < F.grid().size(); i += 301) {
        F.grid().unravel(i, idx);
        pts.push_back({F.grid().point(0, idx[0]), F.grid().point(1, idx[1])});
        expect.push_back(F.values()[i]);
    }
    auto v = nudft_at(f, pts);
    CHECK(max_abs_diff(v, expect) <= 1e-12 * max_abs(F.values()));
}

TEST_CASE("spectral derivative") {
    SECTION("windowed sine") {
        auto g = make_grid(1, {16.0}, {1024});
        auto f = sample(g, [](std::span<const double> x) { return cplx(std::sin(x[0]) * std::exp(-0.1 * x[0] * x[0])); });
        auto df = spectral_partial(f, 0);
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < 1024; ++j) {
            const double x = g.point(0, j), w = std::exp(-0.1 * x * x);
            const double exact = std::cos(x) * w - 0.2 * x * std::sin(x) * w;
            num += std::norm(df.values()[j] - exact);
            den += exact * exact;
        }
        CHECK(std::sqrt(num / den) <= 1e-5);
    }
    SECTION("Gaussian") {
        auto g = make_grid(1, {8.0}, {1024});
        auto df = spectral_partial(standard_gaussian(g), 0);
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < 1024; ++j) {
            const double x = g.point(0, j);
            const double exact = -2 * pi * x * std::exp(-pi * x * x);
            num += std::norm(df.values()[j] - exact);
            den += exact * exact;
        }
        CHECK(std::sqrt(num / den) <= 1e-6);
    }
    SECTION("constant field") {
        auto g = make_grid(1, {4.0}, {64});
        auto df = spectral_partial(sample(g, [](auto) { return cplx(3.0, -1.0); }), 0);
        CHECK(max_abs(df.values()) <= 1e-12);
    }
}

TEST_CASE("spectral derivative agrees with central differences on the corpus") {
    auto g = make_grid(1, {8.0}, {16384});
    const double h = g.spacing(0);
    for (const auto& m : corpus_members(g, 11, 8)) {
        auto df = spectral_partial(m.field, 0);
        auto v = m.field.values();
        double num = 0.0, den = 0.0;
        for (std::size_t j = 1; j + 1 < 16384; ++j) {
            const cplx fd = (v[j + 1] - v[j - 1]) / (2 * h);
            num += std::norm(df.values()[j] - fd);
            den += std::norm(df.values()[j]);
        }
        INFO(m.id);
        CHECK(std::sqrt(num / den) <= 1e-4);
    }
}

TEST_CASE("Plancherel and inversion on the corpus") {
    for (const auto& g : {make_grid(1, {8.0}, {1024}), make_grid(2, {6.0, 6.0}, {128, 128})}) {
        for (const auto& m : corpus_members(g, 2024, 12)) {
            INFO(m.id);
            auto F = euclidean_ft(m.field);
            const double n2 = l2_norm_sq(m.field);
            CHECK(std::abs(l2_norm_sq(F) - n2) <= 1e-8 * n2);
            auto back = inverse_euclidean_ft(F);
            CHECK(back.grid().dim() == g.dim());
            CHECK(max_abs_diff(back.values(), m.field.values()) <= 1e-10 * max_abs(m.field.values()));
        }
    }
}

TEST_CASE("corpus is deterministic, nonzero and band-limited where requested") {
    auto g = make_grid(1, {8.0}, {1024});
    auto a = test_corpus(g, 7, 3);
    auto b = test_corpus(g, 7, 3);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(l2_norm_sq(a[i]) > 0.0);
        CHECK(std::equal(a[i].values().begin(), a[i].values().end(), b[i].values().begin()));
    }
    auto other = test_corpus(g, 8, 3);
    CHECK_FALSE(std::equal(a[0].values().begin(), a[0].values().end(), other[0].values().begin()));

    for (const auto& grid : {g, make_grid(2, {6.0, 6.0}, {128, 128})}) {
        for (const auto& m : corpus_members(grid, 99, 16)) {
            CHECK(boundary_amplitude_ratio(m.field) <= corpus_decay_tolerance);
            if (m.requested != CorpusKind::band_limited) continue;
            INFO(m.id << " on a " << grid.dim() << "-D grid");
            REQUIRE(m.kind == CorpusKind::band_limited);
            auto F = euclidean_ft(m.field);
            double outside = 0.0, total = 0.0;
            std::vector<std::size_t> idx(grid.dim());
            for (std::size_t i = 0; i < F.grid().size(); ++i) {
                F.grid().unravel(i, idx);
                bool inner = true;
                for (std::size_t d = 0; d < grid.dim(); ++d)
                    inner = inner && std::abs(F.grid().point(d, idx[d])) <= F.grid().half_extent(d) / 4;
                total += std::norm(F.values()[i]);
                if (!inner) outside += std::norm(F.values()[i]);
            }
            CHECK(outside <= 1e-12 * total);
        }
    }
}

TEST_CASE("small grids fall back from band-limited members") {
    auto g = make_grid(2, {4.0, 4.0}, {64, 64});
    auto m = corpus_member(g, 1, 3);
    CHECK(m.requested == CorpusKind::band_limited);
    CHECK(m.kind == CorpusKind::shifted_gaussian);
    CHECK_THROWS_AS(corpus_member(make_grid(1, {1.0}, {8}), 1, 0), std::invalid_argument);
}

TEST_CASE("binary round trip preserves grid, group axis and samples") {
    auto g = make_grid(2, {3.0, 2.5}, {8, 6});
    auto f = sample_with_group(g, {0.25, 0.25, 0.5}, [](std::span<const double> x, std::size_t k) {
        return cplx(x[0] + static_cast<double>(k), x[1]);
    });
    std::stringstream ss;
    write_field(ss, f);
    auto r = read_field(ss);
    CHECK(r.grid() == g);
    CHECK(r.group_size() == 3);
    CHECK(r.group_weight(2) == 0.5);
    CHECK(std::equal(r.values().begin(), r.values().end(), f.values().begin()));

    std::stringstream bad("nonsense");
    CHECK_THROWS_AS(read_field(bad), std::runtime_error);
}
