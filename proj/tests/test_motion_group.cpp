#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "harmonic/motion_group.hpp"

using namespace harmonic;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// J_n by its power series; fine for x <= 10 in double precision.
double bessel_series(int n, double x) {
    const int k_n = std::abs(n);
    double term = std::pow(x / 2.0, k_n) / std::tgamma(k_n + 1.0);
    double sum = term;
    for (int k = 1; k < 80; ++k) {
        term *= -(x * x / 4.0) / (k * static_cast<double>(k + k_n));
        sum += term;
    }
    return (n < 0 && (k_n % 2)) ? -sum : sum;
}

Grid motion_grid() { return make_grid(2, {4.0, 4.0}, {64, 64}); }
constexpr std::size_t n_theta = 128;

SampledField gaussian2(const Grid& g) {
    return sample(g, [](std::span<const double> x) { return cplx(std::exp(-pi * (x[0] * x[0] + x[1] * x[1]))); });
}

}  // namespace

TEST_CASE("matrix elements have Bessel magnitudes", "[motion]") {
    const std::vector<std::array<double, 3>> probes{{0.5, 1.0, 0.0}, {1.0, 0.3, -2.0}, {2.0, -1.5, 2.5},
                                                   {3.0, 2.0, -2.0}, {0.7, 0.0, 0.0}};
    double worst = 0.0;
    for (const auto& [lam, z1, z2] : probes) {
        const double r = lam * std::hypot(z1, z2);
        if (r > 10.0) continue;
        for (int m = -8; m <= 8; ++m)
            for (int n = -8; n <= 8; ++n) {
                const double got = std::abs(mn_rep_matrix_element(lam, z1, z2, 0.3, m, n));
                worst = std::max(worst, std::abs(got - std::abs(bessel_series(n - m, r))));
            }
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("series Bessel values match tabulated points", "[motion]") {
    CHECK_THAT(bessel_series(0, 1.0), WithinAbs(0.7651976865579666, 1e-14));
    CHECK_THAT(bessel_series(1, 2.5), WithinAbs(0.4970941024642741, 1e-14));
    CHECK_THAT(bessel_series(3, 10.0), WithinAbs(0.05837937930518666, 1e-12));
    CHECK_THAT(bessel_series(-3, 10.0), WithinAbs(-0.05837937930518666, 1e-12));
}

TEST_CASE("zero field has a zero transform", "[motion]") {
    const auto g = motion_grid();
    const auto f = SampledField::zeros(g, circle_weights(n_theta));
    const auto F = mn_ft(f, 1.0, 8);
    CHECK(F.F.norm() == 0.0);
    MotionOptions opt;
    CHECK_THROWS_AS(mn_uncertainty(f, MomentSpec(1, 1), opt), std::invalid_argument);
}

TEST_CASE("circle harmonic times a Gaussian is a single entry", "[motion]") {
    const auto g = gaussian2(motion_grid());
    for (int k : {0, 1, -3}) {
        const auto f = motion_tensor(g, n_theta, k);
        for (double lam : {0.5, 1.0, 3.0}) {
            const auto F = mn_ft(f, lam, 8);
            const double expect = std::exp(-lam * lam / (4.0 * pi));
            CHECK_THAT(std::abs(F.at(k, k)), WithinRel(expect, 1e-10));
            CHECK_THAT(F.F.norm(), WithinRel(expect, 1e-10));
        }
    }
}

TEST_CASE("HS norm is the Frobenius norm of the truncated matrix", "[motion]") {
    OperatorMatrix I{1.0, 5, Matrix::Identity(11, 11)};
    CHECK(mn_hs_norm_sq(I) == 11.0);
    const auto f = motion_corpus_member(motion_grid(), n_theta, 3, 0);
    const auto F = mn_ft(f, 1.3, 12);
    CHECK_THAT(mn_hs_norm_sq(F), WithinRel((F.F * F.F.adjoint()).trace().real(), 1e-12));
}

TEST_CASE("transform is linear", "[motion]") {
    const auto g = motion_grid();
    const auto f1 = motion_corpus_member(g, n_theta, 5, 0);
    const auto f2 = motion_corpus_member(g, n_theta, 5, 1);
    const cplx a{0.7, -1.2}, b{-0.4, 0.9};
    const auto F1 = mn_ft(f1, 1.1, 10), F2 = mn_ft(f2, 1.1, 10);
    const auto F12 = mn_ft(linear_combination(a, f1, b, f2), 1.1, 10);
    const Matrix expect = a * F1.F + b * F2.F;
    CHECK((F12.F - expect).norm() <= 1e-12 * expect.norm());
}

TEST_CASE("lambda outside the dual disc is rejected", "[motion]") {
    const auto f = motion_tensor(gaussian2(motion_grid()), n_theta, 0);
    MotionTransform T(f, {});
    CHECK_THROWS_AS(T.transform(T.max_lambda() * 1.01), std::domain_error);
    CHECK_THROWS_AS(T.transform(-1.0), std::invalid_argument);
}

TEST_CASE("circle grid must resolve the truncation", "[motion]") {
    const auto f = motion_tensor(gaussian2(motion_grid()), 16, 0);
    MotionOptions opt;
    opt.M = 32;
    CHECK_THROWS_AS(MotionTransform(f, opt), std::invalid_argument);
}

TEST_CASE("Plancherel ratio is 2 pi for a Gaussian harmonic", "[motion]") {
    // int exp(-lambda^2 / 2pi) lambda d lambda = pi and ||f||^2 = 1/2.
    const auto f = motion_tensor(gaussian2(motion_grid()), n_theta, 2);
    MotionTransform T(f, {});
    const auto p = mn_plancherel_adaptive(T);
    CHECK_THAT(p.ratio, WithinRel(2.0 * pi, 1e-8));
    CHECK(p.diagnostics.empty());
}

TEST_CASE("Plancherel ratio is the same constant across the corpus", "[motion]") {
    const auto g = motion_grid();
    std::vector<double> ratios;
    for (std::size_t i = 0; i < 4; ++i) {
        MotionTransform T(motion_corpus_member(g, n_theta, 11, i), {});
        ratios.push_back(mn_plancherel_adaptive(T).ratio);
    }
    // dilated Gaussian pair
    for (double t : {0.8, 1.25}) {
        const auto d = sample(g, [t](std::span<const double> x) {
            return cplx(t * std::exp(-pi * t * t * (x[0] * x[0] + x[1] * x[1])));
        });
        MotionTransform T(motion_tensor(d, n_theta, 1), {});
        ratios.push_back(mn_plancherel_adaptive(T).ratio);
    }
    double mean = 0.0;
    for (double r : ratios) mean += r / static_cast<double>(ratios.size());
    for (double r : ratios) CHECK(std::abs(r - mean) <= 0.02 * mean);
    CHECK_THAT(mean, WithinRel(2.0 * pi, 1e-3));
}

TEST_CASE("derivative along z1 is i lambda f^ composed with cos multiplication", "[motion]") {
    const auto g = motion_grid();
    std::vector<SampledField> fields{motion_tensor(gaussian2(g), n_theta, 1)};
    for (std::size_t i = 0; i < 3; ++i) fields.push_back(motion_corpus_member(g, n_theta, 17, i));
    for (const auto& f : fields)
        for (double lam : {0.5, 1.0, 2.0}) {
            const auto r = mn_derivative_identity_residual(f, lam);
            CHECK(r.residual <= 1e-3);
            CHECK(r.derivative_hs <= r.bound * (1.0 + 1e-6));
        }
}

TEST_CASE("truncated HS norm grows with M and settles", "[motion]") {
    const auto g = motion_grid();
    for (std::size_t i = 0; i < 3; ++i) {
        const auto f = motion_corpus_member(g, n_theta, 23, i);
        for (double lam : {0.5, 1.0, 2.0}) {
            double prev = 0.0;
            for (int M : {4, 8, 16}) {
                const double v = mn_hs_norm_sq(mn_ft(f, lam, M));
                CHECK(v >= prev);
                prev = v;
            }
            const double v32 = mn_hs_norm_sq(mn_ft(f, lam, 32));
            CHECK(v32 >= prev);
            CHECK(std::abs(v32 - prev) <= 1e-6 * v32);
        }
    }
}

TEST_CASE("inequality holds with the measured constant", "[motion]") {
    const auto g = motion_grid();
    for (std::size_t i = 0; i < 10; ++i) {
        const auto f = motion_corpus_member(g, n_theta, 29, i);
        MotionTransform T(f, {});
        const auto p = mn_plancherel_adaptive(T);
        for (double a : {1.0, 2.0})
            for (double b : {1.0, 2.0}) {
                const auto t = mn_uncertainty(f, p.spectrum, p.ratio, MomentSpec(a, b));
                CHECK(t.ratio >= 1.0 - 1e-4);
                CHECK_FALSE(t.has_diagnostic(diag::lambda_tail));
            }
    }
}

TEST_CASE("Gaussian harmonic inequality terms match closed forms", "[motion]") {
    // ||f||^2 = 1/2, int |z|^2 |f|^2 = 1/(4 pi), lambda^2 moment / kappa = pi.
    const auto f = motion_tensor(gaussian2(motion_grid()), n_theta, 0);
    const auto t = mn_uncertainty(f, MomentSpec(1, 1));
    CHECK_THAT(t.lhs, WithinRel(0.25, 1e-12));
    CHECK_THAT(t.position_moment, WithinRel(1.0 / (4.0 * pi), 1e-10));
    CHECK_THAT(t.momentum_moment, WithinRel(pi, 1e-6));
    CHECK_THAT(t.ratio, WithinRel(2.0, 1e-6));
}
