// Small tour: one ratio per group.

#include <cstdio>

#include "harmonic/harmonic.hpp"

using namespace harmonic;

int main() {
    const MomentSpec spec(1, 1);

    const auto g1 = standard_gaussian(make_grid(1, {8.0}, {1024}));
    std::printf("R^1 Gaussian            ratio %.9f\n", rn_uncertainty(g1, spec).ratio);

    const auto q = quadrature_of(s3_group());
    const ProductSpectrum ps(product_corpus_member(make_grid(1, {8.0}, {256}), q, 1, 0));
    std::printf("R^1 x S3 corpus member  plancherel %.12f  ratio %.6f\n", ps.plancherel_ratio(), ps.terms(spec).ratio);

    const auto m = motion_tensor(standard_gaussian(make_grid(2, {4.0, 4.0}, {64, 64})), 128, 0);
    MotionTransform T(m, {});
    const auto p = mn_plancherel_adaptive(T);
    std::printf("M(2) Gaussian           kappa %.8f  ratio %.6f\n", p.ratio, mn_uncertainty(m, p.spectrum, p.ratio, spec).ratio);

    const auto d = threadlike_descriptor(3);
    const auto f = nilpotent_corpus_member(make_grid(3, {4.0, 3.5, 3.5}, {64, 32, 32}), 1, 0);
    const auto s = nilpotent_spectrum(f, d);
    std::printf("Heisenberg corpus       plancherel %.8f  excluded %.2e  ratio %.6f\n", s.plancherel_ratio(),
                s.excluded_fraction, nilpotent_uncertainty(f, s, spec).ratio);
    const double w[] = {1.0};
    std::printf("Heisenberg Gaussian     HS norm^2 at xi1 = 1: %.12e (exp(-2 pi)/2 = %.12e)\n",
                nilpotent_hs_norm_sq(standard_gaussian(make_grid(3, {3.0, 3.0, 3.0}, {32, 32, 32})), d, w),
                std::exp(-2.0 * pi) / 2.0);
}
