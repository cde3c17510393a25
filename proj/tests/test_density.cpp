#include <cmath>
#include <sstream>

#include "doctest.h"
#include "nomaosd/grid_density.hpp"

using namespace nomaosd;

namespace {
const GridSpec kSmall{-64.0, 64.0, 2048};
}

TEST_CASE("from_samples") {
    SUBCASE("constant samples land in one bin") {
        std::vector<double> xs(100, 3.25);
        const auto d = GridDensity::from_samples(xs, kSmall);
        CHECK(d.total_mass() == doctest::Approx(1.0));
        CHECK(d.mass()[static_cast<std::size_t>(kSmall.bin_of(3.25))] == doctest::Approx(1.0));
    }
    SUBCASE("gaussian sample moments") {
        Rng rng(1);
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<double> xs(1000000);
        for (auto& x : xs) x = g(rng);
        const auto d = GridDensity::from_samples(xs, kSmall);
        CHECK(std::abs(d.mean()) < 0.01);
        CHECK(d.variance() == doctest::Approx(1.0).epsilon(0.02));
    }
    SUBCASE("out-of-range mass is clipped, not dropped") {
        std::vector<double> xs(10, 1000.0);
        const auto d = GridDensity::from_samples(xs, kSmall);
        CHECK(d.clipped_mass() == doctest::Approx(1.0));
        CHECK(d.total_mass() == doctest::Approx(0.0));
    }
    SUBCASE("empty input raises") {
        CHECK_THROWS_AS((void)GridDensity::from_samples({}, kSmall), std::invalid_argument);
    }
}

TEST_CASE("gaussian construction") {
    // converged-density constructor: mean 2/xi, variance twice the mean
    const double xi = 0.318;
    const auto d = GridDensity::gaussian(2.0 / xi, 4.0 / xi, GridSpec::llr_default());
    CHECK(d.mean() == doctest::Approx(6.289).epsilon(0.002));
    CHECK(d.variance() == doctest::Approx(2.0 * d.mean()).epsilon(0.01));
    CHECK(d.total_mass() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("convolve") {
    SUBCASE("point mass at zero is the identity") {
        const auto f = GridDensity::gaussian(1.0, 2.0, kSmall);
        const auto delta = GridDensity::point_mass(0.0, kSmall);
        const auto c = regrid(convolve(f, delta), kSmall);
        CHECK(tv_distance(c, f) < 0.02);  // half-bin smear from the point mass
        CHECK(std::abs(c.mean() - f.mean()) < kSmall.width());
    }
    SUBCASE("gaussian closure") {
        const auto a = GridDensity::gaussian(1.0, 1.0, kSmall);
        const auto b = GridDensity::gaussian(2.0, 3.0, kSmall);
        const auto c = convolve(a, b);
        CHECK(c.mean() == doctest::Approx(3.0).epsilon(1e-6));
        CHECK(c.variance() == doctest::Approx(4.0).epsilon(1e-3));
        CHECK(c.total_mass() + c.clipped_mass() == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("commutativity") {
        const auto a = GridDensity::gaussian(-2.0, 0.5, kSmall);
        const auto b = GridDensity::gaussian(5.0, 4.0, kSmall);
        const auto ab = convolve(a, b), ba = convolve(b, a);
        double diff = 0;
        for (std::size_t i = 0; i < ab.mass().size(); ++i)
            diff = std::max(diff, std::abs(ab.mass()[i] - ba.mass()[i]));
        CHECK(diff < 1e-12);
    }
    SUBCASE("direct path matches fft path") {
        const GridSpec tiny{-8.0, 8.0, 256};   // direct summation
        const GridSpec fine{-8.0, 8.0, 4096};  // fft
        const auto a1 = GridDensity::gaussian(0.5, 0.7, tiny);
        const auto c1 = convolve(a1, a1);
        const auto a2 = GridDensity::gaussian(0.5, 0.7, fine);
        const auto c2 = regrid(convolve(a2, a2), c1.spec());
        CHECK(tv_distance(c1, c2) < 5e-3);
    }
}

TEST_CASE("mirror and halfmix") {
    const auto d = GridDensity::gaussian(3.0, 2.0, kSmall);
    SUBCASE("mirror negates the mean and is an involution") {
        const auto m = mirror(d);
        CHECK(m.mean() == doctest::Approx(-3.0).epsilon(1e-9));
        const auto mm = mirror(m);
        CHECK(tv_distance(mm, d) < 1e-15);
    }
    SUBCASE("halfmix zeroes the mean and preserves mass") {
        const auto h = halfmix(d);
        CHECK(std::abs(h.mean()) < 1e-9);
        CHECK(h.total_mass() + h.clipped_mass() == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("a symmetric density is a halfmix fixed point") {
        const auto s = GridDensity::gaussian(0.0, 4.0, kSmall);
        CHECK(tv_distance(halfmix(s), s) < 1e-12);
    }
}

TEST_CASE("tanh pushforward") {
    const GridSpec mu = GridSpec::mu_default();
    SUBCASE("point mass maps through tanh") {
        const auto d = GridDensity::point_mass(0.0, GridSpec::llr_default());
        const auto j = tanh_pushforward(d, mu);
        CHECK(std::abs(j.mean()) < GridSpec::llr_default().width());
        CHECK(j.total_mass() == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("a converged extrinsic density concentrates at one") {
        const auto d = GridDensity::gaussian(76.0, 152.0, GridSpec::llr_default());
        const auto j = tanh_pushforward(d, mu);
        CHECK(j.mean() > 0.999);
        CHECK(j.total_mass() == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("pushforward then pullback restores resolvable densities") {
        const auto d = GridDensity::gaussian(2.0, 4.0, GridSpec::llr_default());
        const auto back = tanh_pullback(tanh_pushforward(d, mu), GridSpec::llr_default());
        CHECK(tv_distance(back, d) < 1e-3);
    }
}

TEST_CASE("ber_of") {
    SUBCASE("gaussian tail identity") {
        const auto d = GridDensity::gaussian(4.0, 8.0, GridSpec::llr_default());
        CHECK(ber_of(d) == doctest::Approx(0.0786).epsilon(0.003));
    }
    SUBCASE("all-positive support has zero error mass") {
        const auto d = GridDensity::gaussian(10.0, 0.5, GridSpec{1.0, 65.0, 1024});
        CHECK(ber_of(d) == 0.0);
    }
    SUBCASE("symmetric density splits evenly") {
        const auto d = GridDensity::gaussian(0.0, 4.0, kSmall);
        CHECK(ber_of(d) == doctest::Approx(0.5).epsilon(1e-6));
    }
}

TEST_CASE("residual_variance") {
    SUBCASE("point mass at zero") {
        CHECK(residual_variance(GridDensity::point_mass(0.0, kSmall)) ==
              doctest::Approx(1.0).epsilon(1e-3));
    }
    SUBCASE("point mass at the support edge") {
        CHECK(residual_variance(GridDensity::point_mass(63.9, kSmall)) < 1e-12);
    }
    SUBCASE("quadrature matches monte carlo") {
        const auto d = GridDensity::gaussian(6.29, 12.58, GridSpec::llr_default());
        const double q = residual_variance(d);
        Rng rng(7);
        std::normal_distribution<double> g(6.29, std::sqrt(12.58));
        double mc = 0;
        const int n = 1000000;
        for (int i = 0; i < n; ++i) {
            const double t = std::tanh(g(rng) / 2.0);
            mc += 1.0 - t * t;
        }
        mc /= n;
        CHECK(q == doctest::Approx(mc).epsilon(0.02));
        CHECK(std::abs(q - mc) < 1e-3);
        // decreasing in the mean (fixed mean/variance coupling)
        const auto d2 = GridDensity::gaussian(10.0, 20.0, GridSpec::llr_default());
        CHECK(residual_variance(d2) < q);
    }
}

TEST_CASE("mass conservation across primitives") {
    const auto d = GridDensity::gaussian(1.5, 3.0, kSmall);
    const auto e = GridDensity::gaussian(-0.5, 1.0, kSmall);
    CHECK(d.total_mass() + d.clipped_mass() == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& r : {mirror(d), halfmix(d), regrid(d, GridSpec::llr_default()),
                          tanh_pushforward(d, GridSpec::mu_default()), convolve(d, e)})
        CHECK(r.total_mass() + r.clipped_mass() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("csv round trip") {
    const auto d = GridDensity::gaussian(2.0, 1.0, GridSpec{-16.0, 16.0, 128});
    std::stringstream ss;
    d.write_csv(ss);
    const auto back = GridDensity::read_csv(ss);
    CHECK(back.spec() == d.spec());
    CHECK(tv_distance(back, d) < 1e-15);
}
