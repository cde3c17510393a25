#include <cmath>

#include "doctest.h"
#include "nomaosd/de.hpp"
#include "oracle.hpp"

using namespace nomaosd;

TEST_CASE("switch-off densities") {
    SUBCASE("single user at t=1 is the channel llr gaussian") {
        UserChannel ch{{1.0}, 0.5};
        const auto out = ds_off_density(ch, 1);
        const auto ref = awgn_llr_density(0.5);
        CHECK(tv_distance(out[0], ref) < 1e-3);
    }
    SUBCASE("two users at t=1 form the interferer mixture") {
        UserChannel ch{{1.225, 0.707}, 0.2};
        const auto out = ds_off_density(ch, 1);
        // user 1: means 2*h1*(h1 +- h2)/(h2^2 + sigma2), common variance
        const double den = 0.707 * 0.707 + 0.2;
        GridDensity ref(GridSpec::llr_default());
        const double sd = 2.0 * 1.225 * std::sqrt(0.2) / den;
        ref.add_gaussian(2.0 * 1.225 * (1.225 + 0.707) / den, sd, 0.5);
        ref.add_gaussian(2.0 * 1.225 * (1.225 - 0.707) / den, sd, 0.5);
        CHECK(tv_distance(out[0], ref) < 1e-3);
    }
    SUBCASE("iterating sharpens the llr quality") {
        UserChannel ch{{1.225, 0.707}, 0.2};
        const double b1 = ber_of(ds_off_density(ch, 1)[0]);
        const double b3 = ber_of(ds_off_density(ch, 3)[0]);
        CHECK(b3 < b1);
    }
    SUBCASE("narrow grids are rejected") {
        UserChannel ch{{1.0}, 0.01};
        CHECK_THROWS_AS((void)ds_off_density(ch, 1, GridSpec{-8, 8, 256}), std::runtime_error);
    }
}

TEST_CASE("cancellation transform") {
    UserChannel ch{{1.225, 0.707}, 0.317};
    const GridSpec mu = GridSpec::mu_default();
    SUBCASE("perfect symbol knowledge leaves pure awgn") {
        std::vector<JPair> j;
        for (int u = 0; u < 2; ++u)
            j.push_back({GridDensity::point_mass(1.0, mu), GridDensity::point_mass(-1.0, mu)});
        for (std::size_t u = 0; u < 2; ++u) {
            const auto L = cn_transform(j, ch, u);
            const double h = ch.h[u];
            const auto ref =
                GridDensity::gaussian(2.0 * h * h / ch.sigma2, 4.0 * h * h / ch.sigma2,
                                      GridSpec::llr_default());
            CHECK(tv_distance(L, ref) < 2e-3);
        }
    }
    SUBCASE("zero symbol knowledge reproduces the first switch-off density") {
        std::vector<JPair> j;
        for (int u = 0; u < 2; ++u)
            j.push_back({GridDensity::point_mass(0.0, mu), GridDensity::point_mass(0.0, mu)});
        const auto ref = ds_off_density(ch, 1);
        for (std::size_t u = 0; u < 2; ++u)
            CHECK(tv_distance(cn_transform(j, ch, u), ref[u]) < 2e-3);
    }
    SUBCASE("three-user tensor quadrature stays normalized") {
        UserChannel ch3{{1.4411, 0.8320, 0.4804}, 0.1893};
        std::vector<JPair> j;
        for (int u = 0; u < 3; ++u) {
            const auto d = GridDensity::gaussian(3.0, 6.0, GridSpec::llr_default());
            j.push_back(en_transform(d, regrid(mirror(d), d.spec())));
        }
        const auto L = cn_transform(j, ch3, 0);
        CHECK(L.total_mass() + L.clipped_mass() == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("decoder transform, empirical backend") {
    const auto code = load_code(code_fixture_path("ebch_32_16_8.txt"));
    const EmpiricalDelta backend(600);
    const auto L = awgn_llr_density(0.5);
    SUBCASE("deterministic given the seed") {
        const auto a = dn_transform(L, code, 2, backend, 42);
        const auto b = dn_transform(L, code, 2, backend, 42);
        CHECK(tv_distance(a, b) == 0.0);
        const auto c = dn_transform(L, code, 2, backend, 43);
        CHECK(tv_distance(a, c) > 0.0);
    }
    SUBCASE("clean priori gives confident extrinsics") {
        const auto D = dn_transform(awgn_llr_density(0.25), code, 2, backend, 1);
        CHECK(D.mean() > 10.0);
        CHECK(ber_of(D) < 1e-2);
    }
}

TEST_CASE("decoder transform backends agree at high snr") {
    const auto code = load_code(code_fixture_path("ebch_32_16_8.txt"));
    const auto L = awgn_llr_density(0.5);
    const EmpiricalDelta emp(4000);
    const SemianalyticDelta semi(4000);
    const auto de = dn_transform(L, code, 2, emp, 7);
    const auto ds = dn_transform(L, code, 2, semi, 7);
    CHECK(tv_distance(regrid(de, ds.spec()), ds) <= 0.1);
}

TEST_CASE("semianalytic calibration") {
    const auto code = load_code(code_fixture_path("ebch_64_30_14.txt"));
    const SemianalyticDelta semi(3000);
    const auto cal = semi.calibrate(GridDensity::gaussian(2.0 / 0.6, 4.0 / 0.6,
                                                          GridSpec::llr_default()),
                                    code, 3, 5);
    CHECK(cal.n0 == 4090);
    // basis error-count law: heavily weighted toward zero errors at this snr
    CHECK(cal.p_err_count[0] > 0.5);
    double pe_sum = 0;
    for (double p : cal.p_err_count) pe_sum += p;
    CHECK(cal.pe_prefix == doctest::Approx(pe_sum).epsilon(1e-12));  // full shells
    CHECK(cal.mu2 > cal.mu1);
    CHECK(cal.rho > 0.0);
    CHECK(cal.rho < 0.9);
}

TEST_CASE("posterior density") {
    SUBCASE("point-mass priori shifts the extrinsic") {
        const auto L = GridDensity::point_mass(2.0, GridSpec::llr_default());
        const auto D = GridDensity::gaussian(5.0, 3.0, GridSpec::llr_default());
        const auto P = posterior_density(L, D);
        CHECK(P.mean() == doctest::Approx(7.0).epsilon(1e-3));
    }
    SUBCASE("means add") {
        const auto L = GridDensity::gaussian(1.5, 2.0, GridSpec::llr_default());
        const auto D = GridDensity::gaussian(4.0, 6.0, GridSpec::llr_default());
        const auto P = posterior_density(L, D);
        CHECK(P.mean() == doctest::Approx(5.5).epsilon(1e-6));
        CHECK(P.variance() == doctest::Approx(8.0).epsilon(1e-3));
    }
}

TEST_CASE("single-user recursion matches a direct decoder transform") {
    const auto code = load_code(code_fixture_path("ebch_32_16_8.txt"));
    UserChannel ch{{1.0}, 0.5};
    const EmpiricalDelta backend(1500);
    DeOptions opt;
    opt.seed = 3;
    const auto states = de_run(ch, code, 2, 0, 1, backend, opt);
    REQUIRE(states.size() == 1);
    REQUIRE(states[0].extrinsic.size() == 1);
    auto direct = dn_transform(awgn_llr_density(0.5), code, 2, backend,
                               derive_seed(3, 1, 0));
    direct.normalize();
    CHECK(tv_distance(states[0].extrinsic[0], direct) < 0.02);
}

TEST_CASE("recursion outputs stay normalized") {
    const auto code = load_code(code_fixture_path("ebch_32_16_8.txt"));
    const auto ch = UserChannel::from_snr_db({1.225, 0.707}, 10.0);
    const EmpiricalDelta backend(800);
    DeOptions opt;
    opt.seed = 9;
    const auto states = de_run(ch, code, 2, 2, 4, backend, opt);
    REQUIRE(states.size() == 4);
    for (const auto& st : states) {
        for (const auto& d : st.priori)
            CHECK(d.total_mass() == doctest::Approx(1.0).epsilon(1e-6));
        for (const auto& d : st.extrinsic)
            CHECK(d.total_mass() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(st.decoding == (st.t > 2));
    }
    // quality improves along the run
    CHECK(ber_of(states[3].priori[0]) <= ber_of(states[2].priori[0]) + 1e-3);
}

TEST_CASE("backend factory") {
    CHECK(make_delta_backend("empirical", 10)->name() == "empirical");
    CHECK(make_delta_backend("semianalytic", 10)->name() == "semianalytic");
    CHECK(make_delta_backend("identity", 0)->name() == "identity");
    CHECK_THROWS_AS((void)make_delta_backend("nope", 1), std::invalid_argument);
}
