#include <cmath>

#include "doctest.h"
#include "nomaosd/sim_harness.hpp"
#include "oracle.hpp"

using namespace nomaosd;

namespace {

ExperimentSpec small_spec(const LinearCode& code) {
    ExperimentSpec spec;
    spec.cfg.code = &code;
    spec.cfg.ch.h = {1.225, 0.707};
    spec.cfg.order = 2;
    spec.cfg.t_off = 2;
    spec.cfg.t_max = 4;
    spec.snr_points = {8.0};
    spec.n_blocks = 60;
    spec.seed = 77;
    return spec;
}

bool stats_equal(const ExperimentResult& a, const ExperimentResult& b) {
    if (a.stats.size() != b.stats.size()) return false;
    for (std::size_t s = 0; s < a.stats.size(); ++s)
        for (std::size_t u = 0; u < a.stats[s].size(); ++u)
            for (std::size_t t = 0; t < a.stats[s][u].size(); ++t) {
                const auto& x = a.stats[s][u][t];
                const auto& y = b.stats[s][u][t];
                if (x.bit_errors != y.bit_errors || x.bits != y.bits ||
                    x.block_errors != y.block_errors || x.blocks != y.blocks)
                    return false;
                if (x.priori.counts != y.priori.counts || x.priori.clipped != y.priori.clipped)
                    return false;
            }
    return true;
}

}  // namespace

TEST_CASE("experiment accounting and determinism") {
    const auto code = load_code(code_fixture_path("ebch_32_16_8.txt"));
    auto spec = small_spec(code);
    spec.collect.densities = true;
    const auto a = run_experiment(spec);
    SUBCASE("bit counting is exact") {
        for (std::size_t u = 0; u < 2; ++u)
            for (int t = 1; t <= 4; ++t) {
                CHECK(a.at(0, u, t).bits == spec.n_blocks * code.k);
                CHECK(a.at(0, u, t).blocks == spec.n_blocks);
                CHECK(a.at(0, u, t).bit_errors <= a.at(0, u, t).bits);
            }
        CHECK(a.completed_blocks == spec.n_blocks);
    }
    SUBCASE("same seed reproduces everything") {
        const auto b = run_experiment(spec);
        CHECK(stats_equal(a, b));
    }
    SUBCASE("thread count does not change the result") {
        auto spec2 = spec;
        spec2.threads = 2;
        const auto b = run_experiment(spec2);
        CHECK(stats_equal(a, b));
    }
    SUBCASE("different seeds differ") {
        auto spec2 = spec;
        spec2.seed = 78;
        const auto b = run_experiment(spec2);
        CHECK(!stats_equal(a, b));
    }
}

TEST_CASE("clean channel decodes error free after the switch") {
    const auto code = load_code(code_fixture_path("ebch_32_16_8.txt"));
    auto spec = small_spec(code);
    spec.snr_points = {50.0};
    spec.n_blocks = 30;
    const auto res = run_experiment(spec);
    for (std::size_t u = 0; u < 2; ++u)
        for (int t = 3; t <= 4; ++t) CHECK(res.at(0, u, t).bit_errors == 0);
}

TEST_CASE("density histograms fold to the sent symbol side") {
    const auto code = load_code(code_fixture_path("ebch_32_16_8.txt"));
    auto spec = small_spec(code);
    spec.snr_points = {30.0};
    spec.collect.densities = true;
    spec.n_blocks = 40;
    const auto res = run_experiment(spec);
    // at high snr nearly all folded llr mass is positive
    const auto d = res.at(0, 0, 1).priori.to_density();
    CHECK(ber_of(d) < 0.01);
    CHECK(res.at(0, 0, 4).extrinsic.total() > 0);
    CHECK(res.at(0, 0, 1).extrinsic.total() == 0);  // no decoding before the switch
}

TEST_CASE("compare_de is zero against itself") {
    const auto code = load_code(code_fixture_path("ebch_32_16_8.txt"));
    ExperimentResult sim;
    sim.snr_points = {8.0};
    sim.n_users = 1;
    sim.t_max = 1;
    const GridSpec grid{-64.0, 64.0, 512};
    IterUserStats st{0, 0, 0, 0, CountHist(grid), CountHist(grid), CountHist(grid)};
    // histogram drawn from the same density the states carry
    const auto d = awgn_llr_density(0.5);
    GridSampler sampler(d);
    Rng rng(4);
    for (int i = 0; i < 400000; ++i) st.priori.add(sampler.draw(rng));
    sim.stats = {{{st}}};

    DeState de;
    de.t = 1;
    de.priori = {d};
    const auto rows = compare_de(sim, 0, {de});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].tv < 0.01);
}

TEST_CASE("common-error statistic harness runs deterministically") {
    const auto code = load_code(code_fixture_path("ebch_32_16_8.txt"));
    const auto a = run_nc_experiment(code, 1, 1, {2.0}, 200, 5, 2);
    const auto b = run_nc_experiment(code, 1, 1, {2.0}, 200, 5, 1);
    REQUIRE(a.size() == 1);
    CHECK(a[0].mean_nc == doctest::Approx(b[0].mean_nc));
    CHECK(a[0].samples == 200);
    CHECK(a[0].mean_nc >= 0.0);
}
