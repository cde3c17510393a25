#include "nomaosd/sim_harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "nomaosd/sosd.hpp"

namespace nomaosd {

void ExperimentSpec::validate() const {
    cfg.validate();
    if (snr_points.empty()) throw std::invalid_argument("ExperimentSpec: no SNR points");
    if (n_blocks < 1) throw std::invalid_argument("ExperimentSpec: n_blocks < 1");
    if (threads < 1) throw std::invalid_argument("ExperimentSpec: threads < 1");
}

void CountHist::add(double x) {
    const long i = grid.bin_of(x);
    if (i < 0)
        ++clipped;
    else
        ++counts[static_cast<std::size_t>(i)];
}

void CountHist::merge(const CountHist& o) {
    if (counts.size() != o.counts.size()) throw std::invalid_argument("CountHist: grid mismatch");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
    clipped += o.clipped;
}

std::uint64_t CountHist::total() const {
    std::uint64_t t = clipped;
    for (auto c : counts) t += c;
    return t;
}

GridDensity CountHist::to_density() const {
    GridDensity d(grid);
    const std::uint64_t t = total();
    if (t == 0) return d;
    const double inv = 1.0 / static_cast<double>(t);
    for (std::size_t i = 0; i < counts.size(); ++i)
        d.mutable_mass()[i] = static_cast<double>(counts[i]) * inv;
    d.add_clipped(static_cast<double>(clipped) * inv);
    return d;
}

double IterUserStats::ber_ci95() const {
    if (bits == 0) return 0;
    const double p = ber();
    return 1.96 * std::sqrt(std::max(p * (1 - p), 0.0) / static_cast<double>(bits));
}

void IterUserStats::merge(const IterUserStats& o) {
    bit_errors += o.bit_errors;
    bits += o.bits;
    block_errors += o.block_errors;
    blocks += o.blocks;
    priori.merge(o.priori);
    extrinsic.merge(o.extrinsic);
    posterior.merge(o.posterior);
}

namespace {

struct SnrAccumulator {
    std::vector<std::vector<IterUserStats>> stats;  // [user][t-1]
    std::uint64_t converged_blocks = 0;
    std::uint64_t converged_sum = 0;
    std::size_t completed = 0;

    SnrAccumulator(std::size_t nu, int t_max, const GridSpec& grid) {
        stats.assign(nu, {});
        for (auto& v : stats)
            v.assign(static_cast<std::size_t>(t_max),
                     IterUserStats{0, 0, 0, 0, CountHist(grid), CountHist(grid), CountHist(grid)});
    }
    void merge(const SnrAccumulator& o) {
        for (std::size_t u = 0; u < stats.size(); ++u)
            for (std::size_t t = 0; t < stats[u].size(); ++t) stats[u][t].merge(o.stats[u][t]);
        converged_blocks += o.converged_blocks;
        converged_sum += o.converged_sum;
        completed += o.completed;
    }
};

void simulate_block(const ExperimentSpec& spec, const JdConfig& cfg, std::uint64_t block_seed,
                    SnrAccumulator& acc) {
    const std::size_t nu = cfg.ch.n_users();
    const std::size_t n = cfg.code->n, k = cfg.code->k;
    Rng rng(block_seed);

    std::vector<BitVec> codewords(nu);
    std::uniform_int_distribution<int> bit(0, 1);
    for (std::size_t u = 0; u < nu; ++u) {
        if (spec.all_zero) {
            codewords[u] = BitVec(n, 0);
        } else {
            BitVec info(k);
            for (auto& b : info) b = static_cast<std::uint8_t>(bit(rng));
            codewords[u] = encode(info, *cfg.code);
        }
    }
    const ReceivedBlock block = transmit(codewords, cfg.ch, rng);
    const JdTrace trace = jd_decode(block, cfg);

    const int t_off = cfg.effective_t_off();
    for (std::size_t ti = 0; ti < trace.iterations.size(); ++ti) {
        const auto& iter = trace.iterations[ti];
        for (std::size_t u = 0; u < nu; ++u) {
            auto& st = acc.stats[u][ti];
            const auto& uit = iter.user[u];
            std::uint64_t errs = 0;
            for (std::size_t i = 0; i < k; ++i)
                if (uit.decision[i] != codewords[u][i]) ++errs;
            st.bit_errors += errs;
            st.bits += k;
            st.block_errors += errs > 0 ? 1 : 0;
            st.blocks += 1;
            if (spec.collect.densities) {
                const bool decoding = static_cast<int>(ti) + 1 > t_off;
                for (std::size_t i = 0; i < n; ++i) {
                    const double s = codewords[u][i] ? -1.0 : 1.0;
                    st.priori.add(s * uit.llr[i]);
                    if (decoding) {
                        st.extrinsic.add(s * uit.extrinsic[i]);
                        st.posterior.add(s * (uit.extrinsic[i] + uit.llr[i]));
                    }
                }
            }
        }
    }
    if (trace.converged_at) {
        ++acc.converged_blocks;
        acc.converged_sum += static_cast<std::uint64_t>(*trace.converged_at);
    }
    ++acc.completed;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const auto start = std::chrono::steady_clock::now();

    ExperimentResult res;
    res.snr_points = spec.snr_points;
    res.n_users = spec.cfg.ch.n_users();
    res.t_max = spec.cfg.t_max;
    std::uint64_t conv_sum = 0;

    for (std::size_t si = 0; si < spec.snr_points.size(); ++si) {
        JdConfig cfg = spec.cfg;
        cfg.ch = UserChannel::from_snr_db(spec.cfg.ch.h, spec.snr_points[si]);
        cfg.run_all_iterations = true;  // per-iteration curves need every t
        cfg.validate();

        const std::uint64_t snr_seed = derive_seed(spec.seed, si);
        const int nthreads = spec.threads;
        std::vector<SnrAccumulator> parts(
            static_cast<std::size_t>(nthreads),
            SnrAccumulator(res.n_users, cfg.t_max, spec.density_grid));
        std::atomic<std::size_t> next{0};
        auto work = [&](std::size_t w) {
            for (std::size_t b = next.fetch_add(1); b < spec.n_blocks; b = next.fetch_add(1))
                simulate_block(spec, cfg, derive_seed(snr_seed, b), parts[w]);
        };
        std::vector<std::thread> pool;
        for (int t = 1; t < nthreads; ++t) pool.emplace_back(work, static_cast<std::size_t>(t));
        work(0);
        for (auto& th : pool) th.join();
        for (std::size_t w = 1; w < parts.size(); ++w) parts[0].merge(parts[w]);

        res.stats.push_back(std::move(parts[0].stats));
        res.converged_blocks += parts[0].converged_blocks;
        conv_sum += parts[0].converged_sum;
        res.completed_blocks += parts[0].completed;
    }
    if (res.converged_blocks)
        res.mean_converged_at =
            static_cast<double>(conv_sum) / static_cast<double>(res.converged_blocks);
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

std::vector<NcStat> run_nc_experiment(const LinearCode& code, std::uint32_t m0, std::uint32_t m1,
                                      const std::vector<double>& snr_points_db,
                                      std::size_t samples, std::uint64_t seed, int threads) {
    const auto params = dual_order_pair(static_cast<std::uint32_t>(code.k), m0, m1);
    std::vector<NcStat> out;
    for (std::size_t si = 0; si < snr_points_db.size(); ++si) {
        const double sigma2 = std::pow(10.0, -snr_points_db[si] / 10.0);
        std::vector<double> sums(static_cast<std::size_t>(threads), 0.0);
        std::atomic<std::size_t> next{0};
        auto work = [&](std::size_t w) {
            std::vector<double> llr(code.n);
            for (std::size_t s = next.fetch_add(1); s < samples; s = next.fetch_add(1)) {
                Rng rng(derive_seed(seed, si, s));
                std::normal_distribution<double> noise(0.0, std::sqrt(sigma2));
                for (auto& v : llr) v = 2.0 * (1.0 + noise(rng)) / sigma2;
                std::uniform_int_distribution<std::uint32_t> pos(0, static_cast<std::uint32_t>(code.n - 1));
                const auto ctx = build_dual_context(llr, code, pos(rng));
                sums[w] += dual_osd_sample(ctx, params.n0, params.n1).n_c;
            }
        };
        std::vector<std::thread> pool;
        for (int t = 1; t < threads; ++t) pool.emplace_back(work, static_cast<std::size_t>(t));
        work(0);
        for (auto& th : pool) th.join();
        double total = 0;
        for (double s : sums) total += s;
        out.push_back({snr_points_db[si], total / static_cast<double>(samples), samples});
    }
    return out;
}

std::vector<TvRow> compare_de(const ExperimentResult& sim, std::size_t snr_idx,
                              const std::vector<DeState>& de_states) {
    std::vector<TvRow> rows;
    for (const auto& st : de_states) {
        const auto t = static_cast<std::size_t>(st.t);
        if (t > sim.stats[snr_idx][0].size()) continue;
        for (std::size_t u = 0; u < sim.n_users; ++u) {
            const auto& stats = sim.stats[snr_idx][u][t - 1];
            if (stats.priori.total() == 0) continue;
            const GridSpec grid = stats.priori.grid;
            rows.push_back({u, st.t, "priori",
                            tv_distance(stats.priori.to_density(), regrid(st.priori[u], grid))});
            if (!st.extrinsic.empty() && stats.extrinsic.total() > 0)
                rows.push_back({u, st.t, "extrinsic",
                                tv_distance(stats.extrinsic.to_density(),
                                            regrid(st.extrinsic[u], grid))});
        }
    }
    return rows;
}

}  // namespace nomaosd
