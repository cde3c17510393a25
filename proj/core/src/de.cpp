#include "nomaosd/de.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nomaosd/osd.hpp"
#include "nomaosd/sosd.hpp"

namespace nomaosd {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2_v<double>); }

struct PicGaussian {
    double mean;
    double sd;
};

// Eq. of the PIC output for user u conditioned on symbols x and soft means mu
PicGaussian pic_gaussian(const UserChannel& ch, std::size_t u,
                         const std::vector<double>& x, const std::vector<double>& mu) {
    const std::size_t nu = ch.n_users();
    double phi = ch.h[u] * x[u];
    double res = ch.sigma2;
    for (std::size_t j = 0; j < nu; ++j) {
        if (j == u) continue;
        phi += ch.h[j] * (x[j] - mu[j]);
        res += ch.h[j] * ch.h[j] * (1.0 - mu[j] * mu[j]);
    }
    const double psi = res / ch.h[u];
    return {2.0 * phi / psi, 2.0 * std::sqrt(ch.sigma2) / psi};
}

}  // namespace

std::vector<GridDensity> ds_off_density(const UserChannel& ch, int t, GridSpec grid,
                                        std::uint32_t w_cells, double clip_abort) {
    ch.validate();
    if (t < 1) throw std::invalid_argument("ds_off_density: t must be >= 1");
    const std::size_t nu = ch.n_users();
    if (nu > 16) throw std::invalid_argument("ds_off_density: too many users");

    const double sigma = std::sqrt(ch.sigma2);
    const double wlo = -8.0 * sigma, whi = 8.0 * sigma;
    const double dw = (whi - wlo) / w_cells;

    std::vector<GridDensity> out(nu, GridDensity(grid));
    const double combo_weight = 1.0 / static_cast<double>(1ULL << (nu - 1));

    std::vector<double> x(nu), lam(nu), mu(nu), prev(nu);
    // endpoint values of Lambda_t for all users, filled per combo
    std::vector<std::vector<double>> vals(nu, std::vector<double>(w_cells + 1));

    for (std::uint64_t combo = 0; combo < (1ULL << nu); ++combo) {
        for (std::size_t j = 0; j < nu; ++j) x[j] = (combo >> j) & 1 ? -1.0 : 1.0;
        for (std::uint32_t p = 0; p <= w_cells; ++p) {
            const double w = wlo + p * dw;
            double r = w;
            for (std::size_t j = 0; j < nu; ++j) r += ch.h[j] * x[j];
            std::fill(mu.begin(), mu.end(), 0.0);
            for (int it = 0; it < t; ++it) {
                for (std::size_t u = 0; u < nu; ++u) {
                    double cancel = 0, res = ch.sigma2;
                    for (std::size_t j = 0; j < nu; ++j) {
                        if (j == u) continue;
                        cancel += ch.h[j] * mu[j];
                        res += ch.h[j] * ch.h[j] * (1.0 - mu[j] * mu[j]);
                    }
                    lam[u] = 2.0 * ch.h[u] * (r - cancel) / res;
                }
                for (std::size_t u = 0; u < nu; ++u) mu[u] = std::tanh(lam[u] / 2.0);
            }
            for (std::size_t u = 0; u < nu; ++u) vals[u][p] = lam[u];
        }
        for (std::size_t u = 0; u < nu; ++u) {
            if (x[u] < 0) continue;  // single side: own symbol fixed to +1
            auto& dens = out[u];
            double prev_cdf = 0.0;  // left tail folded into the first cell
            for (std::uint32_t p = 0; p < w_cells; ++p) {
                const double cur_cdf =
                    p + 1 == w_cells ? 1.0 : normal_cdf((wlo + (p + 1) * dw) / sigma);
                const double mass = (cur_cdf - prev_cdf) * combo_weight;
                dens.deposit_interval(vals[u][p], vals[u][p + 1], mass);
                prev_cdf = cur_cdf;
            }
        }
    }
    for (auto& d : out)
        if (d.clipped_mass() > clip_abort)
            throw std::runtime_error("ds_off_density: grid too narrow (clipped mass)");
    return out;
}

namespace {

// mass-and-mean conserving compaction of a mu density into at most max_cells
// (center, weight) pairs
std::vector<std::pair<double, double>> compact_mu(const GridDensity& d, std::size_t max_cells) {
    const double total = d.total_mass();
    std::vector<std::pair<double, double>> cells;
    if (total <= 0) return cells;
    const double target = total / static_cast<double>(max_cells);
    double acc = 0, moment = 0;
    for (std::uint32_t i = 0; i < d.spec().n_bins; ++i) {
        const double m = d.mass()[i];
        if (m == 0.0) continue;
        acc += m;
        moment += m * d.spec().center(i);
        if (acc >= target) {
            cells.emplace_back(moment / acc, acc);
            acc = 0;
            moment = 0;
        }
    }
    if (acc > 0) cells.emplace_back(moment / acc, acc);
    return cells;
}

}  // namespace

GridDensity cn_transform(const std::vector<JPair>& symbol, const UserChannel& ch,
                         std::size_t user, GridSpec grid, std::uint64_t mc_seed) {
    ch.validate();
    const std::size_t nu = ch.n_users();
    if (symbol.size() != nu) throw std::invalid_argument("cn_transform: density count mismatch");
    if (user >= nu) throw std::invalid_argument("cn_transform: user out of range");

    GridDensity out(grid);
    std::vector<std::size_t> itf;
    for (std::size_t j = 0; j < nu; ++j)
        if (j != user) itf.push_back(j);
    const std::size_t p = itf.size();
    const double combo_weight = p == 0 ? 1.0 : 1.0 / static_cast<double>(1ULL << p);

    std::vector<double> x(nu, 1.0), mu(nu, 0.0);

    if (p == 0) {
        const auto g = pic_gaussian(ch, user, x, mu);
        out.add_gaussian(g.mean, g.sd, 1.0);
        return out;
    }

    const std::size_t max_cells = p == 1 ? 8192 : 96;
    const bool monte_carlo = p > 2;

    for (std::uint64_t combo = 0; combo < (1ULL << p); ++combo) {
        for (std::size_t a = 0; a < p; ++a) x[itf[a]] = (combo >> a) & 1 ? -1.0 : 1.0;

        if (!monte_carlo) {
            std::vector<std::vector<std::pair<double, double>>> cells(p);
            for (std::size_t a = 0; a < p; ++a) {
                const auto& d = x[itf[a]] > 0 ? symbol[itf[a]].plus : symbol[itf[a]].minus;
                cells[a] = compact_mu(d, max_cells);
                if (cells[a].empty()) throw std::runtime_error("cn_transform: empty mu density");
            }
            std::vector<std::size_t> idx(p, 0);
            while (true) {
                double weight = combo_weight;
                for (std::size_t a = 0; a < p; ++a) {
                    mu[itf[a]] = cells[a][idx[a]].first;
                    weight *= cells[a][idx[a]].second;
                }
                if (weight > 1e-14) {
                    const auto g = pic_gaussian(ch, user, x, mu);
                    out.add_gaussian(g.mean, g.sd, weight);
                } else {
                    out.add_clipped(weight);
                }
                std::size_t a = 0;
                while (a < p && ++idx[a] == cells[a].size()) idx[a++] = 0;
                if (a == p) break;
            }
        } else {
            const std::size_t draws = 200000;
            Rng rng(derive_seed(mc_seed, combo));
            std::vector<GridSampler> samplers;
            samplers.reserve(p);
            for (std::size_t a = 0; a < p; ++a)
                samplers.emplace_back(x[itf[a]] > 0 ? symbol[itf[a]].plus : symbol[itf[a]].minus);
            const double w_each = combo_weight / static_cast<double>(draws);
            for (std::size_t s = 0; s < draws; ++s) {
                for (std::size_t a = 0; a < p; ++a) mu[itf[a]] = samplers[a].draw(rng);
                const auto g = pic_gaussian(ch, user, x, mu);
                out.add_gaussian(g.mean, g.sd, w_each);
            }
        }
    }
    return out;
}

GridDensity dn_transform(const GridDensity& priori_single, const LinearCode& code,
                         std::uint32_t order, const DeltaBackend& backend, std::uint64_t seed) {
    return backend.transform(priori_single, code, order, seed);
}

GridDensity EmpiricalDelta::transform(const GridDensity& priori_single, const LinearCode& code,
                                      std::uint32_t order, std::uint64_t seed) const {
    GridSampler sampler(priori_single);
    Rng rng(derive_seed(seed, 0xD301));
    GridDensity out(out_grid_);
    const double w = 1.0 / (static_cast<double>(samples_) * static_cast<double>(code.n));
    std::vector<double> llr(code.n);
    for (std::size_t s = 0; s < samples_; ++s) {
        for (auto& v : llr) v = sampler.draw(rng);
        const auto res = sosd_extrinsic(llr, code, order);
        for (double d : res.extrinsic) out.deposit(d, w);
    }
    return out;
}

GridDensity posterior_density(const GridDensity& priori_single,
                              const GridDensity& extrinsic_single) {
    GridDensity conv = convolve(regrid(priori_single, extrinsic_single.spec()), extrinsic_single);
    return regrid(conv, extrinsic_single.spec());
}

JPair en_transform(const GridDensity& extrinsic_plus, const GridDensity& extrinsic_minus,
                   GridSpec mu_spec) {
    return {tanh_pushforward(extrinsic_plus, mu_spec), tanh_pushforward(extrinsic_minus, mu_spec)};
}

std::unique_ptr<DeltaBackend> make_delta_backend(std::string_view name, std::size_t samples,
                                                 GridSpec out_grid) {
    if (name == "empirical") return std::make_unique<EmpiricalDelta>(samples, out_grid);
    if (name == "semianalytic") return std::make_unique<SemianalyticDelta>(samples, out_grid);
    if (name == "identity") return std::make_unique<IdentityDelta>();
    throw std::invalid_argument("unknown delta backend: " + std::string(name));
}

std::vector<DeState> de_run(const UserChannel& ch, const LinearCode& code, std::uint32_t order,
                            int t_off, int t_max, const DeltaBackend& backend,
                            const DeOptions& opt) {
    ch.validate();
    if (t_off < 0) throw std::invalid_argument("de_run: t_off must be >= 0");
    if (t_max < 1 || t_max < t_off + 1)
        throw std::invalid_argument("de_run: need t_max >= t_off + 1");

    const std::size_t nu = ch.n_users();
    std::vector<DeState> states;
    states.reserve(static_cast<std::size_t>(t_max));

    auto check_clip = [&](const GridDensity& d, const char* what) {
        if (d.clipped_mass() > opt.clip_abort)
            throw std::runtime_error(std::string("de_run: clipped mass in ") + what);
    };

    for (int t = 1; t <= t_max; ++t) {
        DeState st;
        st.t = t;
        st.decoding = t > t_off;
        if (t <= t_off + 1) {
            st.priori = ds_off_density(ch, t, opt.llr_grid, opt.w_cells, opt.clip_abort);
        } else {
            const DeState& prev = states.back();
            st.symbol.reserve(nu);
            for (std::size_t u = 0; u < nu; ++u) {
                const GridDensity& d_plus = prev.extrinsic[u];
                st.symbol.push_back(
                    en_transform(d_plus, regrid(mirror(d_plus), d_plus.spec()), opt.mu_grid));
            }
            st.priori.reserve(nu);
            for (std::size_t u = 0; u < nu; ++u) {
                auto L = cn_transform(st.symbol, ch, u, opt.llr_grid,
                                      derive_seed(opt.seed, 0xC4, static_cast<std::uint64_t>(t)));
                check_clip(L, "cancellation transform");
                L.normalize();
                st.priori.push_back(std::move(L));
            }
        }
        for (auto& d : st.priori) {
            check_clip(d, "priori density");
            d.normalize();
        }
        if (st.decoding) {
            st.extrinsic.reserve(nu);
            for (std::size_t u = 0; u < nu; ++u) {
                auto D = dn_transform(st.priori[u], code, order, backend,
                                      derive_seed(opt.seed, static_cast<std::uint64_t>(t), u));
                check_clip(D, "decoder transform");
                D.normalize();
                st.extrinsic.push_back(std::move(D));
            }
        }
        states.push_back(std::move(st));
    }
    return states;
}

}  // namespace nomaosd
