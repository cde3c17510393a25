#include "nomaosd/joint_decoder.hpp"

#include <cmath>
#include <stdexcept>

#include "nomaosd/sosd.hpp"

namespace nomaosd {

void JdConfig::validate() const {
    if (!code) throw std::invalid_argument("JdConfig: no code");
    ch.validate();
    if (t_max < 1) throw std::invalid_argument("JdConfig: t_max < 1");
    if (effective_t_off() > t_max) throw std::invalid_argument("JdConfig: t_off > t_max");
    if (beta < 0 || beta > 1 || gamma < 0 || gamma > 1)
        throw std::invalid_argument("JdConfig: combiner weights must be in [0,1]");
    if (order > code->k) throw std::invalid_argument("JdConfig: order > k");
}

std::vector<std::vector<double>> pic_step(std::span<const double> r,
                                          const std::vector<std::vector<double>>& eps_prev,
                                          const UserChannel& ch) {
    const std::size_t nu = ch.n_users();
    if (eps_prev.size() != nu) throw std::invalid_argument("pic_step: feedback count mismatch");
    const std::size_t n = r.size();
    for (const auto& e : eps_prev)
        if (e.size() != n) throw std::invalid_argument("pic_step: feedback length mismatch");

    // soft symbol means and variances; infinite feedback saturates cleanly
    std::vector<std::vector<double>> mu(nu, std::vector<double>(n));
    std::vector<std::vector<double>> var(nu, std::vector<double>(n));
    for (std::size_t u = 0; u < nu; ++u) {
        for (std::size_t i = 0; i < n; ++i) {
            const double m = std::tanh(eps_prev[u][i] / 2.0);
            mu[u][i] = m;
            var[u][i] = 1.0 - m * m;
        }
    }

    std::vector<std::vector<double>> llr(nu, std::vector<double>(n));
    for (std::size_t u = 0; u < nu; ++u) {
        const double hu = ch.h[u];
        for (std::size_t i = 0; i < n; ++i) {
            double cancel = 0, residual = 0;
            for (std::size_t j = 0; j < nu; ++j) {
                if (j == u) continue;
                cancel += ch.h[j] * mu[j][i];
                residual += ch.h[j] * ch.h[j] * var[j][i];
            }
            llr[u][i] = 2.0 * hu * (r[i] - cancel) / (residual + ch.sigma2);
        }
    }
    return llr;
}

namespace {

constexpr double kTanhClamp = 1.0 - 1e-12;

std::vector<double> tanh_blend(std::span<const double> a, std::span<const double> b, double w) {
    if (a.size() != b.size()) throw std::invalid_argument("combiner: length mismatch");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        double t = w * std::tanh(a[i] / 2.0) + (1.0 - w) * std::tanh(b[i] / 2.0);
        t = std::clamp(t, -kTanhClamp, kTanhClamp);
        out[i] = 2.0 * std::atanh(t);
    }
    return out;
}

}  // namespace

std::vector<double> dsc_combine(std::span<const double> cur, std::span<const double> prev,
                                double beta) {
    if (beta < 0 || beta > 1) throw std::invalid_argument("dsc_combine: beta out of range");
    if (beta == 1.0) return {cur.begin(), cur.end()};
    if (beta == 0.0) return {prev.begin(), prev.end()};
    return tanh_blend(cur, prev, beta);
}

std::vector<double> dc_combine(std::span<const double> extrinsic, std::span<const double> llr,
                               double gamma) {
    if (gamma < 0 || gamma > 1) throw std::invalid_argument("dc_combine: gamma out of range");
    if (gamma == 1.0) return {extrinsic.begin(), extrinsic.end()};
    if (gamma == 0.0) return {llr.begin(), llr.end()};
    return tanh_blend(extrinsic, llr, gamma);
}

JdTrace jd_decode(const ReceivedBlock& block, const JdConfig& cfg) {
    cfg.validate();
    const std::size_t nu = cfg.ch.n_users();
    const std::size_t n = cfg.code->n;
    if (block.r.size() != n) throw std::invalid_argument("jd_decode: block length mismatch");
    if (block.interleavers.size() != nu) throw std::invalid_argument("jd_decode: interleaver count");

    const int t_off = cfg.effective_t_off();
    JdTrace trace;
    std::vector<std::vector<double>> eps(nu, std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> llr_prev;  // previous PIC output (channel order)

    for (int t = 1; t <= cfg.t_max; ++t) {
        auto llr_ch = pic_step(block.r, eps, cfg.ch);
        if (cfg.beta < 1.0 && !llr_prev.empty())
            for (std::size_t u = 0; u < nu; ++u)
                llr_ch[u] = dsc_combine(llr_ch[u], llr_prev[u], cfg.beta);
        llr_prev = llr_ch;

        JdIteration iter;
        iter.user.resize(nu);
        for (std::size_t u = 0; u < nu; ++u) {
            const auto& pi = block.interleavers[u];
            std::vector<double> llr_code(n);
            for (std::size_t i = 0; i < n; ++i) llr_code[pi[i]] = llr_ch[u][i];

            auto& uit = iter.user[u];
            if (t <= t_off) {
                uit.decision.resize(n);
                for (std::size_t i = 0; i < n; ++i) uit.decision[i] = llr_code[i] < 0 ? 1 : 0;
                uit.feedback = llr_ch[u];
                eps[u] = llr_ch[u];
            } else {
                auto sosd = sosd_extrinsic(llr_code, *cfg.code, cfg.order);
                std::vector<double> delta = cfg.gamma < 1.0
                                                ? dc_combine(sosd.extrinsic, llr_code, cfg.gamma)
                                                : std::move(sosd.extrinsic);
                uit.decision.resize(n);
                for (std::size_t i = 0; i < n; ++i)
                    uit.decision[i] = delta[i] + llr_code[i] < 0 ? 1 : 0;
                std::vector<double> eps_ch(n);
                for (std::size_t i = 0; i < n; ++i) eps_ch[i] = delta[pi[i]];
                uit.extrinsic = std::move(delta);
                uit.feedback = eps_ch;
                eps[u] = std::move(eps_ch);
            }
            uit.llr = std::move(llr_code);
        }
        trace.iterations.push_back(std::move(iter));
        if (t > t_off) trace.decoded = true;

        // convergence is only meaningful once decoding has engaged
        if (t > t_off && t >= 2 && !trace.converged_at) {
            bool same = true;
            const auto& prev = trace.iterations[static_cast<std::size_t>(t) - 2];
            for (std::size_t u = 0; u < nu && same; ++u)
                same = prev.user[u].decision == trace.iterations.back().user[u].decision;
            if (same) {
                trace.converged_at = t;
                if (!cfg.run_all_iterations) break;
            }
        }
    }
    return trace;
}

}  // namespace nomaosd
