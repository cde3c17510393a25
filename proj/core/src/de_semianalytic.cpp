#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nomaosd/de.hpp"
#include "nomaosd/osd.hpp"
#include "nomaosd/sosd.hpp"

namespace nomaosd {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double log_normal_pdf(double x) { return std::log(kInvSqrt2Pi) - 0.5 * x * x; }

double log_normal_sf(double x) {
    // log(1 - Phi(x)), stable across the whole range
    const double sf = 0.5 * std::erfc(x / std::numbers::sqrt2_v<double>);
    if (sf > 1e-300) return std::log(sf);
    // asymptotic tail expansion for extreme x
    return log_normal_pdf(x) - std::log(x);
}

// pdf of the minimum of b iid standard normals
double log_min_pdf(double x, double b) {
    return std::log(b) + log_normal_pdf(x) + (b - 1.0) * log_normal_sf(x);
}

// punctured code used by the reprocessing-phase model
LinearCode make_dual_code(const LinearCode& code) {
    std::vector<double> ref(code.n);
    for (std::size_t i = 0; i < code.n; ++i) ref[i] = static_cast<double>(code.n - i);
    const auto ctx = build_dual_context(ref, code, 0);
    LinearCode dual;
    dual.n = code.n - 1;
    dual.k = code.k - 1;
    dual.generator = ctx.gbar;
    return dual;
}

}  // namespace

SemianalyticDelta::Calibration SemianalyticDelta::calibrate(const GridDensity& priori_single,
                                                            const LinearCode& code,
                                                            std::uint32_t order,
                                                            std::uint64_t seed) const {
    if (order > code.k - 1) throw std::invalid_argument("SemianalyticDelta: order > k-1");
    const LinearCode dual = make_dual_code(code);
    const auto kd = static_cast<std::uint32_t>(dual.k);

    Calibration cal;
    cal.n0 = n0_ ? n0_ : binomial_sum(kd, order);
    cal.n1 = n1_ ? n1_ : binomial_sum(kd, order);

    GridSampler sampler(priori_single);
    Rng rng(derive_seed(seed, 0x5EA1));
    std::uniform_int_distribution<std::uint64_t> pick(0, cal.n0 - 1);

    const std::size_t m_samples = std::max<std::size_t>(samples_, 200);
    constexpr std::size_t kWrongPerSample = 8;

    cal.p_err_count.assign(order + 1, 0.0);
    std::size_t pe_hits = 0;
    double sum_we = 0, sum_we2 = 0;
    double grand_sum = 0, grand_sum2 = 0, ssb_acc = 0;
    std::vector<double> llr(dual.n);
    std::vector<std::uint32_t> err_flips;
    std::vector<double> wrongs(kWrongPerSample);

    for (std::size_t s = 0; s < m_samples; ++s) {
        for (auto& v : llr) v = sampler.draw(rng);
        const OrderedContext ctx = order_and_reduce(llr, dual);

        err_flips.clear();
        for (std::uint32_t i = kd; i-- > 0;)
            if (ctx.y[i]) err_flips.push_back(i);
        std::sort(err_flips.begin(), err_flips.end(), std::greater<>());
        const std::size_t ne = err_flips.size();
        if (ne <= order) cal.p_err_count[ne] += 1.0;
        if (ne <= order && TepEnumerator::rank_of(err_flips, kd) < cal.n0) ++pe_hits;

        double we = 0;
        for (std::size_t i = 0; i < dual.n; ++i)
            if (ctx.y[i]) we += ctx.alpha[i];
        sum_we += we;
        sum_we2 += we * we;

        const auto base = reencode_base_parity(ctx);
        double gsum = 0;
        for (std::size_t t = 0; t < kWrongPerSample; ++t) {
            Tep tep;
            do {
                tep = TepEnumerator::unrank(pick(rng), kd);
            } while (tep.flips == err_flips);
            const double w = reencode_whd(ctx, tep.flips, base);
            wrongs[t] = w;
            gsum += w;
            grand_sum += w;
            grand_sum2 += w * w;
        }
        const double gm = gsum / kWrongPerSample;
        ssb_acc += gm * gm * kWrongPerSample;
    }

    const auto m = static_cast<double>(m_samples);
    for (auto& p : cal.p_err_count) p /= m;
    cal.pe_prefix = static_cast<double>(pe_hits) / m;
    cal.mu1 = sum_we / m;
    cal.var1 = std::max(sum_we2 / m - cal.mu1 * cal.mu1, 1e-12);

    const double nw = m * kWrongPerSample;
    cal.mu2 = grand_sum / nw;
    const double sst = grand_sum2 - grand_sum * grand_sum / nw;
    const double ssb = ssb_acc - grand_sum * grand_sum / nw;
    const double ssw = std::max(sst - ssb, 0.0);
    const double msw = ssw / (nw - m);
    const double msb = ssb / (m - 1);
    const double var_between = std::max((msb - msw) / kWrongPerSample, 0.0);
    cal.var2 = var_between + msw;
    cal.rho = cal.var2 > 0 ? var_between / cal.var2 : 0.0;

    if (!(cal.var2 > 1e-9) || !(cal.mu2 > 0))
        throw std::runtime_error("SemianalyticDelta: degenerate calibration");
    return cal;
}

GridDensity SemianalyticDelta::transform(const GridDensity& priori_single, const LinearCode& code,
                                         std::uint32_t order, std::uint64_t seed) const {
    const Calibration cal = calibrate(priori_single, code, order, seed);
    const double s1 = std::sqrt(cal.var1);
    const double s2 = std::sqrt(cal.var2);
    const double rho = std::clamp(cal.rho, 0.0, 0.999);
    const double sq1mr = std::sqrt(1.0 - rho);
    const double sqr = std::sqrt(rho);

    const double bmax = static_cast<double>(std::max(cal.n0, cal.n1));
    const double dip = std::sqrt(2.0 * std::log(std::max(bmax, 3.0)));
    const double lo = std::min(cal.mu1 - 8.0 * s1, cal.mu2 - (dip + 6.0) * s2);
    const double hi = std::max(cal.mu1 + 8.0 * s1, cal.mu2 + 6.0 * s2);
    const std::uint32_t nv = 4096;
    const GridSpec vgrid{lo, hi, nv};
    const double dv = vgrid.width();

    // z-quadrature for the equicorrelated pool minimum
    const int nz = rho > 1e-9 ? 257 : 1;
    std::vector<double> zs(nz), zw(nz);
    if (nz == 1) {
        zs[0] = 0.0;
        zw[0] = 1.0;
    } else {
        double tot = 0;
        for (int i = 0; i < nz; ++i) {
            zs[i] = -8.0 + 16.0 * i / (nz - 1);
            zw[i] = std::exp(log_normal_pdf(zs[i]));
            tot += zw[i];
        }
        for (auto& w : zw) w /= tot;
    }

    auto f_min_pool = [&](double v, double b) {
        double acc = 0;
        for (int i = 0; i < nz; ++i) {
            const double x = ((v - cal.mu2) / s2 + sqr * zs[i]) / sq1mr;
            const double lp = log_min_pdf(x, b);
            if (lp > -700.0) acc += zw[i] * std::exp(lp);
        }
        return acc / (sq1mr * s2);
    };

    std::vector<double> fe(nv), fm_n0m1(nv), fm_n0(nv), fm_n1(nv);
    for (std::uint32_t i = 0; i < nv; ++i) {
        const double v = vgrid.center(i);
        const double xe = (v - cal.mu1) / s1;
        fe[i] = std::exp(log_normal_pdf(xe)) / s1;
        fm_n0m1[i] = f_min_pool(v, static_cast<double>(cal.n0 - 1));
        fm_n0[i] = cal.n0 == cal.n1 ? 0.0 : f_min_pool(v, static_cast<double>(cal.n0));
        fm_n1[i] = f_min_pool(v, static_cast<double>(cal.n1));
    }
    if (cal.n0 == cal.n1)
        for (std::uint32_t i = 0; i < nv; ++i) fm_n0[i] = fm_n1[i];

    // upper-tail survival including the current bin
    auto survival = [&](const std::vector<double>& f) {
        std::vector<double> s(nv);
        double acc = 0;
        for (std::uint32_t i = nv; i-- > 0;) {
            acc += f[i] * dv;
            s[i] = std::min(acc, 1.0);
        }
        return s;
    };
    const auto sm = survival(fm_n0m1);
    const auto se = survival(fe);

    const double pe = std::clamp(cal.pe_prefix, 0.0, 1.0);
    GridDensity v0(vgrid), v1(vgrid);
    for (std::uint32_t i = 0; i < nv; ++i) {
        v0.mutable_mass()[i] =
            (pe * (fe[i] * sm[i] + fm_n0m1[i] * se[i]) + (1.0 - pe) * fm_n0[i]) * dv;
        v1.mutable_mass()[i] = fm_n1[i] * dv;
    }
    v0.normalize();
    v1.normalize();

    GridDensity d = convolve(v1, mirror(v0));
    d.normalize();
    return regrid(d, out_grid_);
}

}  // namespace nomaosd
