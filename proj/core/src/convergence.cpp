#include "nomaosd/convergence.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

namespace nomaosd {

double g_d(double xi, const LinearCode& code, std::uint32_t order, const DeltaBackend& backend,
           std::uint64_t seed, GridSpec grid) {
    if (!(xi > 0)) throw std::invalid_argument("g_d: xi must be positive");
    const GridDensity priori = GridDensity::gaussian(2.0 / xi, 4.0 / xi, grid);
    return residual_variance(backend.transform(priori, code, order, seed));
}

GdTable::GdTable(const LinearCode& code, std::uint32_t order, const DeltaBackend& backend,
                 std::uint64_t seed, Options opt, GridSpec grid) {
    if (opt.knots < 4) throw std::invalid_argument("GdTable: need at least 4 knots");
    xi_.resize(opt.knots);
    g_.assign(opt.knots, 0.0);
    const double llo = std::log(opt.xi_lo), lhi = std::log(opt.xi_hi);
    for (std::size_t i = 0; i < opt.knots; ++i)
        xi_[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) /
                                    static_cast<double>(opt.knots - 1));

    const int nthreads = std::max(1, opt.threads);
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < opt.knots; i = next.fetch_add(1))
            g_[i] = g_d(xi_[i], code, order, backend, derive_seed(seed, i), grid);
    };
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();

    // backend noise occasionally breaks monotonicity; resample, then repair
    for (std::size_t i = 1; i < opt.knots; ++i) {
        if (g_[i] < g_[i - 1]) {
            g_[i] = g_d(xi_[i], code, order, backend, derive_seed(seed, i, 7), grid);
            if (g_[i] < g_[i - 1]) {
                g_[i] = g_[i - 1];
                repaired_ = true;
            }
        }
    }
    build_slopes();
}

void GdTable::build_slopes() {
    const std::size_t n = xi_.size();
    lx_.resize(n);
    for (std::size_t i = 0; i < n; ++i) lx_[i] = std::log(xi_[i]);
    slope_.assign(n, 0.0);
    std::vector<double> d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (g_[i + 1] - g_[i]) / (lx_[i + 1] - lx_[i]);
    slope_[0] = d[0];
    slope_[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0) {
            slope_[i] = 0;
        } else {
            const double h0 = lx_[i] - lx_[i - 1], h1 = lx_[i + 1] - lx_[i];
            const double w1 = 2 * h1 + h0, w2 = h1 + 2 * h0;
            slope_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
}

double GdTable::eval(double xi) const {
    xi = std::clamp(xi, xi_.front(), xi_.back());
    const double x = std::log(xi);
    const auto it = std::upper_bound(lx_.begin(), lx_.end(), x);
    const std::size_t i =
        std::clamp<std::size_t>(static_cast<std::size_t>(it - lx_.begin()), 1, lx_.size() - 1) - 1;
    const double h = lx_[i + 1] - lx_[i];
    const double s = (x - lx_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * g_[i] + h10 * h * slope_[i] + h01 * g_[i + 1] + h11 * h * slope_[i + 1];
}

double GdTable::inverse(double g) const {
    if (g <= g_.front()) return xi_.front();
    if (g >= g_.back()) return xi_.back();
    double lo = xi_.front(), hi = xi_.back();
    for (int it = 0; it < 80; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (eval(mid) < g)
            lo = mid;
        else
            hi = mid;
    }
    return std::sqrt(lo * hi);
}

namespace {

GridDensity converged_gaussian(double xi, GridSpec grid) {
    return GridDensity::gaussian(2.0 / xi, 4.0 / xi, grid);
}

// all sign-change roots of f on a log-spaced scan of [lo, hi]
std::vector<double> scan_roots(double lo, double hi, int points,
                               const std::function<double(double)>& f) {
    std::vector<double> roots;
    double xprev = lo, fprev = f(lo);
    for (int i = 1; i <= points; ++i) {
        const double x = lo * std::pow(hi / lo, static_cast<double>(i) / points);
        const double fx = f(x);
        if (fprev == 0.0) roots.push_back(xprev);
        if (fprev * fx < 0) {
            double a = xprev, b = x;
            for (int it = 0; it < 100; ++it) {
                const double m = 0.5 * (a + b);
                if (f(a) * f(m) <= 0)
                    b = m;
                else
                    a = m;
            }
            roots.push_back(0.5 * (a + b));
        }
        xprev = x;
        fprev = fx;
    }
    return roots;
}

}  // namespace

ConvergencePoint two_user_fixed_point(const UserChannel& ch, const GdTable& table, double tol,
                                      GridSpec grid) {
    ch.validate();
    if (ch.n_users() != 2) throw std::invalid_argument("two_user_fixed_point: need n_u = 2");
    const double h1 = ch.h[0], h2 = ch.h[1], s2 = ch.sigma2;

    // user-2 balance as a function of xi1, and the inverse of user-1's
    const auto g_plus = [&](double xi1) {
        return (h1 / h2) * (h1 / h2) * table.eval(xi1) + s2 / (h2 * h2);
    };
    const auto g_minus = [&](double xi1) {
        return table.inverse((h1 / h2) * (h1 / h2) * xi1 - s2 / (h2 * h2));
    };

    const double lo = 0.8 * s2 / (h1 * h1);
    const double hi = 1.2 * (h2 * h2 + s2) / (h1 * h1);
    auto roots = scan_roots(lo, hi, 4000, [&](double x) { return g_plus(x) - g_minus(x); });
    if (roots.empty())
        throw std::runtime_error("two_user_fixed_point: no intersection in the search window");

    const double xi1 = roots.back();
    const double xi2 = g_plus(xi1);
    const double res1 = std::abs(xi1 - ((h2 / h1) * (h2 / h1) * table.eval(xi2) + s2 / (h1 * h1)));
    const double res2 = std::abs(xi2 - g_plus(xi1));
    if (res1 > tol || res2 > tol)
        throw std::runtime_error("two_user_fixed_point: residual above tolerance");

    ConvergencePoint cp;
    cp.xi_star = {xi1, xi2};
    cp.converged_density = {converged_gaussian(xi1, grid), converged_gaussian(xi2, grid)};
    cp.multiplicity = static_cast<int>(roots.size());
    cp.intersections = std::move(roots);
    return cp;
}

ConvergencePoint equal_power_fixed_point(std::size_t n_users, double snr_db, const GdTable& table,
                                         double tol, GridSpec grid) {
    if (n_users < 2) throw std::invalid_argument("equal_power_fixed_point: need n_u >= 2");
    const double snr = std::pow(10.0, snr_db / 10.0);
    const double sigma2 = static_cast<double>(n_users) / snr;
    const double nm1 = static_cast<double>(n_users - 1);

    const auto f = [&](double xi) { return table.eval(xi) - (xi - sigma2) / nm1; };
    const double lo = std::max(0.5 * sigma2, table.xi_lo());
    const double hi = std::min(1.2 * (nm1 + sigma2), table.xi_hi());
    auto roots = scan_roots(lo, hi, 4000, f);
    if (roots.empty())
        throw std::runtime_error("equal_power_fixed_point: no intersection in the search window");

    const double xi = roots.back();
    if (std::abs(xi - nm1 * table.eval(xi) - sigma2) > tol)
        throw std::runtime_error("equal_power_fixed_point: residual above tolerance");

    ConvergencePoint cp;
    cp.xi_star.assign(n_users, xi);
    cp.converged_density.assign(n_users, converged_gaussian(xi, grid));
    cp.multiplicity = static_cast<int>(roots.size());
    cp.intersections = std::move(roots);
    return cp;
}

double equal_power_damped_iteration(std::size_t n_users, double snr_db, const GdTable& table,
                                    double damping, int iters) {
    const double snr = std::pow(10.0, snr_db / 10.0);
    const double sigma2 = static_cast<double>(n_users) / snr;
    const double nm1 = static_cast<double>(n_users - 1);
    double xi = nm1 + sigma2;  // no cancellation yet: full interference power
    for (int i = 0; i < iters; ++i) {
        const double target = nm1 * table.eval(xi) + sigma2;
        xi = (1.0 - damping) * xi + damping * target;
    }
    return xi;
}

std::vector<double> fixed_point_residual(const std::vector<double>& xi, const UserChannel& ch,
                                         const GdTable& table) {
    ch.validate();
    if (xi.size() != ch.n_users()) throw std::invalid_argument("fixed_point_residual: size");
    std::vector<double> res(xi.size());
    for (std::size_t u = 0; u < xi.size(); ++u) {
        double acc = ch.sigma2;
        for (std::size_t j = 0; j < xi.size(); ++j)
            if (j != u) acc += ch.h[j] * ch.h[j] * table.eval(xi[j]);
        res[u] = xi[u] - acc / (ch.h[u] * ch.h[u]);
    }
    return res;
}

}  // namespace nomaosd
