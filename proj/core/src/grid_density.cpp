#include "nomaosd/grid_density.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nomaosd {

namespace {

double gauss_cdf(double x, double mu, double sd) {
    return 0.5 * std::erfc(-(x - mu) / (sd * std::numbers::sqrt2_v<double>));
}

}  // namespace

long GridSpec::bin_of(double x) const {
    if (x < lo || x > hi) return -1;
    if (x == hi) return static_cast<long>(n_bins) - 1;
    auto i = static_cast<long>((x - lo) / width());
    return std::clamp<long>(i, 0, static_cast<long>(n_bins) - 1);
}

GridDensity GridDensity::from_samples(std::span<const double> samples, GridSpec spec) {
    if (samples.empty()) throw std::invalid_argument("from_samples: empty input");
    GridDensity d(spec);
    const double w = 1.0 / static_cast<double>(samples.size());
    for (double x : samples) d.deposit(x, w);
    return d;
}

GridDensity GridDensity::gaussian(double mu, double var, GridSpec spec) {
    if (!(var > 0)) throw std::invalid_argument("gaussian: variance must be positive");
    GridDensity d(spec);
    d.add_gaussian(mu, std::sqrt(var), 1.0);
    d.normalize();
    return d;
}

GridDensity GridDensity::point_mass(double x, GridSpec spec) {
    GridDensity d(spec);
    d.deposit(x, 1.0);
    return d;
}

double GridDensity::total_mass() const {
    double s = 0;
    for (double m : mass_) s += m;
    return s;
}

double GridDensity::mean() const {
    double s = 0, t = 0;
    for (std::uint32_t i = 0; i < spec_.n_bins; ++i) {
        s += mass_[i] * spec_.center(i);
        t += mass_[i];
    }
    return t > 0 ? s / t : 0.0;
}

double GridDensity::variance() const {
    const double m = mean();
    double s = 0, t = 0;
    for (std::uint32_t i = 0; i < spec_.n_bins; ++i) {
        const double d = spec_.center(i) - m;
        s += mass_[i] * d * d;
        t += mass_[i];
    }
    return t > 0 ? s / t : 0.0;
}

void GridDensity::deposit(double x, double w) {
    const long i = spec_.bin_of(x);
    if (i < 0)
        clipped_ += w;
    else
        mass_[static_cast<std::size_t>(i)] += w;
}

void GridDensity::deposit_interval(double a, double b, double w) {
    if (a > b) std::swap(a, b);
    if (b - a < 1e-300) {
        deposit(a, w);  // degenerate interval, including saturation at the edges
        return;
    }
    if (b <= spec_.lo || a >= spec_.hi) {
        clipped_ += w;
        return;
    }
    const double inv_len = 1.0 / (b - a);
    if (a < spec_.lo) {
        clipped_ += w * (spec_.lo - a) * inv_len;
        a = spec_.lo;
    }
    if (b > spec_.hi) {
        clipped_ += w * (b - spec_.hi) * inv_len;
        b = spec_.hi;
    }
    const double bw = spec_.width();
    auto i0 = static_cast<std::size_t>(spec_.bin_of(a));
    auto i1 = static_cast<std::size_t>(spec_.bin_of(b));
    if (i0 == i1) {
        mass_[i0] += w * (b - a) * inv_len;
        return;
    }
    mass_[i0] += w * (spec_.edge(static_cast<std::uint32_t>(i0 + 1)) - a) * inv_len;
    for (std::size_t i = i0 + 1; i < i1; ++i) mass_[i] += w * bw * inv_len;
    mass_[i1] += w * (b - spec_.edge(static_cast<std::uint32_t>(i1))) * inv_len;
}

void GridDensity::add_gaussian(double mu, double sd, double weight) {
    if (!(sd > 0)) {
        deposit(mu, weight);
        return;
    }
    const double span = 8.5 * sd;
    const double bw = spec_.width();
    long i0 = spec_.bin_of(mu - span);
    long i1 = spec_.bin_of(mu + span);
    if (mu - span < spec_.lo) i0 = 0;
    if (mu + span > spec_.hi) i1 = static_cast<long>(spec_.n_bins) - 1;
    if (i1 < 0 || i0 < 0) {
        // entire bulk outside the grid on one side
        if (mu + span <= spec_.lo || mu - span >= spec_.hi) {
            clipped_ += weight;
            return;
        }
        i0 = 0;
        i1 = static_cast<long>(spec_.n_bins) - 1;
    }
    double prev = gauss_cdf(spec_.lo + i0 * bw, mu, sd);
    double placed = 0;
    for (long i = i0; i <= i1; ++i) {
        const double cur = gauss_cdf(spec_.lo + (i + 1) * bw, mu, sd);
        const double m = weight * (cur - prev);
        mass_[static_cast<std::size_t>(i)] += m;
        placed += m;
        prev = cur;
    }
    clipped_ += weight - placed;
}

void GridDensity::scale(double s) {
    for (double& m : mass_) m *= s;
    clipped_ *= s;
}

void GridDensity::normalize() {
    const double t = total_mass();
    if (t <= 0) throw std::runtime_error("normalize: zero in-grid mass");
    for (double& m : mass_) m /= t;
    clipped_ = 0.0;
}

void GridDensity::write_csv(std::ostream& os) const {
    os << "lo,hi,n_bins,clipped_mass\n";
    os.precision(17);
    os << spec_.lo << ',' << spec_.hi << ',' << spec_.n_bins << ',' << clipped_ << '\n';
    for (double m : mass_) os << m << '\n';
}

GridDensity GridDensity::read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("density csv: missing header");
    if (!std::getline(is, line)) throw std::runtime_error("density csv: missing spec row");
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    GridSpec spec;
    double clipped = 0;
    if (!(ss >> spec.lo >> spec.hi >> spec.n_bins >> clipped))
        throw std::runtime_error("density csv: bad spec row");
    GridDensity d(spec);
    d.clipped_ = clipped;
    for (std::uint32_t i = 0; i < spec.n_bins; ++i) {
        if (!std::getline(is, line)) throw std::runtime_error("density csv: truncated");
        d.mass_[i] = std::stod(line);
    }
    return d;
}

namespace {

// FFTW planning is not thread-safe; executions share cached plans per size.
std::mutex fft_mutex;

void fft_convolve(const std::vector<double>& a, const std::vector<double>& b,
                  std::vector<double>& out) {
    const std::size_t need = a.size() + b.size() - 1;
    std::size_t len = 1;
    while (len < need) len <<= 1;

    std::lock_guard<std::mutex> lock(fft_mutex);
    static std::map<std::size_t, std::tuple<fftw_plan, fftw_plan, double*, fftw_complex*>> cache;
    auto it = cache.find(len);
    if (it == cache.end()) {
        double* buf = fftw_alloc_real(len);
        fftw_complex* spec = fftw_alloc_complex(len / 2 + 1);
        fftw_plan fwd = fftw_plan_dft_r2c_1d(static_cast<int>(len), buf, spec, FFTW_ESTIMATE);
        fftw_plan inv = fftw_plan_dft_c2r_1d(static_cast<int>(len), spec, buf, FFTW_ESTIMATE);
        it = cache.emplace(len, std::make_tuple(fwd, inv, buf, spec)).first;
    }
    auto [fwd, inv, buf, spec] = it->second;

    std::vector<double> fa_re(len / 2 + 1), fa_im(len / 2 + 1);
    std::fill(buf, buf + len, 0.0);
    std::copy(a.begin(), a.end(), buf);
    fftw_execute(fwd);
    for (std::size_t i = 0; i < len / 2 + 1; ++i) {
        fa_re[i] = spec[i][0];
        fa_im[i] = spec[i][1];
    }

    std::fill(buf, buf + len, 0.0);
    std::copy(b.begin(), b.end(), buf);
    fftw_execute(fwd);

    for (std::size_t i = 0; i < len / 2 + 1; ++i) {
        const double re = fa_re[i] * spec[i][0] - fa_im[i] * spec[i][1];
        const double im = fa_re[i] * spec[i][1] + fa_im[i] * spec[i][0];
        spec[i][0] = re;
        spec[i][1] = im;
    }
    fftw_execute(inv);
    out.assign(need, 0.0);
    for (std::size_t i = 0; i < need; ++i) out[i] = std::max(0.0, buf[i] / static_cast<double>(len));
}

}  // namespace

GridDensity convolve(const GridDensity& a, const GridDensity& b) {
    const double wa = a.spec().width(), wb = b.spec().width();
    if (std::abs(wa - wb) > 1e-12 * std::max(wa, wb))
        throw std::invalid_argument("convolve: bin widths differ");
    const std::size_t na = a.spec().n_bins, nb = b.spec().n_bins;
    const std::size_t nout = na + nb - 1;

    std::vector<double> out;
    if (std::min(na, nb) <= 512) {
        out.assign(nout, 0.0);
        const auto& ma = a.mass();
        const auto& mb = b.mass();
        for (std::size_t i = 0; i < na; ++i) {
            if (ma[i] == 0.0) continue;
            for (std::size_t j = 0; j < nb; ++j) out[i + j] += ma[i] * mb[j];
        }
    } else {
        fft_convolve(a.mass(), b.mass(), out);
    }

    GridSpec spec{a.spec().lo + b.spec().lo + wa / 2.0,
                  a.spec().lo + b.spec().lo + wa / 2.0 + wa * static_cast<double>(nout),
                  static_cast<std::uint32_t>(nout)};
    GridDensity d(spec);
    double placed = 0;
    for (std::size_t i = 0; i < nout; ++i) placed += out[i];
    d.mutable_mass() = out;
    const double want = a.total_mass() * b.total_mass();
    d.add_clipped(std::max(0.0, want - placed) + a.clipped_mass() + b.clipped_mass());
    return d;
}

GridDensity mirror(const GridDensity& d) {
    GridSpec s = d.spec();
    GridSpec out{-s.hi, -s.lo, s.n_bins};
    GridDensity r(out);
    auto& m = r.mutable_mass();
    for (std::uint32_t i = 0; i < s.n_bins; ++i) m[s.n_bins - 1 - i] = d.mass()[i];
    r.add_clipped(d.clipped_mass());
    return r;
}

GridDensity halfmix(const GridDensity& d) {
    GridDensity neg = regrid(mirror(d), d.spec());
    GridDensity r(d.spec());
    auto& m = r.mutable_mass();
    for (std::uint32_t i = 0; i < d.spec().n_bins; ++i)
        m[i] = 0.5 * (d.mass()[i] + neg.mass()[i]);
    r.add_clipped(0.5 * (d.clipped_mass() + neg.clipped_mass()));
    return r;
}

GridDensity regrid(const GridDensity& d, GridSpec spec) {
    if (spec == d.spec()) return d;
    GridDensity r(spec);
    const GridSpec& s = d.spec();
    for (std::uint32_t i = 0; i < s.n_bins; ++i) {
        const double m = d.mass()[i];
        if (m == 0.0) continue;
        r.deposit_interval(s.edge(i), s.edge(i + 1), m);
    }
    r.add_clipped(d.clipped_mass());
    return r;
}

GridDensity tanh_pushforward(const GridDensity& d, GridSpec mu_spec) {
    GridDensity r(mu_spec);
    const GridSpec& s = d.spec();
    for (std::uint32_t i = 0; i < s.n_bins; ++i) {
        const double m = d.mass()[i];
        if (m == 0.0) continue;
        r.deposit_interval(std::tanh(s.edge(i) / 2.0), std::tanh(s.edge(i + 1) / 2.0), m);
    }
    r.add_clipped(d.clipped_mass());
    return r;
}

GridDensity tanh_pullback(const GridDensity& j, GridSpec llr_spec) {
    GridDensity r(llr_spec);
    const GridSpec& s = j.spec();
    auto inv = [&](double mu) {
        if (mu <= -1.0) return llr_spec.lo;
        if (mu >= 1.0) return llr_spec.hi;
        return std::clamp(2.0 * std::atanh(mu), llr_spec.lo, llr_spec.hi);
    };
    for (std::uint32_t i = 0; i < s.n_bins; ++i) {
        const double m = j.mass()[i];
        if (m == 0.0) continue;
        r.deposit_interval(inv(s.edge(i)), inv(s.edge(i + 1)), m);
    }
    r.add_clipped(j.clipped_mass());
    return r;
}

double ber_of(const GridDensity& d) {
    const GridSpec& s = d.spec();
    if (s.hi <= 0) return d.total_mass();
    if (s.lo >= 0) return 0.0;
    double acc = 0;
    for (std::uint32_t i = 0; i < s.n_bins; ++i) {
        const double e0 = s.edge(i), e1 = s.edge(i + 1);
        if (e1 <= 0)
            acc += d.mass()[i];
        else if (e0 < 0)
            acc += d.mass()[i] * (0.0 - e0) / (e1 - e0);
        else
            break;
    }
    return acc;
}

double residual_variance(const GridDensity& d) {
    double acc = 0, tot = 0;
    for (std::uint32_t i = 0; i < d.spec().n_bins; ++i) {
        const double m = d.mass()[i];
        if (m == 0.0) continue;
        const double c = std::cosh(d.spec().center(i) / 2.0);
        acc += m / (c * c);
        tot += m;
    }
    tot += d.clipped_mass();  // clipped mass sits at large |llr|, contributes ~0
    return tot > 0 ? acc / tot : 1.0;
}

double tv_distance(const GridDensity& a, const GridDensity& b) {
    if (!(a.spec() == b.spec())) throw std::invalid_argument("tv_distance: grid mismatch");
    double s = 0;
    for (std::uint32_t i = 0; i < a.spec().n_bins; ++i)
        s += std::abs(a.mass()[i] - b.mass()[i]);
    s += std::abs(a.clipped_mass() - b.clipped_mass());
    return 0.5 * s;
}

GridSampler::GridSampler(const GridDensity& d) : spec_(d.spec()), cdf_(d.spec().n_bins) {
    double acc = 0;
    for (std::uint32_t i = 0; i < spec_.n_bins; ++i) {
        acc += d.mass()[i];
        cdf_[i] = acc;
    }
    if (acc <= 0) throw std::invalid_argument("GridSampler: empty density");
    for (double& c : cdf_) c /= acc;
}

double GridSampler::draw(Rng& rng) const {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double u = uni(rng);
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    const auto i = static_cast<std::uint32_t>(
        it == cdf_.end() ? cdf_.size() - 1 : static_cast<std::size_t>(it - cdf_.begin()));
    const double lo_cdf = i == 0 ? 0.0 : cdf_[i - 1];
    const double frac = cdf_[i] > lo_cdf ? (u - lo_cdf) / (cdf_[i] - lo_cdf) : 0.5;
    return spec_.edge(i) + frac * spec_.width();
}

}  // namespace nomaosd
