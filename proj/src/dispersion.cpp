#include "surfkern/dispersion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "surfkern/errors.hpp"

namespace surfkern {

std::string_view to_string(WaveType wave) {
    return wave == WaveType::rayleigh ? "rayleigh" : "love";
}

WaveType wave_type_from_string(std::string_view text) {
    if (text == "rayleigh") return WaveType::rayleigh;
    if (text == "love") return WaveType::love;
    throw ConfigError("unknown wave type '" + std::string(text) + "'");
}

PeriodGrid::PeriodGrid(std::vector<double> periods) : periods_(std::move(periods)) {
    if (periods_.empty()) {
        throw DomainError("period grid is empty");
    }
    for (std::size_t i = 0; i < periods_.size(); ++i) {
        if (!(periods_[i] >= kMinPeriod && periods_[i] <= kMaxPeriod)) {
            throw DomainError("period " + std::to_string(periods_[i]) + " s outside [2, 60]");
        }
        if (i > 0 && !(periods_[i] > periods_[i - 1])) {
            throw DomainError("periods must be strictly increasing");
        }
    }
}

PeriodGrid log_period_grid(double lo_period, double hi_period, std::size_t count) {
    if (count < 2) throw DomainError("a period grid needs at least two periods");
    std::vector<double> p(count);
    const double lo = std::log(lo_period);
    const double hi = std::log(hi_period);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    p.front() = lo_period;
    p.back() = hi_period;
    return PeriodGrid(std::move(p));
}

PeriodGrid standard_period_grid() {
    return log_period_grid(kMinPeriod, kMaxPeriod, kStandardPeriodCount);
}

void DispersionCurve::validate() const {
    if (phase_velocity.size() != periods.size() || mask.size() != periods.size()) {
        throw ShapeError("dispersion curve arrays differ in length");
    }
    for (std::size_t i = 0; i < periods.size(); ++i) {
        if (mask[i] && !(phase_velocity[i] > 0.5 && phase_velocity[i] < 8.0)) {
            throw DomainError("observed phase velocity outside (0.5, 8.0) km/s");
        }
    }
}

namespace {

// Flattened layer stack with the half-space as the last entry.
struct Medium {
    std::vector<double> h, vp, vs, rho;
    std::size_t n = 0;  // entries including the half-space

    explicit Medium(const LayeredModel& m) {
        n = m.layer_count() + 1;
        h.resize(n);
        vp.resize(n);
        vs.resize(n);
        rho.resize(n);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = m.grid().thickness(i);
            vs[i] = m.vs(i);
        }
        h[n - 1] = 0.0;
        vs[n - 1] = m.halfspace_vs();
        for (std::size_t i = 0; i < n; ++i) {
            const auto ep = derive_vp_density(vs[i]);
            vp[i] = ep.vp;
            rho[i] = ep.rho;
        }
    }

    void check_singular(double c, bool include_vp) const {
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(c - vs[i]) < 1e-9 || (include_vp && std::abs(c - vp[i]) < 1e-9)) {
                throw EvaluationSingularity("trial phase velocity coincides with a layer velocity");
            }
        }
    }

    double min_vs() const { return *std::min_element(vs.begin(), vs.end()); }
};

void check_arguments(double period, double c) {
    if (!(period > 0.0) || !(c > 0.0)) {
        throw DomainError("period and phase velocity must be positive");
    }
}

// Exponentially scaled layer terms. Oscillatory terms are exact; evanescent
// cosh/sinh carry a factor exp(-p), and the common factor exp(-(p + q)) is
// dropped from the layer matrix since only the sign of the determinant matters.
struct LayerTerms {
    double w, cosp, a0, cpcq, cpy, cpz, cqw, cqx, xy, xz, wy, wz;
};

LayerTerms layer_terms(double p, double q, double ra, double rb, double wvno, double xka,
                       double xkb, double depth) {
    double pex = 0.0, sex = 0.0;
    double cosp, w, x;
    if (wvno < xka) {
        const double sinp = std::sin(p);
        w = sinp / ra;
        x = -ra * sinp;
        cosp = std::cos(p);
    } else if (wvno == xka) {
        cosp = 1.0;
        w = depth;
        x = 0.0;
    } else {
        pex = p;
        const double fac = p < 16.0 ? std::exp(-2.0 * p) : 0.0;
        cosp = (1.0 + fac) * 0.5;
        const double sinp = (1.0 - fac) * 0.5;
        w = sinp / ra;
        x = ra * sinp;
    }
    double cosq, y, z;
    if (wvno < xkb) {
        const double sinq = std::sin(q);
        y = sinq / rb;
        z = -rb * sinq;
        cosq = std::cos(q);
    } else if (wvno == xkb) {
        cosq = 1.0;
        y = depth;
        z = 0.0;
    } else {
        sex = q;
        const double fac = q < 16.0 ? std::exp(-2.0 * q) : 0.0;
        cosq = (1.0 + fac) * 0.5;
        const double sinq = (1.0 - fac) * 0.5;
        y = sinq / rb;
        z = rb * sinq;
    }
    const double exa = pex + sex;
    LayerTerms t{};
    t.w = w;
    t.cosp = cosp;
    t.a0 = exa < 60.0 ? std::exp(-exa) : 0.0;
    t.cpcq = cosp * cosq;
    t.cpy = cosp * y;
    t.cpz = cosp * z;
    t.cqw = cosq * w;
    t.cqx = cosq * x;
    t.xy = x * y;
    t.xz = x * z;
    t.wy = w * y;
    t.wz = w * z;
    return t;
}

// Left-multiplies the reduced delta vector by Dunkin's 5x5 layer matrix.
std::array<double, 5> dunkin_step(const std::array<double, 5>& e, double wvno2, double gam,
                                  double gammk, double rho, const LayerTerms& t) {
    const double gamm1 = gam - 1.0;
    const double twgm1 = gam + gamm1;
    const double gmgmk = gam * gammk;
    const double gmgm1 = gam * gamm1;
    const double gm1sq = gamm1 * gamm1;
    const double rho2 = rho * rho;
    const double a0pq = t.a0 - t.cpcq;

    double ca[5][5];
    ca[0][0] = t.cpcq - 2.0 * gmgm1 * a0pq - gmgmk * t.xz - wvno2 * gm1sq * t.wy;
    ca[0][1] = (wvno2 * t.cpy - t.cqx) / rho;
    ca[0][2] = -(twgm1 * a0pq + gammk * t.xz + wvno2 * gamm1 * t.wy) / rho;
    ca[0][3] = (t.cpz - wvno2 * t.cqw) / rho;
    ca[0][4] = -(2.0 * wvno2 * a0pq + t.xz + wvno2 * wvno2 * t.wy) / rho2;

    ca[1][0] = (gmgmk * t.cpz - gm1sq * t.cqw) * rho;
    ca[1][1] = t.cpcq;
    ca[1][2] = gammk * t.cpz - gamm1 * t.cqw;
    ca[1][3] = -t.wz;
    ca[1][4] = ca[0][3];

    ca[3][0] = (gm1sq * t.cpy - gmgmk * t.cqx) * rho;
    ca[3][1] = -t.xy;
    ca[3][2] = gamm1 * t.cpy - gammk * t.cqx;
    ca[3][3] = ca[1][1];
    ca[3][4] = ca[0][1];

    ca[4][0] = -(2.0 * gmgmk * gm1sq * a0pq + gmgmk * gmgmk * t.xz + gm1sq * gm1sq * t.wy) * rho2;
    ca[4][1] = ca[3][0];
    ca[4][2] = -(gammk * gamm1 * twgm1 * a0pq + gam * gammk * gammk * t.xz + gamm1 * gm1sq * t.wy) *
               rho;
    ca[4][3] = ca[1][0];
    ca[4][4] = ca[0][0];

    const double s = -2.0 * wvno2;
    ca[2][0] = s * ca[4][2];
    ca[2][1] = s * ca[3][2];
    ca[2][2] = t.a0 + 2.0 * (t.cpcq - ca[0][0]);
    ca[2][3] = s * ca[1][2];
    ca[2][4] = s * ca[0][2];

    std::array<double, 5> out{};
    double scale = 0.0;
    for (int i = 0; i < 5; ++i) {
        double acc = 0.0;
        for (int j = 0; j < 5; ++j) acc += e[j] * ca[j][i];
        out[i] = acc;
        scale = std::max(scale, std::abs(acc));
    }
    if (scale < 1e-40) scale = 1.0;
    for (double& v : out) v /= scale;
    return out;
}

double radical(double wvno, double k) { return std::sqrt((wvno + k) * std::abs(wvno - k)); }

double rayleigh_secular(const Medium& med, double period, double c) {
    const double omega = 2.0 * std::numbers::pi / period;
    const double wvno = omega / c;
    const double wvno2 = wvno * wvno;
    const std::size_t hs = med.n - 1;

    double xka = omega / med.vp[hs];
    double xkb = omega / med.vs[hs];
    double ra = radical(wvno, xka);
    double rb = radical(wvno, xkb);
    double t = med.vs[hs] / omega;
    double gammk = 2.0 * t * t;
    double gam = gammk * wvno2;
    double gamm1 = gam - 1.0;
    double rho = med.rho[hs];

    std::array<double, 5> e{};
    e[0] = rho * rho * (gamm1 * gamm1 - gam * gammk * ra * rb);
    e[1] = -rho * ra;
    e[2] = rho * (gamm1 - gammk * ra * rb);
    e[3] = rho * rb;
    e[4] = wvno2 - ra * rb;

    for (std::size_t m = hs; m-- > 0;) {
        xka = omega / med.vp[m];
        xkb = omega / med.vs[m];
        t = med.vs[m] / omega;
        gammk = 2.0 * t * t;
        gam = gammk * wvno2;
        ra = radical(wvno, xka);
        rb = radical(wvno, xkb);
        const double depth = med.h[m];
        const LayerTerms terms = layer_terms(ra * depth, rb * depth, ra, rb, wvno, xka, xkb, depth);
        e = dunkin_step(e, wvno2, gam, gammk, med.rho[m], terms);
    }
    return e[0];
}

double love_secular(const Medium& med, double period, double c) {
    const double omega = 2.0 * std::numbers::pi / period;
    const double wvno = omega / c;
    const std::size_t hs = med.n - 1;

    double beta = med.vs[hs];
    double rb = radical(wvno, omega / beta);
    double e1 = med.rho[hs] * rb;
    double e2 = 1.0 / (beta * beta);

    for (std::size_t m = hs; m-- > 0;) {
        beta = med.vs[m];
        const double mu = med.rho[m] * beta * beta;
        const double xkb = omega / beta;
        rb = radical(wvno, xkb);
        const double q = med.h[m] * rb;
        double cosq, y, z;
        if (wvno < xkb) {
            const double sinq = std::sin(q);
            y = sinq / rb;
            z = -rb * sinq;
            cosq = std::cos(q);
        } else if (wvno == xkb) {
            cosq = 1.0;
            y = med.h[m];
            z = 0.0;
        } else {
            const double fac = q < 16.0 ? std::exp(-2.0 * q) : 0.0;
            cosq = (1.0 + fac) * 0.5;
            const double sinq = (1.0 - fac) * 0.5;
            y = sinq / rb;
            z = rb * sinq;
        }
        const double e10 = e1 * cosq + e2 * mu * z;
        const double e20 = e1 * y / mu + e2 * cosq;
        double norm = std::max(std::abs(e10), std::abs(e20));
        if (norm < 1e-40) norm = 1.0;
        e1 = e10 / norm;
        e2 = e20 / norm;
    }
    return e1;
}

double evaluate(const Medium& med, double period, double c, WaveType wave) {
    if (wave == WaveType::rayleigh) {
        med.check_singular(c, true);
        return rayleigh_secular(med, period, c);
    }
    med.check_singular(c, false);
    return love_secular(med, period, c);
}

// Scan points that land on a layer velocity are nudged off the singularity.
double evaluate_nudged(const Medium& med, double period, double c, WaveType wave) {
    for (int k = 0;; ++k) {
        try {
            return evaluate(med, period, c, wave);
        } catch (const EvaluationSingularity&) {
            if (k > 8) throw;
            c += 2e-9;
        }
    }
}

ScanRange scan_range(const Medium& med, WaveType wave) {
    const double vmin = med.min_vs();
    const double vhs = med.vs[med.n - 1];
    if (wave == WaveType::rayleigh) return {0.70 * vmin, 0.9999 * vhs};
    return {1.0001 * vmin, 0.9999 * vhs};
}

double refine(const Medium& med, double period, WaveType wave, double lo, double flo, double hi,
              double fhi) {
    auto f = [&](double c) { return evaluate_nudged(med, period, c, wave); };
    // Terminate once the bracket is far inside the 1e-6 km/s requirement so
    // that finite differences of the root stay clean.
    auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-13 * std::max(1.0, std::abs(a)); };
    std::uintmax_t max_iter = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, max_iter);
    return 0.5 * (a + b);
}

template <typename OnRoot>
void scan(const Medium& med, double period, WaveType wave, double step, OnRoot&& on_root) {
    const auto [c_lo, c_hi] = scan_range(med, wave);
    if (!(c_hi > c_lo)) return;
    double prev_c = c_lo;
    double prev_f = evaluate_nudged(med, period, prev_c, wave);
    for (std::size_t k = 1;; ++k) {
        const double c = std::min(c_lo + static_cast<double>(k) * step, c_hi);
        const double f = evaluate_nudged(med, period, c, wave);
        if (prev_f == 0.0) {
            if (!on_root(prev_c)) return;
        } else if ((prev_f < 0.0) != (f < 0.0) && f != 0.0) {
            if (!on_root(refine(med, period, wave, prev_c, prev_f, c, f))) return;
        }
        if (c >= c_hi) return;
        prev_c = c;
        prev_f = f;
    }
}

}  // namespace

double rayleigh_dispersion_function(const LayeredModel& model, double period, double c) {
    check_arguments(period, c);
    return evaluate(Medium(model), period, c, WaveType::rayleigh);
}

double love_dispersion_function(const LayeredModel& model, double period, double c) {
    check_arguments(period, c);
    return evaluate(Medium(model), period, c, WaveType::love);
}

double dispersion_function(const LayeredModel& model, double period, double c, WaveType wave) {
    return wave == WaveType::rayleigh ? rayleigh_dispersion_function(model, period, c)
                                      : love_dispersion_function(model, period, c);
}

ScanRange scan_range(const LayeredModel& model, WaveType wave) {
    return scan_range(Medium(model), wave);
}

namespace {

double fundamental(const Medium& med, double period, WaveType wave) {
    if (!(period >= kMinPeriod && period <= kMaxPeriod)) {
        throw DomainError("period outside [2, 60] s");
    }
    double root = -1.0;
    scan(med, period, wave, kScanStep, [&](double c) {
        root = c;
        return false;
    });
    if (root < 0.0) {
        throw NoRootError("no " + std::string(to_string(wave)) + " root at period " +
                              std::to_string(period) + " s",
                          period);
    }
    return root;
}

}  // namespace

double phase_velocity(const LayeredModel& model, double period, WaveType wave) {
    return fundamental(Medium(model), period, wave);
}

double phase_velocity_near(const LayeredModel& model, double period, WaveType wave, double guess,
                           double half_width) {
    const Medium med(model);
    const auto [c_lo, c_hi] = scan_range(med, wave);
    for (double w = half_width; w <= 4.0 * half_width; w *= 2.0) {
        const double lo = std::max(c_lo, guess - w);
        const double hi = std::min(c_hi, guess + w);
        if (!(hi > lo)) break;
        const double flo = evaluate_nudged(med, period, lo, wave);
        const double fhi = evaluate_nudged(med, period, hi, wave);
        if (flo == 0.0) return lo;
        if (fhi == 0.0) return hi;
        if ((flo < 0.0) != (fhi < 0.0)) return refine(med, period, wave, lo, flo, hi, fhi);
    }
    return fundamental(med, period, wave);
}

std::vector<double> all_roots(const LayeredModel& model, double period, WaveType wave,
                              double step) {
    if (!(step > 0.0)) throw DomainError("scan step must be positive");
    std::vector<double> roots;
    scan(Medium(model), period, wave, step, [&](double c) {
        roots.push_back(c);
        return true;
    });
    return roots;
}

DispersionCurve dispersion_curve(const LayeredModel& model, const PeriodGrid& grid,
                                 WaveType wave) {
    const Medium med(model);
    DispersionCurve curve;
    curve.wave = wave;
    curve.periods = grid;
    curve.phase_velocity.reserve(grid.size());
    for (double period : grid.periods()) {
        curve.phase_velocity.push_back(fundamental(med, period, wave));
    }
    curve.mask.assign(grid.size(), 1);
    return curve;
}

}  // namespace surfkern
