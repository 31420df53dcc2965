#include "sps/analytics.hpp"

#include <algorithm>
#include <cmath>

namespace sps {

namespace {

// Raw moments of Exp(a) + Exp(b); exact also at a = b.
MomentPair hypoexp_moments(double a, double b) {
    const double m1 = 1.0 / a + 1.0 / b;
    const double m2 = 2.0 * (1.0 / (a * a) + 1.0 / (a * b) + 1.0 / (b * b));
    return MomentPair{m1, m2};
}

// Raw moments of the lossy interval conditioned on exceeding D.
MomentPair truncated_moments(const RateParams& p, const DetectorParams& d) {
    const RootPair r = root_pair(p, d.eta);
    const double a = r.rate_slow(), b = r.rate_fast(), D = d.deadtime;
    if (D == 0.0) return hypoexp_moments(a, b);
    if (b - a <= kEqualRateEps * (a + b)) {
        const double mu = 0.5 * (a + b), x = mu * D;
        const double m1 = (x * x + 2.0 * x + 2.0) / (mu * (1.0 + x));
        const double m2 = (x * x * x + 3.0 * x * x + 6.0 * x + 6.0) / (mu * mu * (1.0 + x));
        return MomentPair{m1, m2};
    }
    // common e^{-a D} weight factored out of every integral
    const double w = std::exp(-(b - a) * D);
    const double norm = 1.0 / a - w / b;
    const double m1 = ((D / a + 1.0 / (a * a)) - w * (D / b + 1.0 / (b * b))) / norm;
    const double m2 = ((D * D / a + 2.0 * D / (a * a) + 2.0 / (a * a * a)) -
                       w * (D * D / b + 2.0 * D / (b * b) + 2.0 / (b * b * b))) /
                      norm;
    return MomentPair{m1, m2};
}

}  // namespace

std::size_t FanoCurve::argmin() const {
    const auto it = std::min_element(points.begin(), points.end(),
                                     [](const FanoPoint& x, const FanoPoint& y) {
                                         return x.fano < y.fano;
                                     });
    return static_cast<std::size_t>(it - points.begin());
}

double mean_finite(const RateParams& p, const WindowSpec& w) {
    const double st = p.sum() * w.duration;
    return p.product() / (p.sum() * p.sum()) * (std::expm1(-st) + st);
}

double var_finite(const RateParams& p, const WindowSpec& w) {
    const double m1 = p.mu1, m2 = p.mu2, T = w.duration;
    const double S = m1 + m2, q = m1 * m2, st = S * T;
    const double diff2 = (m1 - m2) * (m1 - m2);
    // Exact regrouping of the full finite-T variance; the constant terms
    // cancel identically and are dropped so the expression stays accurate
    // as T -> 0.
    const double braces = T * S * (m1 * m1 + m2 * m2 - 4.0 * q) +
                          std::expm1(-st) * (diff2 - 4.0 * T * q * S) -
                          q * std::expm1(-2.0 * st);
    return q / (S * S * S * S) * braces;
}

double mean_asymptotic(const RateParams& p, const WindowSpec& w) {
    return p.product() / p.sum() * w.duration;
}

double fano_ideal(const RateParams& p) {
    return (p.mu1 * p.mu1 + p.mu2 * p.mu2) / (p.sum() * p.sum());
}

double fano_lossy(const RateParams& p, double eta) {
    if (!(eta > 0.0) || !(eta <= 1.0))
        throw std::invalid_argument("fano_lossy: eta must lie in (0, 1]");
    return ((p.mu1 * p.mu1 + p.mu2 * p.mu2) + 2.0 * (1.0 - eta) * p.product()) /
           (p.sum() * p.sum());
}

MomentPair renewal_moments(const DistributionKind& kind) {
    struct Visitor {
        MomentPair operator()(const IdealCycle& k) const {
            return hypoexp_moments(k.rates.mu1, k.rates.mu2);
        }
        MomentPair operator()(const Lossy& k) const {
            const RootPair r = root_pair(k.rates, k.eta);
            return hypoexp_moments(r.rate_slow(), r.rate_fast());
        }
        MomentPair operator()(const LossyDeadtime& k) const {
            return truncated_moments(k.rates, k.detector);
        }
    };
    return std::visit(Visitor{}, kind);
}

double fano_asymptotic(const DistributionKind& kind) {
    const MomentPair m = renewal_moments(kind);
    return m.variance() / (m.m1 * m.m1);
}

SaturationResult saturation(const PumpParams& pp) {
    const double rate_sat = 1.0 / pp.tau;
    const double power_sat = 1.0 / (pp.tau * pp.alpha);
    const double rate_inf = rate_sat * pp.power / (pp.power + power_sat);
    return SaturationResult{rate_inf, rate_sat, power_sat};
}

double deadtime_rate(double nu_in, double deadtime) {
    if (!(nu_in >= 0.0)) throw std::invalid_argument("deadtime_rate: nu_in must be >= 0");
    if (!(deadtime >= 0.0)) throw std::invalid_argument("deadtime_rate: deadtime must be >= 0");
    return nu_in / (1.0 + deadtime * nu_in);
}

DistributionKind make_kind(const RateParams& p, double eta, double deadtime) {
    if (!(eta > 0.0) || !(eta <= 1.0))
        throw std::invalid_argument("make_kind: eta must lie in (0, 1]");
    if (deadtime > 0.0) return LossyDeadtime{p, DetectorParams(eta, deadtime)};
    if (eta < 1.0) return Lossy(p, eta);
    return IdealCycle{p};
}

FanoCurve fano_curve(const std::vector<double>& ratio_grid, double mu2, double eta,
                     double deadtime_over_tau) {
    if (ratio_grid.empty())
        throw std::invalid_argument("fano_curve: empty ratio grid");
    if (!(mu2 > 0.0)) throw std::invalid_argument("fano_curve: mu2 must be positive");
    if (!(deadtime_over_tau >= 0.0))
        throw std::invalid_argument("fano_curve: deadtime_over_tau must be >= 0");
    for (std::size_t i = 0; i < ratio_grid.size(); ++i) {
        if (!(ratio_grid[i] > 0.0))
            throw std::invalid_argument("fano_curve: ratios must be positive");
        if (i > 0 && !(ratio_grid[i] > ratio_grid[i - 1]))
            throw std::invalid_argument("fano_curve: ratio grid must be strictly increasing");
    }
    FanoCurve curve;
    curve.eta = eta;
    curve.deadtime_over_tau = deadtime_over_tau;
    curve.points.reserve(ratio_grid.size());
    const double deadtime = deadtime_over_tau / mu2;
    for (double ratio : ratio_grid) {
        const RateParams rates(ratio * mu2, mu2);
        curve.points.push_back({ratio, fano_asymptotic(make_kind(rates, eta, deadtime))});
    }
    return curve;
}

std::vector<double> log_ratio_grid(double ratio_min, double ratio_max, std::size_t points) {
    if (!(ratio_min > 0.0) || !(ratio_max > ratio_min))
        throw std::invalid_argument("log_ratio_grid: need 0 < ratio_min < ratio_max");
    if (points < 2) throw std::invalid_argument("log_ratio_grid: need at least 2 points");
    const double lo = std::log10(ratio_min), hi = std::log10(ratio_max);
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(points - 1);
        grid[i] = std::pow(10.0, lo + (hi - lo) * u);
    }
    return grid;
}

}  // namespace sps
