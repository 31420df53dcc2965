#include "sps/model.hpp"

#include <cmath>

namespace sps {

namespace {

// e^{-a t} - e^{-b t} for 0 <= a <= b without subtractive cancellation.
double exp_diff(double a, double b, double t) {
    return -std::exp(-a * t) * std::expm1(-(b - a) * t);
}

bool nearly_equal_rates(double a, double b) {
    return std::abs(b - a) <= kEqualRateEps * (a + b);
}

// Density of Exp(a) + Exp(b); Erlang limit when the rates coincide.
double hypoexp_pdf(double a, double b, double t) {
    if (t < 0.0) return 0.0;
    if (nearly_equal_rates(a, b)) {
        const double mu = 0.5 * (a + b);
        return mu * mu * t * std::exp(-mu * t);
    }
    const double lo = std::min(a, b), hi = std::max(a, b);
    return a * b / (hi - lo) * exp_diff(lo, hi, t);
}

void require_nonzero(const Complex& z, const char* what) {
    if (z == Complex(0.0, 0.0)) throw std::domain_error(what);
}

}  // namespace

RateParams rates_of(const DistributionKind& kind) {
    return std::visit([](const auto& k) { return k.rates; }, kind);
}

DetectorParams detector_of(const DistributionKind& kind) {
    struct Visitor {
        DetectorParams operator()(const IdealCycle&) const { return DetectorParams(1.0, 0.0); }
        DetectorParams operator()(const Lossy& k) const { return DetectorParams(k.eta, 0.0); }
        DetectorParams operator()(const LossyDeadtime& k) const { return k.detector; }
    };
    return std::visit(Visitor{}, kind);
}

RootPair root_pair(const RateParams& p, double eta) {
    if (!(eta > 0.0) || !(eta <= 1.0))
        throw std::invalid_argument("root_pair: eta must lie in (0, 1]");
    const double diff = p.mu1 - p.mu2;
    const double disc = diff * diff + 4.0 * (1.0 - eta) * p.mu1 * p.mu2;
    const double mu_p = p.sum() + std::sqrt(disc);
    const double mu_m = 4.0 * eta * p.mu1 * p.mu2 / mu_p;
    return RootPair{mu_p, mu_m};
}

double pdf_abs(double t, const RateParams& p) {
    return t < 0.0 ? 0.0 : p.mu1 * std::exp(-p.mu1 * t);
}

double pdf_em(double t, const RateParams& p) {
    return t < 0.0 ? 0.0 : p.mu2 * std::exp(-p.mu2 * t);
}

double pdf_cycle(double t, const RateParams& p) {
    return hypoexp_pdf(p.mu1, p.mu2, t);
}

double pdf_lossy(double t, const RateParams& p, double eta) {
    const RootPair r = root_pair(p, eta);
    return hypoexp_pdf(r.rate_slow(), r.rate_fast(), t);
}

double pdf_deadtime(double t, const RateParams& p, const DetectorParams& d) {
    if (t < d.deadtime) return 0.0;
    if (d.deadtime == 0.0) return pdf_lossy(t, p, d.eta);
    const RootPair r = root_pair(p, d.eta);
    const double a = r.rate_slow(), b = r.rate_fast(), D = d.deadtime;
    if (nearly_equal_rates(a, b)) {
        const double mu = 0.5 * (a + b);
        return mu * mu * t * std::exp(-mu * (t - D)) / (1.0 + mu * D);
    }
    // the e^{-a D} weight is factored out of density and normalizer so large
    // a D does not underflow the ratio
    const double norm = 1.0 / a - std::exp(-(b - a) * D) / b;
    return -std::exp(-a * (t - D)) * std::expm1(-(b - a) * t) / norm;
}

double pdf(const DistributionKind& kind, double t) {
    struct Visitor {
        double t;
        double operator()(const IdealCycle& k) const { return pdf_cycle(t, k.rates); }
        double operator()(const Lossy& k) const { return pdf_lossy(t, k.rates, k.eta); }
        double operator()(const LossyDeadtime& k) const {
            return pdf_deadtime(t, k.rates, k.detector);
        }
    };
    return std::visit(Visitor{t}, kind);
}

Complex laplace_cycle(Complex s, const RateParams& p) {
    const Complex d1 = p.mu1 + s, d2 = p.mu2 + s;
    require_nonzero(d1, "laplace_cycle: pole at s = -mu1");
    require_nonzero(d2, "laplace_cycle: pole at s = -mu2");
    return p.product() / (d1 * d2);
}

Complex laplace_lossy(Complex s, const RateParams& p, double eta) {
    const RootPair r = root_pair(p, eta);
    const Complex d1 = s + r.rate_slow(), d2 = s + r.rate_fast();
    require_nonzero(d1, "laplace_lossy: pole at s = -mu_m/2");
    require_nonzero(d2, "laplace_lossy: pole at s = -mu_p/2");
    return eta * p.product() / (d1 * d2);
}

Complex laplace_deadtime(Complex s, const RateParams& p, const DetectorParams& d) {
    if (d.deadtime == 0.0) return laplace_lossy(s, p, d.eta);
    const RootPair r = root_pair(p, d.eta);
    const double a = r.rate_slow(), b = r.rate_fast(), D = d.deadtime;
    if (nearly_equal_rates(a, b)) {
        const double mu = 0.5 * (a + b);
        const Complex smu = s + mu;
        require_nonzero(smu, "laplace_deadtime: pole at s = -mu");
        return mu * mu * std::exp(-s * D) * (1.0 + smu * D) /
               (smu * smu * (1.0 + mu * D));
    }
    const Complex da = s + a, db = s + b;
    require_nonzero(da, "laplace_deadtime: pole at s = -mu_m/2");
    require_nonzero(db, "laplace_deadtime: pole at s = -mu_p/2");
    // common e^{-a D} weight factored out of numerator and denominator
    const double w = std::exp(-(b - a) * D);
    const Complex num = 1.0 / da - w / db;
    const double den = 1.0 / a - w / b;
    return std::exp(-s * D) * num / den;
}

Complex laplace(const DistributionKind& kind, Complex s) {
    struct Visitor {
        Complex s;
        Complex operator()(const IdealCycle& k) const { return laplace_cycle(s, k.rates); }
        Complex operator()(const Lossy& k) const { return laplace_lossy(s, k.rates, k.eta); }
        Complex operator()(const LossyDeadtime& k) const {
            return laplace_deadtime(s, k.rates, k.detector);
        }
    };
    return std::visit(Visitor{s}, kind);
}

Complex pgf_laplace(Complex s, double xi, Complex ftilde) {
    require_nonzero(s, "pgf_laplace: pole at s = 0");
    const Complex den = 1.0 - xi * ftilde;
    require_nonzero(den, "pgf_laplace: xi * ftilde = 1");
    return (1.0 - ftilde) / (s * den);
}

double lossy_survival(const RateParams& p, double eta, double d) {
    if (d <= 0.0) return 1.0;
    const RootPair r = root_pair(p, eta);
    const double a = r.rate_slow(), b = r.rate_fast();
    if (nearly_equal_rates(a, b)) {
        const double mu = 0.5 * (a + b);
        return std::exp(-mu * d) * (1.0 + mu * d);
    }
    // (b e^{-a d} - a e^{-b d}) / (b - a), grouped to avoid cancellation
    return std::exp(-a * d) * (1.0 - a * std::expm1(-(b - a) * d) / (b - a));
}

}  // namespace sps
