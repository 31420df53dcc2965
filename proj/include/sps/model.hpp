#pragma once

#include <complex>
#include <stdexcept>
#include <variant>

namespace sps {

using Complex = std::complex<double>;

// Relative gap below which nearly-equal decay rates are treated as equal
// and the degenerate (Erlang) limit expressions are used instead.
inline constexpr double kEqualRateEps = 1e-6;

/// Poissonian absorption rate mu1 and emission rate mu2 (= 1/tau) of the
/// two-level cycle. Both must be positive and finite.
struct RateParams {
    double mu1;
    double mu2;

    RateParams(double mu1_, double mu2_) : mu1(mu1_), mu2(mu2_) {
        if (!(mu1 > 0.0) || !std::isfinite(mu1))
            throw std::invalid_argument("RateParams: mu1 must be positive and finite");
        if (!(mu2 > 0.0) || !std::isfinite(mu2))
            throw std::invalid_argument("RateParams: mu2 must be positive and finite");
    }

    double sum() const { return mu1 + mu2; }
    double product() const { return mu1 * mu2; }
};

/// Pump description: mu1 = alpha * power, mu2 = 1 / tau.
struct PumpParams {
    double alpha;   // coupling, 1/(power*time)
    double power;   // excitation power
    double tau;     // excited-state lifetime

    PumpParams(double alpha_, double power_, double tau_)
        : alpha(alpha_), power(power_), tau(tau_) {
        if (!(alpha > 0.0) || !std::isfinite(alpha))
            throw std::invalid_argument("PumpParams: alpha must be positive and finite");
        if (!(power >= 0.0) || !std::isfinite(power))
            throw std::invalid_argument("PumpParams: power must be non-negative and finite");
        if (!(tau > 0.0) || !std::isfinite(tau))
            throw std::invalid_argument("PumpParams: tau must be positive and finite");
    }

    /// Fails for power == 0: the cycle never starts and mu1 must be positive.
    RateParams to_rates() const {
        if (power == 0.0)
            throw std::invalid_argument("PumpParams: power must be positive to form rates");
        return RateParams(alpha * power, 1.0 / tau);
    }
};

/// Detection efficiency eta in (0, 1] and non-paralyzable dead time D >= 0.
struct DetectorParams {
    double eta;
    double deadtime;

    DetectorParams(double eta_, double deadtime_) : eta(eta_), deadtime(deadtime_) {
        if (!(eta > 0.0) || !(eta <= 1.0))
            throw std::invalid_argument("DetectorParams: eta must lie in (0, 1]");
        if (!(deadtime >= 0.0) || !std::isfinite(deadtime))
            throw std::invalid_argument("DetectorParams: deadtime must be >= 0 and finite");
    }
};

/// The two decay constants of the lossy inter-detection density; the density
/// decays with rates mu_m/2 and mu_p/2.
struct RootPair {
    double mu_p;
    double mu_m;

    double rate_slow() const { return mu_m / 2.0; }
    double rate_fast() const { return mu_p / 2.0; }
};

struct IdealCycle {
    RateParams rates;
};

struct Lossy {
    RateParams rates;
    double eta;

    Lossy(RateParams r, double eta_) : rates(r), eta(eta_) {
        if (!(eta > 0.0) || !(eta <= 1.0))
            throw std::invalid_argument("Lossy: eta must lie in (0, 1]");
    }
};

struct LossyDeadtime {
    RateParams rates;
    DetectorParams detector;
};

/// Which inter-detection law is in force. Lossy(eta = 1) is observationally
/// identical to IdealCycle, and LossyDeadtime(D = 0) to Lossy.
using DistributionKind = std::variant<IdealCycle, Lossy, LossyDeadtime>;

RateParams rates_of(const DistributionKind& kind);
DetectorParams detector_of(const DistributionKind& kind);

/// mu_p = S + sqrt(S^2 - 4 eta mu1 mu2), mu_m = 4 eta mu1 mu2 / mu_p, S = mu1 + mu2.
/// The discriminant is evaluated as (mu1 - mu2)^2 + 4 (1 - eta) mu1 mu2, a sum of
/// non-negative terms, and mu_m via the Vieta product, so neither root cancels.
RootPair root_pair(const RateParams& p, double eta);

/// Waiting-time density of absorption: mu1 exp(-mu1 t) for t >= 0, else 0.
double pdf_abs(double t, const RateParams& p);

/// Waiting-time density of emission given absorption at t = 0.
double pdf_em(double t, const RateParams& p);

/// Full-cycle (absorption then emission) density; switches to the
/// mu^2 t exp(-mu t) limit when mu1 and mu2 are nearly equal.
double pdf_cycle(double t, const RateParams& p);

/// Inter-detection density with Bernoulli(eta) detection of each emission.
double pdf_lossy(double t, const RateParams& p, double eta);

/// Lossy density truncated to t >= D and renormalized (non-paralyzable
/// dead time D as a censored renewal interval).
double pdf_deadtime(double t, const RateParams& p, const DetectorParams& d);

/// Density of the active DistributionKind at time t.
double pdf(const DistributionKind& kind, double t);

Complex laplace_cycle(Complex s, const RateParams& p);
Complex laplace_lossy(Complex s, const RateParams& p, double eta);
Complex laplace_deadtime(Complex s, const RateParams& p, const DetectorParams& d);

/// Laplace transform of the active DistributionKind at s.
Complex laplace(const DistributionKind& kind, Complex s);

inline double laplace_cycle(double s, const RateParams& p) {
    return laplace_cycle(Complex(s, 0.0), p).real();
}
inline double laplace_lossy(double s, const RateParams& p, double eta) {
    return laplace_lossy(Complex(s, 0.0), p, eta).real();
}
inline double laplace_deadtime(double s, const RateParams& p, const DetectorParams& d) {
    return laplace_deadtime(Complex(s, 0.0), p, d).real();
}
inline double laplace(const DistributionKind& kind, double s) {
    return laplace(kind, Complex(s, 0.0)).real();
}

/// Laplace-domain probability generating function,
/// (1/s) (1 - ftilde) / (1 - xi ftilde), given the interval transform ftilde.
Complex pgf_laplace(Complex s, double xi, Complex ftilde);

/// Survival probability P(X > d) of the lossy inter-detection interval;
/// the normalizing mass behind pdf_deadtime and the acceptance rate of
/// rejection sampling against it.
double lossy_survival(const RateParams& p, double eta, double d);

}  // namespace sps
