#pragma once

#include <vector>

#include "sps/model.hpp"

namespace sps {

/// Duration T of one counting window.
struct WindowSpec {
    double duration;

    explicit WindowSpec(double duration_) : duration(duration_) {
        if (!(duration > 0.0) || !std::isfinite(duration))
            throw std::invalid_argument("WindowSpec: duration must be positive and finite");
    }
};

/// First and second raw moments of an inter-detection interval.
struct MomentPair {
    double m1;  // mean interval
    double m2;  // second raw moment

    double variance() const { return m2 - m1 * m1; }
};

struct SaturationResult {
    double rate_asymptotic;   // I_inf at the given power
    double rate_saturation;   // I_sat = 1/tau
    double power_saturation;  // P_sat = 1/(tau alpha)
};

struct FanoPoint {
    double ratio;  // mu1 / mu2
    double fano;
};

/// Asymptotic Fano factor swept over mu1/mu2 at fixed eta and D (in units of tau).
struct FanoCurve {
    std::vector<FanoPoint> points;
    double eta;
    double deadtime_over_tau;

    /// Index of the smallest fano value (first one on ties).
    std::size_t argmin() const;
};

/// Mean emitted photons over [0, T] for the ideal cycle (pump on at t = 0).
double mean_finite(const RateParams& p, const WindowSpec& w);

/// Variance of the emitted-photon count over [0, T] for the ideal cycle.
double var_finite(const RateParams& p, const WindowSpec& w);

/// Long-time mean mu1 mu2 / (mu1 + mu2) * T.
double mean_asymptotic(const RateParams& p, const WindowSpec& w);

/// Long-time Fano factor (mu1^2 + mu2^2) / (mu1 + mu2)^2 of the ideal source.
double fano_ideal(const RateParams& p);

/// Long-time Fano factor with detection efficiency eta.
double fano_lossy(const RateParams& p, double eta);

/// Mean and second moment of the inter-detection interval, in closed form.
MomentPair renewal_moments(const DistributionKind& kind);

/// Long-time Fano factor (m2 - m1^2) / m1^2 from the renewal moments; agrees
/// with fano_ideal / fano_lossy in the corresponding cases and extends them
/// to non-zero dead time.
double fano_asymptotic(const DistributionKind& kind);

/// Saturation curve parameters and the emission rate at the given power.
SaturationResult saturation(const PumpParams& pp);

/// Non-paralyzable detector throughput nu_in / (1 + D nu_in).
double deadtime_rate(double nu_in, double deadtime);

/// Evaluate fano_asymptotic over a strictly increasing ratio grid with mu2
/// fixed, mu1 = ratio * mu2 and D = deadtime_over_tau / mu2.
FanoCurve fano_curve(const std::vector<double>& ratio_grid, double mu2, double eta,
                     double deadtime_over_tau);

/// Log-spaced ratio grid (default figure grid: 121 points over [1e-3, 1e3]).
std::vector<double> log_ratio_grid(double ratio_min, double ratio_max, std::size_t points);

/// Builds the DistributionKind for the given efficiency/dead-time combination,
/// collapsing eta = 1, D = 0 to the ideal cycle and D = 0 to Lossy.
DistributionKind make_kind(const RateParams& p, double eta, double deadtime);

}  // namespace sps
