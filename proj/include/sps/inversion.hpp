#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "sps/analytics.hpp"
#include "sps/model.hpp"

namespace sps {

/// Absolute noise floor of the numerical inversion; raw probabilities may
/// stray this far outside [0, 1] before clamping and are rejected beyond it.
inline constexpr double kInversionNoiseFloor = 1e-8;

enum class InversionMethod {
    FourierEuler,  // Bromwich-line Fourier series with Euler (binomial) acceleration
    FixedTalbot,   // fixed deformed contour; unsuitable for delayed (dead-time) transforms
};

struct InversionConfig {
    InversionMethod method = InversionMethod::FourierEuler;
    std::size_t node_count = 64;
    double precision_target = 1e-9;

    void validate() const {
        if (node_count < 16)
            throw std::invalid_argument("InversionConfig: node_count must be >= 16");
        if (!(precision_target >= 1e-12))
            throw std::invalid_argument("InversionConfig: precision_target must be >= 1e-12");
    }
};

/// Non-convergence of the numerical inversion; carries the residual estimate.
class InversionError : public std::runtime_error {
  public:
    InversionError(const std::string& msg, double residual_)
        : std::runtime_error(msg), residual(residual_) {}
    double residual;
};

struct InversionEstimate {
    double value;
    double residual;
    bool converged;
};

using LaplaceFn = std::function<Complex(Complex)>;

/// Counting distribution P_T(n) for n = 0..n_max with inversion diagnostics.
struct CountingDistribution {
    WindowSpec window;
    std::vector<double> probs;  // clamped to [0, 1]
    std::vector<double> raw;    // pre-clamp inversion output
    double tail_mass;           // 1 - sum(probs)
    bool n_max_adequate;        // n_max >= 3 T / m1

    double mean() const;
    double variance() const;
};

/// Tabulated n-fold convolution on a uniform grid, used as a test oracle.
struct TabulatedDensity {
    double step;
    std::vector<double> values;
    bool well_resolved;  // step <= m1 / 50

    double total() const;
    double integral_to(double t) const;
};

/// Transform of K_n(T), the probability that the n-th detection falls in
/// [0, T]: ftilde(s)^n / s. Requires n >= 1.
Complex k_n_transform(std::size_t n, Complex s, const DistributionKind& kind);

/// Transform of P_T(n): (1 - ftilde(s)) ftilde(s)^n / s, the xi^n coefficient
/// of the Laplace-domain PGF.
Complex counting_prob_transform(std::size_t n, Complex s, const DistributionKind& kind);

/// Numerical inverse Laplace transform of `transform` at t > 0; throws
/// InversionError when the node budget cannot reach the precision target.
/// Accuracy degrades to the noise floor near jump discontinuities of the
/// target (the t = D edge of dead-time densities); evaluate beside them,
/// not on them.
double invert(const LaplaceFn& transform, double t, const InversionConfig& cfg = {});

/// As invert, but reports the residual instead of throwing.
InversionEstimate invert_with_residual(const LaplaceFn& transform, double t,
                                       const InversionConfig& cfg = {});

/// Full counting distribution over a window by per-n inversion.
CountingDistribution counting_distribution(const DistributionKind& kind, const WindowSpec& w,
                                           std::size_t n_max, const InversionConfig& cfg = {});

/// n-fold convolution of the interval density by repeated trapezoidal
/// convolution on a uniform grid; n is limited to 8.
TabulatedDensity convolve_oracle(const DistributionKind& kind, std::size_t n, double grid_step,
                                 double t_max);

}  // namespace sps
