#include "sps/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sps {

namespace {

Complex pow_n(Complex z, std::size_t n) {
    Complex acc(1.0, 0.0);
    while (n > 0) {
        if (n & 1u) acc *= z;
        z *= z;
        n >>= 1u;
    }
    return acc;
}

// Binomial average 2^-m sum_j C(m,j) s[base+j] of the partial sums.
double euler_average(const std::vector<double>& partial, std::size_t base, std::size_t m) {
    double weight = std::pow(0.5, static_cast<double>(m));
    double acc = 0.0;
    for (std::size_t j = 0; j <= m; ++j) {
        acc += weight * partial[base + j];
        weight *= static_cast<double>(m - j) / static_cast<double>(j + 1);
    }
    return acc;
}

InversionEstimate euler_invert(const LaplaceFn& transform, double t,
                               const InversionConfig& cfg) {
    // Discretization (aliasing) error of the Fourier series is ~e^-A while
    // round-off grows as e^{A/2}; cap A where doubles stop paying for it.
    const double A = std::clamp(-std::log(cfg.precision_target) + std::log(10.0), 18.4, 37.0);
    const std::size_t m = std::clamp<std::size_t>(cfg.node_count / 4, 8, 24);
    const std::size_t burn = cfg.node_count - m;
    const double gamma = A / (2.0 * t);
    const double pi_t = std::numbers::pi / t;

    std::vector<double> partial(burn + m + 1);
    double sum = 0.5 * transform(Complex(gamma, 0.0)).real();
    partial[0] = sum;
    double sign = -1.0;
    for (std::size_t k = 1; k <= burn + m; ++k) {
        sum += sign * transform(Complex(gamma, static_cast<double>(k) * pi_t)).real();
        partial[k] = sum;
        sign = -sign;
    }

    const double scale = std::exp(A / 2.0) / t;
    const double e0 = euler_average(partial, burn - 2, m);
    const double e1 = euler_average(partial, burn - 1, m);
    const double e2 = euler_average(partial, burn, m);
    const double value = scale * e2;
    const double residual = scale * std::max(std::abs(e2 - e1), std::abs(e1 - e0));
    const bool converged = residual <= cfg.precision_target * std::max(std::abs(value), 1.0);
    return InversionEstimate{value, residual, converged};
}

double talbot_sum(const LaplaceFn& transform, double t, std::size_t m_nodes) {
    const double r = 2.0 * static_cast<double>(m_nodes) / (5.0 * t);
    double acc = 0.5 * std::exp(r * t) * transform(Complex(r, 0.0)).real();
    for (std::size_t k = 1; k < m_nodes; ++k) {
        const double theta = static_cast<double>(k) * std::numbers::pi /
                             static_cast<double>(m_nodes);
        const double cot = std::cos(theta) / std::sin(theta);
        const Complex s(r * theta * cot, r * theta);
        const double sigma = theta + (theta * cot - 1.0) * cot;
        const Complex term = std::exp(s * t) * transform(s) * Complex(1.0, sigma);
        acc += term.real();
    }
    return acc * r / static_cast<double>(m_nodes);
}

InversionEstimate talbot_invert(const LaplaceFn& transform, double t,
                                const InversionConfig& cfg) {
    const double value = talbot_sum(transform, t, cfg.node_count);
    const double check = talbot_sum(transform, t, cfg.node_count - 2);
    const double residual = std::abs(value - check);
    const bool converged = residual <= cfg.precision_target * std::max(std::abs(value), 1.0);
    return InversionEstimate{value, residual, converged};
}

}  // namespace

double CountingDistribution::mean() const {
    double acc = 0.0;
    for (std::size_t n = 0; n < probs.size(); ++n) acc += static_cast<double>(n) * probs[n];
    return acc;
}

double CountingDistribution::variance() const {
    const double m = mean();
    double acc = 0.0;
    for (std::size_t n = 0; n < probs.size(); ++n) {
        const double d = static_cast<double>(n) - m;
        acc += d * d * probs[n];
    }
    return acc;
}

double TabulatedDensity::total() const {
    if (values.size() < 2) return 0.0;
    double acc = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i) acc += values[i];
    return acc * step;
}

double TabulatedDensity::integral_to(double t) const {
    if (t <= 0.0 || values.size() < 2) return 0.0;
    const double t_end = step * static_cast<double>(values.size() - 1);
    if (t >= t_end) return total();
    const auto whole = static_cast<std::size_t>(t / step);
    double acc = 0.0;
    for (std::size_t i = 0; i < whole; ++i) acc += 0.5 * (values[i] + values[i + 1]) * step;
    const double rem = t - static_cast<double>(whole) * step;
    if (rem > 0.0) {
        const double frac = rem / step;
        const double f_t = values[whole] + frac * (values[whole + 1] - values[whole]);
        acc += 0.5 * (values[whole] + f_t) * rem;
    }
    return acc;
}

Complex k_n_transform(std::size_t n, Complex s, const DistributionKind& kind) {
    if (n < 1) throw std::invalid_argument("k_n_transform: n must be >= 1");
    if (s == Complex(0.0, 0.0)) throw std::domain_error("k_n_transform: pole at s = 0");
    return pow_n(laplace(kind, s), n) / s;
}

Complex counting_prob_transform(std::size_t n, Complex s, const DistributionKind& kind) {
    if (s == Complex(0.0, 0.0))
        throw std::domain_error("counting_prob_transform: pole at s = 0");
    const Complex ft = laplace(kind, s);
    return (1.0 - ft) * pow_n(ft, n) / s;
}

InversionEstimate invert_with_residual(const LaplaceFn& transform, double t,
                                       const InversionConfig& cfg) {
    cfg.validate();
    if (!(t > 0.0)) throw std::invalid_argument("invert: t must be positive");
    return cfg.method == InversionMethod::FourierEuler ? euler_invert(transform, t, cfg)
                                                       : talbot_invert(transform, t, cfg);
}

double invert(const LaplaceFn& transform, double t, const InversionConfig& cfg) {
    const InversionEstimate est = invert_with_residual(transform, t, cfg);
    if (!est.converged)
        throw InversionError("invert: node budget exhausted, residual " +
                                 std::to_string(est.residual),
                             est.residual);
    return est.value;
}

CountingDistribution counting_distribution(const DistributionKind& kind, const WindowSpec& w,
                                           std::size_t n_max, const InversionConfig& cfg) {
    cfg.validate();
    const double m1 = renewal_moments(kind).m1;
    CountingDistribution dist{w, {}, {}, 0.0,
                              static_cast<double>(n_max) >= 3.0 * w.duration / m1};
    dist.probs.reserve(n_max + 1);
    dist.raw.reserve(n_max + 1);
    double mass = 0.0;
    for (std::size_t n = 0; n <= n_max; ++n) {
        const LaplaceFn transform = [&kind, n](Complex s) {
            return counting_prob_transform(n, s, kind);
        };
        const InversionEstimate est = invert_with_residual(transform, w.duration, cfg);
        if (!est.converged)
            throw InversionError("counting_distribution: inversion failed at n = " +
                                     std::to_string(n) + ", residual " +
                                     std::to_string(est.residual),
                                 est.residual);
        if (est.value < -kInversionNoiseFloor || est.value > 1.0 + kInversionNoiseFloor)
            throw InversionError("counting_distribution: P(" + std::to_string(n) +
                                     ") = " + std::to_string(est.value) +
                                     " outside [0, 1] beyond the noise floor",
                                 est.residual);
        dist.raw.push_back(est.value);
        const double clamped = std::clamp(est.value, 0.0, 1.0);
        dist.probs.push_back(clamped);
        mass += clamped;
    }
    dist.tail_mass = 1.0 - mass;
    return dist;
}

TabulatedDensity convolve_oracle(const DistributionKind& kind, std::size_t n, double grid_step,
                                 double t_max) {
    if (n < 1 || n > 8)
        throw std::invalid_argument("convolve_oracle: n must lie in [1, 8]");
    if (!(grid_step > 0.0) || !(t_max > grid_step))
        throw std::invalid_argument("convolve_oracle: need 0 < grid_step < t_max");
    const double m1 = renewal_moments(kind).m1;
    const auto count = static_cast<std::size_t>(std::ceil(t_max / grid_step)) + 1;

    std::vector<double> base(count);
    for (std::size_t i = 0; i < count; ++i)
        base[i] = pdf(kind, static_cast<double>(i) * grid_step);

    std::vector<double> current = base;
    std::vector<double> next(count);
    for (std::size_t fold = 1; fold < n; ++fold) {
        for (std::size_t i = 0; i < count; ++i) {
            double acc = 0.5 * (current[0] * base[i] + current[i] * base[0]);
            for (std::size_t j = 1; j < i; ++j) acc += current[j] * base[i - j];
            next[i] = acc * grid_step;
        }
        current.swap(next);
    }
    return TabulatedDensity{grid_step, std::move(current), grid_step <= m1 / 50.0};
}

}  // namespace sps
