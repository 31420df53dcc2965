#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sps/analytics.hpp"
#include "sps/model.hpp"

namespace sps {

/// Deterministic per-stream generator: xoshiro256** seeded by SplitMix64
/// from (seed, stream), so parallel runs are reproducible regardless of
/// scheduling.
class Rng {
  public:
    Rng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();
    /// Uniform draw in (0, 1].
    double uniform();
    double exponential(double rate);
    bool bernoulli(double p);

  private:
    std::uint64_t state_[4];
};

/// Derived seed for an indexed sub-task (sweep point, replicate, ...).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

enum class SimMode {
    Physical,      // event-level emitter + thinning + non-paralyzable gate
    ModelRenewal,  // i.i.d. intervals drawn from the closed-form renewal law
};

struct SimConfig {
    RateParams rates;
    DetectorParams detector;
    WindowSpec window;
    std::size_t window_count;
    std::uint64_t seed;
    SimMode mode = SimMode::Physical;
    double burn_in = 0.0;           // simulated before the first window opens
    bool record_emissions = false;  // keep pre-thinning emission times

    void validate() const {
        if (window_count < 2)
            throw std::invalid_argument("SimConfig: window_count must be >= 2");
        if (!(burn_in >= 0.0) || !std::isfinite(burn_in))
            throw std::invalid_argument("SimConfig: burn_in must be >= 0 and finite");
    }

    double horizon() const { return window.duration * static_cast<double>(window_count); }
    DistributionKind kind() const {
        return make_kind(rates, detector.eta, detector.deadtime);
    }
    /// Windows much longer than the mean interval are recommended for
    /// asymptotic estimates; false when T < 10 m1.
    bool window_adequate() const {
        return window.duration >= 10.0 * renewal_moments(kind()).m1;
    }
};

struct EventTrace {
    std::vector<double> detections;  // strictly increasing, within [0, horizon)
    std::vector<double> emissions;   // only when record_emissions is set
    double horizon;
};

/// Per-run counting statistics. fano is absent (with a note) when no
/// detection occurred; fano_stderr comes from a delete-one-batch jackknife.
struct WindowStats {
    double mean;
    double variance;
    std::optional<double> fano;
    std::optional<double> fano_stderr;
    std::string fano_note;
    std::uint64_t total_detections;
    SimConfig config;
};

struct LossyIntervalDraw {
    double interval;
    std::uint64_t cycles;  // constituent absorption-emission cycles
};

/// One inter-detection interval of the lossy model as the Geometric(eta)
/// mixture of full cycles.
LossyIntervalDraw draw_lossy_interval(Rng& rng, const RateParams& p, double eta);

/// Event-level simulation: alternating Exp(mu1)/Exp(mu2) waits, Bernoulli(eta)
/// thinning of each emission, then the non-paralyzable dead-time gate. The
/// emitter cycle is unaffected by detector state.
EventTrace simulate_physical(const SimConfig& cfg);

/// Renewal sampling of the closed-form interval laws; the dead-time law is
/// realized exactly by rejection of lossy draws below D. Fails when the
/// acceptance probability P(X > D) drops below 1e-6.
EventTrace simulate_model_renewal(const SimConfig& cfg);

/// Dispatch on cfg.mode.
EventTrace simulate(const SimConfig& cfg);

/// Counts per contiguous window and the derived statistics.
WindowStats window_stats(const EventTrace& trace, const SimConfig& cfg);

/// Counts in [0, T) over independent replicates, each started fresh at pump
/// activation (the initial condition behind the finite-T formulas; contiguous
/// windows of one long run estimate the stationary law instead).
std::vector<std::uint64_t> finite_window_samples(const RateParams& rates,
                                                 const DetectorParams& detector, double duration,
                                                 std::size_t replicates, std::uint64_t seed,
                                                 SimMode mode = SimMode::Physical);

struct McFanoPoint {
    double ratio;
    std::optional<double> fano;
    std::optional<double> fano_stderr;
};

struct FanoCurveMc {
    std::vector<McFanoPoint> points;
    double eta;
    double deadtime_over_tau;
    SimMode mode;
};

struct McSweepConfig {
    WindowSpec window;
    std::size_t window_count;
    std::uint64_t seed;
    SimMode mode = SimMode::ModelRenewal;
    unsigned parallelism = 0;  // 0: hardware concurrency
};

/// Monte Carlo counterpart of fano_curve; deterministic for a fixed seed
/// independent of thread count (each point gets a derived seed).
FanoCurveMc fano_curve_mc(const std::vector<double>& ratio_grid, double mu2, double eta,
                          double deadtime_over_tau, const McSweepConfig& sweep);

/// Trace export: '#' header lines, then one fixed-point timestamp per line.
void write_trace(std::ostream& out, const EventTrace& trace, const SimConfig& cfg);

}  // namespace sps
