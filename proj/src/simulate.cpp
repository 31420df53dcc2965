#include "sps/simulate.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <thread>

namespace sps {

namespace {

// Minimum acceptance probability of the dead-time rejection sampler.
constexpr double kRejectionFloor = 1e-6;

std::uint64_t splitmix_next(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// Draws i.i.d. inter-detection intervals of the configured law; the
// dead-time law is the lossy law conditioned on exceeding D.
class RenewalSampler {
  public:
    RenewalSampler(const RateParams& rates, const DetectorParams& det)
        : rates_(rates), eta_(det.eta), deadtime_(det.deadtime) {
        if (deadtime_ > 0.0 &&
            lossy_survival(rates_, eta_, deadtime_) < kRejectionFloor)
            throw std::runtime_error(
                "simulate_model_renewal: P(X > D) below 1e-6, rejection sampling infeasible");
    }

    double operator()(Rng& rng) const {
        for (;;) {
            const double x = draw_lossy_interval(rng, rates_, eta_).interval;
            if (x > deadtime_) return x;
        }
    }

  private:
    RateParams rates_;
    double eta_;
    double deadtime_;
};

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed ^ (0xD1B54A32D192ED03ull * (stream + 1));
    for (auto& word : state_) word = splitmix_next(x);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double Rng::exponential(double rate) { return -std::log(uniform()) / rate; }

bool Rng::bernoulli(double p) { return uniform() <= p; }

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t x = master + 0x9E3779B97F4A7C15ull * (index + 1);
    return splitmix_next(x);
}

LossyIntervalDraw draw_lossy_interval(Rng& rng, const RateParams& p, double eta) {
    double total = 0.0;
    std::uint64_t cycles = 0;
    for (;;) {
        total += rng.exponential(p.mu1) + rng.exponential(p.mu2);
        ++cycles;
        if (rng.bernoulli(eta)) return LossyIntervalDraw{total, cycles};
    }
}

EventTrace simulate_physical(const SimConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed, 0);
    EventTrace trace{{}, {}, cfg.horizon()};
    const double end = cfg.burn_in + cfg.horizon();
    double t = 0.0;
    double next_live = 0.0;
    for (;;) {
        t += rng.exponential(cfg.rates.mu1);
        t += rng.exponential(cfg.rates.mu2);
        if (t >= end) break;
        if (cfg.record_emissions && t >= cfg.burn_in)
            trace.emissions.push_back(t - cfg.burn_in);
        const bool survived = rng.bernoulli(cfg.detector.eta);
        if (survived && t >= next_live) {
            next_live = t + cfg.detector.deadtime;
            if (t >= cfg.burn_in) trace.detections.push_back(t - cfg.burn_in);
        }
    }
    return trace;
}

EventTrace simulate_model_renewal(const SimConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed, 0);
    const RenewalSampler sampler(cfg.rates, cfg.detector);
    EventTrace trace{{}, {}, cfg.horizon()};
    const double end = cfg.burn_in + cfg.horizon();
    double t = 0.0;
    for (;;) {
        t += sampler(rng);
        if (t >= end) break;
        if (t >= cfg.burn_in) trace.detections.push_back(t - cfg.burn_in);
    }
    return trace;
}

EventTrace simulate(const SimConfig& cfg) {
    return cfg.mode == SimMode::Physical ? simulate_physical(cfg) : simulate_model_renewal(cfg);
}

WindowStats window_stats(const EventTrace& trace, const SimConfig& cfg) {
    cfg.validate();
    const double T = cfg.window.duration;
    const std::size_t n_windows = cfg.window_count;
    std::vector<std::uint64_t> counts(n_windows, 0);
    for (double t : trace.detections) {
        if (t < 0.0 || t >= trace.horizon) continue;
        auto k = static_cast<std::size_t>(t / T);
        if (k >= n_windows) k = n_windows - 1;
        ++counts[k];
    }

    double s1 = 0.0, s2 = 0.0;
    for (std::uint64_t c : counts) {
        const auto x = static_cast<double>(c);
        s1 += x;
        s2 += x * x;
    }
    const auto n = static_cast<double>(n_windows);
    const double mean = s1 / n;
    const double variance = (s2 - s1 * s1 / n) / (n - 1.0);

    WindowStats stats{mean,         variance, std::nullopt, std::nullopt,
                      std::string{}, static_cast<std::uint64_t>(s1 + 0.5), cfg};
    if (s1 == 0.0) {
        stats.fano_note = "no detections: Fano undefined";
        return stats;
    }
    stats.fano = variance / mean;

    // Delete-one-batch jackknife over contiguous batches of windows.
    const std::size_t n_batches = std::min<std::size_t>(20, n_windows);
    std::vector<double> leave_out;
    leave_out.reserve(n_batches);
    for (std::size_t b = 0; b < n_batches; ++b) {
        const std::size_t lo = b * n_windows / n_batches;
        const std::size_t hi = (b + 1) * n_windows / n_batches;
        double s1b = 0.0, s2b = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            const auto x = static_cast<double>(counts[k]);
            s1b += x;
            s2b += x * x;
        }
        const auto np = static_cast<double>(n_windows - (hi - lo));
        if (np < 2.0 || s1 - s1b == 0.0) {
            stats.fano_note = "jackknife batch degenerate: stderr unavailable";
            return stats;
        }
        const double mean_b = (s1 - s1b) / np;
        const double var_b = ((s2 - s2b) - np * mean_b * mean_b) / (np - 1.0);
        leave_out.push_back(var_b / mean_b);
    }
    double avg = 0.0;
    for (double v : leave_out) avg += v;
    avg /= static_cast<double>(leave_out.size());
    double ss = 0.0;
    for (double v : leave_out) ss += (v - avg) * (v - avg);
    const auto nb = static_cast<double>(leave_out.size());
    stats.fano_stderr = std::sqrt((nb - 1.0) / nb * ss);
    return stats;
}

std::vector<std::uint64_t> finite_window_samples(const RateParams& rates,
                                                 const DetectorParams& detector, double duration,
                                                 std::size_t replicates, std::uint64_t seed,
                                                 SimMode mode) {
    if (!(duration > 0.0))
        throw std::invalid_argument("finite_window_samples: duration must be positive");
    std::vector<std::uint64_t> counts;
    counts.reserve(replicates);
    if (mode == SimMode::Physical) {
        for (std::size_t r = 0; r < replicates; ++r) {
            Rng rng(seed, r);
            double t = 0.0, next_live = 0.0;
            std::uint64_t c = 0;
            for (;;) {
                t += rng.exponential(rates.mu1);
                t += rng.exponential(rates.mu2);
                if (t >= duration) break;
                if (rng.bernoulli(detector.eta) && t >= next_live) {
                    next_live = t + detector.deadtime;
                    ++c;
                }
            }
            counts.push_back(c);
        }
    } else {
        const RenewalSampler sampler(rates, detector);
        for (std::size_t r = 0; r < replicates; ++r) {
            Rng rng(seed, r);
            double t = 0.0;
            std::uint64_t c = 0;
            for (;;) {
                t += sampler(rng);
                if (t >= duration) break;
                ++c;
            }
            counts.push_back(c);
        }
    }
    return counts;
}

FanoCurveMc fano_curve_mc(const std::vector<double>& ratio_grid, double mu2, double eta,
                          double deadtime_over_tau, const McSweepConfig& sweep) {
    if (ratio_grid.empty()) throw std::invalid_argument("fano_curve_mc: empty ratio grid");
    if (!(mu2 > 0.0)) throw std::invalid_argument("fano_curve_mc: mu2 must be positive");
    for (std::size_t i = 0; i < ratio_grid.size(); ++i) {
        if (!(ratio_grid[i] > 0.0))
            throw std::invalid_argument("fano_curve_mc: ratios must be positive");
        if (i > 0 && !(ratio_grid[i] > ratio_grid[i - 1]))
            throw std::invalid_argument("fano_curve_mc: ratio grid must be strictly increasing");
    }

    FanoCurveMc curve;
    curve.eta = eta;
    curve.deadtime_over_tau = deadtime_over_tau;
    curve.mode = sweep.mode;
    curve.points.resize(ratio_grid.size());

    const double deadtime = deadtime_over_tau / mu2;
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= ratio_grid.size()) return;
            try {
                const SimConfig cfg{RateParams(ratio_grid[i] * mu2, mu2),
                                    DetectorParams(eta, deadtime),
                                    sweep.window,
                                    sweep.window_count,
                                    derive_seed(sweep.seed, i),
                                    sweep.mode};
                const WindowStats stats = window_stats(simulate(cfg), cfg);
                curve.points[i] = McFanoPoint{ratio_grid[i], stats.fano, stats.fano_stderr};
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    unsigned n_threads = sweep.parallelism ? sweep.parallelism
                                           : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(ratio_grid.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned k = 0; k < n_threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return curve;
}

void write_trace(std::ostream& out, const EventTrace& trace, const SimConfig& cfg) {
    out << "# event trace: one detection timestamp per line\n";
    out << "# mode = " << (cfg.mode == SimMode::Physical ? "physical" : "model-renewal")
        << ", mu1 = " << cfg.rates.mu1 << ", mu2 = " << cfg.rates.mu2
        << ", eta = " << cfg.detector.eta << ", deadtime = " << cfg.detector.deadtime << "\n";
    out << "# window = " << cfg.window.duration << ", windows = " << cfg.window_count
        << ", seed = " << cfg.seed << ", detections = " << trace.detections.size() << "\n";
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << std::fixed << std::setprecision(9);
    for (double t : trace.detections) out << t << "\n";
    out.flags(flags);
    out.precision(precision);
}

}  // namespace sps
