#include <cmath>
#include <sstream>

#include <doctest.h>

#include "oracles.hpp"
#include "sps/analytics.hpp"
#include "sps/simulate.hpp"

using namespace sps;

namespace {

const RateParams kUnit(1.0, 1.0);

SimConfig base_config(double mu1, double eta, double deadtime, double T, std::size_t windows,
                      std::uint64_t seed, SimMode mode) {
    return SimConfig{RateParams(mu1, 1.0), DetectorParams(eta, deadtime), WindowSpec(T),
                     windows, seed, mode};
}

}  // namespace

TEST_CASE("rng streams are deterministic and distinct") {
    Rng a(42, 0), b(42, 0), c(42, 1);
    bool all_equal = true, any_equal_cross = false;
    for (int i = 0; i < 64; ++i) {
        const auto x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
        all_equal = all_equal && (x == y);
        any_equal_cross = any_equal_cross || (x == z);
    }
    CHECK(all_equal);
    CHECK(!any_equal_cross);

    Rng u(7, 3);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
        CHECK(u.exponential(2.0) >= 0.0);
    }
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}

TEST_CASE("lossy interval draws realize the geometric cycle mixture") {
    Rng rng(99, 0);
    const double eta = 0.4;
    const int n = 40000;
    std::vector<double> intervals, cycles;
    intervals.reserve(n);
    cycles.reserve(n);
    for (int i = 0; i < n; ++i) {
        const LossyIntervalDraw d = draw_lossy_interval(rng, kUnit, eta);
        CHECK(d.cycles >= 1);
        intervals.push_back(d.interval);
        cycles.push_back(static_cast<double>(d.cycles));
    }
    const auto mc = oracle::sample_moments(cycles);
    CHECK(std::abs(mc.mean - 1.0 / eta) <= 3.0 * mc.se_mean);
    const auto mi = oracle::sample_moments(intervals);
    CHECK(std::abs(mi.mean - kUnit.sum() / (eta * kUnit.product())) <= 3.0 * mi.se_mean);
}

TEST_CASE("simulation is deterministic per config") {
    for (SimMode mode : {SimMode::Physical, SimMode::ModelRenewal}) {
        const SimConfig cfg = base_config(1.0, 0.6, 0.2, 20.0, 50, 7, mode);
        const EventTrace t1 = simulate(cfg);
        const EventTrace t2 = simulate(cfg);
        CHECK(t1.detections == t2.detections);
        for (std::size_t i = 1; i < t1.detections.size(); ++i)
            CHECK(t1.detections[i] > t1.detections[i - 1]);
    }
}

TEST_CASE("physical mode reproduces the cycle timing") {
    const SimConfig cfg = base_config(1.0, 1.0, 0.0, 200.0, 100, 11, SimMode::Physical);
    const EventTrace trace = simulate_physical(cfg);
    std::vector<double> gaps;
    for (std::size_t i = 1; i < trace.detections.size(); ++i)
        gaps.push_back(trace.detections[i] - trace.detections[i - 1]);
    const auto m = oracle::sample_moments(gaps);
    CHECK(std::abs(m.mean - 2.0) <= 3.0 * m.se_mean);
}

TEST_CASE("thinning halves the detected rate") {
    const SimConfig full = base_config(1.0, 1.0, 0.0, 100.0, 400, 13, SimMode::Physical);
    const SimConfig half = base_config(1.0, 0.5, 0.0, 100.0, 400, 14, SimMode::Physical);
    const WindowStats sf = window_stats(simulate(full), full);
    const WindowStats sh = window_stats(simulate(half), half);
    const auto n = static_cast<double>(full.window_count);
    const double se = std::sqrt(sf.variance / n * 0.25 + sh.variance / n);
    CHECK(std::abs(sh.mean - 0.5 * sf.mean) <= 3.0 * se);
}

TEST_CASE("a dead time longer than the horizon leaves one detection") {
    const SimConfig cfg = base_config(1.0, 1.0, 1e7, 10.0, 20, 17, SimMode::Physical);
    const EventTrace trace = simulate_physical(cfg);
    CHECK(trace.detections.size() == 1);
}

TEST_CASE("renewal mode draws the configured law") {
    const SimConfig cfg = base_config(2.0, 1.0, 0.0, 300.0, 64, 19, SimMode::ModelRenewal);
    const EventTrace trace = simulate_model_renewal(cfg);
    std::vector<double> gaps;
    for (std::size_t i = 1; i < trace.detections.size(); ++i)
        gaps.push_back(trace.detections[i] - trace.detections[i - 1]);
    const auto m = oracle::sample_moments(gaps);
    CHECK(std::abs(m.mean - 1.5) <= 3.0 * m.se_mean);
}

TEST_CASE("dead-time floor holds exactly in both modes") {
    const double deadtime = 0.4;
    for (SimMode mode : {SimMode::Physical, SimMode::ModelRenewal}) {
        const SimConfig cfg = base_config(2.0, 0.7, deadtime, 50.0, 100, 23, mode);
        const EventTrace trace = simulate(cfg);
        REQUIRE(trace.detections.size() > 100);
        for (std::size_t i = 1; i < trace.detections.size(); ++i)
            CHECK(trace.detections[i] - trace.detections[i - 1] >= deadtime);
    }
}

TEST_CASE("renewal sampling fails loudly when the dead time censors everything") {
    const SimConfig cfg = base_config(1.0, 1.0, 50.0, 10.0, 4, 29, SimMode::ModelRenewal);
    CHECK_THROWS_AS(simulate_model_renewal(cfg), std::runtime_error);
}

TEST_CASE("window_stats on degenerate and reference traces") {
    SUBCASE("identical counts give zero variance and zero fano") {
        const SimConfig cfg = base_config(1.0, 1.0, 0.0, 1.0, 50, 1, SimMode::Physical);
        EventTrace trace{{}, {}, cfg.horizon()};
        for (std::size_t k = 0; k < 50; ++k)
            trace.detections.push_back(static_cast<double>(k) + 0.5);
        const WindowStats stats = window_stats(trace, cfg);
        CHECK(stats.mean == 1.0);
        CHECK(stats.variance == 0.0);
        REQUIRE(stats.fano.has_value());
        CHECK(*stats.fano == 0.0);
    }

    SUBCASE("no detections reports fano as absent with a reason") {
        const SimConfig cfg = base_config(1.0, 1.0, 0.0, 1.0, 10, 1, SimMode::Physical);
        const WindowStats stats = window_stats(EventTrace{{}, {}, cfg.horizon()}, cfg);
        CHECK(!stats.fano.has_value());
        CHECK(!stats.fano_note.empty());
    }

    SUBCASE("homogeneous Poisson counts are Poissonian") {
        const SimConfig cfg = base_config(1.0, 1.0, 0.0, 10.0, 3000, 1, SimMode::Physical);
        EventTrace trace{oracle::poisson_trace(2.0, cfg.horizon(), 31), {}, cfg.horizon()};
        const WindowStats stats = window_stats(trace, cfg);
        REQUIRE(stats.fano.has_value());
        REQUIRE(stats.fano_stderr.has_value());
        CHECK(std::abs(*stats.fano - 1.0) <= 3.0 * *stats.fano_stderr);
    }

    SUBCASE("balanced pumping is strongly sub-Poissonian") {
        const SimConfig cfg = base_config(1.0, 1.0, 0.0, 100.0, 2500, 37, SimMode::Physical);
        const WindowStats stats = window_stats(simulate(cfg), cfg);
        REQUIRE(stats.fano.has_value());
        REQUIRE(stats.fano_stderr.has_value());
        CHECK(std::abs(*stats.fano - 0.5) <= 3.0 * *stats.fano_stderr);
        CHECK(stats.total_detections > 100000);
    }
}

TEST_CASE("physical and renewal modes agree at zero dead time") {
    const SimConfig phys = base_config(1.3, 0.6, 0.0, 50.0, 2000, 41, SimMode::Physical);
    const SimConfig renew = base_config(1.3, 0.6, 0.0, 50.0, 2000, 43, SimMode::ModelRenewal);
    const WindowStats sp = window_stats(simulate(phys), phys);
    const WindowStats sr = window_stats(simulate(renew), renew);
    REQUIRE(sp.fano.has_value());
    REQUIRE(sr.fano.has_value());
    const double se = std::sqrt(*sp.fano_stderr * *sp.fano_stderr +
                                *sr.fano_stderr * *sr.fano_stderr);
    CHECK(std::abs(*sp.fano - *sr.fano) <= 3.0 * se);
}

TEST_CASE("fano stderr decays like the square root of the window count") {
    double prev = 0.0;
    std::vector<double> ses;
    for (std::size_t windows : {500u, 2000u, 8000u}) {
        const SimConfig cfg = base_config(1.0, 1.0, 0.0, 50.0, windows, 47, SimMode::Physical);
        const WindowStats stats = window_stats(simulate(cfg), cfg);
        REQUIRE(stats.fano_stderr.has_value());
        ses.push_back(*stats.fano_stderr);
        if (prev > 0.0) CHECK(*stats.fano_stderr < prev);
        prev = *stats.fano_stderr;
    }
    const double overall = ses.front() / ses.back();  // expected about 4
    CHECK(overall >= 2.0);
    CHECK(overall <= 8.0);
}

TEST_CASE("finite-window replicates reproduce the closed-form moments") {
    const DetectorParams ideal(1.0, 0.0);
    for (double T : {0.5, 1.0}) {
        const auto counts = finite_window_samples(kUnit, ideal, T, 20000, 53);
        const auto m = oracle::sample_moments(counts);
        const WindowSpec w(T);
        CHECK(std::abs(m.mean - mean_finite(kUnit, w)) <= 3.0 * m.se_mean);
        CHECK(std::abs(m.var - var_finite(kUnit, w)) <= 3.0 * m.se_var);
    }
    // renewal mode draws the same ideal law
    const auto counts = finite_window_samples(kUnit, ideal, 1.0, 20000, 59,
                                              SimMode::ModelRenewal);
    const auto m = oracle::sample_moments(counts);
    CHECK(std::abs(m.mean - mean_finite(kUnit, WindowSpec(1.0))) <= 3.0 * m.se_mean);
}

TEST_CASE("fano_curve_mc is thread-count independent and tracks the analytic curve") {
    const std::vector<double> grid{0.5, 1.0, 2.0};
    McSweepConfig sweep{WindowSpec(100.0), 1500, 61, SimMode::Physical, 1};
    const FanoCurveMc serial = fano_curve_mc(grid, 1.0, 1.0, 0.0, sweep);
    sweep.parallelism = 3;
    const FanoCurveMc parallel = fano_curve_mc(grid, 1.0, 1.0, 0.0, sweep);
    REQUIRE(serial.points.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        REQUIRE(serial.points[i].fano.has_value());
        REQUIRE(parallel.points[i].fano.has_value());
        CHECK(*serial.points[i].fano == *parallel.points[i].fano);
        CHECK(*serial.points[i].fano_stderr == *parallel.points[i].fano_stderr);
        const double expected = fano_ideal(RateParams(grid[i], 1.0));
        CHECK(std::abs(*serial.points[i].fano - expected) <=
              3.0 * *serial.points[i].fano_stderr);
    }

    // deep Poisson plateau: sparse counts still land on fano = 1
    const McSweepConfig sparse{WindowSpec(100.0), 2000, 63, SimMode::ModelRenewal, 0};
    const FanoCurveMc plateau = fano_curve_mc({1e-3}, 1.0, 1.0, 0.0, sparse);
    REQUIRE(plateau.points[0].fano.has_value());
    CHECK(std::abs(*plateau.points[0].fano - 1.0) <= 3.0 * *plateau.points[0].fano_stderr);
}

TEST_CASE("burn-in shifts the counting origin without breaking invariants") {
    SimConfig cfg = base_config(1.0, 0.8, 0.3, 10.0, 40, 67, SimMode::Physical);
    cfg.burn_in = 25.0;
    const EventTrace trace = simulate(cfg);
    REQUIRE(!trace.detections.empty());
    CHECK(trace.detections.front() >= 0.0);
    CHECK(trace.detections.back() < cfg.horizon());
    for (std::size_t i = 1; i < trace.detections.size(); ++i)
        CHECK(trace.detections[i] - trace.detections[i - 1] >= cfg.detector.deadtime);
    CHECK(simulate(cfg).detections == trace.detections);
}

TEST_CASE("emission recording keeps the pre-thinning stream") {
    SimConfig cfg = base_config(1.0, 0.5, 0.0, 50.0, 10, 71, SimMode::Physical);
    cfg.record_emissions = true;
    const EventTrace trace = simulate_physical(cfg);
    CHECK(trace.emissions.size() > trace.detections.size());
    // every detection is one of the emissions
    std::size_t j = 0;
    for (double d : trace.detections) {
        while (j < trace.emissions.size() && trace.emissions[j] < d) ++j;
        REQUIRE(j < trace.emissions.size());
        CHECK(trace.emissions[j] == d);
    }
}

TEST_CASE("trace export format") {
    const SimConfig cfg = base_config(1.0, 1.0, 0.0, 5.0, 4, 73, SimMode::Physical);
    const EventTrace trace = simulate(cfg);
    std::ostringstream out;
    write_trace(out, trace, cfg);
    std::istringstream in(out.str());
    std::string line;
    std::size_t headers = 0, samples = 0;
    std::vector<double> parsed;
    while (std::getline(in, line)) {
        if (line.rfind('#', 0) == 0) {
            ++headers;
            CHECK(samples == 0);  // headers come first
        } else {
            ++samples;
            CHECK(line.find('.') != std::string::npos);  // fixed-point decimal
            parsed.push_back(std::stod(line));
        }
    }
    CHECK(headers >= 2);
    REQUIRE(parsed.size() == trace.detections.size());
    for (std::size_t i = 0; i < parsed.size(); ++i)
        CHECK(parsed[i] == doctest::Approx(trace.detections[i]).epsilon(1e-9));
}

TEST_CASE("window adequacy recommendation") {
    CHECK(base_config(1.0, 1.0, 0.0, 100.0, 4, 1, SimMode::Physical).window_adequate());
    CHECK(!base_config(1.0, 1.0, 0.0, 5.0, 4, 1, SimMode::Physical).window_adequate());
}

TEST_CASE("sim config validation") {
    CHECK_THROWS_AS(simulate(base_config(1.0, 1.0, 0.0, 1.0, 1, 1, SimMode::Physical)),
                    std::invalid_argument);
    SimConfig cfg = base_config(1.0, 1.0, 0.0, 1.0, 4, 1, SimMode::Physical);
    cfg.burn_in = -1.0;
    CHECK_THROWS_AS(simulate(cfg), std::invalid_argument);
    CHECK_THROWS_AS(finite_window_samples(kUnit, DetectorParams(1.0, 0.0), 0.0, 10, 1),
                    std::invalid_argument);
}
