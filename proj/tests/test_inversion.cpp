#include <cmath>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "sps/inversion.hpp"

using namespace sps;

namespace {

// Simpson-weighted Laplace quadrature over a tabulated density (odd grid size).
double tabulated_transform(const TabulatedDensity& d, double s) {
    const std::size_t n = d.values.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (i == 0 || i + 1 == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * std::exp(-s * d.step * static_cast<double>(i)) * d.values[i];
    }
    return acc * d.step / 3.0;
}

}  // namespace

TEST_CASE("inversion config validation") {
    InversionConfig bad_nodes{InversionMethod::FourierEuler, 8, 1e-9};
    CHECK_THROWS_AS(invert([](Complex s) { return 1.0 / s; }, 1.0, bad_nodes),
                    std::invalid_argument);
    InversionConfig bad_precision{InversionMethod::FourierEuler, 64, 1e-13};
    CHECK_THROWS_AS(invert([](Complex s) { return 1.0 / s; }, 1.0, bad_precision),
                    std::invalid_argument);
    CHECK_THROWS_AS(invert([](Complex s) { return 1.0 / s; }, 0.0, InversionConfig{}),
                    std::invalid_argument);
}

TEST_CASE("invert recovers known transforms with both methods") {
    const InversionConfig euler{};
    const InversionConfig talbot{InversionMethod::FixedTalbot, 32, 1e-9};
    for (const auto& cfg : {euler, talbot}) {
        for (double t : {0.3, 1.0, 4.0}) {
            CHECK(invert([](Complex s) { return 1.0 / s; }, t, cfg) ==
                  doctest::Approx(1.0).epsilon(1e-8));
            CHECK(invert([](Complex s) { return 1.0 / (s * s); }, t, cfg) ==
                  doctest::Approx(t).epsilon(1e-8));
            CHECK(invert([](Complex s) { return 1.0 / (s + 0.7); }, t, cfg) ==
                  doctest::Approx(std::exp(-0.7 * t)).epsilon(1e-7));
        }
    }

    const RateParams p(2.0, 1.0);
    const double reference = 0.4650883158696593;  // 2 (e^-1 - e^-2)
    CHECK(pdf_cycle(1.0, p) == doctest::Approx(reference).epsilon(1e-15));
    CHECK(invert([&](Complex s) { return laplace_cycle(s, p); }, 1.0, euler) ==
          doctest::Approx(reference).epsilon(1e-9));
    CHECK(invert([&](Complex s) { return laplace_cycle(s, p); }, 1.0, talbot) ==
          doctest::Approx(reference).epsilon(1e-10));

    // lossy density against the inversion of its own transform
    const RateParams unit(1.0, 1.0);
    const double lossy_inv =
        invert([&](Complex s) { return laplace_lossy(s, unit, 0.5); }, 1.0, euler);
    CHECK(lossy_inv == doctest::Approx(pdf_lossy(1.0, unit, 0.5)).epsilon(1e-8));
}

TEST_CASE("invert reports non-convergence at a jump instead of guessing") {
    // delayed unit step evaluated on its discontinuity
    const auto delayed = [](Complex s) { return std::exp(-s) / s; };
    const InversionEstimate est = invert_with_residual(delayed, 1.0, InversionConfig{});
    CHECK(!est.converged);
    CHECK(est.residual > 1e-9);
    CHECK_THROWS_AS(invert(delayed, 1.0, InversionConfig{}), InversionError);
}

TEST_CASE("k_n_transform") {
    const RateParams unit(1.0, 1.0);
    const DistributionKind kind = IdealCycle{unit};
    CHECK_THROWS_AS(k_n_transform(0, Complex(1.0, 0.0), kind), std::invalid_argument);
    CHECK_THROWS_AS(k_n_transform(1, Complex(0.0, 0.0), kind), std::domain_error);

    const Complex s(1.7, 0.4);
    CHECK(std::abs(k_n_transform(1, s, kind) - laplace(kind, s) / s) <= 1e-15);

    // K_n by inversion equals the Erlang(2n) CDF for mu1 = mu2
    for (std::size_t n : {1u, 2u, 4u}) {
        const double direct =
            invert([&](Complex z) { return k_n_transform(n, z, kind); }, 10.0);
        CHECK(direct == doctest::Approx(oracle::erlang_cdf(2 * n, 1.0, 10.0)).epsilon(1e-8));
    }
}

TEST_CASE("counting_prob_transform") {
    const RateParams unit(1.0, 1.0);
    const DistributionKind kind = IdealCycle{unit};
    CHECK_THROWS_AS(counting_prob_transform(0, Complex(0.0, 0.0), kind), std::domain_error);

    CHECK(std::abs(counting_prob_transform(1, Complex(1.0, 0.0), kind) -
                   Complex(3.0 / 16.0, 0.0)) <= 1e-15);

    // n = 0 coefficient equals the PGF at xi = 0
    const Complex s(0.9, 0.2);
    const Complex f = laplace(kind, s);
    CHECK(std::abs(counting_prob_transform(0, s, kind) - pgf_laplace(s, 0.0, f)) <= 1e-15);

    // geometric telescoping: partial sums approach 1/s at real s > 0
    double partial = 0.0;
    for (std::size_t n = 0; n <= 60; ++n)
        partial += counting_prob_transform(n, Complex(0.5, 0.0), kind).real();
    CHECK(partial == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("counting probabilities against Erlang-difference oracle") {
    const RateParams unit(1.0, 1.0);
    const DistributionKind kind = IdealCycle{unit};
    // P_T(0) at T = 1 equals the hypoexponential survival 2 e^-1
    const double p0 =
        invert([&](Complex s) { return counting_prob_transform(0, s, kind); }, 1.0);
    CHECK(p0 == doctest::Approx(0.7357588823428846).epsilon(1e-9));
    CHECK(std::abs(p0 - 2.0 * std::exp(-1.0)) <= 1e-7);

    for (double T : {1.0, 3.0, 7.0}) {
        for (std::size_t n : {1u, 2u, 3u}) {
            const double expected = oracle::erlang_cdf(2 * n, 1.0, T) -
                                    oracle::erlang_cdf(2 * (n + 1), 1.0, T);
            const double direct =
                invert([&](Complex s) { return counting_prob_transform(n, s, kind); }, T);
            CHECK(direct == doctest::Approx(expected).epsilon(1e-8));
        }
    }
}

TEST_CASE("counting_distribution") {
    const RateParams unit(1.0, 1.0);
    const DistributionKind kind = IdealCycle{unit};

    SUBCASE("tiny window concentrates at zero") {
        const CountingDistribution dist = counting_distribution(kind, WindowSpec(1e-3), 4);
        CHECK(dist.probs[0] == doctest::Approx(1.0).epsilon(1e-5));
        CHECK(dist.probs[1] <= 1e-5);
        CHECK(std::abs(dist.tail_mass) <= 1e-6);
    }

    SUBCASE("moments match the finite-window closed forms") {
        const WindowSpec w(5.0);
        const CountingDistribution dist = counting_distribution(kind, w, 40);
        CHECK(dist.n_max_adequate);
        CHECK(std::abs(dist.tail_mass) <= 1e-6);
        CHECK(dist.mean() ==
              doctest::Approx(mean_finite(unit, w)).epsilon(1e-4));
        CHECK(dist.variance() ==
              doctest::Approx(var_finite(unit, w)).epsilon(1e-4));
        for (double p : dist.probs) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }

    SUBCASE("mass is complete once n_max covers 5 T / m1") {
        const CountingDistribution dist = counting_distribution(kind, WindowSpec(5.0), 13);
        double mass = 0.0;
        for (double p : dist.probs) mass += p;
        CHECK(mass >= 1.0 - 1e-6);
    }

    SUBCASE("inadequate n_max is flagged") {
        const CountingDistribution dist = counting_distribution(kind, WindowSpec(5.0), 5);
        CHECK(!dist.n_max_adequate);
    }

    SUBCASE("dead-time law inverts cleanly in T") {
        const DistributionKind gated =
            LossyDeadtime{unit, DetectorParams(0.5, 0.5)};
        const CountingDistribution dist = counting_distribution(gated, WindowSpec(5.0), 20);
        CHECK(std::abs(dist.tail_mass) <= 1e-6);
    }
}

TEST_CASE("K_n monotonicity and the PGF identity") {
    const RateParams unit(1.0, 1.0);
    const DistributionKind kind = IdealCycle{unit};
    const double times[] = {1.0, 5.0, 10.0};
    double k[7][3];
    for (std::size_t n = 1; n <= 6; ++n)
        for (int j = 0; j < 3; ++j)
            k[n][j] = invert([&](Complex s) { return k_n_transform(n, s, kind); }, times[j]);
    for (int j = 0; j < 3; ++j)
        for (std::size_t n = 2; n <= 6; ++n) CHECK(k[n][j] <= k[n - 1][j] + 1e-9);
    for (std::size_t n = 1; n <= 6; ++n)
        for (int j = 1; j < 3; ++j) CHECK(k[n][j] + 1e-9 >= k[n][j - 1]);

    const WindowSpec w(3.0);
    const CountingDistribution dist = counting_distribution(kind, w, 30);
    double series = 0.0, xi_pow = 1.0;
    for (double p : dist.probs) {
        series += p * xi_pow;
        xi_pow *= 0.5;
    }
    const double direct = invert(
        [&](Complex s) { return pgf_laplace(s, 0.5, laplace(kind, s)); }, w.duration);
    CHECK(series == doctest::Approx(direct).epsilon(1e-6));
}

TEST_CASE("convolve_oracle") {
    const RateParams p(2.0, 1.0);
    const DistributionKind kind = IdealCycle{p};
    CHECK_THROWS_AS(convolve_oracle(kind, 0, 0.01, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(convolve_oracle(kind, 9, 0.01, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(convolve_oracle(kind, 2, 0.0, 10.0), std::invalid_argument);
    CHECK(!convolve_oracle(kind, 1, 0.5, 2.0).well_resolved);

    // One fine tabulation serves all the accuracy claims below.
    const double h = 0.001;
    std::vector<TabulatedDensity> folds;
    for (std::size_t n = 1; n <= 5; ++n) folds.push_back(convolve_oracle(kind, n, h, 30.0));

    SUBCASE("single fold reproduces the density") {
        CHECK(folds[0].well_resolved);
        for (std::size_t i : {100u, 1000u, 5000u})
            CHECK(folds[0].values[i] ==
                  doctest::Approx(pdf_cycle(h * static_cast<double>(i), p)).epsilon(1e-12));
    }

    SUBCASE("two folds match the symbolic self-convolution") {
        for (double t : {0.5, 1.0, 2.0, 4.0}) {
            const auto i = static_cast<std::size_t>(t / h + 0.5);
            CHECK(std::abs(folds[1].values[i] - oracle::cycle_conv2(p.mu1, p.mu2, t)) <= 1e-6);
        }
    }

    SUBCASE("folds stay normalized") {
        for (std::size_t n = 1; n <= 5; ++n)
            CHECK(std::abs(folds[n - 1].total() - 1.0) <= 1e-6);
    }

    SUBCASE("transforms of the folds equal ftilde^n") {
        for (double s : {1.0, 2.5}) {
            const Complex ft = laplace(kind, Complex(s, 0.0));
            for (std::size_t n = 1; n <= 5; ++n) {
                const double from_grid = tabulated_transform(folds[n - 1], s);
                const double closed = std::pow(ft.real(), static_cast<double>(n));
                CHECK(std::abs(from_grid - closed) <= 1e-6);
            }
        }
    }
}

TEST_CASE("two routes to P_T(n) agree") {
    const RateParams p(2.0, 1.0);
    const DistributionKind kind = IdealCycle{p};
    const double h = 0.0025;
    std::vector<TabulatedDensity> folds;
    for (std::size_t n = 1; n <= 6; ++n) folds.push_back(convolve_oracle(kind, n, h, 16.0));
    double worst = 0.0;
    for (double T : {2.0, 5.0, 10.0, 15.0}) {
        for (std::size_t n = 0; n <= 5; ++n) {
            const double k_n = n == 0 ? 1.0 : folds[n - 1].integral_to(T);
            const double k_n1 = folds[n].integral_to(T);
            const double direct =
                invert([&](Complex s) { return counting_prob_transform(n, s, kind); }, T);
            worst = std::max(worst, std::abs(direct - (k_n - k_n1)));
        }
    }
    CHECK(worst <= 2e-5);
}
