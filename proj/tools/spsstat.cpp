// Command-line front end: figure sweeps as CSV, counting-distribution dumps,
// saturation curves, simulation runs, and the cross-route validation suite.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sps/analytics.hpp"
#include "sps/inversion.hpp"
#include "sps/model.hpp"
#include "sps/simulate.hpp"
#include "sps/validate.hpp"

namespace {

constexpr int kExitInvalidArgs = 2;
constexpr int kExitNumericalFailure = 3;
constexpr int kExitValidationFailure = 4;

// Shortest round-trip decimal representation.
std::string fmt_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Write-temp-then-rename so a failure never leaves a partial output file.
void write_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << contents;
        if (!out.flush()) {
            out.close();
            fs::remove(tmp);
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    fs::rename(tmp, target);
}

struct FanoCurveArgs {
    double eta = 1.0;
    double deadtime_over_tau = 0.0;
    double ratio_min = 1e-3;
    double ratio_max = 1e3;
    std::size_t points = 121;
    double mu2 = 1.0;
    std::string output = "fano_curve.csv";
    bool with_mc = false;
    std::string mode = "model-renewal";
    std::size_t windows = 4000;
    double window = 100.0;
    std::uint64_t seed = 12345;
};

sps::SimMode parse_mode(const std::string& mode) {
    if (mode == "physical") return sps::SimMode::Physical;
    if (mode == "model-renewal") return sps::SimMode::ModelRenewal;
    throw std::invalid_argument("mode must be 'physical' or 'model-renewal'");
}

int run_fano_curve(const FanoCurveArgs& args) {
    const auto grid = sps::log_ratio_grid(args.ratio_min, args.ratio_max, args.points);
    const sps::FanoCurve curve =
        sps::fano_curve(grid, args.mu2, args.eta, args.deadtime_over_tau);

    sps::FanoCurveMc mc;
    if (args.with_mc) {
        const sps::McSweepConfig sweep{sps::WindowSpec(args.window), args.windows, args.seed,
                                       parse_mode(args.mode)};
        mc = sps::fano_curve_mc(grid, args.mu2, args.eta, args.deadtime_over_tau, sweep);
    }

    std::ostringstream out;
    out << "# fano-curve: eta = " << fmt_double(args.eta)
        << ", deadtime_over_tau = " << fmt_double(args.deadtime_over_tau)
        << ", mu2 = " << fmt_double(args.mu2) << "\n";
    if (args.with_mc)
        out << "# mc: mode = " << args.mode << ", window = " << fmt_double(args.window)
            << ", windows = " << args.windows << ", seed = " << args.seed << "\n";
    out << "ratio,eta,deadtime_over_tau,fano_analytic";
    if (args.with_mc) out << ",fano_mc,fano_mc_stderr";
    out << "\n";
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        out << fmt_double(p.ratio) << ',' << fmt_double(args.eta) << ','
            << fmt_double(args.deadtime_over_tau) << ',' << fmt_double(p.fano);
        if (args.with_mc) {
            const auto& q = mc.points[i];
            out << ',' << fmt_double(q.fano.value_or(NAN)) << ','
                << fmt_double(q.fano_stderr.value_or(NAN));
        }
        out << "\n";
    }
    write_atomic(args.output, out.str());
    std::cout << "wrote " << args.output << " (" << curve.points.size() << " points)\n";
    return 0;
}

struct CountingDistArgs {
    double mu1 = 1.0;
    double mu2 = 1.0;
    double eta = 1.0;
    double deadtime_over_tau = 0.0;
    double window = 1.0;
    std::size_t n_max = 40;
    std::string method = "euler";
    std::size_t nodes = 64;
    double precision = 1e-9;
    std::string output = "counting_dist.csv";
};

int run_counting_dist(const CountingDistArgs& args) {
    const sps::RateParams rates(args.mu1, args.mu2);
    const double deadtime = args.deadtime_over_tau / args.mu2;
    const sps::DistributionKind kind = sps::make_kind(rates, args.eta, deadtime);
    sps::InversionConfig cfg;
    cfg.node_count = args.nodes;
    cfg.precision_target = args.precision;
    if (args.method == "talbot")
        cfg.method = sps::InversionMethod::FixedTalbot;
    else if (args.method != "euler")
        throw std::invalid_argument("method must be 'euler' or 'talbot'");

    const sps::WindowSpec w(args.window);
    const sps::CountingDistribution dist = sps::counting_distribution(kind, w, args.n_max, cfg);

    std::ostringstream out;
    out << "# counting-dist: mu1 = " << fmt_double(args.mu1) << ", mu2 = " << fmt_double(args.mu2)
        << ", eta = " << fmt_double(args.eta)
        << ", deadtime_over_tau = " << fmt_double(args.deadtime_over_tau)
        << ", T = " << fmt_double(args.window) << "\n";
    if (!dist.n_max_adequate)
        out << "# warning: n_max below the recommended 3*T/m1; tail mass may be large\n";
    out << "n,prob\n";
    for (std::size_t n = 0; n < dist.probs.size(); ++n)
        out << n << ',' << fmt_double(dist.probs[n]) << "\n";
    out << "# tail_mass = " << fmt_double(dist.tail_mass) << "\n";
    out << "# mean = " << fmt_double(dist.mean())
        << ", variance = " << fmt_double(dist.variance()) << "\n";
    if (args.eta == 1.0 && deadtime == 0.0) {
        const double mean_ref = sps::mean_finite(rates, w);
        const double var_ref = sps::var_finite(rates, w);
        out << "# closed_form_mean = " << fmt_double(mean_ref)
            << ", closed_form_variance = " << fmt_double(var_ref) << "\n";
        out << "# mean_residual_rel = " << fmt_double((dist.mean() - mean_ref) / mean_ref)
            << ", var_residual_rel = " << fmt_double((dist.variance() - var_ref) / var_ref)
            << "\n";
    }
    write_atomic(args.output, out.str());
    std::cout << "wrote " << args.output << " (n = 0.." << args.n_max
              << ", tail_mass = " << fmt_double(dist.tail_mass) << ")\n";
    return 0;
}

struct SaturationArgs {
    double alpha = 1.0;
    double tau = 1.0;
    double power_min = 0.0;
    double power_max = 10.0;
    std::size_t points = 101;
    bool log_spacing = false;
    std::string output = "saturation.csv";
};

int run_saturation(const SaturationArgs& args) {
    if (!(args.power_max > args.power_min))
        throw std::invalid_argument("saturation: need power_max > power_min");
    if (args.points < 2) throw std::invalid_argument("saturation: need at least 2 points");
    if (args.log_spacing && !(args.power_min > 0.0))
        throw std::invalid_argument("saturation: log spacing needs power_min > 0");

    const sps::SaturationResult ref = sps::saturation(
        sps::PumpParams(args.alpha, std::max(args.power_min, args.power_max), args.tau));
    std::ostringstream out;
    out << "# saturation: alpha = " << fmt_double(args.alpha)
        << ", tau = " << fmt_double(args.tau) << "\n";
    out << "# I_sat = " << fmt_double(ref.rate_saturation)
        << ", P_sat = " << fmt_double(ref.power_saturation) << "\n";
    out << "power,rate\n";
    for (std::size_t i = 0; i < args.points; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(args.points - 1);
        const double power =
            args.log_spacing
                ? std::exp(std::log(args.power_min) +
                           u * (std::log(args.power_max) - std::log(args.power_min)))
                : args.power_min + u * (args.power_max - args.power_min);
        const sps::SaturationResult r =
            sps::saturation(sps::PumpParams(args.alpha, power, args.tau));
        out << fmt_double(power) << ',' << fmt_double(r.rate_asymptotic) << "\n";
    }
    write_atomic(args.output, out.str());
    std::cout << "wrote " << args.output << "\n";
    return 0;
}

struct SimulateArgs {
    double mu1 = 1.0;
    double mu2 = 1.0;
    double eta = 1.0;
    double deadtime_over_tau = 0.0;
    double window = 100.0;
    std::size_t windows = 1000;
    std::uint64_t seed = 12345;
    std::string mode = "physical";
    double burn_in = 0.0;
    std::string trace_out;
};

int run_simulate(const SimulateArgs& args) {
    const sps::SimConfig cfg{sps::RateParams(args.mu1, args.mu2),
                             sps::DetectorParams(args.eta, args.deadtime_over_tau / args.mu2),
                             sps::WindowSpec(args.window),
                             args.windows,
                             args.seed,
                             parse_mode(args.mode),
                             args.burn_in};
    if (!cfg.window_adequate())
        std::cerr << "note: window shorter than 10 mean intervals; asymptotic "
                     "comparisons will be biased\n";
    const sps::EventTrace trace = sps::simulate(cfg);
    const sps::WindowStats stats = sps::window_stats(trace, cfg);

    if (!args.trace_out.empty()) {
        std::ostringstream out;
        sps::write_trace(out, trace, cfg);
        write_atomic(args.trace_out, out.str());
    }

    std::cout << "detections = " << stats.total_detections << "\n";
    std::cout << "mean = " << fmt_double(stats.mean)
              << ", variance = " << fmt_double(stats.variance) << "\n";
    if (stats.fano) {
        std::cout << "fano = " << fmt_double(*stats.fano);
        if (stats.fano_stderr) std::cout << " +/- " << fmt_double(*stats.fano_stderr);
        std::cout << "\n";
    } else {
        std::cout << "fano unavailable: " << stats.fano_note << "\n";
    }
    const double analytic = sps::fano_asymptotic(cfg.kind());
    std::cout << "fano_asymptotic (renewal model) = " << fmt_double(analytic) << "\n";
    return 0;
}

int run_validate(bool quick, std::uint64_t seed) {
    const sps::ValidationReport report = sps::run_validation(quick, seed);
    for (const auto& check : report.checks)
        std::cout << (check.passed ? "[PASS] " : "[FAIL] ") << check.name
                  << (check.detail.empty() ? "" : ": " + check.detail) << "\n";
    std::cout << "\n# dead-time comparison (eta = 0.5): physical vs model-renewal vs analytic\n";
    std::cout << "D_over_tau ratio fano_analytic fano_physical stderr_physical fano_renewal "
                 "stderr_renewal renewal_within_3sigma\n";
    for (const auto& row : report.deadtime_table)
        std::cout << fmt_double(row.deadtime_over_tau) << ' ' << fmt_double(row.ratio) << ' '
                  << fmt_double(row.fano_analytic) << ' ' << fmt_double(row.fano_physical) << ' '
                  << fmt_double(row.stderr_physical) << ' ' << fmt_double(row.fano_renewal) << ' '
                  << fmt_double(row.stderr_renewal) << ' ' << (row.renewal_consistent ? "yes" : "no")
                  << "\n";
    if (!report.all_passed()) {
        std::cerr << "validation failed\n";
        return kExitValidationFailure;
    }
    std::cout << "\nall checks passed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Photon-counting statistics of a CW-driven two-level single-photon source"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a config file");

    FanoCurveArgs fano;
    auto* cmd_fano = app.add_subcommand("fano-curve",
                                        "asymptotic Fano factor vs mu1/mu2 as CSV");
    cmd_fano->add_option("--eta", fano.eta, "detection efficiency in (0, 1]");
    cmd_fano->add_option("--deadtime", fano.deadtime_over_tau, "dead time in units of tau");
    cmd_fano->add_option("--ratio-min", fano.ratio_min, "smallest mu1/mu2");
    cmd_fano->add_option("--ratio-max", fano.ratio_max, "largest mu1/mu2");
    cmd_fano->add_option("--points", fano.points, "grid points (log spaced)");
    cmd_fano->add_option("--mu2", fano.mu2, "emission rate (sets the time unit)");
    cmd_fano->add_option("-o,--output", fano.output, "output CSV path");
    cmd_fano->add_flag("--mc", fano.with_mc, "append Monte Carlo columns");
    cmd_fano->add_option("--mode", fano.mode, "simulation mode: physical | model-renewal");
    cmd_fano->add_option("--windows", fano.windows, "windows per Monte Carlo point");
    cmd_fano->add_option("--window", fano.window, "window duration T");
    cmd_fano->add_option("--seed", fano.seed, "master RNG seed")->envname("SPSSTAT_SEED");

    CountingDistArgs dist;
    auto* cmd_dist = app.add_subcommand("counting-dist", "P_T(n) by Laplace inversion as CSV");
    cmd_dist->add_option("--mu1", dist.mu1, "absorption rate");
    cmd_dist->add_option("--mu2", dist.mu2, "emission rate");
    cmd_dist->add_option("--eta", dist.eta, "detection efficiency");
    cmd_dist->add_option("--deadtime", dist.deadtime_over_tau, "dead time in units of tau");
    cmd_dist->add_option("-T,--window", dist.window, "counting window T");
    cmd_dist->add_option("--n-max", dist.n_max, "largest count");
    cmd_dist->add_option("--method", dist.method, "inversion method: euler | talbot");
    cmd_dist->add_option("--nodes", dist.nodes, "inversion node count");
    cmd_dist->add_option("--precision", dist.precision, "inversion precision target");
    cmd_dist->add_option("-o,--output", dist.output, "output CSV path");

    SaturationArgs sat;
    auto* cmd_sat = app.add_subcommand("saturation", "emission rate vs pump power as CSV");
    cmd_sat->add_option("--alpha", sat.alpha, "pump coupling");
    cmd_sat->add_option("--tau", sat.tau, "excited-state lifetime");
    cmd_sat->add_option("--power-min", sat.power_min, "lowest power");
    cmd_sat->add_option("--power-max", sat.power_max, "highest power");
    cmd_sat->add_option("--points", sat.points, "grid points");
    cmd_sat->add_flag("--log", sat.log_spacing, "log-spaced power grid");
    cmd_sat->add_option("-o,--output", sat.output, "output CSV path");

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "run one simulation, print window stats");
    cmd_sim->add_option("--mu1", sim.mu1, "absorption rate");
    cmd_sim->add_option("--mu2", sim.mu2, "emission rate");
    cmd_sim->add_option("--eta", sim.eta, "detection efficiency");
    cmd_sim->add_option("--deadtime", sim.deadtime_over_tau, "dead time in units of tau");
    cmd_sim->add_option("--window", sim.window, "window duration T");
    cmd_sim->add_option("--windows", sim.windows, "window count");
    cmd_sim->add_option("--seed", sim.seed, "RNG seed")->envname("SPSSTAT_SEED");
    cmd_sim->add_option("--mode", sim.mode, "physical | model-renewal");
    cmd_sim->add_option("--burn-in", sim.burn_in, "time simulated before counting");
    cmd_sim->add_option("--trace-out", sim.trace_out, "write detection timestamps here");

    bool quick = false;
    std::uint64_t validate_seed = 12345;
    auto* cmd_val = app.add_subcommand("validate", "run the cross-route validation suite");
    cmd_val->add_flag("--quick", quick, "reduced sample sizes");
    cmd_val->add_option("--seed", validate_seed, "RNG seed")->envname("SPSSTAT_SEED");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalidArgs;
    }

    try {
        if (cmd_fano->parsed()) return run_fano_curve(fano);
        if (cmd_dist->parsed()) return run_counting_dist(dist);
        if (cmd_sat->parsed()) return run_saturation(sat);
        if (cmd_sim->parsed()) return run_simulate(sim);
        if (cmd_val->parsed()) return run_validate(quick, validate_seed);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidArgs;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidArgs;
    } catch (const sps::InversionError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return kExitNumericalFailure;
    }
    return 0;
}
