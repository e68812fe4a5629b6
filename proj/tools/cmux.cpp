// cmux: compressive multiplexing experiment driver.
//
// Subcommands: generate, acquire, recover, phase, sweep, minrate, ingest,
// selftest.  Every command accepts --config <file.json>; individual flags
// override the file values.  Outputs are .cmx artifacts, CSV tables, and
// JSON manifests recording seeds and content hashes so any run can be
// replayed bit for bit.
//
// Exit codes: 0 success (including reported non-convergence), 2 invalid
// config, 3 I/O failure, 4 infeasible search/solve.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cmux/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cmux;

namespace {

constexpr const char* kVersion = "cmux 1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitInfeasible = 4;

struct RunConfig {
    // ensemble
    int M = 4;
    int W = 8;
    int R = 1;
    std::string generator = "gaussian";
    std::string symmetry = "matrix";
    // operator
    std::string kind = "mmux";
    long long omega = 0;  // 0 = pick M*W/2 rounded up to a multiple of 8
    // noise
    double sigma = 0.0;
    // solver
    std::string solver = "lasso";
    double lambda = 0.0;  // 0 = auto
    double noise_bound = 0.0;
    int max_iterations = 2000;
    double step_size = 0.0;  // 0 = auto
    double convergence_tol = 1e-8;
    int rank_cap = 0;  // 0 = none
    // experiment axes
    std::vector<long long> omegas;
    std::vector<int> ranks;
    std::vector<double> snrs;
    std::vector<std::string> solvers;
    double snr = 40.0;
    std::string mode = "noise";  // sweep axis: "noise" or "rate"
    int trials = 50;
    double target = 0.9;
    // ingestion
    std::string input;
    int window_length = 0;
    bool save_windows = false;
    // bookkeeping
    std::uint64_t seed = 0;
    std::string out = ".";
    int threads = 0;  // 0 = CMUX_THREADS env or 1
    bool trace = false;
};

int resolved_threads(const RunConfig& cfg) {
    if (cfg.threads > 0) return cfg.threads;
    if (const char* env = std::getenv("CMUX_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

Generator parse_generator(const std::string& name) {
    if (name == "gaussian") return Generator::GaussianFactors;
    if (name == "time-concentrated") return Generator::TimeConcentrated;
    throw EnsembleError("unknown generator: " + name);
}

SymmetryMode parse_symmetry(const std::string& name) {
    if (name == "matrix") return SymmetryMode::Matrix;
    if (name == "signal") return SymmetryMode::Signal;
    throw EnsembleError("unknown symmetry mode: " + name);
}

EnsembleSpec ensemble_of(const RunConfig& cfg) {
    EnsembleSpec spec;
    spec.num_signals = cfg.M;
    spec.bandwidth = cfg.W;
    spec.rank = cfg.R;
    spec.generator = parse_generator(cfg.generator);
    spec.symmetry = parse_symmetry(cfg.symmetry);
    spec.seed = cfg.seed;
    return spec;
}

SolverConfig solver_of(const RunConfig& cfg) {
    SolverConfig s;
    if (cfg.lambda > 0.0) s.lambda = cfg.lambda;
    s.noise_bound = cfg.noise_bound;
    s.max_iterations = cfg.max_iterations;
    if (cfg.step_size > 0.0) s.step_size = cfg.step_size;
    s.convergence_tol = cfg.convergence_tol;
    if (cfg.rank_cap > 0) s.rank_cap = cfg.rank_cap;
    return s;
}

Eigen::Index default_omega(const RunConfig& cfg) {
    if (cfg.omega > 0) return static_cast<Eigen::Index>(cfg.omega);
    const Eigen::Index half =
        (static_cast<Eigen::Index>(cfg.M) * cfg.W + 1) / 2;
    return (half + 7) / 8 * 8;
}

TrialSpec trial_of(const RunConfig& cfg) {
    TrialSpec t;
    t.ensemble = ensemble_of(cfg);
    t.operator_kind = operator_kind_from_string(cfg.kind);
    t.omega = default_omega(cfg);
    t.noise_sigma = cfg.sigma;
    t.solver_kind = solver_kind_from_string(cfg.solver);
    t.solver = solver_of(cfg);
    t.seed = cfg.seed;
    return t;
}

// Flat JSON config; unknown keys are rejected so typos fail loudly.
void apply_config_file(const std::string& path, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw HarnessError(std::string("config parse error: ") + e.what());
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "M") cfg.M = value.get<int>();
        else if (key == "W") cfg.W = value.get<int>();
        else if (key == "R") cfg.R = value.get<int>();
        else if (key == "generator") cfg.generator = value.get<std::string>();
        else if (key == "symmetry") cfg.symmetry = value.get<std::string>();
        else if (key == "kind") cfg.kind = value.get<std::string>();
        else if (key == "omega") cfg.omega = value.get<long long>();
        else if (key == "sigma") cfg.sigma = value.get<double>();
        else if (key == "solver") cfg.solver = value.get<std::string>();
        else if (key == "lambda") cfg.lambda = value.get<double>();
        else if (key == "noise_bound") cfg.noise_bound = value.get<double>();
        else if (key == "max_iterations")
            cfg.max_iterations = value.get<int>();
        else if (key == "step_size") cfg.step_size = value.get<double>();
        else if (key == "convergence_tol")
            cfg.convergence_tol = value.get<double>();
        else if (key == "rank_cap") cfg.rank_cap = value.get<int>();
        else if (key == "omegas")
            cfg.omegas = value.get<std::vector<long long>>();
        else if (key == "ranks") cfg.ranks = value.get<std::vector<int>>();
        else if (key == "snrs") cfg.snrs = value.get<std::vector<double>>();
        else if (key == "solvers")
            cfg.solvers = value.get<std::vector<std::string>>();
        else if (key == "snr") cfg.snr = value.get<double>();
        else if (key == "mode") cfg.mode = value.get<std::string>();
        else if (key == "trials") cfg.trials = value.get<int>();
        else if (key == "target") cfg.target = value.get<double>();
        else if (key == "input") cfg.input = value.get<std::string>();
        else if (key == "window_length")
            cfg.window_length = value.get<int>();
        else if (key == "save_windows")
            cfg.save_windows = value.get<bool>();
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else if (key == "out") cfg.out = value.get<std::string>();
        else if (key == "threads") cfg.threads = value.get<int>();
        else if (key == "trace") cfg.trace = value.get<bool>();
        else throw HarnessError("unknown config key: " + key);
    }
}

json config_echo(const RunConfig& cfg) {
    json j;
    j["M"] = cfg.M;
    j["W"] = cfg.W;
    j["R"] = cfg.R;
    j["generator"] = cfg.generator;
    j["symmetry"] = cfg.symmetry;
    j["kind"] = cfg.kind;
    j["omega"] = static_cast<long long>(default_omega(cfg));
    j["sigma"] = cfg.sigma;
    j["solver"] = cfg.solver;
    j["seed"] = cfg.seed;
    return j;
}

void write_manifest(const fs::path& path, const std::string& command,
                    const RunConfig& cfg, const json& extra) {
    json j;
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = config_echo(cfg);
    for (const auto& [key, value] : extra.items()) j[key] = value;
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

json hash_entry(const fs::path& file) {
    json j;
    j["file"] = file.filename().string();
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx",
                  static_cast<unsigned long long>(file_content_hash(file)));
    j["fnv1a64"] = buf;
    return j;
}

// Rebuild the measurement operator from on-disk artifacts so acquire and
// recover act on exactly what generate wrote.
MeasurementOperator load_operator(const RunConfig& cfg, const fs::path& dir,
                                  Eigen::Index omega) {
    const OperatorKind kind = operator_kind_from_string(cfg.kind);
    const CMat codes_c = read_cmx(dir / "codes.cmx", magic::kCodes);
    ModulationCodes codes{codes_c.real(), rng::derive(cfg.seed, 2)};
    std::optional<FilterBank> filters;
    if (kind != OperatorKind::MMux)
        filters = FilterBank{read_cmx(dir / "filters.cmx", magic::kFilters),
                             rng::derive(cfg.seed, 2)};
    return MeasurementOperator(kind, cfg.M, cfg.W, omega, std::move(codes),
                               std::move(filters));
}

int cmd_generate(const RunConfig& cfg) {
    EnsembleSpec espec = ensemble_of(cfg);
    espec.validate();
    const Eigen::Index omega = default_omega(cfg);
    if (omega < cfg.W ||
        omega > static_cast<Eigen::Index>(cfg.M) * cfg.W)
        throw HarnessError("generate requires W <= omega <= M*W");

    espec.seed = rng::derive(cfg.seed, 1);
    const CoefficientMatrix C0 = generate_ensemble(espec);
    const MeasurementOperator op =
        make_operator(operator_kind_from_string(cfg.kind), cfg.M, cfg.W,
                      omega, rng::derive(cfg.seed, 2));

    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    write_cmx(dir / "ensemble.cmx", C0.entries);
    write_cmx(dir / "codes.cmx", op.codes().signs.cast<Complex>(),
              magic::kCodes);
    std::vector<fs::path> files{dir / "ensemble.cmx", dir / "codes.cmx"};
    if (op.kind() != OperatorKind::MMux) {
        write_cmx(dir / "filters.cmx", op.filters().spectra, magic::kFilters);
        files.push_back(dir / "filters.cmx");
    }

    json extra;
    extra["ensemble_seed"] = espec.seed;
    extra["operator_seed"] = rng::derive(cfg.seed, 2);
    extra["files"] = json::array();
    for (const auto& f : files) extra["files"].push_back(hash_entry(f));
    write_manifest(dir / "manifest.json", "generate", cfg, extra);
    std::cout << "generate: wrote " << files.size() << " artifacts + manifest to "
              << dir.string() << "\n";
    return kExitOk;
}

int cmd_acquire(const RunConfig& cfg) {
    const fs::path dir(cfg.out);
    const CMat C0 = read_cmx(dir / "ensemble.cmx");
    if (C0.rows() != cfg.M || C0.cols() != cfg.W)
        throw HarnessError("ensemble.cmx dims do not match config (M, W)");
    const Eigen::Index omega = default_omega(cfg);
    const MeasurementOperator op = load_operator(cfg, dir, omega);

    SampleVector y = op.apply(C0);
    const double max_imag =
        y.values.size() ? y.values.imag().cwiseAbs().maxCoeff() : 0.0;
    const bool real_samples = max_imag <= 1e-9 * std::max(y.values.norm(), 1e-300);
    if (cfg.sigma > 0.0) y = add_noise(y, cfg.sigma, rng::derive(cfg.seed, 3));

    write_cmx(dir / "samples.cmx", y.values, magic::kSamples);

    json extra;
    extra["noise_seed"] = rng::derive(cfg.seed, 3);
    extra["sigma"] = cfg.sigma;
    extra["noise_level"] = y.noise_level ? *y.noise_level : 0.0;
    extra["real_samples"] = real_samples;
    extra["max_imag"] = max_imag;
    extra["files"] = json::array({hash_entry(dir / "samples.cmx")});
    write_manifest(dir / "manifest_acquire.json", "acquire", cfg, extra);
    std::cout << "acquire: wrote " << omega << " samples ("
              << (real_samples ? "real" : "complex") << ") to "
              << (dir / "samples.cmx").string() << "\n";
    return kExitOk;
}

int cmd_recover(const RunConfig& cfg) {
    const fs::path dir(cfg.out);
    const CVec y_vals = read_cmx(dir / "samples.cmx", magic::kSamples).col(0);
    const Eigen::Index omega = y_vals.size();
    const MeasurementOperator op = load_operator(cfg, dir, omega);

    SampleVector y{y_vals, std::nullopt};
    const fs::path acq = dir / "manifest_acquire.json";
    if (fs::exists(acq)) {
        std::ifstream in(acq);
        json j;
        in >> j;
        if (j.contains("noise_level") && j["noise_level"].get<double>() > 0.0)
            y.noise_level = j["noise_level"].get<double>();
    }

    const SolverKind kind = solver_kind_from_string(cfg.solver);
    SolverReport report;
    switch (kind) {
        case SolverKind::Lasso: {
            SolverConfig config = solver_of(cfg);
            if (!config.lambda && config.noise_bound == 0.0)
                config.noise_bound = y.noise_level
                                         ? *y.noise_level
                                         : 1e-6 * y.values.norm();
            report = matrix_lasso(op, y, config);
            break;
        }
        case SolverKind::Klt: {
            const double lambda =
                cfg.lambda > 0.0
                    ? cfg.lambda
                    : auto_lambda(op, y, LambdaRule::KltCentered,
                                  rng::derive(cfg.seed, 4));
            report = klt_estimate(op, y, lambda);
            break;
        }
        case SolverKind::LeastSquares: {
            const CMat C0 = read_cmx(dir / "ensemble.cmx");
            const SvdTriple svd = truncated_svd(
                CoefficientMatrix{C0, SymmetryMode::Matrix}, cfg.R);
            report = least_squares_known_mixing(
                op, MixingMatrix{svd.left_vectors}, y, solver_of(cfg));
            break;
        }
    }

    write_cmx(dir / "solution.cmx", report.solution.entries);
    write_solver_report(dir / "report.json", report, cfg.trace);

    json extra;
    extra["converged"] = report.converged;
    extra["final_residual"] = report.final_residual;
    if (fs::exists(dir / "ensemble.cmx")) {
        const CMat C0 = read_cmx(dir / "ensemble.cmx");
        if (C0.rows() == report.solution.entries.rows() &&
            C0.cols() == report.solution.entries.cols() && C0.norm() > 0.0)
            extra["relative_error"] =
                (report.solution.entries - C0).norm() / C0.norm();
    }
    extra["files"] = json::array(
        {hash_entry(dir / "solution.cmx"), hash_entry(dir / "report.json")});
    write_manifest(dir / "manifest_recover.json", "recover", cfg, extra);
    std::cout << "recover: " << (report.converged ? "converged" : "stopped")
              << " after " << report.iterations
              << " iterations, residual " << format_double(report.final_residual)
              << "\n";
    return kExitOk;  // non-convergence is reported, not fatal
}

void write_trials_csv(const fs::path& path,
                      const std::vector<std::string>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "M,W,R,omega,kind,sigma,seed,rel_error,success,eta,gamma\n";
    for (const auto& r : rows) out << r << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

int cmd_phase(const RunConfig& cfg) {
    TrialSpec base = trial_of(cfg);
    std::vector<Eigen::Index> omegas;
    for (long long o : cfg.omegas) omegas.push_back(o);
    if (omegas.empty()) omegas.push_back(base.omega);
    std::vector<int> ranks = cfg.ranks;
    if (ranks.empty()) ranks.push_back(cfg.R);
    if (cfg.trials < 1) throw HarnessError("trials must be >= 1");

    PhaseGrid grid;
    grid.omegas = omegas;
    grid.ranks = ranks;
    grid.trials_per_cell = cfg.trials;
    grid.base_seed = cfg.seed;
    grid.success_rate.resize(static_cast<Eigen::Index>(ranks.size()),
                             static_cast<Eigen::Index>(omegas.size()));

    std::vector<std::string> rows;
    for (std::size_t ri = 0; ri < ranks.size(); ++ri)
        for (std::size_t oi = 0; oi < omegas.size(); ++oi) {
            const std::uint64_t cell = ri * omegas.size() + oi;
            int ok = 0;
            for (int t = 0; t < cfg.trials; ++t) {
                TrialSpec spec = base;
                spec.ensemble.rank = ranks[ri];
                spec.omega = omegas[oi];
                spec.seed = trial_seed(cfg.seed, cell, t);
                const Metrics m = run_trial(spec);
                ok += m.success ? 1 : 0;
                rows.push_back(
                    std::to_string(cfg.M) + "," + std::to_string(cfg.W) + "," +
                    std::to_string(ranks[ri]) + "," +
                    std::to_string(omegas[oi]) + "," + cfg.kind + "," +
                    format_double(cfg.sigma) + "," +
                    std::to_string(spec.seed) + "," +
                    format_double(m.relative_error) + "," +
                    (m.success ? "1" : "0") + "," +
                    format_double(m.efficiency) + "," +
                    format_double(m.compression));
            }
            grid.success_rate(static_cast<Eigen::Index>(ri),
                              static_cast<Eigen::Index>(oi)) =
                static_cast<double>(ok) / cfg.trials;
        }

    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    write_phase_grid_csv(dir / "phase_grid.csv", grid);
    write_trials_csv(dir / "phase_trials.csv", rows);
    json extra;
    extra["files"] = json::array({hash_entry(dir / "phase_grid.csv"),
                                  hash_entry(dir / "phase_trials.csv")});
    write_manifest(dir / "manifest_phase.json", "phase", cfg, extra);
    std::cout << "phase: " << ranks.size() << "x" << omegas.size()
              << " grid, " << cfg.trials << " trials/cell -> "
              << (dir / "phase_grid.csv").string() << "\n";
    return kExitOk;
}

int cmd_sweep(const RunConfig& cfg) {
    TrialSpec base = trial_of(cfg);
    std::vector<SolverKind> solvers;
    for (const auto& s : cfg.solvers)
        solvers.push_back(solver_kind_from_string(s));
    if (solvers.empty()) solvers.push_back(base.solver_kind);

    std::vector<SweepRow> rows;
    if (cfg.mode == "noise") {
        std::vector<double> snrs = cfg.snrs;
        if (snrs.empty()) snrs = {10.0, 20.0, 30.0, 40.0};
        rows = noise_sweep(base, snrs, solvers, cfg.trials, cfg.seed,
                           resolved_threads(cfg));
    } else if (cfg.mode == "rate") {
        std::vector<Eigen::Index> omegas;
        for (long long o : cfg.omegas) omegas.push_back(o);
        if (omegas.empty()) throw HarnessError("rate sweep needs omegas");
        rows = rate_sweep(base, cfg.snr, omegas, solvers, cfg.trials,
                          cfg.seed, resolved_threads(cfg));
    } else {
        throw HarnessError("sweep mode must be 'noise' or 'rate'");
    }

    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    write_sweep_csv(dir / "sweep.csv", rows);
    {
        std::ofstream out(dir / "sweep_trials.csv");
        if (!out) throw IoError("cannot open for writing: sweep_trials.csv");
        out << "snr_db,omega,solver,trial,rel_error\n";
        for (const auto& r : rows)
            for (std::size_t t = 0; t < r.trial_errors.size(); ++t)
                out << format_double(r.snr_db) << "," << r.omega << ","
                    << to_string(r.solver) << "," << t << ","
                    << format_double(r.trial_errors[t]) << "\n";
        if (!out) throw IoError("write failed: sweep_trials.csv");
    }
    json extra;
    extra["files"] = json::array({hash_entry(dir / "sweep.csv"),
                                  hash_entry(dir / "sweep_trials.csv")});
    write_manifest(dir / "manifest_sweep.json", "sweep", cfg, extra);
    std::cout << "sweep: " << rows.size() << " rows -> "
              << (dir / "sweep.csv").string() << "\n";
    return kExitOk;
}

int cmd_minrate(const RunConfig& cfg) {
    TrialSpec base = trial_of(cfg);
    std::vector<int> ranks = cfg.ranks;
    if (ranks.empty()) ranks.push_back(cfg.R);
    if (cfg.target <= 0.0 || cfg.target >= 1.0)
        throw HarnessError("target success must be in (0, 1)");

    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    std::ofstream out(dir / "minrate.csv");
    if (!out) throw IoError("cannot open for writing: minrate.csv");
    out << "rank,omega_star,success_rate,efficiency\n";
    for (int r : ranks) {
        TrialSpec t = base;
        t.ensemble.rank = r;
        const MinRateResult res = min_rate_search(
            t, cfg.target, cfg.trials, cfg.seed, resolved_threads(cfg));
        const double eff =
            static_cast<double>(r) * (cfg.W + cfg.M - r) / res.omega_star;
        out << r << "," << res.omega_star << ","
            << format_double(res.success_rate) << "," << format_double(eff)
            << "\n";
        std::cout << "minrate: R=" << r << " omega*=" << res.omega_star
                  << " rate=" << format_double(res.success_rate) << "\n";
    }
    out.close();
    json extra;
    extra["files"] = json::array({hash_entry(dir / "minrate.csv")});
    write_manifest(dir / "manifest_minrate.json", "minrate", cfg, extra);
    return kExitOk;
}

int cmd_ingest(const RunConfig& cfg) {
    if (cfg.input.empty()) throw HarnessError("ingest needs --input <csv>");
    if (cfg.window_length < 1)
        throw HarnessError("ingest needs --window-length >= 1");
    std::vector<int> ranks = cfg.ranks;
    if (ranks.empty()) ranks = {1, 2, 3, 4};

    const IngestResult res =
        ingest_recording(fs::path(cfg.input), cfg.window_length, cfg.W, ranks);

    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    std::ofstream out(dir / "rank_study.csv");
    if (!out) throw IoError("cannot open for writing: rank_study.csv");
    out << "window,rank,rel_error\n";
    for (const auto& row : res.rank_study)
        out << row.window_index << "," << row.rank << ","
            << format_double(row.relative_error) << "\n";
    out.close();

    json extra;
    extra["windows"] = res.windows.size();
    extra["files"] = json::array({hash_entry(dir / "rank_study.csv")});
    if (cfg.save_windows) {
        for (std::size_t w = 0; w < res.windows.size(); ++w) {
            char name[32];
            std::snprintf(name, sizeof(name), "window_%03zu.cmx", w);
            write_cmx(dir / name, res.windows[w].entries);
            extra["files"].push_back(hash_entry(dir / name));
        }
    }
    write_manifest(dir / "manifest_ingest.json", "ingest", cfg, extra);
    std::cout << "ingest: " << res.windows.size() << " windows -> "
              << (dir / "rank_study.csv").string() << "\n";
    return kExitOk;
}

int cmd_selftest() {
    int failures = 0;
    auto check = [&](bool ok, const char* what) {
        std::cout << (ok ? "  ok  " : " FAIL ") << what << "\n";
        if (!ok) ++failures;
    };

    // fast operator paths against dense materialization
    for (auto kind : {OperatorKind::MMux, OperatorKind::FMMux,
                      OperatorKind::FMMuxSwapped}) {
        const auto op = make_operator(kind, 3, 5, 8, 11);
        const CMat T = op.materialize_dense();
        CMat C(3, 5);
        for (int m = 0; m < 3; ++m)
            for (int w = 0; w < 5; ++w)
                C(m, w) = Complex(rng::gaussian(1, 0, m * 5 + w),
                                  rng::gaussian(1, 1, m * 5 + w));
        CVec v(15);
        for (int m = 0; m < 3; ++m)
            for (int w = 0; w < 5; ++w) v[m * 5 + w] = C(m, w);
        const double err = (op.apply(C).values - T * v).norm() /
                           std::max((T * v).norm(), 1e-300);
        check(err < 1e-10,
              (std::string("dense agreement, ") + to_string(kind)).c_str());

        CVec y(8);
        for (int n = 0; n < 8; ++n)
            y[n] = Complex(rng::gaussian(2, 0, n), rng::gaussian(2, 1, n));
        const Complex lhs = (op.apply(C).values.adjoint() * y).value();
        const Complex rhs = (op.adjoint(y).conjugate().cwiseProduct(C)).sum();
        check(std::abs(lhs - std::conj(rhs)) <= 1e-10 * C.norm() * y.norm(),
              (std::string("adjoint identity, ") + to_string(kind)).c_str());
    }

    // artifact round trip
    try {
        const fs::path p =
            fs::temp_directory_path() / "cmux_selftest_roundtrip.cmx";
        CMat m(2, 3);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 3; ++c)
                m(r, c) = Complex(rng::gaussian(3, 0, r * 3 + c),
                                  rng::gaussian(3, 1, r * 3 + c));
        write_cmx(p, m);
        check(read_cmx(p) == m, "cmx round trip");
        fs::remove(p);
    } catch (const std::exception&) {
        check(false, "cmx round trip");
    }

    // deterministic replay of a full trial
    TrialSpec t;
    t.ensemble.num_signals = 4;
    t.ensemble.bandwidth = 8;
    t.ensemble.rank = 1;
    t.omega = 16;
    t.solver_kind = SolverKind::LeastSquares;
    t.seed = 5;
    const Metrics a = run_trial(t);
    const Metrics b = run_trial(t);
    check(a.relative_error == b.relative_error, "deterministic trial replay");
    check(a.success, "known-mixing trial succeeds");

    std::cout << (failures == 0 ? "selftest ok" : "selftest FAILED") << "\n";
    return failures == 0 ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;

    // Load --config before CLI parsing so explicit flags win.
    std::string config_path;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
    try {
        if (!config_path.empty()) apply_config_file(config_path, cfg);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    CLI::App app{"compressive multiplexing simulation and recovery toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    std::string config_dummy;
    app.add_option("--config", config_dummy,
                   "JSON config file; flags override its values");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_dummy, "JSON config file");
        sub->add_option("-M,--signals", cfg.M, "number of signals M");
        sub->add_option("-W,--bandwidth", cfg.W, "coefficients per signal W");
        sub->add_option("-R,--rank", cfg.R, "ensemble rank R");
        sub->add_option("--generator", cfg.generator,
                        "gaussian | time-concentrated");
        sub->add_option("--symmetry", cfg.symmetry, "matrix | signal");
        sub->add_option("--kind", cfg.kind, "mmux | fmmux | fmmux-swapped");
        sub->add_option("--omega", cfg.omega, "samples per window (0 = auto)");
        sub->add_option("--sigma", cfg.sigma, "noise standard deviation");
        sub->add_option("--solver", cfg.solver,
                        "lasso | klt | least-squares");
        sub->add_option("--lambda", cfg.lambda, "penalty (0 = auto)");
        sub->add_option("--noise-bound", cfg.noise_bound,
                        "residual target eta");
        sub->add_option("--max-iterations", cfg.max_iterations,
                        "iteration cap per stage");
        sub->add_option("--step-size", cfg.step_size, "gradient step (0 = auto)");
        sub->add_option("--convergence-tol", cfg.convergence_tol,
                        "relative objective tolerance");
        sub->add_option("--rank-cap", cfg.rank_cap, "solution rank cap (0 = none)");
        sub->add_option("--seed", cfg.seed, "base seed");
        sub->add_option("--out", cfg.out, "output directory");
        sub->add_option("--threads", cfg.threads,
                        "worker threads (0 = CMUX_THREADS env or 1)");
        sub->add_flag("--trace", cfg.trace, "include objective trace in reports");
        return sub;
    };

    int exit_code = kExitOk;
    auto run = [&](auto&& fn) {
        return [&, fn] {
            try {
                exit_code = fn();
            } catch (const IoError& e) {
                std::cerr << "error: " << e.what() << "\n";
                exit_code = kExitIo;
            } catch (const SolverError& e) {
                std::cerr << "error: " << e.what() << "\n";
                exit_code = kExitInfeasible;
            } catch (const HarnessError& e) {
                // validation problems are config errors; exhausted searches
                // are infeasibility
                const std::string what = e.what();
                std::cerr << "error: " << what << "\n";
                exit_code = what.find("exhausted") != std::string::npos
                                ? kExitInfeasible
                                : kExitConfig;
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                exit_code = kExitConfig;
            }
        };
    };

    auto* generate = add_common(app.add_subcommand(
        "generate", "synthesize an ensemble and operator artifacts"));
    generate->callback(run([&] { return cmd_generate(cfg); }));

    auto* acquire = add_common(app.add_subcommand(
        "acquire", "apply the operator to the stored ensemble"));
    acquire->callback(run([&] { return cmd_acquire(cfg); }));

    auto* recover = add_common(app.add_subcommand(
        "recover", "solve for the coefficient matrix from samples"));
    recover->callback(run([&] { return cmd_recover(cfg); }));

    auto* phase = add_common(app.add_subcommand(
        "phase", "success-rate grid over (rank, omega)"));
    phase->add_option("--omegas", cfg.omegas, "omega grid values");
    phase->add_option("--ranks", cfg.ranks, "rank grid values");
    phase->add_option("--trials", cfg.trials, "trials per cell");
    phase->callback(run([&] { return cmd_phase(cfg); }));

    auto* sweep = add_common(
        app.add_subcommand("sweep", "error sweeps over SNR or omega"));
    sweep->add_option("--mode", cfg.mode, "noise | rate");
    sweep->add_option("--snrs", cfg.snrs, "SNR grid in dB (noise mode)");
    sweep->add_option("--snr", cfg.snr, "fixed SNR in dB (rate mode)");
    sweep->add_option("--omegas", cfg.omegas, "omega grid (rate mode)");
    sweep->add_option("--solvers", cfg.solvers, "solver kinds to compare");
    sweep->add_option("--trials", cfg.trials, "trials per point");
    sweep->callback(run([&] { return cmd_sweep(cfg); }));

    auto* minrate = add_common(app.add_subcommand(
        "minrate", "smallest omega meeting a success-rate target"));
    minrate->add_option("--ranks", cfg.ranks, "ranks to search");
    minrate->add_option("--target", cfg.target, "target success rate");
    minrate->add_option("--trials", cfg.trials, "trials per omega");
    minrate->callback(run([&] { return cmd_minrate(cfg); }));

    auto* ingest = add_common(app.add_subcommand(
        "ingest", "windowed rank study of a recorded multichannel CSV"));
    ingest->add_option("--input", cfg.input, "recording CSV (samples x channels)");
    ingest->add_option("--window-length", cfg.window_length,
                       "samples per window");
    ingest->add_option("--ranks", cfg.ranks, "ranks for the error study");
    ingest->add_flag("--save-windows", cfg.save_windows,
                     "write per-window coefficient matrices");
    ingest->callback(run([&] { return cmd_ingest(cfg); }));

    auto* selftest = app.add_subcommand(
        "selftest", "quick built-in verification of the core pipeline");
    selftest->callback(run([&] { return cmd_selftest(); }));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }
    return exit_code;
}
