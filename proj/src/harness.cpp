#include "cmux/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>

namespace cmux {

std::string to_string(SolverKind kind) {
    switch (kind) {
        case SolverKind::Lasso: return "lasso";
        case SolverKind::Klt: return "klt";
        case SolverKind::LeastSquares: return "least-squares";
    }
    return "?";
}

SolverKind solver_kind_from_string(const std::string& name) {
    if (name == "lasso") return SolverKind::Lasso;
    if (name == "klt") return SolverKind::Klt;
    if (name == "least-squares") return SolverKind::LeastSquares;
    throw HarnessError("unknown solver kind: " + name);
}

void TrialSpec::validate() const {
    ensemble.validate();
    const Eigen::Index MW = static_cast<Eigen::Index>(ensemble.num_signals) *
                            ensemble.bandwidth;
    if (omega < ensemble.bandwidth || omega > MW)
        throw HarnessError("trial requires W <= omega <= M*W");
    if (noise_sigma < 0.0) throw HarnessError("noise sigma must be nonnegative");
}

namespace {

// Run one fully specified trial; solver failures count as unsuccessful
// trials, never as exceptions.
Metrics run_trial_impl(const TrialSpec& t, double success_threshold) {
    const int M = t.ensemble.num_signals, W = t.ensemble.bandwidth,
              R = t.ensemble.rank;

    EnsembleSpec espec = t.ensemble;
    espec.seed = rng::derive(t.seed, 1);
    const CoefficientMatrix C0 = generate_ensemble(espec);
    const MeasurementOperator op = make_operator(
        t.operator_kind, M, W, t.omega, rng::derive(t.seed, 2));

    SampleVector y = op.apply(C0);
    if (t.noise_sigma > 0.0)
        y = add_noise(y, t.noise_sigma, rng::derive(t.seed, 3));

    double rel_error = std::numeric_limits<double>::infinity();
    try {
        SolverReport report;
        switch (t.solver_kind) {
            case SolverKind::Lasso: {
                SolverConfig config = t.solver;
                if (!config.lambda && config.noise_bound == 0.0)
                    config.noise_bound =
                        t.noise_sigma > 0.0 && y.noise_level
                            ? *y.noise_level
                            : 1e-6 * y.values.norm();
                report = matrix_lasso(op, y, config);
                break;
            }
            case SolverKind::Klt: {
                const double lambda =
                    t.solver.lambda
                        ? *t.solver.lambda
                        : auto_lambda(op, y, LambdaRule::KltCentered,
                                      rng::derive(t.seed, 4));
                report = klt_estimate(op, y, lambda);
                break;
            }
            case SolverKind::LeastSquares: {
                // Known-structure baseline: the mixing is taken from the
                // ground-truth column space.
                const SvdTriple svd = truncated_svd(C0, R);
                report = least_squares_known_mixing(
                    op, MixingMatrix{svd.left_vectors}, y, t.solver);
                break;
            }
        }
        const double denom = C0.entries.norm();
        rel_error = denom > 0.0
                        ? (report.solution.entries - C0.entries).norm() / denom
                        : 0.0;
    } catch (const SolverError&) {
        // infeasible lambda search or ill-posed system: recorded as failure
    }

    Metrics m;
    m.efficiency = static_cast<double>(R) * (W + M - R) /
                   static_cast<double>(t.omega);
    m.compression = static_cast<double>(t.omega) /
                    (static_cast<double>(M) * W);
    m.oversampling = 1.0 / m.efficiency;
    m.relative_error = rel_error;
    m.success = rel_error <= success_threshold;
    return m;
}

std::vector<Metrics> run_many(const std::vector<TrialSpec>& specs,
                              double success_threshold, int threads) {
    std::vector<Metrics> results(specs.size());
    threads = std::max(1, threads);
    if (threads == 1 || specs.size() <= 1) {
        for (std::size_t i = 0; i < specs.size(); ++i)
            results[i] = run_trial_impl(specs[i], success_threshold);
        return results;
    }
    std::vector<std::future<void>> workers;
    const std::size_t n = specs.size();
    for (int w = 0; w < threads; ++w)
        workers.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < n; i += threads)
                results[i] = run_trial_impl(specs[i], success_threshold);
        }));
    for (auto& f : workers) f.get();
    return results;
}

double success_rate_at(const TrialSpec& base, Eigen::Index omega, int trials,
                       std::uint64_t base_seed, int threads) {
    std::vector<TrialSpec> specs;
    specs.reserve(trials);
    for (int i = 0; i < trials; ++i) {
        TrialSpec t = base;
        t.omega = omega;
        t.seed = trial_seed(base_seed, static_cast<std::uint64_t>(omega), i);
        specs.push_back(t);
    }
    const auto metrics = run_many(specs, kSuccessThreshold, threads);
    int ok = 0;
    for (const auto& m : metrics) ok += m.success ? 1 : 0;
    return static_cast<double>(ok) / trials;
}

Eigen::Index round_up8(Eigen::Index v) { return (v + 7) / 8 * 8; }

}  // namespace

Metrics run_trial(const TrialSpec& t, double success_threshold) {
    t.validate();
    return run_trial_impl(t, success_threshold);
}

PhaseGrid phase_transition(const TrialSpec& base,
                           const std::vector<Eigen::Index>& omegas,
                           const std::vector<int>& ranks, int trials_per_cell,
                           std::uint64_t base_seed, int threads) {
    if (omegas.empty() || ranks.empty())
        throw HarnessError("phase grid axes must be nonempty");
    PhaseGrid grid;
    grid.omegas = omegas;
    grid.ranks = ranks;
    grid.trials_per_cell = trials_per_cell;
    grid.base_seed = base_seed;
    grid.success_rate.resize(static_cast<Eigen::Index>(ranks.size()),
                             static_cast<Eigen::Index>(omegas.size()));

    std::vector<TrialSpec> specs;
    specs.reserve(ranks.size() * omegas.size() * trials_per_cell);
    for (std::size_t ri = 0; ri < ranks.size(); ++ri)
        for (std::size_t oi = 0; oi < omegas.size(); ++oi) {
            const std::uint64_t cell = ri * omegas.size() + oi;
            for (int t = 0; t < trials_per_cell; ++t) {
                TrialSpec spec = base;
                spec.ensemble.rank = ranks[ri];
                spec.omega = omegas[oi];
                spec.seed = trial_seed(base_seed, cell, t);
                spec.validate();
                specs.push_back(spec);
            }
        }
    const auto metrics = run_many(specs, kSuccessThreshold, threads);
    std::size_t idx = 0;
    for (std::size_t ri = 0; ri < ranks.size(); ++ri)
        for (std::size_t oi = 0; oi < omegas.size(); ++oi) {
            int ok = 0;
            for (int t = 0; t < trials_per_cell; ++t)
                ok += metrics[idx++].success ? 1 : 0;
            grid.success_rate(static_cast<Eigen::Index>(ri),
                              static_cast<Eigen::Index>(oi)) =
                static_cast<double>(ok) / trials_per_cell;
        }
    return grid;
}

MinRateResult min_rate_search(const TrialSpec& base, double target_success,
                              int trials, std::uint64_t base_seed,
                              int threads) {
    if (target_success <= 0.0 || target_success >= 1.0)
        throw HarnessError("target success must be in (0, 1)");
    const int M = base.ensemble.num_signals, W = base.ensemble.bandwidth,
              R = base.ensemble.rank;
    const Eigen::Index nyquist = static_cast<Eigen::Index>(M) * W;
    const Eigen::Index lo_bound = std::max<Eigen::Index>(
        W, static_cast<Eigen::Index>(R) * (W + M - R));

    auto rate = [&](Eigen::Index omega) {
        return success_rate_at(base, omega, trials, base_seed, threads);
    };

    // Geometric climb until the target is met.
    Eigen::Index lo = 0;  // largest known-failing omega (0 = none)
    Eigen::Index omega = std::min(nyquist, round_up8(lo_bound));
    double omega_rate = rate(omega);
    while (omega_rate < target_success) {
        if (omega >= nyquist)
            throw HarnessError("min-rate search range exhausted");
        lo = omega;
        omega = std::min(nyquist,
                         round_up8(static_cast<Eigen::Index>(
                             std::ceil(static_cast<double>(omega) * 1.5))));
        omega_rate = rate(omega);
    }

    // Bisect down to grid resolution (multiples of 8).
    Eigen::Index hi = omega;
    double hi_rate = omega_rate;
    if (lo == 0) lo = std::max<Eigen::Index>(W, 8);
    while (hi - lo > 8) {
        const Eigen::Index mid = round_up8((lo + hi) / 2);
        if (mid >= hi || mid <= lo) break;
        const double r = rate(mid);
        if (r >= target_success) {
            hi = mid;
            hi_rate = r;
        } else {
            lo = mid;
        }
    }
    return MinRateResult{R, hi, hi_rate};
}

namespace {

struct Instance {
    MeasurementOperator op;
    CoefficientMatrix C0;
    SampleVector y;
    std::uint64_t seed;
};

Instance make_noisy_instance(const TrialSpec& base, Eigen::Index omega,
                             double snr_db, std::uint64_t seed) {
    EnsembleSpec espec = base.ensemble;
    espec.seed = rng::derive(seed, 1);
    CoefficientMatrix C0 = generate_ensemble(espec);
    MeasurementOperator op = make_operator(base.operator_kind,
                                           base.ensemble.num_signals,
                                           base.ensemble.bandwidth, omega,
                                           rng::derive(seed, 2));
    SampleVector clean = op.apply(C0);
    const double sigma = snr_to_sigma(clean.values, snr_db);
    SampleVector y = sigma > 0.0
                         ? add_noise(clean, sigma, rng::derive(seed, 3))
                         : clean;
    return Instance{std::move(op), std::move(C0), std::move(y), seed};
}

double solve_relative_error(const Instance& inst, SolverKind kind,
                            const SolverConfig& base_config, int rank) {
    try {
        SolverReport report;
        switch (kind) {
            case SolverKind::Lasso: {
                SolverConfig config = base_config;
                if (!config.lambda && config.noise_bound == 0.0)
                    config.noise_bound =
                        inst.y.noise_level && *inst.y.noise_level > 0.0
                            ? *inst.y.noise_level
                            : 1e-6 * inst.y.values.norm();
                report = matrix_lasso(inst.op, inst.y, config);
                break;
            }
            case SolverKind::Klt: {
                const double lambda =
                    base_config.lambda
                        ? *base_config.lambda
                        : auto_lambda(inst.op, inst.y, LambdaRule::KltCentered,
                                      rng::derive(inst.seed, 4));
                report = klt_estimate(inst.op, inst.y, lambda);
                break;
            }
            case SolverKind::LeastSquares: {
                const SvdTriple svd = truncated_svd(inst.C0, rank);
                report = least_squares_known_mixing(
                    inst.op, MixingMatrix{svd.left_vectors}, inst.y,
                    base_config);
                break;
            }
        }
        return (report.solution.entries - inst.C0.entries).norm() /
               inst.C0.entries.norm();
    } catch (const SolverError&) {
        return std::numeric_limits<double>::infinity();
    }
}

std::vector<SweepRow> sweep_impl(const TrialSpec& base,
                                 const std::vector<double>& snrs,
                                 const std::vector<Eigen::Index>& omegas,
                                 const std::vector<SolverKind>& solvers,
                                 int trials, std::uint64_t base_seed,
                                 int threads) {
    if ((snrs.empty() && omegas.empty()) || solvers.empty() || trials < 1)
        throw HarnessError("sweep needs nonempty axes and trials >= 1");

    struct Point {
        double snr;
        Eigen::Index omega;
    };
    std::vector<Point> points;
    if (omegas.empty()) {
        for (double s : snrs) points.push_back({s, base.omega});
    } else {
        for (Eigen::Index o : omegas) points.push_back({snrs[0], o});
    }

    std::vector<SweepRow> rows;
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        // Per-trial errors for every solver on the same instance (paired).
        std::vector<std::vector<double>> errs(
            solvers.size(), std::vector<double>(trials, 0.0));
        std::vector<std::future<void>> workers;
        const int nthreads = std::max(1, threads);
        auto work = [&](int w) {
            for (int t = w; t < trials; t += nthreads) {
                const Instance inst = make_noisy_instance(
                    base, points[pi].omega, points[pi].snr,
                    trial_seed(base_seed, pi, t));
                for (std::size_t si = 0; si < solvers.size(); ++si)
                    errs[si][t] = solve_relative_error(
                        inst, solvers[si], base.solver, base.ensemble.rank);
            }
        };
        if (nthreads == 1) {
            work(0);
        } else {
            for (int w = 0; w < nthreads; ++w)
                workers.push_back(std::async(std::launch::async, work, w));
            for (auto& f : workers) f.get();
        }
        for (std::size_t si = 0; si < solvers.size(); ++si) {
            SweepRow row;
            row.snr_db = points[pi].snr;
            row.omega = points[pi].omega;
            row.solver = solvers[si];
            double mean = 0.0;
            for (double e : errs[si]) mean += e;
            mean /= trials;
            row.mean_relative_error = mean;
            row.mean_relative_error_db = 10.0 * std::log10(mean * mean);
            row.trial_errors = std::move(errs[si]);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace

std::vector<SweepRow> noise_sweep(const TrialSpec& base,
                                  const std::vector<double>& snr_list_db,
                                  const std::vector<SolverKind>& solvers,
                                  int trials, std::uint64_t base_seed,
                                  int threads) {
    return sweep_impl(base, snr_list_db, {}, solvers, trials, base_seed,
                      threads);
}

std::vector<SweepRow> rate_sweep(const TrialSpec& base, double snr_db,
                                 const std::vector<Eigen::Index>& omegas,
                                 const std::vector<SolverKind>& solvers,
                                 int trials, std::uint64_t base_seed,
                                 int threads) {
    return sweep_impl(base, {snr_db}, omegas, solvers, trials, base_seed,
                      threads);
}

IngestResult ingest_recording(const RMat& recording, int window_length, int W,
                              const std::vector<int>& ranks) {
    const Eigen::Index samples = recording.rows(),
                       channels = recording.cols();
    if (window_length < 1 || window_length > samples)
        throw HarnessError("window length must be in [1, record length]");
    if (W < 1 || W > window_length)
        throw HarnessError("W must be in [1, window_length]");

    IngestResult out;
    const Eigen::Index num_windows = samples / window_length;
    for (Eigen::Index w = 0; w < num_windows; ++w) {
        CMat C(channels, W);
        for (Eigen::Index c = 0; c < channels; ++c) {
            const CVec segment = recording.col(c)
                                     .segment(w * window_length, window_length)
                                     .cast<Complex>();
            C.row(c) = fft::truncate(segment, W).transpose();
        }
        CoefficientMatrix cm{std::move(C), SymmetryMode::Matrix};
        for (int r : ranks)
            out.rank_study.push_back(RankStudyRow{
                static_cast<int>(w), r, rank_r_relative_error(cm, r)});
        out.windows.push_back(std::move(cm));
    }
    return out;
}

IngestResult ingest_recording(const std::filesystem::path& csv_path,
                              int window_length, int W,
                              const std::vector<int>& ranks) {
    return ingest_recording(read_recording_csv(csv_path), window_length, W,
                            ranks);
}

void write_phase_grid_csv(const std::filesystem::path& path,
                          const PhaseGrid& grid) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "rank\\omega";
    for (Eigen::Index o : grid.omegas) out << "," << o;
    out << "\n";
    for (std::size_t ri = 0; ri < grid.ranks.size(); ++ri) {
        out << grid.ranks[ri];
        for (std::size_t oi = 0; oi < grid.omegas.size(); ++oi)
            out << ","
                << format_double(grid.success_rate(
                       static_cast<Eigen::Index>(ri),
                       static_cast<Eigen::Index>(oi)));
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "snr_db,omega,solver,mean_rel_error,mean_rel_error_db\n";
    for (const auto& r : rows)
        out << format_double(r.snr_db) << "," << r.omega << ","
            << to_string(r.solver) << "," << format_double(r.mean_relative_error)
            << "," << format_double(r.mean_relative_error_db) << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace cmux
