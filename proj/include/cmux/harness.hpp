#ifndef CMUX_HARNESS_HPP
#define CMUX_HARNESS_HPP

#include <filesystem>
#include <vector>

#include "cmux/io.hpp"
#include "cmux/prng.hpp"
#include "cmux/solvers.hpp"

namespace cmux {

struct HarnessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SolverKind { Lasso, Klt, LeastSquares };

std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

struct TrialSpec {
    EnsembleSpec ensemble;
    OperatorKind operator_kind = OperatorKind::MMux;
    Eigen::Index omega = 0;
    double noise_sigma = 0.0;
    SolverKind solver_kind = SolverKind::Lasso;
    SolverConfig solver;
    std::uint64_t seed = 0;

    void validate() const;  // enforces W <= omega <= M*W
};

struct Metrics {
    double efficiency = 0.0;     // R(W+M-R)/omega
    double compression = 0.0;    // omega/(MW)
    double oversampling = 0.0;   // 1/efficiency
    double relative_error = 0.0;
    bool success = false;        // relative_error <= threshold
};

// Success threshold matching the reported experiments; configurable for
// sensitivity studies.
inline constexpr double kSuccessThreshold = 1e-3;

Metrics run_trial(const TrialSpec& t,
                  double success_threshold = kSuccessThreshold);

struct PhaseGrid {
    std::vector<Eigen::Index> omegas;
    std::vector<int> ranks;
    RMat success_rate;  // ranks x omegas, entries in [0,1]
    int trials_per_cell = 0;
    std::uint64_t base_seed = 0;
};

PhaseGrid phase_transition(const TrialSpec& base,
                           const std::vector<Eigen::Index>& omegas,
                           const std::vector<int>& ranks, int trials_per_cell,
                           std::uint64_t base_seed, int threads = 1);

struct MinRateResult {
    int rank = 0;
    Eigen::Index omega_star = 0;
    double success_rate = 0.0;  // rate observed at omega_star
};

// Smallest omega on a geometric-then-bisection grid (rounded to multiples of
// 8) whose empirical success rate reaches the target.
MinRateResult min_rate_search(const TrialSpec& base, double target_success,
                              int trials, std::uint64_t base_seed,
                              int threads = 1);

struct SweepRow {
    double snr_db = 0.0;  // NaN for omega sweeps without noise axis
    Eigen::Index omega = 0;
    SolverKind solver = SolverKind::Lasso;
    double mean_relative_error = 0.0;
    double mean_relative_error_db = 0.0;
    std::vector<double> trial_errors;  // aligned by trial index across solvers
};

// SNR sweep at fixed omega: one row per (snr, solver kind).
std::vector<SweepRow> noise_sweep(const TrialSpec& base,
                                  const std::vector<double>& snr_list_db,
                                  const std::vector<SolverKind>& solvers,
                                  int trials, std::uint64_t base_seed,
                                  int threads = 1);

// Omega sweep at fixed SNR.
std::vector<SweepRow> rate_sweep(const TrialSpec& base, double snr_db,
                                 const std::vector<Eigen::Index>& omegas,
                                 const std::vector<SolverKind>& solvers,
                                 int trials, std::uint64_t base_seed,
                                 int threads = 1);

struct RankStudyRow {
    int window_index = 0;
    int rank = 0;
    double relative_error = 0.0;
};

struct IngestResult {
    std::vector<CoefficientMatrix> windows;  // matrix-mode, channels x W
    std::vector<RankStudyRow> rank_study;
};

// Windowed ingestion of a recording (samples x channels): per window, forward
// DFT per channel truncated to W bins; rectangular non-overlapping windows.
IngestResult ingest_recording(const RMat& recording, int window_length, int W,
                              const std::vector<int>& ranks);
IngestResult ingest_recording(const std::filesystem::path& csv_path,
                              int window_length, int W,
                              const std::vector<int>& ranks);

void write_phase_grid_csv(const std::filesystem::path& path,
                          const PhaseGrid& grid);
void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepRow>& rows);

// Per-trial seed derivation shared by all drivers: hash(base, cell, trial).
inline std::uint64_t trial_seed(std::uint64_t base, std::uint64_t cell,
                                std::uint64_t trial) {
    return rng::derive(base, cell + 1, trial + 1);
}

}  // namespace cmux

#endif
