#ifndef CMUX_OPERATORS_HPP
#define CMUX_OPERATORS_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmux/ensemble.hpp"
#include "cmux/fft.hpp"

namespace cmux {

struct OperatorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class OperatorKind { MMux, FMMux, FMMuxSwapped };

std::string to_string(OperatorKind kind);
OperatorKind operator_kind_from_string(const std::string& name);

// Random +/-1 chipping sequences; column m is the sample sequence d^{(m)}
// of channel m's modulation waveform, row n collects all channels at time n.
struct ModulationCodes {
    RMat signs;  // omega x M, entries exactly +/-1
    std::uint64_t seed = 0;
};

// Per-channel random filter spectra h_m; each row is unit-modulus and
// conjugate-symmetric so the impulse response is real.
struct FilterBank {
    CMat spectra;  // M x omega
    std::uint64_t seed = 0;
};

ModulationCodes generate_codes(int M, Eigen::Index omega, std::uint64_t seed);
FilterBank generate_filters(int M, Eigen::Index omega, std::uint64_t seed);

struct SampleVector {
    CVec values;  // length omega
    std::optional<double> noise_level;  // ||xi||_2 bound, when noise was added
};

class MeasurementOperator {
  public:
    // filters may be empty only for MMux.
    MeasurementOperator(OperatorKind kind, int M, int W, Eigen::Index omega,
                        ModulationCodes codes,
                        std::optional<FilterBank> filters = std::nullopt);

    OperatorKind kind() const { return kind_; }
    int num_signals() const { return M_; }
    int bandwidth() const { return W_; }
    Eigen::Index omega() const { return omega_; }
    const ModulationCodes& codes() const { return codes_; }
    const FilterBank& filters() const;

    SampleVector apply(const CMat& C) const;
    SampleVector apply(const CoefficientMatrix& C) const {
        return apply(C.entries);
    }
    CMat adjoint(const CVec& y) const;
    CMat adjoint(const SampleVector& y) const { return adjoint(y.values); }

    // Dense omega x (M*W) matrix acting on row-stacked coefficients
    // (index m*W + w); test oracle only, refuses to build above the cap.
    CMat materialize_dense(std::size_t entry_cap = (1u << 24)) const;

  private:
    OperatorKind kind_;
    int M_, W_;
    Eigen::Index omega_;
    ModulationCodes codes_;
    std::optional<FilterBank> filters_;
};

// Convenience constructor drawing codes (and filters when needed) from seed.
MeasurementOperator make_operator(OperatorKind kind, int M, int W,
                                  Eigen::Index omega, std::uint64_t seed);

// Power iteration on T*T; relative tolerance 1e-6.
double operator_norm(const MeasurementOperator& op, int iterations = 200,
                     std::uint64_t seed = 0);

// sqrt(M log(M^2 omega W)), the high-probability bound on ||A||.
double operator_norm_bound(const MeasurementOperator& op);

struct RipProbeReport {
    int rank_tested = 0;
    int num_trials = 0;
    std::vector<double> ratios;             // ||T(C)||_2 / ||C||_F
    std::optional<double> empirical_delta;  // max |ratio^2 - 1|, absent if no trials
};

RipProbeReport rip_probe(const MeasurementOperator& op, int rank, int trials,
                         std::uint64_t seed);

// Adds real i.i.d. N(0, sigma^2) noise to the samples and records the
// high-probability bound (omega + sqrt(omega))^{1/2} * sigma.
SampleVector add_noise(const SampleVector& y, double sigma,
                       std::uint64_t seed);

// sigma achieving a target SNR in dB against the noiseless samples,
// SNR = 10 log10(||y||^2 / E||xi||^2).
double snr_to_sigma(const CVec& clean, double snr_db);

}  // namespace cmux

#endif
