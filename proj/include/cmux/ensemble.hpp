#ifndef CMUX_ENSEMBLE_HPP
#define CMUX_ENSEMBLE_HPP

#include <cstdint>
#include <stdexcept>

#include "cmux/fft.hpp"

namespace cmux {

struct EnsembleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Generator { GaussianFactors, TimeConcentrated, FromData };

// SymmetryMode::Matrix places no constraint on the coefficient matrix (the
// setting used in all randomized experiments).  SymmetryMode::Signal keeps
// every row conjugate-symmetric, entries[m,w] == conj(entries[m,W-w]), so the
// synthesized time samples are real; it requires odd W.
enum class SymmetryMode { Matrix, Signal };

struct EnsembleSpec {
    int num_signals = 1;   // M
    int bandwidth = 1;     // W
    int rank = 1;          // R
    Generator generator = Generator::GaussianFactors;
    SymmetryMode symmetry = SymmetryMode::Matrix;
    std::uint64_t seed = 0;

    void validate() const;
};

struct CoefficientMatrix {
    CMat entries;  // M x W
    SymmetryMode symmetry = SymmetryMode::Matrix;

    Eigen::Index num_signals() const { return entries.rows(); }
    Eigen::Index bandwidth() const { return entries.cols(); }
};

struct SvdTriple {
    CMat left_vectors;       // M x r
    RVec singular_values;    // r, nonincreasing
    CMat right_vectors;      // W x r
};

struct CoherenceReport {
    double mu_squared = 0.0;
    Eigen::Index argmax_sample_index = 0;
    Eigen::Index omega_used = 0;
};

// True iff every row satisfies the conjugate-symmetry constraint to tol.
bool is_conjugate_symmetric(const CMat& entries, double tol = 1e-9);

CoefficientMatrix generate_ensemble(const EnsembleSpec& spec);

// Wrap externally supplied coefficients (the from-data path).
CoefficientMatrix from_data(CMat entries,
                            SymmetryMode symmetry = SymmetryMode::Matrix);

SvdTriple truncated_svd(const CMat& C, int r);

inline SvdTriple truncated_svd(const CoefficientMatrix& C, int r) {
    return truncated_svd(C.entries, r);
}

// mu^2(V) = (omega/R) max_n ||V* f_n||_2^2, where V spans the row space of C
// at its numerical rank and f_n are columns of the partial Fourier matrix.
CoherenceReport coherence(const CoefficientMatrix& C, Eigen::Index omega);

// Time samples of every signal at rate omega >= W (M x omega).
CMat synthesize_samples(const CoefficientMatrix& C, Eigen::Index omega);

// ||C - C_r||_F / ||C||_F with C_r the best rank-r approximation.
double rank_r_relative_error(const CMat& C, int r);

inline double rank_r_relative_error(const CoefficientMatrix& C, int r) {
    return rank_r_relative_error(C.entries, r);
}

}  // namespace cmux

#endif
