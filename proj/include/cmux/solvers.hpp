#ifndef CMUX_SOLVERS_HPP
#define CMUX_SOLVERS_HPP

#include <optional>
#include <stdexcept>
#include <vector>

#include "cmux/operators.hpp"

namespace cmux {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverConfig {
    std::optional<double> lambda;      // absent = auto
    double noise_bound = 0.0;          // eta; 0 means noiseless
    int max_iterations = 2000;         // per continuation stage
    std::optional<double> step_size;   // absent = 1/L via power iteration
    double convergence_tol = 1e-8;     // relative objective change
    bool continuation = true;          // geometric lambda decrease
    std::optional<int> rank_cap;       // truncated-SVD acceleration

    void validate() const;
};

struct SolverReport {
    CoefficientMatrix solution;
    long iterations = 0;
    double final_residual = 0.0;   // ||y - T(C)||_2
    double final_objective = 0.0;
    int solution_rank = 0;         // singular values > 1e-8 * sigma_max
    bool converged = false;
    std::vector<double> objective_trace;
};

struct MixingMatrix {
    CMat entries;  // M x R
};

// Singular value soft thresholding, the prox of tau * nuclear norm.
// Values exactly at the threshold map to zero.
CMat svt(const CMat& Z, double tau);
CMat svt(const CMat& Z, double tau, std::optional<int> rank_cap);

// One-SVD closed form: svt(T*(y), lambda / 2).
SolverReport klt_estimate(const MeasurementOperator& op,
                          const SampleVector& y, double lambda);

// Accelerated proximal gradient (monotone FISTA) on the penalized form
// min 0.5 ||y - T(C)||^2 + lambda ||C||_*, with lambda-continuation down to
// the noise bound when lambda is auto.
SolverReport matrix_lasso(const MeasurementOperator& op,
                          const SampleVector& y, const SolverConfig& config);

// CGNR on T_A = T o (A (x) I); returns the M x W estimate A * C_s.
SolverReport least_squares_known_mixing(const MeasurementOperator& op,
                                        const MixingMatrix& A,
                                        const SampleVector& y,
                                        const SolverConfig& config);

enum class LambdaRule {
    LassoStart,   // ||T*(y)||, continuation start
    KltCentered,  // 2 x Monte-Carlo estimate of ||T*(y) - E T*(y)||
    KltPlain,     // 2 ||T*(y)|| as literally stated alongside the centered rule
};

double auto_lambda(const MeasurementOperator& op, const SampleVector& y,
                   LambdaRule rule, std::uint64_t seed = 0);

// Data-fidelity gradient T*(T(C) - y) under the real inner product
// Re<.,.> (Wirtinger-consistent).
CMat fidelity_gradient(const MeasurementOperator& op, const SampleVector& y,
                       const CMat& C);

double nuclear_norm(const CMat& C);

}  // namespace cmux

#endif
