#include "cmux/solvers.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "cmux/prng.hpp"

namespace cmux {

namespace {

constexpr std::uint64_t kPowerSeed = 0x90f7e401;

struct Svd {
    CMat U, V;
    RVec sigma;
};

Svd thin_svd(const CMat& Z) {
    Svd out;
    if (std::min(Z.rows(), Z.cols()) <= 32) {
        Eigen::JacobiSVD<CMat> svd(Z,
                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.U = svd.matrixU();
        out.V = svd.matrixV();
        out.sigma = svd.singularValues();
    } else {
        Eigen::BDCSVD<CMat> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.U = svd.matrixU();
        out.V = svd.matrixV();
        out.sigma = svd.singularValues();
    }
    return out;
}

double spectral_norm(const CMat& Z) {
    if (std::min(Z.rows(), Z.cols()) <= 32)
        return Eigen::JacobiSVD<CMat>(Z).singularValues()[0];
    return Eigen::BDCSVD<CMat>(Z).singularValues()[0];
}

int rank_of(const RVec& sigma, double rel_tol = 1e-8) {
    if (sigma.size() == 0) return 0;
    const double cutoff = rel_tol * sigma[0];
    int r = 0;
    while (r < sigma.size() && sigma[r] > cutoff) ++r;
    return sigma[0] == 0.0 ? 0 : r;
}

// Soft-threshold precomputed singular values; returns the shrunk matrix and
// its nuclear norm, sparing a second SVD per iteration.
CMat shrink(const Svd& svd, double tau, double* nuclear,
            std::optional<int> rank_cap) {
    RVec s = svd.sigma;
    double nn = 0.0;
    int kept = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        s[i] = std::max(s[i] - tau, 0.0);
        if (rank_cap && kept >= *rank_cap) s[i] = 0.0;
        if (s[i] > 0.0) ++kept;
        nn += s[i];
    }
    if (nuclear) *nuclear = nn;
    return svd.U.leftCols(s.size()) * s.asDiagonal() *
           svd.V.leftCols(s.size()).adjoint();
}

}  // namespace

void SolverConfig::validate() const {
    if (lambda && *lambda <= 0.0)
        throw SolverError("explicit lambda must be positive");
    if (noise_bound < 0.0) throw SolverError("eta must be nonnegative");
    if (max_iterations < 1) throw SolverError("max_iterations must be >= 1");
    if (step_size && *step_size <= 0.0)
        throw SolverError("step size must be positive");
}

CMat svt(const CMat& Z, double tau) { return svt(Z, tau, std::nullopt); }

CMat svt(const CMat& Z, double tau, std::optional<int> rank_cap) {
    if (tau < 0.0) throw SolverError("svt threshold must be nonnegative");
    if (tau == 0.0 && !rank_cap) return Z;
    const Svd svd = thin_svd(Z);
    return shrink(svd, tau, nullptr, rank_cap);
}

double nuclear_norm(const CMat& C) {
    if (std::min(C.rows(), C.cols()) <= 32)
        return Eigen::JacobiSVD<CMat>(C).singularValues().sum();
    return Eigen::BDCSVD<CMat>(C).singularValues().sum();
}

CMat fidelity_gradient(const MeasurementOperator& op, const SampleVector& y,
                       const CMat& C) {
    return op.adjoint(op.apply(C).values - y.values);
}

SolverReport klt_estimate(const MeasurementOperator& op,
                          const SampleVector& y, double lambda) {
    if (lambda <= 0.0) throw SolverError("KLT lambda must be positive");
    const CMat back = op.adjoint(y.values);
    const Svd svd = thin_svd(back);
    double nn = 0.0;
    CMat C = shrink(svd, lambda / 2.0, &nn, std::nullopt);

    SolverReport report;
    report.iterations = 1;
    report.final_residual = (y.values - op.apply(C).values).norm();
    report.final_objective = C.squaredNorm() -
                             2.0 * (y.values.adjoint() * op.apply(C).values)
                                       .real()
                                       .value() +
                             lambda * nn;
    RVec s = svd.sigma;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        s[i] = std::max(s[i] - lambda / 2.0, 0.0);
    report.solution_rank = rank_of(s);
    report.converged = true;
    report.solution = CoefficientMatrix{std::move(C), SymmetryMode::Matrix};
    return report;
}

namespace {

struct StageResult {
    double residual = 0.0;
    double objective = 0.0;
    int rank = 0;
    bool converged = false;
    long iterations = 0;
};

// Monotone FISTA on 0.5 ||y - T(C)||^2 + lambda ||C||_*.
StageResult run_stage(const MeasurementOperator& op, const CVec& y,
                      double lambda, double step, const SolverConfig& config,
                      CMat& C, std::vector<double>& trace) {
    const double tau = step * lambda;
    auto prox_from = [&](const CMat& point, double* nn, int* rank) {
        const CMat G = op.adjoint(op.apply(point).values - y);
        const Svd svd = thin_svd(point - step * G);
        RVec s = svd.sigma;
        for (Eigen::Index i = 0; i < s.size(); ++i)
            s[i] = std::max(s[i] - tau, 0.0);
        if (config.rank_cap)
            for (Eigen::Index i = *config.rank_cap; i < s.size(); ++i)
                s[i] = 0.0;
        *nn = s.sum();
        *rank = rank_of(s);
        return CMat(svd.U * s.asDiagonal() * svd.V.adjoint());
    };
    auto objective = [&](const CMat& X, double nn, double* res) {
        const double r = (y - op.apply(X).values).norm();
        if (res) *res = r;
        return 0.5 * r * r + lambda * nn;
    };

    StageResult out;
    double res = (y - op.apply(C).values).norm();
    double F = 0.5 * res * res + lambda * nuclear_norm(C);
    CMat Cprev = C;
    double t = 1.0;
    int rank = 0;
    for (int k = 0; k < config.max_iterations; ++k) {
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double beta = (t - 1.0) / t_next;
        CMat Y = C + beta * (C - Cprev);
        double nn = 0.0;
        int cand_rank = 0;
        CMat cand = prox_from(Y, &nn, &cand_rank);
        double cand_res = 0.0;
        double Fc = objective(cand, nn, &cand_res);
        if (Fc > F) {
            // Momentum overshot; fall back to a plain prox step from C.
            cand = prox_from(C, &nn, &cand_rank);
            Fc = objective(cand, nn, &cand_res);
            t = 1.0;
            if (Fc > F) {
                out.converged = true;  // prox step cannot improve: optimal
                break;
            }
        } else {
            t = t_next;
        }
        Cprev = C;
        C = std::move(cand);
        ++out.iterations;
        const double drop = F - Fc;
        F = Fc;
        res = cand_res;
        rank = cand_rank;
        trace.push_back(F);
        if (drop <= config.convergence_tol * std::max(std::abs(F), 1e-300)) {
            out.converged = true;
            break;
        }
    }
    out.residual = res;
    out.objective = F;
    out.rank = rank;
    return out;
}

}  // namespace

SolverReport matrix_lasso(const MeasurementOperator& op,
                          const SampleVector& y, const SolverConfig& config) {
    config.validate();
    const int M = op.num_signals(), W = op.bandwidth();

    double step;
    if (config.step_size) {
        step = *config.step_size;
    } else {
        const double norm = operator_norm(op, 200, kPowerSeed);
        step = 1.0 / (1.05 * norm * norm);
    }

    SolverReport report;
    CMat C = CMat::Zero(M, W);

    if (config.lambda) {
        const StageResult stage = run_stage(op, y.values, *config.lambda, step,
                                            config, C, report.objective_trace);
        report.solution = CoefficientMatrix{std::move(C), SymmetryMode::Matrix};
        report.iterations = stage.iterations;
        report.final_residual = stage.residual;
        report.final_objective = stage.objective;
        report.solution_rank = stage.rank;
        report.converged = stage.converged;
        return report;
    }

    // lambda auto: continuation from lambda0 = ||T*(y)|| down to the first
    // stage whose residual meets the noise bound.
    const double lambda0 = spectral_norm(op.adjoint(y.values));
    const double eta = config.noise_bound;
    if (lambda0 == 0.0) {
        report.solution =
            CoefficientMatrix{CMat::Zero(M, W), SymmetryMode::Matrix};
        report.converged = true;
        return report;
    }
    double lambda = lambda0;
    for (int stage_idx = 0; stage_idx < 40; ++stage_idx) {
        lambda *= 0.5;
        const StageResult stage = run_stage(op, y.values, lambda, step, config,
                                            C, report.objective_trace);
        report.iterations += stage.iterations;
        if (stage.residual <= eta) {
            report.solution =
                CoefficientMatrix{std::move(C), SymmetryMode::Matrix};
            report.final_residual = stage.residual;
            report.final_objective = stage.objective;
            report.solution_rank = stage.rank;
            report.converged = stage.converged;
            return report;
        }
    }
    throw SolverError(
        "lambda continuation exhausted without meeting the noise bound");
}

SolverReport least_squares_known_mixing(const MeasurementOperator& op,
                                        const MixingMatrix& A,
                                        const SampleVector& y,
                                        const SolverConfig& config) {
    config.validate();
    const int M = op.num_signals(), W = op.bandwidth();
    if (A.entries.rows() != M)
        throw SolverError("mixing matrix rows must equal M");
    const Eigen::Index R = A.entries.cols();

    const Eigen::JacobiSVD<CMat> asvd(A.entries);
    const RVec s = asvd.singularValues();
    if (s[s.size() - 1] <= 1e-12 * s[0])
        throw SolverError("mixing matrix is rank deficient: problem ill-posed");

    auto normal_apply = [&](const CMat& Cs) {
        return CMat(A.entries.adjoint() *
                    op.adjoint(op.apply(A.entries * Cs).values));
    };
    const CMat b = A.entries.adjoint() * op.adjoint(y.values);

    CMat Cs = CMat::Zero(R, W);
    CMat r = b;
    CMat p = r;
    double rs_old = r.squaredNorm();
    const double b_norm = b.norm();
    bool converged = b_norm == 0.0;
    long iters = 0;
    for (int k = 0; k < config.max_iterations && !converged; ++k) {
        const CMat Np = normal_apply(p);
        const double curvature = (p.conjugate().cwiseProduct(Np)).sum().real();
        if (curvature <= 0.0) break;  // stagnation
        const double alpha = rs_old / curvature;
        Cs += alpha * p;
        r -= alpha * Np;
        ++iters;
        const double rs_new = r.squaredNorm();
        if (std::sqrt(rs_new) <= 1e-10 * b_norm) {
            converged = true;
            break;
        }
        p = r + (rs_new / rs_old) * p;
        rs_old = rs_new;
    }

    SolverReport report;
    CMat C = A.entries * Cs;
    report.iterations = iters;
    report.final_residual = (y.values - op.apply(C).values).norm();
    report.final_objective = report.final_residual * report.final_residual;
    report.converged = converged;
    const Svd csvd = thin_svd(C);
    report.solution_rank = rank_of(csvd.sigma);
    report.solution = CoefficientMatrix{std::move(C), SymmetryMode::Matrix};
    return report;
}

double auto_lambda(const MeasurementOperator& op, const SampleVector& y,
                   LambdaRule rule, std::uint64_t seed) {
    switch (rule) {
        case LambdaRule::LassoStart:
            return spectral_norm(op.adjoint(y.values));
        case LambdaRule::KltPlain:
            return 2.0 * spectral_norm(op.adjoint(y.values));
        case LambdaRule::KltCentered: {
            // E T*(y) over fresh codes is zero, so ||T*(y) - E T*(y)|| is
            // estimated by resampling the operator randomness on a proxy and
            // padding by two standard deviations.
            const int K = 25;
            std::vector<double> norms;
            norms.reserve(K);
            for (int k = 0; k < K; ++k) {
                const MeasurementOperator fresh =
                    make_operator(op.kind(), op.num_signals(), op.bandwidth(),
                                  op.omega(), rng::derive(seed, 0xa17, k));
                norms.push_back(spectral_norm(fresh.adjoint(y.values)));
            }
            double mean = 0.0;
            for (double v : norms) mean += v;
            mean /= K;
            double var = 0.0;
            for (double v : norms) var += (v - mean) * (v - mean);
            var /= (K - 1);
            return 2.0 * (mean + 2.0 * std::sqrt(var));
        }
    }
    throw SolverError("unknown lambda rule");
}

}  // namespace cmux
