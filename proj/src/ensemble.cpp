#include "cmux/ensemble.hpp"

#include <Eigen/SVD>

#include "cmux/prng.hpp"

namespace cmux {

namespace {

constexpr std::uint64_t kStreamLeftFactor = 0x1001;
constexpr std::uint64_t kStreamRightFactor = 0x1002;
constexpr std::uint64_t kStreamMixing = 0x1003;

CMat gaussian_factor_product(const EnsembleSpec& spec) {
    const int M = spec.num_signals, W = spec.bandwidth, R = spec.rank;
    RMat G(M, R), H(R, W);
    for (int m = 0; m < M; ++m)
        for (int r = 0; r < R; ++r)
            G(m, r) = rng::gaussian(spec.seed, kStreamLeftFactor,
                                    static_cast<std::uint64_t>(m) * R + r);
    for (int r = 0; r < R; ++r)
        for (int w = 0; w < W; ++w)
            H(r, w) = rng::gaussian(spec.seed, kStreamRightFactor,
                                    static_cast<std::uint64_t>(r) * W + w);
    return (G * H).cast<Complex>();
}

// Rows mix R unimodular phase ramps; ramp r puts all of its energy at the
// time sample k_r * (1/W), the analytic maximizer of the coherence.
CMat time_concentrated(const EnsembleSpec& spec) {
    const int M = spec.num_signals, W = spec.bandwidth, R = spec.rank;
    CMat ramps(R, W);
    for (int r = 0; r < R; ++r) {
        const int k = static_cast<int>(
            (static_cast<std::int64_t>(r) * W) / R);
        for (int w = 0; w < W; ++w) {
            const double phase = -2.0 * EIGEN_PI * w * k / W;
            ramps(r, w) = Complex(std::cos(phase), std::sin(phase));
        }
    }
    RMat G(M, R);
    for (int m = 0; m < M; ++m)
        for (int r = 0; r < R; ++r)
            G(m, r) = rng::gaussian(spec.seed, kStreamMixing,
                                    static_cast<std::uint64_t>(m) * R + r);
    return G.cast<Complex>() * ramps;
}

CMat symmetrize_rows(const CMat& C) {
    const Eigen::Index M = C.rows(), W = C.cols();
    CMat out(M, W);
    for (Eigen::Index m = 0; m < M; ++m)
        for (Eigen::Index w = 0; w < W; ++w) {
            const Eigen::Index mirror = (W - w) % W;
            out(m, w) = 0.5 * (C(m, w) + std::conj(C(m, mirror)));
        }
    return out;
}

}  // namespace

void EnsembleSpec::validate() const {
    if (num_signals < 1 || bandwidth < 1)
        throw EnsembleError("ensemble dims must be positive");
    if (rank < 1 || rank > std::min(num_signals, bandwidth))
        throw EnsembleError("rank must satisfy 1 <= R <= min(M, W)");
    if (symmetry == SymmetryMode::Signal && bandwidth % 2 == 0)
        throw EnsembleError("signal mode requires odd W (W = 2B+1)");
}

bool is_conjugate_symmetric(const CMat& entries, double tol) {
    const Eigen::Index M = entries.rows(), W = entries.cols();
    for (Eigen::Index m = 0; m < M; ++m) {
        const double scale = std::max(1.0, entries.row(m).norm());
        for (Eigen::Index w = 0; w < W; ++w) {
            const Eigen::Index mirror = (W - w) % W;
            if (std::abs(entries(m, w) - std::conj(entries(m, mirror))) >
                tol * scale)
                return false;
        }
    }
    return true;
}

CoefficientMatrix generate_ensemble(const EnsembleSpec& spec) {
    spec.validate();
    CMat C;
    switch (spec.generator) {
        case Generator::GaussianFactors:
            C = gaussian_factor_product(spec);
            break;
        case Generator::TimeConcentrated:
            C = time_concentrated(spec);
            break;
        case Generator::FromData:
            throw EnsembleError(
                "from-data ensembles are constructed via from_data()");
    }
    if (spec.symmetry == SymmetryMode::Signal) {
        // Real Gaussian factors keep the symmetrized matrix within rank 2R;
        // re-truncate to R and verify nothing degenerate happened.
        C = symmetrize_rows(C);
        const SvdTriple svd = truncated_svd(C, spec.rank);
        if (svd.singular_values[spec.rank - 1] <
            1e-12 * svd.singular_values[0])
            throw EnsembleError("rank collapse after symmetrization");
        C = svd.left_vectors * svd.singular_values.asDiagonal() *
            svd.right_vectors.adjoint();
    }
    return CoefficientMatrix{std::move(C), spec.symmetry};
}

CoefficientMatrix from_data(CMat entries, SymmetryMode symmetry) {
    if (symmetry == SymmetryMode::Signal &&
        !is_conjugate_symmetric(entries))
        throw EnsembleError("from-data entries violate conjugate symmetry");
    return CoefficientMatrix{std::move(entries), symmetry};
}

SvdTriple truncated_svd(const CMat& C, int r) {
    if (r < 1 || r > std::min(C.rows(), C.cols()))
        throw EnsembleError("truncation rank out of range");
    Eigen::JacobiSVD<CMat> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdTriple out;
    out.left_vectors = svd.matrixU().leftCols(r);
    out.singular_values = svd.singularValues().head(r);
    out.right_vectors = svd.matrixV().leftCols(r);
    return out;
}

CoherenceReport coherence(const CoefficientMatrix& C, Eigen::Index omega) {
    const Eigen::Index W = C.bandwidth();
    if (omega < W) throw EnsembleError("coherence requires omega >= W");
    const double fro = C.entries.norm();
    if (fro == 0.0) throw EnsembleError("coherence undefined for zero matrix");

    Eigen::JacobiSVD<CMat> svd(C.entries, Eigen::ComputeThinV);
    const RVec sigma = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < sigma.size() && sigma[rank] > 1e-10 * sigma[0]) ++rank;
    const CMat V = svd.matrixV().leftCols(rank);

    // |(V* f_n)[k]| = |interpolate(V.col(k))[n]|, so one length-omega
    // transform per column gives ||V* f_n||^2 for all n at once.
    RVec energy = RVec::Zero(omega);
    for (Eigen::Index k = 0; k < rank; ++k) {
        const CVec t = fft::interpolate(V.col(k), omega);
        energy += t.cwiseAbs2();
    }

    Eigen::Index argmax = 0;
    const double peak = energy.maxCoeff(&argmax);
    return CoherenceReport{
        static_cast<double>(omega) / static_cast<double>(rank) * peak, argmax,
        omega};
}

CMat synthesize_samples(const CoefficientMatrix& C, Eigen::Index omega) {
    if (omega < C.bandwidth())
        throw EnsembleError("synthesis requires omega >= W");
    CMat X(C.num_signals(), omega);
    for (Eigen::Index m = 0; m < C.num_signals(); ++m)
        X.row(m) = fft::interpolate(C.entries.row(m).transpose(), omega)
                       .transpose();
    return X;
}

double rank_r_relative_error(const CMat& C, int r) {
    if (r < 1 || r > std::min(C.rows(), C.cols()))
        throw EnsembleError("rank out of range");
    const double fro = C.norm();
    if (fro == 0.0)
        throw EnsembleError("relative error undefined for zero matrix");
    Eigen::JacobiSVD<CMat> svd(C);
    const RVec sigma = svd.singularValues();
    double tail = 0.0;
    for (Eigen::Index i = r; i < sigma.size(); ++i) tail += sigma[i] * sigma[i];
    return std::sqrt(tail) / fro;
}

}  // namespace cmux
