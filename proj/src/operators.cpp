#include "cmux/operators.hpp"

#include <cmath>

#include "cmux/prng.hpp"

namespace cmux {

namespace {
constexpr std::uint64_t kStreamCodes = 0x2001;
constexpr std::uint64_t kStreamFilters = 0x2002;
constexpr std::uint64_t kStreamRip = 0x2003;
constexpr std::uint64_t kStreamNoise = 0x2004;
constexpr std::uint64_t kStreamPower = 0x2005;

// Filter entries at the grid bins occupied by the W coefficients, so the
// swapped kind weights exactly the spectral content it will interpolate.
CVec occupied_filter_bins(const CMat& spectra, int m, int W,
                          Eigen::Index omega) {
    CVec h(W);
    for (int w = 0; w < W; ++w) h[w] = spectra(m, fft::grid_bin(w, W, omega));
    return h;
}
}  // namespace

std::string to_string(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::MMux: return "mmux";
        case OperatorKind::FMMux: return "fmmux";
        case OperatorKind::FMMuxSwapped: return "fmmux-swapped";
    }
    return "?";
}

OperatorKind operator_kind_from_string(const std::string& name) {
    if (name == "mmux") return OperatorKind::MMux;
    if (name == "fmmux") return OperatorKind::FMMux;
    if (name == "fmmux-swapped") return OperatorKind::FMMuxSwapped;
    throw OperatorError("unknown operator kind: " + name);
}

ModulationCodes generate_codes(int M, Eigen::Index omega, std::uint64_t seed) {
    if (M < 1 || omega < 1) throw OperatorError("codes need M, omega >= 1");
    RMat signs(omega, M);
    for (int m = 0; m < M; ++m)
        for (Eigen::Index n = 0; n < omega; ++n)
            signs(n, m) = rng::rademacher(
                seed, kStreamCodes + static_cast<std::uint64_t>(m),
                static_cast<std::uint64_t>(n));
    return ModulationCodes{std::move(signs), seed};
}

FilterBank generate_filters(int M, Eigen::Index omega, std::uint64_t seed) {
    if (M < 1 || omega < 1) throw OperatorError("filters need M, omega >= 1");
    CMat spectra(M, omega);
    for (int m = 0; m < M; ++m) {
        const std::uint64_t stream =
            kStreamFilters + static_cast<std::uint64_t>(m);
        spectra(m, 0) = rng::rademacher(seed, stream, 0);
        for (Eigen::Index w = 1; 2 * w < omega; ++w) {
            const double theta =
                2.0 * EIGEN_PI *
                rng::uniform(seed, stream, static_cast<std::uint64_t>(w));
            spectra(m, w) = Complex(std::cos(theta), std::sin(theta));
            spectra(m, omega - w) = std::conj(spectra(m, w));
        }
        // Nyquist bin of an even-length spectrum must be real for a real
        // impulse response; draw a fair sign.
        if (omega % 2 == 0)
            spectra(m, omega / 2) = rng::rademacher(
                seed, stream, static_cast<std::uint64_t>(omega / 2));
    }
    return FilterBank{std::move(spectra), seed};
}

MeasurementOperator::MeasurementOperator(OperatorKind kind, int M, int W,
                                         Eigen::Index omega,
                                         ModulationCodes codes,
                                         std::optional<FilterBank> filters)
    : kind_(kind), M_(M), W_(W), omega_(omega), codes_(std::move(codes)),
      filters_(std::move(filters)) {
    if (omega_ < W_) throw OperatorError("operator requires omega >= W");
    if (codes_.signs.rows() != omega_ || codes_.signs.cols() != M_)
        throw OperatorError("code matrix dims do not match (omega, M)");
    if (kind_ != OperatorKind::MMux) {
        if (!filters_) throw OperatorError("fmmux kinds require a filter bank");
        if (filters_->spectra.rows() != M_ ||
            filters_->spectra.cols() != omega_)
            throw OperatorError("filter bank dims do not match (M, omega)");
    }
}

const FilterBank& MeasurementOperator::filters() const {
    if (!filters_) throw OperatorError("operator has no filter bank");
    return *filters_;
}

MeasurementOperator make_operator(OperatorKind kind, int M, int W,
                                  Eigen::Index omega, std::uint64_t seed) {
    ModulationCodes codes = generate_codes(M, omega, rng::derive(seed, 1));
    std::optional<FilterBank> filters;
    if (kind != OperatorKind::MMux)
        filters = generate_filters(M, omega, rng::derive(seed, 2));
    return MeasurementOperator(kind, M, W, omega, std::move(codes),
                               std::move(filters));
}

SampleVector MeasurementOperator::apply(const CMat& C) const {
    if (C.rows() != M_ || C.cols() != W_)
        throw OperatorError("coefficient matrix dims do not match operator");
    CVec y = CVec::Zero(omega_);
    for (int m = 0; m < M_; ++m) {
        CVec coeffs = C.row(m).transpose();
        if (kind_ == OperatorKind::FMMuxSwapped)
            coeffs.array() *=
                occupied_filter_bins(filters_->spectra, m, W_, omega_).array();
        CVec t = fft::interpolate(coeffs, omega_);
        t.array() *= codes_.signs.col(m).array();
        if (kind_ == OperatorKind::FMMux)
            t = fft::filter(t, filters_->spectra.row(m).transpose());
        y += t;
    }
    return SampleVector{std::move(y), std::nullopt};
}

CMat MeasurementOperator::adjoint(const CVec& y) const {
    if (y.size() != omega_)
        throw OperatorError("sample vector length does not match operator");
    CMat G(M_, W_);
    for (int m = 0; m < M_; ++m) {
        CVec t = y;
        if (kind_ == OperatorKind::FMMux)
            t = fft::filter_adjoint(t, filters_->spectra.row(m).transpose());
        t.array() *= codes_.signs.col(m).array();
        CVec c = fft::truncate(t, W_);
        if (kind_ == OperatorKind::FMMuxSwapped)
            c.array() *= occupied_filter_bins(filters_->spectra, m, W_, omega_)
                             .conjugate()
                             .array();
        G.row(m) = c.transpose();
    }
    return G;
}

CMat MeasurementOperator::materialize_dense(std::size_t entry_cap) const {
    const std::size_t entries = static_cast<std::size_t>(M_) * W_ *
                                static_cast<std::size_t>(omega_);
    if (entries > entry_cap)
        throw OperatorError("dense materialization exceeds entry cap");
    CMat T(omega_, static_cast<Eigen::Index>(M_) * W_);
    CMat basis = CMat::Zero(M_, W_);
    for (int m = 0; m < M_; ++m)
        for (int w = 0; w < W_; ++w) {
            basis(m, w) = 1.0;
            T.col(static_cast<Eigen::Index>(m) * W_ + w) = apply(basis).values;
            basis(m, w) = 0.0;
        }
    return T;
}

double operator_norm(const MeasurementOperator& op, int iterations,
                     std::uint64_t seed) {
    if (iterations < 1) throw OperatorError("operator_norm needs iterations >= 1");
    const int M = op.num_signals(), W = op.bandwidth();
    CMat X(M, W);
    for (int m = 0; m < M; ++m)
        for (int w = 0; w < W; ++w)
            X(m, w) = Complex(
                rng::gaussian(seed, kStreamPower,
                              2 * (static_cast<std::uint64_t>(m) * W + w)),
                rng::gaussian(seed, kStreamPower,
                              2 * (static_cast<std::uint64_t>(m) * W + w) + 1));
    X /= X.norm();
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        const CMat Y = op.adjoint(op.apply(X).values);
        const double next = Y.norm();  // Rayleigh quotient for unit X
        if (next == 0.0) return 0.0;
        X = Y / next;
        if (it > 0 && std::abs(next - lambda) <= 1e-6 * next) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return std::sqrt(lambda);
}

double operator_norm_bound(const MeasurementOperator& op) {
    const double M = op.num_signals(), W = op.bandwidth(),
                 omega = static_cast<double>(op.omega());
    return std::sqrt(M * std::log(M * M * omega * W));
}

RipProbeReport rip_probe(const MeasurementOperator& op, int rank, int trials,
                         std::uint64_t seed) {
    if (trials < 0) throw OperatorError("trials must be nonnegative");
    RipProbeReport report;
    report.rank_tested = rank;
    report.num_trials = trials;
    const int M = op.num_signals(), W = op.bandwidth();
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t s = rng::derive(seed, kStreamRip, t);
        RMat G(M, rank), H(rank, W);
        for (int m = 0; m < M; ++m)
            for (int r = 0; r < rank; ++r)
                G(m, r) = rng::gaussian(
                    s, 1, static_cast<std::uint64_t>(m) * rank + r);
        for (int r = 0; r < rank; ++r)
            for (int w = 0; w < W; ++w)
                H(r, w) = rng::gaussian(
                    s, 2, static_cast<std::uint64_t>(r) * W + w);
        CMat C = (G * H).cast<Complex>();
        C /= C.norm();
        report.ratios.push_back(op.apply(C).values.norm());
    }
    if (trials > 0) {
        double delta = 0.0;
        for (double r : report.ratios)
            delta = std::max(delta, std::abs(r * r - 1.0));
        report.empirical_delta = delta;
    }
    return report;
}

SampleVector add_noise(const SampleVector& y, double sigma,
                       std::uint64_t seed) {
    if (sigma < 0.0) throw OperatorError("sigma must be nonnegative");
    SampleVector out = y;
    const Eigen::Index omega = y.values.size();
    if (sigma > 0.0)
        for (Eigen::Index n = 0; n < omega; ++n)
            out.values[n] += sigma * rng::gaussian(
                                         seed, kStreamNoise,
                                         static_cast<std::uint64_t>(n));
    out.noise_level =
        std::sqrt(static_cast<double>(omega) +
                  std::sqrt(static_cast<double>(omega))) *
        sigma;
    return out;
}

double snr_to_sigma(const CVec& clean, double snr_db) {
    const double power = clean.squaredNorm();
    return std::sqrt(power * std::pow(10.0, -snr_db / 10.0) /
                     static_cast<double>(clean.size()));
}

}  // namespace cmux
