#include <doctest.h>

#include <Eigen/SVD>

#include "cmux/ensemble.hpp"
#include "cmux/prng.hpp"

using namespace cmux;

namespace {

EnsembleSpec spec_of(int M, int W, int R, Generator g, std::uint64_t seed,
                     SymmetryMode sym = SymmetryMode::Matrix) {
    EnsembleSpec s;
    s.num_signals = M;
    s.bandwidth = W;
    s.rank = R;
    s.generator = g;
    s.symmetry = sym;
    s.seed = seed;
    return s;
}

int numerical_rank(const CMat& C, double rel_tol = 1e-10) {
    const Eigen::VectorXd s = Eigen::JacobiSVD<CMat>(C).singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0;
    int r = 0;
    while (r < s.size() && s[r] > rel_tol * s[0]) ++r;
    return r;
}

}  // namespace

TEST_CASE("spec validation rejects bad shapes") {
    CHECK_THROWS_AS(spec_of(2, 3, 3, Generator::GaussianFactors, 0).validate(),
                    EnsembleError);
    CHECK_THROWS_AS(spec_of(0, 3, 1, Generator::GaussianFactors, 0).validate(),
                    EnsembleError);
    // signal mode needs odd W
    CHECK_THROWS_AS(
        spec_of(2, 4, 1, Generator::GaussianFactors, 0, SymmetryMode::Signal)
            .validate(),
        EnsembleError);
}

TEST_CASE("gaussian-factors ensemble has exact rank R") {
    const auto C = generate_ensemble(
        spec_of(2, 3, 2, Generator::GaussianFactors, 17));
    CHECK(C.entries.rows() == 2);
    CHECK(C.entries.cols() == 3);
    CHECK(numerical_rank(C.entries) == 2);

    const auto big = generate_ensemble(
        spec_of(24, 96, 5, Generator::GaussianFactors, 3));
    CHECK(numerical_rank(big.entries) == 5);
}

TEST_CASE("generation is deterministic per seed") {
    const auto a = generate_ensemble(
        spec_of(6, 17, 3, Generator::GaussianFactors, 99));
    const auto b = generate_ensemble(
        spec_of(6, 17, 3, Generator::GaussianFactors, 99));
    const auto c = generate_ensemble(
        spec_of(6, 17, 3, Generator::GaussianFactors, 100));
    CHECK(a.entries == b.entries);
    CHECK(a.entries != c.entries);
}

TEST_CASE("signal mode keeps conjugate symmetry and rank") {
    const auto C = generate_ensemble(spec_of(
        5, 31, 3, Generator::GaussianFactors, 7, SymmetryMode::Signal));
    CHECK(is_conjugate_symmetric(C.entries));
    CHECK(numerical_rank(C.entries) == 3);

    const auto T = generate_ensemble(spec_of(
        4, 31, 2, Generator::TimeConcentrated, 7, SymmetryMode::Signal));
    CHECK(is_conjugate_symmetric(T.entries));
    CHECK(numerical_rank(T.entries) == 2);
}

TEST_CASE("truncated_svd on a diagonal-like matrix") {
    CMat Z = CMat::Zero(2, 2);
    Z(0, 0) = 3.0;
    Z(1, 1) = 1.0;
    const auto svd = truncated_svd(Z, 2);
    CHECK(svd.singular_values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(svd.singular_values[1] == doctest::Approx(1.0).epsilon(1e-12));

    const auto zero = truncated_svd(CMat::Zero(3, 3), 1);
    CHECK(zero.singular_values[0] == 0.0);
}

TEST_CASE("truncated_svd reconstructs a rank-3 matrix and is orthonormal") {
    const auto C = generate_ensemble(
        spec_of(8, 16, 3, Generator::GaussianFactors, 5));
    const auto svd = truncated_svd(C, 3);

    const CMat I3 = CMat::Identity(3, 3);
    CHECK((svd.left_vectors.adjoint() * svd.left_vectors - I3).norm() < 1e-10);
    CHECK((svd.right_vectors.adjoint() * svd.right_vectors - I3).norm() <
          1e-10);
    CHECK(svd.singular_values[0] >= svd.singular_values[1]);
    CHECK(svd.singular_values[1] >= svd.singular_values[2]);

    // reference: full dense SVD reconstruction
    Eigen::JacobiSVD<CMat> full(C.entries,
                                Eigen::ComputeThinU | Eigen::ComputeThinV);
    const CMat ref = full.matrixU().leftCols(3) *
                     full.singularValues().head(3).asDiagonal() *
                     full.matrixV().leftCols(3).adjoint();
    const CMat ours = svd.left_vectors * svd.singular_values.asDiagonal() *
                      svd.right_vectors.adjoint();
    CHECK((ours - C.entries).norm() < 1e-10 * C.entries.norm());
    CHECK((ours - ref).norm() < 1e-10 * C.entries.norm());
}

TEST_CASE("coherence of frequency spikes is 1") {
    // R orthogonal frequency-spike rows: V spans the first R coordinates.
    const int R = 3, W = 16;
    CMat C = CMat::Zero(R, W);
    for (int r = 0; r < R; ++r) C(r, r) = 1.0 + r;  // distinct scales
    const auto rep = coherence(from_data(C), 64);
    CHECK(rep.mu_squared == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("coherence of a unimodular phase ramp attains W") {
    const int W = 16;
    const Eigen::Index omega = 64;  // multiple of W, ramp aligns with grid
    CMat C(1, W);
    const int k = 5;
    for (int w = 0; w < W; ++w) {
        const double phase = -2.0 * EIGEN_PI * w * k / W;
        C(0, w) = Complex(std::cos(phase), std::sin(phase));
    }
    const auto rep = coherence(from_data(C), omega);
    CHECK(rep.mu_squared ==
          doctest::Approx(static_cast<double>(W)).epsilon(1e-9));
}

TEST_CASE("time-concentrated generator attains the coherence upper bound") {
    const int M = 8, W = 32, R = 4;
    const auto C = generate_ensemble(
        spec_of(M, W, R, Generator::TimeConcentrated, 11));
    const auto rep = coherence(C, 128);  // omega multiple of W
    CHECK(rep.mu_squared >= 0.99 * W / R);
    CHECK(rep.mu_squared <= static_cast<double>(W) / R + 1e-9);
}

TEST_CASE("coherence bounds hold for random ensembles") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto C = generate_ensemble(
            spec_of(8, 24, 3, Generator::GaussianFactors, seed));
        const auto rep = coherence(C, 48);
        CHECK(rep.mu_squared >= 1.0 - 1e-9);
        CHECK(rep.mu_squared <= 24.0 / 3.0 + 1e-9);
    }
}

TEST_CASE("coherence is invariant under row mixing") {
    const auto C = generate_ensemble(
        spec_of(6, 20, 2, Generator::GaussianFactors, 21));
    CMat G(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            G(i, j) = Complex(rng::gaussian(4, 0, i * 6 + j),
                              rng::gaussian(4, 1, i * 6 + j));
    G += 3.0 * CMat::Identity(6, 6);  // keep it invertible
    const auto mixed = from_data(G * C.entries);
    CHECK(coherence(C, 40).mu_squared ==
          doctest::Approx(coherence(mixed, 40).mu_squared).epsilon(1e-8));
}

TEST_CASE("coherence rejects zero matrices and omega < W") {
    CHECK_THROWS_AS(coherence(from_data(CMat::Zero(2, 4)), 8), EnsembleError);
    const auto C = generate_ensemble(
        spec_of(2, 8, 1, Generator::GaussianFactors, 1));
    CHECK_THROWS_AS(coherence(C, 4), EnsembleError);
}

TEST_CASE("synthesize: DC-only row gives a constant 1/sqrt(W)") {
    const int W = 8;
    CMat C = CMat::Zero(1, W);
    C(0, 0) = 1.0;
    const CMat X = synthesize_samples(from_data(C), W);
    for (int n = 0; n < W; ++n)
        CHECK(std::abs(X(0, n) - 1.0 / std::sqrt(double(W))) < 1e-12);

    CHECK(synthesize_samples(from_data(CMat::Zero(3, 5)), 10).norm() == 0.0);
    CHECK_THROWS_AS(synthesize_samples(from_data(CMat::Zero(3, 5)), 4),
                    EnsembleError);
}

TEST_CASE("synthesize matches the dense partial-Fourier oracle") {
    const int M = 3, W = 7;
    const Eigen::Index omega = 19;
    const auto C = generate_ensemble(
        spec_of(M, W, 2, Generator::GaussianFactors, 13));
    // dense oracle: X[m,n] = (1/sqrt(omega)) sum_w C[m,w] e^{+j 2 pi q(w) n / omega}
    CMat F(W, omega);
    for (int w = 0; w < W; ++w)
        for (Eigen::Index n = 0; n < omega; ++n) {
            const double phase = 2.0 * EIGEN_PI *
                                 static_cast<double>(fft::grid_bin(w, W, omega)) *
                                 n / omega;
            F(w, n) = Complex(std::cos(phase), std::sin(phase)) /
                      std::sqrt(static_cast<double>(omega));
        }
    const CMat oracle = C.entries * F;
    const CMat fast = synthesize_samples(C, omega);
    CHECK((fast - oracle).norm() < 1e-10 * oracle.norm());
}

TEST_CASE("signal-mode synthesis is real at any rate") {
    const auto C = generate_ensemble(spec_of(
        4, 31, 2, Generator::GaussianFactors, 23, SymmetryMode::Signal));
    const CMat X = synthesize_samples(C, 128);
    for (int m = 0; m < 4; ++m) {
        const double row_norm = X.row(m).norm();
        CHECK(X.row(m).imag().cwiseAbs().maxCoeff() < 1e-9 * row_norm);
    }
}

TEST_CASE("synthesis round-trips through the forward transform") {
    const auto C = generate_ensemble(
        spec_of(5, 12, 3, Generator::GaussianFactors, 31));
    const CMat X = synthesize_samples(C, 40);
    CMat back(5, 12);
    for (int m = 0; m < 5; ++m)
        back.row(m) = fft::truncate(X.row(m).transpose(), 12).transpose();
    CHECK((back - C.entries).norm() < 1e-10 * C.entries.norm());
}

TEST_CASE("rank_r_relative_error basics") {
    const auto C = generate_ensemble(
        spec_of(6, 10, 2, Generator::GaussianFactors, 3));
    CHECK(rank_r_relative_error(C, 2) < 1e-12);

    const int n = 5;
    CHECK(rank_r_relative_error(CMat(CMat::Identity(n, n)), n - 1) ==
          doctest::Approx(1.0 / std::sqrt(double(n))).epsilon(1e-12));

    CHECK_THROWS_AS(rank_r_relative_error(CMat(CMat::Zero(2, 2)), 1),
                    EnsembleError);
}

TEST_CASE("rank_r_relative_error agrees with a brute-force tail sum") {
    const auto C = generate_ensemble(
        spec_of(9, 14, 9, Generator::GaussianFactors, 77));
    Eigen::JacobiSVD<CMat> svd(C.entries);
    const Eigen::VectorXd s = svd.singularValues();
    for (int r = 1; r <= 8; ++r) {
        double tail = 0.0;
        for (int i = r; i < s.size(); ++i) tail += s[i] * s[i];
        const double expected = std::sqrt(tail) / C.entries.norm();
        CHECK(rank_r_relative_error(C, r) ==
              doctest::Approx(expected).epsilon(1e-10));
    }
}
