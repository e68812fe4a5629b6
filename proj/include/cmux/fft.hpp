#ifndef CMUX_FFT_HPP
#define CMUX_FFT_HPP

#include <complex>
#include <unsupported/Eigen/FFT>
#include <Eigen/Dense>

namespace cmux {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

namespace fft {

inline Eigen::FFT<double>& engine() {
    thread_local Eigen::FFT<double> f;
    return f;
}

// Unnormalized forward DFT: X[k] = sum_n x[n] e^{-j 2 pi k n / N}.
inline CVec forward(const CVec& x) {
    CVec out(x.size());
    engine().fwd(out, x);
    return out;
}

// Normalized-by-N inverse DFT: x[n] = (1/N) sum_k X[k] e^{+j 2 pi k n / N}.
inline CVec inverse(const CVec& X) {
    CVec out(X.size());
    engine().inv(out, X);
    return out;
}

// Map coefficient bin w (0 <= w < W) to its bin on the length-omega DFT grid.
// The lower half stays put; the upper half represents negative frequencies and
// lands at the top of the grid, so conjugate-symmetric coefficient rows
// synthesize real samples at any rate omega >= W.
inline Eigen::Index grid_bin(Eigen::Index w, Eigen::Index W, Eigen::Index omega) {
    return (2 * w <= W) ? w : omega - W + w;
}

// Interpolate W coefficients to omega time samples:
// x[n] = (1/sqrt(omega)) sum_w c[w] e^{+j 2 pi q(w) n / omega}.
// Columns of this map are orthonormal in C^omega.
inline CVec interpolate(const CVec& c, Eigen::Index omega) {
    const Eigen::Index W = c.size();
    CVec padded = CVec::Zero(omega);
    for (Eigen::Index w = 0; w < W; ++w) padded[grid_bin(w, W, omega)] = c[w];
    return inverse(padded) * std::sqrt(static_cast<double>(omega));
}

// Adjoint of interpolate: forward DFT scaled by 1/sqrt(omega), truncated to
// the W coefficient bins.
inline CVec truncate(const CVec& x, Eigen::Index W) {
    const Eigen::Index omega = x.size();
    CVec X = forward(x) / std::sqrt(static_cast<double>(omega));
    CVec c(W);
    for (Eigen::Index w = 0; w < W; ++w) c[w] = X[grid_bin(w, W, omega)];
    return c;
}

// Circular convolution by a filter given through its length-N spectrum.
inline CVec filter(const CVec& x, const CVec& spectrum) {
    return inverse(forward(x).cwiseProduct(spectrum));
}

// Same with the conjugate (adjoint) filter.
inline CVec filter_adjoint(const CVec& x, const CVec& spectrum) {
    return inverse(forward(x).cwiseProduct(spectrum.conjugate()));
}

}  // namespace fft
}  // namespace cmux

#endif
