#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mlow {

/// Amplitude/phase pair of one real window of length 2K.
///
/// amplitudes[k] already carries the one-sided weight (1 at k = 0 and k = K,
/// 2 otherwise), so the window is recovered as
///   x[n] = 1/(2K) * sum_k amplitudes[k] * cos(k*pi*n/K - phases[k]).
/// Level 0 encodes the window sum: |sum| with phase 0 (sum >= 0) or pi.
struct SpectrumSample {
    Eigen::VectorXd amplitudes;  // K + 1 entries, all >= 0
    Eigen::VectorXd phases;      // K + 1 entries in (-pi, pi]
    std::size_t window_length = 0;

    std::size_t levels() const noexcept { return window_length / 2; }
};

/// Phase-aware cosine bases for levels 1..K restricted to the last T samples.
struct BasisMatrix {
    Eigen::MatrixXd values;  // K x T
    std::size_t window_length = 0;
    std::size_t horizon = 0;
};

/// Real DFT amplitude/phase extraction (un-normalized forward transform).
/// Throws InvalidInput on odd, too short or non-finite windows.
SpectrumSample compute_spectrum(std::span<const double> window);

/// Rows k = 1..K of (1/(2K)) cos(k*pi*n/K - phi_k) at n = 2K-T .. 2K-1.
BasisMatrix reconstruct_bases(const SpectrumSample& sample, std::size_t horizon);

/// Signed window mean broadcast to length T.
Eigen::VectorXd mean_intercept(const SpectrumSample& sample, std::size_t horizon);

/// amplitudes[1..K] * B + mean intercept, i.e. the last T samples of the window.
/// Each output sample is summed in a fixed level order, so the result for
/// horizon T is bit-identical to the tail of the full-length reconstruction.
Eigen::VectorXd reconstruct_window(const SpectrumSample& sample, std::size_t horizon);

/// One-sided weight a_k used by compute_spectrum.
inline double one_sided_weight(std::size_t k, std::size_t levels) noexcept {
    return (k == 0 || k == levels) ? 1.0 : 2.0;
}

/// Extracts spectra for many windows; output order matches input order and
/// does not depend on the number of worker threads.
std::vector<SpectrumSample> compute_spectra(const std::vector<std::span<const double>>& windows,
                                            unsigned threads = 1);

}  // namespace mlow
