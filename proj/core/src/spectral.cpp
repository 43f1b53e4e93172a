#include "mlow/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>

#include <fftw3.h>

#include "mlow/error.hpp"

namespace mlow {
namespace {

// FFTW planning is not thread-safe; executing an existing plan on new arrays is.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan r2c(std::size_t n) {
        std::lock_guard lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        std::vector<double> in(n);
        auto* out = fftw_alloc_complex(n / 2 + 1);
        fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out,
                                              FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(out);
        if (plan == nullptr) throw NumericalError("FFTW failed to create a plan of size " + std::to_string(n));
        plans_.emplace(n, plan);
        return plan;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
    }

    std::mutex mutex_;
    std::map<std::size_t, fftw_plan> plans_;
};

// Phase convention: the basis uses cos(k*pi*n/K - phi), while the standard
// forward DFT X_k = sum x[n] e^{-i 2 pi k n / 2K} gives x[n] proportional to
// cos(k*pi*n/K + arg X_k). Hence phi = -arg X_k, folded back into (-pi, pi].
double canonical_phase(double re, double im) {
    double phi = -std::atan2(im, re);
    if (phi <= -std::numbers::pi) phi += 2.0 * std::numbers::pi;
    return phi;
}

}  // namespace

SpectrumSample compute_spectrum(std::span<const double> window) {
    const std::size_t n = window.size();
    if (n < 2 || n % 2 != 0) {
        throw InvalidInput("spectrum window length must be even and >= 2, got " + std::to_string(n));
    }
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(window[i])) {
            throw InvalidInput("spectrum window has a non-finite entry at index " + std::to_string(i));
        }
        abs_sum += std::abs(window[i]);
    }

    const std::size_t levels = n / 2;
    std::vector<double> in(window.begin(), window.end());
    std::vector<std::complex<double>> out(levels + 1);
    fftw_execute_dft_r2c(PlanCache::instance().r2c(n), in.data(),
                         reinterpret_cast<fftw_complex*>(out.data()));

    // Bins whose magnitude sits at the transform's roundoff floor are exact zeros.
    const double zero_floor = 32.0 * std::numeric_limits<double>::epsilon() * abs_sum;

    SpectrumSample sample;
    sample.window_length = n;
    sample.amplitudes.resize(static_cast<Eigen::Index>(levels + 1));
    sample.phases.resize(static_cast<Eigen::Index>(levels + 1));
    for (std::size_t k = 0; k <= levels; ++k) {
        const auto idx = static_cast<Eigen::Index>(k);
        double re = out[k].real();
        double im = out[k].imag();
        if (k == 0 || k == levels) im = 0.0;  // real by symmetry
        const double magnitude = std::hypot(re, im);
        if (magnitude <= zero_floor) {
            sample.amplitudes[idx] = 0.0;
            sample.phases[idx] = 0.0;
            continue;
        }
        sample.amplitudes[idx] = one_sided_weight(k, levels) * magnitude;
        sample.phases[idx] = canonical_phase(re, im);
    }
    return sample;
}

BasisMatrix reconstruct_bases(const SpectrumSample& sample, std::size_t horizon) {
    const std::size_t n = sample.window_length;
    const std::size_t levels = sample.levels();
    if (horizon < 1 || horizon > n) {
        throw InvalidInput("basis horizon must lie in [1, " + std::to_string(n) + "], got " +
                           std::to_string(horizon));
    }
    if (static_cast<std::size_t>(sample.phases.size()) != levels + 1) {
        throw InvalidInput("spectrum sample has inconsistent phase vector length");
    }

    // cos(2*pi*m/n) and sin(2*pi*m/n) for m = 0..n-1; k*n' is reduced modulo n,
    // so every entry is built from an exactly-reduced table angle.
    std::vector<double> cos_table(n);
    std::vector<double> sin_table(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
        cos_table[m] = std::cos(angle);
        sin_table[m] = std::sin(angle);
    }

    const double scale = 1.0 / static_cast<double>(n);
    const std::size_t first = n - horizon;
    BasisMatrix basis;
    basis.window_length = n;
    basis.horizon = horizon;
    basis.values.resize(static_cast<Eigen::Index>(levels), static_cast<Eigen::Index>(horizon));
    for (std::size_t k = 1; k <= levels; ++k) {
        const double phi = sample.phases[static_cast<Eigen::Index>(k)];
        const double cp = std::cos(phi);
        const double sp = std::sin(phi);
        for (std::size_t t = 0; t < horizon; ++t) {
            const std::size_t m = (k * (first + t)) % n;
            // cos(a - phi) = cos a cos phi + sin a sin phi
            basis.values(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(t)) =
                scale * (cos_table[m] * cp + sin_table[m] * sp);
        }
    }
    return basis;
}

Eigen::VectorXd mean_intercept(const SpectrumSample& sample, std::size_t horizon) {
    const double sign = sample.phases[0] == 0.0 ? 1.0 : -1.0;
    const double mean = sign * sample.amplitudes[0] / static_cast<double>(sample.window_length);
    return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(horizon), mean);
}

Eigen::VectorXd reconstruct_window(const SpectrumSample& sample, std::size_t horizon) {
    const BasisMatrix basis = reconstruct_bases(sample, horizon);
    const Eigen::VectorXd mean = mean_intercept(sample, horizon);
    const auto levels = static_cast<Eigen::Index>(sample.levels());
    Eigen::VectorXd out(static_cast<Eigen::Index>(horizon));
    for (Eigen::Index t = 0; t < out.size(); ++t) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < levels; ++k) acc += sample.amplitudes[k + 1] * basis.values(k, t);
        out[t] = acc + mean[t];
    }
    return out;
}

std::vector<SpectrumSample> compute_spectra(const std::vector<std::span<const double>>& windows,
                                            unsigned threads) {
    std::vector<SpectrumSample> out(windows.size());
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(windows.size())));
    if (threads <= 1) {
        for (std::size_t i = 0; i < windows.size(); ++i) out[i] = compute_spectrum(windows[i]);
        return out;
    }
    // Warm the plan cache up front for every distinct size.
    for (const auto& w : windows) {
        if (w.size() >= 2 && w.size() % 2 == 0) PlanCache::instance().r2c(w.size());
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < windows.size(); i += threads) out[i] = compute_spectrum(windows[i]);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

}  // namespace mlow
