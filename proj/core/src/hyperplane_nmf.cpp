#include <algorithm>
#include <cmath>
#include <random>

#include "detail.hpp"
#include "mlow/error.hpp"
#include "mlow/factorization.hpp"

namespace mlow {

CosinePenalty cosine_penalty_and_gradient(const Eigen::MatrixXd& components) {
    const auto v = components.rows();
    const auto k = components.cols();
    const Eigen::VectorXd norms = components.rowwise().norm().cwiseMax(kUpdateEpsilon);
    const Eigen::MatrixXd gram = components * components.transpose();

    CosinePenalty out;
    out.grad_plus = Eigen::MatrixXd::Zero(v, k);
    out.grad_minus = Eigen::MatrixXd::Zero(v, k);
    for (Eigen::Index i = 0; i < v; ++i) {
        double minus_scale = 0.0;
        for (Eigen::Index j = 0; j < v; ++j) {
            if (j == i) continue;
            const double inv = 1.0 / (norms[i] * norms[j]);
            out.penalty += gram(i, j) * inv;
            out.grad_plus.row(i) += inv * components.row(j);
            minus_scale += gram(i, j) * inv / (norms[i] * norms[i]);
        }
        out.grad_minus.row(i) = minus_scale * components.row(i);
    }
    return out;
}

Eigen::MatrixXd hyperplane_initialization(const Eigen::MatrixXd& spectra, std::size_t rank, std::uint64_t seed) {
    Eigen::MatrixXd h = detail::top_right_singular_vectors(spectra, rank);
    std::mt19937_64 rng(seed);
    for (Eigen::Index r = 0; r < h.rows(); ++r) {
        double sum = 0.0;
        std::size_t count = 0;
        for (Eigen::Index c = 0; c < h.cols(); ++c) {
            if (h(r, c) > 0.0) {
                sum += h(r, c);
                ++count;
            }
        }
        const double mean_positive = count > 0 ? sum / static_cast<double>(count) : 1e-2;
        const double lo = std::min(1e-3, mean_positive);
        const double hi = std::max(1e-3, mean_positive);
        std::uniform_real_distribution<double> dist(lo, hi);
        for (Eigen::Index c = 0; c < h.cols(); ++c) {
            if (h(r, c) <= 0.0) h(r, c) = dist(rng);
        }
    }
    return h;
}

double hyperplane_objective(const Eigen::MatrixXd& spectra, const Eigen::MatrixXd& components, double lambda) {
    const Eigen::MatrixXd w = spectra * components.transpose();
    const double frob = (spectra - w * components).squaredNorm();
    if (lambda == 0.0) return frob;
    return frob + lambda * cosine_penalty_and_gradient(components).penalty;
}

ComponentMatrix fit_hyperplane_nmf(const Eigen::MatrixXd& spectra, const FitOptions& options) {
    detail::require_nonnegative(spectra, "Hyperplane-NMF input");
    detail::require_rank(spectra, options.rank, true);
    if (options.iterations < 1) throw InvalidInput("iterations F must be >= 1");
    if (!(options.lambda >= 0.0) || !std::isfinite(options.lambda)) {
        throw InvalidInput("lambda must be finite and >= 0");
    }

    Eigen::MatrixXd h = hyperplane_initialization(spectra, options.rank, options.seed);
    // Reseeding continues from a stream distinct from the initialization draws.
    std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);

    // With W = R H^T every product the update needs reduces to the K x K Gram
    // matrix: W^T R = H G and W^T W H = (H G H^T) H.
    const Eigen::MatrixXd gram = spectra.transpose() * spectra;

    Eigen::MatrixXd w;
    auto report = [&](std::size_t it) {
        if (!options.on_iteration) return;
        w = spectra * h.transpose();
        const double obj = hyperplane_objective(spectra, h, options.lambda);
        options.on_iteration(IterationState{it, h, &w, obj});
    };
    report(0);

    for (std::size_t it = 1; it <= options.iterations; ++it) {
        const Eigen::MatrixXd hg = h * gram;
        const Eigen::MatrixXd wtw = hg * h.transpose();
        Eigen::MatrixXd numer = hg;
        Eigen::MatrixXd denom = wtw * h;
        if (options.lambda > 0.0) {
            const CosinePenalty cos = cosine_penalty_and_gradient(h);
            // The penalty gradient is grad_plus - grad_minus, so for descent its
            // negative part joins the numerator and its positive part the denominator.
            numer += options.lambda * cos.grad_minus;
            denom += options.lambda * cos.grad_plus;
        }
        h.array() *= (numer.array() / (denom.array() + kUpdateEpsilon)).sqrt();
        if (!h.allFinite()) throw NumericalError("Hyperplane-NMF produced non-finite components");
        detail::reseed_collapsed_rows(h, rng, "hyperplane_nmf", it);
        report(it);
    }

    ComponentMatrix out;
    out.values = std::move(h);
    out.method = Method::hyperplane_nmf;
    out.seed = options.seed;
    out.iterations = options.iterations;
    out.lambda = options.lambda;
    return out;
}

}  // namespace mlow
