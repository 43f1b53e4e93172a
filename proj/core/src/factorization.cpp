#include "mlow/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <random>
#include <string>

#include <Eigen/SVD>

#include "detail.hpp"
#include "mlow/error.hpp"
#include "mlow/log.hpp"

namespace mlow {

namespace {

std::mutex& warning_mutex() {
    static std::mutex m;
    return m;
}

WarningHandler& warning_handler() {
    static WarningHandler handler = [](std::string_view msg) { std::clog << "mlow: warning: " << msg << '\n'; };
    return handler;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
    std::lock_guard lock(warning_mutex());
    std::swap(warning_handler(), handler);
    return handler;
}

void log_warning(std::string_view message) {
    std::lock_guard lock(warning_mutex());
    if (warning_handler()) warning_handler()(message);
}

std::string_view to_string(Method method) noexcept {
    switch (method) {
        case Method::pca: return "pca";
        case Method::nmf: return "nmf";
        case Method::semi_nmf: return "semi_nmf";
        case Method::hyperplane_nmf: return "hyperplane_nmf";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    if (name == "pca") return Method::pca;
    if (name == "nmf") return Method::nmf;
    if (name == "semi_nmf" || name == "semi-nmf") return Method::semi_nmf;
    if (name == "hyperplane_nmf" || name == "hyperplane-nmf") return Method::hyperplane_nmf;
    throw InvalidInput("unknown factorization method '" + std::string(name) +
                       "' (expected pca, nmf, semi_nmf or hyperplane_nmf)");
}

namespace detail {

void require_finite(const Eigen::MatrixXd& m, std::string_view what) {
    if (!m.allFinite()) throw InvalidInput(std::string(what) + " contains non-finite values");
}

void require_nonnegative(const Eigen::MatrixXd& m, std::string_view what) {
    require_finite(m, what);
    if (m.size() > 0 && m.minCoeff() < 0.0) throw InvalidInput(std::string(what) + " must be elementwise nonnegative");
}

void require_rank(const Eigen::MatrixXd& spectra, std::size_t rank, bool bounded) {
    if (rank < 1) throw InvalidRank("rank V must be >= 1");
    if (spectra.rows() == 0 || spectra.cols() == 0) throw InvalidInput("spectra matrix is empty");
    const auto limit = static_cast<std::size_t>(std::min(spectra.rows(), spectra.cols()));
    if (bounded && rank > limit) {
        throw InvalidRank("rank V = " + std::to_string(rank) + " exceeds min(N, K) = " + std::to_string(limit));
    }
}

Eigen::MatrixXd top_right_singular_vectors(const Eigen::MatrixXd& spectra, std::size_t rank) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(spectra, Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("SVD did not converge");
    const auto v = static_cast<Eigen::Index>(rank);
    Eigen::MatrixXd h = svd.matrixV().leftCols(v).transpose();
    for (Eigen::Index r = 0; r < h.rows(); ++r) {
        double s = h.row(r).sum();
        if (s == 0.0) {
            Eigen::Index arg = 0;
            h.row(r).cwiseAbs().maxCoeff(&arg);
            s = h(r, arg);
        }
        if (s < 0.0) h.row(r) *= -1.0;
    }
    return h;
}

void reseed_collapsed_rows(Eigen::MatrixXd& components, std::mt19937_64& rng, std::string_view method,
                           std::size_t iteration) {
    for (Eigen::Index r = 0; r < components.rows(); ++r) {
        if (components.row(r).norm() >= kUpdateEpsilon) continue;
        double sum = 0.0;
        std::size_t count = 0;
        for (Eigen::Index i = 0; i < components.size(); ++i) {
            const double x = components.data()[i];
            if (x > 0.0) {
                sum += x;
                ++count;
            }
        }
        const double hi = count > 0 ? std::max(sum / static_cast<double>(count), 2e-3) : 1e-2;
        std::uniform_real_distribution<double> dist(1e-3, hi);
        for (Eigen::Index c = 0; c < components.cols(); ++c) components(r, c) = dist(rng);
        log_warning(std::string(method) + ": component " + std::to_string(r) + " collapsed at iteration " +
                    std::to_string(iteration) + "; re-seeded");
    }
}

}  // namespace detail

ComponentMatrix fit_pca(const Eigen::MatrixXd& spectra, std::size_t rank) {
    detail::require_finite(spectra, "spectra");
    detail::require_rank(spectra, rank, true);
    ComponentMatrix out;
    out.values = detail::top_right_singular_vectors(spectra, rank);
    out.method = Method::pca;
    return out;
}

NmfResult fit_nmf(const Eigen::MatrixXd& spectra, const FitOptions& options) {
    detail::require_nonnegative(spectra, "NMF input");
    detail::require_rank(spectra, options.rank, false);
    if (options.iterations < 1) throw InvalidInput("iterations F must be >= 1");

    const auto n = spectra.rows();
    const auto k = spectra.cols();
    const auto v = static_cast<Eigen::Index>(options.rank);
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> dist(0.01, 1.0);
    const double scale = std::sqrt(std::max(spectra.mean(), kUpdateEpsilon) / static_cast<double>(v));
    Eigen::MatrixXd w(n, v);
    Eigen::MatrixXd h(v, k);
    // W first, then H, row-major draw order for reproducibility.
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < v; ++j) w(i, j) = scale * dist(rng);
    for (Eigen::Index i = 0; i < v; ++i)
        for (Eigen::Index j = 0; j < k; ++j) h(i, j) = scale * dist(rng);

    auto report = [&](std::size_t it) {
        if (!options.on_iteration) return;
        const double obj = 0.5 * (spectra - w * h).squaredNorm();
        options.on_iteration(IterationState{it, h, &w, obj});
    };
    report(0);

    for (std::size_t it = 1; it <= options.iterations; ++it) {
        const Eigen::MatrixXd ht = h.transpose();
        const Eigen::MatrixXd rht = spectra * ht;
        const Eigen::MatrixXd hht = h * ht;
        w.array() *= rht.array() / ((w * hht).array() + kUpdateEpsilon);

        const Eigen::MatrixXd wt = w.transpose();
        const Eigen::MatrixXd wtr = wt * spectra;
        const Eigen::MatrixXd wtw = wt * w;
        h.array() *= wtr.array() / ((wtw * h).array() + kUpdateEpsilon);

        if (!h.allFinite() || !w.allFinite()) throw NumericalError("NMF produced non-finite values");
        detail::reseed_collapsed_rows(h, rng, "nmf", it);
        report(it);
    }

    NmfResult result;
    result.components.values = std::move(h);
    result.components.method = Method::nmf;
    result.components.seed = options.seed;
    result.components.iterations = options.iterations;
    result.coefficients = std::move(w);
    return result;
}

Eigen::MatrixXd least_squares_coefficients(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& components) {
    if (rows.cols() != components.cols()) {
        throw InvalidInput("coefficient rows have " + std::to_string(rows.cols()) + " levels, components have " +
                           std::to_string(components.cols()));
    }
    const auto v = components.rows();
    Eigen::MatrixXd gram = components * components.transpose();
    const double ridge = 1e-8 * gram.trace() / static_cast<double>(v);
    if (!(ridge > 0.0) || !std::isfinite(ridge)) throw NumericalError("semi-NMF: H H^T is zero or non-finite");
    gram.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) throw NumericalError("semi-NMF: ridge system factorization failed");
    Eigen::MatrixXd w = ldlt.solve(components * rows.transpose()).transpose();
    if (!w.allFinite()) throw NumericalError("semi-NMF: least-squares coefficients are non-finite");
    return w;
}

ComponentMatrix fit_semi_nmf(const Eigen::MatrixXd& spectra, const FitOptions& options) {
    detail::require_finite(spectra, "semi-NMF input");
    detail::require_rank(spectra, options.rank, true);
    if (options.iterations < 1) throw InvalidInput("iterations F must be >= 1");

    const auto k = spectra.cols();
    const auto v = static_cast<Eigen::Index>(options.rank);
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> dist(0.01, 1.0);
    const double scale = std::sqrt(std::max(std::abs(spectra.mean()), kUpdateEpsilon) / static_cast<double>(v));
    Eigen::MatrixXd h(v, k);
    for (Eigen::Index i = 0; i < v; ++i)
        for (Eigen::Index j = 0; j < k; ++j) h(i, j) = scale * dist(rng);

    Eigen::MatrixXd w = least_squares_coefficients(spectra, h);
    auto report = [&](std::size_t it) {
        if (!options.on_iteration) return;
        const double obj = 0.5 * (spectra - w * h).squaredNorm();
        options.on_iteration(IterationState{it, h, &w, obj});
    };
    report(0);

    auto pos = [](const Eigen::MatrixXd& a) -> Eigen::MatrixXd { return a.cwiseMax(0.0); };
    auto neg = [](const Eigen::MatrixXd& a) -> Eigen::MatrixXd { return (-a).cwiseMax(0.0); };

    for (std::size_t it = 1; it <= options.iterations; ++it) {
        const Eigen::MatrixXd wtr = w.transpose() * spectra;
        const Eigen::MatrixXd wtw = w.transpose() * w;
        const Eigen::MatrixXd numer = pos(wtr) + neg(wtw) * h;
        const Eigen::MatrixXd denom = neg(wtr) + pos(wtw) * h;
        h.array() *= numer.array() / (denom.array() + kUpdateEpsilon);
        if (!h.allFinite()) throw NumericalError("semi-NMF produced non-finite components");
        detail::reseed_collapsed_rows(h, rng, "semi_nmf", it);
        w = least_squares_coefficients(spectra, h);
        report(it);
    }

    ComponentMatrix out;
    out.values = std::move(h);
    out.method = Method::semi_nmf;
    out.seed = options.seed;
    out.iterations = options.iterations;
    return out;
}

Eigen::MatrixXd project_coefficients(const Eigen::MatrixXd& rows, const ComponentMatrix& components) {
    if (components.method != Method::pca && components.method != Method::hyperplane_nmf) {
        throw InvalidMethod("projection coefficients require pca or hyperplane_nmf components, got " +
                            std::string(to_string(components.method)));
    }
    if (static_cast<std::size_t>(rows.cols()) != components.levels()) {
        throw InvalidInput("coefficient rows have " + std::to_string(rows.cols()) + " levels, components have " +
                           std::to_string(components.levels()));
    }
    return rows * components.values.transpose();
}

Eigen::MatrixXd infer_nmf_coefficients(const Eigen::MatrixXd& rows, const ComponentMatrix& components,
                                       std::size_t iterations, std::optional<std::uint64_t> seed) {
    if (components.method != Method::nmf) {
        throw InvalidMethod("iterative inference requires nmf components, got " +
                            std::string(to_string(components.method)));
    }
    if (static_cast<std::size_t>(rows.cols()) != components.levels()) {
        throw InvalidInput("coefficient rows have " + std::to_string(rows.cols()) + " levels, components have " +
                           std::to_string(components.levels()));
    }
    detail::require_nonnegative(rows, "NMF inference input");

    const Eigen::MatrixXd& h = components.values;
    const auto m = rows.rows();
    const auto v = h.rows();
    std::mt19937_64 rng(seed.value_or(components.seed));
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    const double level = rows.size() > 0 ? rows.mean() : 0.0;
    const double scale = std::max(level, kUpdateEpsilon) /
                         (static_cast<double>(v) * std::max(h.mean(), kUpdateEpsilon));
    Eigen::MatrixXd w(m, v);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < v; ++j) w(i, j) = scale * dist(rng);

    const Eigen::MatrixXd rht = rows * h.transpose();
    const Eigen::MatrixXd hht = h * h.transpose();
    for (std::size_t it = 0; it < iterations; ++it) {
        w.array() *= rht.array() / ((w * hht).array() + kUpdateEpsilon);
    }
    return w;
}

Eigen::MatrixXd coefficients_for(const Eigen::MatrixXd& rows, const ComponentMatrix& components) {
    switch (components.method) {
        case Method::pca:
        case Method::hyperplane_nmf: return project_coefficients(rows, components);
        case Method::semi_nmf: return least_squares_coefficients(rows, components.values);
        case Method::nmf: return infer_nmf_coefficients(rows, components);
    }
    throw InvalidMethod("unknown method");
}

double reconstruction_error(const Eigen::MatrixXd& spectra, const Eigen::MatrixXd& coefficients,
                            const Eigen::MatrixXd& components) {
    return (spectra - coefficients * components).norm();
}

double method_reconstruction_error(const Eigen::MatrixXd& spectra, const ComponentMatrix& components) {
    return reconstruction_error(spectra, coefficients_for(spectra, components), components.values);
}

double mean_pairwise_cosine(const Eigen::MatrixXd& components) {
    const auto v = components.rows();
    if (v < 2) return 0.0;
    const Eigen::VectorXd norms = components.rowwise().norm().cwiseMax(kUpdateEpsilon);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < v; ++i)
        for (Eigen::Index j = i + 1; j < v; ++j)
            sum += components.row(i).dot(components.row(j)) / (norms[i] * norms[j]);
    return sum / static_cast<double>(v * (v - 1) / 2);
}

}  // namespace mlow
