#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace mlow {

enum class Method { pca, nmf, semi_nmf, hyperplane_nmf };

std::string_view to_string(Method method) noexcept;
/// Throws InvalidInput for unknown names.
Method parse_method(std::string_view name);

/// Additive guard for multiplicative-update denominators and norm clamps.
inline constexpr double kUpdateEpsilon = 1e-12;
/// Iterations used by infer_nmf_coefficients when none are given.
inline constexpr std::size_t kDefaultInferenceIterations = 200;

/// Learned low-rank components H (V x K) plus the settings that produced them.
struct ComponentMatrix {
    Eigen::MatrixXd values;
    Method method = Method::hyperplane_nmf;
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    double lambda = 0.0;

    std::size_t rank() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t levels() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

/// Per-iteration view handed to FitOptions::on_iteration. For nmf and
/// hyperplane_nmf `coefficients` is the W used by that iteration's H update;
/// for semi_nmf it is the least-squares W for `components`.
struct IterationState {
    std::size_t iteration = 0;  // 0 = initial state, 1..F after each update
    const Eigen::MatrixXd& components;
    const Eigen::MatrixXd* coefficients = nullptr;
    double objective = 0.0;
};

struct FitOptions {
    std::size_t rank = 10;
    std::size_t iterations = 1000;
    double lambda = 20.0;
    std::uint64_t seed = 0;
    /// Called at iteration 0 and after every update. Objective evaluation is
    /// skipped entirely when unset.
    std::function<void(const IterationState&)> on_iteration;
};

struct NmfResult {
    ComponentMatrix components;
    Eigen::MatrixXd coefficients;  // training W, N x V
};

struct CosinePenalty {
    double penalty = 0.0;
    Eigen::MatrixXd grad_plus;
    Eigen::MatrixXd grad_minus;
};

// All fitters take the working matrix R (N x K, levels 1..K only).

/// Uncentered truncated SVD: H = top-V right singular vectors, sign-fixed so
/// that each row sums to a nonnegative value.
ComponentMatrix fit_pca(const Eigen::MatrixXd& spectra, std::size_t rank);

/// Lee-Seung multiplicative updates, W then H each iteration.
NmfResult fit_nmf(const Eigen::MatrixXd& spectra, const FitOptions& options);

/// Least-squares W with ridge, positive/negative-part multiplicative H update.
ComponentMatrix fit_semi_nmf(const Eigen::MatrixXd& spectra, const FitOptions& options);

/// Multiplicative updates with W tied to R H^T and a cosine diversity penalty.
ComponentMatrix fit_hyperplane_nmf(const Eigen::MatrixXd& spectra, const FitOptions& options);

/// Top-V right singular vectors with non-positive entries replaced by seeded
/// Uniform(1e-3, s_r) draws, s_r being the mean positive entry of the row.
Eigen::MatrixXd hyperplane_initialization(const Eigen::MatrixXd& spectra, std::size_t rank,
                                          std::uint64_t seed);

/// penalty = sum_{i != j} cos(h_i, h_j). grad_plus - grad_minus is the
/// derivative of sum_{j != i} cos(h_i, h_j) with respect to h_i (row i).
CosinePenalty cosine_penalty_and_gradient(const Eigen::MatrixXd& components);

/// W = R H^T. Valid for pca and hyperplane_nmf components.
Eigen::MatrixXd project_coefficients(const Eigen::MatrixXd& rows, const ComponentMatrix& components);

/// min_{W >= 0} 1/2 ||R - W H||^2 by multiplicative updates with H fixed.
Eigen::MatrixXd infer_nmf_coefficients(const Eigen::MatrixXd& rows, const ComponentMatrix& components,
                                       std::size_t iterations = kDefaultInferenceIterations,
                                       std::optional<std::uint64_t> seed = std::nullopt);

/// W = R H^T (H H^T + eps I)^{-1} with eps = 1e-8 tr(H H^T) / V.
Eigen::MatrixXd least_squares_coefficients(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& components);

/// Method-appropriate coefficient rule for new rows.
Eigen::MatrixXd coefficients_for(const Eigen::MatrixXd& rows, const ComponentMatrix& components);

/// ||R - R H^T H||_F^2 + lambda * penalty(H).
double hyperplane_objective(const Eigen::MatrixXd& spectra, const Eigen::MatrixXd& components,
                            double lambda);

/// ||R - W H||_F (no factor 1/2).
double reconstruction_error(const Eigen::MatrixXd& spectra, const Eigen::MatrixXd& coefficients,
                            const Eigen::MatrixXd& components);

/// Reconstruction error of the method's own coefficient rule on `spectra`.
double method_reconstruction_error(const Eigen::MatrixXd& spectra, const ComponentMatrix& components);

/// Mean pairwise cosine similarity over i < j (0 for V = 1).
double mean_pairwise_cosine(const Eigen::MatrixXd& components);

}  // namespace mlow
