#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mlow/dataio.hpp"
#include "mlow/pipeline.hpp"

namespace mlow {

enum class FeatureMode { raw, mlow, ma };

std::string_view to_string(FeatureMode mode) noexcept;
FeatureMode parse_feature_mode(std::string_view name);

/// Feature vector plus the level that was removed from it; predictions are
/// made in level-removed units and the level is added back.
struct FeatureVector {
    Eigen::VectorXd values;
    double level = 0.0;
};

/// Last T samples minus their mean.
FeatureVector featurize_raw(std::span<const double> tail);
/// [Z_1, ..., Z_V, X_r] flattened; X_m is the level.
FeatureVector featurize_mlow(const Decomposition& decomposition);
/// [trend, seasonal] of the mean-removed tail.
FeatureVector featurize_ma(std::span<const double> tail, std::size_t kernel = kDefaultMovingAverageKernel);

std::size_t feature_count(FeatureMode mode, std::size_t horizon, std::size_t rank);

/// Featurizes a 2K window in any mode (model required for mlow).
FeatureVector featurize(FeatureMode mode, std::span<const double> window, const MlowModel& model,
                        std::size_t ma_kernel = kDefaultMovingAverageKernel);

struct RidgeModel {
    Eigen::MatrixXd weights;  // L x F
    Eigen::VectorXd bias;     // L
    double alpha = 0.0;
    FeatureMode mode = FeatureMode::raw;

    Eigen::VectorXd predict(const Eigen::VectorXd& features) const;
};

/// Closed-form (X^T X + alpha I) w = X^T Y per output. With an intercept the
/// columns are centered first and the intercept is left unpenalized.
RidgeModel fit_ridge(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets, double alpha,
                     bool fit_intercept = true);

/// One model per alpha, sharing the Gram-matrix computation.
std::vector<RidgeModel> fit_ridge_path(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                                       const std::vector<double>& alphas, bool fit_intercept = true);

/// Rows are (channel, window) pairs; targets are in raw signal units.
struct ForecastDataset {
    Eigen::MatrixXd features;  // M x F
    Eigen::MatrixXd targets;   // M x L
    Eigen::VectorXd levels;    // M
    std::vector<std::size_t> channels;
    FeatureMode mode = FeatureMode::raw;

    std::size_t size() const noexcept { return static_cast<std::size_t>(features.rows()); }
    /// targets minus each row's level
    Eigen::MatrixXd centered_targets() const;
};

/// Every 2K window of `series` that is followed by `horizon` target samples.
ForecastDataset build_dataset(const Eigen::MatrixXd& series, FeatureMode mode, const MlowModel& model,
                              std::size_t horizon, std::size_t stride = 1,
                              std::size_t ma_kernel = kDefaultMovingAverageKernel);

struct EvalReport {
    double mse = 0.0;
    double mae = 0.0;
    std::size_t n_windows = 0;
    std::size_t horizon = 0;
    FeatureMode mode = FeatureMode::raw;
    double alpha = 0.0;
    Eigen::VectorXd mse_per_step;
    Eigen::VectorXd mae_per_step;
};

/// Errors over every (window, step) cell, averaged per channel first and then
/// across channels. Throws InsufficientData on an empty dataset.
EvalReport evaluate(const RidgeModel& model, const ForecastDataset& data);
/// Same metrics for precomputed predictions (M x L, raw units).
EvalReport evaluate_predictions(const Eigen::MatrixXd& predictions, const ForecastDataset& data);

nlohmann::json eval_report_to_json(const EvalReport& report);

inline const std::vector<double> kDefaultAlphaGrid{1e-3, 1e-2, 1e-1, 1.0};

struct ExperimentOptions {
    std::size_t horizon = 96;  // L
    std::vector<FeatureMode> modes{FeatureMode::raw, FeatureMode::mlow, FeatureMode::ma};
    std::vector<double> alphas = kDefaultAlphaGrid;
    std::size_t ma_kernel = kDefaultMovingAverageKernel;
    std::size_t window_stride = 1;
    SplitRatios ratios;
};

struct ModeResult {
    FeatureMode mode = FeatureMode::raw;
    double alpha = 0.0;
    std::vector<double> val_mse;  // one per alpha, same order as the grid
    EvalReport val;
    EvalReport test;
};

struct ExperimentReport {
    std::vector<ModeResult> modes;
    std::size_t train_windows = 0;
    std::size_t val_windows = 0;
    std::size_t test_windows = 0;

    const ModeResult& result(FeatureMode mode) const;
};

/// Splits `table`, fits each mode's ridge on train, selects alpha on val and
/// reports test metrics. The MLOW model must match the split's lookback.
ExperimentReport run_forecast_experiment(const SeriesTable& table, const MlowModel& model,
                                         const ExperimentOptions& options);

}  // namespace mlow
