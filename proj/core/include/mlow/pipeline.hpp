#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mlow/factorization.hpp"
#include "mlow/spectral.hpp"

namespace mlow {

struct MlowConfig {
    std::size_t input_horizon = 96;  // T
    std::size_t freq_levels = 168;   // K, spectra come from 2K-long windows
    std::size_t rank = 10;           // V
    std::size_t iterations = 1000;   // F
    double lambda = 20.0;
    Method method = Method::hyperplane_nmf;
    std::uint64_t seed = 0;
    std::size_t stride = 1;

    std::size_t window_length() const noexcept { return 2 * freq_levels; }
    /// Throws InvalidInput describing the first violated constraint.
    void validate() const;
};

/// Pooled amplitude rows (N x (K+1)); column 0 is the mean level.
struct SpectraMatrix {
    Eigen::MatrixXd values;

    std::size_t n_samples() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t levels() const noexcept { return static_cast<std::size_t>(values.cols()); }
    /// Levels 1..K, the factorizers' input.
    Eigen::MatrixXd working() const { return values.rightCols(values.cols() - 1); }
};

struct FitMetadata {
    std::size_t n_training_spectra = 0;
    std::size_t channels = 0;
    std::uint64_t seed = 0;
    double wall_time_seconds = 0.0;  // not persisted, so model files are reproducible
    double final_objective = 0.0;
};

struct MlowModel {
    MlowConfig config;
    ComponentMatrix components;
    FitMetadata metadata;
};

/// Per-window output. Sum of pieces + residual + mean equals the window tail.
struct Decomposition {
    Eigen::MatrixXd pieces;        // Z, V x T
    Eigen::VectorXd residual;      // X_r
    Eigen::VectorXd mean;          // X_m (constant)
    Eigen::VectorXd coefficients;  // W, V
    Eigen::MatrixXd bases;         // P = H B, V x T
    Eigen::VectorXd input;         // X, the last T window samples

    /// W P, which equals the column-sum of the pieces.
    Eigen::VectorXd low_rank() const;
    /// max |sum Z + X_r + X_m - X|
    double identity_error() const;
};

/// One amplitude row per (channel, offset), channel-major then offset, offsets
/// stepping by config.stride over every full 2K window. Throws InsufficientData
/// when the series is not longer than 2K.
SpectraMatrix collect_training_spectra(const Eigen::MatrixXd& series, const MlowConfig& config);

/// Collects spectra and runs the configured factorizer.
MlowModel fit(const Eigen::MatrixXd& train_series, const MlowConfig& config);

/// Decomposes one 2K window; only its last T samples are modelled.
Decomposition transform(const MlowModel& model, std::span<const double> window);

struct MovingAverageDecomposition {
    Eigen::VectorXd trend;
    Eigen::VectorXd seasonal;
};

inline constexpr std::size_t kDefaultMovingAverageKernel = 24;

/// Centered moving mean with replicate padding: (kernel-1)/2 samples in front,
/// kernel/2 behind; seasonal = window - trend.
MovingAverageDecomposition moving_average_decompose(std::span<const double> window,
                                                    std::size_t kernel = kDefaultMovingAverageKernel);

// Model persistence.
nlohmann::json config_to_json(const MlowConfig& config);
MlowConfig config_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const MlowModel& model);
MlowModel model_from_json(const nlohmann::json& doc);
void save_model(const std::filesystem::path& path, const MlowModel& model);
MlowModel load_model(const std::filesystem::path& path);

/// Everything needed to redraw the component-weight figure.
struct ComponentReport {
    Eigen::MatrixXd weights;             // V x K
    Eigen::MatrixXd normalized_weights;  // unit-norm rows
    Eigen::MatrixXd cosine;              // V x V
    Eigen::VectorXd spectra_mean;        // per level 1..K
    Eigen::VectorXd spectra_q025;
    Eigen::VectorXd spectra_q975;
};

/// Nearest-rank quantile: the ceil(q*n)-th smallest value (q = 0 gives the minimum).
double nearest_rank_quantile(std::vector<double> values, double q);

ComponentReport export_component_report(const MlowModel& model, const SpectraMatrix& spectra);

/// Writes weights.csv, normalized_weights.csv, cosine.csv and spectra_band.csv.
void write_component_report(const std::filesystem::path& directory, const ComponentReport& report);

}  // namespace mlow
