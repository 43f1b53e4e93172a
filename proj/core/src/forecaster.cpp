#include "mlow/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mlow/error.hpp"

namespace mlow {

std::string_view to_string(FeatureMode mode) noexcept {
    switch (mode) {
        case FeatureMode::raw: return "raw";
        case FeatureMode::mlow: return "mlow";
        case FeatureMode::ma: return "ma";
    }
    return "unknown";
}

FeatureMode parse_feature_mode(std::string_view name) {
    if (name == "raw") return FeatureMode::raw;
    if (name == "mlow") return FeatureMode::mlow;
    if (name == "ma") return FeatureMode::ma;
    throw InvalidInput("unknown feature mode '" + std::string(name) + "' (expected raw, mlow or ma)");
}

FeatureVector featurize_raw(std::span<const double> tail) {
    if (tail.empty()) throw InvalidInput("raw features need a non-empty window");
    const Eigen::Map<const Eigen::VectorXd> x(tail.data(), static_cast<Eigen::Index>(tail.size()));
    FeatureVector out;
    out.level = x.mean();
    out.values = x.array() - out.level;
    return out;
}

FeatureVector featurize_mlow(const Decomposition& d) {
    const auto v = d.pieces.rows();
    const auto t = d.pieces.cols();
    if (d.residual.size() != t || d.mean.size() != t) throw InvalidInput("decomposition has inconsistent shapes");
    FeatureVector out;
    out.values.resize((v + 1) * t);
    for (Eigen::Index i = 0; i < v; ++i) out.values.segment(i * t, t) = d.pieces.row(i).transpose();
    out.values.segment(v * t, t) = d.residual;
    out.level = t > 0 ? d.mean[0] : 0.0;
    return out;
}

FeatureVector featurize_ma(std::span<const double> tail, std::size_t kernel) {
    const FeatureVector centered = featurize_raw(tail);
    const auto n = centered.values.size();
    const MovingAverageDecomposition ma =
        moving_average_decompose(std::span<const double>(centered.values.data(), static_cast<std::size_t>(n)),
                                 std::min<std::size_t>(kernel, static_cast<std::size_t>(n)));
    FeatureVector out;
    out.level = centered.level;
    out.values.resize(2 * n);
    out.values.head(n) = ma.trend;
    out.values.tail(n) = ma.seasonal;
    return out;
}

std::size_t feature_count(FeatureMode mode, std::size_t horizon, std::size_t rank) {
    switch (mode) {
        case FeatureMode::raw: return horizon;
        case FeatureMode::mlow: return (rank + 1) * horizon;
        case FeatureMode::ma: return 2 * horizon;
    }
    return 0;
}

FeatureVector featurize(FeatureMode mode, std::span<const double> window, const MlowModel& model,
                        std::size_t ma_kernel) {
    const std::size_t horizon = model.config.input_horizon;
    if (window.size() != model.config.window_length()) {
        throw InvalidInput("featurize expects a 2K window of " + std::to_string(model.config.window_length()) +
                           " samples, got " + std::to_string(window.size()));
    }
    const auto tail = window.subspan(window.size() - horizon);
    switch (mode) {
        case FeatureMode::raw: return featurize_raw(tail);
        case FeatureMode::mlow: return featurize_mlow(transform(model, window));
        case FeatureMode::ma: return featurize_ma(tail, ma_kernel);
    }
    throw InvalidInput("unknown feature mode");
}

Eigen::VectorXd RidgeModel::predict(const Eigen::VectorXd& features) const {
    if (features.size() != weights.cols()) {
        throw InvalidInput("ridge model expects " + std::to_string(weights.cols()) + " features, got " +
                           std::to_string(features.size()));
    }
    return weights * features + bias;
}

std::vector<RidgeModel> fit_ridge_path(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                                       const std::vector<double>& alphas, bool fit_intercept) {
    if (features.rows() < 1) throw InsufficientData("ridge regression needs at least one sample");
    if (features.rows() != targets.rows()) throw InvalidInput("features and targets have different row counts");
    if (!features.allFinite() || !targets.allFinite()) throw InvalidInput("ridge inputs contain non-finite values");
    for (double a : alphas) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidInput("ridge strength must be finite and >= 0");
    }

    const auto f = features.cols();
    Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(f);
    Eigen::RowVectorXd y_mean = Eigen::RowVectorXd::Zero(targets.cols());
    if (fit_intercept) {
        x_mean = features.colwise().mean();
        y_mean = targets.colwise().mean();
    }
    const Eigen::MatrixXd xc = features.rowwise() - x_mean;
    const Eigen::MatrixXd yc = targets.rowwise() - y_mean;

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(f, f);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    const Eigen::MatrixXd xty = xc.transpose() * yc;

    std::vector<RidgeModel> models;
    models.reserve(alphas.size());
    for (double alpha : alphas) {
        Eigen::MatrixXd system = gram;
        system.diagonal().array() += alpha;
        Eigen::MatrixXd solution;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-14) {
            solution = ldlt.solve(xty);
        } else {
            // Singular normal equations (alpha = 0, rank-deficient X): minimum-norm solution.
            solution = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(system).solve(xty);
        }
        if (!solution.allFinite()) throw NumericalError("ridge solve produced non-finite weights");
        RidgeModel model;
        model.weights = solution.transpose();
        model.bias = (y_mean - x_mean * solution).transpose();
        model.alpha = alpha;
        models.push_back(std::move(model));
    }
    return models;
}

RidgeModel fit_ridge(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets, double alpha,
                     bool fit_intercept) {
    return std::move(fit_ridge_path(features, targets, {alpha}, fit_intercept).front());
}

Eigen::MatrixXd ForecastDataset::centered_targets() const { return targets.colwise() - levels; }

ForecastDataset build_dataset(const Eigen::MatrixXd& series, FeatureMode mode, const MlowModel& model,
                              std::size_t horizon, std::size_t stride, std::size_t ma_kernel) {
    const std::size_t window = model.config.window_length();
    const auto length = static_cast<std::size_t>(series.rows());
    const auto channels = static_cast<std::size_t>(series.cols());
    const std::vector<WindowIndex> index = sliding_windows(length, channels, window, horizon, stride);

    ForecastDataset data;
    data.mode = mode;
    const auto m = static_cast<Eigen::Index>(index.size());
    const auto features = static_cast<Eigen::Index>(
        feature_count(mode, model.config.input_horizon, model.config.rank));
    data.features.resize(m, features);
    data.targets.resize(m, static_cast<Eigen::Index>(horizon));
    data.levels.resize(m);
    data.channels.reserve(index.size());
    for (Eigen::Index row = 0; row < m; ++row) {
        const WindowIndex& w = index[static_cast<std::size_t>(row)];
        const double* base = series.col(static_cast<Eigen::Index>(w.channel)).data() + w.start;
        const FeatureVector fv = featurize(mode, std::span<const double>(base, window), model, ma_kernel);
        data.features.row(row) = fv.values.transpose();
        data.levels[row] = fv.level;
        data.targets.row(row) =
            Eigen::Map<const Eigen::RowVectorXd>(base + window, static_cast<Eigen::Index>(horizon));
        data.channels.push_back(w.channel);
    }
    return data;
}

EvalReport evaluate_predictions(const Eigen::MatrixXd& predictions, const ForecastDataset& data) {
    if (data.size() == 0) throw InsufficientData("evaluation needs at least one window");
    if (predictions.rows() != data.targets.rows() || predictions.cols() != data.targets.cols()) {
        throw InvalidInput("prediction shape does not match targets");
    }
    const auto steps = data.targets.cols();
    std::size_t n_channels = 0;
    for (std::size_t c : data.channels) n_channels = std::max(n_channels, c + 1);

    Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_channels), steps);
    Eigen::MatrixXd ab = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_channels), steps);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_channels));
    for (Eigen::Index r = 0; r < data.targets.rows(); ++r) {
        const auto c = static_cast<Eigen::Index>(data.channels[static_cast<std::size_t>(r)]);
        const Eigen::RowVectorXd err = predictions.row(r) - data.targets.row(r);
        sq.row(c) += err.array().square().matrix();
        ab.row(c) += err.cwiseAbs();
        counts[c] += 1.0;
    }

    EvalReport report;
    report.n_windows = data.size();
    report.horizon = static_cast<std::size_t>(steps);
    report.mode = data.mode;
    report.mse_per_step = Eigen::VectorXd::Zero(steps);
    report.mae_per_step = Eigen::VectorXd::Zero(steps);
    double present = 0.0;
    for (Eigen::Index c = 0; c < sq.rows(); ++c) {
        if (counts[c] == 0.0) continue;
        present += 1.0;
        report.mse_per_step += sq.row(c).transpose() / counts[c];
        report.mae_per_step += ab.row(c).transpose() / counts[c];
    }
    report.mse_per_step /= present;
    report.mae_per_step /= present;
    report.mse = report.mse_per_step.mean();
    report.mae = report.mae_per_step.mean();
    return report;
}

EvalReport evaluate(const RidgeModel& model, const ForecastDataset& data) {
    if (data.size() == 0) throw InsufficientData("evaluation needs at least one window");
    if (data.features.cols() != model.weights.cols()) {
        throw InvalidInput("ridge model expects " + std::to_string(model.weights.cols()) + " features, dataset has " +
                           std::to_string(data.features.cols()));
    }
    Eigen::MatrixXd predictions = data.features * model.weights.transpose();
    predictions.rowwise() += model.bias.transpose();
    predictions.colwise() += data.levels;
    EvalReport report = evaluate_predictions(predictions, data);
    report.alpha = model.alpha;
    return report;
}

nlohmann::json eval_report_to_json(const EvalReport& report) {
    return nlohmann::json{
        {"mode", std::string(to_string(report.mode))},
        {"mse", report.mse},
        {"mae", report.mae},
        {"n_windows", report.n_windows},
        {"horizon", report.horizon},
        {"alpha", report.alpha},
    };
}

const ModeResult& ExperimentReport::result(FeatureMode mode) const {
    for (const ModeResult& r : modes) {
        if (r.mode == mode) return r;
    }
    throw InvalidInput("experiment has no results for mode " + std::string(to_string(mode)));
}

ExperimentReport run_forecast_experiment(const SeriesTable& table, const MlowModel& model,
                                         const ExperimentOptions& options) {
    if (options.horizon < 1) throw InvalidInput("forecast horizon L must be >= 1");
    if (options.alphas.empty()) throw InvalidInput("alpha grid is empty");
    const std::size_t window = model.config.window_length();
    const SplitDataset splits = split(table, options.ratios, window);
    const std::size_t needed = window + options.horizon;
    const auto check = [&](const SeriesTable& s, const char* name) {
        if (s.length() < needed) {
            throw InsufficientData(std::string(name) + " split has " + std::to_string(s.length()) +
                                   " samples (with look-back); one forecast window needs 2K + L = " +
                                   std::to_string(needed));
        }
    };
    check(splits.train, "train");
    check(splits.val, "validation");
    check(splits.test, "test");

    ExperimentReport report;
    for (FeatureMode mode : options.modes) {
        const ForecastDataset train =
            build_dataset(splits.train.values, mode, model, options.horizon, options.window_stride, options.ma_kernel);
        const ForecastDataset val =
            build_dataset(splits.val.values, mode, model, options.horizon, options.window_stride, options.ma_kernel);
        const ForecastDataset test =
            build_dataset(splits.test.values, mode, model, options.horizon, options.window_stride, options.ma_kernel);
        report.train_windows = train.size();
        report.val_windows = val.size();
        report.test_windows = test.size();

        const std::vector<RidgeModel> path = fit_ridge_path(train.features, train.centered_targets(), options.alphas);
        ModeResult result;
        result.mode = mode;
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_index = 0;
        for (std::size_t i = 0; i < path.size(); ++i) {
            RidgeModel m = path[i];
            m.mode = mode;
            const EvalReport r = evaluate(m, val);
            result.val_mse.push_back(r.mse);
            if (r.mse < best) {
                best = r.mse;
                best_index = i;
                result.val = r;
            }
        }
        RidgeModel chosen = path[best_index];
        chosen.mode = mode;
        result.alpha = chosen.alpha;
        result.test = evaluate(chosen, test);
        report.modes.push_back(std::move(result));
    }
    return report;
}

}  // namespace mlow
