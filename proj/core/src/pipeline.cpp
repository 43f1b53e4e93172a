#include "mlow/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "mlow/component_io.hpp"
#include "mlow/error.hpp"
#include "mlow/log.hpp"

namespace mlow {

void MlowConfig::validate() const {
    if (input_horizon < 1) throw InvalidInput("input horizon T must be >= 1");
    if (freq_levels < 1) throw InvalidInput("frequency levels K must be >= 1");
    if (window_length() < input_horizon) {
        throw InvalidInput("2K = " + std::to_string(window_length()) + " must be >= T = " +
                           std::to_string(input_horizon));
    }
    if (rank < 1) throw InvalidInput("V must be >= 1");
    if (rank > freq_levels) {
        throw InvalidInput("V = " + std::to_string(rank) + " must be <= K = " + std::to_string(freq_levels));
    }
    if (iterations < 1) throw InvalidInput("iterations F must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be finite and >= 0");
    if (stride < 1) throw InvalidInput("stride must be >= 1");
}

Eigen::VectorXd Decomposition::low_rank() const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(pieces.cols());
    for (Eigen::Index t = 0; t < pieces.cols(); ++t) {
        double acc = 0.0;
        for (Eigen::Index v = 0; v < pieces.rows(); ++v) acc += pieces(v, t);
        out[t] = acc;
    }
    return out;
}

double Decomposition::identity_error() const {
    const Eigen::VectorXd total = low_rank() + residual + mean;
    return (total - input).cwiseAbs().maxCoeff();
}

SpectraMatrix collect_training_spectra(const Eigen::MatrixXd& series, const MlowConfig& config) {
    const std::size_t window = config.window_length();
    const auto length = static_cast<std::size_t>(series.rows());
    if (config.stride < 1) throw InvalidInput("stride must be >= 1");
    if (length <= window) {
        throw InsufficientData("training series has " + std::to_string(length) +
                               " samples; spectrum collection needs more than 2K = " + std::to_string(window));
    }
    const std::size_t valid = length - window;
    const std::size_t per_channel = (valid + config.stride - 1) / config.stride;
    const auto channels = static_cast<std::size_t>(series.cols());

    SpectraMatrix out;
    out.values.resize(static_cast<Eigen::Index>(per_channel * channels),
                      static_cast<Eigen::Index>(config.freq_levels + 1));
    Eigen::Index row = 0;
    for (std::size_t d = 0; d < channels; ++d) {
        const double* base = series.col(static_cast<Eigen::Index>(d)).data();
        for (std::size_t offset = 0; offset < valid; offset += config.stride) {
            const SpectrumSample s = compute_spectrum(std::span<const double>(base + offset, window));
            out.values.row(row++) = s.amplitudes.transpose();
        }
    }
    return out;
}

MlowModel fit(const Eigen::MatrixXd& train_series, const MlowConfig& config) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();
    if (config.stride > 1) {
        log_warning("training windows sampled with stride " + std::to_string(config.stride) +
                    " instead of every offset");
    }
    const SpectraMatrix spectra = collect_training_spectra(train_series, config);
    const Eigen::MatrixXd working = spectra.working();

    FitOptions options;
    options.rank = config.rank;
    options.iterations = config.iterations;
    options.lambda = config.lambda;
    options.seed = config.seed;

    MlowModel model;
    model.config = config;
    switch (config.method) {
        case Method::pca:
            model.components = fit_pca(working, config.rank);
            model.metadata.final_objective =
                (working - project_coefficients(working, model.components) * model.components.values).squaredNorm();
            break;
        case Method::nmf: {
            NmfResult r = fit_nmf(working, options);
            model.metadata.final_objective = 0.5 * (working - r.coefficients * r.components.values).squaredNorm();
            model.components = std::move(r.components);
            break;
        }
        case Method::semi_nmf:
            model.components = fit_semi_nmf(working, options);
            model.metadata.final_objective =
                0.5 * (working - least_squares_coefficients(working, model.components.values) *
                                     model.components.values)
                          .squaredNorm();
            break;
        case Method::hyperplane_nmf:
            model.components = fit_hyperplane_nmf(working, options);
            model.metadata.final_objective = hyperplane_objective(working, model.components.values, config.lambda);
            break;
    }
    model.components.seed = config.seed;
    model.components.iterations = config.method == Method::pca ? 0 : config.iterations;
    model.components.lambda = config.method == Method::hyperplane_nmf ? config.lambda : 0.0;

    model.metadata.n_training_spectra = spectra.n_samples();
    model.metadata.channels = static_cast<std::size_t>(train_series.cols());
    model.metadata.seed = config.seed;
    model.metadata.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return model;
}

Decomposition transform(const MlowModel& model, std::span<const double> window) {
    const MlowConfig& config = model.config;
    const std::size_t expected = config.window_length();
    if (window.size() != expected) {
        throw InvalidInput("transform window has " + std::to_string(window.size()) + " samples, expected 2K = " +
                           std::to_string(expected));
    }
    if (model.components.levels() != config.freq_levels) {
        throw InvalidInput("model components have " + std::to_string(model.components.levels()) +
                           " levels but the config says K = " + std::to_string(config.freq_levels));
    }
    const std::size_t horizon = config.input_horizon;
    const auto levels = static_cast<Eigen::Index>(config.freq_levels);

    const SpectrumSample sample = compute_spectrum(window);
    const Eigen::MatrixXd amplitudes = sample.amplitudes.tail(levels).transpose();
    const Eigen::MatrixXd coefficients = coefficients_for(amplitudes, model.components);
    const BasisMatrix basis = reconstruct_bases(sample, horizon);

    Decomposition out;
    out.coefficients = coefficients.row(0).transpose();
    out.bases = model.components.values * basis.values;
    out.pieces = out.coefficients.asDiagonal() * out.bases;
    out.mean = mean_intercept(sample, horizon);
    out.input = Eigen::Map<const Eigen::VectorXd>(window.data() + (expected - horizon),
                                                  static_cast<Eigen::Index>(horizon));
    out.residual = out.input - out.low_rank() - out.mean;
    return out;
}

MovingAverageDecomposition moving_average_decompose(std::span<const double> window, std::size_t kernel) {
    const std::size_t n = window.size();
    if (kernel < 1 || kernel > n) {
        throw InvalidInput("moving-average kernel must lie in [1, " + std::to_string(n) + "], got " +
                           std::to_string(kernel));
    }
    const std::size_t front = (kernel - 1) / 2;
    auto at = [&](std::ptrdiff_t i) {
        if (i < 0) return window.front();
        if (i >= static_cast<std::ptrdiff_t>(n)) return window.back();
        return window[static_cast<std::size_t>(i)];
    };
    MovingAverageDecomposition out;
    out.trend.resize(static_cast<Eigen::Index>(n));
    out.seasonal.resize(static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < n; ++t) {
        const auto begin = static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(front);
        double acc = 0.0;
        for (std::size_t j = 0; j < kernel; ++j) acc += at(begin + static_cast<std::ptrdiff_t>(j));
        const double trend = acc / static_cast<double>(kernel);
        out.trend[static_cast<Eigen::Index>(t)] = trend;
        out.seasonal[static_cast<Eigen::Index>(t)] = window[t] - trend;
    }
    return out;
}

nlohmann::json config_to_json(const MlowConfig& config) {
    return nlohmann::json{
        {"T", config.input_horizon},
        {"K", config.freq_levels},
        {"V", config.rank},
        {"iterations", config.iterations},
        {"lambda", config.lambda},
        {"method", std::string(to_string(config.method))},
        {"seed", config.seed},
        {"stride", config.stride},
    };
}

MlowConfig config_from_json(const nlohmann::json& doc) {
    try {
        MlowConfig c;
        c.input_horizon = doc.at("T").get<std::size_t>();
        c.freq_levels = doc.at("K").get<std::size_t>();
        c.rank = doc.at("V").get<std::size_t>();
        c.iterations = doc.at("iterations").get<std::size_t>();
        c.lambda = doc.at("lambda").get<double>();
        c.method = parse_method(doc.at("method").get<std::string>());
        c.seed = doc.at("seed").get<std::uint64_t>();
        c.stride = doc.value("stride", std::size_t{1});
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model config: ") + e.what());
    }
}

nlohmann::json model_to_json(const MlowModel& model) {
    return nlohmann::json{
        {"format", "mlow-model"},
        {"format_version", 1},
        {"config", config_to_json(model.config)},
        {"components", component_matrix_to_json(model.components)},
        {"fit_metadata",
         {
             {"n_training_spectra", model.metadata.n_training_spectra},
             {"channels", model.metadata.channels},
             {"seed", model.metadata.seed},
             {"final_objective", model.metadata.final_objective},
         }},
    };
}

MlowModel model_from_json(const nlohmann::json& doc) {
    try {
        if (doc.value("format", std::string{}) != "mlow-model") throw ParseError("not an mlow model file");
        MlowModel model;
        model.config = config_from_json(doc.at("config"));
        model.components = component_matrix_from_json(doc.at("components"));
        const auto& meta = doc.at("fit_metadata");
        model.metadata.n_training_spectra = meta.at("n_training_spectra").get<std::size_t>();
        model.metadata.channels = meta.at("channels").get<std::size_t>();
        model.metadata.seed = meta.at("seed").get<std::uint64_t>();
        model.metadata.final_objective = meta.value("final_objective", 0.0);
        if (model.components.levels() != model.config.freq_levels ||
            model.components.rank() != model.config.rank) {
            throw ParseError("model components shape does not match its config");
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model file: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const MlowModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << model_to_json(model).dump(2) << '\n';
    if (!out) throw Error("failed writing model to '" + path.string() + "'");
}

MlowModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open model file '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model file '" + path.string() + "': " + e.what());
    }
    return model_from_json(doc);
}

}  // namespace mlow
