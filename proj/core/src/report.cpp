#include <algorithm>
#include <cmath>
#include <fstream>

#include "mlow/component_io.hpp"
#include "mlow/error.hpp"
#include "mlow/format.hpp"
#include "mlow/pipeline.hpp"

namespace mlow {

double nearest_rank_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidInput("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(q * n)));
    return values[std::min(rank, values.size()) - 1];
}

ComponentReport export_component_report(const MlowModel& model, const SpectraMatrix& spectra) {
    const Eigen::MatrixXd& h = model.components.values;
    const auto v = h.rows();
    ComponentReport report;
    report.weights = h;
    const Eigen::VectorXd norms = h.rowwise().norm().cwiseMax(kUpdateEpsilon);
    report.normalized_weights = norms.cwiseInverse().asDiagonal() * h;
    report.cosine = report.normalized_weights * report.normalized_weights.transpose();
    for (Eigen::Index i = 0; i < v; ++i) {
        for (Eigen::Index j = i + 1; j < v; ++j) {
            const double c = 0.5 * (report.cosine(i, j) + report.cosine(j, i));
            report.cosine(i, j) = report.cosine(j, i) = c;
        }
        report.cosine(i, i) = h.row(i).norm() >= kUpdateEpsilon ? 1.0 : 0.0;
    }

    const Eigen::MatrixXd working = spectra.working();
    if (working.cols() != h.cols()) {
        throw InvalidInput("report spectra have " + std::to_string(working.cols()) + " levels, model has " +
                           std::to_string(h.cols()));
    }
    if (working.rows() == 0) throw InsufficientData("report needs at least one training spectrum");
    const auto k = working.cols();
    report.spectra_mean = working.colwise().mean().transpose();
    report.spectra_q025.resize(k);
    report.spectra_q975.resize(k);
    for (Eigen::Index c = 0; c < k; ++c) {
        std::vector<double> column(working.col(c).data(), working.col(c).data() + working.rows());
        report.spectra_q025[c] = nearest_rank_quantile(column, 0.025);
        report.spectra_q975[c] = nearest_rank_quantile(std::move(column), 0.975);
    }
    return report;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    return out;
}

}  // namespace

void write_component_report(const std::filesystem::path& directory, const ComponentReport& report) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw Error("cannot create report directory '" + directory.string() + "': " + ec.message());

    {
        auto out = open_for_write(directory / "weights.csv");
        write_components_csv(out, report.weights);
    }
    {
        auto out = open_for_write(directory / "normalized_weights.csv");
        write_components_csv(out, report.normalized_weights);
    }
    {
        auto out = open_for_write(directory / "cosine.csv");
        out << "component";
        for (Eigen::Index j = 0; j < report.cosine.cols(); ++j) out << ",c" << (j + 1);
        out << '\n';
        for (Eigen::Index i = 0; i < report.cosine.rows(); ++i) {
            out << (i + 1);
            for (Eigen::Index j = 0; j < report.cosine.cols(); ++j) out << ',' << format_double(report.cosine(i, j));
            out << '\n';
        }
    }
    {
        auto out = open_for_write(directory / "spectra_band.csv");
        out << "level,mean,q025,q975\n";
        for (Eigen::Index c = 0; c < report.spectra_mean.size(); ++c) {
            out << (c + 1) << ',' << format_double(report.spectra_mean[c]) << ','
                << format_double(report.spectra_q025[c]) << ',' << format_double(report.spectra_q975[c]) << '\n';
        }
        if (!out) throw Error("failed writing report files to '" + directory.string() + "'");
    }
}

}  // namespace mlow
