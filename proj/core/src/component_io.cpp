#include "mlow/component_io.hpp"

#include <ostream>
#include <string>

#include "mlow/error.hpp"
#include "mlow/format.hpp"

namespace mlow {

nlohmann::json component_matrix_to_json(const ComponentMatrix& components) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < components.values.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < components.values.cols(); ++c) row.push_back(components.values(r, c));
        rows.push_back(std::move(row));
    }
    return nlohmann::json{
        {"method", std::string(to_string(components.method))},
        {"rank", components.rank()},
        {"levels", components.levels()},
        {"lambda", components.lambda},
        {"iterations", components.iterations},
        {"seed", components.seed},
        {"rows", std::move(rows)},
    };
}

ComponentMatrix component_matrix_from_json(const nlohmann::json& doc) {
    try {
        ComponentMatrix out;
        out.method = parse_method(doc.at("method").get<std::string>());
        const auto rank = doc.at("rank").get<std::size_t>();
        const auto levels = doc.at("levels").get<std::size_t>();
        out.lambda = doc.at("lambda").get<double>();
        out.iterations = doc.at("iterations").get<std::size_t>();
        out.seed = doc.at("seed").get<std::uint64_t>();
        const auto& rows = doc.at("rows");
        if (!rows.is_array() || rows.size() != rank) {
            throw ParseError("component matrix: expected " + std::to_string(rank) + " rows");
        }
        out.values.resize(static_cast<Eigen::Index>(rank), static_cast<Eigen::Index>(levels));
        for (std::size_t r = 0; r < rank; ++r) {
            if (!rows[r].is_array() || rows[r].size() != levels) {
                throw ParseError("component matrix: row " + std::to_string(r) + " does not have " +
                                 std::to_string(levels) + " levels");
            }
            for (std::size_t c = 0; c < levels; ++c) {
                out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
            }
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("component matrix: ") + e.what());
    } catch (const InvalidInput& e) {
        throw ParseError(std::string("component matrix: ") + e.what());
    }
}

void write_components_csv(std::ostream& out, const Eigen::MatrixXd& components) {
    out << "component";
    for (Eigen::Index c = 0; c < components.cols(); ++c) out << ",l" << (c + 1);
    out << '\n';
    for (Eigen::Index r = 0; r < components.rows(); ++r) {
        out << (r + 1);
        for (Eigen::Index c = 0; c < components.cols(); ++c) out << ',' << format_double(components(r, c));
        out << '\n';
    }
}

}  // namespace mlow
