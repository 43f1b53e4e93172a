#pragma once

#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace mlow::detail {

void require_finite(const Eigen::MatrixXd& m, std::string_view what);
void require_nonnegative(const Eigen::MatrixXd& m, std::string_view what);
/// bounded: additionally require rank <= min(N, K).
void require_rank(const Eigen::MatrixXd& spectra, std::size_t rank, bool bounded);

Eigen::MatrixXd top_right_singular_vectors(const Eigen::MatrixXd& spectra, std::size_t rank);

/// Rows with norm below kUpdateEpsilon are redrawn from the positive init
/// distribution and a warning is logged.
void reseed_collapsed_rows(Eigen::MatrixXd& components, std::mt19937_64& rng, std::string_view method,
                           std::size_t iteration);

}  // namespace mlow::detail
