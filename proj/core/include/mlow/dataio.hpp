#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mlow {

/// Multichannel series, one column per channel (length x D). Channels are
/// contiguous in memory, so a column segment is a valid window span.
struct SeriesTable {
    std::vector<std::string> channel_names;
    Eigen::MatrixXd values;
    std::optional<std::string> timestamp_name;
    std::vector<std::string> timestamps;  // empty unless a timestamp column was read

    std::size_t length() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t channels() const noexcept { return static_cast<std::size_t>(values.cols()); }

    std::span<const double> channel(std::size_t d) const {
        return {values.col(static_cast<Eigen::Index>(d)).data(), length()};
    }

    /// Rows [begin, end) with names and timestamps carried along.
    SeriesTable slice(std::size_t begin, std::size_t end) const;
};

struct CsvOptions {
    bool has_timestamp = false;
    char delimiter = ',';
};

/// Header row required. Throws ParseError naming the 1-based row/column on
/// ragged rows, unparsable or non-finite cells, and empty files.
SeriesTable load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
SeriesTable read_csv(std::istream& in, const CsvOptions& options = {});

/// Shortest round-trip decimals; a timestamp column is written first if present.
void write_csv(std::ostream& out, const SeriesTable& table, char delimiter = ',');
void save_csv(const std::filesystem::path& path, const SeriesTable& table, char delimiter = ',');

struct SplitRatios {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;
};

/// Chronological split. val and test carry `lookback` points of the preceding
/// split prepended (clamped at the series start).
struct SplitDataset {
    SeriesTable train;
    SeriesTable val;
    SeriesTable test;
    SplitRatios ratios;
    std::size_t lookback = 0;
    std::size_t train_end = 0;  // first index of the val core
    std::size_t val_end = 0;    // first index of the test core
    std::size_t length = 0;
    std::size_t val_offset = 0;   // source index of val.values row 0
    std::size_t test_offset = 0;  // source index of test.values row 0
};

/// Boundaries at floor(train*len) and floor((train+val)*len). Throws
/// InvalidInput when the ratios are not positive or do not sum to 1, and
/// InsufficientData when the train split cannot hold one lookback window or a
/// split comes out empty.
SplitDataset split(const SeriesTable& table, const SplitRatios& ratios, std::size_t lookback);

/// (channel, start) of an input window [start, start + window) whose target is
/// [start + window, start + window + target).
struct WindowIndex {
    std::size_t channel = 0;
    std::size_t start = 0;
};

/// Channel-major enumeration; per channel floor((len - window - target)/stride) + 1
/// pairs, or none (with a logged warning) when the slice is too short.
std::vector<WindowIndex> sliding_windows(std::size_t length, std::size_t channels, std::size_t window,
                                         std::size_t target, std::size_t stride = 1);

}  // namespace mlow
