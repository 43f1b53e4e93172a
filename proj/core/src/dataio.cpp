#include "mlow/dataio.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mlow/error.hpp"
#include "mlow/format.hpp"
#include "mlow/log.hpp"

namespace mlow {

namespace {

std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream stream(line);
    while (std::getline(stream, cell, delimiter)) cells.push_back(cell);
    if (!line.empty() && line.back() == delimiter) cells.emplace_back();
    return cells;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

SeriesTable SeriesTable::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > length()) throw InvalidInput("slice bounds out of range");
    SeriesTable out;
    out.channel_names = channel_names;
    out.timestamp_name = timestamp_name;
    out.values = values.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
    if (!timestamps.empty()) {
        out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                              timestamps.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

SeriesTable read_csv(std::istream& in, const CsvOptions& options) {
    std::string line;
    std::size_t line_no = 0;
    // Skip leading blank lines before the header.
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw ParseError("CSV input is empty (no header row)", line_no);

    const std::vector<std::string> header = split_line(line, options.delimiter);
    const std::size_t first_value = options.has_timestamp ? 1 : 0;
    if (header.size() <= first_value) throw ParseError("CSV header has no value columns", line_no);

    SeriesTable table;
    if (options.has_timestamp) table.timestamp_name = trim(header[0]);
    for (std::size_t c = first_value; c < header.size(); ++c) table.channel_names.push_back(trim(header[c]));
    const std::size_t channels = table.channel_names.size();

    std::vector<double> flat;  // row-major while reading
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_line(line, options.delimiter);
        if (cells.size() != header.size()) {
            throw ParseError("CSV row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                 " cells, header has " + std::to_string(header.size()),
                             line_no);
        }
        if (options.has_timestamp) table.timestamps.push_back(trim(cells[0]));
        for (std::size_t c = first_value; c < cells.size(); ++c) {
            double value = 0.0;
            if (!parse_finite_double(cells[c], value)) {
                throw ParseError("CSV row " + std::to_string(line_no) + ", column " + std::to_string(c + 1) + " ('" +
                                     header[c] + "'): cannot parse '" + trim(cells[c]) + "' as a finite number",
                                 line_no, c + 1);
            }
            flat.push_back(value);
        }
        ++rows;
    }
    if (rows == 0) throw ParseError("CSV input has a header but no data rows", line_no);

    table.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(channels));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < channels; ++c)
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * channels + c];
    return table;
}

SeriesTable load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open CSV file '" + path.string() + "'");
    try {
        return read_csv(in, options);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.row(), e.column());
    }
}

void write_csv(std::ostream& out, const SeriesTable& table, char delimiter) {
    const bool with_ts = table.timestamp_name.has_value() && table.timestamps.size() == table.length();
    if (with_ts) out << *table.timestamp_name << delimiter;
    for (std::size_t c = 0; c < table.channel_names.size(); ++c) {
        if (c > 0) out << delimiter;
        out << table.channel_names[c];
    }
    out << '\n';
    for (std::size_t r = 0; r < table.length(); ++r) {
        if (with_ts) out << table.timestamps[r] << delimiter;
        for (std::size_t c = 0; c < table.channels(); ++c) {
            if (c > 0) out << delimiter;
            out << format_double(table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
        }
        out << '\n';
    }
}

void save_csv(const std::filesystem::path& path, const SeriesTable& table, char delimiter) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    write_csv(out, table, delimiter);
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

SplitDataset split(const SeriesTable& table, const SplitRatios& ratios, std::size_t lookback) {
    if (!(ratios.train > 0.0 && ratios.val > 0.0 && ratios.test > 0.0)) {
        throw InvalidInput("split ratios must all be positive");
    }
    if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
        throw InvalidInput("split ratios must sum to 1");
    }
    const std::size_t length = table.length();
    const auto len = static_cast<double>(length);
    // Small epsilon keeps exact products such as 0.7 * 1000 from flooring to 699.
    const auto train_end = static_cast<std::size_t>(std::floor(ratios.train * len + 1e-9));
    const auto val_end = static_cast<std::size_t>(std::floor((ratios.train + ratios.val) * len + 1e-9));

    // Train must hold at least one full lookback window, val/test at least one point.
    const double min_train = static_cast<double>(lookback + 1) / ratios.train;
    const double min_val = 1.0 / ratios.val;
    const double min_test = 1.0 / ratios.test;
    const auto required = static_cast<std::size_t>(std::ceil(std::max({min_train, min_val, min_test})));
    if (train_end <= lookback || val_end <= train_end || length <= val_end) {
        throw InsufficientData("series of length " + std::to_string(length) + " is too short to split with lookback " +
                               std::to_string(lookback) + "; at least " + std::to_string(required) +
                               " samples are required");
    }

    SplitDataset out;
    out.ratios = ratios;
    out.lookback = lookback;
    out.length = length;
    out.train_end = train_end;
    out.val_end = val_end;
    out.val_offset = train_end - std::min(lookback, train_end);
    out.test_offset = val_end - std::min(lookback, val_end);
    out.train = table.slice(0, train_end);
    out.val = table.slice(out.val_offset, val_end);
    out.test = table.slice(out.test_offset, length);
    return out;
}

std::vector<WindowIndex> sliding_windows(std::size_t length, std::size_t channels, std::size_t window,
                                         std::size_t target, std::size_t stride) {
    if (stride < 1) throw InvalidInput("window stride must be >= 1");
    std::vector<WindowIndex> out;
    if (length < window + target) {
        log_warning("slice of length " + std::to_string(length) + " is shorter than window + target = " +
                    std::to_string(window + target) + "; no windows produced");
        return out;
    }
    const std::size_t per_channel = (length - window - target) / stride + 1;
    out.reserve(per_channel * channels);
    for (std::size_t d = 0; d < channels; ++d)
        for (std::size_t i = 0; i < per_channel; ++i) out.push_back({d, i * stride});
    return out;
}

}  // namespace mlow
