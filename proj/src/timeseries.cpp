#include "tdad/timeseries.hpp"

#include "tdad/error.hpp"
#include "tdad/log.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string_view>

namespace tdad {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            cells.push_back(trim(line.substr(pos)));
            break;
        }
        cells.push_back(trim(line.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return cells;
}

struct RawTable {
    std::vector<std::string> features;
    std::vector<Timestamp> timestamps;
    std::vector<std::vector<double>> rows;
};

RawTable read_table(const std::filesystem::path& path, bool timestamp_only) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    const std::string source = path.string();

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw ParseError(source, 1, "missing header row");
    }
    ++line_no;
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }

    const auto header = split_commas(line);
    std::ptrdiff_t ts_col = -1;
    RawTable table;
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "timestamp") {
            if (ts_col >= 0) {
                throw ParseError(source, line_no, "duplicate timestamp column");
            }
            ts_col = static_cast<std::ptrdiff_t>(c);
        } else {
            if (header[c].empty()) {
                throw ParseError(source, line_no, "empty column name in header");
            }
            table.features.emplace_back(header[c]);
            feature_cols.push_back(c);
        }
    }
    if (ts_col < 0) {
        throw ParseError(source, line_no, "header has no timestamp column");
    }
    if (timestamp_only && !table.features.empty()) {
        throw ParseError(source, line_no, "labels file must contain only a timestamp column");
    }
    if (!timestamp_only && table.features.empty()) {
        throw ParseError(source, line_no, "no feature columns");
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_commas(line);
        if (cells.size() != header.size()) {
            throw ParseError(source, line_no,
                             "expected " + std::to_string(header.size()) + " cells, found " +
                                 std::to_string(cells.size()));
        }
        const std::string_view ts_cell = cells[static_cast<std::size_t>(ts_col)];
        Timestamp ts = 0;
        const auto [ptr, ec] = std::from_chars(ts_cell.data(), ts_cell.data() + ts_cell.size(), ts);
        if (ec != std::errc() || ptr != ts_cell.data() + ts_cell.size()) {
            throw ParseError(source, line_no, "timestamp is not an integer: '" + std::string(ts_cell) + "'");
        }
        if (ts < 0) {
            throw ParseError(source, line_no, "negative timestamp");
        }

        std::vector<double> row;
        row.reserve(feature_cols.size());
        for (std::size_t f = 0; f < feature_cols.size(); ++f) {
            const std::string_view cell = cells[feature_cols[f]];
            if (cell.empty() || cell == "nan" || cell == "NaN") {
                row.push_back(kMissing);
                continue;
            }
            double v = 0.0;
            const auto [p, e] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (e != std::errc() || p != cell.data() + cell.size() || !std::isfinite(v)) {
                throw ParseError(source, line_no,
                                 "non-numeric value '" + std::string(cell) + "' in column " +
                                     table.features[f]);
            }
            row.push_back(v);
        }
        table.timestamps.push_back(ts);
        table.rows.push_back(std::move(row));
    }

    for (std::size_t i = 1; i < table.timestamps.size(); ++i) {
        if (table.timestamps[i] <= table.timestamps[i - 1]) {
            throw ValidationError(source + ": non-monotone timestamps (" +
                                  std::to_string(table.timestamps[i - 1]) + " then " +
                                  std::to_string(table.timestamps[i]) + ")");
        }
    }
    return table;
}

void check_strictly_increasing(const std::vector<Timestamp>& ts, const char* what) {
    for (std::size_t i = 1; i < ts.size(); ++i) {
        if (ts[i] <= ts[i - 1]) {
            throw ValidationError(std::string(what) + ": non-monotone timestamps at index " +
                                  std::to_string(i));
        }
    }
    if (!ts.empty() && ts.front() < 0) {
        throw ValidationError(std::string(what) + ": negative timestamp");
    }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

void write_header(std::ostream& out, const std::vector<std::string>& features) {
    out << "timestamp";
    for (const auto& f : features) out << ',' << f;
    out << '\n';
}

void write_row(std::ostream& out, Timestamp t, const Matrix& data, Eigen::Index r) {
    out << t;
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
        out << ',';
        const double v = data(r, c);
        if (!std::isnan(v)) out << format_double(v);
    }
    out << '\n';
}

} // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) {
        throw Error("cannot format value");
    }
    return std::string(buf, ptr);
}

void SensorSeries::validate() const {
    if (features.empty()) {
        throw ValidationError("sensor series has no features");
    }
    if (static_cast<Eigen::Index>(features.size()) != data.cols()) {
        throw ValidationError("sensor series: feature names do not match column count");
    }
    if (start < 0) {
        throw ValidationError("sensor series: negative start");
    }
}

void OperationCycleSeries::validate() const {
    if (features.empty()) {
        throw ValidationError("operation-cycle series has no features");
    }
    if (static_cast<Eigen::Index>(features.size()) != data.cols()) {
        throw ValidationError("operation-cycle series: feature names do not match column count");
    }
    if (static_cast<Eigen::Index>(timestamps.size()) != data.rows()) {
        throw ValidationError("operation-cycle series: timestamp count does not match row count");
    }
    check_strictly_increasing(timestamps, "operation-cycle series");
}

void AlarmLabels::validate() const { check_strictly_increasing(points, "alarm labels"); }

void HeterogeneousDataset::validate() const {
    op.validate();
    sensor.validate();
    if (!op.timestamps.empty() &&
        (op.timestamps.front() < sensor.start || op.timestamps.back() >= sensor.end())) {
        throw ValidationError("operation-cycle timestamps fall outside the sensor span");
    }
    if (labels) {
        labels->validate();
        if (!labels->points.empty() &&
            (labels->points.front() < sensor.start || labels->points.back() >= sensor.end())) {
            throw ValidationError("alarm labels fall outside the sensor span");
        }
    }
}

void ScoreSeries::validate() const {
    if (timestamps.size() != scores.size()) {
        throw ValidationError("score series: timestamp/score length mismatch");
    }
    check_strictly_increasing(timestamps, "score series");
    for (double s : scores) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw ValidationError("score series: scores must be finite and non-negative");
        }
    }
}

SensorSeries load_sensor_csv(const std::filesystem::path& path) {
    RawTable raw = read_table(path, false);
    SensorSeries s;
    s.features = std::move(raw.features);
    if (raw.timestamps.empty()) {
        s.data.resize(0, static_cast<Eigen::Index>(s.features.size()));
        return s;
    }
    s.start = raw.timestamps.front();
    const auto span = static_cast<Eigen::Index>(raw.timestamps.back() - s.start + 1);
    s.data = Matrix::Constant(span, static_cast<Eigen::Index>(s.features.size()), kMissing);
    Timestamp expected = s.start;
    for (std::size_t i = 0; i < raw.timestamps.size(); ++i) {
        const Timestamp t = raw.timestamps[i];
        for (; expected < t; ++expected) s.gaps.push_back(expected);
        expected = t + 1;
        const auto r = static_cast<Eigen::Index>(t - s.start);
        for (std::size_t c = 0; c < raw.rows[i].size(); ++c) {
            s.data(r, static_cast<Eigen::Index>(c)) = raw.rows[i][c];
        }
    }
    if (!s.gaps.empty()) {
        log::warn(path.string() + ": " + std::to_string(s.gaps.size()) +
                  " missing sensor seconds (first at t=" + std::to_string(s.gaps.front()) + ")");
    }
    s.validate();
    return s;
}

OperationCycleSeries load_opcycle_csv(const std::filesystem::path& path) {
    RawTable raw = read_table(path, false);
    OperationCycleSeries s;
    s.features = std::move(raw.features);
    s.timestamps = std::move(raw.timestamps);
    s.data.resize(static_cast<Eigen::Index>(s.timestamps.size()),
                  static_cast<Eigen::Index>(s.features.size()));
    for (std::size_t i = 0; i < raw.rows.size(); ++i) {
        for (std::size_t c = 0; c < raw.rows[i].size(); ++c) {
            s.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = raw.rows[i][c];
        }
    }
    s.validate();
    return s;
}

AlarmLabels load_labels_csv(const std::filesystem::path& path) {
    RawTable raw = read_table(path, true);
    return AlarmLabels{std::move(raw.timestamps)};
}

ScoreSeries load_scores_csv(const std::filesystem::path& path) {
    RawTable raw = read_table(path, false);
    if (raw.features.size() != 1 || raw.features.front() != "score") {
        throw ParseError(path.string(), 1, "score file must have columns timestamp,score");
    }
    ScoreSeries s;
    s.timestamps = std::move(raw.timestamps);
    s.scores.reserve(raw.rows.size());
    for (const auto& row : raw.rows) s.scores.push_back(row.front());
    s.validate();
    return s;
}

void save_sensor_csv(const SensorSeries& series, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    write_header(out, series.features);
    for (Eigen::Index r = 0; r < series.data.rows(); ++r) {
        write_row(out, series.timestamp(r), series.data, r);
    }
    finish(out, path);
}

void save_opcycle_csv(const OperationCycleSeries& series, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    write_header(out, series.features);
    for (Eigen::Index r = 0; r < series.data.rows(); ++r) {
        write_row(out, series.timestamps[static_cast<std::size_t>(r)], series.data, r);
    }
    finish(out, path);
}

void save_labels_csv(const AlarmLabels& labels, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    out << "timestamp\n";
    for (Timestamp t : labels.points) out << t << '\n';
    finish(out, path);
}

void save_scores(const ScoreSeries& series, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    out << "timestamp,score\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << series.timestamps[i] << ',' << format_double(series.scores[i]) << '\n';
    }
    finish(out, path);
}

} // namespace tdad
