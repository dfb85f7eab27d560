#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tdad {

// Integer seconds since the dataset origin.
using Timestamp = std::int64_t;

// One row per timestamp, one column per feature. NaN marks a missing cell.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Evenly spaced (1 Hz) multivariate sensor record. Row r holds time start + r.
struct SensorSeries {
    Timestamp start = 0;
    std::vector<std::string> features;
    Matrix data;
    // Seconds that were absent from the source file. Their rows are all-NaN
    // until preprocessing fills them.
    std::vector<Timestamp> gaps;

    Eigen::Index length() const { return data.rows(); }
    // One past the last covered second.
    Timestamp end() const { return start + static_cast<Timestamp>(data.rows()); }
    Timestamp timestamp(Eigen::Index row) const { return start + static_cast<Timestamp>(row); }

    void validate() const;
};

/// Event-driven record logged once per operation cycle; irregular timestamps.
struct OperationCycleSeries {
    std::vector<Timestamp> timestamps;
    std::vector<std::string> features;
    Matrix data;

    Eigen::Index length() const { return data.rows(); }

    void validate() const;
};

struct AlarmLabels {
    std::vector<Timestamp> points;

    void validate() const;
};

struct HeterogeneousDataset {
    OperationCycleSeries op;
    SensorSeries sensor;
    std::optional<AlarmLabels> labels;

    void validate() const;
};

/// Univariate anomaly scores, one per timestamp.
struct ScoreSeries {
    std::vector<Timestamp> timestamps;
    std::vector<double> scores;

    std::size_t size() const { return timestamps.size(); }
    bool empty() const { return timestamps.empty(); }

    void validate() const;

    friend bool operator==(const ScoreSeries&, const ScoreSeries&) = default;
};

// --- CSV ingestion -------------------------------------------------------
//
// All files carry a header row. The column named `timestamp` holds integer
// seconds; every other column is a real-valued feature. Empty cells (and the
// literal `nan`) are missing values.

SensorSeries load_sensor_csv(const std::filesystem::path& path);
OperationCycleSeries load_opcycle_csv(const std::filesystem::path& path);
AlarmLabels load_labels_csv(const std::filesystem::path& path);
ScoreSeries load_scores_csv(const std::filesystem::path& path);

void save_sensor_csv(const SensorSeries& series, const std::filesystem::path& path);
void save_opcycle_csv(const OperationCycleSeries& series, const std::filesystem::path& path);
void save_labels_csv(const AlarmLabels& labels, const std::filesystem::path& path);
void save_scores(const ScoreSeries& series, const std::filesystem::path& path);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

} // namespace tdad
