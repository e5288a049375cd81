#pragma once

#include <array>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "meswarm/lie.hpp"
#include "meswarm/trajectory.hpp"
#include "meswarm/types.hpp"

namespace meswarm {

/// The five reported error quantities, in table order.
enum class Quantity { kPosition = 0, kRotation, kVelocity, kGyroBias, kAccelBias };
inline constexpr int kQuantityCount = 5;

std::string_view quantity_label(Quantity q);  // e.g. "Position (m)"
std::string_view quantity_column(Quantity q);  // e.g. "pos_err"

using ErrorVector = std::array<double, kQuantityCount>;

struct MetricsRow {
  TimeNs t_ns = 0;
  int vehicle = 0;
  ErrorVector errors{};
};

/// Errors of one estimate against truth (missing true biases count as zero).
ErrorVector estimation_errors(const VehicleState& estimate, const TruthSample& truth);

/// Snapshot of the whole network at one instant.
struct NetworkTruth {
  TimeNs t_ns = 0;
  std::vector<TruthSample> vehicles;
};

struct EstimateSnapshot {
  TimeNs t_ns = 0;
  NetworkState X;
};

/// Appends one row per vehicle. Throws DataError when the timestamps or
/// vehicle counts of estimate and truth differ.
void append_metrics(std::vector<MetricsRow>& rows, const EstimateSnapshot& estimate, const NetworkTruth& truth);

std::vector<MetricsRow> compute_metrics(const std::vector<EstimateSnapshot>& estimates,
                                        const std::vector<NetworkTruth>& truth);

struct Summary {
  ErrorVector whole_run{};
  ErrorVector after_transient{};  // rows with t >= transient_s
  double transient_s = 10.0;
  std::size_t rows = 0;
  std::size_t rows_after_transient = 0;
};

/// Network-averaged means over all rows.
Summary summarize(const std::vector<MetricsRow>& rows, double transient_s = 10.0);

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows);
void write_summary_csv(std::ostream& os, const Summary& summary);
void write_summary_text(std::ostream& os, const Summary& summary, std::string_view title);

}  // namespace meswarm
