#include "meswarm/metrics.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "meswarm/error.hpp"

namespace meswarm {

namespace {

constexpr std::array<std::string_view, kQuantityCount> kLabels = {
    "Position (m)", "Rotation (rad)", "Linear Velocity (m/s)", "IMU Gyro Bias (rad/s)",
    "IMU Accel. Bias (m/s^2)"};
constexpr std::array<std::string_view, kQuantityCount> kColumns = {"pos_err", "rot_err", "vel_err",
                                                                   "gyro_bias_err", "accel_bias_err"};

}  // namespace

std::string_view quantity_label(Quantity q) { return kLabels[static_cast<std::size_t>(q)]; }
std::string_view quantity_column(Quantity q) { return kColumns[static_cast<std::size_t>(q)]; }

ErrorVector estimation_errors(const VehicleState& estimate, const TruthSample& truth) {
  const VehicleState t = truth.state();
  return {(estimate.x() - t.x()).norm(), rotation_error_angle(estimate.R(), t.R()), (estimate.v() - t.v()).norm(),
          (estimate.gyro_bias - t.gyro_bias).norm(), (estimate.accel_bias - t.accel_bias).norm()};
}

void append_metrics(std::vector<MetricsRow>& rows, const EstimateSnapshot& estimate, const NetworkTruth& truth) {
  if (estimate.t_ns != truth.t_ns) {
    throw DataError(fmt::format("estimate at {} ns but truth at {} ns", estimate.t_ns, truth.t_ns));
  }
  if (estimate.X.size() != truth.vehicles.size()) {
    throw DataError(fmt::format("estimate has {} vehicles but truth has {}", estimate.X.size(), truth.vehicles.size()));
  }
  for (std::size_t i = 0; i < estimate.X.size(); ++i) {
    rows.push_back({estimate.t_ns, static_cast<int>(i), estimation_errors(estimate.X[i], truth.vehicles[i])});
  }
}

std::vector<MetricsRow> compute_metrics(const std::vector<EstimateSnapshot>& estimates,
                                        const std::vector<NetworkTruth>& truth) {
  if (estimates.size() != truth.size()) {
    throw DataError(fmt::format("{} estimates but {} truth samples", estimates.size(), truth.size()));
  }
  std::vector<MetricsRow> rows;
  for (std::size_t k = 0; k < estimates.size(); ++k) append_metrics(rows, estimates[k], truth[k]);
  return rows;
}

Summary summarize(const std::vector<MetricsRow>& rows, double transient_s) {
  Summary s;
  s.transient_s = transient_s;
  const auto transient_ns = static_cast<TimeNs>(std::llround(transient_s * 1e9));
  for (const MetricsRow& row : rows) {
    ++s.rows;
    const bool late = row.t_ns >= transient_ns;
    if (late) ++s.rows_after_transient;
    for (int q = 0; q < kQuantityCount; ++q) {
      s.whole_run[q] += row.errors[q];
      if (late) s.after_transient[q] += row.errors[q];
    }
  }
  for (int q = 0; q < kQuantityCount; ++q) {
    if (s.rows > 0) s.whole_run[q] /= static_cast<double>(s.rows);
    if (s.rows_after_transient > 0) s.after_transient[q] /= static_cast<double>(s.rows_after_transient);
  }
  return s;
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << "t,vehicle";
  for (std::string_view c : kColumns) os << ',' << c;
  os << '\n';
  for (const MetricsRow& row : rows) {
    fmt::print(os, "{:.3f},{}", to_seconds(row.t_ns), row.vehicle);
    for (double e : row.errors) fmt::print(os, ",{:.9e}", e);
    os << '\n';
  }
}

void write_summary_csv(std::ostream& os, const Summary& summary) {
  os << "quantity,whole_run_mean,after_transient_mean\n";
  for (int q = 0; q < kQuantityCount; ++q) {
    fmt::print(os, "\"{}\",{:.9e},{:.9e}\n", kLabels[q], summary.whole_run[q], summary.after_transient[q]);
  }
}

void write_summary_text(std::ostream& os, const Summary& summary, std::string_view title) {
  fmt::print(os, "{}\n", title);
  fmt::print(os, "{:<26}{:>14}{:>14}\n", "Average estimation error", "whole run",
             fmt::format("t >= {:g} s", summary.transient_s));
  for (int q = 0; q < kQuantityCount; ++q) {
    fmt::print(os, "{:<26}{:>14.4f}{:>14.4f}\n", kLabels[q], summary.whole_run[q], summary.after_transient[q]);
  }
}

}  // namespace meswarm
