#pragma once

// CSV and binary serialization. The binary container starts with the magic
// bytes "FSRV1", then row and column counts as little-endian uint64, then the
// grid times and the row-major values as little-endian 64-bit floats.

#include <Eigen/Core>
#include <string>
#include <vector>

#include "fsurvey/bands.hpp"
#include "fsurvey/numerics.hpp"

namespace fsurvey {

struct GriddedMatrix {
  TimeGrid grid;
  Eigen::MatrixXd values;  // one row per unit (or per grid point for covariances)
};

/// CSV with the grid times as header, one row per unit.
void write_matrix_csv(const std::string& path, const GriddedMatrix& data);
GriddedMatrix read_matrix_csv(const std::string& path);

void write_matrix_fsrv(const std::string& path, const GriddedMatrix& data);
GriddedMatrix read_matrix_fsrv(const std::string& path);

/// Dispatch on the file extension (.csv vs anything else = binary).
void write_matrix(const std::string& path, const GriddedMatrix& data);
GriddedMatrix read_matrix(const std::string& path);

/// Band as CSV columns t, center, lower, upper.
void write_band_csv(const std::string& path, const ConfidenceBand& band);

/// Score table as CSV columns h, wcv.
void write_scores_csv(const std::string& path,
                      const std::vector<std::pair<double, double>>& scores);

/// One curve as CSV columns t, value.
void write_curve_csv(const std::string& path, const TimeGrid& grid,
                     const Eigen::VectorXd& values);

/// Deterministic shortest-ish decimal rendering used by every writer.
std::string format_double(double v);

}  // namespace fsurvey
