#include "fsurvey/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fsurvey {

namespace {

constexpr char kMagic[5] = {'F', 'S', 'R', 'V', '1'};

void put_u64(std::ostream& out, uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

double get_f64(std::istream& in) {
  const uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = {}) {
  std::ofstream out(path, mode);
  if (!out) throw config_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = {}) {
  std::ifstream in(path, mode);
  if (!in) throw config_error("cannot open for reading: " + path);
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix_csv(const std::string& path, const GriddedMatrix& data) {
  auto out = open_out(path);
  for (int j = 0; j < data.grid.size(); ++j)
    out << (j ? "," : "") << format_double(data.grid[j]);
  out << "\n";
  for (int r = 0; r < data.values.rows(); ++r) {
    for (int j = 0; j < data.values.cols(); ++j)
      out << (j ? "," : "") << format_double(data.values(r, j));
    out << "\n";
  }
}

GriddedMatrix read_matrix_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw config_error("empty CSV: " + path);
  auto parse_row = [&](const std::string& text) {
    std::vector<double> row;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    return row;
  };
  const std::vector<double> times = parse_row(line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_row(line));
    if (rows.back().size() != times.size())
      throw config_error("ragged CSV row in " + path);
  }
  GriddedMatrix out{TimeGrid(times),
                    Eigen::MatrixXd(static_cast<long>(rows.size()),
                                    static_cast<long>(times.size()))};
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t j = 0; j < times.size(); ++j)
      out.values(static_cast<long>(r), static_cast<long>(j)) = rows[r][j];
  return out;
}

void write_matrix_fsrv(const std::string& path, const GriddedMatrix& data) {
  auto out = open_out(path, std::ios::binary);
  out.write(kMagic, sizeof(kMagic));
  put_u64(out, static_cast<uint64_t>(data.values.rows()));
  put_u64(out, static_cast<uint64_t>(data.values.cols()));
  for (int j = 0; j < data.grid.size(); ++j) put_f64(out, data.grid[j]);
  for (int r = 0; r < data.values.rows(); ++r)
    for (int j = 0; j < data.values.cols(); ++j) put_f64(out, data.values(r, j));
}

GriddedMatrix read_matrix_fsrv(const std::string& path) {
  auto in = open_in(path, std::ios::binary);
  char magic[5];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw config_error("not an FSRV1 file: " + path);
  const uint64_t rows = get_u64(in);
  const uint64_t cols = get_u64(in);
  if (!in || cols < 2 || rows > (1ull << 32) || cols > (1ull << 32))
    throw config_error("corrupt FSRV1 header: " + path);
  std::vector<double> times(cols);
  for (auto& t : times) t = get_f64(in);
  GriddedMatrix out{TimeGrid(std::move(times)),
                    Eigen::MatrixXd(static_cast<long>(rows), static_cast<long>(cols))};
  for (long r = 0; r < out.values.rows(); ++r)
    for (long j = 0; j < out.values.cols(); ++j) out.values(r, j) = get_f64(in);
  if (!in) throw config_error("truncated FSRV1 file: " + path);
  return out;
}

namespace {
bool has_csv_extension(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}
}  // namespace

void write_matrix(const std::string& path, const GriddedMatrix& data) {
  if (has_csv_extension(path))
    write_matrix_csv(path, data);
  else
    write_matrix_fsrv(path, data);
}

GriddedMatrix read_matrix(const std::string& path) {
  return has_csv_extension(path) ? read_matrix_csv(path) : read_matrix_fsrv(path);
}

void write_band_csv(const std::string& path, const ConfidenceBand& band) {
  auto out = open_out(path);
  out << "t,center,lower,upper\n";
  for (int j = 0; j < band.grid.size(); ++j) {
    out << format_double(band.grid[j]) << "," << format_double(band.center[j]) << ","
        << format_double(band.center[j] - band.halfwidth[j]) << ","
        << format_double(band.center[j] + band.halfwidth[j]) << "\n";
  }
}

void write_scores_csv(const std::string& path,
                      const std::vector<std::pair<double, double>>& scores) {
  auto out = open_out(path);
  out << "h,wcv\n";
  for (const auto& [h, score] : scores)
    out << format_double(h) << "," << format_double(score) << "\n";
}

void write_curve_csv(const std::string& path, const TimeGrid& grid,
                     const Eigen::VectorXd& values) {
  if (values.size() != grid.size()) throw config_error("write_curve_csv: length mismatch");
  auto out = open_out(path);
  out << "t,value\n";
  for (int j = 0; j < grid.size(); ++j)
    out << format_double(grid[j]) << "," << format_double(values[j]) << "\n";
}

}  // namespace fsurvey
