#include "ifest/samples.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ifest/errors.hpp"

namespace ifest {

SampleSet::SampleSet(std::size_t n, std::size_t d, std::vector<double> data)
    : n_(n), d_(d), data_(std::move(data)) {
  if (data_.size() != n_ * d_) {
    throw DimensionMismatch("SampleSet: data size does not match n*d");
  }
}

SampleSet SampleSet::project(std::span<const std::size_t> columns) const {
  SampleSet out(n_, columns.size());
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (columns[c] >= d_) throw IndexOutOfRange("project: column out of range");
      out(i, c) = (*this)(i, columns[c]);
    }
  }
  return out;
}

SampleSet SampleSet::take_rows(std::span<const std::size_t> rows) const {
  SampleSet out(rows.size(), d_);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n_) throw IndexOutOfRange("take_rows: row out of range");
    for (std::size_t c = 0; c < d_; ++c) out(r, c) = (*this)(rows[r], c);
  }
  return out;
}

void SampleSet::rescale(double lo, double hi) {
  for (std::size_t c = 0; c < d_; ++c) {
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    for (std::size_t i = 0; i < n_; ++i) {
      mn = std::min(mn, (*this)(i, c));
      mx = std::max(mx, (*this)(i, c));
    }
    const double span = mx - mn;
    for (std::size_t i = 0; i < n_; ++i) {
      double& v = data_[i * d_ + c];
      v = span > 0.0 ? lo + (v - mn) / span * (hi - lo) : 0.5 * (lo + hi);
    }
  }
}

bool SampleSet::in_unit_cube() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return v >= 0.0 && v <= 1.0; });
}

namespace {

bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t next = line.find(',', pos);
    if (next == std::string::npos) next = line.size();
    std::string field = line.substr(pos, next - pos);
    // trim
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    if (b == std::string::npos) return false;
    field = field.substr(b, e - b + 1);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0' || errno == ERANGE) return false;
    out.push_back(v);
    pos = next + 1;
    if (next == line.size()) break;
  }
  return !out.empty();
}

}  // namespace

SampleSet read_sample_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sample file: " + path);
  std::vector<double> data;
  std::size_t d = 0, n = 0;
  std::string line;
  std::vector<double> row;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    if (!parse_row(line, row)) {
      if (first) {  // header row
        first = false;
        continue;
      }
      throw std::runtime_error("malformed row in " + path + ": " + line);
    }
    first = false;
    if (d == 0) {
      d = row.size();
    } else if (row.size() != d) {
      throw std::runtime_error("inconsistent column count in " + path);
    }
    data.insert(data.end(), row.begin(), row.end());
    ++n;
  }
  if (n == 0) throw std::runtime_error("no data rows in " + path);
  return SampleSet(n, d, std::move(data));
}

void write_sample_csv(const std::string& path, const SampleSet& samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sample file: " + path);
  char buf[64];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t c = 0; c < samples.dim(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", samples(i, c));
      out << buf;
      if (c + 1 < samples.dim()) out << ',';
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ifest
