#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ifest {

// An n x d table of points, row major. The estimators expect coordinates in
// the unit cube; validation happens where models are fitted.
class SampleSet {
 public:
  SampleSet() = default;
  SampleSet(std::size_t n, std::size_t d)
      : n_(n), d_(d), data_(n * d, 0.0) {}
  SampleSet(std::size_t n, std::size_t d, std::vector<double> data);

  std::size_t size() const { return n_; }
  std::size_t dim() const { return d_; }
  bool empty() const { return n_ == 0; }

  double operator()(std::size_t i, std::size_t c) const {
    return data_[i * d_ + c];
  }
  double& operator()(std::size_t i, std::size_t c) { return data_[i * d_ + c]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * d_, d_};
  }

  std::span<const double> flat() const { return data_; }
  std::span<double> flat_mut() { return data_; }

  // New sample set from a subset of columns, order preserved.
  SampleSet project(std::span<const std::size_t> columns) const;

  // New sample set from a subset of rows.
  SampleSet take_rows(std::span<const std::size_t> rows) const;

  // Per-column min-max rescale onto [lo, hi].
  void rescale(double lo, double hi);

  bool in_unit_cube() const;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> data_;
};

// CSV sample files: one row per point, '.' decimal separator, optional
// single header row (auto-detected when the first row is non-numeric).
// Values are written with enough digits to round-trip exactly.
SampleSet read_sample_csv(const std::string& path);
void write_sample_csv(const std::string& path, const SampleSet& samples);

}  // namespace ifest
