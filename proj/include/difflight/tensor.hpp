#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace difflight {

// Dense row-major tensor of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& at(std::size_t c, std::size_t y, std::size_t x) { return data_[(c * shape_[1] + y) * shape_[2] + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }

  std::span<const double> row(std::size_t i) const;
  std::span<double> row(std::size_t i);

  Tensor reshaped(std::vector<std::size_t> shape) const;
  Tensor transposed() const;  // rank-2 only

  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t shape_volume(const std::vector<std::size_t>& shape);

Tensor random_uniform(std::vector<std::size_t> shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);
Tensor random_normal(std::vector<std::size_t> shape, std::mt19937_64& rng, double stddev = 1.0);

// Max |a-b| over max |b|; 0 when both are all-zero. Shapes must match.
double max_relative_error(const Tensor& actual, const Tensor& reference);

// Binary layout: "DLTN", u32 rank, rank x u64 extents, then f64 values; all little endian.
void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);

}  // namespace difflight
