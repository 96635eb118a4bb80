#include "difflight/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "difflight/error.hpp"

namespace difflight {

static_assert(std::endian::native == std::endian::little, "tensor IO assumes a little-endian host");

std::size_t shape_volume(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  for (auto e : shape_) {
    if (e == 0) throw ShapeError("tensor extents must be positive");
  }
  data_.assign(shape_volume(shape_), fill);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto e : shape_) {
    if (e == 0) throw ShapeError("tensor extents must be positive");
  }
  if (data_.size() != shape_volume(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string());
  }
  if (!all_finite()) throw DomainError("tensor values must be finite");
}

std::span<const double> Tensor::row(std::size_t i) const {
  std::size_t w = size() / shape_[0];
  return std::span<const double>(data_).subspan(i * w, w);
}

std::span<double> Tensor::row(std::size_t i) {
  std::size_t w = size() / shape_[0];
  return std::span<double>(data_).subspan(i * w, w);
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  if (shape_volume(shape) != size()) throw ShapeError("reshape changes element count");
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = data_;
  return t;
}

Tensor Tensor::transposed() const {
  if (rank() != 2) throw ShapeError("transpose needs a rank-2 tensor");
  Tensor t({shape_[1], shape_[0]});
  for (std::size_t i = 0; i < shape_[0]; ++i)
    for (std::size_t j = 0; j < shape_[1]; ++j) t.at(j, i) = at(i, j);
  return t;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

Tensor random_uniform(std::vector<std::size_t> shape, std::mt19937_64& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

Tensor random_normal(std::vector<std::size_t> shape, std::mt19937_64& rng, double stddev) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

double max_relative_error(const Tensor& actual, const Tensor& reference) {
  if (actual.shape() != reference.shape()) {
    throw ShapeError("cannot compare " + actual.shape_string() + " with " + reference.shape_string());
  }
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    diff = std::max(diff, std::abs(actual[i] - reference[i]));
    scale = std::max(scale, std::abs(reference[i]));
  }
  if (scale == 0.0) return diff == 0.0 ? 0.0 : INFINITY;
  return diff / scale;
}

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw SchemaError("truncated tensor stream");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

constexpr char kMagic[4] = {'D', 'L', 'T', 'N'};

}  // namespace

void write_tensor(std::ostream& out, const Tensor& t) {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (auto e : t.shape()) put<std::uint64_t>(out, e);
  for (double v : t.data()) put<double>(out, v);
}

Tensor read_tensor(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw SchemaError("bad tensor magic");
  auto rank = get<std::uint32_t>(in);
  if (rank == 0 || rank > 8) throw SchemaError("bad tensor rank");
  std::vector<std::size_t> shape(rank);
  for (auto& e : shape) e = static_cast<std::size_t>(get<std::uint64_t>(in));
  std::vector<double> data(shape_volume(shape));
  for (auto& v : data) v = get<double>(in);
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace difflight
