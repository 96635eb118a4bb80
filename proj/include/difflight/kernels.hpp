#pragma once

#include <cstddef>
#include <span>

// Hot loops, in two flavours with identical signatures: `serial` is the
// reference the tests compare against, `omp` parallelises the outer loops.
// Every output element is produced by exactly one thread in a fixed order,
// so both flavours return bit-identical results.
namespace difflight::kernels {

struct ConvGeometry {
  std::size_t in_channels, height, width;
  std::size_t out_channels, kernel, stride, padding;

  std::size_t out_height() const { return (height + 2 * padding - kernel) / stride + 1; }
  std::size_t out_width() const { return (width + 2 * padding - kernel) / stride + 1; }
};

namespace serial {

// c[m x n] = a[m x k] * b[k x n]
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
          std::size_t k, std::size_t n);

// c[m x n] = a[m x k] * b[n x k]^T
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
             std::size_t k, std::size_t n);

// Sliding-window cross-correlation, input [Ci,H,W], weight [Co,Ci,k,k].
void conv2d(std::span<const double> input, std::span<const double> weight, std::span<double> out,
            const ConvGeometry& g);

}  // namespace serial

namespace omp {

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
          std::size_t k, std::size_t n);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
             std::size_t k, std::size_t n);
void conv2d(std::span<const double> input, std::span<const double> weight, std::span<double> out,
            const ConvGeometry& g);

}  // namespace omp

}  // namespace difflight::kernels
