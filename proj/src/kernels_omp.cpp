#include "difflight/kernels.hpp"

namespace difflight::kernels::omp {

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
          std::size_t k, std::size_t n) {
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
             std::size_t k, std::size_t n) {
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] = acc;
    }
  }
}

void conv2d(std::span<const double> input, std::span<const double> weight, std::span<double> out,
            const ConvGeometry& g) {
  const std::size_t ho = g.out_height(), wo = g.out_width();
  const long pad = static_cast<long>(g.padding);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t co = 0; co < g.out_channels; ++co) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        double acc = 0.0;
        for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
          for (std::size_t ky = 0; ky < g.kernel; ++ky) {
            long iy = static_cast<long>(oy * g.stride + ky) - pad;
            if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
            for (std::size_t kx = 0; kx < g.kernel; ++kx) {
              long ix = static_cast<long>(ox * g.stride + kx) - pad;
              if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
              acc += input[(ci * g.height + static_cast<std::size_t>(iy)) * g.width + static_cast<std::size_t>(ix)] *
                     weight[((co * g.in_channels + ci) * g.kernel + ky) * g.kernel + kx];
            }
          }
        }
        out[(co * ho + oy) * wo + ox] = acc;
      }
    }
  }
}

}  // namespace difflight::kernels::omp
