#include "difflight/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "difflight/error.hpp"
#include "difflight/kernels.hpp"

namespace difflight::numerics {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape " + a.shape_string() + " vs " + b.shape_string());
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " + t.shape_string());
  }
}

kernels::ConvGeometry conv_geometry(const Tensor& input, const Tensor& kernel, std::size_t stride,
                                    std::size_t padding) {
  require_rank(input, 3, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  if (stride == 0) throw DomainError("conv2d: stride must be >= 1");
  if (kernel.extent(1) != input.extent(0)) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(kernel.extent(1)) + " input channels, input has " +
                     std::to_string(input.extent(0)));
  }
  if (kernel.extent(2) != kernel.extent(3)) throw ShapeError("conv2d: kernel must be square");
  const std::size_t k = kernel.extent(2);
  if (input.extent(1) + 2 * padding < k || input.extent(2) + 2 * padding < k) {
    throw ShapeError("conv2d: kernel larger than padded input");
  }
  return {input.extent(0), input.extent(1), input.extent(2), kernel.extent(0), k, stride, padding};
}

}  // namespace

// ---------------------------------------------------------------------------

void DiffusionParams::validate() const {
  if (timesteps == 0) throw DomainError("diffusion needs at least one timestep");
  if (betas.size() != timesteps || sigmas.size() != timesteps) {
    throw DomainError("beta and sigma schedules must have one entry per timestep");
  }
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) throw DomainError("beta_t must lie in (0, 1)");
  }
  for (double s : sigmas) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("sigma_t must be non-negative");
  }
}

DiffusionParams DiffusionParams::linear(std::size_t timesteps, double beta_start, double beta_end) {
  DiffusionParams p;
  p.timesteps = timesteps;
  for (std::size_t t = 0; t < timesteps; ++t) {
    double f = timesteps == 1 ? 0.0 : static_cast<double>(t) / static_cast<double>(timesteps - 1);
    double b = beta_start + f * (beta_end - beta_start);
    p.betas.push_back(b);
    p.sigmas.push_back(std::sqrt(b));
  }
  p.validate();
  return p;
}

Tensor forward_diffusion_step(const Tensor& x_prev, double beta, const Tensor& eps) {
  require_same_shape(x_prev, eps, "forward_diffusion_step");
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("forward_diffusion_step: beta must lie in (0, 1)");
  const double a = std::sqrt(1.0 - beta), b = std::sqrt(beta);
  Tensor out(x_prev.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x_prev[i] + b * eps[i];
  return out;
}

Tensor reverse_diffusion_step(const Tensor& x_t, const Tensor& mu, double sigma, const Tensor& z) {
  require_same_shape(x_t, mu, "reverse_diffusion_step");
  require_same_shape(mu, z, "reverse_diffusion_step");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("reverse_diffusion_step: sigma must be >= 0");
  Tensor out(mu.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mu[i] + sigma * z[i];
  return out;
}

Tensor run_reverse_process(const Tensor& x_T, const DiffusionParams& params, const Denoiser& denoiser,
                           const std::vector<Tensor>& noise) {
  params.validate();
  Tensor x = x_T;
  for (std::size_t step = params.timesteps; step-- > 0;) {
    Tensor mu = denoiser(x, step);
    if (params.sigmas[step] == 0.0) {
      require_same_shape(x, mu, "run_reverse_process");
      x = std::move(mu);
    } else {
      if (noise.size() != params.timesteps) throw DomainError("run_reverse_process: one noise draw per timestep");
      x = reverse_diffusion_step(x, mu, params.sigmas[step], noise[step]);
    }
  }
  return x;
}

// ---------------------------------------------------------------------------

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding) {
  auto g = conv_geometry(input, kernel, stride, padding);
  Tensor out({g.out_channels, g.out_height(), g.out_width()});
  kernels::omp::conv2d(input.data(), kernel.data(), out.data(), g);
  return out;
}

Im2col im2col(const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding) {
  auto g = conv_geometry(input, kernel, stride, padding);
  Im2col r;
  r.out_height = g.out_height();
  r.out_width = g.out_width();
  const std::size_t k = g.kernel, len = g.in_channels * k * k;
  r.patches = Tensor({r.out_height * r.out_width, len});
  const long pad = static_cast<long>(padding);
  for (std::size_t oy = 0; oy < r.out_height; ++oy) {
    for (std::size_t ox = 0; ox < r.out_width; ++ox) {
      auto row = r.patches.row(oy * r.out_width + ox);
      for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
        for (std::size_t ky = 0; ky < k; ++ky) {
          long iy = static_cast<long>(oy * stride + ky) - pad;
          for (std::size_t kx = 0; kx < k; ++kx) {
            long ix = static_cast<long>(ox * stride + kx) - pad;
            bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(g.height) && ix < static_cast<long>(g.width);
            row[(ci * k + ky) * k + kx] =
                inside ? input.at(ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) : 0.0;
          }
        }
      }
    }
  }
  r.kernel_matrix = kernel.reshaped({g.out_channels, len});
  return r;
}

Tensor conv2d_gemm(const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding) {
  Im2col cols = im2col(input, kernel, stride, padding);
  const std::size_t co = cols.kernel_matrix.extent(0), len = cols.kernel_matrix.extent(1);
  const std::size_t positions = cols.patches.extent(0);
  Tensor out({co, cols.out_height, cols.out_width});
  kernels::omp::gemm_nt(cols.kernel_matrix.data(), cols.patches.data(), out.data(), co, len, positions);
  return out;
}

Tensor zero_insert(const Tensor& input, std::size_t stride) {
  require_rank(input, 3, "zero_insert");
  if (stride == 0) throw DomainError("zero_insert: stride must be >= 1");
  const std::size_t c = input.extent(0), h = input.extent(1), w = input.extent(2);
  Tensor out({c, (h - 1) * stride + 1, (w - 1) * stride + 1});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) out.at(ch, y * stride, x * stride) = input.at(ch, y, x);
  return out;
}

TransposeConvProblem transpose_conv_as_conv(const Tensor& input, const Tensor& kernel, std::size_t stride,
                                            std::size_t padding) {
  require_rank(input, 3, "conv_transpose2d input");
  require_rank(kernel, 4, "conv_transpose2d kernel");
  if (stride == 0) throw DomainError("conv_transpose2d: stride must be >= 1");
  if (kernel.extent(0) != input.extent(0)) {
    throw ShapeError("conv_transpose2d: kernel expects " + std::to_string(kernel.extent(0)) +
                     " input channels, input has " + std::to_string(input.extent(0)));
  }
  if (kernel.extent(2) != kernel.extent(3)) throw ShapeError("conv_transpose2d: kernel must be square");
  const std::size_t ci = kernel.extent(0), co = kernel.extent(1), k = kernel.extent(2);
  if (padding + 1 > k) throw DomainError("conv_transpose2d: padding must be <= kernel - 1");
  for (std::size_t axis : {1, 2}) {
    if ((input.extent(axis) - 1) * stride + k <= 2 * padding) throw DomainError("conv_transpose2d: output would be empty");
  }

  Tensor inserted = zero_insert(input, stride);
  const std::size_t border = k - 1 - padding;
  TransposeConvProblem p;
  p.expanded = Tensor({ci, inserted.extent(1) + 2 * border, inserted.extent(2) + 2 * border});
  for (std::size_t c = 0; c < ci; ++c)
    for (std::size_t y = 0; y < inserted.extent(1); ++y)
      for (std::size_t x = 0; x < inserted.extent(2); ++x) p.expanded.at(c, y + border, x + border) = inserted.at(c, y, x);

  p.conv_kernel = Tensor({co, ci, k, k});
  auto dst = p.conv_kernel.data();
  auto src = kernel.data();
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t c = 0; c < ci; ++c)
      for (std::size_t ky = 0; ky < k; ++ky)
        for (std::size_t kx = 0; kx < k; ++kx)
          dst[((o * ci + c) * k + ky) * k + kx] = src[((c * co + o) * k + (k - 1 - ky)) * k + (k - 1 - kx)];
  return p;
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding) {
  TransposeConvProblem p = transpose_conv_as_conv(input, kernel, stride, padding);
  return conv2d(p.expanded, p.conv_kernel, 1, 0);
}

TransposeConvSparsity transpose_conv_sparsity(std::size_t in_channels, std::size_t height, std::size_t width,
                                              std::size_t kernel, std::size_t stride, std::size_t padding) {
  if (stride == 0 || kernel == 0 || in_channels == 0 || height == 0 || width == 0) {
    throw DomainError("transpose_conv_sparsity: extents and stride must be positive");
  }
  if (padding + 1 > kernel) throw DomainError("transpose_conv_sparsity: padding must be <= kernel - 1");
  const std::size_t border = kernel - 1 - padding;
  const std::size_t he = (height - 1) * stride + 1, we = (width - 1) * stride + 1;
  TransposeConvSparsity s;
  s.in_channels = in_channels;
  s.kernel = kernel;
  s.out_height = he + 2 * border - kernel + 1;
  s.out_width = we + 2 * border - kernel + 1;

  auto real = [&](std::size_t padded, std::size_t extent) {
    if (padded < border) return false;
    std::size_t e = padded - border;
    return e < extent && e % stride == 0;
  };

  s.kept.resize(s.out_height * s.out_width);
  for (std::size_t oy = 0; oy < s.out_height; ++oy) {
    for (std::size_t ox = 0; ox < s.out_width; ++ox) {
      auto& kept = s.kept[oy * s.out_width + ox];
      for (std::size_t c = 0; c < in_channels; ++c)
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          if (!real(oy + ky, he)) continue;
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            if (real(ox + kx, we)) kept.push_back(static_cast<std::uint32_t>((c * kernel + ky) * kernel + kx));
          }
        }
    }
  }
  return s;
}

std::uint64_t LoweredGemm::macs() const {
  std::uint64_t per_row = 0;
  for (std::size_t p = 0; p < cols(); ++p) per_row += dot_length(p);
  return per_row * rows();
}

Tensor LoweredGemm::evaluate() const {
  Tensor out({rows(), cols()});
  if (kept.empty()) {
    kernels::omp::gemm_nt(left.data(), right.data(), out.data(), rows(), inner(), cols());
    return out;
  }
  for (std::size_t r = 0; r < rows(); ++r) {
    auto l = left.row(r);
    for (std::size_t p = 0; p < cols(); ++p) {
      auto rr = right.row(p);
      double acc = 0.0;
      for (auto i : kept[p]) acc += l[i] * rr[i];
      out.at(r, p) = acc;
    }
  }
  return out;
}

LoweredGemm dense_transpose_conv_lowering(const Tensor& input, const Tensor& kernel, std::size_t stride,
                                          std::size_t padding) {
  TransposeConvProblem p = transpose_conv_as_conv(input, kernel, stride, padding);
  Im2col cols = im2col(p.expanded, p.conv_kernel, 1, 0);
  return LoweredGemm{std::move(cols.kernel_matrix), std::move(cols.patches), {}};
}

SparseTransposeLowering sparse_transpose_conv_lowering(const Tensor& input, const Tensor& kernel,
                                                       std::size_t stride, std::size_t padding) {
  SparseTransposeLowering r;
  r.reduced = dense_transpose_conv_lowering(input, kernel, stride, padding);
  const std::size_t k = kernel.extent(2);
  r.out_height = (input.extent(1) - 1) * stride + k - 2 * padding;
  r.out_width = (input.extent(2) - 1) * stride + k - 2 * padding;
  r.dense_mac_count = r.reduced.macs();
  if (stride >= 2) {
    auto sparsity = transpose_conv_sparsity(input.extent(0), input.extent(1), input.extent(2), k, stride, padding);
    r.reduced.kept = std::move(sparsity.kept);
  }
  r.eliminated_mac_count = r.dense_mac_count - r.reduced.macs();
  return r;
}

// ---------------------------------------------------------------------------

GroupNormAffine group_norm_affine(const Tensor& input, std::size_t groups, std::span<const double> gamma,
                                  std::span<const double> beta, double eps) {
  require_rank(input, 3, "group_norm");
  const std::size_t c = input.extent(0);
  if (groups == 0 || c % groups != 0) {
    throw DomainError("group_norm: " + std::to_string(c) + " channels not divisible into " + std::to_string(groups) +
                      " groups");
  }
  if (gamma.size() != c || beta.size() != c) throw ShapeError("group_norm: gamma/beta need one entry per channel");
  if (!(eps > 0.0)) throw DomainError("group_norm: eps must be positive");

  const std::size_t per_channel = input.extent(1) * input.extent(2);
  const std::size_t cpg = c / groups;
  const std::size_t n = cpg * per_channel;
  GroupNormAffine a;
  a.scale.resize(c);
  a.shift.resize(c);
  auto data = input.data();
  for (std::size_t g = 0; g < groups; ++g) {
    auto block = data.subspan(g * n, n);
    double mean = 0.0;
    for (double v : block) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : block) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t ch = g * cpg; ch < (g + 1) * cpg; ++ch) {
      a.scale[ch] = gamma[ch] * inv;
      a.shift[ch] = beta[ch] - mean * gamma[ch] * inv;
    }
  }
  return a;
}

Tensor group_norm(const Tensor& input, std::size_t groups, std::span<const double> gamma,
                  std::span<const double> beta, double eps) {
  require_rank(input, 3, "group_norm");
  const std::size_t c = input.extent(0);
  if (groups == 0 || c % groups != 0) {
    throw DomainError("group_norm: " + std::to_string(c) + " channels not divisible into " + std::to_string(groups) +
                      " groups");
  }
  if (gamma.size() != c || beta.size() != c) throw ShapeError("group_norm: gamma/beta need one entry per channel");
  if (!(eps > 0.0)) throw DomainError("group_norm: eps must be positive");

  const std::size_t per_channel = input.extent(1) * input.extent(2);
  const std::size_t cpg = c / groups;
  const std::size_t n = cpg * per_channel;
  Tensor out(input.shape());
  auto src = input.data();
  auto dst = out.data();
  for (std::size_t g = 0; g < groups; ++g) {
    auto block = src.subspan(g * n, n);
    double mean = 0.0;
    for (double v : block) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : block) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var + eps);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t ch = g * cpg + i / per_channel;
      dst[g * n + i] = (block[i] - mean) / sd * gamma[ch] + beta[ch];
    }
  }
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double swish(double x) { return x * sigmoid(x); }

Tensor swish(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = swish(x[i]);
  return out;
}

// ---------------------------------------------------------------------------

ExpLnTables::ExpLnTables(std::size_t entries, double exp_domain_min, double ln_domain_max)
    : exp_lo_(exp_domain_min), ln_hi_(ln_domain_max) {
  if (entries < 2) throw DomainError("lookup tables need at least two entries");
  if (!(exp_domain_min < 0.0)) throw DomainError("exp table domain must extend below zero");
  if (!(ln_domain_max > 1.0)) throw DomainError("ln table domain must extend above one");
  exp_table_.resize(entries);
  ln_table_.resize(entries);
  for (std::size_t i = 0; i < entries; ++i) {
    double f = static_cast<double>(i) / static_cast<double>(entries - 1);
    exp_table_[i] = std::exp(exp_lo_ + f * (0.0 - exp_lo_));
    ln_table_[i] = std::log(1.0 + f * (ln_hi_ - 1.0));
  }
}

namespace {

double interpolate(const std::vector<double>& table, double lo, double hi, double x) {
  double pos = (x - lo) / (hi - lo) * static_cast<double>(table.size() - 1);
  pos = std::clamp(pos, 0.0, static_cast<double>(table.size() - 1));
  auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= table.size()) return table.back();
  double f = pos - static_cast<double>(i);
  return table[i] + f * (table[i + 1] - table[i]);
}

}  // namespace

double ExpLnTables::exp(double x) const {
  if (x < exp_lo_) return 0.0;
  return interpolate(exp_table_, exp_lo_, 0.0, std::min(x, 0.0));
}

double ExpLnTables::ln(double s) const { return interpolate(ln_table_, 1.0, ln_hi_, s); }

std::vector<double> softmax_naive(std::span<const double> logits) {
  if (logits.empty()) throw DomainError("softmax of an empty vector");
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

std::vector<double> softmax_lse(std::span<const double> logits, const ExpLnTables* tables) {
  if (logits.empty()) throw DomainError("softmax of an empty vector");
  auto exp_fn = [&](double x) { return tables ? tables->exp(x) : std::exp(x); };
  auto ln_fn = [&](double s) { return tables ? tables->ln(s) : std::log(s); };

  // (1) running maximum
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  // (2) ln of the shifted exponential sum
  double sum = 0.0;
  for (double v : logits) sum += exp_fn(v - mx);
  const double lse = ln_fn(sum);
  // (3) subtract, (4) exponentiate
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = exp_fn(logits[i] - mx - lse);
  return out;
}

void AttentionSpec::validate() const {
  require_rank(w_q, 2, "W_Q");
  require_rank(w_k, 2, "W_K");
  require_rank(w_v, 2, "W_V");
  if (w_k.shape() != w_q.shape()) throw ShapeError("W_Q and W_K must both be [D, d_k]");
  if (w_v.extent(0) != w_q.extent(0)) throw ShapeError("W_V must have D rows");
}

void MultiHeadSpec::validate() const {
  if (heads.empty()) throw ShapeError("multi-head attention needs at least one head");
  std::size_t concat = 0;
  for (const auto& h : heads) {
    h.validate();
    if (h.model_dim() != heads[0].model_dim()) throw ShapeError("heads disagree on model dimension");
    concat += h.d_v();
  }
  require_rank(w_o, 2, "W_O");
  if (w_o.extent(0) != concat || w_o.extent(1) != heads[0].model_dim()) {
    throw ShapeError("W_O must be [concat head width, D]");
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul lhs");
  require_rank(b, 2, "matmul rhs");
  if (a.extent(1) != b.extent(0)) throw ShapeError("matmul: " + a.shape_string() + " x " + b.shape_string());
  Tensor c({a.extent(0), b.extent(1)});
  kernels::omp::gemm(a.data(), b.data(), c.data(), a.extent(0), a.extent(1), b.extent(1));
  return c;
}

namespace {

void check_attention_input(const Tensor& x, const AttentionSpec& spec) {
  spec.validate();
  require_rank(x, 2, "attention input");
  if (x.extent(1) != spec.model_dim()) {
    throw ShapeError("attention: input width " + std::to_string(x.extent(1)) + " but weights expect " +
                     std::to_string(spec.model_dim()));
  }
}

Tensor softmax_rows(const Tensor& logits, bool lse) {
  Tensor out(logits.shape());
  for (std::size_t r = 0; r < logits.extent(0); ++r) {
    auto row = lse ? softmax_lse(logits.row(r)) : softmax_naive(logits.row(r));
    std::copy(row.begin(), row.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

Tensor attention_logits(const Tensor& x, const AttentionSpec& spec) {
  check_attention_input(x, spec);
  Tensor q = matmul(x, spec.w_q);
  Tensor k = matmul(x, spec.w_k);
  Tensor logits = matmul(q, k.transposed());
  const double inv = 1.0 / std::sqrt(static_cast<double>(spec.d_k()));
  for (auto& v : logits.values()) v *= inv;
  return logits;
}

Tensor attention_head(const Tensor& x, const AttentionSpec& spec) {
  Tensor attn = softmax_rows(attention_logits(x, spec), false);
  return matmul(attn, matmul(x, spec.w_v));
}

Tensor attention_logits_decomposed(const Tensor& x, const AttentionSpec& spec) {
  check_attention_input(x, spec);
  Tensor wk_scaled = spec.w_k;
  const double inv = 1.0 / std::sqrt(static_cast<double>(spec.d_k()));
  for (auto& v : wk_scaled.values()) v *= inv;
  Tensor q = matmul(x, spec.w_q);
  Tensor qwk = matmul(q, wk_scaled.transposed());  // [S, D]
  return matmul(qwk, x.transposed());
}

Tensor attention_head_decomposed(const Tensor& x, const AttentionSpec& spec) {
  Tensor attn = softmax_rows(attention_logits_decomposed(x, spec), true);
  return matmul(attn, matmul(x, spec.w_v));
}

Tensor attention_block(const Tensor& x, const MultiHeadSpec& spec) {
  spec.validate();
  const std::size_t s = x.extent(0);
  std::size_t width = 0;
  for (const auto& h : spec.heads) width += h.d_v();
  Tensor concat({s, width});
  std::size_t offset = 0;
  for (const auto& h : spec.heads) {
    Tensor out = attention_head(x, h);
    for (std::size_t r = 0; r < s; ++r)
      for (std::size_t j = 0; j < h.d_v(); ++j) concat.at(r, offset + j) = out.at(r, j);
    offset += h.d_v();
  }
  return add(x, matmul(concat, spec.w_o));
}

Tensor to_tokens(const Tensor& fmap) {
  require_rank(fmap, 3, "to_tokens");
  const std::size_t c = fmap.extent(0), s = fmap.extent(1) * fmap.extent(2);
  return fmap.reshaped({c, s}).transposed();
}

Tensor from_tokens(const Tensor& tokens, std::size_t height, std::size_t width) {
  require_rank(tokens, 2, "from_tokens");
  if (tokens.extent(0) != height * width) throw ShapeError("from_tokens: token count does not match H*W");
  return tokens.transposed().reshaped({tokens.extent(1), height, width});
}

Tensor linear(const Tensor& fmap, const Tensor& weight) {
  require_rank(fmap, 3, "linear input");
  require_rank(weight, 2, "linear weight");
  if (weight.extent(1) != fmap.extent(0)) {
    throw ShapeError("linear: weight expects " + std::to_string(weight.extent(1)) + " features, input has " +
                     std::to_string(fmap.extent(0)));
  }
  const std::size_t s = fmap.extent(1) * fmap.extent(2);
  Tensor out({weight.extent(0), fmap.extent(1), fmap.extent(2)});
  kernels::omp::gemm(weight.data(), fmap.data(), out.data(), weight.extent(0), weight.extent(1), s);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 3, "concat");
  require_rank(b, 3, "concat");
  if (a.extent(1) != b.extent(1) || a.extent(2) != b.extent(2)) throw ShapeError("concat: spatial extents differ");
  Tensor out({a.extent(0) + b.extent(0), a.extent(1), a.extent(2)});
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

// ---------------------------------------------------------------------------

Quantized quantize_w8a8(const Tensor& t, const QuantScheme& scheme) {
  if (t.empty()) throw DomainError("cannot quantise an empty tensor");
  if (scheme.weight_bits != 8 || scheme.activation_bits != 8) throw DomainError("only 8-bit quantisation is modelled");
  Quantized q;
  q.shape = t.shape();
  const std::size_t slices = scheme.per_channel ? t.extent(0) : 1;
  const std::size_t width = t.size() / slices;
  q.codes.resize(t.size());
  q.scales.resize(slices);
  for (std::size_t s = 0; s < slices; ++s) {
    double mx = 0.0;
    for (std::size_t i = 0; i < width; ++i) mx = std::max(mx, std::abs(t[s * width + i]));
    const double scale = mx / 127.0;
    q.scales[s] = scale;
    for (std::size_t i = 0; i < width; ++i) {
      double c = scale == 0.0 ? 0.0 : std::nearbyint(t[s * width + i] / scale);
      q.codes[s * width + i] = static_cast<std::int8_t>(std::clamp(c, -128.0, 127.0));
    }
  }
  return q;
}

Tensor dequantize(const Quantized& q) {
  Tensor t(q.shape);
  const std::size_t width = t.size() / q.scales.size();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = q.codes[i] * q.scales[i / width];
  return t;
}

}  // namespace difflight::numerics
