#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "difflight/tensor.hpp"

// Software reference kernels for everything the accelerator computes. Feature
// maps are [C, H, W]; token matrices are [S, D] with token s = y * W + x.
namespace difflight::numerics {

// ---------------------------------------------------------------------------
// Diffusion steps
// ---------------------------------------------------------------------------

struct DiffusionParams {
  std::size_t timesteps = 0;
  std::vector<double> betas;   // each in (0, 1)
  std::vector<double> sigmas;  // each >= 0

  void validate() const;
  static DiffusionParams linear(std::size_t timesteps, double beta_start, double beta_end);
};

// sqrt(1 - beta) * x_prev + sqrt(beta) * eps
Tensor forward_diffusion_step(const Tensor& x_prev, double beta, const Tensor& eps);

// mu + sigma * z
Tensor reverse_diffusion_step(const Tensor& x_t, const Tensor& mu, double sigma, const Tensor& z);

// Runs the reverse chain from x_T. `denoiser(x_t, t)` supplies mu_theta and
// `noise[t]` the z draw for step t (ignored when sigma_t == 0).
using Denoiser = std::function<Tensor(const Tensor&, std::size_t)>;
Tensor run_reverse_process(const Tensor& x_T, const DiffusionParams& params, const Denoiser& denoiser,
                           const std::vector<Tensor>& noise);

// ---------------------------------------------------------------------------
// Convolutions
// ---------------------------------------------------------------------------

// Cross-correlation; input [Ci,H,W], kernel [Co,Ci,k,k]. Uses the parallel kernel.
Tensor conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding);

struct Im2col {
  Tensor patches;        // [Ho*Wo, Ci*k*k], one flattened patch per output position
  Tensor kernel_matrix;  // [Co, Ci*k*k]
  std::size_t out_height = 0, out_width = 0;
};

Im2col im2col(const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding);

// Same result as conv2d, computed as kernel_matrix * patches^T.
Tensor conv2d_gemm(const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding);

// Inserts (stride - 1) zeros between neighbouring input elements along H and W.
Tensor zero_insert(const Tensor& input, std::size_t stride);

// Transposed convolution, kernel [Ci,Co,k,k]; output extent (H-1)*stride + k - 2*padding.
// Computed by zero insertion, (k-1-padding) border padding, and a stride-1
// convolution with the spatially flipped kernel. Requires padding <= k-1.
Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, std::size_t stride,
                        std::size_t padding = 0);

// The equivalent forward-convolution problem behind conv_transpose2d.
struct TransposeConvProblem {
  Tensor expanded;     // zero-inserted and padded input
  Tensor conv_kernel;  // [Co,Ci,k,k], flipped
};
TransposeConvProblem transpose_conv_as_conv(const Tensor& input, const Tensor& kernel, std::size_t stride,
                                            std::size_t padding);

// Positions of each flattened expanded patch that hold real input values.
// Everything else is an inserted or border zero.
struct TransposeConvSparsity {
  std::size_t in_channels = 0, kernel = 0;
  std::size_t out_height = 0, out_width = 0;
  std::vector<std::vector<std::uint32_t>> kept;  // per output position, indices into Ci*k*k

  std::size_t patch_length() const { return in_channels * kernel * kernel; }
};
TransposeConvSparsity transpose_conv_sparsity(std::size_t in_channels, std::size_t height, std::size_t width,
                                              std::size_t kernel, std::size_t stride, std::size_t padding);

// Generic lowered GEMM: out[r][p] = sum over i of left[r][i] * right[p][i],
// restricted to kept[p] when kept is non-empty.
struct LoweredGemm {
  Tensor left;   // [R, I]
  Tensor right;  // [P, I]
  std::vector<std::vector<std::uint32_t>> kept;

  std::size_t rows() const { return left.extent(0); }
  std::size_t cols() const { return right.extent(0); }
  std::size_t inner() const { return left.extent(1); }
  std::size_t dots() const { return rows() * cols(); }
  std::size_t dot_length(std::size_t p) const { return kept.empty() ? inner() : kept[p].size(); }
  std::uint64_t macs() const;

  Tensor evaluate() const;  // [R, P]
};

struct SparseTransposeLowering {
  LoweredGemm reduced;  // out[co][position]
  std::uint64_t dense_mac_count = 0;
  std::uint64_t eliminated_mac_count = 0;
  std::size_t out_height = 0, out_width = 0;
};

// Drops every all-zero entry of the flattened zero-inserted patches together
// with the matching kernel elements. reduced.evaluate() reproduces
// conv_transpose2d. Stride 1 inserts no zeros and is left dense.
SparseTransposeLowering sparse_transpose_conv_lowering(const Tensor& input, const Tensor& kernel,
                                                       std::size_t stride, std::size_t padding = 0);

// Dense (no elimination) lowering of the same problem, for comparison.
LoweredGemm dense_transpose_conv_lowering(const Tensor& input, const Tensor& kernel, std::size_t stride,
                                          std::size_t padding = 0);

// ---------------------------------------------------------------------------
// Normalisation and activation
// ---------------------------------------------------------------------------

inline constexpr double kGroupNormEps = 1e-5;

Tensor group_norm(const Tensor& input, std::size_t groups, std::span<const double> gamma,
                  std::span<const double> beta, double eps = kGroupNormEps);

// Per-channel (scale, shift) such that group_norm(x) = x * scale + shift.
struct GroupNormAffine {
  std::vector<double> scale, shift;
};
GroupNormAffine group_norm_affine(const Tensor& input, std::size_t groups, std::span<const double> gamma,
                                  std::span<const double> beta, double eps = kGroupNormEps);

double sigmoid(double x);
double swish(double x);
Tensor swish(const Tensor& x);

// ---------------------------------------------------------------------------
// Softmax and attention
// ---------------------------------------------------------------------------

// Table-backed exp/ln with linear interpolation, mirroring the ECU lookup tables.
class ExpLnTables {
 public:
  ExpLnTables(std::size_t entries, double exp_domain_min, double ln_domain_max);

  double exp(double x) const;  // x in [exp_domain_min, 0]; below the domain returns 0
  double ln(double s) const;   // s in [1, ln_domain_max]
  std::size_t entries() const { return exp_table_.size(); }

 private:
  double exp_lo_, ln_hi_;
  std::vector<double> exp_table_, ln_table_;
};

// exp(x - max) / sum exp(x_j - max); overflows on large logits.
std::vector<double> softmax_naive(std::span<const double> logits);

// Four sub-operations: max, ln-sum-exp of the shifted logits, subtraction, exp.
std::vector<double> softmax_lse(std::span<const double> logits, const ExpLnTables* tables = nullptr);

// One attention head. w_q, w_k are [D, d_k]; w_v is [D, d_v].
struct AttentionSpec {
  Tensor w_q, w_k, w_v;

  std::size_t model_dim() const { return w_q.extent(0); }
  std::size_t d_k() const { return w_q.extent(1); }
  std::size_t d_v() const { return w_v.extent(1); }
  void validate() const;
};

struct MultiHeadSpec {
  std::vector<AttentionSpec> heads;
  Tensor w_o;  // [H*d_v, D]
  void validate() const;
};

Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k] x [k,n]

// softmax(Q K^T / sqrt(d_k)) V with K materialised.
Tensor attention_logits(const Tensor& x, const AttentionSpec& spec);
Tensor attention_head(const Tensor& x, const AttentionSpec& spec);

// (Q W_K^T / sqrt(d_k)) X^T, the scale folded into W_K; K is never formed.
Tensor attention_logits_decomposed(const Tensor& x, const AttentionSpec& spec);
Tensor attention_head_decomposed(const Tensor& x, const AttentionSpec& spec);

// x + concat(heads) * w_o
Tensor attention_block(const Tensor& x, const MultiHeadSpec& spec);

// [C,H,W] <-> [H*W, C]
Tensor to_tokens(const Tensor& fmap);
Tensor from_tokens(const Tensor& tokens, std::size_t height, std::size_t width);

// weight [Cout, Cin] applied at every spatial position of a [Cin,H,W] map.
Tensor linear(const Tensor& fmap, const Tensor& weight);

Tensor add(const Tensor& a, const Tensor& b);
Tensor concat_channels(const Tensor& a, const Tensor& b);

// ---------------------------------------------------------------------------
// W8A8 quantisation
// ---------------------------------------------------------------------------

struct QuantScheme {
  int weight_bits = 8;
  int activation_bits = 8;
  bool per_channel = false;  // one scale per leading-axis slice
};

struct Quantized {
  std::vector<std::int8_t> codes;
  std::vector<double> scales;  // 1 entry, or extent(0) entries when per-channel
  std::vector<std::size_t> shape;
};

Quantized quantize_w8a8(const Tensor& t, const QuantScheme& scheme = {});
Tensor dequantize(const Quantized& q);

}  // namespace difflight::numerics
