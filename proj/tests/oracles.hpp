#pragma once

#include <cstdint>
#include <vector>

#include "difflight/dse.hpp"
#include "difflight/numerics.hpp"
#include "difflight/tensor.hpp"

// Deliberately naive reference implementations. None of them reuse library
// kernels so that agreement is evidence rather than tautology.
namespace oracle {

using difflight::Tensor;

// Four nested loops over the output; input [Ci,H,W], kernel [Co,Ci,k,k].
Tensor sliding_window_conv(const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding);

// Every input pixel scatters kernel * value into the output; kernel [Ci,Co,k,k].
Tensor scatter_add_conv_transpose(const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding);

// Multiplications that touch an inserted or border zero in the lowered dense
// transposed convolution, counted by materialising a 0/1 support map.
std::uint64_t zero_operand_macs(std::size_t in_channels, std::size_t out_channels, std::size_t height,
                                std::size_t width, std::size_t kernel, std::size_t stride, std::size_t padding);

// Mean, then variance from a second sweep.
Tensor two_pass_group_norm(const Tensor& input, std::size_t groups, const std::vector<double>& gamma,
                           const std::vector<double>& beta, double eps);

// Long-double exp/sum softmax, no max shift.
std::vector<double> softmax_long_double(const std::vector<double>& logits);

// softmax(Q K^T / sqrt(d_k)) V with explicit loops and K materialised.
Tensor attention_loops(const Tensor& x, const difflight::numerics::AttentionSpec& spec);

// Scalar multiplications of one attention block computed step by step with a
// counter bumped inside every multiply (decomposed logits, output projection).
std::uint64_t instrumented_attention_macs(std::size_t seq, std::size_t d_model, std::size_t heads, std::size_t d_k);

// Pairwise check of every point against every other.
std::vector<difflight::DsePoint> pareto_pairwise(const std::vector<difflight::DsePoint>& points);

}  // namespace oracle
