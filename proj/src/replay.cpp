#include "difflight/replay.hpp"

#include <cmath>
#include <stdexcept>

#include "difflight/architecture.hpp"
#include "difflight/error.hpp"
#include "difflight/numerics.hpp"

namespace difflight {

namespace {

using numerics::LoweredGemm;

class Replayer {
 public:
  Replayer(const Schedule& s, const WorkloadGraph& g, const std::vector<LayerWeights>& w) : s_(s), g_(g), w_(w) {}

  ReplayResult run(const Tensor& input) {
    if (s_.layers.size() != g_.layers.size()) throw std::logic_error("replay: schedule and graph differ in layer count");
    ReplayResult r;
    const Tensor* x = &input;
    for (std::size_t i = 0; i < g_.layers.size(); ++i) {
      r.layer_outputs.push_back(layer(i, *x, r.layer_outputs));
      x = &r.layer_outputs.back();
    }
    r.replayed_macs = macs_;
    return r;
  }

 private:
  const Task& find(std::size_t layer, TaskRole role, std::uint32_t head = 0) const {
    const LayerSpan& span = s_.layers[layer];
    for (auto t = span.task_begin; t < span.task_end; ++t)
      if (s_.tasks[t].role == role && s_.tasks[t].head == head) return s_.tasks[t];
    throw std::logic_error("replay: layer '" + span.name + "' has no " + task_role_name(role) + " task");
  }

  // out[r][p] for every dot product, summed over the passes of `task`.
  Tensor gemm(const Task& task, const LoweredGemm& op) {
    const GemmShape& g = task.gemm;
    if (op.rows() != g.rows || op.cols() != g.cols || op.inner() != g.inner) {
      throw std::logic_error(std::string("replay: operand shape mismatch in ") + task_role_name(task.role));
    }
    if (!g.length.empty() && op.kept.size() != g.cols) {
      throw std::logic_error("replay: sparse task without matching kept lists");
    }
    Tensor out({g.rows, g.cols});
    std::vector<std::uint32_t> covered(g.dots(), 0);
    for (auto pi = task.pass_begin; pi < task.pass_end; ++pi) {
      const TilePass& p = s_.passes[pi];
      for (std::uint32_t slot = p.row_begin; slot < p.row_begin + p.rows_used; ++slot) {
        const std::uint32_t d = g.dot_at(slot);
        const std::uint32_t r = d / g.cols, c = d % g.cols;
        const std::uint32_t len = g.dot_length(d);
        const std::uint32_t begin = p.col_tile * g.bank_cols;
        const std::uint32_t end = std::min(len, begin + g.bank_cols);
        if (begin >= end) continue;
        auto lrow = op.left.row(r);
        auto rrow = op.right.row(c);
        BpdReading reading;
        for (std::uint32_t j = begin; j < end; ++j) {
          const std::uint32_t i = g.length.empty() ? j : op.kept[c][j];
          const double prod = lrow[i] * rrow[i];
          if (prod >= 0.0)
            reading.positive += prod;
          else
            reading.negative -= prod;
        }
        out.at(r, c) += reading.value();
        covered[d] += end - begin;
        macs_ += end - begin;
      }
    }
    for (std::uint32_t d = 0; d < g.dots(); ++d) {
      if (covered[d] != g.dot_length(d)) {
        throw std::logic_error(std::string("replay: dot product ") + std::to_string(d) + " of " +
                               task_role_name(task.role) + " covered " + std::to_string(covered[d]) + " of " +
                               std::to_string(g.dot_length(d)) + " terms");
      }
    }
    return out;
  }

  // Element-wise passes; `f(i)` computes element i.
  template <typename F>
  Tensor lanes(const Task& task, std::vector<std::size_t> shape, F f) {
    Tensor out(std::move(shape));
    std::vector<std::uint8_t> seen(out.size(), 0);
    for (auto pi = task.pass_begin; pi < task.pass_end; ++pi) {
      const TilePass& p = s_.passes[pi];
      for (std::uint32_t i = p.row_begin; i < p.row_begin + p.rows_used; ++i) {
        out[i] = f(i);
        ++seen[i];
      }
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (seen[i] != 1) throw std::logic_error(std::string("replay: element coverage broken in ") + task_role_name(task.role));
    return out;
  }

  static LoweredGemm nt(Tensor left, Tensor right_rows) { return LoweredGemm{std::move(left), std::move(right_rows), {}}; }

  Tensor layer(std::size_t i, const Tensor& x, const std::vector<Tensor>& earlier) {
    const LayerSpec& l = g_.layers[i];
    const LayerWeights& w = w_[i];
    switch (l.kind) {
      case LayerKind::Conv: {
        auto cols = numerics::im2col(x, w.kernel, l.stride, l.padding);
        Tensor out = gemm(find(i, TaskRole::ConvGemm), nt(std::move(cols.kernel_matrix), std::move(cols.patches)));
        return out.reshaped({l.out_channels, cols.out_height, cols.out_width});
      }
      case LayerKind::ConvTranspose: {
        const Task& t = find(i, TaskRole::TransposeConvGemm);
        LoweredGemm op = t.gemm.length.empty()
                             ? numerics::dense_transpose_conv_lowering(x, w.kernel, l.stride, l.padding)
                             : numerics::sparse_transpose_conv_lowering(x, w.kernel, l.stride, l.padding).reduced;
        return gemm(t, op).reshaped({l.out_channels, l.output.height, l.output.width});
      }
      case LayerKind::GroupNorm: {
        auto affine = numerics::group_norm_affine(x, l.groups, w.gamma, w.beta);
        const std::size_t plane = l.input.positions();
        return lanes(find(i, TaskRole::NormAffine), x.shape(), [&](std::size_t e) {
          const std::size_t c = e / plane;
          const double scaled = x[e] * affine.scale[c];  // broadband MR on the element's row
          return scaled + affine.shift[c];               // digital shift after the ADC
        });
      }
      case LayerKind::Swish:
        return lanes(find(i, TaskRole::SwishLanes), x.shape(),
                     [&](std::size_t e) { return x[e] * numerics::sigmoid(x[e]); });
      case LayerKind::ResidualAdd: {
        const Tensor& skip = earlier[*l.skip_from];
        if (l.concat) return numerics::concat_channels(x, skip);
        return lanes(find(i, TaskRole::ResidualLanes), x.shape(), [&](std::size_t e) { return coherent_sum(x[e], skip[e]); });
      }
      case LayerKind::Linear: {
        Tensor out = gemm(find(i, TaskRole::LinearGemm), nt(w.kernel, numerics::to_tokens(x)));
        return out.reshaped({l.out_channels, l.input.height, l.input.width});
      }
      case LayerKind::AttentionBlock: return attention(i, x);
    }
    throw std::logic_error("replay: unknown layer kind");
  }

  Tensor attention(std::size_t i, const Tensor& fmap) {
    const LayerSpec& l = g_.layers[i];
    const auto& spec = w_[i].attention;
    const Tensor x = numerics::to_tokens(fmap);  // [S, D]
    const std::size_t S = x.extent(0), dv = l.d_v();
    Tensor concat({S, l.heads * dv});
    for (std::uint32_t j = 0; j < l.heads; ++j) {
      const auto& h = spec.heads[j];
      Tensor wk = h.w_k;  // 1/sqrt(d_k) folded into the imprinted weights
      const double inv = 1.0 / std::sqrt(static_cast<double>(h.d_k()));
      for (auto& v : wk.values()) v *= inv;
      Tensor q = gemm(find(i, TaskRole::AttnQuery, j), nt(x, h.w_q.transposed()));
      Tensor qwk = gemm(find(i, TaskRole::AttnQueryKey, j), nt(q, wk));
      Tensor logits = gemm(find(i, TaskRole::AttnLogits, j), nt(qwk, x));
      Tensor v = gemm(find(i, TaskRole::AttnValue, j), nt(x, h.w_v.transposed()));
      Tensor attn(logits.shape());
      for (std::size_t r = 0; r < S; ++r) {
        auto row = numerics::softmax_lse(logits.row(r));
        std::copy(row.begin(), row.end(), attn.row(r).begin());
      }
      Tensor head = gemm(find(i, TaskRole::AttnApply, j), nt(attn, v.transposed()));
      for (std::size_t r = 0; r < S; ++r)
        for (std::size_t c = 0; c < dv; ++c) concat.at(r, j * dv + c) = head.at(r, c);
    }
    Tensor proj = gemm(find(i, TaskRole::AttnOutput), nt(concat, spec.w_o.transposed()));
    Tensor out = lanes(find(i, TaskRole::AttnResidual), x.shape(), [&](std::size_t e) { return coherent_sum(x[e], proj[e]); });
    return numerics::from_tokens(out, l.input.height, l.input.width);
  }

  const Schedule& s_;
  const WorkloadGraph& g_;
  const std::vector<LayerWeights>& w_;
  std::uint64_t macs_ = 0;
};

}  // namespace

ReplayResult replay(const Schedule& schedule, const WorkloadGraph& graph, const std::vector<LayerWeights>& weights,
                    const Tensor& input) {
  if (weights.size() != graph.layers.size()) throw ShapeError("replay: one weight set per layer is required");
  return Replayer(schedule, graph, weights).run(input);
}

VerifyResult verify_schedule(const Schedule& schedule, const WorkloadGraph& graph, std::uint64_t seed) {
  auto weights = make_weights(graph, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  Tensor input = random_normal({graph.input.channels, graph.input.height, graph.input.width}, rng);
  auto direct = execute_reference_all(graph, weights, input);
  auto mapped = replay(schedule, graph, weights, input);
  VerifyResult v;
  for (std::size_t i = 0; i < direct.size(); ++i) {
    double err = max_relative_error(mapped.layer_outputs[i], direct[i]);
    if (err > v.max_relative_error) {
      v.max_relative_error = err;
      v.worst_layer = i;
    }
  }
  v.output_relative_error = max_relative_error(mapped.output(), direct.back());
  return v;
}

}  // namespace difflight
