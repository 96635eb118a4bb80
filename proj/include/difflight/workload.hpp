#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "difflight/numerics.hpp"
#include "difflight/tensor.hpp"

namespace difflight {

enum class LayerKind { Conv, ConvTranspose, GroupNorm, Swish, AttentionBlock, Linear, ResidualAdd };

const char* layer_kind_name(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view name);

struct FeatureShape {
  std::size_t channels = 0, height = 0, width = 0;

  std::size_t elements() const { return channels * height * width; }
  std::size_t positions() const { return height * width; }
  friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

std::string to_string(const FeatureShape& s);

// One layer of the per-timestep denoiser. Only the fields relevant to `kind`
// are meaningful; `input`/`output` are resolved by validation.
struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  std::string name;
  std::string block = "unet";  // "encoder", "unet" or "decoder"; reporting only

  std::size_t out_channels = 0;  // Conv, ConvTranspose, Linear
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t groups = 0;  // GroupNorm
  std::size_t heads = 0;   // AttentionBlock; the token width is the channel count
  std::size_t d_k = 0;
  std::optional<std::size_t> skip_from;  // ResidualAdd: earlier layer whose output is added
  bool concat = false;                   // ResidualAdd: concatenate channels instead of adding

  FeatureShape input, output;

  std::size_t d_v() const { return heads == 0 ? 0 : input.channels / heads; }
  std::uint64_t parameter_count() const;
};

struct WorkloadGraph {
  std::string name;
  std::size_t timesteps = 1;
  FeatureShape input;
  std::vector<LayerSpec> layers;

  std::uint64_t parameter_count() const;
  const FeatureShape& output() const { return layers.empty() ? input : layers.back().output; }
};

// Resolves shapes and checks chaining. Throws SchemaError naming the layer path.
void validate(WorkloadGraph& graph);

WorkloadGraph load_workload(const nlohmann::json& doc);
WorkloadGraph load_workload(std::string_view text);
WorkloadGraph load_workload_file(const std::filesystem::path& path);
nlohmann::json to_json(const WorkloadGraph& graph);
std::string serialize(const WorkloadGraph& graph);

struct MacCount {
  std::vector<std::uint64_t> per_layer;
  std::uint64_t per_timestep = 0;
  std::uint64_t total = 0;  // per_timestep * timesteps
};

// Conv: Co*Ci*k^2*Ho*Wo. ConvTranspose: same, on the zero-inserted dense form.
// Linear: Co*Ci*positions. AttentionBlock: per head Q, Q*W_K^T, logits, V and
// Attn*V GEMMs, plus the output projection.
MacCount count_macs(const WorkloadGraph& graph);
std::uint64_t layer_macs(const LayerSpec& layer);

std::vector<std::string> preset_names();
WorkloadGraph preset(std::string_view name);

// Random weights for functional execution, deterministic in `seed`.
struct LayerWeights {
  Tensor kernel;  // Conv [Co,Ci,k,k], ConvTranspose [Ci,Co,k,k], Linear [Co,Ci]
  std::vector<double> gamma, beta;
  numerics::MultiHeadSpec attention;
};

std::vector<LayerWeights> make_weights(const WorkloadGraph& graph, std::uint64_t seed);

// Direct layer-by-layer execution through the reference kernels.
Tensor execute_reference(const WorkloadGraph& graph, const std::vector<LayerWeights>& weights, const Tensor& input);
std::vector<Tensor> execute_reference_all(const WorkloadGraph& graph, const std::vector<LayerWeights>& weights,
                                          const Tensor& input);

}  // namespace difflight
