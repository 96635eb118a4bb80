#include "difflight/workload.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "difflight/error.hpp"

namespace difflight {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<LayerKind, const char*>, 7> kKindNames{{
    {LayerKind::Conv, "conv"},
    {LayerKind::ConvTranspose, "conv_transpose"},
    {LayerKind::GroupNorm, "group_norm"},
    {LayerKind::Swish, "swish"},
    {LayerKind::AttentionBlock, "attention"},
    {LayerKind::Linear, "linear"},
    {LayerKind::ResidualAdd, "residual_add"},
}};

std::string layer_path(std::size_t index, const LayerSpec& layer) {
  return "layers[" + std::to_string(index) + "] (" + layer_kind_name(layer.kind) + " '" + layer.name + "')";
}

[[noreturn]] void fail(std::size_t index, const LayerSpec& layer, const std::string& msg) {
  throw SchemaError(layer_path(index, layer) + ": " + msg);
}

std::size_t get_size(const json& obj, const char* key, const std::string& where, std::optional<std::size_t> fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (fallback) return *fallback;
    throw SchemaError(where + ": missing field '" + key + "'");
  }
  if (!it->is_number_integer() || it->get<long long>() < 0) {
    throw SchemaError(where + ": field '" + key + "' must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items()) {
    if (!ok.count(k)) throw SchemaError(where + ": unknown field '" + k + "'");
  }
}

// Extents after a convolution; 0 when the window does not fit.
std::size_t conv_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
  if (in + 2 * pad < k) return 0;
  return (in + 2 * pad - k) / stride + 1;
}

}  // namespace

const char* layer_kind_name(LayerKind kind) {
  for (const auto& [k, n] : kKindNames)
    if (k == kind) return n;
  return "?";
}

std::optional<LayerKind> parse_layer_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (name == n) return k;
  return std::nullopt;
}

std::string to_string(const FeatureShape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" + std::to_string(s.width);
}

std::uint64_t LayerSpec::parameter_count() const {
  const std::uint64_t ci = input.channels;
  switch (kind) {
    case LayerKind::Conv:
    case LayerKind::ConvTranspose: return out_channels * ci * kernel * kernel;
    case LayerKind::GroupNorm: return 2 * ci;
    case LayerKind::Linear: return out_channels * ci;
    case LayerKind::AttentionBlock: return heads * (2 * ci * d_k + ci * d_v()) + heads * d_v() * ci;
    case LayerKind::Swish:
    case LayerKind::ResidualAdd: return 0;
  }
  return 0;
}

std::uint64_t WorkloadGraph::parameter_count() const {
  std::uint64_t n = 0;
  for (const auto& l : layers) n += l.parameter_count();
  return n;
}

void validate(WorkloadGraph& graph) {
  if (graph.name.empty()) throw SchemaError("workload: name must not be empty");
  if (graph.timesteps == 0) throw SchemaError("workload: timesteps must be positive");
  if (graph.input.channels == 0 || graph.input.height == 0 || graph.input.width == 0) {
    throw SchemaError("workload: input extents must be positive");
  }
  if (graph.layers.empty()) throw SchemaError("workload: at least one layer is required");

  FeatureShape current = graph.input;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    LayerSpec& l = graph.layers[i];
    if (l.name.empty()) l.name = std::string(layer_kind_name(l.kind)) + "_" + std::to_string(i);
    if (l.block != "encoder" && l.block != "unet" && l.block != "decoder") {
      fail(i, l, "block must be one of encoder, unet, decoder");
    }
    l.input = current;
    FeatureShape out = current;
    switch (l.kind) {
      case LayerKind::Conv: {
        if (l.out_channels == 0 || l.kernel == 0 || l.stride == 0) fail(i, l, "out_channels, kernel and stride must be positive");
        out.channels = l.out_channels;
        out.height = conv_extent(current.height, l.kernel, l.stride, l.padding);
        out.width = conv_extent(current.width, l.kernel, l.stride, l.padding);
        if (out.height == 0 || out.width == 0) fail(i, l, "kernel does not fit the " + to_string(current) + " input");
        break;
      }
      case LayerKind::ConvTranspose: {
        if (l.out_channels == 0 || l.kernel == 0 || l.stride == 0) fail(i, l, "out_channels, kernel and stride must be positive");
        if (l.padding + 1 > l.kernel) fail(i, l, "padding must be at most kernel - 1");
        out.channels = l.out_channels;
        out.height = (current.height - 1) * l.stride + l.kernel - 2 * l.padding;
        out.width = (current.width - 1) * l.stride + l.kernel - 2 * l.padding;
        break;
      }
      case LayerKind::GroupNorm:
        if (l.groups == 0 || current.channels % l.groups != 0) {
          fail(i, l, std::to_string(current.channels) + " channels are not divisible into " + std::to_string(l.groups) + " groups");
        }
        break;
      case LayerKind::Swish: break;
      case LayerKind::AttentionBlock:
        if (l.heads == 0 || l.d_k == 0) fail(i, l, "heads and d_k must be >= 1");
        if (current.channels % l.heads != 0) {
          fail(i, l, "model width " + std::to_string(current.channels) + " is not divisible by " + std::to_string(l.heads) + " heads");
        }
        break;
      case LayerKind::Linear:
        if (l.out_channels == 0) fail(i, l, "out_features must be positive");
        out.channels = l.out_channels;
        break;
      case LayerKind::ResidualAdd: {
        if (!l.skip_from) fail(i, l, "skip_from is required");
        if (*l.skip_from >= i) {
          fail(i, l, "dangling skip reference to layers[" + std::to_string(*l.skip_from) + "]; it must name an earlier layer");
        }
        const LayerSpec& src = graph.layers[*l.skip_from];
        if (l.concat) {
          if (src.output.height != current.height || src.output.width != current.width) {
            fail(i, l, "cannot concatenate " + to_string(src.output) + " from " + layer_path(*l.skip_from, src) +
                           " with " + to_string(current));
          }
          out.channels = current.channels + src.output.channels;
        } else if (!(src.output == current)) {
          fail(i, l, "skip source " + layer_path(*l.skip_from, src) + " produces " + to_string(src.output) +
                         " but the running tensor is " + to_string(current));
        }
        break;
      }
    }
    l.output = out;
    current = out;
  }
}

// ---------------------------------------------------------------------------

WorkloadGraph load_workload(const json& doc) {
  if (!doc.is_object()) throw SchemaError("workload: document must be an object");
  check_keys(doc, {"name", "timesteps", "input", "layers"}, "workload");
  WorkloadGraph g;
  if (!doc.contains("name") || !doc["name"].is_string()) throw SchemaError("workload: 'name' must be a string");
  g.name = doc["name"].get<std::string>();
  g.timesteps = get_size(doc, "timesteps", "workload", std::nullopt);
  if (!doc.contains("input") || !doc["input"].is_object()) throw SchemaError("workload: 'input' must be an object");
  const json& in = doc["input"];
  check_keys(in, {"channels", "height", "width"}, "workload.input");
  g.input = {get_size(in, "channels", "workload.input", std::nullopt), get_size(in, "height", "workload.input", std::nullopt),
             get_size(in, "width", "workload.input", std::nullopt)};
  if (!doc.contains("layers") || !doc["layers"].is_array()) throw SchemaError("workload: 'layers' must be an array");

  // Declared input widths are checked after shape resolution.
  std::vector<std::pair<std::size_t, std::size_t>> declared_inputs;
  std::size_t index = 0;
  for (const json& lj : doc["layers"]) {
    std::string where = "layers[" + std::to_string(index) + "]";
    if (!lj.is_object()) throw SchemaError(where + ": layer must be an object");
    if (!lj.contains("kind") || !lj["kind"].is_string()) throw SchemaError(where + ": missing 'kind'");
    auto kind = parse_layer_kind(lj["kind"].get<std::string>());
    if (!kind) throw SchemaError(where + ": unknown kind '" + lj["kind"].get<std::string>() + "'");
    LayerSpec l;
    l.kind = *kind;
    if (lj.contains("name")) {
      if (!lj["name"].is_string()) throw SchemaError(where + ": 'name' must be a string");
      l.name = lj["name"].get<std::string>();
    }
    if (lj.contains("block")) {
      if (!lj["block"].is_string()) throw SchemaError(where + ": 'block' must be a string");
      l.block = lj["block"].get<std::string>();
    }
    std::optional<std::size_t> declared;
    switch (l.kind) {
      case LayerKind::Conv:
      case LayerKind::ConvTranspose:
        check_keys(lj, {"kind", "name", "block", "in_channels", "out_channels", "kernel", "stride", "padding"}, where);
        l.out_channels = get_size(lj, "out_channels", where, std::nullopt);
        l.kernel = get_size(lj, "kernel", where, std::nullopt);
        l.stride = get_size(lj, "stride", where, 1);
        l.padding = get_size(lj, "padding", where, 0);
        if (lj.contains("in_channels")) declared = get_size(lj, "in_channels", where, std::nullopt);
        break;
      case LayerKind::GroupNorm:
        check_keys(lj, {"kind", "name", "block", "channels", "groups"}, where);
        l.groups = get_size(lj, "groups", where, std::nullopt);
        if (lj.contains("channels")) declared = get_size(lj, "channels", where, std::nullopt);
        break;
      case LayerKind::Swish: check_keys(lj, {"kind", "name", "block"}, where); break;
      case LayerKind::AttentionBlock:
        check_keys(lj, {"kind", "name", "block", "d_model", "heads", "d_k"}, where);
        l.heads = get_size(lj, "heads", where, std::nullopt);
        l.d_k = get_size(lj, "d_k", where, std::nullopt);
        if (lj.contains("d_model")) declared = get_size(lj, "d_model", where, std::nullopt);
        break;
      case LayerKind::Linear:
        check_keys(lj, {"kind", "name", "block", "in_features", "out_features"}, where);
        l.out_channels = get_size(lj, "out_features", where, std::nullopt);
        if (lj.contains("in_features")) declared = get_size(lj, "in_features", where, std::nullopt);
        break;
      case LayerKind::ResidualAdd:
        check_keys(lj, {"kind", "name", "block", "skip_from", "concat"}, where);
        l.skip_from = get_size(lj, "skip_from", where, std::nullopt);
        if (lj.contains("concat")) {
          if (!lj["concat"].is_boolean()) throw SchemaError(where + ": 'concat' must be a boolean");
          l.concat = lj["concat"].get<bool>();
        }
        break;
    }
    if (declared) declared_inputs.emplace_back(index, *declared);
    g.layers.push_back(std::move(l));
    ++index;
  }

  // Check declared widths in order, before shape resolution can fail later on.
  FeatureShape running = g.input;
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    auto it = std::find_if(declared_inputs.begin(), declared_inputs.end(), [&](auto& p) { return p.first == i; });
    if (it != declared_inputs.end() && it->second != running.channels) {
      const LayerSpec& l = g.layers[i];
      std::string producer = i == 0 ? std::string("the workload input") : layer_path(i - 1, g.layers[i - 1]);
      LayerSpec named = l;
      if (named.name.empty()) named.name = std::string(layer_kind_name(l.kind)) + "_" + std::to_string(i);
      throw SchemaError(layer_path(i, named) + ": shape mismatch, expects " + std::to_string(it->second) +
                        " input channels but " + producer + " produces " + std::to_string(running.channels));
    }
    // Resolve one layer at a time so `running` tracks the producer's width.
    WorkloadGraph prefix{g.name, g.timesteps, g.input, {g.layers.begin(), g.layers.begin() + static_cast<std::ptrdiff_t>(i) + 1}};
    validate(prefix);
    g.layers[i] = prefix.layers[i];
    if (i > 0) g.layers[i - 1] = prefix.layers[i - 1];
    running = prefix.layers[i].output;
  }
  validate(g);
  return g;
}

WorkloadGraph load_workload(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("workload: ") + e.what());
  }
  return load_workload(doc);
}

WorkloadGraph load_workload_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open workload file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_workload(std::string_view(ss.str()));
}

json to_json(const WorkloadGraph& graph) {
  json doc;
  doc["name"] = graph.name;
  doc["timesteps"] = graph.timesteps;
  doc["input"] = {{"channels", graph.input.channels}, {"height", graph.input.height}, {"width", graph.input.width}};
  json layers = json::array();
  for (const auto& l : graph.layers) {
    json lj;
    lj["kind"] = layer_kind_name(l.kind);
    lj["name"] = l.name;
    lj["block"] = l.block;
    switch (l.kind) {
      case LayerKind::Conv:
      case LayerKind::ConvTranspose:
        lj["in_channels"] = l.input.channels;
        lj["out_channels"] = l.out_channels;
        lj["kernel"] = l.kernel;
        lj["stride"] = l.stride;
        lj["padding"] = l.padding;
        break;
      case LayerKind::GroupNorm:
        lj["channels"] = l.input.channels;
        lj["groups"] = l.groups;
        break;
      case LayerKind::Swish: break;
      case LayerKind::AttentionBlock:
        lj["d_model"] = l.input.channels;
        lj["heads"] = l.heads;
        lj["d_k"] = l.d_k;
        break;
      case LayerKind::Linear:
        lj["in_features"] = l.input.channels;
        lj["out_features"] = l.out_channels;
        break;
      case LayerKind::ResidualAdd:
        lj["skip_from"] = *l.skip_from;
        lj["concat"] = l.concat;
        break;
    }
    layers.push_back(std::move(lj));
  }
  doc["layers"] = std::move(layers);
  return doc;
}

std::string serialize(const WorkloadGraph& graph) { return to_json(graph).dump(2) + "\n"; }

// ---------------------------------------------------------------------------

std::uint64_t layer_macs(const LayerSpec& l) {
  const std::uint64_t ci = l.input.channels;
  switch (l.kind) {
    case LayerKind::Conv:
    case LayerKind::ConvTranspose:
      return std::uint64_t{l.out_channels} * ci * l.kernel * l.kernel * l.output.positions();
    case LayerKind::Linear: return std::uint64_t{l.out_channels} * ci * l.input.positions();
    case LayerKind::AttentionBlock: {
      const std::uint64_t s = l.input.positions(), d = ci, dk = l.d_k, dv = l.d_v();
      const std::uint64_t per_head = s * d * dk   // Q = X W_Q
                                     + s * dk * d // Q W_K^T
                                     + s * d * s  // (Q W_K^T) X^T
                                     + s * d * dv // V = X W_V
                                     + s * s * dv;// Attn V
      return l.heads * per_head + s * (l.heads * dv) * d;
    }
    case LayerKind::GroupNorm:
    case LayerKind::Swish:
    case LayerKind::ResidualAdd: return 0;
  }
  return 0;
}

MacCount count_macs(const WorkloadGraph& graph) {
  MacCount m;
  for (const auto& l : graph.layers) {
    m.per_layer.push_back(layer_macs(l));
    m.per_timestep += m.per_layer.back();
  }
  m.total = m.per_timestep * graph.timesteps;
  return m;
}

// ---------------------------------------------------------------------------

std::vector<LayerWeights> make_weights(const WorkloadGraph& graph, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<LayerWeights> out(graph.layers.size());
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerSpec& l = graph.layers[i];
    LayerWeights& w = out[i];
    const std::size_t ci = l.input.channels;
    switch (l.kind) {
      case LayerKind::Conv: {
        double a = std::sqrt(3.0 / static_cast<double>(ci * l.kernel * l.kernel));
        w.kernel = random_uniform({l.out_channels, ci, l.kernel, l.kernel}, rng, -a, a);
        break;
      }
      case LayerKind::ConvTranspose: {
        double fan = static_cast<double>(ci * l.kernel * l.kernel) / static_cast<double>(l.stride * l.stride);
        double a = std::sqrt(3.0 / std::max(fan, 1.0));
        w.kernel = random_uniform({ci, l.out_channels, l.kernel, l.kernel}, rng, -a, a);
        break;
      }
      case LayerKind::Linear: {
        double a = std::sqrt(3.0 / static_cast<double>(ci));
        w.kernel = random_uniform({l.out_channels, ci}, rng, -a, a);
        break;
      }
      case LayerKind::GroupNorm: {
        std::uniform_real_distribution<double> g(0.5, 1.5), b(-0.5, 0.5);
        for (std::size_t c = 0; c < ci; ++c) {
          w.gamma.push_back(g(rng));
          w.beta.push_back(b(rng));
        }
        break;
      }
      case LayerKind::AttentionBlock: {
        double a = std::sqrt(3.0 / static_cast<double>(ci));
        for (std::size_t h = 0; h < l.heads; ++h) {
          numerics::AttentionSpec spec;
          spec.w_q = random_uniform({ci, l.d_k}, rng, -a, a);
          spec.w_k = random_uniform({ci, l.d_k}, rng, -a, a);
          spec.w_v = random_uniform({ci, l.d_v()}, rng, -a, a);
          w.attention.heads.push_back(std::move(spec));
        }
        double ao = std::sqrt(3.0 / static_cast<double>(l.heads * l.d_v()));
        w.attention.w_o = random_uniform({l.heads * l.d_v(), ci}, rng, -ao, ao);
        break;
      }
      case LayerKind::Swish:
      case LayerKind::ResidualAdd: break;
    }
  }
  return out;
}

std::vector<Tensor> execute_reference_all(const WorkloadGraph& graph, const std::vector<LayerWeights>& weights,
                                          const Tensor& input) {
  if (weights.size() != graph.layers.size()) throw ShapeError("one weight set per layer is required");
  const FeatureShape& in = graph.input;
  if (input.shape() != std::vector<std::size_t>{in.channels, in.height, in.width}) {
    throw ShapeError("workload input must be " + to_string(in) + ", got " + input.shape_string());
  }
  std::vector<Tensor> outs;
  outs.reserve(graph.layers.size());
  const Tensor* x = &input;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerSpec& l = graph.layers[i];
    const LayerWeights& w = weights[i];
    Tensor y;
    switch (l.kind) {
      case LayerKind::Conv: y = numerics::conv2d(*x, w.kernel, l.stride, l.padding); break;
      case LayerKind::ConvTranspose: y = numerics::conv_transpose2d(*x, w.kernel, l.stride, l.padding); break;
      case LayerKind::GroupNorm: y = numerics::group_norm(*x, l.groups, w.gamma, w.beta); break;
      case LayerKind::Swish: y = numerics::swish(*x); break;
      case LayerKind::Linear: y = numerics::linear(*x, w.kernel); break;
      case LayerKind::AttentionBlock: {
        Tensor tokens = numerics::to_tokens(*x);
        y = numerics::from_tokens(numerics::attention_block(tokens, w.attention), l.input.height, l.input.width);
        break;
      }
      case LayerKind::ResidualAdd:
        y = l.concat ? numerics::concat_channels(*x, outs[*l.skip_from]) : numerics::add(*x, outs[*l.skip_from]);
        break;
    }
    outs.push_back(std::move(y));
    x = &outs.back();
  }
  return outs;
}

Tensor execute_reference(const WorkloadGraph& graph, const std::vector<LayerWeights>& weights, const Tensor& input) {
  return execute_reference_all(graph, weights, input).back();
}

}  // namespace difflight
