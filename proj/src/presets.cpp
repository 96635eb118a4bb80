#include <string>

#include "difflight/error.hpp"
#include "difflight/workload.hpp"

namespace difflight {

namespace {

class GraphBuilder {
 public:
  GraphBuilder(std::string name, FeatureShape input) {
    graph_.name = std::move(name);
    graph_.timesteps = 10;
    graph_.input = input;
  }

  GraphBuilder& block(std::string b) {
    block_ = std::move(b);
    return *this;
  }

  std::size_t conv(std::string name, std::size_t out, std::size_t k, std::size_t stride = 1, std::size_t pad = 1) {
    LayerSpec l = base(LayerKind::Conv, std::move(name));
    l.out_channels = out;
    l.kernel = k;
    l.stride = stride;
    l.padding = pad;
    return push(l);
  }

  std::size_t conv_transpose(std::string name, std::size_t out, std::size_t k, std::size_t stride, std::size_t pad) {
    LayerSpec l = base(LayerKind::ConvTranspose, std::move(name));
    l.out_channels = out;
    l.kernel = k;
    l.stride = stride;
    l.padding = pad;
    return push(l);
  }

  std::size_t norm(std::string name, std::size_t groups) {
    LayerSpec l = base(LayerKind::GroupNorm, std::move(name));
    l.groups = groups;
    return push(l);
  }

  std::size_t swish(std::string name) { return push(base(LayerKind::Swish, std::move(name))); }

  std::size_t attention(std::string name, std::size_t heads, std::size_t d_k) {
    LayerSpec l = base(LayerKind::AttentionBlock, std::move(name));
    l.heads = heads;
    l.d_k = d_k;
    return push(l);
  }

  std::size_t skip(std::string name, std::size_t from, bool concat = false) {
    LayerSpec l = base(LayerKind::ResidualAdd, std::move(name));
    l.skip_from = from;
    l.concat = concat;
    return push(l);
  }

  // GroupNorm, swish, conv: the body of one residual block.
  std::size_t norm_act_conv(const std::string& prefix, std::size_t groups, std::size_t out) {
    norm(prefix + ".norm", groups);
    swish(prefix + ".act");
    return conv(prefix + ".conv", out, 3);
  }

  WorkloadGraph finish() {
    validate(graph_);
    return std::move(graph_);
  }

 private:
  LayerSpec base(LayerKind kind, std::string name) {
    LayerSpec l;
    l.kind = kind;
    l.name = std::move(name);
    l.block = block_;
    return l;
  }

  std::size_t push(const LayerSpec& l) {
    graph_.layers.push_back(l);
    return graph_.layers.size() - 1;
  }

  WorkloadGraph graph_;
  std::string block_ = "unet";
};

WorkloadGraph ddpm_toy() {
  GraphBuilder b("ddpm-toy", {3, 16, 16});
  std::size_t in = b.conv("conv_in", 16, 3);
  b.norm_act_conv("res0", 4, 16);
  std::size_t res0 = b.skip("res0.add", in);
  b.conv("down0", 32, 3, 2, 1);
  b.norm_act_conv("res1", 8, 32);
  b.attention("attn1", 2, 16);
  b.conv_transpose("up0", 16, 4, 2, 1);
  b.skip("up0.cat", res0, true);
  b.norm_act_conv("out", 8, 3);
  return b.finish();
}

// Encoder to a 4x8x8 latent, a shallow UNet on the latent, decoder back to 3x16x16.
WorkloadGraph latent_toy(const char* name, bool extra_attention) {
  GraphBuilder b(name, {3, 16, 16});
  b.block("encoder");
  b.conv("enc.conv0", 16, 3, 2, 1);
  b.swish("enc.act0");
  b.conv("enc.conv1", 4, 3);

  b.block("unet");
  std::size_t in = b.conv("conv_in", 32, 3);
  b.norm_act_conv("res0", 8, 32);
  std::size_t res0 = b.skip("res0.add", in);
  if (extra_attention) res0 = b.attention("attn0", 2, 16);
  b.conv("down0", 32, 3, 2, 1);
  b.norm_act_conv("res1", 8, 32);
  b.attention("attn1", 2, 16);
  if (extra_attention) b.attention("attn1b", 4, 8);
  b.conv_transpose("up0", 32, 4, 2, 1);
  b.skip("up0.cat", res0, true);
  if (extra_attention) {
    b.conv("up0.proj", 32, 1, 1, 0);
    b.attention("attn2", 2, 16);
    b.norm_act_conv("out", 8, 4);
  } else {
    b.norm_act_conv("out", 8, 4);
  }

  b.block("decoder");
  b.conv_transpose("dec.up", 16, 4, 2, 1);
  b.swish("dec.act");
  b.conv("dec.conv", 3, 3);
  return b.finish();
}

}  // namespace

std::vector<std::string> preset_names() { return {"ddpm-toy", "ldm-toy", "sdm-toy"}; }

WorkloadGraph preset(std::string_view name) {
  if (name == "ddpm-toy") return ddpm_toy();
  if (name == "ldm-toy") return latent_toy("ldm-toy", false);
  if (name == "sdm-toy") return latent_toy("sdm-toy", true);
  throw SchemaError("unknown preset '" + std::string(name) + "' (expected ddpm-toy, ldm-toy or sdm-toy)");
}

}  // namespace difflight
