#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "difflight/error.hpp"
#include "difflight/workload.hpp"
#include "oracles.hpp"

using namespace difflight;
using nlohmann::json;

namespace {

json conv_doc(std::size_t T = 1) {
  return json{{"name", "one-conv"},
              {"timesteps", T},
              {"input", {{"channels", 1}, {"height", 4}, {"width", 4}}},
              {"layers", json::array({{{"kind", "conv"}, {"out_channels", 1}, {"kernel", 1}}})}};
}

std::string error_of(const json& doc) {
  try {
    load_workload(doc);
  } catch (const SchemaError& e) {
    return e.what();
  }
  return "";
}

double attention_fraction(const WorkloadGraph& g) {
  auto m = count_macs(g);
  std::uint64_t attn = 0;
  for (std::size_t i = 0; i < g.layers.size(); ++i)
    if (g.layers[i].kind == LayerKind::AttentionBlock) attn += m.per_layer[i];
  return static_cast<double>(attn) / static_cast<double>(m.per_timestep);
}

std::size_t largest_unet_extent(const WorkloadGraph& g) {
  std::size_t best = 0;
  for (const auto& l : g.layers)
    if (l.block == "unet") best = std::max(best, l.input.positions());
  return best;
}

}  // namespace

TEST(LoadWorkload, MinimalConvDocument) {
  WorkloadGraph g = load_workload(conv_doc());
  ASSERT_EQ(g.layers.size(), 1u);
  EXPECT_EQ(g.layers[0].output, (FeatureShape{1, 4, 4}));
  EXPECT_EQ(count_macs(g).per_timestep, 16u);
}

TEST(LoadWorkload, MismatchNamesBothLayers) {
  json doc = conv_doc();
  doc["layers"][0]["name"] = "stem";
  doc["layers"][0]["out_channels"] = 8;
  doc["layers"].push_back({{"kind", "conv"}, {"name", "body"}, {"in_channels", 4}, {"out_channels", 4}, {"kernel", 3}});
  std::string msg = error_of(doc);
  EXPECT_NE(msg.find("stem"), std::string::npos) << msg;
  EXPECT_NE(msg.find("body"), std::string::npos) << msg;
}

TEST(LoadWorkload, RejectsMalformedDocuments) {
  json unknown = conv_doc();
  unknown["layers"][0]["dilation"] = 2;
  EXPECT_NE(error_of(unknown).find("dilation"), std::string::npos);
  json kind = conv_doc();
  kind["layers"][0]["kind"] = "pool";
  EXPECT_NE(error_of(kind).find("pool"), std::string::npos);
  json skip = conv_doc();
  skip["layers"].push_back({{"kind", "residual_add"}, {"skip_from", 5}});
  EXPECT_FALSE(error_of(skip).empty());
  json heads = conv_doc();
  heads["layers"][0]["out_channels"] = 6;
  heads["layers"].push_back({{"kind", "attention"}, {"heads", 4}, {"d_k", 2}});
  EXPECT_FALSE(error_of(heads).empty());
  EXPECT_THROW(load_workload(std::string_view("{not json")), SchemaError);
  EXPECT_THROW(load_workload_file("/nonexistent/workload.json"), SchemaError);
}

TEST(LoadWorkload, SerializeRoundTripsEveryPreset) {
  for (const auto& name : preset_names()) {
    WorkloadGraph g = preset(name);
    std::string text = serialize(g);
    WorkloadGraph back = load_workload(std::string_view(text));
    EXPECT_EQ(serialize(back), text) << name;
    EXPECT_EQ(back.layers.size(), g.layers.size());
    EXPECT_EQ(back.parameter_count(), g.parameter_count());
  }
}

TEST(LoadWorkload, BundledFilesEqualPresets) {
  for (const auto& name : preset_names()) {
    std::ifstream f(std::string(DIFFLIGHT_PRESET_DIR) + "/" + name + ".json");
    ASSERT_TRUE(f) << name;
    std::stringstream ss;
    ss << f.rdbuf();
    EXPECT_EQ(ss.str(), serialize(preset(name))) << name;
    EXPECT_EQ(serialize(load_workload_file(std::string(DIFFLIGHT_PRESET_DIR) + "/" + name + ".json")), ss.str());
  }
}

TEST(CountMacs, WorkedExamples) {
  json lin{{"name", "linear"},
           {"timesteps", 1},
           {"input", {{"channels", 4}, {"height", 1}, {"width", 1}}},
           {"layers", json::array({{{"kind", "linear"}, {"out_features", 3}}})}};
  EXPECT_EQ(count_macs(load_workload(lin)).per_timestep, 12u);
}

TEST(CountMacs, AttentionMatchesInstrumentedOracle) {
  for (auto [h, w, d, heads, dk] : std::vector<std::array<std::size_t, 5>>{{2, 2, 4, 1, 2}, {3, 2, 6, 2, 5}, {4, 4, 8, 4, 3}}) {
    json doc{{"name", "attn"},
             {"timesteps", 1},
             {"input", {{"channels", d}, {"height", h}, {"width", w}}},
             {"layers", json::array({{{"kind", "attention"}, {"heads", heads}, {"d_k", dk}}})}};
    WorkloadGraph g = load_workload(doc);
    EXPECT_EQ(count_macs(g).per_timestep, oracle::instrumented_attention_macs(h * w, d, heads, dk));
  }
}

TEST(CountMacs, AdditiveAndLinearInTimesteps) {
  for (const auto& name : preset_names()) {
    WorkloadGraph g = preset(name);
    auto m = count_macs(g);
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < g.layers.size(); ++i) {
      EXPECT_EQ(m.per_layer[i], layer_macs(g.layers[i]));
      sum += m.per_layer[i];
    }
    EXPECT_EQ(sum, m.per_timestep);
    for (std::size_t T : {1u, 3u, 25u}) {
      g.timesteps = T;
      EXPECT_EQ(count_macs(g).total, T * m.per_timestep);
    }
  }
}

TEST(Presets, DdpmParameterCountByHand) {
  // conv_in 16*3*9, res0.norm 2*16, res0.conv 16*16*9, down0 32*16*9, res1.norm 2*32,
  // res1.conv 32*32*9, attn1 2*(2*32*16 + 32*16) + 32*32, up0 16*32*16, out.norm 2*32, out.conv 3*32*9
  const std::uint64_t expect = 432 + 32 + 2304 + 4608 + 64 + 9216 + 4096 + 8192 + 64 + 864;
  WorkloadGraph g = preset("ddpm-toy");
  EXPECT_EQ(g.parameter_count(), expect);
  std::uint64_t counted = 0;
  for (const auto& w : make_weights(g, 1)) {
    counted += w.kernel.size() + w.gamma.size() + w.beta.size() + w.attention.w_o.size();
    for (const auto& h : w.attention.heads) counted += h.w_q.size() + h.w_k.size() + h.w_v.size();
  }
  EXPECT_EQ(counted, expect);
}

TEST(Presets, WorkloadCharacter) {
  EXPECT_GT(attention_fraction(preset("sdm-toy")), attention_fraction(preset("ldm-toy")));
  EXPECT_GT(largest_unet_extent(preset("ddpm-toy")), largest_unet_extent(preset("ldm-toy")));
  EXPECT_THROW(preset("imagen"), SchemaError);
}

TEST(Presets, ReferenceExecutionHasDeclaredShapes) {
  for (const auto& name : preset_names()) {
    WorkloadGraph g = preset(name);
    auto w = make_weights(g, 3);
    std::mt19937_64 rng(4);
    Tensor x = random_normal({g.input.channels, g.input.height, g.input.width}, rng);
    auto outs = execute_reference_all(g, w, x);
    ASSERT_EQ(outs.size(), g.layers.size());
    for (std::size_t i = 0; i < outs.size(); ++i) {
      const auto& s = g.layers[i].output;
      EXPECT_EQ(outs[i].shape(), (std::vector<std::size_t>{s.channels, s.height, s.width})) << g.layers[i].name;
      EXPECT_TRUE(outs[i].all_finite());
    }
    EXPECT_EQ(execute_reference(g, w, x), outs.back());
  }
}
