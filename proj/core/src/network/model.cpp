// SPDX-License-Identifier: Apache-2.0
#include "wsddn/network/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wsddn/common/error.hpp"
#include "wsddn/common/random.hpp"

namespace wsddn::net {

void ModelConfig::validate() const {
  if (input_channels == 0) throw ConfigError("model: input_channels must be positive");
  if (backbone.empty()) throw ConfigError("model: backbone needs at least one layer");
  for (const auto& l : backbone) {
    if (l.out_channels == 0 || l.kernel == 0 || l.stride == 0) {
      throw ConfigError("model: backbone layer extents must be positive");
    }
  }
  if (spp_grid == 0) throw ConfigError("model: spp_grid must be positive");
  if (fc6 == 0 || fc7 == 0) throw ConfigError("model: fc widths must be positive");
  if (num_classes == 0) throw ConfigError("model: num_classes must be at least 1");
}

std::size_t ModelConfig::feature_stride() const {
  std::size_t s = 1;
  for (const auto& l : backbone) s *= l.stride * (l.pool ? 2 : 1);
  return s;
}

std::size_t ModelConfig::feature_channels() const { return backbone.back().out_channels; }

std::size_t ModelConfig::min_input_size() const {
  std::size_t need = 1;
  for (auto it = backbone.rbegin(); it != backbone.rend(); ++it) {
    if (it->pool) need *= 2;
    const auto reach = it->kernel > 2 * it->pad ? it->kernel - 2 * it->pad : 1;
    need = (need - 1) * it->stride + std::max<std::size_t>(reach, 1);
  }
  return need;
}

std::size_t ModelConfig::region_feature_width() const {
  return spp_grid * spp_grid * feature_channels();
}

namespace {

ad::Tensor he_normal(ad::Shape shape, std::size_t fan_in, double gain, Rng& rng) {
  ad::Tensor t(std::move(shape), 0.0);
  const double std = gain * std::sqrt(2.0 / static_cast<double>(fan_in));
  for (double& v : t.data()) v = std * rng.normal();
  return t;
}

ad::Tensor normal(ad::Shape shape, double std, Rng& rng) {
  ad::Tensor t(std::move(shape), 0.0);
  for (double& v : t.data()) v = std * rng.normal();
  return t;
}

}  // namespace

ad::ParameterSet initialize_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(mix_seed(seed, 0x11A7));
  ad::ParameterSet p;
  std::size_t in = cfg.input_channels;
  for (std::size_t i = 0; i < cfg.backbone.size(); ++i) {
    const auto& l = cfg.backbone[i];
    const auto name = "conv" + std::to_string(i + 1);
    p.add(name + ".weight",
          he_normal({l.out_channels, in, l.kernel, l.kernel}, in * l.kernel * l.kernel, 1.0, rng));
    p.add(name + ".bias", ad::Tensor({l.out_channels}, 0.0));
    in = l.out_channels;
  }
  const auto d = cfg.region_feature_width();
  p.add("fc6.weight", he_normal({d, cfg.fc6}, d, 1.0, rng));
  p.add("fc6.bias", ad::Tensor({cfg.fc6}, 0.0));
  p.add("fc7.weight", he_normal({cfg.fc6, cfg.fc7}, cfg.fc6, 1.0, rng));
  p.add("fc7.bias", ad::Tensor({cfg.fc7}, 0.0));
  p.add("fc8c.weight", normal({cfg.fc7, cfg.num_classes}, 0.01, rng));
  p.add("fc8c.bias", ad::Tensor({cfg.num_classes}, 0.0));
  if (cfg.architecture == Architecture::two_stream) {
    p.add("fc8d.weight", normal({cfg.fc7, cfg.num_classes}, 0.01, rng));
    p.add("fc8d.bias", ad::Tensor({cfg.num_classes}, 0.0));
  }
  return p;
}

void check_parameters(const ad::ParameterSet& params, const ModelConfig& cfg) {
  const auto reference = initialize_parameters(cfg, 0);
  for (const auto& [name, t] : reference) {
    if (!params.contains(name)) throw ConfigError("parameters lack '" + name + "'");
    const auto& have = params.at(name);
    if (have.shape() != t.shape()) {
      throw ConfigError("parameter '" + name + "' has shape " + ad::shape_string(have.shape()) +
                        ", model expects " + ad::shape_string(t.shape()));
    }
  }
}

}  // namespace wsddn::net
