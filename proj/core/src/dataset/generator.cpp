// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "wsddn/common/error.hpp"
#include "wsddn/dataset/dataset.hpp"

namespace wsddn::data {

std::vector<std::string> DatasetConfig::class_names() const {
  std::vector<std::string> names;
  for (const auto& c : classes) names.push_back(c.name);
  return names;
}

void DatasetConfig::validate() const {
  if (classes.size() < 2) {
    throw ConfigError("dataset: at least two classes are required, got " + std::to_string(classes.size()));
  }
  for (const auto& c : classes) {
    if (!(c.intensity_lo >= 0.0 && c.intensity_lo <= c.intensity_hi && c.intensity_hi <= 1.0)) {
      throw ConfigError("dataset: intensity band of '" + c.name + "' must lie within [0, 1]");
    }
  }
  if (width < 8 || height < 8) throw ConfigError("dataset: images must be at least 8x8");
  if (margin < 1) throw ConfigError("dataset: margin must be at least 1 pixel");
  if (min_instances < 1 || max_instances < min_instances) {
    throw ConfigError("dataset: need 1 <= min_instances <= max_instances");
  }
  if (min_size < 3 || max_size < min_size) throw ConfigError("dataset: need 3 <= min_size <= max_size");
  if (max_size + 2 * margin > std::min(width, height)) {
    throw ConfigError("dataset: max_size plus margins exceeds the image");
  }
  if (!(noise_amplitude >= 0.0 && noise_amplitude <= 1.0)) {
    throw ConfigError("dataset: noise_amplitude must lie in [0, 1]");
  }
  if (train_count < 1 || test_count < 1) throw ConfigError("dataset: split counts must be at least 1");
}

eval::GroundTruth Dataset::ground_truth() const {
  eval::GroundTruth gt;
  for (const auto& s : samples) gt[s.id] = s.gt;
  return gt;
}

LabelVector labels_from_gt(const std::vector<eval::GtBox>& gt, std::size_t num_classes) {
  LabelVector labels(num_classes, -1);
  for (const auto& b : gt) {
    if (b.class_index >= num_classes) throw UsageError("gt class index out of range");
    labels[b.class_index] = 1;
  }
  return labels;
}

namespace {

bool covers(ShapeKind shape, int x0, int y0, int size, int x, int y) {
  const double s = size;
  const double px = x + 0.5 - x0, py = y + 0.5 - y0;
  switch (shape) {
    case ShapeKind::square:
      return px >= 0 && px < s && py >= 0 && py < s;
    case ShapeKind::disk: {
      const double dx = px - s / 2, dy = py - s / 2;
      return dx * dx + dy * dy <= (s / 2) * (s / 2);
    }
    case ShapeKind::triangle:
      // Apex at the top centre, base along the bottom edge.
      return py >= 0 && py < s && std::abs(px - s / 2) <= py / 2;
  }
  return false;
}

bool overlaps_with_gap(const Region& a, const Region& b, int gap) {
  return a.x0 < b.x1 + gap && b.x0 < a.x1 + gap && a.y0 < b.y1 + gap && b.y0 < a.y1 + gap;
}

}  // namespace

ImageSample generate_sample(Rng& rng, const DatasetConfig& cfg,
                            const proposals::ProposalConfig& proposal_cfg, std::string id) {
  cfg.validate();
  const int w = cfg.width, h = cfg.height;
  ImageSample s;
  s.id = std::move(id);
  s.image = ad::Tensor({static_cast<std::size_t>(h), static_cast<std::size_t>(w), 1}, 0.0);
  for (double& v : s.image.data()) v = cfg.noise_amplitude * rng.uniform();

  const int count = rng.range(cfg.min_instances, cfg.max_instances);
  std::vector<Region> placed;
  for (int n = 0; n < count; ++n) {
    const auto cls = static_cast<std::size_t>(rng.below(cfg.classes.size()));
    const auto& spec = cfg.classes[cls];
    int size = rng.range(cfg.min_size, cfg.max_size);
    bool ok = false;
    int x0 = 0, y0 = 0;
    // Bounded retries, then shrink; the first instance always fits.
    while (!ok && size >= cfg.min_size) {
      for (int attempt = 0; attempt < 40 && !ok; ++attempt) {
        x0 = rng.range(cfg.margin, w - cfg.margin - size);
        y0 = rng.range(cfg.margin, h - cfg.margin - size);
        const Region box{x0, y0, x0 + size, y0 + size, std::nullopt};
        ok = std::none_of(placed.begin(), placed.end(),
                          [&](const Region& p) { return overlaps_with_gap(box, p, 2); });
      }
      if (!ok) size -= 2;
    }
    if (!ok) continue;
    placed.push_back({x0, y0, x0 + size, y0 + size, std::nullopt});

    const double intensity = rng.uniform(spec.intensity_lo, spec.intensity_hi);
    Region tight{w, h, 0, 0, std::nullopt};
    for (int y = y0; y < y0 + size; ++y) {
      for (int x = x0; x < x0 + size; ++x) {
        if (!covers(spec.shape, x0, y0, size, x, y)) continue;
        s.image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), 0) = intensity;
        tight.x0 = std::min(tight.x0, x);
        tight.y0 = std::min(tight.y0, y);
        tight.x1 = std::max(tight.x1, x + 1);
        tight.y1 = std::max(tight.y1, y + 1);
      }
    }
    s.gt.push_back({cls, tight});
  }
  s.labels = labels_from_gt(s.gt, cfg.classes.size());
  s.proposals = proposals::score_proposals(s.image, proposals::grid_proposals(w, h, proposal_cfg));
  return s;
}

Splits generate_dataset(const DatasetConfig& cfg, const proposals::ProposalConfig& proposal_cfg) {
  cfg.validate();
  proposal_cfg.validate();
  Splits out;
  out.train.class_names = out.test.class_names = cfg.class_names();
  auto fill = [&](Dataset& split, const char* prefix, std::uint64_t salt, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      Rng rng(mix_seed(mix_seed(cfg.seed, salt), i));
      char id[32];
      std::snprintf(id, sizeof id, "%s_%05zu", prefix, i);
      split.samples.push_back(generate_sample(rng, cfg, proposal_cfg, id));
    }
  };
  fill(out.train, "train", 1, cfg.train_count);
  fill(out.test, "test", 2, cfg.test_count);
  return out;
}

double contrast_gap(const ImageSample& sample) {
  const int w = sample.width(), h = sample.height();
  std::vector<bool> inside(static_cast<std::size_t>(w * h), false);
  double in_sum = 0.0;
  std::size_t in_n = 0;
  for (const auto& b : sample.gt) {
    for (int y = b.region.y0; y < b.region.y1; ++y) {
      for (int x = b.region.x0; x < b.region.x1; ++x) {
        inside[static_cast<std::size_t>(y * w + x)] = true;
        in_sum += sample.image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), 0);
        ++in_n;
      }
    }
  }
  double out_sum = 0.0;
  std::size_t out_n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (inside[static_cast<std::size_t>(y * w + x)]) continue;
      out_sum += sample.image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), 0);
      ++out_n;
    }
  }
  if (in_n == 0 || out_n == 0) return 0.0;
  return in_sum / static_cast<double>(in_n) - out_sum / static_cast<double>(out_n);
}

}  // namespace wsddn::data
