// SPDX-License-Identifier: Apache-2.0
#include "wsddn/evaluation/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "common/text_io.hpp"
#include "wsddn/common/error.hpp"

namespace wsddn::eval {

double iou(const Region& a, const Region& b) noexcept {
  const std::int64_t iw = std::max(0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const std::int64_t ih = std::max(0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const std::int64_t inter = iw * ih;
  const std::int64_t uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

std::vector<Detection> nms(std::span<const Detection> dets, double threshold) {
  if (dets.empty()) return {};
  for (const auto& d : dets) {
    if (d.class_index != dets.front().class_index) throw UsageError("nms: detections of mixed classes");
  }
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<Detection> kept;
  std::vector<bool> removed(dets.size(), false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (removed[i]) continue;
    const auto& top = dets[order[i]];
    kept.push_back(top);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (!removed[j] && iou(top.region, dets[order[j]].region) > threshold) removed[j] = true;
    }
  }
  return kept;
}

std::vector<Detection> detections_from_scores(const ad::Tensor& region_scores,
                                              std::span<const Region> regions,
                                              double nms_threshold) {
  if (region_scores.rank() != 2 || region_scores.dim(1) != regions.size()) {
    throw UsageError("detections_from_scores: score matrix " +
                     ad::shape_string(region_scores.shape()) + " does not match " +
                     std::to_string(regions.size()) + " regions");
  }
  std::vector<Detection> out;
  std::vector<Detection> per_class;
  for (std::size_t c = 0; c < region_scores.dim(0); ++c) {
    per_class.clear();
    for (std::size_t r = 0; r < regions.size(); ++r) {
      Region reg = regions[r];
      reg.objectness.reset();
      per_class.push_back({c, reg, region_scores.at(c, r)});
    }
    auto kept = nms(per_class, nms_threshold);
    out.insert(out.end(), kept.begin(), kept.end());
  }
  return out;
}

double eleven_point_ap(const std::vector<bool>& ranked_hits, std::size_t num_positives) {
  if (num_positives == 0) throw UsageError("eleven_point_ap: no positives");
  std::vector<double> recall, precision;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < ranked_hits.size(); ++i) {
    if (ranked_hits[i]) ++tp;
    recall.push_back(static_cast<double>(tp) / static_cast<double>(num_positives));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
  }
  double ap = 0.0;
  for (int step = 0; step <= 10; ++step) {
    const double t = step / 10.0;
    double p = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] >= t) p = std::max(p, precision[i]);
    }
    ap += p;
  }
  return ap / 11.0;
}

std::vector<std::optional<double>> average_precision(std::span<const ImageDetection> dets,
                                                     const GroundTruth& gt,
                                                     std::size_t num_classes,
                                                     double iou_threshold) {
  std::vector<std::optional<double>> out(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t positives = 0;
    std::map<std::string, std::vector<Region>> instances;
    for (const auto& [id, boxes] : gt) {
      for (const auto& b : boxes) {
        if (b.class_index == c) {
          instances[id].push_back(b.region);
          ++positives;
        }
      }
    }
    if (positives == 0) continue;

    std::vector<const ImageDetection*> ranked;
    for (const auto& d : dets) {
      if (d.det.class_index == c) ranked.push_back(&d);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const ImageDetection* a, const ImageDetection* b) {
      return a->det.score > b->det.score;
    });

    std::map<std::string, std::vector<bool>> matched;
    for (const auto& [id, regs] : instances) matched[id].assign(regs.size(), false);

    std::vector<bool> hits;
    hits.reserve(ranked.size());
    for (const auto* d : ranked) {
      bool hit = false;
      auto it = instances.find(d->image_id);
      if (it != instances.end()) {
        auto& used = matched[d->image_id];
        double best = -1.0;
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < it->second.size(); ++j) {
          if (used[j]) continue;
          const double o = iou(d->det.region, it->second[j]);
          if (o > best) {
            best = o;
            best_j = j;
          }
        }
        if (best >= iou_threshold) {
          used[best_j] = true;
          hit = true;
        }
      }
      hits.push_back(hit);
    }
    out[c] = eleven_point_ap(hits, positives);
  }
  return out;
}

std::vector<std::optional<double>> corloc(std::span<const ImageDetection> dets,
                                          const GroundTruth& gt, std::size_t num_classes,
                                          double iou_threshold) {
  std::map<std::pair<std::string, std::size_t>, const ImageDetection*> top_of;
  for (const auto& d : dets) {
    auto& top = top_of[{d.image_id, d.det.class_index}];
    if (!top || d.det.score > top->det.score) top = &d;
  }
  std::vector<std::optional<double>> out(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t positive_images = 0, hits = 0;
    for (const auto& [id, boxes] : gt) {
      const bool positive = std::any_of(boxes.begin(), boxes.end(),
                                        [c](const GtBox& b) { return b.class_index == c; });
      if (!positive) continue;
      ++positive_images;
      auto found = top_of.find({id, c});
      if (found == top_of.end()) continue;
      const ImageDetection* top = found->second;
      for (const auto& b : boxes) {
        if (b.class_index == c && iou(top->det.region, b.region) >= iou_threshold) {
          ++hits;
          break;
        }
      }
    }
    if (positive_images > 0) {
      out[c] = 100.0 * static_cast<double>(hits) / static_cast<double>(positive_images);
    }
  }
  return out;
}

std::optional<double> mean_defined(std::span<const std::optional<double>> values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

ad::Tensor ensemble_average(std::span<const ad::Tensor> score_sets) {
  if (score_sets.empty()) throw UsageError("ensemble_average: no score sets");
  ad::Tensor out(score_sets.front().shape(), 0.0);
  for (const auto& s : score_sets) {
    if (s.shape() != out.shape()) {
      throw UsageError("ensemble_average: shape " + ad::shape_string(s.shape()) + " differs from " +
                       ad::shape_string(out.shape()));
    }
    for (std::size_t i = 0; i < s.size(); ++i) out[i] += s[i];
  }
  const double n = static_cast<double>(score_sets.size());
  for (double& v : out.data()) v /= n;
  return out;
}

std::optional<double> MetricsReport::mean_ap_percent() const {
  auto m = mean_defined(ap);
  if (m) *m *= 100.0;
  return m;
}

std::optional<double> MetricsReport::mean_corloc() const { return mean_defined(corloc); }

std::string MetricsReport::format() const {
  auto cell = [](const std::optional<double>& v, double factor) {
    if (!v) return std::string("undefined");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v * factor);
    return std::string(buf);
  };
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-5s %-12s %12s %12s\n", "class", "name", "AP", "CorLoc");
  os << line;
  const std::size_t n = std::max(ap.size(), corloc.size());
  for (std::size_t c = 0; c < n; ++c) {
    const std::string name = c < class_names.size() ? class_names[c] : std::to_string(c);
    std::snprintf(line, sizeof line, "%-5zu %-12s %12s %12s\n", c, name.c_str(),
                  cell(c < ap.size() ? ap[c] : std::nullopt, 100.0).c_str(),
                  cell(c < corloc.size() ? corloc[c] : std::nullopt, 1.0).c_str());
    os << line;
  }
  std::snprintf(line, sizeof line, "%-5s %-12s %12s %12s\n", "mean", "", cell(mean_ap_percent(), 1.0).c_str(),
                cell(mean_corloc(), 1.0).c_str());
  os << line;
  return os.str();
}

std::string format_detection_line(const ImageDetection& d) {
  return d.image_id + " " + std::to_string(d.det.class_index) + " " + text::format_double(d.det.score) +
         " " + std::to_string(d.det.region.x0) + " " + std::to_string(d.det.region.y0) + " " +
         std::to_string(d.det.region.x1) + " " + std::to_string(d.det.region.y1);
}

void write_detections(const std::filesystem::path& path, std::span<const ImageDetection> dets) {
  std::string out;
  for (const auto& d : dets) out += format_detection_line(d) + "\n";
  text::write_file(path, out);
}

std::vector<ImageDetection> read_detections(const std::filesystem::path& path) {
  std::vector<ImageDetection> out;
  text::for_each_line(path, [&](text::LineCursor& line) {
    ImageDetection d;
    d.image_id = line.word("image id");
    d.det.class_index = line.integer<std::size_t>("class index");
    d.det.score = line.real("score");
    d.det.region.x0 = line.integer<int>("x0");
    d.det.region.y0 = line.integer<int>("y0");
    d.det.region.x1 = line.integer<int>("x1");
    d.det.region.y1 = line.integer<int>("y1");
    line.expect_end();
    if (d.det.region.x1 <= d.det.region.x0 || d.det.region.y1 <= d.det.region.y0) {
      line.fail("empty detection box");
    }
    out.push_back(std::move(d));
  });
  return out;
}

}  // namespace wsddn::eval
