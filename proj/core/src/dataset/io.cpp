// SPDX-License-Identifier: Apache-2.0
#include <json.hpp>

#include "common/text_io.hpp"
#include "wsddn/autodiff/checkpoint.hpp"
#include "wsddn/common/error.hpp"
#include "wsddn/dataset/dataset.hpp"

namespace wsddn::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

fs::path image_path(const std::string& id) { return fs::path("images") / (id + ".wten"); }
fs::path proposals_path(const std::string& id) { return fs::path("proposals") / (id + ".txt"); }
fs::path gt_path(const std::string& id) { return fs::path("gt") / (id + ".txt"); }

void write_gt(const fs::path& path, const std::vector<eval::GtBox>& gt) {
  std::string out;
  for (const auto& b : gt) {
    out += std::to_string(b.class_index) + " " + std::to_string(b.region.x0) + " " +
           std::to_string(b.region.y0) + " " + std::to_string(b.region.x1) + " " +
           std::to_string(b.region.y1) + "\n";
  }
  text::write_file(path, out);
}

std::vector<eval::GtBox> read_gt(const fs::path& path, std::size_t num_classes) {
  std::vector<eval::GtBox> out;
  text::for_each_line(path, [&](text::LineCursor& line) {
    eval::GtBox b;
    b.class_index = line.integer<std::size_t>("class index");
    b.region.x0 = line.integer<int>("x0");
    b.region.y0 = line.integer<int>("y0");
    b.region.x1 = line.integer<int>("x1");
    b.region.y1 = line.integer<int>("y1");
    line.expect_end();
    if (b.class_index >= num_classes) line.fail("class index out of range");
    if (b.region.x0 < 0 || b.region.y0 < 0 || b.region.x1 <= b.region.x0 || b.region.y1 <= b.region.y0) {
      line.fail("invalid box");
    }
    out.push_back(b);
  });
  return out;
}

struct ManifestEntry {
  std::string id;
  LabelVector labels;
  std::string image;
  std::string proposals;
};

struct Manifest {
  std::vector<std::string> class_names;
  std::vector<ManifestEntry> entries;
};

Manifest read_manifest(const fs::path& dir) {
  const auto path = dir / "manifest.json";
  const auto text = text::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), e.byte, e.what());
  }
  try {
    if (j.at("version").get<int>() != kManifestVersion) {
      throw ParseError(path.string(), 0, "unsupported manifest version");
    }
    Manifest m;
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    for (const auto& e : j.at("entries")) {
      ManifestEntry me{e.at("id").get<std::string>(), e.at("labels").get<LabelVector>(),
                       e.at("image").get<std::string>(), e.at("proposals").get<std::string>()};
      if (me.labels.size() != m.class_names.size()) {
        throw ParseError(path.string(), 0, "entry '" + me.id + "' has a label vector of the wrong length");
      }
      for (int l : me.labels) {
        if (l != 1 && l != -1) throw ParseError(path.string(), 0, "labels must be -1 or +1 in entry '" + me.id + "'");
      }
      m.entries.push_back(std::move(me));
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, std::string("malformed manifest: ") + e.what());
  }
}

}  // namespace

void write_dataset(const Dataset& dataset, const fs::path& dir) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "proposals");
  fs::create_directories(dir / "gt");
  json entries = json::array();
  for (const auto& s : dataset.samples) {
    if (s.labels.size() != dataset.num_classes()) throw UsageError("sample '" + s.id + "' label length mismatch");
    ad::ParameterSet img;
    img.add("image", s.image);
    ad::write_tensors(dir / image_path(s.id), img);
    proposals::write_proposals(dir / proposals_path(s.id), s.proposals);
    write_gt(dir / gt_path(s.id), s.gt);
    entries.push_back({{"id", s.id},
                       {"labels", s.labels},
                       {"image", image_path(s.id).generic_string()},
                       {"proposals", proposals_path(s.id).generic_string()}});
  }
  json manifest = {{"version", kManifestVersion},
                   {"num_classes", dataset.num_classes()},
                   {"class_names", dataset.class_names},
                   {"entries", entries}};
  text::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset read_dataset(const fs::path& dir, GtAccess gt) {
  const auto manifest = read_manifest(dir);
  Dataset out;
  out.class_names = manifest.class_names;
  for (const auto& e : manifest.entries) {
    ImageSample s;
    s.id = e.id;
    s.labels = e.labels;
    const auto ipath = dir / e.image;
    const auto tensors = ad::read_tensors(ipath);
    if (!tensors.contains("image")) throw ParseError(ipath.string(), 0, "no tensor named 'image'");
    s.image = tensors.at("image");
    if (s.image.rank() != 3) throw ParseError(ipath.string(), 0, "image must be H x W x C");
    s.proposals = proposals::read_proposals(dir / e.proposals);
    for (const auto& r : s.proposals) {
      if (!r.inside(s.width(), s.height())) {
        throw ParseError((dir / e.proposals).string(), 0, "proposal " + r.to_string() + " lies outside the image");
      }
    }
    if (gt == GtAccess::included) s.gt = read_gt(dir / gt_path(e.id), out.num_classes());
    out.samples.push_back(std::move(s));
  }
  return out;
}

eval::GroundTruth read_ground_truth(const fs::path& dir) {
  const auto manifest = read_manifest(dir);
  eval::GroundTruth gt;
  for (const auto& e : manifest.entries) gt[e.id] = read_gt(dir / gt_path(e.id), manifest.class_names.size());
  return gt;
}

}  // namespace wsddn::data
