#include "hdgkit/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "hdgkit/error.hpp"
#include "hdgkit/parallel.hpp"

namespace hdg {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- manifest

void DatasetManifest::validate() const {
  if (num_classes < 1) throw ValidationError(fmt::format("manifest '{}': num_classes must be >= 1", name));
  if (num_subjects < 1) throw ValidationError(fmt::format("manifest '{}': num_subjects must be >= 1", name));
  if (num_views < 1) throw ValidationError(fmt::format("manifest '{}': num_views must be >= 1", name));
  if (num_joints < 1) throw ValidationError(fmt::format("manifest '{}': num_joints must be >= 1", name));
  if (reference_joint < 0 || reference_joint >= num_joints) {
    throw ValidationError(fmt::format("manifest '{}': reference_joint {} outside [0, {})", name, reference_joint,
                                      num_joints));
  }
  if (!class_names.empty() && class_names.size() != static_cast<std::size_t>(num_classes)) {
    throw ValidationError(fmt::format("manifest '{}': {} class_names for {} classes", name, class_names.size(),
                                      num_classes));
  }
  if (samples.empty()) throw ValidationError(fmt::format("manifest '{}' lists no samples", name));

  std::set<std::string> ids;
  std::vector<int> per_class(static_cast<std::size_t>(num_classes), 0);
  for (const auto& s : samples) {
    if (s.sample_id.empty()) throw ValidationError("manifest sample with empty sample_id");
    if (!ids.insert(s.sample_id).second) {
      throw ValidationError(fmt::format("duplicate sample_id '{}'", s.sample_id));
    }
    if (s.class_label < 0 || s.class_label >= num_classes) {
      throw ValidationError(
          fmt::format("sample '{}': class_label {} outside [0, {})", s.sample_id, s.class_label, num_classes));
    }
    if (s.subject_id < 0 || s.subject_id >= num_subjects) {
      throw ValidationError(
          fmt::format("sample '{}': subject_id {} outside [0, {})", s.sample_id, s.subject_id, num_subjects));
    }
    if (s.view_id < 0 || s.view_id >= num_views) {
      throw ValidationError(fmt::format("sample '{}': view_id {} outside [0, {})", s.sample_id, s.view_id, num_views));
    }
    ++per_class[static_cast<std::size_t>(s.class_label)];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (per_class[static_cast<std::size_t>(c)] == 0) {
      throw ValidationError(fmt::format("manifest '{}': class {} has no samples", name, c));
    }
  }
}

std::string DatasetManifest::class_name(int label) const {
  if (label >= 0 && static_cast<std::size_t>(label) < class_names.size()) {
    return class_names[static_cast<std::size_t>(label)];
  }
  return fmt::format("class_{}", label);
}

const ManifestEntry* DatasetManifest::find(const std::string& sample_id) const {
  for (const auto& s : samples) {
    if (s.sample_id == sample_id) return &s;
  }
  return nullptr;
}

namespace {

template <typename T>
T field(const json& obj, const char* key, const std::string& context) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(fmt::format("{}: missing field '{}'", context, key));
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(fmt::format("{}: field '{}' has the wrong type", context, key));
  }
}

template <typename T>
T optional_field(const json& obj, const char* key, T fallback, const std::string& context) {
  if (!obj.contains(key)) return fallback;
  return field<T>(obj, key, context);
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open manifest '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    // nlohmann reports "line L, column C" in its message.
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
  const std::string ctx = path.string();
  if (!doc.is_object()) throw ParseError(fmt::format("{}: top level must be an object", ctx));

  DatasetManifest m;
  m.name = field<std::string>(doc, "name", ctx);
  m.num_classes = field<int>(doc, "num_classes", ctx);
  m.num_subjects = field<int>(doc, "num_subjects", ctx);
  m.num_views = field<int>(doc, "num_views", ctx);
  m.num_joints = optional_field<int>(doc, "num_joints", 20, ctx);
  m.reference_joint = optional_field<int>(doc, "reference_joint", 0, ctx);
  m.class_names = optional_field<std::vector<std::string>>(doc, "class_names", {}, ctx);
  m.base_dir = path.parent_path();

  auto samples = doc.find("samples");
  if (samples == doc.end() || !samples->is_array()) {
    throw ParseError(fmt::format("{}: 'samples' must be an array", ctx));
  }
  for (std::size_t i = 0; i < samples->size(); ++i) {
    const auto& s = (*samples)[i];
    const std::string sctx = fmt::format("{}: samples[{}]", ctx, i);
    if (!s.is_object()) throw ParseError(sctx + ": must be an object");
    ManifestEntry e;
    e.sample_id = field<std::string>(s, "sample_id", sctx);
    e.class_label = field<int>(s, "class_label", sctx);
    e.subject_id = field<int>(s, "subject_id", sctx);
    e.view_id = optional_field<int>(s, "view_id", 0, sctx);
    e.depth_path = optional_field<std::string>(s, "depth_path", "", sctx);
    e.skeleton_path = optional_field<std::string>(s, "skeleton_path", "", sctx);
    m.samples.push_back(std::move(e));
  }
  m.validate();
  return m;
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
  json doc{{"name", m.name},
           {"num_classes", m.num_classes},
           {"num_subjects", m.num_subjects},
           {"num_views", m.num_views},
           {"num_joints", m.num_joints},
           {"reference_joint", m.reference_joint}};
  if (!m.class_names.empty()) doc["class_names"] = m.class_names;
  json samples = json::array();
  for (const auto& s : m.samples) {
    samples.push_back({{"sample_id", s.sample_id},
                       {"class_label", s.class_label},
                       {"subject_id", s.subject_id},
                       {"view_id", s.view_id},
                       {"depth_path", s.depth_path},
                       {"skeleton_path", s.skeleton_path}});
  }
  doc["samples"] = std::move(samples);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write manifest '{}'", path.string()));
  out << doc.dump(2) << '\n';
  if (!out) throw IoError(fmt::format("failed writing manifest '{}'", path.string()));
}

// ---------------------------------------------------------------- DEPB

namespace {

constexpr char kDepbMagic[4] = {'D', 'E', 'P', 'B'};

std::uint32_t decode_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void encode_u32(std::uint32_t v, char* p) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
}

}  // namespace

DepthSequence read_depth_sequence(std::istream& in, const std::string& source) {
  unsigned char header[20];
  if (!in.read(reinterpret_cast<char*>(header), sizeof header)) {
    throw ParseError(fmt::format("{}: truncated DEPB header", source));
  }
  if (!std::equal(std::begin(kDepbMagic), std::end(kDepbMagic), header,
                  [](char a, unsigned char b) { return static_cast<unsigned char>(a) == b; })) {
    throw ParseError(fmt::format("{}: bad magic, expected 'DEPB'", source));
  }
  const std::uint32_t t = decode_u32(header + 4);
  const std::uint32_t h = decode_u32(header + 8);
  const std::uint32_t w = decode_u32(header + 12);
  if (t == 0 || h == 0 || w == 0) {
    throw ParseError(fmt::format("{}: DEPB dimensions must be >= 1 (T={}, H={}, W={})", source, t, h, w));
  }
  const std::uint64_t count = static_cast<std::uint64_t>(t) * h * w;
  if (count > (std::uint64_t{1} << 32)) throw ParseError(fmt::format("{}: DEPB volume too large", source));

  std::vector<unsigned char> payload(static_cast<std::size_t>(count) * 2);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::uint64_t>(in.gcount()) != payload.size()) {
    throw ParseError(fmt::format("{}: truncated DEPB payload ({} of {} bytes for T*H*W = {})", source, in.gcount(),
                                 payload.size(), count));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError(fmt::format("{}: DEPB payload longer than T*H*W = {} values", source, count));
  }
  std::vector<std::uint16_t> values(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<std::uint16_t>(payload[2 * i] | (payload[2 * i + 1] << 8));
  }
  return DepthSequence(static_cast<int>(t), static_cast<int>(h), static_cast<int>(w), std::move(values));
}

void write_depth_sequence(std::ostream& out, const DepthSequence& depth) {
  char header[20];
  std::copy(std::begin(kDepbMagic), std::end(kDepbMagic), header);
  encode_u32(static_cast<std::uint32_t>(depth.num_frames()), header + 4);
  encode_u32(static_cast<std::uint32_t>(depth.height()), header + 8);
  encode_u32(static_cast<std::uint32_t>(depth.width()), header + 12);
  encode_u32(0, header + 16);
  out.write(header, sizeof header);
  std::vector<char> payload(depth.voxel_count() * 2);
  auto values = depth.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    payload[2 * i] = static_cast<char>(values[i] & 0xffu);
    payload[2 * i + 1] = static_cast<char>(values[i] >> 8);
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

DepthSequence load_depth_sequence(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open depth file '{}'", path.string()));
  return read_depth_sequence(in, path.string());
}

void save_depth_sequence(const DepthSequence& depth, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write depth file '{}'", path.string()));
  write_depth_sequence(out, depth);
  if (!out) throw IoError(fmt::format("failed writing depth file '{}'", path.string()));
}

// ---------------------------------------------------------------- skeleton

namespace {

bool parse_real(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

void append_real(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

SkeletonSequence read_skeleton(std::istream& in, int num_joints, int reference_joint, const std::string& source) {
  if (num_joints < 1) throw ValidationError(fmt::format("{}: num_joints must be >= 1", source));
  std::vector<Joint> joints;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string_view> tokens;
    std::string_view rest(line);
    while (!rest.empty()) {
      auto start = rest.find_first_not_of(" \t\r");
      if (start == std::string_view::npos) break;
      rest.remove_prefix(start);
      auto end = rest.find_first_of(" \t\r");
      tokens.push_back(rest.substr(0, end));
      rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
    }
    if (tokens.empty()) continue;
    if (tokens.size() != 4) {
      throw ParseError(source, line_no, fmt::format("expected 4 fields 'x y z confidence', found {}", tokens.size()));
    }
    double v[4];
    for (int k = 0; k < 4; ++k) {
      if (!parse_real(tokens[static_cast<std::size_t>(k)], v[k]) || !std::isfinite(v[k])) {
        throw ParseError(source, line_no, fmt::format("field {} is not a finite real: '{}'", k + 1,
                                                      tokens[static_cast<std::size_t>(k)]));
      }
    }
    joints.push_back({v[0], v[1], v[2], std::clamp(v[3], 0.0, 1.0)});
  }
  if (joints.empty()) throw ParseError(fmt::format("{}: skeleton file has no joint lines", source));
  if (joints.size() % static_cast<std::size_t>(num_joints) != 0) {
    throw ParseError(fmt::format("{}: {} joint lines is not a multiple of {} joints per frame", source,
                                 joints.size(), num_joints));
  }
  const int frames = static_cast<int>(joints.size() / static_cast<std::size_t>(num_joints));
  return SkeletonSequence(frames, num_joints, std::move(joints), reference_joint);
}

void write_skeleton(std::ostream& out, const SkeletonSequence& skeleton) {
  std::string text;
  for (const auto& j : skeleton.joints()) {
    append_real(text, j.x);
    text.push_back(' ');
    append_real(text, j.y);
    text.push_back(' ');
    append_real(text, j.z);
    text.push_back(' ');
    append_real(text, j.confidence);
    text.push_back('\n');
  }
  out << text;
}

SkeletonSequence load_skeleton(const fs::path& path, int num_joints, int reference_joint) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open skeleton file '{}'", path.string()));
  return read_skeleton(in, num_joints, reference_joint, path.string());
}

void save_skeleton(const SkeletonSequence& skeleton, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write skeleton file '{}'", path.string()));
  write_skeleton(out, skeleton);
  if (!out) throw IoError(fmt::format("failed writing skeleton file '{}'", path.string()));
}

// ---------------------------------------------------------------- samples

ActionSample load_sample(const DatasetManifest& manifest, const ManifestEntry& entry, ComponentSet components) {
  ActionSample sample;
  sample.sample_id = entry.sample_id;
  sample.class_label = entry.class_label;
  sample.subject_id = entry.subject_id;
  sample.view_id = entry.view_id;
  if (components.needs_depth() && !entry.depth_path.empty()) {
    sample.depth = load_depth_sequence(manifest.base_dir / entry.depth_path);
  }
  if (components.needs_skeleton() && !entry.skeleton_path.empty()) {
    sample.skeleton =
        load_skeleton(manifest.base_dir / entry.skeleton_path, manifest.num_joints, manifest.reference_joint);
  }
  check_sample_consistency(sample);
  return sample;
}

std::vector<ActionSample> load_samples(const DatasetManifest& manifest, ComponentSet components, int jobs) {
  std::vector<ActionSample> out(manifest.samples.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) { out[i] = load_sample(manifest, manifest.samples[i], components); });
  return out;
}

DatasetManifest write_dataset(const SyntheticDataset& dataset, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "depth", ec);
  if (!ec) fs::create_directories(dir / "skeleton", ec);
  if (ec) throw IoError(fmt::format("cannot create dataset directory '{}': {}", dir.string(), ec.message()));

  DatasetManifest manifest = dataset.manifest;
  manifest.base_dir = dir;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& sample = dataset.samples[i];
    auto& entry = manifest.samples[i];
    if (sample.depth) {
      entry.depth_path = "depth/" + sample.sample_id + ".depb";
      save_depth_sequence(*sample.depth, dir / entry.depth_path);
    }
    if (sample.skeleton) {
      entry.skeleton_path = "skeleton/" + sample.sample_id + ".txt";
      save_skeleton(*sample.skeleton, dir / entry.skeleton_path);
    }
  }
  save_manifest(manifest, dir / "manifest.json");
  return manifest;
}

}  // namespace hdg
