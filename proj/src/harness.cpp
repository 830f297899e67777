#include "fw/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "fw/binary_io.hpp"
#include "fw/error.hpp"
#include "fw/parallel.hpp"
#include "fw/rng.hpp"
#include "fw/weights_io.hpp"

namespace fw {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kSampleMagic[5] = "FWDS";

std::string episode_file(int bin_id) {
  char name[32];
  std::snprintf(name, sizeof(name), "episodes/bin_%06d.fwds", bin_id);
  return name;
}

json to_json(const ClassStyle& s) {
  return {{"class_id", s.class_id},
          {"base_color", s.base_color},
          {"texture", to_string(s.texture)},
          {"texture_param", s.texture_param},
          {"shape", to_string(s.shape)}};
}

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("manifest is missing field '") + key + "'");
  return j.at(key).get<T>();
}

Tensor<float> sample_at(const std::string& bytes, std::uint64_t offset, const std::string& file) {
  if (offset >= bytes.size()) {
    throw FormatError("offset " + std::to_string(offset) + " past end of " + file);
  }
  std::istringstream in(bytes.substr(offset));
  try {
    return read_sample(in);
  } catch (const FormatError& e) {
    throw FormatError(file + " @" + std::to_string(offset) + ": " + e.what());
  }
}

std::string read_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename Sample>
std::vector<Sample>& split_of(DataSplit<Sample>& d, Split s) {
  switch (s) {
    case Split::Train: return d.train;
    case Split::Val: return d.val;
    case Split::Test: return d.test;
  }
  return d.train;
}

json epoch_json(const EpochMetrics& m) {
  return {{"epoch", m.epoch},
          {"train_loss", m.train_loss},
          {"train_accuracy", m.train_accuracy},
          {"val_loss", m.val_loss},
          {"val_accuracy", m.val_accuracy}};
}

}  // namespace

// ---- samples ---------------------------------------------------------------

std::size_t sample_record_size(const Shape& shape) { return 16 + shape.numel(); }

void write_sample(std::ostream& out, const Tensor<float>& t) {
  if (t.rank() != 3) throw InvalidInput("samples are [C,H,W], got " + t.shape().str());
  out.write(kSampleMagic, 4);
  for (int axis = 0; axis < 3; ++axis) io::put_le(out, static_cast<std::uint32_t>(t.dim(axis)));
  std::string bytes(t.size(), '\0');
  for (std::size_t i = 0; i < t.size(); ++i) {
    bytes[i] = static_cast<char>(std::lround(std::clamp(t[i], 0.0f, 1.0f) * 255.0f));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed to write sample");
}

Tensor<float> read_sample(std::istream& in) {
  io::expect_magic(in, kSampleMagic);
  int dims[3];
  for (int& d : dims) {
    const auto v = io::get_le<std::uint32_t>(in, "sample header");
    if (v == 0 || v > 1u << 16) throw FormatError("implausible sample extent " + std::to_string(v));
    d = static_cast<int>(v);
  }
  Tensor<float> t(Shape{dims[0], dims[1], dims[2]});
  std::string bytes(t.size(), '\0');
  if (!in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
    throw FormatError("truncated sample data");
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<float>(static_cast<unsigned char>(bytes[i])) / 255.0f;
  }
  return t;
}

// ---- manifest --------------------------------------------------------------

const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw InvalidInput("unknown split '" + std::string(name) + "'");
}

std::size_t DatasetManifest::pair_count() const {
  std::size_t n = 0;
  for (const auto& e : episodes) n += e.events.size();
  return n;
}

std::size_t DatasetManifest::pair_count(Split split) const {
  std::size_t n = 0;
  for (const auto& e : episodes) n += e.split == split ? e.events.size() : 0;
  return n;
}

std::vector<Split> assign_splits(std::uint64_t seed, std::span<const int> bin_ids,
                                 double train_fraction, double val_fraction) {
  if (train_fraction < 0 || val_fraction < 0 || train_fraction + val_fraction > 1.0 + 1e-12) {
    throw InvalidConfig("split fractions must be non-negative and sum to at most 1");
  }
  const std::size_t n = bin_ids.size();
  std::vector<std::size_t> rank(n);
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  std::vector<std::uint64_t> key(n);
  for (std::size_t i = 0; i < n; ++i) {
    key[i] = mix_seed({seed, 0x5b11, static_cast<std::uint64_t>(bin_ids[i])});
  }
  std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    return key[a] != key[b] ? key[a] < key[b] : bin_ids[a] < bin_ids[b];
  });

  const double test_fraction = std::max(0.0, 1.0 - train_fraction - val_fraction);
  std::array<std::size_t, 3> count{
      static_cast<std::size_t>(std::floor(train_fraction * n + 1e-9)),
      static_cast<std::size_t>(std::floor(val_fraction * n + 1e-9)), 0};
  count[1] = std::min(count[1], n - count[0]);
  count[2] = n - count[0] - count[1];
  if (test_fraction <= 1e-12 && count[2] > 0) {
    count[0] += count[2];
    count[2] = 0;
  }
  // Take one episode from the largest split for each empty split that wants some.
  const std::array<double, 3> wanted{train_fraction, val_fraction, test_fraction};
  for (int s = 0; s < 3; ++s) {
    if (count[s] > 0 || wanted[s] <= 1e-12) continue;
    const auto donor = static_cast<std::size_t>(
        std::max_element(count.begin(), count.end()) - count.begin());
    // Train may take the last episode; other splits never empty a donor.
    if (count[donor] > 1 || (s == 0 && count[donor] == 1)) {
      --count[donor];
      ++count[s];
    }
  }

  std::vector<Split> out(n);
  std::size_t pos = 0;
  for (int s = 0; s < 3; ++s) {
    for (std::size_t k = 0; k < count[s]; ++k) out[rank[pos++]] = static_cast<Split>(s);
  }
  return out;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json styles = json::array();
  for (int k = 0; k < m.class_count && k < kMaxClasses; ++k) {
    styles.push_back(to_json(class_styles()[static_cast<std::size_t>(k)]));
  }
  json episodes = json::array();
  for (const auto& e : m.episodes) {
    json events = json::array();
    for (const auto& ev : e.events) {
      events.push_back({{"seq", ev.seq},
                        {"class_id", ev.class_id},
                        {"before_offset", ev.before_offset},
                        {"after_offset", ev.after_offset},
                        {"mask_offset", ev.mask_offset}});
    }
    episodes.push_back(
        {{"bin_id", e.bin_id}, {"file", e.file}, {"split", to_string(e.split)}, {"events", events}});
  }
  const json j = {
      {"version", m.version},
      {"seed", m.seed},
      {"class_count", m.class_count},
      {"image_size", m.image_size},
      {"deposits_per_episode", m.deposits_per_episode},
      {"split_fractions", {{"train", m.train_fraction}, {"val", m.val_fraction}}},
      {"scene",
       {{"reflection_probability", m.scene.reflection_probability},
        {"bag_probability", m.scene.bag_probability}}},
      {"counts",
       {{"episodes", m.episodes.size()},
        {"pairs", m.pair_count()},
        {"mask_samples", m.pair_count()},
        {"train_pairs", m.pair_count(Split::Train)},
        {"val_pairs", m.pair_count(Split::Val)},
        {"test_pairs", m.pair_count(Split::Test)}}},
      {"class_styles", styles},
      {"episodes", episodes}};
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  try {
    DatasetManifest m;
    m.version = required<int>(j, "version");
    if (m.version != kManifestVersion) {
      throw FormatError("unsupported manifest version " + std::to_string(m.version));
    }
    m.seed = required<std::uint64_t>(j, "seed");
    m.class_count = required<int>(j, "class_count");
    m.image_size = required<int>(j, "image_size");
    m.deposits_per_episode = required<int>(j, "deposits_per_episode");
    const json fractions = required<json>(j, "split_fractions");
    m.train_fraction = required<double>(fractions, "train");
    m.val_fraction = required<double>(fractions, "val");
    const json scene = required<json>(j, "scene");
    m.scene.reflection_probability = required<double>(scene, "reflection_probability");
    m.scene.bag_probability = required<double>(scene, "bag_probability");
    for (const json& e : required<json>(j, "episodes")) {
      EpisodeRecord rec;
      rec.bin_id = required<int>(e, "bin_id");
      rec.file = required<std::string>(e, "file");
      rec.split = parse_split(required<std::string>(e, "split"));
      for (const json& ev : required<json>(e, "events")) {
        rec.events.push_back({required<int>(ev, "seq"), required<int>(ev, "class_id"),
                              required<std::uint64_t>(ev, "before_offset"),
                              required<std::uint64_t>(ev, "after_offset"),
                              required<std::uint64_t>(ev, "mask_offset")});
      }
      m.episodes.push_back(std::move(rec));
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

DatasetManifest load_manifest(const fs::path& dir) {
  return manifest_from_json(read_text_file(dir / "manifest.json"));
}

// ---- generation and loading ------------------------------------------------

DatasetManifest gen_dataset(const DatasetSpec& spec, const fs::path& out_dir) {
  if (spec.num_episodes < 1) throw InvalidConfig("num_episodes must be >= 1");
  std::vector<int> bin_ids(static_cast<std::size_t>(spec.num_episodes));
  std::iota(bin_ids.begin(), bin_ids.end(), 0);
  const auto splits = assign_splits(spec.seed, bin_ids, spec.train_fraction, spec.val_fraction);

  std::error_code ec;
  fs::create_directories(out_dir / "episodes", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "episodes").string() + ": " + ec.message());
  fs::remove(out_dir / "manifest.json", ec);

  const Shape image_shape{3, spec.image_size, spec.image_size};
  const Shape mask_shape{1, spec.image_size, spec.image_size};
  std::vector<EpisodeRecord> records(bin_ids.size());
  parallel_for(bin_ids.size(), [&](std::size_t i) {
    const Episode ep = gen_episode(spec.seed, bin_ids[i], spec.deposits_per_episode,
                                   spec.class_count, spec.image_size, spec.scene);
    EpisodeRecord& rec = records[i];
    rec.bin_id = ep.bin_id;
    rec.file = episode_file(ep.bin_id);
    rec.split = splits[i];

    std::ostringstream buf;
    write_sample(buf, ep.events.front().before);
    std::uint64_t offset = sample_record_size(image_shape);
    std::uint64_t before = 0;
    for (const DepositEvent& ev : ep.events) {
      write_sample(buf, ev.after);
      write_sample(buf, ev.cumulative_mask);
      rec.events.push_back({ev.seq, ev.class_id, before, offset, offset + sample_record_size(image_shape)});
      before = offset;
      offset += sample_record_size(image_shape) + sample_record_size(mask_shape);
    }
    const fs::path path = out_dir / rec.file;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    const std::string bytes = buf.str();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("cannot write " + path.string());
  });

  DatasetManifest m;
  m.version = kManifestVersion;
  m.seed = spec.seed;
  m.class_count = spec.class_count;
  m.image_size = spec.image_size;
  m.deposits_per_episode = spec.deposits_per_episode;
  m.train_fraction = spec.train_fraction;
  m.val_fraction = spec.val_fraction;
  m.scene = spec.scene;
  m.episodes = std::move(records);
  write_text_file(out_dir / "manifest.json", manifest_to_json(m));
  return m;
}

namespace {

// Calls fn(episode, event, before, after, mask) for every stored event.
template <typename Fn>
DatasetManifest for_each_event(const fs::path& dir, Fn&& fn) {
  DatasetManifest m = load_manifest(dir);
  for (const EpisodeRecord& e : m.episodes) {
    const std::string bytes = read_binary(dir / e.file);
    for (const EventRecord& ev : e.events) {
      if (ev.class_id < 0 || ev.class_id >= m.class_count) {
        throw FormatError("class id " + std::to_string(ev.class_id) + " out of range in " + e.file);
      }
      fn(e, ev, bytes);
    }
  }
  return m;
}

}  // namespace

PairDataset load_pairs(const fs::path& dir) {
  PairDataset out;
  out.manifest = for_each_event(dir, [&](const EpisodeRecord& e, const EventRecord& ev,
                                         const std::string& bytes) {
    split_of(out.pairs, e.split)
        .push_back({sample_at(bytes, ev.before_offset, e.file),
                    sample_at(bytes, ev.after_offset, e.file), ev.class_id, e.bin_id, ev.seq});
  });
  return out;
}

MaskDataset load_masks(const fs::path& dir) {
  MaskDataset out;
  out.manifest = for_each_event(dir, [&](const EpisodeRecord& e, const EventRecord& ev,
                                         const std::string& bytes) {
    split_of(out.masks, e.split)
        .push_back({sample_at(bytes, ev.after_offset, e.file), sample_at(bytes, ev.mask_offset, e.file)});
  });
  return out;
}

// ---- metrics ---------------------------------------------------------------

ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels,
                                 int classes) {
  if (classes < 1) throw InvalidInput("confusion matrix needs at least one class");
  if (predictions.size() != labels.size()) {
    throw InvalidInput("predictions and labels differ in length: " +
                       std::to_string(predictions.size()) + " vs " + std::to_string(labels.size()));
  }
  ConfusionMatrix m(static_cast<std::size_t>(classes),
                    std::vector<std::int64_t>(static_cast<std::size_t>(classes), 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i], p = predictions[i];
    if (t < 0 || t >= classes || p < 0 || p >= classes) {
      throw InvalidInput("class index out of range [0, " + std::to_string(classes) + ") at sample " +
                         std::to_string(i));
    }
    ++m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return m;
}

double accuracy_from_confusion(const ConfusionMatrix& m) {
  std::int64_t total = 0, diagonal = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m[i].size(); ++j) total += m[i][j];
    diagonal += m[i][i];
  }
  return total == 0 ? 0.0 : static_cast<double>(diagonal) / static_cast<double>(total);
}

std::string metrics_to_json(const MetricsReport& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs) epochs.push_back(epoch_json(e));
  json j = {{"task", r.task},
            {"epochs", epochs},
            {"evaluated_split", r.evaluated_split},
            {"evaluated_samples", r.evaluated_samples}};
  j["test_accuracy"] = r.test_accuracy ? json(*r.test_accuracy) : json(nullptr);
  j["test_loss"] = r.test_loss ? json(*r.test_loss) : json(nullptr);
  if (!r.confusion.empty()) j["confusion_matrix"] = r.confusion;
  return j.dump(2) + "\n";
}

void write_text_file(const fs::path& path, std::string_view text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("cannot write " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path.string() + ": " + ec.message());
}

std::string read_text_file(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("no such file: " + path.string());
  return read_binary(path);
}

// ---- checkpoints -----------------------------------------------------------

void save_checkpoint(const fs::path& path, const DeltaNetModel<float>& model) {
  save_weights(path, model.params);
}

void save_checkpoint(const fs::path& path, const UNet<float>& model) {
  save_weights(path, model.params);
}

DeltaNetModel<float> load_classifier_checkpoint(const fs::path& path, const DeltaNetConfig& config) {
  ParamSet<float> params = load_weights(path);
  try {
    check_deltanet_params(config, params);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return {config, std::move(params)};
}

UNet<float> load_unet_checkpoint(const fs::path& path, const UNetConfig& config) {
  ParamSet<float> params = load_weights(path);
  try {
    check_layout(params, build_unet(config, 0).params);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return {config, std::move(params)};
}

// ---- presets ---------------------------------------------------------------

Preset resolve_preset(std::string_view name) {
  Preset p;
  p.name = std::string(name);
  if (name == "toy") {
    p.unet = UNetConfig::toy();
    p.classifier = DeltaNetConfig::toy();
    p.data.num_episodes = 200;
    p.data.deposits_per_episode = 5;
    p.data.class_count = 5;
    p.data.image_size = 64;
  } else if (name == "paper-scale") {
    p.unet = UNetConfig::paper_scale();
    p.classifier = DeltaNetConfig::paper_scale();
    p.data.num_episodes = 200;
    p.data.deposits_per_episode = 5;
    p.data.class_count = 20;
    p.data.image_size = 224;
  } else {
    throw InvalidConfig("unknown preset '" + std::string(name) + "' (expected toy or paper-scale)");
  }
  p.unet_training.epochs = 20;
  p.classifier_training.epochs = 30;
  return p;
}

}  // namespace fw
