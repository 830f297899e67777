#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fw/deltanet.hpp"
#include "fw/scenegen.hpp"
#include "fw/segnet.hpp"

namespace fw {

// ---- samples -------------------------------------------------------------
// "FWDS" sample records: magic, u32 C, H, W (little-endian), then C*H*W bytes
// holding round(value * 255) in CHW order.
void write_sample(std::ostream& out, const Tensor<float>& t);
Tensor<float> read_sample(std::istream& in);
std::size_t sample_record_size(const Shape& shape);

// ---- dataset layout ------------------------------------------------------
// <dir>/manifest.json
// <dir>/episodes/bin_NNNNNN.fwds: record 0 is the empty bin, then for every
// event its after-image and cumulative mask. The manifest lists each event's
// byte offsets; a before-image is record 0 or the previous after-image.
enum class Split { Train, Val, Test };
const char* to_string(Split s);
Split parse_split(std::string_view name);

struct EventRecord {
  int seq = 0;
  int class_id = 0;
  std::uint64_t before_offset = 0;
  std::uint64_t after_offset = 0;
  std::uint64_t mask_offset = 0;
};

struct EpisodeRecord {
  int bin_id = 0;
  std::string file;  // relative to the dataset directory
  Split split = Split::Train;
  std::vector<EventRecord> events;
};

struct DatasetManifest {
  int version = 1;
  std::uint64_t seed = 0;
  int class_count = 0;
  int image_size = 0;
  int deposits_per_episode = 0;
  double train_fraction = 0.7;
  double val_fraction = 0.2;
  SceneOptions scene;
  std::vector<EpisodeRecord> episodes;

  std::size_t pair_count() const;
  std::size_t pair_count(Split split) const;
};

inline constexpr int kManifestVersion = 1;

// Ranks episodes by a seeded hash of their bin id and cuts the ranking at
// floor(train * n) and floor((train + val) * n). Every split with a nonzero
// fraction gets at least one episode when n allows it.
std::vector<Split> assign_splits(std::uint64_t seed, std::span<const int> bin_ids,
                                 double train_fraction, double val_fraction);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(std::string_view text);
DatasetManifest load_manifest(const std::filesystem::path& dir);

struct PairDataset {
  DatasetManifest manifest;
  DataSplit<PairSample> pairs;
};
struct MaskDataset {
  DatasetManifest manifest;
  DataSplit<MaskSample> masks;  // image = after-image, mask = cumulative mask
};

PairDataset load_pairs(const std::filesystem::path& dir);
MaskDataset load_masks(const std::filesystem::path& dir);

// ---- metrics -------------------------------------------------------------
using ConfusionMatrix = std::vector<std::vector<std::int64_t>>;

// Entry (i, j) counts samples of true class i predicted as j.
ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels,
                                 int classes);
double accuracy_from_confusion(const ConfusionMatrix& m);

struct MetricsReport {
  std::string task;  // "segmentation" or "classification"
  std::vector<EpochMetrics> epochs;
  std::string evaluated_split;
  std::optional<double> test_accuracy;
  std::optional<double> test_loss;
  std::size_t evaluated_samples = 0;
  ConfusionMatrix confusion;  // classification only
};

std::string metrics_to_json(const MetricsReport& report);
// Atomic write via a temporary sibling.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

// ---- checkpoints ---------------------------------------------------------
// Checkpoints are FWWT weight files. Loading checks the stored tensors
// against the layout of `config` and names the first offending tensor.
void save_checkpoint(const std::filesystem::path& path, const DeltaNetModel<float>& model);
void save_checkpoint(const std::filesystem::path& path, const UNet<float>& model);
DeltaNetModel<float> load_classifier_checkpoint(const std::filesystem::path& path,
                                                const DeltaNetConfig& config);
UNet<float> load_unet_checkpoint(const std::filesystem::path& path, const UNetConfig& config);

// ---- presets -------------------------------------------------------------
struct Preset {
  std::string name;
  UNetConfig unet;
  DeltaNetConfig classifier;
  DatasetSpec data;
  TrainOptions unet_training;
  TrainOptions classifier_training;
};

// "toy" or "paper-scale".
Preset resolve_preset(std::string_view name);

}  // namespace fw
