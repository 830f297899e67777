#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "fw/tensor.hpp"

namespace fw {

enum class Texture { Speckle, Stripe, BlobCluster, Gradient };
enum class ShapeFamily { Ellipse, Polygon, Scatter };

const char* to_string(Texture t);
const char* to_string(ShapeFamily s);

// Visual identity of one synthetic food class.
struct ClassStyle {
  int class_id = 0;
  std::array<float, 3> base_color{};  // RGB in [0,1]
  Texture texture = Texture::Speckle;
  double texture_param = 0.0;  // stripe period, speckle amplitude, spot count or gradient span
  ShapeFamily shape = ShapeFamily::Ellipse;
};

inline constexpr int kMaxClasses = 20;

// The fixed catalogue of kMaxClasses styles. The first few are chosen to be
// mutually far apart in hue so small class counts stay separable.
const std::vector<ClassStyle>& class_styles();

struct BinAppearance {
  bool square = false;
  float center_x = 0, center_y = 0;
  float radius = 0;  // interior half-width in pixels
  float rim_width = 0;
  std::array<float, 3> floor_color{};
  std::array<float, 3> rim_color{};
  std::array<float, 3> interior_color{};
  bool reflection = false;  // mirror band along the inner wall
  bool bag = false;         // wrinkled plastic liner
  std::array<float, 3> bag_color{};
  float wrinkle_angle = 0, wrinkle_period = 0;
  std::uint64_t noise_seed = 0;
};

struct DepositEvent {
  int bin_id = 0;
  int seq = 0;
  int class_id = 0;
  Tensor<float> before;           // [3,S,S]
  Tensor<float> after;            // [3,S,S]
  Tensor<float> cumulative_mask;  // [1,S,S], every food pixel deposited so far
};

struct Episode {
  int bin_id = 0;
  BinAppearance appearance;
  std::vector<DepositEvent> events;
};

struct SceneOptions {
  double reflection_probability = 0.3;
  double bag_probability = 0.3;
};

// Simulates one bin receiving `num_deposits` items. Each event draws its
// randomness from hash(master_seed, bin_id, seq); events[k].before is the
// same image as events[k-1].after. Pixel values are multiples of 1/255.
Episode gen_episode(std::uint64_t master_seed, int bin_id, int num_deposits, int class_count,
                    int image_size, const SceneOptions& options = {});

// Fraction of pixel positions where any channel differs.
double changed_pixel_fraction(const Tensor<float>& a, const Tensor<float>& b);

// Pixels (as a [1,S,S] mask) inside the region items may occupy.
Tensor<float> item_region_mask(const BinAppearance& appearance, int image_size);

struct DatasetSpec {
  std::uint64_t seed = 0;
  int num_episodes = 10;
  int deposits_per_episode = 5;
  int class_count = 5;
  int image_size = 64;
  SceneOptions scene;
  // Whole episodes go to one split; test takes the remainder.
  double train_fraction = 0.7;
  double val_fraction = 0.2;
};

struct DatasetManifest;

// Generates episodes in parallel (by episode index) and writes them in the
// harness dataset layout; the manifest is written last.
DatasetManifest gen_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir);

}  // namespace fw
