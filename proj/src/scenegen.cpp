#include "fw/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fw/error.hpp"
#include "fw/rng.hpp"

namespace fw {
namespace {

using Rgb = std::array<double, 3>;

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Items stay within this fraction of the interior half-width; the mirror band
// starts just outside it.
constexpr double kItemRegion = 0.80;
constexpr double kBandStart = 0.84;
constexpr double kReflectionAlpha = 0.30;

std::array<float, 3> hsv(double h, double s, double v) {
  const double i = std::floor(h * 6.0);
  const double f = h * 6.0 - i;
  const double p = v * (1 - s), q = v * (1 - f * s), t = v * (1 - (1 - f) * s);
  double r = v, g = t, b = p;
  switch (static_cast<int>(i) % 6) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
  return {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b)};
}

double frac(double x) { return x - std::floor(x); }

// Value noise in [-1, 1] keyed by integer pixel position.
double pixel_noise(std::uint64_t seed, int x, int y) {
  const std::uint64_t h = mix_seed({seed, static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(y)});
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

struct Item {
  const ClassStyle* style = nullptr;
  double cx = 0, cy = 0, r = 0;
  double aspect = 1, theta = 0;
  std::vector<double> poly_angles, poly_radii;
  std::vector<std::array<double, 3>> disks;  // local x, y, radius
  std::vector<std::array<double, 3>> spots;
  Rgb color{};
  double phase = 0;
  std::uint64_t noise_seed = 0;

  void to_local(double px, double py, double& u, double& v) const {
    const double dx = px - cx, dy = py - cy;
    const double c = std::cos(theta), s = std::sin(theta);
    u = dx * c + dy * s;
    v = -dx * s + dy * c;
  }

  bool covers(double px, double py) const {
    const double dx = px - cx, dy = py - cy;
    if (dx * dx + dy * dy > r * r) return false;
    double u, v;
    to_local(px, py, u, v);
    switch (style->shape) {
      case ShapeFamily::Ellipse: {
        const double a = u / r, b = v / (r * aspect);
        return a * a + b * b <= 1.0;
      }
      case ShapeFamily::Polygon: {
        const double d = std::hypot(u, v);
        double phi = std::atan2(v, u);
        if (phi < 0) phi += kTwoPi;
        const std::size_t k = poly_angles.size();
        std::size_t hi = 0;
        while (hi < k && poly_angles[hi] < phi) ++hi;
        const std::size_t lo = (hi + k - 1) % k;
        hi %= k;
        double a0 = poly_angles[lo], a1 = poly_angles[hi];
        double span = a1 - a0;
        if (span <= 0) span += kTwoPi;
        double t = phi - a0;
        if (t < 0) t += kTwoPi;
        const double boundary = poly_radii[lo] + (poly_radii[hi] - poly_radii[lo]) * (t / span);
        return d <= boundary;
      }
      case ShapeFamily::Scatter:
        for (const auto& disk : disks) {
          const double a = u - disk[0], b = v - disk[1];
          if (a * a + b * b <= disk[2] * disk[2]) return true;
        }
        return false;
    }
    return false;
  }

  Rgb shade(double px, double py, int ix, int iy) const {
    double u, v;
    to_local(px, py, u, v);
    double factor = 1.0, noise = 0.0;
    switch (style->texture) {
      case Texture::Speckle:
        noise = style->texture_param * pixel_noise(noise_seed, ix, iy);
        break;
      case Texture::Stripe:
        factor = 0.72 + 0.28 * std::sin(kTwoPi * u / style->texture_param + phase);
        break;
      case Texture::BlobCluster:
        for (const auto& spot : spots) {
          const double a = u - spot[0], b = v - spot[1];
          if (a * a + b * b <= spot[2] * spot[2]) {
            factor = 0.5;
            break;
          }
        }
        noise = 0.03 * pixel_noise(noise_seed, ix, iy);
        break;
      case Texture::Gradient: {
        const double t = std::clamp((u / r + 1.0) / 2.0, 0.0, 1.0);
        factor = 1.0 - style->texture_param / 2.0 + style->texture_param * t;
        break;
      }
    }
    Rgb out;
    for (int c = 0; c < 3; ++c) out[c] = std::clamp(color[c] * factor + noise, 0.0, 1.0);
    return out;
  }
};

BinAppearance draw_appearance(std::uint64_t seed, int size, const SceneOptions& options) {
  Rng rng(seed);
  BinAppearance a;
  a.square = uniform01(rng) < 0.5;
  a.center_x = static_cast<float>(size / 2.0 + uniform(rng, -0.03, 0.03) * size);
  a.center_y = static_cast<float>(size / 2.0 + uniform(rng, -0.03, 0.03) * size);
  a.radius = static_cast<float>(uniform(rng, 0.40, 0.44) * size);
  a.rim_width = static_cast<float>(0.04 * size);
  a.floor_color = hsv(uniform(rng, 0.05, 0.15), uniform(rng, 0.1, 0.35), uniform(rng, 0.45, 0.75));
  a.rim_color = hsv(uniform01(rng), uniform(rng, 0.0, 0.6), uniform(rng, 0.5, 0.9));
  a.interior_color = hsv(uniform01(rng), uniform(rng, 0.0, 0.3), uniform(rng, 0.12, 0.35));
  a.reflection = uniform01(rng) < options.reflection_probability;
  a.bag = uniform01(rng) < options.bag_probability;
  a.bag_color = hsv(uniform01(rng), uniform(rng, 0.2, 0.6), uniform(rng, 0.08, 0.3));
  a.wrinkle_angle = static_cast<float>(uniform(rng, 0.0, std::numbers::pi));
  a.wrinkle_period = static_cast<float>(uniform(rng, 0.08, 0.15) * size);
  a.noise_seed = rng();
  return a;
}

double region_radius(const BinAppearance& a) { return kItemRegion * a.radius; }

Item make_item(const ClassStyle& style, const BinAppearance& a, int size, Rng& rng) {
  Item it;
  it.style = &style;
  it.r = uniform(rng, 0.10, 0.17) * size;
  const double reach = std::max(0.0, region_radius(a) - it.r);
  const double rho = reach * std::sqrt(uniform01(rng));
  const double ang = uniform(rng, 0.0, kTwoPi);
  it.cx = a.center_x + rho * std::cos(ang);
  it.cy = a.center_y + rho * std::sin(ang);
  it.theta = uniform(rng, 0.0, kTwoPi);
  it.aspect = uniform(rng, 0.55, 1.0);
  if (style.shape == ShapeFamily::Polygon) {
    const int k = uniform_int(rng, 5, 8);
    for (int i = 0; i < k; ++i) {
      it.poly_angles.push_back(kTwoPi * (i + uniform(rng, 0.1, 0.9)) / k);
      it.poly_radii.push_back(it.r * uniform(rng, 0.65, 1.0));
    }
  } else if (style.shape == ShapeFamily::Scatter) {
    const int k = uniform_int(rng, 7, 12);
    for (int i = 0; i < k; ++i) {
      const double pr = 0.65 * it.r * std::sqrt(uniform01(rng));
      const double pa = uniform(rng, 0.0, kTwoPi);
      it.disks.push_back({pr * std::cos(pa), pr * std::sin(pa), it.r * uniform(rng, 0.22, 0.35)});
    }
  }
  if (style.texture == Texture::BlobCluster) {
    const int k = static_cast<int>(style.texture_param);
    for (int i = 0; i < k; ++i) {
      const double pr = 0.6 * it.r * std::sqrt(uniform01(rng));
      const double pa = uniform(rng, 0.0, kTwoPi);
      it.spots.push_back({pr * std::cos(pa), pr * std::sin(pa), it.r * uniform(rng, 0.15, 0.25)});
    }
  }
  for (int c = 0; c < 3; ++c) {
    it.color[c] = std::clamp(style.base_color[c] + uniform(rng, -0.06, 0.06), 0.05, 1.0);
  }
  it.phase = uniform(rng, 0.0, kTwoPi);
  it.noise_seed = rng();
  return it;
}

// Settling of the existing surface when something new lands on it.
void perturb(Item& it, const BinAppearance& a, Rng& rng) {
  it.cx += uniform(rng, -0.2, 0.2);
  it.cy += uniform(rng, -0.2, 0.2);
  it.theta += uniform(rng, -0.02, 0.02);
  for (double& c : it.color) c = std::clamp(c + uniform(rng, -0.015, 0.015), 0.05, 1.0);
  const double dx = it.cx - a.center_x, dy = it.cy - a.center_y;
  const double reach = std::max(0.0, region_radius(a) - it.r);
  const double d = std::hypot(dx, dy);
  if (d > reach && d > 0) {
    it.cx = a.center_x + dx * reach / d;
    it.cy = a.center_y + dy * reach / d;
  }
}

const Item* top_item(const std::vector<Item>& items, double px, double py) {
  for (auto it = items.rbegin(); it != items.rend(); ++it) {
    if (it->covers(px, py)) return &*it;
  }
  return nullptr;
}

float quantize(double v) {
  return static_cast<float>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)) / 255.0f;
}

// Normalized wall distance: radial for round bins, Chebyshev for square ones.
double wall_distance(const BinAppearance& a, double dx, double dy) {
  return a.square ? std::max(std::abs(dx), std::abs(dy)) : std::hypot(dx, dy);
}

Rgb interior_at(const BinAppearance& a, double px, double py, int ix, int iy, double dist) {
  Rgb out;
  if (a.bag) {
    const double w = std::sin(kTwoPi *
                              (px * std::cos(a.wrinkle_angle) + py * std::sin(a.wrinkle_angle)) /
                              a.wrinkle_period);
    const double f = 0.8 + 0.2 * w + 0.04 * pixel_noise(a.noise_seed, ix, iy);
    for (int c = 0; c < 3; ++c) out[c] = a.bag_color[c] * f;
  } else {
    const double f = 0.9 + 0.1 * (1.0 - dist / a.radius);
    for (int c = 0; c < 3; ++c) out[c] = a.interior_color[c] * f;
  }
  return out;
}

void render(const BinAppearance& a, const std::vector<Item>& items, int size, Tensor<float>& image,
            Tensor<float>& mask) {
  image = Tensor<float>(Shape{3, size, size});
  mask = Tensor<float>(Shape{1, size, size});
  const double band = kBandStart * a.radius;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const double dx = px - a.center_x, dy = py - a.center_y;
      const double dist = wall_distance(a, dx, dy);
      Rgb rgb;
      if (dist >= a.radius + a.rim_width) {
        const bool grout = (x % 12 == 0) || (y % 12 == 0);
        const double f = (grout ? 0.85 : 1.0) + 0.03 * pixel_noise(a.noise_seed ^ 0xf1, x, y);
        for (int c = 0; c < 3; ++c) rgb[c] = a.floor_color[c] * f;
      } else if (dist >= a.radius) {
        for (int c = 0; c < 3; ++c) rgb[c] = a.rim_color[c];
      } else if (const Item* it = top_item(items, px, py)) {
        rgb = it->shade(px, py, x, y);
        mask.at(0, y, x) = 1.0f;
      } else {
        rgb = interior_at(a, px, py, x, y, dist);
        if (a.reflection && dist >= band) {
          // Mirror the point across the band's inner edge.
          double mx = px, my = py;
          if (!a.square) {
            const double scale = (2.0 * band - dist) / dist;
            mx = a.center_x + dx * scale;
            my = a.center_y + dy * scale;
          } else if (std::abs(dx) >= std::abs(dy)) {
            mx = a.center_x + std::copysign(2.0 * band - std::abs(dx), dx);
          } else {
            my = a.center_y + std::copysign(2.0 * band - std::abs(dy), dy);
          }
          if (const Item* m = top_item(items, mx, my)) {
            const Rgb food = m->shade(mx, my, x, y);
            for (int c = 0; c < 3; ++c) {
              rgb[c] = (1.0 - kReflectionAlpha) * rgb[c] + kReflectionAlpha * food[c];
            }
          }
        }
      }
      for (int c = 0; c < 3; ++c) image.at(c, y, x) = quantize(rgb[c]);
    }
  }
}

}  // namespace

const char* to_string(Texture t) {
  switch (t) {
    case Texture::Speckle: return "speckle";
    case Texture::Stripe: return "stripe";
    case Texture::BlobCluster: return "blob-cluster";
    case Texture::Gradient: return "gradient";
  }
  return "?";
}

const char* to_string(ShapeFamily s) {
  switch (s) {
    case ShapeFamily::Ellipse: return "ellipse";
    case ShapeFamily::Polygon: return "polygon";
    case ShapeFamily::Scatter: return "scatter";
  }
  return "?";
}

const std::vector<ClassStyle>& class_styles() {
  static const std::vector<ClassStyle> styles = [] {
    std::vector<ClassStyle> out;
    for (int i = 0; i < kMaxClasses; ++i) {
      ClassStyle s;
      s.class_id = i;
      // Golden-ratio hue steps keep any prefix of the catalogue spread out.
      s.base_color = hsv(frac(i * 0.6180339887), 0.6 + 0.3 * frac(i * 0.37),
                         0.7 + 0.25 * frac(i * 0.53 + 0.2));
      s.texture = static_cast<Texture>(i % 4);
      s.shape = static_cast<ShapeFamily>((i + i / 4) % 3);
      switch (s.texture) {
        case Texture::Speckle: s.texture_param = 0.10 + 0.02 * (i % 3); break;
        case Texture::Stripe: s.texture_param = 3.0 + i % 3; break;
        case Texture::BlobCluster: s.texture_param = 3.0 + i % 3; break;
        case Texture::Gradient: s.texture_param = 0.5; break;
      }
      out.push_back(s);
    }
    return out;
  }();
  return styles;
}

Episode gen_episode(std::uint64_t master_seed, int bin_id, int num_deposits, int class_count,
                    int image_size, const SceneOptions& options) {
  if (num_deposits < 1) throw InvalidConfig("an episode needs at least one deposit");
  if (class_count < 2) throw InvalidConfig("class_count must be >= 2");
  if (class_count > kMaxClasses) {
    throw InvalidConfig("class_count " + std::to_string(class_count) + " exceeds the " +
                        std::to_string(kMaxClasses) + " available class styles");
  }
  if (image_size < 16) throw InvalidConfig("image_size must be >= 16");

  const auto bin = static_cast<std::uint64_t>(bin_id);
  Episode ep;
  ep.bin_id = bin_id;
  ep.appearance = draw_appearance(mix_seed({master_seed, bin, 0xb1b1}), image_size, options);

  std::vector<Item> items;
  Tensor<float> image, mask;
  render(ep.appearance, items, image_size, image, mask);
  for (int seq = 0; seq < num_deposits; ++seq) {
    Rng rng(mix_seed({master_seed, bin, static_cast<std::uint64_t>(seq)}));
    for (Item& it : items) perturb(it, ep.appearance, rng);
    const int class_id = uniform_int(rng, 0, class_count - 1);
    items.push_back(make_item(class_styles()[static_cast<std::size_t>(class_id)], ep.appearance,
                              image_size, rng));
    DepositEvent ev;
    ev.bin_id = bin_id;
    ev.seq = seq;
    ev.class_id = class_id;
    ev.before = image;
    render(ep.appearance, items, image_size, ev.after, ev.cumulative_mask);
    image = ev.after;
    ep.events.push_back(std::move(ev));
  }
  return ep;
}

double changed_pixel_fraction(const Tensor<float>& a, const Tensor<float>& b) {
  if (!(a.shape() == b.shape()) || a.rank() != 3) throw InvalidInput("expected equal [C,H,W] images");
  const int c = a.dim(0), h = a.dim(1), w = a.dim(2);
  std::size_t changed = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        if (a.at(ch, y, x) != b.at(ch, y, x)) {
          ++changed;
          break;
        }
      }
    }
  }
  return static_cast<double>(changed) / static_cast<double>(h * w);
}

Tensor<float> item_region_mask(const BinAppearance& appearance, int image_size) {
  Tensor<float> out(Shape{1, image_size, image_size});
  const double reach = region_radius(appearance) + 1e-6;
  for (int y = 0; y < image_size; ++y) {
    for (int x = 0; x < image_size; ++x) {
      const double dx = x + 0.5 - appearance.center_x, dy = y + 0.5 - appearance.center_y;
      if (dx * dx + dy * dy <= reach * reach) out.at(0, y, x) = 1.0f;
    }
  }
  return out;
}

}  // namespace fw
