#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "ulsnn/matcore.hpp"
#include "ulsnn/nn.hpp"

namespace ulsnn {

inline constexpr std::size_t kGlyphSide = 20;
inline constexpr std::size_t kGlyphPixels = kGlyphSide * kGlyphSide;

struct GlyphImage {
  std::array<float, kGlyphPixels> pixels{};
  std::uint32_t label = 0;

  float& at(std::size_t r, std::size_t c) { return pixels[r * kGlyphSide + c]; }
  float at(std::size_t r, std::size_t c) const { return pixels[r * kGlyphSide + c]; }
  bool operator==(const GlyphImage&) const = default;
};

inline double l2_distance(const GlyphImage& a, const GlyphImage& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kGlyphPixels; ++i) {
    double d = double(a.pixels[i]) - double(b.pixels[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

// Random streams -------------------------------------------------------------------
//
// Every image gets its own engine seeded from (seed, index), so generation is
// order-independent. Only raw engine output is used.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(index + 0x5851f42d4c957f2dull)));
}

inline double uniform01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive
  return lo + int(rng() % std::uint64_t(hi - lo + 1));
}

// Prototypes ---------------------------------------------------------------------

struct PrototypeCfg {
  double margin = 3.0;  // minimum pairwise L2 distance
  std::size_t max_attempts = 200;
};

namespace detail {

inline void splat_stroke(GlyphImage& img, double r0, double c0, double r1, double c1, double sigma) {
  const double len = std::hypot(r1 - r0, c1 - c0);
  const std::size_t steps = std::max<std::size_t>(2, std::size_t(len * 3.0));
  for (std::size_t s = 0; s <= steps; ++s) {
    double t = double(s) / double(steps);
    double pr = r0 + t * (r1 - r0), pc = c0 + t * (c1 - c0);
    for (std::size_t r = 0; r < kGlyphSide; ++r)
      for (std::size_t c = 0; c < kGlyphSide; ++c) {
        double d2 = (double(r) - pr) * (double(r) - pr) + (double(c) - pc) * (double(c) - pc);
        float v = float(std::exp(-d2 / (2.0 * sigma * sigma)));
        img.at(r, c) = std::max(img.at(r, c), v);
      }
  }
}

// A smooth random field of signed Gaussian blobs plus a few strokes. Pixel
// values are the field's ranks scaled into (0,1), so every prototype has the
// same uniform grey-level histogram and mean 0.5 (zero after the [-1,1] map).
inline GlyphImage draw_prototype(std::mt19937_64& rng, std::uint32_t label) {
  constexpr double edge = double(kGlyphSide - 1);
  std::array<double, kGlyphPixels> field{};
  const int blobs = uniform_int(rng, 5, 8);
  for (int k = 0; k < blobs; ++k) {
    double cr = uniform(rng, 0.0, edge), cc = uniform(rng, 0.0, edge);
    double sigma = uniform(rng, 1.2, 3.0);
    double amp = uniform(rng, 0.5, 1.0) * (rng() & 1 ? 1.0 : -1.0);
    for (std::size_t r = 0; r < kGlyphSide; ++r)
      for (std::size_t c = 0; c < kGlyphSide; ++c) {
        double d2 = (double(r) - cr) * (double(r) - cr) + (double(c) - cc) * (double(c) - cc);
        field[r * kGlyphSide + c] += amp * std::exp(-d2 / (2.0 * sigma * sigma));
      }
  }
  GlyphImage strokes;
  const int n_strokes = uniform_int(rng, 1, 3);
  for (int k = 0; k < n_strokes; ++k) {
    double r0 = uniform(rng, 0.0, edge), c0 = uniform(rng, 0.0, edge);
    double r1 = uniform(rng, 0.0, edge), c1 = uniform(rng, 0.0, edge);
    splat_stroke(strokes, r0, c0, r1, c1, uniform(rng, 0.6, 1.0));
  }
  std::array<std::size_t, kGlyphPixels> idx;
  for (std::size_t i = 0; i < kGlyphPixels; ++i) {
    field[i] += strokes.pixels[i];
    idx[i] = i;
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t x, std::size_t y) { return field[x] < field[y]; });
  GlyphImage img;
  img.label = label;
  for (std::size_t k = 0; k < kGlyphPixels; ++k)
    img.pixels[idx[k]] = float((double(k) + 0.5) / double(kGlyphPixels));
  return img;
}

}  // namespace detail

// Smooth random blob-and-stroke patterns, one per class, pairwise at least
// cfg.margin apart in L2.
inline std::vector<GlyphImage> generate_prototypes(std::size_t n_classes, std::uint64_t seed,
                                                   const PrototypeCfg& cfg = {}) {
  if (n_classes < 2) throw ConfigError("generate_prototypes: need at least 2 classes");
  std::vector<GlyphImage> out;
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto rng = stream(seed, c);
    bool placed = false;
    for (std::size_t attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
      GlyphImage img = detail::draw_prototype(rng, std::uint32_t(c));
      bool ok = std::all_of(out.begin(), out.end(),
                            [&](const GlyphImage& o) { return l2_distance(o, img) >= cfg.margin; });
      if (ok) {
        out.push_back(img);
        placed = true;
      }
    }
    if (!placed) {
      throw ConfigError("generate_prototypes: could not place class " + std::to_string(c) +
                        " at margin " + std::to_string(cfg.margin));
    }
  }
  return out;
}

// Transformations --------------------------------------------------------------------

enum class TransformKind { thicken, thin, shift, blur, noise };

namespace detail {

// 3x3 cross neighbourhood, out-of-image neighbours ignored.
template <class Pick>
GlyphImage cross_filter(const GlyphImage& in, Pick pick) {
  GlyphImage out = in;
  for (int r = 0; r < int(kGlyphSide); ++r)
    for (int c = 0; c < int(kGlyphSide); ++c) {
      float v = in.at(r, c);
      const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        int rr = r + dr[k], cc = c + dc[k];
        if (rr < 0 || cc < 0 || rr >= int(kGlyphSide) || cc >= int(kGlyphSide)) continue;
        v = pick(v, in.at(rr, cc));
      }
      out.at(r, c) = v;
    }
  return out;
}

}  // namespace detail

inline GlyphImage thicken(const GlyphImage& in) {
  return detail::cross_filter(in, [](float a, float b) { return std::max(a, b); });
}

inline GlyphImage thin(const GlyphImage& in) {
  return detail::cross_filter(in, [](float a, float b) { return std::min(a, b); });
}

inline GlyphImage shift(const GlyphImage& in, int dr, int dc) {
  GlyphImage out;
  out.label = in.label;
  for (int r = 0; r < int(kGlyphSide); ++r)
    for (int c = 0; c < int(kGlyphSide); ++c) {
      int sr = r - dr, sc = c - dc;
      if (sr >= 0 && sc >= 0 && sr < int(kGlyphSide) && sc < int(kGlyphSide)) out.at(r, c) = in.at(sr, sc);
    }
  return out;
}

// 3x3 box mean over in-image neighbours, taken relative to the centre pixel
// so a constant image maps to itself exactly.
inline GlyphImage blur(const GlyphImage& in) {
  GlyphImage out = in;
  for (int r = 0; r < int(kGlyphSide); ++r)
    for (int c = 0; c < int(kGlyphSide); ++c) {
      const float centre = in.at(r, c);
      float dev = 0.0f;
      int n = 0;
      for (int rr = r - 1; rr <= r + 1; ++rr)
        for (int cc = c - 1; cc <= c + 1; ++cc) {
          if (rr < 0 || cc < 0 || rr >= int(kGlyphSide) || cc >= int(kGlyphSide)) continue;
          dev += in.at(rr, cc) - centre;
          ++n;
        }
      out.at(r, c) = std::clamp(centre + dev / float(n), 0.0f, 1.0f);
    }
  return out;
}

inline GlyphImage add_noise(const GlyphImage& in, double amplitude, std::mt19937_64& rng) {
  GlyphImage out = in;
  for (float& p : out.pixels) p = std::clamp(p + float(uniform(rng, -amplitude, amplitude)), 0.0f, 1.0f);
  return out;
}

inline constexpr double kMaxNoise = 0.2;

inline GlyphImage transform(const GlyphImage& img, TransformKind kind, std::mt19937_64& rng) {
  switch (kind) {
    case TransformKind::thicken: return thicken(img);
    case TransformKind::thin: return thin(img);
    case TransformKind::shift: return shift(img, uniform_int(rng, -2, 2), uniform_int(rng, -2, 2));
    case TransformKind::blur: return blur(img);
    case TransformKind::noise: return add_noise(img, kMaxNoise, rng);
  }
  return img;
}

// Probability of applying each transformation, in the fixed order
// thicken-or-thin, shift, blur, noise.
struct TransformMix {
  double thicken = 0.125;
  double thin = 0.125;
  double shift = 0.3;
  double blur = 0.15;
  double noise = 1.0;
  double noise_amplitude = 0.1;
};

// Datasets ------------------------------------------------------------------------

struct DatasetSpec {
  std::size_t n_classes = 50;
  std::size_t per_class = 400;
  std::uint64_t prototype_seed = 1;
  std::uint64_t sample_seed = 2;
  TransformMix mix{};
  PrototypeCfg prototypes{};
};

struct Dataset {
  std::uint32_t n_classes = 0;
  std::vector<GlyphImage> images;

  bool operator==(const Dataset&) const = default;
};

inline GlyphImage distort(const GlyphImage& proto, const TransformMix& mix, std::mt19937_64& rng) {
  GlyphImage img = proto;
  double u = uniform01(rng);
  if (u < mix.thicken) {
    img = thicken(img);
  } else if (u < mix.thicken + mix.thin) {
    img = thin(img);
  }
  if (uniform01(rng) < mix.shift) img = shift(img, uniform_int(rng, -2, 2), uniform_int(rng, -2, 2));
  if (uniform01(rng) < mix.blur) img = blur(img);
  if (uniform01(rng) < mix.noise) {
    img = add_noise(img, std::min(mix.noise_amplitude, kMaxNoise), rng);
  }
  img.label = proto.label;
  return img;
}

// per_class distorted copies of each prototype, shuffled.
inline Dataset build_dataset(const DatasetSpec& spec) {
  if (spec.per_class < 1) throw ConfigError("build_dataset: per_class must be >= 1");
  auto protos = generate_prototypes(spec.n_classes, spec.prototype_seed, spec.prototypes);
  Dataset ds;
  ds.n_classes = std::uint32_t(spec.n_classes);
  ds.images.reserve(spec.n_classes * spec.per_class);
  for (std::size_t c = 0; c < spec.n_classes; ++c)
    for (std::size_t k = 0; k < spec.per_class; ++k) {
      auto rng = stream(spec.sample_seed, c * spec.per_class + k);
      ds.images.push_back(distort(protos[c], spec.mix, rng));
    }
  auto rng = stream(spec.sample_seed, ~std::uint64_t{0});
  for (std::size_t i = ds.images.size(); i > 1; --i) {
    std::size_t j = std::size_t(rng() % i);
    std::swap(ds.images[i - 1], ds.images[j]);
  }
  return ds;
}

// "GLY1", then n_classes, n_patterns, width, height as u32 little-endian, then
// per pattern a u32 label and 400 little-endian f32 pixels.
inline constexpr char kDatasetMagic[4] = {'G', 'L', 'Y', '1'};

inline void write_dataset(std::ostream& os, const Dataset& ds) {
  os.write(kDatasetMagic, 4);
  detail::put_le(os, ds.n_classes, 4);
  detail::put_le(os, ds.images.size(), 4);
  detail::put_le(os, kGlyphSide, 4);
  detail::put_le(os, kGlyphSide, 4);
  for (const auto& img : ds.images) {
    detail::put_le(os, img.label, 4);
    for (float p : img.pixels) detail::put_f32(os, p);
  }
}

inline Dataset read_dataset(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kDatasetMagic)) {
    throw FormatError("read_dataset: bad magic");
  }
  const char* what = "read_dataset";
  Dataset ds;
  ds.n_classes = std::uint32_t(detail::get_le(is, 4, what));
  std::uint64_t n = detail::get_le(is, 4, what);
  std::uint64_t w = detail::get_le(is, 4, what), h = detail::get_le(is, 4, what);
  if (w != kGlyphSide || h != kGlyphSide) throw FormatError("read_dataset: images must be 20x20");
  if (ds.n_classes < 2 || n < ds.n_classes) {
    throw FormatError("read_dataset: need n_patterns >= n_classes >= 2");
  }
  ds.images.resize(n);
  for (auto& img : ds.images) {
    img.label = std::uint32_t(detail::get_le(is, 4, what));
    if (img.label >= ds.n_classes) throw FormatError("read_dataset: label out of range");
    for (float& p : img.pixels) p = detail::get_f32(is, what);
  }
  return ds;
}

inline void write_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_dataset(os, ds);
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_dataset(is);
}

struct LabeledBatch {
  Batch batch;
  std::vector<std::uint32_t> labels;
};

// Pixels [0,1] -> inputs [-1,1]; targets +1 for the labelled class, -1 elsewhere.
inline LabeledBatch to_batch(const Dataset& ds) {
  LabeledBatch lb;
  const std::size_t n = ds.images.size();
  lb.batch.x = Mat32(n, kGlyphPixels);
  lb.batch.t = Mat32(n, ds.n_classes);
  lb.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& img = ds.images[i];
    float* xr = lb.batch.x.row(i);
    for (std::size_t p = 0; p < kGlyphPixels; ++p) xr[p] = 2.0f * img.pixels[p] - 1.0f;
    float* tr = lb.batch.t.row(i);
    std::fill(tr, tr + ds.n_classes, -1.0f);
    tr[img.label] = 1.0f;
    lb.labels[i] = img.label;
  }
  return lb;
}

inline LabeledBatch load_dataset(const std::string& path) { return to_batch(read_dataset(path)); }

}  // namespace ulsnn
