#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sann/network.hpp"
#include "sann/nmf.hpp"
#include "sann/numerics.hpp"

namespace sann::data {

/// Grayscale image with pixels in [0, 1], row-major.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  friend bool operator==(const Image&, const Image&) = default;
};

/// Parses binary (P5) or plain (P2) PGM. Samples are divided by maxval.
/// Throws ParseError on anything else.
Image load_pgm(std::string_view bytes);
Image load_pgm_file(const std::filesystem::path& path);
/// Every *.pgm file in `dir`, sorted by file name.
std::vector<Image> load_pgm_dir(const std::filesystem::path& dir);

/// Encodes with samples round(p * maxval); maxval in [1, 65535].
std::string write_pgm(const Image& img, bool binary = true, unsigned maxval = 255);

double mean_grayscale(const Image& img);

struct SynthDataset {
  std::vector<Image> images;
  /// Person label per image, 0-based.
  std::vector<std::size_t> persons;
};

/// 1-based image indices that show the same person in the same-person layout.
inline constexpr std::size_t kSamePersonIndices[] = {2, 3, 9, 10, 11};

/// Clustered faces-like images: each person gets a smooth non-negative base
/// pattern, each image is clamp(base + N(0, noise_sigma^2), 0, 1).
///
/// With `same_person_layout`, person 0 owns exactly the images at 1-based indices
/// 2, 3, 9, 10 and 11 and the rest cycle over persons 1..n_persons-1; this
/// needs n_images >= 11 and n_persons >= 2. Without it images cycle over all
/// persons.
SynthDataset synth_dataset(std::size_t n_images, std::size_t n_persons, std::size_t image_size, double noise_sigma,
                           Rng& rng, bool same_person_layout = true);

/// pixels x images matrix, one image per column.
Matrix images_to_matrix(std::span<const Image> images);

struct ScalingSpec {
  std::vector<double> min;
  std::vector<double> max;
};

struct Sample {
  std::vector<double> features;
  double target = 0.0;
  SalienceTag tag;
  /// 1-based position in the source image list.
  std::size_t source_index = 0;
};

struct SampleSet {
  std::vector<Sample> samples;
  ScalingSpec scaling;
};

/// Encodes every image against `basis` and min-max scales the coefficients
/// into [0, 1] per dimension. Without `provided` the scaling comes from this
/// set; with it, values falling outside are clamped. Constant dimensions
/// map to 0.5. Targets are mean grayscale values; tags start at zero.
SampleSet build_samples(std::span<const Image> images, const Matrix& basis, const nmf::NmfConfig& cfg, Rng& rng,
                        const ScalingSpec* provided = nullptr);

std::vector<Example> to_examples(std::span<const Sample> samples);

/// n copies of 0.5.
std::vector<double> control_input(std::size_t n);

struct ManifestRow {
  std::size_t index = 0;
  std::size_t person = 0;
  /// File path, or "synthetic".
  std::string source;
  double target = 0.0;
  double salience = 0.0;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

/// CSV with header index,person,path_or_synthetic,target,salience.
std::string write_manifest(std::span<const ManifestRow> rows);
std::vector<ManifestRow> read_manifest(std::string_view csv);

}  // namespace sann::data
