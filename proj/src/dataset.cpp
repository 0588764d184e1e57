#include "sann/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "sann/errors.hpp"
#include "sann/fileio.hpp"

namespace sann::data {

namespace {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::string_view bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads an unsigned decimal.
  unsigned long next_number() {
    skip_separators();
    const auto start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) throw ParseError("pgm: expected a number in header");
    unsigned long v = 0;
    auto [ptr, ec] = std::from_chars(bytes_.data() + start, bytes_.data() + pos_, v);
    if (ec != std::errc()) throw ParseError("pgm: header number out of range");
    return v;
  }

  std::size_t pos() const noexcept { return pos_; }
  void advance(std::size_t n) noexcept { pos_ += n; }

 private:
  void skip_separators() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image load_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    throw ParseError("pgm: not a P2/P5 graymap");
  }
  const bool binary = bytes[1] == '5';
  PgmHeaderReader rd(bytes);
  rd.advance(2);
  const auto width = rd.next_number();
  const auto height = rd.next_number();
  const auto maxval = rd.next_number();
  if (width == 0 || height == 0) throw ParseError("pgm: zero dimension");
  if (maxval == 0 || maxval > 65535) throw ParseError("pgm: maxval must be in [1, 65535]");

  Image img;
  img.width = width;
  img.height = height;
  const std::size_t n = width * height;
  img.pixels.resize(n);
  const double scale = static_cast<double>(maxval);

  if (binary) {
    // Exactly one whitespace byte separates maxval from the raster.
    if (rd.pos() >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[rd.pos()]))) {
      throw ParseError("pgm: missing separator before raster");
    }
    rd.advance(1);
    const std::size_t bps = maxval < 256 ? 1 : 2;
    if (bytes.size() - rd.pos() < n * bps) throw ParseError("pgm: truncated raster");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + rd.pos());
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned v = bps == 1 ? p[i] : (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1];
      if (v > maxval) throw ParseError("pgm: sample exceeds maxval");
      img.pixels[i] = v / scale;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      unsigned long v;
      try {
        v = rd.next_number();
      } catch (const ParseError&) {
        throw ParseError("pgm: truncated raster");
      }
      if (v > maxval) throw ParseError("pgm: sample exceeds maxval");
      img.pixels[i] = static_cast<double>(v) / scale;
    }
  }
  return img;
}

Image load_pgm_file(const std::filesystem::path& path) {
  try {
    return load_pgm(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<Image> load_pgm_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Image> images;
  images.reserve(files.size());
  for (const auto& f : files) images.push_back(load_pgm_file(f));
  return images;
}

std::string write_pgm(const Image& img, bool binary, unsigned maxval) {
  if (maxval == 0 || maxval > 65535) throw ConfigError("pgm: maxval must be in [1, 65535]");
  if (img.pixels.size() != img.width * img.height) throw ShapeError("pgm: pixel count mismatch");
  std::ostringstream out;
  out << (binary ? "P5" : "P2") << '\n' << img.width << ' ' << img.height << '\n' << maxval << '\n';
  auto quantize = [&](double p) {
    return static_cast<unsigned>(std::lround(std::clamp(p, 0.0, 1.0) * maxval));
  };
  if (binary) {
    for (double p : img.pixels) {
      const unsigned v = quantize(p);
      if (maxval >= 256) out.put(static_cast<char>(v >> 8));
      out.put(static_cast<char>(v & 0xff));
    }
  } else {
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      out << quantize(img.pixels[i]) << ((i + 1) % img.width == 0 ? '\n' : ' ');
    }
  }
  return out.str();
}

double mean_grayscale(const Image& img) {
  if (img.pixels.empty()) throw DomainError("mean_grayscale: image has no pixels");
  return mean(img.pixels);
}

SynthDataset synth_dataset(std::size_t n_images, std::size_t n_persons, std::size_t image_size, double noise_sigma,
                           Rng& rng, bool same_person_layout) {
  if (n_persons < 1) throw ConfigError("synth: n_persons must be >= 1");
  if (image_size < 1) throw ConfigError("synth: image_size must be >= 1");
  if (!(noise_sigma >= 0.0)) throw ConfigError("synth: noise_sigma must be >= 0");
  if (same_person_layout && (n_images < 11 || n_persons < 2)) {
    throw ConfigError("synth: the same-person layout needs >= 11 images and >= 2 persons");
  }

  const std::size_t side = image_size;
  const double scale = static_cast<double>(side) / 19.0;
  std::vector<std::vector<double>> bases(n_persons, std::vector<double>(side * side));
  for (auto& base : bases) {
    const double background = rng.uniform(0.05, 0.3);
    std::fill(base.begin(), base.end(), background);
    constexpr int kBlobs = 6;
    for (int b = 0; b < kBlobs; ++b) {
      const double cx = rng.uniform(0.0, static_cast<double>(side));
      const double cy = rng.uniform(0.0, static_cast<double>(side));
      const double width = rng.uniform(1.5, 4.0) * scale;
      const double amp = rng.uniform(0.2, 0.7);
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          const double dx = static_cast<double>(x) + 0.5 - cx;
          const double dy = static_cast<double>(y) + 0.5 - cy;
          base[y * side + x] += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
        }
      }
    }
    for (double& p : base) p = std::clamp(p, 0.0, 1.0);
  }

  SynthDataset ds;
  ds.images.reserve(n_images);
  ds.persons.reserve(n_images);
  std::size_t cycle = 0;
  for (std::size_t idx = 1; idx <= n_images; ++idx) {
    std::size_t person;
    if (same_person_layout) {
      const bool special = std::find(std::begin(kSamePersonIndices), std::end(kSamePersonIndices), idx) !=
                           std::end(kSamePersonIndices);
      person = special ? 0 : 1 + (cycle++ % (n_persons - 1));
    } else {
      person = (idx - 1) % n_persons;
    }
    Image img{side, side, bases[person]};
    if (noise_sigma > 0.0) {
      for (double& p : img.pixels) p = std::clamp(p + noise_sigma * rng.normal(), 0.0, 1.0);
    }
    ds.images.push_back(std::move(img));
    ds.persons.push_back(person);
  }
  return ds;
}

Matrix images_to_matrix(std::span<const Image> images) {
  if (images.empty()) return {};
  const std::size_t n_pix = images.front().pixels.size();
  Matrix v(n_pix, images.size());
  for (std::size_t c = 0; c < images.size(); ++c) {
    if (images[c].pixels.size() != n_pix) throw ShapeError("images differ in size");
    for (std::size_t r = 0; r < n_pix; ++r) v(r, c) = images[c].pixels[r];
  }
  return v;
}

SampleSet build_samples(std::span<const Image> images, const Matrix& basis, const nmf::NmfConfig& cfg, Rng& rng,
                        const ScalingSpec* provided) {
  if (basis.cols() != cfg.rank) {
    throw ShapeError("build_samples: basis rank " + std::to_string(basis.cols()) + " != configured rank " +
                     std::to_string(cfg.rank));
  }
  const std::size_t r = cfg.rank;
  if (provided && (provided->min.size() != r || provided->max.size() != r)) {
    throw ShapeError("build_samples: scaling spec rank mismatch");
  }

  SampleSet out;
  out.samples.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].pixels.size() != basis.rows()) throw ShapeError("build_samples: image size does not match basis");
    Sample s;
    s.features = nmf::encode(basis, images[i].pixels, cfg, rng);
    s.target = mean_grayscale(images[i]);
    s.source_index = i + 1;
    out.samples.push_back(std::move(s));
  }

  if (provided) {
    out.scaling = *provided;
  } else {
    out.scaling.min.assign(r, 0.0);
    out.scaling.max.assign(r, 0.0);
    for (std::size_t d = 0; d < r && !out.samples.empty(); ++d) {
      double lo = out.samples.front().features[d];
      double hi = lo;
      for (const auto& s : out.samples) {
        lo = std::min(lo, s.features[d]);
        hi = std::max(hi, s.features[d]);
      }
      out.scaling.min[d] = lo;
      out.scaling.max[d] = hi;
    }
  }

  for (auto& s : out.samples) {
    for (std::size_t d = 0; d < r; ++d) {
      const double lo = out.scaling.min[d];
      const double hi = out.scaling.max[d];
      s.features[d] = hi > lo ? std::clamp((s.features[d] - lo) / (hi - lo), 0.0, 1.0) : 0.5;
    }
  }
  return out;
}

std::vector<Example> to_examples(std::span<const Sample> samples) {
  std::vector<Example> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(Example{s.features, {s.target}, s.tag});
  return out;
}

std::vector<double> control_input(std::size_t n) {
  if (n == 0) throw ConfigError("control_input: n must be >= 1");
  return std::vector<double>(n, 0.5);
}

std::string write_manifest(std::span<const ManifestRow> rows) {
  std::string out = "index,person,path_or_synthetic,target,salience\n";
  for (const auto& r : rows) {
    if (r.source.find_first_of(",\n\r\"") != std::string::npos) {
      throw ConfigError("manifest: source may not contain commas, quotes or newlines");
    }
    out += std::to_string(r.index) + ',' + std::to_string(r.person) + ',' + r.source + ',' +
           format_real(r.target, 17) + ',' + format_real(r.salience, 17) + '\n';
  }
  return out;
}

std::vector<ManifestRow> read_manifest(std::string_view csv) {
  std::vector<ManifestRow> rows;
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line)) throw ParseError("manifest: empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "index,person,path_or_synthetic,target,salience") throw ParseError("manifest: unexpected header");
  auto parse_count = [](const std::string& s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("manifest: bad count '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw ParseError("manifest: expected 5 columns in '" + line + "'");
    rows.push_back({parse_count(cells[0]), parse_count(cells[1]), cells[2], parse_real(cells[3]),
                    parse_real(cells[4])});
  }
  return rows;
}

}  // namespace sann::data
