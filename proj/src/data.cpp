#include "pelu/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>

#include "pelu/errors.hpp"

namespace pelu {

void Dataset::validate() const {
  if (inputs.rank() < 2 || inputs.dim(0) != labels.size()) {
    throw ShapeError("dataset: " + std::to_string(labels.size()) + " labels for inputs " +
                     shape_string(inputs.shape()));
  }
  for (std::size_t label : labels) {
    if (label >= num_classes) throw std::out_of_range("dataset: label " + std::to_string(label) + " out of range");
  }
}

Dataset gen_blobs(std::uint64_t seed, std::size_t n_per_class, std::size_t num_classes, std::size_t dim,
                  double spread) {
  if (n_per_class == 0 || num_classes == 0 || dim == 0) {
    throw std::invalid_argument("gen_blobs: counts must be positive");
  }
  Rng rng(seed);
  const std::size_t n = n_per_class * num_classes;
  Dataset ds{Tensord({n, dim}), std::vector<std::size_t>(n), num_classes, "blobs"};
  std::size_t row = 0;
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (std::size_t k = 0; k < num_classes; ++k, ++row) {
      const double angle = 2.0 * std::numbers::pi * double(k) / double(num_classes);
      for (std::size_t d = 0; d < dim; ++d) {
        const double center = d == 0 ? 3.0 * std::cos(angle) : d == 1 ? 3.0 * std::sin(angle) : 0.0;
        ds.inputs(row, d) = center + spread * rng.normal();
      }
      ds.labels[row] = k;
    }
  }
  return ds;
}

// IDX

namespace {

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset) {
  return (std::uint32_t(buf[offset]) << 24) | (std::uint32_t(buf[offset + 1]) << 16) |
         (std::uint32_t(buf[offset + 2]) << 8) | std::uint32_t(buf[offset + 3]);
}

void put_be32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  buf.push_back(std::uint8_t(v >> 24));
  buf.push_back(std::uint8_t(v >> 16));
  buf.push_back(std::uint8_t(v >> 8));
  buf.push_back(std::uint8_t(v));
}

}  // namespace

IdxArray read_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open IDX file " + path.string());
  const std::vector<std::uint8_t> buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (buf.size() < 4) throw FormatError(path.string() + ": truncated IDX header");
  const std::uint32_t magic = read_be32(buf, 0);
  const std::size_t ndims = magic & 0xFFu;
  if ((magic & 0xFFFFFF00u) != 0x00000800u || ndims == 0) {
    throw FormatError(path.string() + ": bad IDX magic 0x" + [&] {
      char text[9];
      std::snprintf(text, sizeof text, "%08X", magic);
      return std::string(text);
    }());
  }
  const std::size_t header = 4 + 4 * ndims;
  if (buf.size() < header) throw FormatError(path.string() + ": truncated IDX dimension table");
  IdxArray out;
  std::size_t count = 1;
  for (std::size_t i = 0; i < ndims; ++i) {
    out.dims.push_back(read_be32(buf, 4 + 4 * i));
    count *= out.dims.back();
  }
  if (buf.size() < header + count) {
    throw FormatError(path.string() + ": truncated IDX payload (expected " + std::to_string(count) + " bytes, found " +
                      std::to_string(buf.size() - header) + ")");
  }
  if (buf.size() > header + count) throw FormatError(path.string() + ": trailing bytes after IDX payload");
  out.bytes.assign(buf.begin() + std::ptrdiff_t(header), buf.end());
  return out;
}

void write_idx(const std::filesystem::path& path, const IdxArray& array) {
  if (array.dims.empty() || array.dims.size() > 255) throw FormatError("IDX arrays need 1..255 dimensions");
  std::size_t count = 1;
  for (std::uint32_t d : array.dims) count *= d;
  if (count != array.bytes.size()) throw FormatError("IDX payload size does not match its dimensions");
  std::vector<std::uint8_t> buf;
  put_be32(buf, array.magic());
  for (std::uint32_t d : array.dims) put_be32(buf, d);
  buf.insert(buf.end(), array.bytes.begin(), array.bytes.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write IDX file " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const IdxArray images = read_idx(images_path);
  const IdxArray labels = read_idx(labels_path);
  if (images.magic() != kIdxImagesMagic) throw FormatError(images_path.string() + ": bad magic, expected 0x00000803");
  if (labels.magic() != kIdxLabelsMagic) throw FormatError(labels_path.string() + ": bad magic, expected 0x00000801");
  const std::size_t n = images.dims[0], h = images.dims[1], w = images.dims[2];
  if (labels.dims[0] != n) {
    throw FormatError("IDX count mismatch: " + std::to_string(n) + " images vs " + std::to_string(labels.dims[0]) +
                      " labels");
  }
  if (n == 0 || h == 0 || w == 0) throw FormatError(images_path.string() + ": empty IDX image array");
  Dataset ds{Tensord({n, 1, h, w}), std::vector<std::size_t>(n), 0, images_path.filename().string()};
  for (std::size_t i = 0; i < images.bytes.size(); ++i) ds.inputs[i] = double(images.bytes[i]) / 255.0;
  for (std::size_t i = 0; i < n; ++i) ds.labels[i] = labels.bytes[i];
  ds.num_classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  return ds;
}

Tensord pixel_mean(const Dataset& ds) {
  const std::size_t n = ds.size(), per = ds.sample_size();
  Tensord mean(ds.sample_shape());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < per; ++j) mean[j] += ds.inputs[i * per + j];
  for (double& v : mean.data()) v /= double(n);
  return mean;
}

void subtract_mean(Dataset& ds, const Tensord& mean) {
  const std::size_t per = ds.sample_size();
  if (mean.size() != per) throw ShapeError("subtract_mean: mean shape " + shape_string(mean.shape()));
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (std::size_t j = 0; j < per; ++j) ds.inputs[i * per + j] -= mean[j];
}

void hflip(std::span<double> image, std::size_t channels, std::size_t height, std::size_t width) {
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t y = 0; y < height; ++y) {
      auto row = image.subspan((c * height + y) * width, width);
      std::reverse(row.begin(), row.end());
    }
}

// Batching

BatchIterator::BatchIterator(const Dataset& ds, std::size_t batch_size, Rng& rng, Augment augment)
    : ds_(ds), batch_size_(batch_size), rng_(rng), augment_(augment), order_(ds.size()) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng_.below(i)]);
}

Batch gather(const Dataset& ds, std::span<const std::size_t> indices) {
  const std::size_t per = ds.sample_size();
  Shape shape = ds.inputs.shape();
  shape[0] = indices.size();
  Batch batch{Tensord(shape), {}, {indices.begin(), indices.end()}};
  batch.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = ds.inputs.data().subspan(indices[r] * per, per);
    std::copy(src.begin(), src.end(), batch.inputs.data().begin() + std::ptrdiff_t(r * per));
    batch.labels.push_back(ds.labels[indices[r]]);
  }
  return batch;
}

std::optional<Batch> BatchIterator::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t count = std::min(batch_size_, order_.size() - cursor_);
  Batch batch = gather(ds_, std::span(order_).subspan(cursor_, count));
  cursor_ += count;
  if (augment_ == Augment::HFlip && ds_.inputs.rank() == 4) {
    const std::size_t c = ds_.inputs.dim(1), h = ds_.inputs.dim(2), w = ds_.inputs.dim(3);
    const std::size_t per = c * h * w;
    for (std::size_t r = 0; r < count; ++r) {
      if (rng_.bernoulli(0.5)) hflip(batch.inputs.data().subspan(r * per, per), c, h, w);
    }
  }
  return batch;
}

}  // namespace pelu
