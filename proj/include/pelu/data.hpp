#ifndef PELU_DATA_HPP
#define PELU_DATA_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pelu/rng.hpp"
#include "pelu/tensor.hpp"

namespace pelu {

/// Inputs are [n x features] or [n x c x h x w]; labels[i] < num_classes.
struct Dataset {
  Tensord inputs;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
  std::string split;

  std::size_t size() const { return labels.size(); }
  /// Shape of one sample (inputs shape without the batch axis).
  Shape sample_shape() const { return Shape(inputs.shape().begin() + 1, inputs.shape().end()); }
  std::size_t sample_size() const { return inputs.size() / inputs.dim(0); }
  void validate() const;
};

/// Gaussian clusters with standard deviation `spread` around centers
/// 3 (cos 2 pi k / K, sin 2 pi k / K, 0, ...). Samples are interleaved by class.
Dataset gen_blobs(std::uint64_t seed, std::size_t n_per_class, std::size_t num_classes, std::size_t dim,
                  double spread);

// IDX container: 0x00 0x00 <type> <ndims>, ndims big-endian uint32 extents,
// then raw data. Only unsigned-byte payloads (type 0x08) are supported.

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> bytes;

  std::uint32_t magic() const { return 0x00000800u | std::uint32_t(dims.size()); }
  friend bool operator==(const IdxArray&, const IdxArray&) = default;
};

IdxArray read_idx(const std::filesystem::path& path);
void write_idx(const std::filesystem::path& path, const IdxArray& array);

/// Loads a 3-d image file and a 1-d label file; pixels are scaled to [0, 1]
/// and shaped [n x 1 x h x w].
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Per-pixel mean over all samples, shaped like one sample.
Tensord pixel_mean(const Dataset& ds);
void subtract_mean(Dataset& ds, const Tensord& mean);

enum class Augment { None, HFlip };

/// Mirrors a [c x h x w] image along its width axis in place.
void hflip(std::span<double> image, std::size_t channels, std::size_t height, std::size_t width);

struct Batch {
  Tensord inputs;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> indices;  // positions in the source dataset
};

/// One epoch over a dataset: a seeded permutation cut into batches (the last
/// one may be short). With HFlip, each image sample is mirrored with
/// probability 0.5; flat samples are left untouched.
class BatchIterator {
 public:
  BatchIterator(const Dataset& ds, std::size_t batch_size, Rng& rng, Augment augment = Augment::None);

  std::optional<Batch> next();
  std::size_t batch_count() const { return (order_.size() + batch_size_ - 1) / batch_size_; }

 private:
  const Dataset& ds_;
  std::size_t batch_size_;
  Rng& rng_;
  Augment augment_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

inline BatchIterator batches(const Dataset& ds, std::size_t batch_size, Rng& rng, Augment augment = Augment::None) {
  return BatchIterator(ds, batch_size, rng, augment);
}

/// Samples in order, no shuffling or augmentation (evaluation passes).
Batch gather(const Dataset& ds, std::span<const std::size_t> indices);

}  // namespace pelu

#endif  // PELU_DATA_HPP
