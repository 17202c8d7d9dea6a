#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "pelu/data.hpp"

using namespace pelu;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pelu_test_data";
  fs::create_directories(dir);
  return dir / name;
}

IdxArray random_images(std::uint32_t n, std::uint32_t h, std::uint32_t w, Rng& rng) {
  IdxArray arr{{n, h, w}, {}};
  arr.bytes.resize(std::size_t(n) * h * w);
  for (auto& b : arr.bytes) b = std::uint8_t(rng.below(256));
  return arr;
}

IdxArray random_labels(std::uint32_t n, Rng& rng) {
  IdxArray arr{{n}, {}};
  for (std::uint32_t i = 0; i < n; ++i) arr.bytes.push_back(std::uint8_t(rng.below(10)));
  return arr;
}

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Nearest class mean is a linear rule; use it as the separability oracle.
double nearest_mean_accuracy(const Dataset& ds) {
  const std::size_t d = ds.sample_size();
  std::vector<std::vector<double>> means(ds.num_classes, std::vector<double>(d, 0.0));
  std::vector<std::size_t> counts(ds.num_classes, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ++counts[ds.labels[i]];
    for (std::size_t j = 0; j < d; ++j) means[ds.labels[i]][j] += ds.inputs[i * d + j];
  }
  for (std::size_t c = 0; c < ds.num_classes; ++c)
    for (double& m : means[c]) m /= double(counts[c]);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::size_t best = 0;
    double best_dist = 1e300;
    for (std::size_t c = 0; c < ds.num_classes; ++c) {
      double dist = 0;
      for (std::size_t j = 0; j < d; ++j) dist += std::pow(ds.inputs[i * d + j] - means[c][j], 2);
      if (dist < best_dist) {
        best_dist = dist;
        best = c;
      }
    }
    correct += best == ds.labels[i];
  }
  return double(correct) / double(ds.size());
}

}  // namespace

TEST(Blobs, Deterministic) {
  const auto a = gen_blobs(7, 50, 3, 2, 0.5);
  const auto b = gen_blobs(7, 50, 3, 2, 0.5);
  EXPECT_EQ(a.inputs.values(), b.inputs.values());
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(gen_blobs(8, 50, 3, 2, 0.5).inputs.values(), a.inputs.values());
}

TEST(Blobs, ShapeAndBalance) {
  const auto ds = gen_blobs(1, 667, 3, 2, 0.5);
  EXPECT_EQ(ds.inputs.shape(), (Shape{2001, 2}));
  EXPECT_EQ(ds.num_classes, 3u);
  std::vector<std::size_t> counts(3, 0);
  for (auto l : ds.labels) ++counts[l];
  EXPECT_EQ(counts, (std::vector<std::size_t>{667, 667, 667}));
  EXPECT_NO_THROW(ds.validate());
}

TEST(Blobs, ZeroSpreadCollapsesToCenters) {
  const auto ds = gen_blobs(3, 20, 4, 3, 0.0);
  std::vector<std::set<std::vector<double>>> points(4);
  for (std::size_t i = 0; i < ds.size(); ++i)
    points[ds.labels[i]].insert({ds.inputs(i, 0), ds.inputs(i, 1), ds.inputs(i, 2)});
  for (const auto& p : points) EXPECT_EQ(p.size(), 1u);
  EXPECT_EQ(nearest_mean_accuracy(ds), 1.0);
}

TEST(Blobs, LinearlySeparableAtDefaultSpread) {
  for (std::uint64_t seed : {0u, 1u, 2u}) EXPECT_GE(nearest_mean_accuracy(gen_blobs(seed, 667, 3, 2, 0.5)), 0.99);
}

TEST(Blobs, RejectsBadCounts) {
  EXPECT_THROW(gen_blobs(0, 0, 3, 2, 0.5), std::invalid_argument);
  EXPECT_THROW(gen_blobs(0, 10, 0, 2, 0.5), std::invalid_argument);
}

TEST(Idx, RoundTripIsBitExact) {
  Rng rng(41);
  const auto images = random_images(10, 5, 4, rng);
  const auto labels = random_labels(10, rng);
  const auto ip = scratch("rt-images.idx"), lp = scratch("rt-labels.idx");
  write_idx(ip, images);
  write_idx(lp, labels);
  const auto back = read_idx(ip);
  EXPECT_EQ(back.dims, images.dims);
  EXPECT_EQ(back.bytes, images.bytes);
  const auto raw = file_bytes(ip);
  write_idx(scratch("rt-images2.idx"), back);
  EXPECT_EQ(file_bytes(scratch("rt-images2.idx")), raw);
  EXPECT_EQ(raw[2], 0x08);
  EXPECT_EQ(raw[3], 0x03);
  EXPECT_EQ(raw[7], 10);  // big-endian count

  const auto ds = load_idx(ip, lp);
  EXPECT_EQ(ds.inputs.shape(), (Shape{10, 1, 5, 4}));
  for (std::size_t i = 0; i < images.bytes.size(); ++i) ASSERT_EQ(ds.inputs[i], images.bytes[i] / 255.0);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(ds.labels[i], labels.bytes[i]);
}

TEST(Idx, BadMagicRejected) {
  Rng rng(42);
  const auto ip = scratch("bad-images.idx"), lp = scratch("bad-labels.idx");
  write_idx(ip, random_images(3, 2, 2, rng));
  write_idx(lp, random_labels(3, rng));
  auto raw = file_bytes(ip);
  raw[2] = raw[3] = 0;
  std::ofstream(ip, std::ios::binary).write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
  EXPECT_THROW(read_idx(ip), FormatError);
  EXPECT_THROW(load_idx(ip, lp), FormatError);
  // A valid file of the wrong kind is rejected too.
  EXPECT_THROW(load_idx(lp, lp), FormatError);
}

TEST(Idx, CountMismatchRejected) {
  Rng rng(43);
  const auto ip = scratch("mm-images.idx"), lp = scratch("mm-labels.idx");
  write_idx(ip, random_images(10, 2, 2, rng));
  write_idx(lp, random_labels(9, rng));
  try {
    load_idx(ip, lp);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("mismatch"), std::string::npos);
  }
}

TEST(Idx, TruncationAndTrailingBytesRejected) {
  Rng rng(44);
  const auto p = scratch("trunc.idx");
  write_idx(p, random_images(2, 3, 3, rng));
  auto raw = file_bytes(p);
  auto write = [&](const std::vector<std::uint8_t>& bytes) {
    std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  };
  write({raw.begin(), raw.end() - 1});
  EXPECT_THROW(read_idx(p), FormatError);
  auto longer = raw;
  longer.push_back(0);
  write(longer);
  EXPECT_THROW(read_idx(p), FormatError);
  EXPECT_THROW(read_idx(scratch("does-not-exist.idx")), FormatError);
}

TEST(Batches, SingleBatchIsPermutation) {
  const auto ds = gen_blobs(5, 10, 3, 2, 0.5);
  Rng rng(1);
  auto it = batches(ds, ds.size(), rng);
  const auto batch = it.next();
  ASSERT_TRUE(batch);
  EXPECT_FALSE(it.next());
  auto idx = batch->indices;
  std::sort(idx.begin(), idx.end());
  for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(idx[i], i);
  for (std::size_t r = 0; r < batch->indices.size(); ++r) {
    EXPECT_EQ(batch->labels[r], ds.labels[batch->indices[r]]);
    EXPECT_EQ(batch->inputs(r, 0), ds.inputs(batch->indices[r], 0));
  }
}

TEST(Batches, EpochPartitionsSamples) {
  Rng gen(45);
  for (int trial = 0; trial < 30; ++trial) {
    const auto ds = gen_blobs(gen.next_u64(), 1 + gen.below(40), 2 + gen.below(3), 2, 0.5);
    const std::size_t bs = 1 + gen.below(ds.size() + 5);
    Rng rng(gen.next_u64());
    auto it = batches(ds, bs, rng);
    std::vector<int> seen(ds.size(), 0);
    std::size_t count = 0;
    while (auto b = it.next()) {
      EXPECT_LE(b->indices.size(), bs);
      for (auto i : b->indices) ++seen[i];
      ++count;
    }
    EXPECT_EQ(count, it.batch_count());
    for (int s : seen) ASSERT_EQ(s, 1);
  }
}

TEST(Batches, FixedSeedFixedSequence) {
  const auto ds = gen_blobs(6, 30, 3, 2, 0.5);
  auto order = [&] {
    Rng rng(77);
    std::vector<std::size_t> all;
    for (int epoch = 0; epoch < 3; ++epoch) {
      auto it = batches(ds, 7, rng);
      while (auto b = it.next()) all.insert(all.end(), b->indices.begin(), b->indices.end());
    }
    return all;
  };
  EXPECT_EQ(order(), order());
}

TEST(Augment, HflipIsInvolution) {
  Rng rng(46);
  std::vector<double> img(2 * 3 * 5);
  for (double& v : img) v = rng.normal();
  auto copy = img;
  hflip(copy, 2, 3, 5);
  EXPECT_NE(copy, img);
  EXPECT_EQ(copy[0], img[4]);
  hflip(copy, 2, 3, 5);
  EXPECT_EQ(copy, img);
}

TEST(Augment, HflipBatchesStillPartition) {
  Rng rng(47);
  Dataset ds{Tensord({6, 1, 2, 3}), {0, 1, 0, 1, 0, 1}, 2, "train"};
  for (double& v : ds.inputs.data()) v = rng.normal();
  auto it = batches(ds, 4, rng, Augment::HFlip);
  std::size_t total = 0;
  while (auto b = it.next()) {
    for (std::size_t r = 0; r < b->indices.size(); ++r) {
      const double* src = &ds.inputs[b->indices[r] * 6];
      const double* got = &b->inputs[r * 6];
      const bool same = std::equal(src, src + 6, got);
      const bool flipped = got[0] == src[2] && got[1] == src[1] && got[2] == src[0] && got[3] == src[5];
      EXPECT_TRUE(same || flipped);
    }
    total += b->indices.size();
  }
  EXPECT_EQ(total, 6u);
}

TEST(MeanSubtraction, UsesTrainStatistics) {
  Dataset train{Tensord({2, 1, 1, 2}, std::vector<double>{1, 2, 3, 6}), {0, 1}, 2, "train"};
  Dataset test{Tensord({1, 1, 1, 2}, std::vector<double>{2, 4}), {0}, 2, "test"};
  const auto m = pixel_mean(train);
  EXPECT_EQ(m.values(), (std::vector<double>{2, 4}));
  subtract_mean(train, m);
  subtract_mean(test, m);
  EXPECT_EQ(train.inputs.values(), (std::vector<double>{-1, -2, 1, 2}));
  EXPECT_EQ(test.inputs.values(), (std::vector<double>{0, 0}));
}
