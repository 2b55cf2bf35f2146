#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace blaq {

inline constexpr std::uint32_t kIdxImageMagic = 2051;
inline constexpr std::uint32_t kIdxLabelMagic = 2049;

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;
};

IdxImages parse_idx_images(const std::vector<std::uint8_t>& bytes, const std::string& name);
std::vector<std::uint8_t> parse_idx_labels(const std::vector<std::uint8_t>& bytes, const std::string& name);
IdxImages read_idx_images(const std::string& path);
std::vector<std::uint8_t> read_idx_labels(const std::string& path);

struct MnistSplit {
  std::size_t count = 0;
  std::vector<std::uint8_t> pixels;  // count x 784
  std::vector<std::uint8_t> labels;
};

struct MnistDataset {
  MnistSplit train;
  MnistSplit test;
};

// Reads train-/t10k- images and labels from dir.
MnistDataset load_mnist(const std::string& dir);

// BLAQ_MNIST_DIR if set, else $HOME/.cache/mnist.
std::string default_mnist_dir();

// Downloads the four gzipped IDX files from mirror_url into dir, skipping files
// that already exist. file:// URLs work too.
void fetch_mnist(const std::string& mirror_url, const std::string& dir);

}  // namespace blaq
