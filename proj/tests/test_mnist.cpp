#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "blaq/mlp.hpp"
#include "blaq/mnist.hpp"
#include "support.hpp"

using namespace blaq;
using blaq::test::error_kind_of;
using blaq::test::fixture_dir;
namespace fs = std::filesystem;

namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

std::vector<std::uint8_t> image_header(std::uint32_t magic, std::uint32_t n, std::uint32_t r, std::uint32_t c) {
  std::vector<std::uint8_t> b;
  put_u32(b, magic);
  put_u32(b, n);
  put_u32(b, r);
  put_u32(b, c);
  return b;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("blaq_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("mnist") {
  TEST_CASE("image header 00 00 08 03 with 60000x28x28 is accepted") {
    auto b = image_header(0x00000803, 60000, 28, 28);
    CHECK(b[0] == 0x00);
    CHECK(b[2] == 0x08);
    CHECK(b[3] == 0x03);
    b.resize(b.size() + 60000u * 784u, 0);
    auto img = parse_idx_images(b, "mem");
    CHECK(img.count == 60000);
    CHECK(img.rows == 28);
    CHECK(img.cols == 28);
  }

  TEST_CASE("label file with magic 2049") {
    std::vector<std::uint8_t> b;
    put_u32(b, kIdxLabelMagic);
    put_u32(b, 60000);
    b.resize(8 + 60000, 9);
    CHECK(parse_idx_labels(b, "mem").size() == 60000);
    b[8 + 17] = 10;
    std::string msg = message_of([&] { parse_idx_labels(b, "labels.bin"); });
    CHECK(msg.find("labels.bin") != std::string::npos);
    CHECK(msg.find("offset 25") != std::string::npos);
    CHECK(error_kind_of([&] { parse_idx_labels(b, "mem"); }) == ErrorKind::Format);
  }

  TEST_CASE("bad magic and truncation") {
    auto b = image_header(kIdxLabelMagic, 1, 28, 28);
    b.resize(b.size() + 784);
    CHECK(error_kind_of([&] { parse_idx_images(b, "x"); }) == ErrorKind::Format);
    auto t = image_header(kIdxImageMagic, 2, 28, 28);
    t.resize(t.size() + 784);
    std::string msg = message_of([&] { parse_idx_images(t, "short.idx"); });
    CHECK(msg.find("short.idx") != std::string::npos);
    CHECK(msg.find("offset") != std::string::npos);
    CHECK(error_kind_of([&] { parse_idx_images({0, 0, 8}, "x"); }) == ErrorKind::Format);
  }

  TEST_CASE("fixture dataset") {
    auto ds = load_mnist(fixture_dir());
    CHECK(ds.train.count == 100);
    CHECK(ds.test.count == 100);
    CHECK(ds.train.pixels.size() == 100u * 784u);
    CHECK(ds.train.labels[0] == 5);
    CHECK(ds.test.labels[0] == 7);
    Tensor x = mnist_images(ds.train, {0, 1});
    CHECK(x.shape() == Shape{2, 784});
    for (double v : x.values()) CHECK((v >= 0.0 && v <= 1.0));
    CHECK(mnist_labels(ds.test, {0}).values() == std::vector<double>{7.0});
  }

  TEST_CASE("missing directory is an io error") {
    CHECK(error_kind_of([] { load_mnist("/nonexistent/mnist"); }) == ErrorKind::Io);
  }

  TEST_CASE("fetch from a file mirror") {
    fs::path dir = scratch_dir("fetch");
    fetch_mnist("file://" + fixture_dir() + "/gz/", dir.string());
    auto ds = load_mnist(dir.string());
    auto ref = load_mnist(fixture_dir());
    CHECK(ds.train.pixels == ref.train.pixels);
    CHECK(ds.test.labels == ref.test.labels);
    fs::remove_all(dir);
  }

  TEST_CASE("fetch from a missing mirror fails with an io error") {
    fs::path dir = scratch_dir("fetch_missing");
    CHECK(error_kind_of([&] { fetch_mnist("file:///nonexistent/mirror/", dir.string()); }) == ErrorKind::Io);
    fs::remove_all(dir);
  }
}
