#include "blaq/mnist.hpp"

#include <curl/curl.h>
#include <zlib.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "blaq/errors.hpp"

namespace blaq {

namespace fs = std::filesystem;

namespace {

const char* const kFiles[4] = {"train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
                               "t10k-labels-idx1-ubyte"};

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off, const std::string& name) {
  if (off + 4 > b.size())
    raise(ErrorKind::Format, name + ": truncated header at offset " + std::to_string(off));
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

MnistSplit load_split(const std::string& dir, const char* images, const char* labels) {
  IdxImages img = read_idx_images((fs::path(dir) / images).string());
  std::vector<std::uint8_t> lab = read_idx_labels((fs::path(dir) / labels).string());
  if (img.rows != 28 || img.cols != 28)
    raise(ErrorKind::Format, std::string(images) + ": expected 28x28 images, got " + std::to_string(img.rows) + "x" +
                                 std::to_string(img.cols));
  if (lab.size() != img.count)
    raise(ErrorKind::Format, std::string(labels) + ": " + std::to_string(lab.size()) + " labels for " +
                                 std::to_string(img.count) + " images");
  return MnistSplit{img.count, std::move(img.pixels), std::move(lab)};
}

size_t write_cb(char* data, size_t size, size_t n, void* user) {
  return std::fwrite(data, size, n, static_cast<std::FILE*>(user)) * size;
}

void download(const std::string& url, const fs::path& dest) {
  std::FILE* f = std::fopen(dest.string().c_str(), "wb");
  if (!f) raise(ErrorKind::Io, "cannot write " + dest.string());
  CURL* curl = curl_easy_init();
  if (!curl) {
    std::fclose(f);
    raise(ErrorKind::Io, "curl initialisation failed");
  }
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, write_cb);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, f);
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
  CURLcode rc = curl_easy_perform(curl);
  curl_easy_cleanup(curl);
  std::fclose(f);
  if (rc != CURLE_OK) {
    fs::remove(dest);
    raise(ErrorKind::Io, "download of " + url + " failed: " + curl_easy_strerror(rc));
  }
}

void gunzip(const fs::path& src, const fs::path& dest) {
  gzFile in = gzopen(src.string().c_str(), "rb");
  if (!in) raise(ErrorKind::Io, "cannot open " + src.string());
  std::ofstream out(dest, std::ios::binary);
  char buf[1 << 16];
  int n;
  while ((n = gzread(in, buf, sizeof buf)) > 0) out.write(buf, n);
  bool bad = n < 0;
  gzclose(in);
  if (bad || !out) {
    out.close();
    fs::remove(dest);
    raise(ErrorKind::Format, src.string() + ": not a valid gzip stream");
  }
}

}  // namespace

IdxImages parse_idx_images(const std::vector<std::uint8_t>& b, const std::string& name) {
  std::uint32_t magic = read_be32(b, 0, name);
  if (magic != kIdxImageMagic)
    raise(ErrorKind::Format, name + ": bad image magic " + std::to_string(magic) + " at offset 0");
  IdxImages img;
  img.count = read_be32(b, 4, name);
  img.rows = read_be32(b, 8, name);
  img.cols = read_be32(b, 12, name);
  const std::size_t need = img.count * img.rows * img.cols;
  if (b.size() - 16 < need)
    raise(ErrorKind::Format, name + ": truncated pixel data at offset " + std::to_string(b.size()) + ", expected " +
                                 std::to_string(16 + need) + " bytes");
  img.pixels.assign(b.begin() + 16, b.begin() + 16 + static_cast<std::ptrdiff_t>(need));
  return img;
}

std::vector<std::uint8_t> parse_idx_labels(const std::vector<std::uint8_t>& b, const std::string& name) {
  std::uint32_t magic = read_be32(b, 0, name);
  if (magic != kIdxLabelMagic)
    raise(ErrorKind::Format, name + ": bad label magic " + std::to_string(magic) + " at offset 0");
  const std::size_t count = read_be32(b, 4, name);
  if (b.size() - 8 < count)
    raise(ErrorKind::Format, name + ": truncated label data at offset " + std::to_string(b.size()) + ", expected " +
                                 std::to_string(8 + count) + " bytes");
  std::vector<std::uint8_t> labels(b.begin() + 8, b.begin() + 8 + static_cast<std::ptrdiff_t>(count));
  for (std::size_t i = 0; i < count; ++i)
    if (labels[i] > 9)
      raise(ErrorKind::Format, name + ": label " + std::to_string(labels[i]) + " out of range at offset " +
                                   std::to_string(8 + i));
  return labels;
}

IdxImages read_idx_images(const std::string& path) { return parse_idx_images(read_file(path), path); }
std::vector<std::uint8_t> read_idx_labels(const std::string& path) { return parse_idx_labels(read_file(path), path); }

MnistDataset load_mnist(const std::string& dir) {
  MnistDataset ds;
  ds.train = load_split(dir, kFiles[0], kFiles[1]);
  ds.test = load_split(dir, kFiles[2], kFiles[3]);
  return ds;
}

std::string default_mnist_dir() {
  if (const char* d = std::getenv("BLAQ_MNIST_DIR"); d && *d) return d;
  if (const char* h = std::getenv("HOME"); h && *h) return (fs::path(h) / ".cache" / "mnist").string();
  return ".cache/mnist";
}

void fetch_mnist(const std::string& mirror_url, const std::string& dir) {
  if (mirror_url.empty()) raise(ErrorKind::Config, "fetch requested but mirror_url is empty");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(ErrorKind::Io, "cannot create " + dir + ": " + ec.message());
  std::string base = mirror_url;
  if (base.back() != '/') base += '/';
  for (const char* name : kFiles) {
    fs::path raw = fs::path(dir) / name;
    if (fs::exists(raw)) continue;
    fs::path gz = raw;
    gz += ".gz";
    download(base + name + ".gz", gz);
    gunzip(gz, raw);
    fs::remove(gz);
  }
}

}  // namespace blaq
