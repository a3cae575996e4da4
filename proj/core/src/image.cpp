// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgecrack/image.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "edgecrack/error.hpp"

namespace edgecrack {

namespace fs = std::filesystem;

ImageBuffer make_image(int width, int height, int channels, std::uint8_t fill) {
  ImageBuffer img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.pixels.assign(static_cast<std::size_t>(width) * height * channels, fill);
  return img;
}

std::string_view to_string(Label label) noexcept {
  return label == Label::Positive ? "Positive" : "Negative";
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint(const char* what) {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      ++pos_;
      if (++digits > 9) fail(std::string(what) + " is too large");
    }
    if (digits == 0) fail(std::string("expected ") + what);
    return value;
  }

  // Exactly one whitespace byte separates maxval from the payload.
  void single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      fail("expected whitespace after maxval");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::ParseError, what + " at offset " + std::to_string(pos_));
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

ImageBuffer decode_image(std::span<const std::uint8_t> bytes) {
  HeaderReader r(bytes);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    r.fail("not a binary PPM/PGM file");
  }
  const int channels = bytes[1] == '6' ? 3 : 1;
  r.advance(2);
  const long width = r.read_uint("width");
  const long height = r.read_uint("height");
  const long maxval = r.read_uint("maxval");
  if (width < 1 || height < 1) r.fail("zero image dimension");
  if (maxval != 255) {
    throw Error(Errc::UnsupportedMaxval, "maxval " + std::to_string(maxval) + " (only 255)");
  }
  r.single_space();

  const std::size_t payload = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - r.pos() < payload) r.fail("truncated pixel payload");

  ImageBuffer img;
  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  img.channels = channels;
  auto first = bytes.begin() + static_cast<std::ptrdiff_t>(r.pos());
  img.pixels.assign(first, first + static_cast<std::ptrdiff_t>(payload));
  return img;
}

std::vector<std::uint8_t> encode_image(const ImageBuffer& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw Error(Errc::WrongChannelCount, "only 1 or 3 channels can be written");
  }
  const std::string header = std::string(img.channels == 3 ? "P6" : "P5") + "\n" +
                             std::to_string(img.width) + " " + std::to_string(img.height) +
                             "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

ImageBuffer read_image(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_image(bytes);
}

void write_image(const ImageBuffer& img, const fs::path& path) {
  const auto bytes = encode_image(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

DatasetLoad load_dataset_dir(const fs::path& root) {
  DatasetLoad result;
  for (auto [dir, label] : {std::pair{"negative", Label::Negative},
                            std::pair{"positive", Label::Positive}}) {
    const fs::path class_dir = root / dir;
    std::error_code ec;
    if (!fs::is_directory(class_dir, ec)) {
      throw Error(Errc::MissingClassDir, class_dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      try {
        result.samples.push_back(LabeledSample{read_image(file), label, file.string()});
      } catch (const Error&) {
        ++result.skipped;
      }
    }
  }
  return result;
}

}  // namespace edgecrack
