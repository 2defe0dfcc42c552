#include "cd2/signature.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "cd2/error.hpp"

namespace cd2::features {

namespace {

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void put(std::uint64_t value, int bits) {
    for (int i = bits - 1; i >= 0; --i) {
      if (used_ == 0) out_.push_back(0);
      if ((value >> i) & 1U) out_.back() |= static_cast<std::uint8_t>(0x80U >> used_);
      used_ = (used_ + 1) & 7;
    }
  }

 private:
  std::vector<std::uint8_t>& out_;
  int used_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint64_t get(int bits) {
    std::uint64_t v = 0;
    for (int i = 0; i < bits; ++i) {
      const std::uint8_t byte = in_[pos_ >> 3];
      v = (v << 1) | ((byte >> (7 - (pos_ & 7))) & 1U);
      ++pos_;
    }
    return v;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void put_u32(std::vector<std::uint8_t>& out, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[at + i] = static_cast<std::uint8_t>(v >> (24 - 8 * i));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  return (std::uint32_t{in[at]} << 24) | (std::uint32_t{in[at + 1]} << 16) |
         (std::uint32_t{in[at + 2]} << 8) | std::uint32_t{in[at + 3]};
}

int ceil_log2(std::uint64_t s) { return s <= 1 ? 0 : std::bit_width(s - 1); }

}  // namespace

int signature_bin_bits(std::uint64_t pixels, int patch_count) {
  const int bits = ceil_log2(pixels);
  if (patch_count == 1 && std::has_single_bit(pixels)) return bits + 1;
  return bits;
}

std::uint64_t signature_payload_bits(const FeatureSet& fs) {
  const auto pixels = static_cast<std::uint64_t>(fs.width) * static_cast<std::uint64_t>(fs.height);
  return static_cast<std::uint64_t>(fs.grid.patch_count()) * 2 * kBins *
         static_cast<std::uint64_t>(signature_bin_bits(pixels, fs.grid.patch_count()));
}

bool has_signature_magic(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, std::begin(kSignatureMagic));
}

std::vector<std::uint8_t> encode_signature(const FeatureSet& fs) {
  if (fs.scheme.id() != BinningScheme::kDefaultId || !(fs.scheme == default_bin_edges())) {
    throw Error(ErrorCode::Unencodable, "only the default binning scheme has a wire identifier");
  }
  if (fs.grid.rows() > 255 || fs.grid.cols() > 255) {
    throw Error(ErrorCode::Unencodable, "grid dimensions above 255 do not fit the header");
  }
  fs.validate();

  std::vector<std::uint8_t> out(kSignatureHeaderSize);
  out.reserve(kSignatureHeaderSize + signature_payload_bits(fs) / 8 + 1);
  std::copy(std::begin(kSignatureMagic), std::end(kSignatureMagic), out.begin());
  out[4] = kSignatureVersion;
  out[5] = fs.scheme.id();
  put_u32(out, 6, static_cast<std::uint32_t>(fs.width));
  put_u32(out, 10, static_cast<std::uint32_t>(fs.height));
  out[14] = static_cast<std::uint8_t>(fs.grid.rows());
  out[15] = static_cast<std::uint8_t>(fs.grid.cols());

  const auto pixels = static_cast<std::uint64_t>(fs.width) * static_cast<std::uint64_t>(fs.height);
  const int bits = signature_bin_bits(pixels, fs.grid.patch_count());
  BitWriter writer(out);
  for (std::size_t p = 0; p < fs.hist_x.size(); ++p) {
    for (auto c : fs.hist_x[p].counts) writer.put(c, bits);
    for (auto c : fs.hist_y[p].counts) writer.put(c, bits);
  }
  return out;
}

FeatureSet decode_signature(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4 && !has_signature_magic(bytes)) {
    throw Error(ErrorCode::BadMagic, "not a CD2 signature");
  }
  if (bytes.size() < kSignatureHeaderSize) {
    throw Error(ErrorCode::TruncatedPayload, "signature shorter than its 16-byte header");
  }
  if (bytes[4] != kSignatureVersion) {
    throw Error(ErrorCode::VersionMismatch, "signature version " + std::to_string(bytes[4]) +
                                                ", expected " + std::to_string(kSignatureVersion));
  }
  if (bytes[5] != BinningScheme::kDefaultId) {
    throw Error(ErrorCode::SchemeMismatch, "unknown binning scheme id " + std::to_string(bytes[5]));
  }
  const std::uint32_t width = get_u32(bytes, 6);
  const std::uint32_t height = get_u32(bytes, 10);
  const int rows = bytes[14];
  const int cols = bytes[15];
  if (width < 3 || height < 3 || width > 0x7fffffffU || height > 0x7fffffffU) {
    throw Error(ErrorCode::InvalidImage, "header declares an invalid image size");
  }

  FeatureSet fs;
  fs.width = static_cast<int>(width);
  fs.height = static_cast<int>(height);
  fs.grid = PatchGrid(rows, cols, fs.width, fs.height);
  fs.scheme = default_bin_edges();

  const std::uint64_t payload_bits = signature_payload_bits(fs);
  const std::uint64_t payload_bytes = (payload_bits + 7) / 8;
  const std::uint64_t available = bytes.size() - kSignatureHeaderSize;
  if (available < payload_bytes) {
    throw Error(ErrorCode::TruncatedPayload, "payload has " + std::to_string(available) + " bytes, expected " +
                                                 std::to_string(payload_bytes));
  }
  if (available > payload_bytes) {
    throw Error(ErrorCode::TrailingData, std::to_string(available - payload_bytes) + " bytes after payload");
  }

  const int bits = signature_bin_bits(static_cast<std::uint64_t>(width) * height, fs.grid.patch_count());
  BitReader reader(bytes.subspan(kSignatureHeaderSize));
  const auto n = static_cast<std::size_t>(fs.grid.patch_count());
  fs.hist_x.resize(n);
  fs.hist_y.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    const auto limit = fs.grid.patch_pixels(static_cast<int>(p) / cols, static_cast<int>(p) % cols);
    for (auto* h : {&fs.hist_x[p], &fs.hist_y[p]}) {
      for (auto& c : h->counts) {
        const std::uint64_t v = reader.get(bits);
        if (v > limit) {
          throw Error(ErrorCode::CountOverflow, "bin count " + std::to_string(v) + " exceeds patch size " +
                                                    std::to_string(limit));
        }
        c = static_cast<std::uint32_t>(v);
      }
    }
  }
  fs.validate();
  return fs;
}

}  // namespace cd2::features
