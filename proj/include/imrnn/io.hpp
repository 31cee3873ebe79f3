#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

namespace imrnn::io {

/// Writes through a sibling temp file and renames it over `path`, so readers
/// never observe a partially written artifact.
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer);

std::string read_text_file(const std::filesystem::path& path);

void put_u8(std::ostream& out, std::uint8_t v);
void put_u16(std::ostream& out, std::uint16_t v);
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_f32(std::ostream& out, float v);
void put_f64(std::ostream& out, double v);

/// Little-endian cursor over an in-memory byte buffer. Reads past the end
/// call the supplied truncation handler with the failing offset.
class ByteReader {
  public:
    using TruncationHandler = std::function<void(std::size_t offset, std::size_t wanted)>;

    ByteReader(std::string bytes, TruncationHandler on_truncated);

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    double f64();
    std::string bytes(std::size_t n);

    std::size_t offset() const noexcept { return offset_; }
    std::size_t remaining() const noexcept { return data_.size() - offset_; }

  private:
    const unsigned char* take(std::size_t n);

    std::string data_;
    std::size_t offset_ = 0;
    TruncationHandler on_truncated_;
};

}  // namespace imrnn::io
