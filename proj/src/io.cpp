#include "imrnn/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

#include "imrnn/error.hpp"

namespace imrnn::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer) {
    auto tmp = path;
    tmp += ".tmp";
    std::error_code ec;
    try {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        writer(out);
        out.flush();
        if (!out) throw IoError("write failed: " + tmp.string());
    } catch (...) {
        std::filesystem::remove(tmp, ec);
        throw;
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " +
                      ec.message());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

namespace {
template <typename T>
void put_raw(std::ostream& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.write(buf, sizeof(T));
}
}  // namespace

void put_u8(std::ostream& out, std::uint8_t v) { put_raw(out, v); }
void put_u16(std::ostream& out, std::uint16_t v) { put_raw(out, v); }
void put_u32(std::ostream& out, std::uint32_t v) { put_raw(out, v); }
void put_u64(std::ostream& out, std::uint64_t v) { put_raw(out, v); }
void put_f32(std::ostream& out, float v) { put_raw(out, v); }
void put_f64(std::ostream& out, double v) { put_raw(out, v); }

ByteReader::ByteReader(std::string bytes, TruncationHandler on_truncated)
    : data_(std::move(bytes)), on_truncated_(std::move(on_truncated)) {}

const unsigned char* ByteReader::take(std::size_t n) {
    if (remaining() < n) {
        on_truncated_(offset_, n);
        throw InternalError("truncation handler returned");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(data_.data()) + offset_;
    offset_ += n;
    return p;
}

namespace {
template <typename T>
T load_raw(const unsigned char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}
}  // namespace

std::uint8_t ByteReader::u8() { return load_raw<std::uint8_t>(take(1)); }
std::uint16_t ByteReader::u16() { return load_raw<std::uint16_t>(take(2)); }
std::uint32_t ByteReader::u32() { return load_raw<std::uint32_t>(take(4)); }
std::uint64_t ByteReader::u64() { return load_raw<std::uint64_t>(take(8)); }
float ByteReader::f32() { return load_raw<float>(take(4)); }
double ByteReader::f64() { return load_raw<double>(take(8)); }

std::string ByteReader::bytes(std::size_t n) {
    const auto* p = take(n);
    return {reinterpret_cast<const char*>(p), n};
}

}  // namespace imrnn::io
