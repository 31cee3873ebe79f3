#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "imrnn/io.hpp"
#include "imrnn/parallel.hpp"
#include "imrnn/random.hpp"
#include "synthetic.hpp"

using namespace imrnn;

TEST(Io, WriteAtomicReplacesWholeFile) {
    testkit::TempDir dir("io");
    const auto p = dir / "f.txt";
    io::write_atomic(p, [](std::ostream& o) { o << "first"; });
    io::write_atomic(p, [](std::ostream& o) { o << "second"; });
    EXPECT_EQ(io::read_text_file(p), "second");
    EXPECT_THROW(io::write_atomic(p, [](std::ostream& o) {
                     o << "partial";
                     throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
    EXPECT_EQ(io::read_text_file(p), "second");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
    EXPECT_EQ(files, 1u);
}

TEST(Io, LittleEndianRoundTrip) {
    std::ostringstream out;
    io::put_u8(out, 0xAB);
    io::put_u16(out, 0x1234);
    io::put_u32(out, 0xDEADBEEF);
    io::put_u64(out, 0x0102030405060708ULL);
    io::put_f32(out, 1.5f);
    io::put_f64(out, -2.25);
    const auto bytes = out.str();
    EXPECT_EQ(static_cast<unsigned char>(bytes[1]), 0x34);
    std::size_t failed_at = 0;
    io::ByteReader r(bytes, [&](std::size_t off, std::size_t) {
        failed_at = off;
        throw std::out_of_range("short");
    });
    EXPECT_EQ(r.u8(), 0xAB);
    EXPECT_EQ(r.u16(), 0x1234);
    EXPECT_EQ(r.u32(), 0xDEADBEEFu);
    EXPECT_EQ(r.u64(), 0x0102030405060708ULL);
    EXPECT_EQ(r.f32(), 1.5f);
    EXPECT_EQ(r.f64(), -2.25);
    EXPECT_EQ(r.remaining(), 0u);
    EXPECT_THROW(r.u32(), std::out_of_range);
    EXPECT_EQ(failed_at, bytes.size());
}

TEST(Parallel, CoversEveryIndexOnce) {
    for (std::size_t workers : {1, 2, 5}) {
        std::vector<std::atomic<int>> hits(37);
        parallel_for(hits.size(), workers, [&](std::size_t w, std::size_t i) {
            EXPECT_EQ(i % std::min(workers, hits.size()), w);
            ++hits[i];
        });
        for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
}

TEST(Parallel, RethrowsWorkerException) {
    EXPECT_THROW(parallel_for(10, 3,
                              [](std::size_t, std::size_t i) {
                                  if (i == 7) throw std::runtime_error("x");
                              }),
                 std::runtime_error);
}

TEST(RandomTest, SeededAndUnbiasedRange) {
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
    Rng r(1);
    std::vector<int> counts(3, 0);
    for (int i = 0; i < 3000; ++i) ++counts[r.uniform_index(3)];
    for (int c : counts) EXPECT_NEAR(c, 1000, 150);
    double sum = 0, sq = 0;
    for (int i = 0; i < 20000; ++i) {
        const double x = r.normal();
        sum += x;
        sq += x * x;
    }
    EXPECT_NEAR(sum / 20000, 0.0, 0.03);
    EXPECT_NEAR(sq / 20000, 1.0, 0.05);
}
