#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "ifc/util.hpp"

using namespace ifc;

TEST_CASE("byte writer/reader round-trip little endian") {
    ByteWriter w;
    w.u8(0xab);
    w.u16(0x1234);
    w.u32(0xdeadbeef);
    w.i16(-513);
    w.f32(1.5f);
    w.text("IFR1");
    std::vector<uint8_t> buf = w.take();
    CHECK(buf[1] == 0x34);  // u16 low byte first
    CHECK(buf[2] == 0x12);

    ByteReader r(buf);
    CHECK(r.u8() == 0xab);
    CHECK(r.u16() == 0x1234);
    CHECK(r.u32() == 0xdeadbeef);
    CHECK(r.i16() == -513);
    CHECK(r.f32() == 1.5f);
    CHECK(r.text(4) == "IFR1");
    CHECK(r.done());
}

TEST_CASE("byte reader refuses to run past the end") {
    std::vector<uint8_t> buf = {1, 2};
    ByteReader r(buf);
    r.u16();
    CHECK_THROWS_AS(r.u8(), Error);
}

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex({}) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const char* abc = "abc";
    std::span<const uint8_t> s{reinterpret_cast<const uint8_t*>(abc), 3};
    CHECK(sha256_hex(s) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("file round-trip and atomic replace") {
    std::string path = (std::filesystem::temp_directory_path() / "ifc_util_test.bin").string();
    std::vector<uint8_t> payload = {0, 1, 2, 255, 254};
    write_file(path, payload);
    CHECK(read_file(path) == payload);
    std::vector<uint8_t> payload2 = {9, 9};
    write_file_atomic(path, payload2);
    CHECK(read_file(path) == payload2);
    CHECK(sha256_file_hex(path) == sha256_hex(payload2));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_file(path), Error);
}
