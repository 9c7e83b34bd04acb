#pragma once

#include "zs3/errors.hpp"
#include "zs3/matrix.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

namespace zs3 {

/// Little-endian binary writer for checkpoint files.
class ByteWriter {
public:
    void magic(const char (&m)[5]) { buf_.append(m, 4); }
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void matrix(const Matrix& m) {
        for (double v : m.data) f64(v);
    }

    void to_file(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + path + "' for writing");
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw IoError("write failure on '" + path + "'");
    }

    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    explicit ByteReader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open '" + path + "' for reading");
    }

    void expect_magic(const char (&m)[5]) {
        char got[4];
        bytes(got, 4);
        if (std::memcmp(got, m, 4) != 0) throw FormatError(std::string("bad magic, expected ") + m);
    }
    std::uint8_t u8() {
        char b;
        bytes(&b, 1);
        return static_cast<std::uint8_t>(b);
    }
    std::uint16_t u16() {
        unsigned char b[2];
        bytes(reinterpret_cast<char*>(b), 2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(reinterpret_cast<char*>(b), 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    std::uint64_t u64() {
        unsigned char b[8];
        bytes(reinterpret_cast<char*>(b), 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    void matrix_into(Matrix& m) {
        for (double& v : m.data) v = f64();
    }

    void expect_end() {
        char c;
        in_.read(&c, 1);
        if (!in_.eof()) throw FormatError("trailing bytes in checkpoint file");
    }

private:
    void bytes(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n)) throw IoError("checkpoint file truncated");
    }

    std::ifstream in_;
};

} // namespace zs3
