#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "ifg/errors.hpp"

namespace ifg {

// Little-endian binary writer/reader for on-disk artifacts. All multi-byte
// fields are stored LE regardless of host order; readers report the byte
// offset of the first problem they see.

class BinaryWriter {
  public:
    explicit BinaryWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw FormatError("cannot open '" + path + "' for writing");
    }

    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u16(std::uint16_t v) { le(v); }
    void u32(std::uint32_t v) { le(v); }
    void u64(std::uint64_t v) { le(v); }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        le(bits);
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        le(bits);
    }
    void magic(const char (&tag)[9]) { bytes(tag, 8); }

    void close() {
        out_.close();
        if (!out_) throw FormatError("write to '" + path_ + "' failed");
    }

  private:
    template <typename T>
    void le(T v) {
        unsigned char buf[sizeof(T)];
        for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(buf, sizeof(T));
    }

    std::string path_;
    std::ofstream out_;
};

class BinaryReader {
  public:
    explicit BinaryReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw FormatError("cannot open '" + path + "' for reading");
    }

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw FormatError("'" + path_ + "': truncated at byte offset " + std::to_string(offset_));
        offset_ += n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint16_t u16() { return le<std::uint16_t>(); }
    std::uint32_t u32() { return le<std::uint32_t>(); }
    std::uint64_t u64() { return le<std::uint64_t>(); }
    float f32() {
        std::uint32_t bits = le<std::uint32_t>();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double f64() {
        std::uint64_t bits = le<std::uint64_t>();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    void expect_magic(const char (&tag)[9]) {
        char got[8];
        bytes(got, 8);
        if (std::memcmp(got, tag, 8) != 0)
            throw FormatError("'" + path_ + "': bad magic at byte offset 0 (expected '" + std::string(tag, 8) +
                              "', got '" + std::string(got, 8) + "')");
    }
    bool at_eof() {
        in_.peek();
        return in_.eof();
    }
    std::size_t offset() const { return offset_; }
    const std::string& path() const { return path_; }

  private:
    template <typename T>
    T le() {
        unsigned char buf[sizeof(T)];
        bytes(buf, sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
        return v;
    }

    std::string path_;
    std::ifstream in_;
    std::size_t offset_ = 0;
};

// Fixed-precision decimal formatting; used for every CSV/SVG number so that
// identical values always serialize to identical bytes.
inline std::string fmt_fixed(double v, int digits = 6) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "' for reading");
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out << content;
    out.close();
    if (!out) throw FormatError("write to '" + path + "' failed");
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            std::size_t end = i;
            if (end > start && text[end - 1] == '\r') --end;
            if (end > start || i < text.size()) out.push_back(text.substr(start, end - start));
            start = i + 1;
        }
    }
    while (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

}  // namespace ifg
