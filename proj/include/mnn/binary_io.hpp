#pragma once

// Little-endian fixed-width encoding shared by the MNN1 and MLP1 containers.

#include <bit>
#include <fstream>
#include <iterator>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mnn/error.hpp"

namespace mnn::binary {

using Bytes = std::vector<std::uint8_t>;

class Writer {
public:
    void magic(std::string_view m) {
        for (char c : m) buf_.push_back(static_cast<std::uint8_t>(c));
    }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void f64(double v) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }

    /// Row-major dump of a dense matrix or vector.
    template <typename Derived>
    void matrix(const Eigen::DenseBase<Derived>& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }

    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    /// Consumes a 4-byte magic tag; anything else is a version mismatch.
    void expect_magic(std::string_view m) {
        if (data_.size() < m.size())
            throw FormatError(FormatError::Kind::Truncated, "stream shorter than its header");
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (data_[i] != static_cast<std::uint8_t>(m[i]))
                throw FormatError(FormatError::Kind::VersionMismatch,
                                  "expected header '" + std::string(m) + "'");
        }
        pos_ = m.size();
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{data_[pos_ + i]} << (8 * i);
        pos_ += 4;
        return v;
    }

    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= std::uint64_t{data_[pos_ + i]} << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(bits);
    }

    template <typename Derived>
    void matrix(Eigen::DenseBase<Derived>& m) {
        need(static_cast<std::size_t>(m.rows()) * static_cast<std::size_t>(m.cols()) * 8);
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
    }

    std::size_t remaining() const noexcept { return data_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n)
            throw FormatError(FormatError::Kind::Truncated, "stream truncated");
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

inline Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const Bytes& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

} // namespace mnn::binary
