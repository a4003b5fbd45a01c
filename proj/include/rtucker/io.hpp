#pragma once

// Tensor file formats.
//
//   .dts  binary dense: "DTNS", u32 version (=1), u32 order N, N x u64 dims,
//         then prod(dims) little-endian f64 values in first-mode-fastest order.
//   .tns  FROSTT text: one entry per line, N 1-based indices then a value;
//         lines starting with '#' are comments.

#include "rtucker/sparse.hpp"
#include "rtucker/tensor.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

namespace rtucker::io {

class format_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
void put_le(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    std::array<char, sizeof(T)> buf{};
    std::memcpy(buf.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    os.write(buf.data(), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    std::array<char, sizeof(T)> buf{};
    if (!is.read(buf.data(), sizeof(T))) throw format_error("dts: unexpected end of stream");
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    T v;
    std::memcpy(&v, buf.data(), sizeof(T));
    return v;
}

}  // namespace detail

inline constexpr std::array<char, 4> kDtsMagic{'D', 'T', 'N', 'S'};
inline constexpr std::uint32_t kDtsVersion = 1;

inline void write_dts(std::ostream& os, const DenseTensor& t) {
    os.write(kDtsMagic.data(), 4);
    detail::put_le<std::uint32_t>(os, kDtsVersion);
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.order()));
    for (Index d : t.shape().dims()) detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(d));
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(t.raw()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    } else {
        for (double v : t.data()) detail::put_le<double>(os, v);
    }
    if (!os) throw format_error("dts: write failed");
}

inline DenseTensor read_dts(std::istream& is) {
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), 4) || magic != kDtsMagic) throw format_error("dts: bad magic");
    const auto version = detail::get_le<std::uint32_t>(is);
    if (version != kDtsVersion) throw format_error("dts: unsupported version " + std::to_string(version));
    const auto order = detail::get_le<std::uint32_t>(is);
    if (order == 0) throw format_error("dts: order must be >= 1");
    std::vector<Index> dims;
    for (std::uint32_t k = 0; k < order; ++k) {
        const auto d = detail::get_le<std::uint64_t>(is);
        if (d == 0 || d > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()))
            throw format_error("dts: invalid dimension in mode " + std::to_string(k + 1));
        dims.push_back(static_cast<Index>(d));
    }
    Shape shape(std::move(dims));
    std::vector<double> data(static_cast<std::size_t>(shape.numel()));
    if constexpr (std::endian::native == std::endian::little) {
        if (!is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double))))
            throw format_error("dts: truncated payload");
    } else {
        for (auto& v : data) v = detail::get_le<double>(is);
    }
    return DenseTensor(std::move(shape), std::move(data));
}

inline void save_dts(const std::string& path, const DenseTensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error("cannot open " + path + " for writing");
    write_dts(os, t);
}

inline DenseTensor load_dts(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error("cannot open " + path);
    return read_dts(is);
}

/// Parses FROSTT text. When `shape` is empty the mode sizes are the maximum index seen.
inline SparseTensorCoo read_tns(std::istream& is, std::optional<Shape> shape = std::nullopt) {
    std::vector<Index> idx;
    std::vector<double> vals;
    Index order = -1;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string s; ls >> s;) tok.push_back(s);
        if (tok.size() < 2) throw format_error("tns: line " + std::to_string(lineno) + ": expected indices and a value");
        const Index n = static_cast<Index>(tok.size()) - 1;
        if (order < 0) order = n;
        if (n != order)
            throw format_error("tns: line " + std::to_string(lineno) + ": expected " + std::to_string(order) +
                               " indices, got " + std::to_string(n));
        for (Index k = 0; k < n; ++k) {
            std::size_t used = 0;
            long long v = 0;
            try {
                v = std::stoll(tok[static_cast<std::size_t>(k)], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok[static_cast<std::size_t>(k)].size() || v < 1)
                throw format_error("tns: line " + std::to_string(lineno) + ": bad index '" +
                                   tok[static_cast<std::size_t>(k)] + "'");
            idx.push_back(static_cast<Index>(v - 1));
        }
        try {
            std::size_t used = 0;
            vals.push_back(std::stod(tok.back(), &used));
            if (used != tok.back().size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw format_error("tns: line " + std::to_string(lineno) + ": bad value '" + tok.back() + "'");
        }
    }
    if (order < 0) throw format_error("tns: no entries");
    if (!shape) {
        std::vector<Index> dims(static_cast<std::size_t>(order), 1);
        for (std::size_t e = 0; e < vals.size(); ++e)
            for (Index k = 0; k < order; ++k)
                dims[static_cast<std::size_t>(k)] =
                    std::max(dims[static_cast<std::size_t>(k)], idx[e * static_cast<std::size_t>(order) + static_cast<std::size_t>(k)] + 1);
        shape = Shape(std::move(dims));
    } else if (shape->order() != order) {
        throw format_error("tns: file order does not match requested shape");
    }
    SparseTensorCoo out(*shape);
    for (std::size_t e = 0; e < vals.size(); ++e)
        out.push(std::span<const Index>(idx.data() + e * static_cast<std::size_t>(order), static_cast<std::size_t>(order)),
                 vals[e]);
    out.canonicalize();
    return out;
}

inline void write_tns(std::ostream& os, const SparseTensorCoo& t) {
    os.precision(17);
    for (Index e = 0; e < t.nnz(); ++e) {
        for (Index i : t.index(e)) os << (i + 1) << ' ';
        os << t.value(e) << '\n';
    }
}

inline SparseTensorCoo load_tns(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw format_error("cannot open " + path);
    return read_tns(is);
}

inline void save_tns(const std::string& path, const SparseTensorCoo& t) {
    std::ofstream os(path);
    if (!os) throw format_error("cannot open " + path + " for writing");
    write_tns(os, t);
    if (!os) throw format_error("tns: write failed");
}

}  // namespace rtucker::io
