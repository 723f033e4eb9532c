/*
 * Copyright 2026 The tangentscope Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "tscope/tensor_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace tscope {

namespace {

constexpr std::array<char, 4> magic{'A', 'G', 'T', '1'};
constexpr std::size_t fixed_header = 8;

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) {
        v = (v << 8) | p[i];
    }
    return v;
}

std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
        v = (v << 8) | p[i];
    }
    return v;
}

void check_dims(const std::vector<std::uint64_t>& dims) {
    require(!dims.empty() && dims.size() <= 4, ErrorCode::bad_ndim,
            "ndim must be in 1..4, got " + std::to_string(dims.size()));
    for (auto d : dims) {
        require(d >= 1, ErrorCode::bad_ndim, "every dimension must be >= 1");
    }
}

} // namespace

std::uint64_t Tensor::element_count() const {
    std::uint64_t n = 1;
    for (auto d : dims) {
        n *= d;
    }
    return n;
}

std::size_t dtype_size(std::uint8_t dtype_code) {
    switch (dtype_code) {
    case dtype_f32: return 4;
    case dtype_f64: return 8;
    default: throw Error(ErrorCode::bad_dtype, "dtype code " + std::to_string(dtype_code));
    }
}

std::uint64_t agt1_file_size(const std::vector<std::uint64_t>& dims, std::uint8_t dtype_code) {
    std::uint64_t n = 1;
    for (auto d : dims) {
        n *= d;
    }
    return fixed_header + 8 * dims.size() + n * dtype_size(dtype_code);
}

void write_tensor(const std::filesystem::path& path, const Tensor& t, std::uint8_t dtype_code) {
    check_dims(t.dims);
    const std::size_t width = dtype_size(dtype_code);
    require(t.data.size() == t.element_count(), ErrorCode::dimension_mismatch,
            "data length does not match dims");
    for (double v : t.data) {
        require(std::isfinite(v), ErrorCode::non_finite, "refusing to write non-finite value to " + path.string());
    }

    std::vector<unsigned char> buf;
    buf.reserve(agt1_file_size(t.dims, dtype_code));
    buf.insert(buf.end(), magic.begin(), magic.end());
    buf.push_back(dtype_code);
    buf.push_back(static_cast<unsigned char>(t.dims.size()));
    buf.push_back(0);
    buf.push_back(0);
    for (auto d : t.dims) {
        put_u64(buf, d);
    }
    for (double v : t.data) {
        if (width == 8) {
            put_u64(buf, std::bit_cast<std::uint64_t>(v));
        } else {
            put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        }
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    require(static_cast<bool>(out), ErrorCode::io, "write failed for " + path.string());
}

void write_tensor(const std::filesystem::path& path, const Matrix& m, std::uint8_t dtype_code) {
    Tensor t;
    t.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
    t.data.assign(m.data(), m.data() + m.size());
    write_tensor(path, t, dtype_code);
}

void write_vector(const std::filesystem::path& path, const Vector& v, std::uint8_t dtype_code) {
    Tensor t;
    t.dims = {static_cast<std::uint64_t>(v.size())};
    t.data.assign(v.data(), v.data() + v.size());
    write_tensor(path, t, dtype_code);
}

Tensor read_tensor_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    require(buf.size() >= fixed_header, ErrorCode::truncated, "header shorter than 8 bytes in " + path.string());
    require(std::memcmp(buf.data(), magic.data(), magic.size()) == 0, ErrorCode::bad_magic,
            "not an AGT1 file: " + path.string());
    const std::uint8_t dtype = buf[4];
    require(dtype == dtype_f32 || dtype == dtype_f64, ErrorCode::bad_dtype,
            "dtype code " + std::to_string(dtype) + " in " + path.string());
    const std::size_t ndim = buf[5];
    require(ndim >= 1 && ndim <= 4, ErrorCode::bad_ndim, "ndim " + std::to_string(ndim) + " in " + path.string());
    require(buf.size() >= fixed_header + 8 * ndim, ErrorCode::truncated, "dims cut short in " + path.string());

    Tensor t;
    for (std::size_t i = 0; i < ndim; ++i) {
        t.dims.push_back(get_u64(buf.data() + fixed_header + 8 * i));
    }
    check_dims(t.dims);
    const std::size_t width = dtype_size(dtype);
    const std::uint64_t expected = agt1_file_size(t.dims, dtype);
    require(buf.size() >= expected, ErrorCode::truncated,
            path.string() + ": expected " + std::to_string(expected) + " bytes, found " + std::to_string(buf.size()));
    require(buf.size() == expected, ErrorCode::trailing_bytes,
            path.string() + ": " + std::to_string(buf.size() - expected) + " bytes past the payload");

    const unsigned char* p = buf.data() + fixed_header + 8 * ndim;
    const std::uint64_t n = t.element_count();
    t.data.resize(n);
    for (std::uint64_t i = 0; i < n; ++i, p += width) {
        t.data[i] = width == 8 ? std::bit_cast<double>(get_u64(p))
                               : static_cast<double>(std::bit_cast<float>(get_u32(p)));
    }
    return t;
}

Matrix to_matrix(const Tensor& t) {
    check_dims(t.dims);
    const auto cols = static_cast<Index>(t.dims.back());
    const auto rows = static_cast<Index>(t.element_count() / t.dims.back());
    Matrix m(t.dims.size() == 1 ? cols : rows, t.dims.size() == 1 ? 1 : cols);
    std::memcpy(m.data(), t.data.data(), t.data.size() * sizeof(double));
    return m;
}

Matrix read_tensor(const std::filesystem::path& path) { return to_matrix(read_tensor_raw(path)); }

} // namespace tscope
