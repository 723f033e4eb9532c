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
#include "test_util.hpp"
#include "tscope/manifest.hpp"
#include "tscope/rng.hpp"
#include "tscope/tensor_io.hpp"

#include <doctest.h>

#include <cstring>
#include <fstream>
#include <vector>

using namespace tscope;
using test::error_code_of;
using test::TempDir;

namespace {

std::vector<unsigned char> file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void put_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& b) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

} // namespace

TEST_CASE("zero 2x3 float64 layout") {
    TempDir dir("zero23");
    write_tensor(dir / "z.agt", Matrix(Matrix::Zero(2, 3)));
    const auto b = file_bytes(dir / "z.agt");
    // 8-byte fixed header, two u64 dims, 6 doubles.
    CHECK(b.size() == 72);
    CHECK(agt1_file_size({2, 3}, dtype_f64) == 72);
    CHECK(std::memcmp(b.data(), "AGT1", 4) == 0);
    CHECK(b[4] == dtype_f64);
    CHECK(b[5] == 2);
    CHECK(b[6] == 0);
    CHECK(b[7] == 0);
    CHECK(b[8] == 2);
    CHECK(b[16] == 3);
    for (std::size_t i = 24; i < b.size(); ++i) {
        CHECK(b[i] == 0);
    }
}

TEST_CASE("float32 one is 00 00 80 3F") {
    TempDir dir("one");
    Matrix m(1, 1);
    m(0, 0) = 1.0;
    write_tensor(dir / "one.agt", m, dtype_f32);
    const auto b = file_bytes(dir / "one.agt");
    REQUIRE(b.size() == 8 + 16 + 4);
    CHECK(b[24] == 0x00);
    CHECK(b[25] == 0x00);
    CHECK(b[26] == 0x80);
    CHECK(b[27] == 0x3F);
    CHECK(read_tensor(dir / "one.agt")(0, 0) == 1.0);
}

TEST_CASE("round trip") {
    TempDir dir("rt");
    const Matrix m = Rng(3).gaussian(7, 5);
    write_tensor(dir / "m.agt", m);
    CHECK(read_tensor(dir / "m.agt") == m);
    write_tensor(dir / "m32.agt", m, dtype_f32);
    CHECK((read_tensor(dir / "m32.agt") - m).cwiseAbs().maxCoeff() < 1e-6);

    Vector v = Vector::LinSpaced(4, 0.0, 3.0);
    write_vector(dir / "v.agt", v);
    const Tensor raw = read_tensor_raw(dir / "v.agt");
    CHECK(raw.dims == std::vector<std::uint64_t>{4});
    CHECK(read_tensor(dir / "v.agt").col(0) == v);
}

TEST_CASE("rank 3 folds leading dims") {
    TempDir dir("r3");
    Tensor t;
    t.dims = {2, 3, 4};
    for (int i = 0; i < 24; ++i) {
        t.data.push_back(i);
    }
    write_tensor(dir / "t.agt", t);
    const Matrix m = read_tensor(dir / "t.agt");
    CHECK(m.rows() == 6);
    CHECK(m.cols() == 4);
    CHECK(m(5, 3) == 23.0);
}

TEST_CASE("malformed files") {
    TempDir dir("bad");
    write_tensor(dir / "ok.agt", Matrix(Matrix::Ones(2, 2)));
    auto b = file_bytes(dir / "ok.agt");

    auto magic = b;
    magic[0] = 'X';
    put_bytes(dir / "magic.agt", magic);
    CHECK(error_code_of([&] { read_tensor(dir / "magic.agt"); }) == ErrorCode::bad_magic);

    auto dtype = b;
    dtype[4] = 9;
    put_bytes(dir / "dtype.agt", dtype);
    CHECK(error_code_of([&] { read_tensor(dir / "dtype.agt"); }) == ErrorCode::bad_dtype);

    auto ndim = b;
    ndim[5] = 0;
    put_bytes(dir / "ndim.agt", ndim);
    CHECK(error_code_of([&] { read_tensor(dir / "ndim.agt"); }) == ErrorCode::bad_ndim);

    // dims 2x2 float64 with only 8 payload bytes
    std::vector<unsigned char> cut(b.begin(), b.begin() + 8 + 16 + 8);
    put_bytes(dir / "cut.agt", cut);
    CHECK(error_code_of([&] { read_tensor(dir / "cut.agt"); }) == ErrorCode::truncated);

    auto extra = b;
    extra.push_back(0);
    put_bytes(dir / "extra.agt", extra);
    CHECK(error_code_of([&] { read_tensor(dir / "extra.agt"); }) == ErrorCode::trailing_bytes);

    Matrix nan = Matrix::Zero(1, 1);
    nan(0, 0) = std::nan("");
    CHECK(error_code_of([&] { write_tensor(dir / "nan.agt", nan); }) == ErrorCode::non_finite);
    CHECK(error_code_of([&] { read_tensor(dir / "missing.agt"); }) == ErrorCode::io);
}

namespace {

std::string manifest_json(const std::string& fit, const std::string& eval, double freq = 0.01) {
    return R"({"model_id":"toy","hidden_dim":4,
      "checkpoints":[{"step":0,"phase":"early","tensor_paths":{"act/L0":"a.agt"}},
                     {"step":10,"phase":"late","tensor_paths":{"act/L0":"a.agt"}}],
      "anchors":[{"token_id":5,"token_text":"x","frequency":)" +
           std::to_string(freq) + R"(,"fit_context_ids":)" + fit + R"(,"eval_context_ids":)" + eval + "}]}";
}

} // namespace

TEST_CASE("manifest validation") {
    TempDir dir("man");
    write_tensor(dir / "a.agt", Matrix(Matrix::Ones(2, 4)));
    const RunManifest m = parse_manifest(manifest_json("[1,2]", "[3]"), dir.path());
    CHECK(m.anchors.size() == 1);
    CHECK(m.checkpoints[1].phase == Phase::late);
    CHECK(m.tensor(m.checkpoints[0], act_role("L0")) == dir / "a.agt");
    CHECK(error_code_of([&] { m.tensor(m.checkpoints[0], grad_role("L0")); }) == ErrorCode::missing_tensor);

    CHECK(error_code_of([&] { parse_manifest(manifest_json("[1,2]", "[2]"), dir.path()); }) ==
          ErrorCode::context_overlap);
    CHECK(error_code_of([&] { parse_manifest(manifest_json("[1]", "[2]", 0.0), dir.path()); }) ==
          ErrorCode::nonpositive_frequency);
    CHECK(error_code_of([&] { parse_manifest("{\"model_id\":\"x\"}", dir.path()); }) == ErrorCode::manifest_invalid);
    CHECK(error_code_of([&] { parse_manifest("not json", dir.path()); }) == ErrorCode::manifest_invalid);

    std::string missing = manifest_json("[1]", "[2]");
    missing.replace(missing.find("a.agt"), 5, "b.agt");
    CHECK(error_code_of([&] { parse_manifest(missing, dir.path()); }) == ErrorCode::missing_tensor);

    save_manifest(dir / "m.json", m);
    const RunManifest back = load_manifest(dir / "m.json");
    CHECK(back.model_id == "toy");
    CHECK(back.anchors[0].eval_context_ids == std::vector<std::int64_t>{3});
    CHECK(back.tensor(back.checkpoints[1], act_role("L0")) == dir / "a.agt");
}

TEST_CASE("six early and four late checkpoints") {
    TempDir dir("phases");
    write_tensor(dir / "a.agt", Matrix(Matrix::Ones(2, 4)));
    std::string cps;
    for (int i = 0; i < 10; ++i) {
        cps += std::string(i ? "," : "") + "{\"step\":" + std::to_string(100 * i) + ",\"phase\":\"" +
               (i < 6 ? "early" : "late") + "\",\"tensor_paths\":{\"act/L0\":\"a.agt\"}}";
    }
    const std::string text = R"({"model_id":"toy","hidden_dim":4,"checkpoints":[)" + cps + R"(],"anchors":[]})";
    const RunManifest m = parse_manifest(text, dir.path());
    CHECK(m.in_phase(Phase::early).size() == 6);
    CHECK(m.in_phase(Phase::late).size() == 4);

    std::string interleaved = text;
    interleaved.replace(interleaved.find("\"late\""), 6, "\"early\"");
    interleaved.replace(interleaved.find("\"early\""), 7, "\"late\"");
    CHECK(error_code_of([&] { parse_manifest(interleaved, dir.path()); }) == ErrorCode::manifest_invalid);
}
