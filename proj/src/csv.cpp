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
#include "tscope/csv.hpp"

#include "tscope/types.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tscope {

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "na";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void CsvTable::add_row(std::vector<std::string> cells) {
    require(cells.size() == header_.size(), ErrorCode::dimension_mismatch,
            "csv row has " + std::to_string(cells.size()) + " cells, header has " + std::to_string(header_.size()));
    for (const auto& c : cells) {
        require(!c.empty(), ErrorCode::invalid_argument, "csv cells may not be blank");
    }
    rows_.push_back(std::move(cells));
}

namespace {

void write_line(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) {
            out << ',';
        }
        const auto& c = cells[i];
        if (c.find_first_of(",\"\n") != std::string::npos) {
            out << '"';
            for (char ch : c) {
                if (ch == '"') {
                    out << '"';
                }
                out << ch;
            }
            out << '"';
        } else {
            out << c;
        }
    }
    out << '\n';
}

} // namespace

void CsvTable::write(std::ostream& out) const {
    write_line(out, header_);
    for (const auto& r : rows_) {
        write_line(out, r);
    }
}

void CsvTable::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::io, "cannot write " + path.string());
    write(out);
}

std::string CsvTable::str() const {
    std::ostringstream ss;
    write(ss);
    return ss.str();
}

} // namespace tscope
