// Copyright 2026 The qoverlap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qoverlap/samples.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "qoverlap/types.hpp"

namespace qoverlap {

namespace {

constexpr char kTextMagic[] = "# qoverlap-samples v1";
constexpr std::array<char, 4> kBinaryMagic = {'Q', 'O', 'S', 'R'};
constexpr std::uint32_t kBinaryVersion = 1;

template <typename T>
void put_le(std::ostream& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.put(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xffu));
    }
}

template <typename T>
T get_le(std::istream& in) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        const int c = in.get();
        if (c == std::char_traits<char>::eof()) {
            throw ParseError("truncated sample file");
        }
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return static_cast<T>(v);
}

void put_string(std::ostream& out, const std::string& s) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const auto len = get_le<std::uint32_t>(in);
    if (len > (1u << 20)) {
        throw ParseError("implausible string length in sample file");
    }
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (static_cast<std::uint32_t>(in.gcount()) != len) {
        throw ParseError("truncated sample file");
    }
    return s;
}

}  // namespace

std::uint64_t SampleRecord::flat_index(std::size_t i) const {
    std::uint64_t idx = 0;
    for (std::uint8_t o : shot(i)) {
        idx = idx * static_cast<std::uint64_t>(outcomes_per_qubit) + o;
    }
    return idx;
}

void SampleRecord::validate() const {
    if (n < 1) {
        throw DimensionError("sample record needs at least one qubit");
    }
    if (outcomes_per_qubit < 1 || outcomes_per_qubit > 255) {
        throw DimensionError("outcomes per qubit must lie in [1, 255]");
    }
    if (outcomes.size() % static_cast<std::size_t>(n) != 0) {
        throw DimensionError("outcome storage is not a whole number of shots");
    }
    for (std::uint8_t o : outcomes) {
        if (o >= outcomes_per_qubit) {
            throw DimensionError("outcome index " + std::to_string(o) + " out of range");
        }
    }
}

void write_samples_text(const SampleRecord& rec, std::ostream& out) {
    rec.validate();
    out << kTextMagic << '\n';
    out << "n=" << rec.n << '\n';
    out << "m=" << rec.outcomes_per_qubit << '\n';
    out << "povm=" << rec.povm_id << '\n';
    out << "source=" << rec.source << '\n';
    out << "seed=" << rec.seed << '\n';
    out << "shots=" << rec.shots() << '\n';
    for (std::size_t i = 0; i < rec.shots(); ++i) {
        const auto s = rec.shot(i);
        for (std::size_t q = 0; q < s.size(); ++q) {
            out << (q ? " " : "") << static_cast<int>(s[q]);
        }
        out << '\n';
    }
}

SampleRecord read_samples_text(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTextMagic) {
        throw ParseError("missing sample file header");
    }
    SampleRecord rec;
    std::size_t shots = 0;
    const std::array<const char*, 6> keys = {"n", "m", "povm", "source", "seed", "shots"};
    for (const char* key : keys) {
        if (!std::getline(in, line)) {
            throw ParseError(std::string("missing header field ") + key);
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos || line.substr(0, eq) != key) {
            throw ParseError(std::string("expected header field ") + key);
        }
        const std::string v = line.substr(eq + 1);
        try {
            const std::string k = key;
            if (k == "n") {
                rec.n = std::stoi(v);
            } else if (k == "m") {
                rec.outcomes_per_qubit = std::stoi(v);
            } else if (k == "povm") {
                rec.povm_id = v;
            } else if (k == "source") {
                rec.source = v;
            } else if (k == "seed") {
                rec.seed = std::stoull(v);
            } else {
                shots = std::stoull(v);
            }
        } catch (const std::logic_error&) {
            throw ParseError(std::string("bad value for header field ") + key);
        }
    }
    if (rec.n < 1) {
        throw ParseError("sample file has no qubits");
    }
    rec.outcomes.reserve(shots * static_cast<std::size_t>(rec.n));
    for (std::size_t i = 0; i < shots; ++i) {
        if (!std::getline(in, line)) {
            throw ParseError("sample file ends after " + std::to_string(i) + " shots");
        }
        std::istringstream ls(line);
        for (int q = 0; q < rec.n; ++q) {
            int o = -1;
            if (!(ls >> o) || o < 0 || o > 255) {
                throw ParseError("bad outcome on shot line " + std::to_string(i + 1));
            }
            rec.outcomes.push_back(static_cast<std::uint8_t>(o));
        }
        std::string extra;
        if (ls >> extra) {
            throw ParseError("too many outcomes on shot line " + std::to_string(i + 1));
        }
    }
    rec.validate();
    return rec;
}

void write_samples_binary(const SampleRecord& rec, std::ostream& out) {
    rec.validate();
    out.write(kBinaryMagic.data(), kBinaryMagic.size());
    put_le<std::uint32_t>(out, kBinaryVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.n));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.outcomes_per_qubit));
    put_le<std::uint64_t>(out, rec.seed);
    put_le<std::uint64_t>(out, rec.shots());
    put_string(out, rec.povm_id);
    put_string(out, rec.source);
    out.write(reinterpret_cast<const char*>(rec.outcomes.data()), static_cast<std::streamsize>(rec.outcomes.size()));
}

SampleRecord read_samples_binary(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != 4 || magic != kBinaryMagic) {
        throw ParseError("not a binary sample file");
    }
    if (get_le<std::uint32_t>(in) != kBinaryVersion) {
        throw ParseError("unsupported binary sample version");
    }
    SampleRecord rec;
    rec.n = static_cast<int>(get_le<std::uint32_t>(in));
    rec.outcomes_per_qubit = static_cast<int>(get_le<std::uint32_t>(in));
    rec.seed = get_le<std::uint64_t>(in);
    const auto shots = get_le<std::uint64_t>(in);
    rec.povm_id = get_string(in);
    rec.source = get_string(in);
    if (rec.n < 1 || rec.n > 4096) {
        throw ParseError("implausible qubit count in sample file");
    }
    rec.outcomes.resize(static_cast<std::size_t>(shots) * static_cast<std::size_t>(rec.n));
    in.read(reinterpret_cast<char*>(rec.outcomes.data()), static_cast<std::streamsize>(rec.outcomes.size()));
    if (static_cast<std::size_t>(in.gcount()) != rec.outcomes.size()) {
        throw ParseError("truncated sample file");
    }
    rec.validate();
    return rec;
}

void save_samples(const SampleRecord& rec, const std::filesystem::path& path) {
    const bool text = path.extension() == ".txt";
    std::ofstream out(path, text ? std::ios::out : std::ios::out | std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    if (text) {
        write_samples_text(rec, out);
    } else {
        write_samples_binary(rec, out);
    }
}

SampleRecord load_samples(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    const int first = in.peek();
    if (first == 'Q') {
        return read_samples_binary(in);
    }
    return read_samples_text(in);
}

}  // namespace qoverlap
