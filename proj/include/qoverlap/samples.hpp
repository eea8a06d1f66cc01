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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace qoverlap {

/// Measurement record of one state: `shots` outcome tuples of `n` per-qubit
/// outcome indices, stored shot-major.
struct SampleRecord {
    int n = 0;
    int outcomes_per_qubit = 0;
    std::string povm_id;
    std::string source;  ///< free-form label, e.g. "rho" or "sigma"
    std::uint64_t seed = 0;
    std::vector<std::uint8_t> outcomes;

    [[nodiscard]] std::size_t shots() const { return n == 0 ? 0 : outcomes.size() / static_cast<std::size_t>(n); }
    [[nodiscard]] std::span<const std::uint8_t> shot(std::size_t i) const {
        return {outcomes.data() + i * static_cast<std::size_t>(n), static_cast<std::size_t>(n)};
    }
    /// Flattened outcome index of shot i (qubit 0 most significant).
    [[nodiscard]] std::uint64_t flat_index(std::size_t i) const;
    /// Throws if any outcome index is outside [0, outcomes_per_qubit).
    void validate() const;

    bool operator==(const SampleRecord&) const = default;
};

/// Text form: a `# qoverlap-samples v1` line, `key=value` header lines
/// (n, m, povm, source, seed, shots), then one shot per line.
void write_samples_text(const SampleRecord& rec, std::ostream& out);
SampleRecord read_samples_text(std::istream& in);

/// Binary form: magic "QOSR", u32 version, u32 n, u32 m, u64 seed, u64 shots,
/// u32 length-prefixed povm id and source, then shots*n outcome bytes.
/// Integers are little-endian.
void write_samples_binary(const SampleRecord& rec, std::ostream& out);
SampleRecord read_samples_binary(std::istream& in);

void save_samples(const SampleRecord& rec, const std::filesystem::path& path);
/// Format detected from the first bytes.
SampleRecord load_samples(const std::filesystem::path& path);

}  // namespace qoverlap
