// Copyright 2026 The Unlearn Lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Binary checkpoints: magic, format version, the model config as key=value
// text, then every parameter array as little-endian float32 in declaration
// order, each preceded by its name and shape.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "unlearn/model.hpp"

namespace unlearn {

inline constexpr char kCheckpointMagic[8] = {'U', 'L', 'C', 'K', 'P', 'T', '0', '\n'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, std::size_t limit = 1u << 20) {
  const std::uint32_t n = read_u32(in);
  if (n > limit) throw FormatError("checkpoint string too long");
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw FormatError("checkpoint truncated");
  return s;
}

}  // namespace detail

/// Writes the policy as float32. A float policy round-trips bit-exactly.
template <typename Scalar>
void save_checkpoint(const Policy<Scalar>& policy, const std::filesystem::path& path) {
  static_assert(std::numeric_limits<float>::is_iec559);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write checkpoint " + tmp.string());
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    detail::write_u32(out, kCheckpointVersion);
    detail::write_string(out, policy.config.to_text());
    std::uint32_t n_arrays = 0;
    policy.params.for_each([&](const std::string&, const Matrix<Scalar>&) { ++n_arrays; });
    detail::write_u32(out, n_arrays);
    policy.params.for_each([&](const std::string& name, const Matrix<Scalar>& m) {
      detail::write_string(out, name);
      detail::write_u32(out, static_cast<std::uint32_t>(m.rows()));
      detail::write_u32(out, static_cast<std::uint32_t>(m.cols()));
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        detail::write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m.data()[i])));
      }
    });
    if (!out) throw FormatError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Reads the stored config without the arrays.
inline ModelConfig read_checkpoint_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  char magic[sizeof kCheckpointMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw FormatError("bad checkpoint magic in " + path.string());
  }
  const std::uint32_t version = detail::read_u32(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  return ModelConfig::from_text(detail::read_string(in));
}

/// Loads into a fresh trainable policy. If `expected` is given, the stored
/// config must equal it.
template <typename Scalar>
Policy<Scalar> load_checkpoint(const std::filesystem::path& path,
                               const ModelConfig* expected = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  char magic[sizeof kCheckpointMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw FormatError("bad checkpoint magic in " + path.string());
  }
  const std::uint32_t version = detail::read_u32(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const ModelConfig config = ModelConfig::from_text(detail::read_string(in));
  if (expected != nullptr && !(config.resolved() == expected->resolved())) {
    throw ContractError("checkpoint config does not match the requested model config");
  }
  Policy<Scalar> policy{config, Parameters<Scalar>::zeros(config), PolicyRole::kTrainable};
  std::uint32_t n_arrays = 0;
  policy.params.for_each([&](const std::string&, const Matrix<Scalar>&) { ++n_arrays; });
  if (detail::read_u32(in) != n_arrays) throw FormatError("checkpoint array count mismatch");
  policy.params.for_each([&](const std::string& name, Matrix<Scalar>& m) {
    if (detail::read_string(in) != name) throw FormatError("checkpoint array order mismatch at " + name);
    const auto rows = detail::read_u32(in);
    const auto cols = detail::read_u32(in);
    if (rows != m.rows() || cols != m.cols()) throw FormatError("checkpoint shape mismatch at " + name);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = static_cast<Scalar>(std::bit_cast<float>(detail::read_u32(in)));
    }
  });
  return policy;
}

}  // namespace unlearn
