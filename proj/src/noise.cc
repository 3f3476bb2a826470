//
// Copyright 2026 The dpquery Authors.
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
//

#include "dpquery/noise.h"

#include <sodium.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace dpquery {
namespace {

constexpr unsigned char kNonce[crypto_stream_chacha20_NONCEBYTES] = {};

void EnsureSodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) std::abort();
}

void AppendU64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

uint64_t LoadU64(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

double ToUniform(uint64_t word) {
  double u = (static_cast<double>(word >> 11) + 0.5) * 0x1p-53;
  return std::clamp(u, kMinUniform, kMaxUniform);
}

absl::Status CheckScale(double scale) {
  if (!(scale > 0) || !std::isfinite(scale)) {
    return absl::InvalidArgumentError(
        absl::StrCat("noise scale must be positive and finite, got ", scale));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<Seed> DeriveSeed(const NoiseKey& key) {
  if (key.secret.empty()) {
    return absl::InvalidArgumentError("noise secret must not be empty");
  }
  EnsureSodium();
  std::string message;
  const std::string date = key.data_date.ToString();
  AppendU64(message, key.query_canon.size());
  message += key.query_canon;
  AppendU64(message, date.size());
  message += date;

  crypto_auth_hmacsha256_state state;
  crypto_auth_hmacsha256_init(
      &state, reinterpret_cast<const unsigned char*>(key.secret.data()),
      key.secret.size());
  crypto_auth_hmacsha256_update(
      &state, reinterpret_cast<const unsigned char*>(message.data()),
      message.size());
  Seed seed;
  crypto_auth_hmacsha256_final(&state, seed.data());
  return seed;
}

NoiseStream Substream(const Seed& seed, std::string_view id, NoiseRole role) {
  EnsureSodium();
  std::string message;
  message.reserve(9 + id.size());
  message.push_back(static_cast<char>(role));
  AppendU64(message, id.size());
  message.append(id);
  Seed key;
  crypto_generichash(key.data(), key.size(),
                     reinterpret_cast<const unsigned char*>(message.data()),
                     message.size(), seed.data(), seed.size());
  return NoiseStream(key);
}

double NoiseStream::Uniform(uint64_t counter) const {
  double u;
  FillUniform(counter, std::span<double>(&u, 1));
  return u;
}

void NoiseStream::FillUniform(uint64_t first, std::span<double> out) const {
  EnsureSodium();
  constexpr size_t kChunkWords = 512;
  unsigned char bytes[kChunkWords * 8];
  size_t done = 0;
  uint64_t counter = first;
  while (done < out.size()) {
    const uint64_t block = counter / 8;
    const size_t skip = counter % 8;
    const size_t want = std::min(out.size() - done, kChunkWords - skip);
    const size_t nbytes = (skip + want) * 8;
    std::memset(bytes, 0, nbytes);
    crypto_stream_chacha20_xor_ic(bytes, bytes, nbytes, kNonce, block,
                                  key_.data());
    for (size_t i = 0; i < want; ++i) {
      out[done + i] = ToUniform(LoadU64(bytes + 8 * (skip + i)));
    }
    done += want;
    counter += want;
  }
}

double LaplaceFromUniform(double u, double scale) {
  // F^{-1}(u) = -b * sgn(u - 1/2) * ln(1 - 2|u - 1/2|)
  if (u < 0.5) return scale * std::log(2.0 * u);
  return -scale * std::log(2.0 * (1.0 - u));
}

double GumbelFromUniform(double u, double scale) {
  return -scale * std::log(-std::log(u));
}

absl::StatusOr<double> SampleLaplace(const NoiseStream& stream, double scale,
                                     uint64_t counter) {
  if (absl::Status s = CheckScale(scale); !s.ok()) return s;
  return LaplaceFromUniform(stream.Uniform(counter), scale);
}

absl::StatusOr<double> SampleGumbel(const NoiseStream& stream, double scale,
                                    uint64_t counter) {
  if (absl::Status s = CheckScale(scale); !s.ok()) return s;
  return GumbelFromUniform(stream.Uniform(counter), scale);
}

double KeyedNoise::Laplace(NoiseRole role, std::string_view id,
                           double scale) const {
  return LaplaceFromUniform(Substream(seed_, id, role).Uniform(0), scale);
}

double KeyedNoise::Gumbel(NoiseRole role, std::string_view id,
                          double scale) const {
  return GumbelFromUniform(Substream(seed_, id, role).Uniform(0), scale);
}

void KeyedNoise::GumbelSequence(NoiseRole role, std::string_view id,
                                double scale, std::span<double> out) const {
  Substream(seed_, id, role).FillUniform(0, out);
  for (double& v : out) v = GumbelFromUniform(v, scale);
}

size_t NoiseSource::ArgminWithGumbel(NoiseRole role, std::string_view id,
                                     double scale,
                                     std::span<const double> offsets) const {
  std::vector<double> g(offsets.size());
  GumbelSequence(role, id, scale, g);
  size_t best_i = 0;
  double best = 0;
  for (size_t i = 0; i < offsets.size(); ++i) {
    const double v = offsets[i] + g[i];
    if (i == 0 || v < best) {
      best = v;
      best_i = i;
    }
  }
  return best_i;
}

size_t KeyedNoise::ArgminWithGumbel(NoiseRole role, std::string_view id,
                                    double scale,
                                    std::span<const double> offsets) const {
  constexpr size_t kBlock = 64;
  const NoiseStream stream = Substream(seed_, id, role);
  double u[kBlock];
  size_t best_i = 0;
  double best = 0;
  for (size_t start = 0; start < offsets.size(); start += kBlock) {
    const std::span<const double> block =
        offsets.subspan(start, std::min(kBlock, offsets.size() - start));
    // Draw i can only win if G(u_i) < best - offsets[i]. G is increasing, so
    // every u >= u_cut with G(u_cut) = best - min(block) + margin loses. The
    // margin covers rounding in v and in u_cut; u_cut is only trusted where
    // G is well conditioned (u <= 1/2).
    double u_cut = 1.0;
    if (start > 0) {
      const double lo = *std::min_element(block.begin(), block.end());
      const double margin =
          1e-9 * (1.0 + std::abs(best) + std::abs(lo) + scale);
      const double c = best - lo + margin;
      const double cut = std::exp(-std::exp(-c / scale));
      if (cut <= 0.5) u_cut = cut;
    }
    if (u_cut <= kMinUniform) continue;
    stream.FillUniform(start, std::span<double>(u, block.size()));
    for (size_t j = 0; j < block.size(); ++j) {
      if (u[j] >= u_cut) continue;
      const size_t i = start + j;
      const double v = block[j] + GumbelFromUniform(u[j], scale);
      if (i == 0 || v < best) {
        best = v;
        best_i = i;
      }
    }
  }
  return best_i;
}

std::string HexEncode(std::span<const uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

absl::StatusOr<std::string> HexDecode(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    return absl::InvalidArgumentError("hex string has odd length");
  }
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]), lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) {
      return absl::InvalidArgumentError("hex string has a non-hex character");
    }
    out.push_back(static_cast<char>((hi << 4) | lo));
  }
  return out;
}

}  // namespace dpquery
