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

// Deterministic keyed noise.
//
// A query's noise is a pure function of (system secret, canonical query text,
// snapshot date). The three fields are hashed with HMAC-SHA256 into a 256-bit
// seed. Every (role, element) pair then gets its own substream whose key is
// BLAKE2b(seed; role || len(id) || id), and the substream's draws are the
// 64-bit words of the ChaCha20 keystream under that key, addressed by a
// counter. Noise for an element therefore does not depend on which other
// elements were drawn or in what order.

#ifndef DPQUERY_NOISE_H_
#define DPQUERY_NOISE_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "absl/status/statusor.h"
#include "dpquery/date.h"

namespace dpquery {

using Seed = std::array<uint8_t, 32>;

struct NoiseKey {
  std::string secret;
  std::string query_canon;
  Date data_date;
};

// HMAC-SHA256 keyed by `secret` over
//   u64le(len(query_canon)) || query_canon || u64le(10) || "YYYY-MM-DD".
// Fails with InvalidArgument when the secret is empty.
absl::StatusOr<Seed> DeriveSeed(const NoiseKey& key);

// Noise roles separate the independent randomness an algorithm consumes for
// the same element.
enum class NoiseRole : uint8_t {
  kSelection = 1,       // noise deciding whether/where an element ranks
  kCount = 2,           // noise on a released count
  kThreshold = 3,       // noise on the data-dependent threshold
  kThresholdIndex = 4,  // rank-indexed noise for choosing the threshold rank
};

// Reserved substream id for threshold noise. Element ids live in other roles,
// so no element can alias it.
inline constexpr std::string_view kThresholdId = "\xE2\x8A\xA5-threshold";

// Smallest and largest uniforms ever produced; keeps both inverse CDFs finite.
inline constexpr double kMinUniform = 0x1p-53;
inline constexpr double kMaxUniform = 1.0 - 0x1p-53;

class NoiseStream {
 public:
  explicit NoiseStream(const Seed& key) : key_(key) {}

  // Uniform in [kMinUniform, kMaxUniform] for the given counter.
  double Uniform(uint64_t counter) const;

  // out[i] = Uniform(first + i), generated in bulk.
  void FillUniform(uint64_t first, std::span<double> out) const;

  const Seed& key() const { return key_; }

  friend bool operator==(const NoiseStream&, const NoiseStream&) = default;

 private:
  Seed key_;
};

NoiseStream Substream(const Seed& seed, std::string_view id,
                      NoiseRole role = NoiseRole::kSelection);

// Inverse CDFs. `u` must lie in (0, 1); `scale` must be positive.
double LaplaceFromUniform(double u, double scale);
double GumbelFromUniform(double u, double scale);

// One draw at `counter`. InvalidArgument when scale <= 0 or is not finite.
absl::StatusOr<double> SampleLaplace(const NoiseStream& stream, double scale,
                                     uint64_t counter = 0);
absl::StatusOr<double> SampleGumbel(const NoiseStream& stream, double scale,
                                    uint64_t counter = 0);

// Source of noise consumed by the mechanisms. Scales passed in are always
// positive; callers validate their privacy parameters first.
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;

  virtual double Laplace(NoiseRole role, std::string_view id,
                         double scale) const = 0;
  virtual double Gumbel(NoiseRole role, std::string_view id,
                        double scale) const = 0;
  // out[i] is the Gumbel draw at counter i of the (role, id) substream.
  virtual void GumbelSequence(NoiseRole role, std::string_view id, double scale,
                              std::span<double> out) const = 0;
  // Index of the smallest offsets[i] + g[i], where g is the GumbelSequence
  // of the same length; the first index wins ties. Requires a non-empty span.
  virtual size_t ArgminWithGumbel(NoiseRole role, std::string_view id,
                                  double scale,
                                  std::span<const double> offsets) const;
};

// Production noise: every draw comes from a substream of one seed.
class KeyedNoise final : public NoiseSource {
 public:
  explicit KeyedNoise(const Seed& seed) : seed_(seed) {}

  double Laplace(NoiseRole role, std::string_view id,
                 double scale) const override;
  double Gumbel(NoiseRole role, std::string_view id,
                double scale) const override;
  void GumbelSequence(NoiseRole role, std::string_view id, double scale,
                      std::span<double> out) const override;
  // Same result as the default. Draws that provably cannot beat the running
  // minimum skip the Gumbel transform, and blocks that cannot skip the
  // keystream.
  size_t ArgminWithGumbel(NoiseRole role, std::string_view id, double scale,
                          std::span<const double> offsets) const override;

  const Seed& seed() const { return seed_; }

 private:
  Seed seed_;
};

// Lowercase hex, used for seeds in logs and for secrets in config.
std::string HexEncode(std::span<const uint8_t> bytes);
absl::StatusOr<std::string> HexDecode(std::string_view hex);

}  // namespace dpquery

#endif  // DPQUERY_NOISE_H_
