/*
 * Copyright 2026 The openset Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>

namespace osr {

// One splitmix64 step: advances `state` and returns the next output.
std::uint64_t splitmix64_next(std::uint64_t& state);

// Seed of derived stream `stream` for root seed `seed`. Used wherever one
// configured seed has to fan out into independent generators (train / test /
// OOD sets, init vs. shuffle), so the streams are reproducible from the docs.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// xoshiro256++ seeded via splitmix64. The exact generator, the [0,1) mapping,
// the bounded-integer mapping and the Box-Muller pairing below are part of the
// reproducibility contract: any reimplementation following them produces
// bit-identical streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform integer in [0, bound) via the 128-bit multiply-high mapping
  // ((u128)next_u64() * bound) >> 64. bound must be nonzero.
  std::uint64_t next_below(std::uint64_t bound);

  // Uniform double in [0, 1): (next_u64() >> 11) * 2^-53.
  double uniform();

  // Standard normal via Box-Muller. Each pair of uniforms (u1, u2) yields
  // z0 = r*cos(2*pi*u2) and z1 = r*sin(2*pi*u2) with r = sqrt(-2*ln(u1)),
  // u1 = 1 - uniform() so the log argument stays in (0, 1]. z0 is returned
  // first, z1 on the following call.
  double normal();

 private:
  std::uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace osr
