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
#include <string>
#include <utility>
#include <vector>

namespace osr {

// Row-major feature matrix with one integer label per row. Label -1 marks an
// out-of-distribution row; known classes are 0..num_known_classes-1.
struct Dataset {
  std::int64_t rows = 0;
  int dim = 0;
  int num_known_classes = 1;
  std::vector<double> features;  // rows * dim, row-major
  std::vector<int> labels;       // rows

  const double* row(std::int64_t r) const { return features.data() + r * dim; }
  double* row(std::int64_t r) { return features.data() + r * dim; }
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

// Shape / label / finiteness checks shared by every consumer.
void validate_dataset(const Dataset& ds);

// K Gaussian blobs with means spaced equally on a circle of the given radius
// in the first two coordinates (zero elsewhere) and isotropic per-coordinate
// standard deviation `spread`. Rows are ordered class 0 first; normal draws
// are consumed row by row, coordinate by coordinate.
Dataset gen_gaussian_mixture(int num_classes, int per_class, int dim, double spread,
                             double radius, std::uint64_t seed);

// Ring in the first two coordinates: angle uniform in [0, 2*pi), radius
// uniform in [inner_radius, outer_radius], labels all -1. Per row the angle
// is drawn first, then the radius.
Dataset gen_ood_ring(int count, int dim, double inner_radius, double outer_radius,
                     std::uint64_t seed);

// Deterministic Fisher-Yates shuffle of the row order followed by a prefix
// split of size floor(train_fraction * rows).
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

// CSV codec. Header "f0,...,f{d-1},label"; features rendered with 17
// significant digits so a round trip is bit-exact; rows end with '\n'.
std::string to_csv(const Dataset& ds);
Dataset parse_csv(const std::string& text, const std::string& origin);

void save_csv(const Dataset& ds, const std::string& path);
Dataset load_csv(const std::string& path);

}  // namespace osr
