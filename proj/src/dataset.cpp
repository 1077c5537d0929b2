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

#include "osr/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "osr/error.hpp"
#include "osr/real_fmt.hpp"
#include "osr/rng.hpp"

namespace osr {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

int infer_known_classes(const std::vector<int>& labels) {
  int max_label = -1;
  for (int label : labels) max_label = std::max(max_label, label);
  return std::max(max_label + 1, 1);
}

[[noreturn]] void csv_error(const std::string& origin, std::int64_t line,
                            const std::string& what) {
  throw_error(ErrorKind::data, origin + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void validate_dataset(const Dataset& ds) {
  if (ds.rows < 1) throw_error(ErrorKind::data, "dataset: needs at least one row");
  if (ds.dim < 1) throw_error(ErrorKind::data, "dataset: dim must be at least 1");
  if (ds.num_known_classes < 1)
    throw_error(ErrorKind::data, "dataset: num_known_classes must be at least 1");
  if (ds.features.size() != static_cast<std::size_t>(ds.rows) * ds.dim)
    throw_error(ErrorKind::internal, "dataset: feature buffer does not match rows*dim");
  if (ds.labels.size() != static_cast<std::size_t>(ds.rows))
    throw_error(ErrorKind::internal, "dataset: label buffer does not match rows");
  for (double v : ds.features)
    if (!std::isfinite(v)) throw_error(ErrorKind::data, "dataset: non-finite feature");
  for (int label : ds.labels)
    if (label < -1 || label >= ds.num_known_classes)
      throw_error(ErrorKind::data,
                  "dataset: label " + std::to_string(label) + " outside {-1, 0.." +
                      std::to_string(ds.num_known_classes - 1) + "}");
}

Dataset gen_gaussian_mixture(int num_classes, int per_class, int dim, double spread,
                             double radius, std::uint64_t seed) {
  if (num_classes < 1)
    throw_error(ErrorKind::invalid_argument, "gen_gaussian_mixture: num_classes must be >= 1");
  if (per_class < 1)
    throw_error(ErrorKind::invalid_argument, "gen_gaussian_mixture: per_class must be >= 1");
  if (dim < 2)
    throw_error(ErrorKind::invalid_argument, "gen_gaussian_mixture: dim must be >= 2");
  if (!(spread > 0.0) || !std::isfinite(spread))
    throw_error(ErrorKind::invalid_argument, "gen_gaussian_mixture: spread must be > 0");
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw_error(ErrorKind::invalid_argument, "gen_gaussian_mixture: radius must be > 0");

  Dataset ds;
  ds.rows = static_cast<std::int64_t>(num_classes) * per_class;
  ds.dim = dim;
  ds.num_known_classes = num_classes;
  ds.features.resize(static_cast<std::size_t>(ds.rows) * dim);
  ds.labels.resize(ds.rows);

  Rng rng(seed);
  std::int64_t r = 0;
  for (int c = 0; c < num_classes; ++c) {
    const double angle = kTwoPi * c / num_classes;
    const double mean0 = radius * std::cos(angle);
    const double mean1 = radius * std::sin(angle);
    for (int s = 0; s < per_class; ++s, ++r) {
      double* row = ds.row(r);
      for (int j = 0; j < dim; ++j) {
        const double mean = j == 0 ? mean0 : (j == 1 ? mean1 : 0.0);
        row[j] = mean + spread * rng.normal();
      }
      ds.labels[r] = c;
    }
  }
  return ds;
}

Dataset gen_ood_ring(int count, int dim, double inner_radius, double outer_radius,
                     std::uint64_t seed) {
  if (count < 1) throw_error(ErrorKind::invalid_argument, "gen_ood_ring: count must be >= 1");
  if (dim < 2) throw_error(ErrorKind::invalid_argument, "gen_ood_ring: dim must be >= 2");
  if (!(inner_radius > 0.0) || !std::isfinite(inner_radius))
    throw_error(ErrorKind::invalid_argument, "gen_ood_ring: inner_radius must be > 0");
  if (!(outer_radius > inner_radius) || !std::isfinite(outer_radius))
    throw_error(ErrorKind::invalid_argument,
                "gen_ood_ring: outer_radius must exceed inner_radius");

  Dataset ds;
  ds.rows = count;
  ds.dim = dim;
  ds.num_known_classes = 1;
  ds.features.assign(static_cast<std::size_t>(count) * dim, 0.0);
  ds.labels.assign(count, -1);

  Rng rng(seed);
  for (std::int64_t r = 0; r < count; ++r) {
    const double angle = kTwoPi * rng.uniform();
    const double radius = inner_radius + (outer_radius - inner_radius) * rng.uniform();
    double* row = ds.row(r);
    row[0] = radius * std::cos(angle);
    row[1] = radius * std::sin(angle);
  }
  return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  validate_dataset(ds);
  if (!(spec.train_fraction > 0.0) || !(spec.train_fraction < 1.0))
    throw_error(ErrorKind::invalid_argument, "split: train_fraction must lie in (0, 1)");
  const auto take =
      static_cast<std::int64_t>(std::floor(spec.train_fraction * static_cast<double>(ds.rows)));
  if (take < 1 || take > ds.rows - 1)
    throw_error(ErrorKind::invalid_argument,
                "split: train_fraction leaves an empty side for " + std::to_string(ds.rows) +
                    " rows");

  std::vector<std::int64_t> order(ds.rows);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  for (std::int64_t i = ds.rows - 1; i > 0; --i) {
    const auto j = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[i], order[j]);
  }

  auto gather = [&](std::int64_t begin, std::int64_t end) {
    Dataset out;
    out.rows = end - begin;
    out.dim = ds.dim;
    out.num_known_classes = ds.num_known_classes;
    out.features.resize(static_cast<std::size_t>(out.rows) * ds.dim);
    out.labels.resize(out.rows);
    for (std::int64_t i = begin; i < end; ++i) {
      const std::int64_t src = order[i];
      std::copy(ds.row(src), ds.row(src) + ds.dim, out.row(i - begin));
      out.labels[i - begin] = ds.labels[src];
    }
    return out;
  };
  return {gather(0, take), gather(take, ds.rows)};
}

std::string to_csv(const Dataset& ds) {
  validate_dataset(ds);
  std::string out;
  out.reserve(static_cast<std::size_t>(ds.rows) * ds.dim * 20);
  for (int j = 0; j < ds.dim; ++j) {
    out += 'f';
    out += std::to_string(j);
    out += ',';
  }
  out += "label\n";
  for (std::int64_t r = 0; r < ds.rows; ++r) {
    const double* row = ds.row(r);
    for (int j = 0; j < ds.dim; ++j) {
      append_real(out, row[j]);
      out += ',';
    }
    out += std::to_string(ds.labels[r]);
    out += '\n';
  }
  return out;
}

Dataset parse_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) csv_error(origin, 1, "malformed header: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> cells;
  std::size_t start = 0;
  auto split_line = [&cells, &start](const std::string& s) {
    cells.clear();
    start = 0;
    while (true) {
      const std::size_t comma = s.find(',', start);
      if (comma == std::string::npos) {
        cells.push_back(s.substr(start));
        break;
      }
      cells.push_back(s.substr(start, comma - start));
      start = comma + 1;
    }
  };

  split_line(line);
  if (cells.size() < 2 || cells.back() != "label")
    csv_error(origin, 1, "malformed header: expected f0,..,f{d-1},label");
  const int dim = static_cast<int>(cells.size()) - 1;
  for (int j = 0; j < dim; ++j)
    if (cells[j] != "f" + std::to_string(j))
      csv_error(origin, 1, "malformed header: column " + std::to_string(j) + " is '" +
                               cells[j] + "', expected 'f" + std::to_string(j) + "'");

  Dataset ds;
  ds.dim = dim;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) csv_error(origin, line_no, "empty row");
    split_line(line);
    if (cells.size() != static_cast<std::size_t>(dim) + 1)
      csv_error(origin, line_no,
                "expected " + std::to_string(dim + 1) + " cells, got " +
                    std::to_string(cells.size()));
    for (int j = 0; j < dim; ++j) {
      const char* begin = cells[j].c_str();
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin || *end != '\0' || !std::isfinite(v))
        csv_error(origin, line_no, "cell '" + cells[j] + "' is not a finite number");
      ds.features.push_back(v);
    }
    const char* begin = cells[dim].c_str();
    char* end = nullptr;
    const long label = std::strtol(begin, &end, 10);
    if (end == begin || *end != '\0')
      csv_error(origin, line_no, "label '" + cells[dim] + "' is not an integer");
    if (label < -1)
      csv_error(origin, line_no, "label " + std::to_string(label) + " is below -1");
    ds.labels.push_back(static_cast<int>(label));
  }
  if (ds.labels.empty()) throw_error(ErrorKind::data, origin + ": no samples");
  ds.rows = static_cast<std::int64_t>(ds.labels.size());
  ds.num_known_classes = infer_known_classes(ds.labels);
  validate_dataset(ds);
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  const std::string body = to_csv(ds);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_error(ErrorKind::io, "cannot open '" + path + "' for writing");
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw_error(ErrorKind::io, "write failed for '" + path + "'");
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_error(ErrorKind::io, "cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), path);
}

}  // namespace osr
