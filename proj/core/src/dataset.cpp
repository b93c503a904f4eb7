#include "autoal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "autoal/errors.hpp"

namespace autoal {

namespace {

std::uint32_t read_be32(std::istream& in, const char* what) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw FormatError(std::string("truncated file while reading ") + what);
  return (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) |
         (std::uint32_t(bytes[2]) << 8) | std::uint32_t(bytes[3]);
}

}  // namespace

Dataset make_blobs(int classes, const std::vector<int>& per_class_counts, int dim,
                   double spread, double sigma, std::uint64_t seed) {
  if (classes < 2) throw InputError("make_blobs: need at least 2 classes");
  if (dim < 1) throw InputError("make_blobs: dimension must be >= 1");
  if (per_class_counts.size() != static_cast<std::size_t>(classes))
    throw InputError("make_blobs: one count per class required");
  for (int c : per_class_counts)
    if (c < 1) throw InputError("make_blobs: per-class counts must be >= 1");

  std::vector<std::vector<double>> centers(static_cast<std::size_t>(classes),
                                           std::vector<double>(dim, 0.0));
  for (int c = 0; c < classes; ++c) {
    if (dim == 1) {
      centers[c][0] = classes == 1 ? 0.0
                                   : spread * (2.0 * c / (classes - 1.0) - 1.0);
    } else {
      const double angle = 2.0 * std::numbers::pi * c / classes;
      centers[c][0] = spread * std::cos(angle);
      centers[c][1] = spread * std::sin(angle);
    }
  }

  std::size_t total = 0;
  for (int c : per_class_counts) total += static_cast<std::size_t>(c);

  Dataset ds;
  ds.features = Matrix(total, static_cast<std::size_t>(dim));
  ds.labels.reserve(total);
  ds.num_classes = classes;
  ds.name = "blobs";

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::size_t row = 0;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class_counts[c]; ++i, ++row) {
      auto out = ds.features.row(row);
      for (int j = 0; j < dim; ++j)
        out[j] = centers[c][j] + (sigma > 0.0 ? sigma * noise(rng) : 0.0);
      ds.labels.push_back(c);
    }
  }
  return ds;
}

Dataset make_two_moons(int n, double sigma, std::uint64_t seed) {
  if (n < 2) throw InputError("make_two_moons: need at least 2 points");
  const int n0 = n / 2 + (n % 2);

  Dataset ds;
  ds.features = Matrix(static_cast<std::size_t>(n), 2);
  ds.labels.reserve(static_cast<std::size_t>(n));
  ds.num_classes = 2;
  ds.name = "moons";

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> arc(0.0, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const bool upper = i < n0;
    const double t = arc(rng);
    double x = upper ? std::cos(t) : 1.0 - std::cos(t);
    double y = upper ? std::sin(t) : 0.5 - std::sin(t);
    if (sigma > 0.0) {
      x += sigma * noise(rng);
      y += sigma * noise(rng);
    }
    ds.features(static_cast<std::size_t>(i), 0) = x;
    ds.features(static_cast<std::size_t>(i), 1) = y;
    ds.labels.push_back(upper ? 0 : 1);
  }
  return ds;
}

Dataset load_idx_pair(const std::string& images_path, const std::string& labels_path) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw FormatError("cannot open images file: " + images_path);
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw FormatError("cannot open labels file: " + labels_path);

  const std::uint32_t image_magic = read_be32(images, "images magic");
  if (image_magic != 0x00000803u)
    throw FormatError("bad images magic (expected 0x00000803)");
  const std::uint32_t count = read_be32(images, "image count");
  const std::uint32_t rows = read_be32(images, "image rows");
  const std::uint32_t cols = read_be32(images, "image cols");

  const std::uint32_t label_magic = read_be32(labels, "labels magic");
  if (label_magic != 0x00000801u)
    throw FormatError("bad labels magic (expected 0x00000801)");
  const std::uint32_t label_count = read_be32(labels, "label count");
  if (label_count != count)
    throw FormatError("image/label count mismatch");

  const std::size_t pixels = std::size_t(rows) * cols;
  Dataset ds;
  ds.features = Matrix(count, pixels);
  ds.labels.resize(count);
  ds.name = "idx";

  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t i = 0; i < count; ++i) {
    images.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(pixels));
    if (!images) throw FormatError("truncated image data");
    auto out = ds.features.row(i);
    for (std::size_t j = 0; j < pixels; ++j) out[j] = buf[j] / 255.0;
  }
  int max_label = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    unsigned char y;
    labels.read(reinterpret_cast<char*>(&y), 1);
    if (!labels) throw FormatError("truncated label data");
    ds.labels[i] = static_cast<int>(y);
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = max_label + 1;
  return ds;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open csv file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("csv file has no header row");

  auto split = [](const std::string& s) {
    std::vector<std::string> fields;
    std::stringstream ss(s);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
  };

  const std::vector<std::string> header = split(line);
  std::size_t label_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == "label") label_col = i;
  if (label_col == header.size())
    throw FormatError("csv header must contain a `label` column");
  const std::size_t feature_cols = header.size() - 1;
  if (feature_cols == 0) throw FormatError("csv has no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  int max_label = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split(line);
    if (fields.size() != header.size())
      throw FormatError("csv row has wrong field count");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      try {
        const double v = std::stod(fields[i]);
        if (i == label_col) {
          const int y = static_cast<int>(v);
          if (y < 0 || static_cast<double>(y) != v)
            throw FormatError("csv label must be a non-negative integer");
          labels.push_back(y);
          max_label = std::max(max_label, y);
        } else {
          values.push_back(v);
        }
      } catch (const std::invalid_argument&) {
        throw FormatError("csv field is not numeric: " + fields[i]);
      } catch (const std::out_of_range&) {
        throw FormatError("csv field out of range: " + fields[i]);
      }
    }
  }
  if (labels.empty()) throw FormatError("csv contains no data rows");

  Dataset ds;
  ds.features = Matrix(labels.size(), feature_cols);
  std::copy(values.begin(), values.end(), ds.features.data().begin());
  ds.labels = std::move(labels);
  ds.num_classes = max_label + 1;
  ds.name = "csv";
  return ds;
}

double imbalance_ratio(const Dataset& dataset) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(dataset.num_classes), 0);
  for (int y : dataset.labels) counts[static_cast<std::size_t>(y)]++;
  std::size_t lo = std::numeric_limits<std::size_t>::max();
  std::size_t hi = 0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  return static_cast<double>(hi) / static_cast<double>(lo);
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset,
                                             double test_fraction,
                                             std::uint64_t seed) {
  if (test_fraction <= 0.0 || test_fraction >= 1.0)
    throw InputError("split_train_test: fraction must lie in (0, 1)");
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t test_count =
      static_cast<std::size_t>(std::round(test_fraction * dataset.size()));
  if (test_count == 0 || test_count >= dataset.size())
    throw InputError("split_train_test: degenerate split");

  auto take = [&](std::size_t begin, std::size_t end, const std::string& suffix) {
    Dataset part;
    part.features = Matrix(end - begin, dataset.features.cols());
    part.labels.reserve(end - begin);
    part.num_classes = dataset.num_classes;
    part.name = dataset.name + suffix;
    for (std::size_t i = begin; i < end; ++i) {
      auto src = dataset.features.row(order[i]);
      auto dst = part.features.row(i - begin);
      std::copy(src.begin(), src.end(), dst.begin());
      part.labels.push_back(dataset.labels[order[i]]);
    }
    return part;
  };
  Dataset test = take(0, test_count, "/test");
  Dataset train = take(test_count, dataset.size(), "/train");
  return {std::move(train), std::move(test)};
}

}  // namespace autoal
