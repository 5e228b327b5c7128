#ifndef PLCL_DATA_HPP
#define PLCL_DATA_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "plcl/dataset.hpp"
#include "plcl/types.hpp"

namespace plcl {

// ---------------------------------------------------------------------------
// Controlled candidate corruption

enum class CorruptionMode {
  /// One extra label per corrupted sample; the class's fixed partner label is
  /// chosen with probability epsilon, otherwise one of the other l-2 labels.
  CoupledEpsilon,
  /// r extra labels drawn without replacement from the l-1 non-true labels.
  RandomR,
};

struct CorruptionSpec {
  double p = 1.0;
  int r = 1;
  double epsilon = 0.0;
  CorruptionMode mode = CorruptionMode::RandomR;
  std::uint64_t seed = 0;

  void validate(int num_labels) const {
    detail::require(p >= 0.0 && p <= 1.0, ErrorKind::InvalidSpec, "p must lie in [0,1]");
    if (mode == CorruptionMode::CoupledEpsilon) {
      detail::require(num_labels >= 3, ErrorKind::InvalidSpec, "coupled-epsilon mode needs at least 3 labels");
      detail::require(epsilon >= 0.0 && epsilon <= 1.0, ErrorKind::InvalidSpec, "epsilon must lie in [0,1]");
      detail::require(r == 1, ErrorKind::InvalidSpec, "coupled-epsilon mode uses r = 1");
    } else {
      detail::require(r >= 1 && r < num_labels, ErrorKind::InvalidSpec,
                      "r must satisfy 1 <= r <= l-1 (r=" + std::to_string(r) + ", l=" + std::to_string(num_labels) +
                          ")");
    }
  }
};

inline std::string_view to_string(CorruptionMode mode) {
  return mode == CorruptionMode::CoupledEpsilon ? "coupled-epsilon" : "random-r";
}

inline CorruptionMode parse_corruption_mode(std::string_view name) {
  if (name == "coupled-epsilon" || name == "epsilon") return CorruptionMode::CoupledEpsilon;
  if (name == "random-r" || name == "r") return CorruptionMode::RandomR;
  throw Error(ErrorKind::InvalidSpec, "unknown corruption mode '" + std::string(name) + "'");
}

/// Coupling partner of every class for a given seed (coupled-epsilon mode).
inline std::vector<int> coupling_partners(int num_labels, std::mt19937_64& rng) {
  std::vector<int> partners(static_cast<std::size_t>(num_labels));
  for (int c = 0; c < num_labels; ++c) {
    std::uniform_int_distribution<int> pick(0, num_labels - 2);
    const int draw = pick(rng);
    partners[static_cast<std::size_t>(c)] = draw >= c ? draw + 1 : draw;
  }
  return partners;
}

struct CorruptionResult {
  PartialLabelMatrix Y;
  std::vector<Index> corrupted;  // sorted sample indices
  std::vector<int> partners;     // empty in random-r mode
};

inline CorruptionResult synthesize_candidates_detailed(const LabelVector& truth, int num_labels,
                                                       const CorruptionSpec& spec) {
  spec.validate(num_labels);
  const auto n = static_cast<Index>(truth.size());
  std::mt19937_64 rng(spec.seed);

  CorruptionResult result;
  if (spec.mode == CorruptionMode::CoupledEpsilon) result.partners = coupling_partners(num_labels, rng);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto count = static_cast<std::size_t>(std::floor(spec.p * static_cast<double>(n)));
  result.corrupted.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(result.corrupted.begin(), result.corrupted.end());

  Matrix y = Matrix::Zero(n, num_labels);
  for (Index i = 0; i < n; ++i) {
    const int t = truth[static_cast<std::size_t>(i)];
    detail::require(t >= 0 && t < num_labels, ErrorKind::InvalidInput, "true label out of range");
    y(i, t) = 1.0;
  }

  std::bernoulli_distribution coin(spec.epsilon);
  std::vector<int> pool;
  for (Index i : result.corrupted) {
    const int t = truth[static_cast<std::size_t>(i)];
    if (spec.mode == CorruptionMode::CoupledEpsilon) {
      const int partner = result.partners[static_cast<std::size_t>(t)];
      if (coin(rng)) {
        y(i, partner) = 1.0;
      } else {
        // uniform over labels other than the truth and the partner
        std::uniform_int_distribution<int> pick(0, num_labels - 3);
        int draw = pick(rng);
        for (int skip : {std::min(t, partner), std::max(t, partner)}) {
          if (draw >= skip) ++draw;
        }
        y(i, draw) = 1.0;
      }
    } else {
      pool.clear();
      for (int c = 0; c < num_labels; ++c) {
        if (c != t) pool.push_back(c);
      }
      // partial Fisher-Yates: the first r slots are a uniform r-subset
      for (int s = 0; s < spec.r; ++s) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(s), pool.size() - 1);
        std::swap(pool[static_cast<std::size_t>(s)], pool[pick(rng)]);
        y(i, pool[static_cast<std::size_t>(s)]) = 1.0;
      }
    }
  }
  result.Y = PartialLabelMatrix(std::move(y));
  return result;
}

inline PartialLabelMatrix synthesize_candidates(const LabelVector& truth, int num_labels, const CorruptionSpec& spec) {
  return synthesize_candidates_detailed(truth, num_labels, spec).Y;
}

// ---------------------------------------------------------------------------
// Splitting

struct DatasetSplit {
  PartialDataset train;
  PartialDataset test;
  std::vector<Index> train_indices;
  std::vector<Index> test_indices;
};

/// Uniform random partition; floor(ratio * n) samples go to training.
inline DatasetSplit split(const PartialDataset& data, double ratio, std::uint64_t seed) {
  detail::require(ratio > 0.0 && ratio < 1.0, ErrorKind::InvalidInput, "split ratio must lie in (0,1)");
  const Index n = data.size();
  const auto n_train = static_cast<Index>(std::floor(ratio * static_cast<double>(n)));
  detail::require(n_train >= 1 && n_train < n, ErrorKind::InvalidInput,
                  "split leaves an empty side (n=" + std::to_string(n) + ")");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  DatasetSplit out;
  out.train_indices.assign(order.begin(), order.begin() + n_train);
  out.test_indices.assign(order.begin() + n_train, order.end());
  std::sort(out.train_indices.begin(), out.train_indices.end());
  std::sort(out.test_indices.begin(), out.test_indices.end());
  out.train = data.subset(out.train_indices);
  out.test = data.subset(out.test_indices);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic blobs

/// l isotropic unit-variance Gaussian clusters whose means are pairwise
/// `separation` apart (simplex vertices when q >= l, evenly spaced on the
/// first axis otherwise). Labels are one-hot; class counts differ by at
/// most one.
inline PartialDataset make_blobs(Index n, int num_labels, Index q, double separation, std::uint64_t seed) {
  detail::require(num_labels >= 1 && q >= 1, ErrorKind::InvalidInput, "make_blobs needs l >= 1 and q >= 1");
  detail::require(n >= num_labels, ErrorKind::InvalidInput, "make_blobs needs n >= l");
  detail::require(std::isfinite(separation) && separation >= 0.0, ErrorKind::InvalidInput,
                  "separation must be finite and nonnegative");

  Matrix means = Matrix::Zero(num_labels, q);
  if (q >= num_labels) {
    for (int c = 0; c < num_labels; ++c) means(c, c) = separation / std::sqrt(2.0);
  } else {
    for (int c = 0; c < num_labels; ++c) means(c, 0) = separation * static_cast<double>(c);
  }

  std::mt19937_64 rng(seed);
  LabelVector labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(i % num_labels);
  std::shuffle(labels.begin(), labels.end(), rng);

  std::normal_distribution<double> noise(0.0, 1.0);
  PartialDataset data;
  data.X.resize(n, q);
  for (Index i = 0; i < n; ++i) {
    for (Index d = 0; d < q; ++d) data.X(i, d) = means(labels[static_cast<std::size_t>(i)], d) + noise(rng);
  }
  data.Y = PartialLabelMatrix::one_hot(labels, num_labels);
  data.true_labels = std::move(labels);
  return data;
}

// ---------------------------------------------------------------------------
// Text I/O
//
// One row per line, comma- or whitespace-separated (decided per line by the
// presence of a comma). Blank lines and lines starting with '#' are skipped.

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  if (line.find(',') != std::string_view::npos) {
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  } else {
    std::size_t pos = 0;
    while (pos < line.size()) {
      const auto begin = line.find_first_not_of(" \t\r", pos);
      if (begin == std::string_view::npos) break;
      const auto end = line.find_first_of(" \t\r", begin);
      fields.push_back(line.substr(begin, end == std::string_view::npos ? std::string_view::npos : end - begin));
      pos = end == std::string_view::npos ? line.size() : end;
    }
  }
  return fields;
}

template <typename T>
T parse_number(std::string_view field, const std::string& path, std::size_t line_no) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && field.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw Error(ErrorKind::ParseError,
                path + ":" + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "'");
  }
  return value;
}

struct ParsedRow {
  std::size_t line_no;
  std::vector<double> values;
};

inline std::vector<ParsedRow> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::vector<ParsedRow> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    ParsedRow row{line_no, {}};
    for (auto field : split_fields(body)) row.values.push_back(parse_number<double>(field, path, line_no));
    if (rows.empty()) {
      width = row.values.size();
    } else if (row.values.size() != width) {
      throw Error(ErrorKind::ParseError, path + ":" + std::to_string(line_no) + ": expected " +
                                             std::to_string(width) + " fields, found " +
                                             std::to_string(row.values.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix rows_to_matrix(const std::vector<ParsedRow>& rows) {
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().values.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].values.size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i].values[j];
  }
  return m;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::ofstream open_output(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  return out;
}

}  // namespace detail

inline Matrix read_matrix(const std::string& path) { return detail::rows_to_matrix(detail::read_rows(path)); }

inline LabelVector read_labels(const std::string& path) {
  const auto rows = detail::read_rows(path);
  LabelVector labels;
  labels.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.values.size() != 1 || row.values[0] != std::floor(row.values[0])) {
      throw Error(ErrorKind::ParseError, path + ":" + std::to_string(row.line_no) + ": expected one integer label");
    }
    labels.push_back(static_cast<int>(row.values[0]));
  }
  return labels;
}

/// Loads the three-file format and validates every dataset invariant.
inline PartialDataset load_dataset(const std::string& features_path, const std::string& candidates_path,
                                   const std::optional<std::string>& truth_path = std::nullopt) {
  PartialDataset data;
  data.X = read_matrix(features_path);
  const auto candidate_rows = detail::read_rows(candidates_path);
  for (std::size_t i = 0; i < candidate_rows.size(); ++i) {
    double count = 0.0;
    for (double v : candidate_rows[i].values) {
      if (v != 0.0 && v != 1.0) {
        throw Error(ErrorKind::InvariantViolation, candidates_path + ": row " + std::to_string(i) + " (line " +
                                                       std::to_string(candidate_rows[i].line_no) +
                                                       ") has a non-binary entry");
      }
      count += v;
    }
    if (count == 0.0) {
      throw Error(ErrorKind::InvariantViolation, candidates_path + ": row " + std::to_string(i) + " (line " +
                                                     std::to_string(candidate_rows[i].line_no) +
                                                     ") has an empty candidate set");
    }
  }
  data.Y = PartialLabelMatrix(detail::rows_to_matrix(candidate_rows));
  if (truth_path) data.true_labels = read_labels(*truth_path);
  detail::require(data.X.rows() > 0, ErrorKind::InvariantViolation, features_path + " holds no samples");
  data.validate();
  return data;
}

inline void write_matrix(const std::string& path, const Matrix& m, bool integral = false) {
  auto out = detail::open_output(path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      if (integral) {
        out << static_cast<long long>(m(i, j));
      } else {
        out << detail::format_double(m(i, j));
      }
    }
    out << '\n';
  }
}

inline void write_labels(const std::string& path, const LabelVector& labels) {
  auto out = detail::open_output(path);
  for (int label : labels) out << label << '\n';
}

inline void save_dataset(const PartialDataset& data, const std::string& features_path,
                         const std::string& candidates_path, const std::optional<std::string>& truth_path) {
  write_matrix(features_path, data.X);
  write_matrix(candidates_path, data.Y.matrix(), true);
  if (truth_path && data.true_labels) write_labels(*truth_path, *data.true_labels);
}

}  // namespace plcl

#endif  // PLCL_DATA_HPP
