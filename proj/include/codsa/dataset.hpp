#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "codsa/matrix.hpp"
#include "codsa/nn.hpp"
#include "codsa/rng.hpp"

namespace codsa {

enum class Provenance : std::uint8_t { real, synthetic };
enum class TargetKind : std::uint8_t { none, continuous, binary };

/// Tabular sample set: feature matrix, optional target, a 1-based region
/// index per row and a real/synthetic provenance flag.
struct Dataset {
  Matrix features;
  TargetKind target_kind = TargetKind::none;
  std::vector<double> target;
  std::vector<int> region;
  std::vector<Provenance> provenance;
  int num_regions = 0;  // K; regions are 1..K

  std::size_t n() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }

  static Dataset empty_like(const Dataset& other) {
    Dataset d;
    d.features = Matrix(0, other.dim());
    d.target_kind = other.target_kind;
    d.num_regions = other.num_regions;
    return d;
  }

  void validate() const {
    if (target_kind != TargetKind::none && target.size() != n())
      throw std::invalid_argument("Dataset: target length mismatch");
    if (region.size() != n())
      throw std::invalid_argument("Dataset: region length mismatch");
    if (provenance.size() != n())
      throw std::invalid_argument("Dataset: provenance length mismatch");
    if (!features.all_finite())
      throw std::invalid_argument("Dataset: non-finite feature value");
    for (double v : target)
      if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite target");
    for (int k : region)
      if (k < 1 || k > num_regions)
        throw std::invalid_argument("Dataset: region index out of 1..K");
  }

  /// Rows at `idx`, in the given order. Keeps schema and K.
  Dataset select(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.features = Matrix(idx.size(), dim());
    out.target_kind = target_kind;
    out.num_regions = num_regions;
    out.region.reserve(idx.size());
    out.provenance.reserve(idx.size());
    if (target_kind != TargetKind::none) out.target.reserve(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const std::size_t i = idx[r];
      std::copy(features.row(i), features.row(i) + dim(), out.features.row(r));
      out.region.push_back(region[i]);
      out.provenance.push_back(provenance[i]);
      if (target_kind != TargetKind::none) out.target.push_back(target[i]);
    }
    return out;
  }

  std::vector<std::size_t> rows_in_region(int k) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n(); ++i)
      if (region[i] == k) idx.push_back(i);
    return idx;
  }

  void append_row(const double* feat, double y, int k, Provenance prov) {
    Matrix grown(features.rows() + 1, features.cols() == 0 ? 0 : features.cols());
    grown.storage().assign(features.storage().begin(), features.storage().end());
    grown.storage().insert(grown.storage().end(), feat, feat + dim());
    features = std::move(grown);
    if (target_kind != TargetKind::none) target.push_back(y);
    region.push_back(k);
    provenance.push_back(prov);
  }

  bool same_schema(const Dataset& other) const {
    return dim() == other.dim() && target_kind == other.target_kind &&
           num_regions == other.num_regions;
  }
};

struct RegionStats {
  std::vector<std::size_t> counts;      // counts[k-1] = n_k
  std::vector<double> proportions;      // p_k = n_k / n
};

/// Integer quotas w_k * total rounded so they sum to total exactly
/// (largest-remainder method, ties broken by ascending index).
inline std::vector<long> largest_remainder_quotas(const std::vector<double>& weights,
                                                  long total) {
  if (total < 0) throw std::invalid_argument("largest_remainder_quotas: negative total");
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("largest_remainder_quotas: negative weight");
    wsum += w;
  }
  if (weights.empty() || wsum <= 0.0) {
    if (total == 0) return std::vector<long>(weights.size(), 0);
    throw std::invalid_argument("largest_remainder_quotas: zero weight mass");
  }
  std::vector<long> quota(weights.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  long assigned = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double exact = weights[k] / wsum * static_cast<double>(total);
    quota[k] = static_cast<long>(std::floor(exact));
    assigned += quota[k];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (long i = 0; i < total - assigned; ++i)
    quota[remainders[static_cast<std::size_t>(i)].second] += 1;
  return quota;
}

struct SplitResult {
  Dataset generator_part;  // Z_g, size ~ floor(r * n)
  Dataset reserved_part;   // Z_r, the remainder
};

inline RegionStats region_stats(const Dataset& data) {
  if (data.n() == 0)
    throw std::invalid_argument("region_stats: proportions undefined on empty dataset");
  RegionStats s;
  s.counts.assign(static_cast<std::size_t>(data.num_regions), 0);
  for (int k : data.region) s.counts[static_cast<std::size_t>(k - 1)] += 1;
  s.proportions.resize(s.counts.size());
  for (std::size_t k = 0; k < s.counts.size(); ++k)
    s.proportions[k] = static_cast<double>(s.counts[k]) / static_cast<double>(data.n());
  return s;
}

/// Per-region split: exactly floor(r * n_k) rows of every region go to Z_g,
/// the rest to Z_r. The global |Z_g| can differ from floor(r*n) by at most
/// K-1 rows. Row order within each part follows the original dataset.
inline SplitResult stratified_split(const Dataset& data, double r, std::uint64_t seed) {
  if (r < 0.0 || r > 1.0)
    throw std::invalid_argument("stratified_split: r must be in [0,1]");
  std::vector<std::size_t> gen_idx, res_idx;
  for (int k = 1; k <= data.num_regions; ++k) {
    auto rows = data.rows_in_region(k);
    Rng rng(derive_seed(seed, "split", static_cast<std::uint64_t>(k)));
    auto order = shuffled_indices(rows.size(), rng);
    const auto take = static_cast<std::size_t>(
        std::floor(r * static_cast<double>(rows.size())));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      (i < take ? gen_idx : res_idx).push_back(rows[order[i]]);
    }
  }
  std::sort(gen_idx.begin(), gen_idx.end());
  std::sort(res_idx.begin(), res_idx.end());
  return {data.select(gen_idx), data.select(res_idx)};
}

/// Z_c = Z_r ∪ Z~: stable concatenation (reserved rows first), provenance kept.
inline Dataset mix(const Dataset& reserved, const Dataset& synthetic) {
  if (!reserved.same_schema(synthetic))
    throw std::invalid_argument("mix: schema mismatch between reserved and synthetic data");
  Dataset out = reserved;
  out.features = Matrix(reserved.n() + synthetic.n(), reserved.dim());
  std::copy(reserved.features.storage().begin(), reserved.features.storage().end(),
            out.features.storage().begin());
  std::copy(synthetic.features.storage().begin(), synthetic.features.storage().end(),
            out.features.storage().begin() + static_cast<std::ptrdiff_t>(
                reserved.features.storage().size()));
  out.target.insert(out.target.end(), synthetic.target.begin(), synthetic.target.end());
  out.region.insert(out.region.end(), synthetic.region.begin(), synthetic.region.end());
  out.provenance.insert(out.provenance.end(), synthetic.provenance.begin(),
                        synthetic.provenance.end());
  return out;
}

// ---------------------------------------------------------------------------
// CSV interchange. Header: f0..f{d-1}[,y],region[,provenance]; UTF-8, '.'
// decimal point, 1-based integer regions. Doubles are written with
// shortest-round-trip formatting, so write/read is lossless.
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

namespace detail {

inline double parse_double_cell(const std::string& cell, std::size_t line_no) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw std::runtime_error("CSV parse error at line " + std::to_string(line_no) +
                             ": non-numeric cell '" + cell + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

inline void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path.string());
  for (std::size_t j = 0; j < data.dim(); ++j) out << "f" << j << ",";
  if (data.target_kind != TargetKind::none) out << "y,";
  out << "region,provenance\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.dim(); ++j)
      out << format_double(data.features(i, j)) << ",";
    if (data.target_kind != TargetKind::none)
      out << format_double(data.target[i]) << ",";
    out << data.region[i] << ","
        << (data.provenance[i] == Provenance::real ? "real" : "synthetic") << "\n";
  }
  if (!out) throw std::runtime_error("write_csv: write failed for " + path.string());
}

inline Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("read_csv: empty file " + path.string());
  auto header = detail::split_csv_line(line);

  std::size_t d = 0;
  while (d < header.size() && header[d] == "f" + std::to_string(d)) ++d;
  std::size_t col = d;
  bool has_y = col < header.size() && header[col] == "y";
  if (has_y) ++col;
  if (col >= header.size() || header[col] != "region")
    throw std::runtime_error("read_csv: missing required 'region' column in " +
                             path.string());
  ++col;
  bool has_prov = col < header.size() && header[col] == "provenance";
  if (has_prov) ++col;
  if (col != header.size())
    throw std::runtime_error("read_csv: unknown column '" + header[col] + "' in " +
                             path.string());

  std::vector<double> feat_values;
  Dataset data;
  data.target_kind = has_y ? TargetKind::continuous : TargetKind::none;
  std::size_t line_no = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error("CSV parse error at line " + std::to_string(line_no) +
                               ": expected " + std::to_string(header.size()) +
                               " cells, got " + std::to_string(cells.size()));
    for (std::size_t j = 0; j < d; ++j)
      feat_values.push_back(detail::parse_double_cell(cells[j], line_no));
    std::size_t c = d;
    if (has_y) data.target.push_back(detail::parse_double_cell(cells[c++], line_no));
    const double region_val = detail::parse_double_cell(cells[c++], line_no);
    const int k = static_cast<int>(region_val);
    if (k < 1 || static_cast<double>(k) != region_val)
      throw std::runtime_error("CSV parse error at line " + std::to_string(line_no) +
                               ": region must be a positive integer");
    data.region.push_back(k);
    if (has_prov) {
      const std::string& p = cells[c];
      if (p == "real") data.provenance.push_back(Provenance::real);
      else if (p == "synthetic") data.provenance.push_back(Provenance::synthetic);
      else
        throw std::runtime_error("CSV parse error at line " + std::to_string(line_no) +
                                 ": provenance must be real|synthetic");
    } else {
      data.provenance.push_back(Provenance::real);
    }
    ++rows;
  }
  data.features = Matrix(rows, d);
  data.features.storage() = std::move(feat_values);
  data.num_regions = 0;
  for (int k : data.region) data.num_regions = std::max(data.num_regions, k);
  // A binary 0/1 target column is read back as continuous; callers that need
  // the distinction re-tag after load.
  data.validate();
  return data;
}

inline void retag_binary_target(Dataset& data) {
  for (double v : data.target)
    if (v != 0.0 && v != 1.0)
      throw std::invalid_argument("retag_binary_target: target has non 0/1 values");
  data.target_kind = TargetKind::binary;
}

}  // namespace codsa
