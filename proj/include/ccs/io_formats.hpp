#pragma once

#include "ccs/icurc.hpp"
#include "ccs/linalg.hpp"
#include "ccs/metrics.hpp"
#include "ccs/sampling.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace ccs::io {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Rating triplets: `user item rating [timestamp]` per line, separated by
// whitespace, `::` or commas. Ids are reindexed to 0-based in order of
// first appearance.

enum class Delimiter { Auto, Whitespace, DoubleColon, Comma };

struct RatingRecord {
  Index user;
  Index item;
  double rating;
  std::optional<std::int64_t> timestamp;

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

struct RatingTriplets {
  std::vector<RatingRecord> records;
  /// Original ids, indexed by the 0-based user / item index.
  std::vector<std::int64_t> user_ids;
  std::vector<std::int64_t> item_ids;

  Index user_count() const { return static_cast<Index>(user_ids.size()); }
  Index item_count() const { return static_cast<Index>(item_ids.size()); }

  friend bool operator==(const RatingTriplets&, const RatingTriplets&) = default;
};

/// Ratings outside `scale` (when given) raise RangeError.
RatingTriplets read_triplets(const fs::path& path, Delimiter delimiter = Delimiter::Auto,
                             const std::optional<RatingScale>& scale = std::nullopt);

/// Writes original ids; Auto writes whitespace.
void write_triplets(const fs::path& path, const RatingTriplets& triplets,
                    Delimiter delimiter = Delimiter::Whitespace);

// ---------------------------------------------------------------------------
// Edge lists: `i j [ignored...]` per line; `%` and `#` start comments and a
// `% nodes N` line fixes the node count. Undirected lists store (min, max)
// pairs; self loops and duplicates are dropped.

struct EdgeList {
  std::vector<std::pair<Index, Index>> edges;
  Index node_count = 0;
  bool directed = false;

  friend bool operator==(const EdgeList&, const EdgeList&) = default;
};

struct EdgeReadOptions {
  bool directed = false;
  /// Subtract one from every id (KONECT-style files).
  bool one_based = false;
};

EdgeList normalize(EdgeList g);
EdgeList read_edge_list(const fs::path& path, const EdgeReadOptions& options = {});
void write_edge_list(const fs::path& path, const EdgeList& graph);

// ---------------------------------------------------------------------------
// Binary 8-bit PGM (P5), pixels mapped linearly to [0, 1].

struct GrayImage {
  Index width = 0;
  Index height = 0;
  std::vector<double> pixels;  // row-major, height x width

  Matrix to_matrix() const;
  /// Clips to [0, 1].
  static GrayImage from_matrix(const Matrix& m);

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

GrayImage read_pgm(const fs::path& path);
/// Quantizes with round-half-up to 8 bits.
void write_pgm(const fs::path& path, const GrayImage& image);

// ---------------------------------------------------------------------------
// Observations: `%%obs rows cols` then `i j value multiplicity` per line.
// Cross samples add `%%rows ...` and `%%cols ...` header lines, an optional
// `%%draws row_draws col_draws` line, and `%%omega_R` / `%%omega_C`
// section markers before the respective entries.

ObservationMultiset read_observations(const fs::path& path);
void write_observations(const fs::path& path, const ObservationMultiset& omega);
CrossSample read_cross_sample(const fs::path& path);
void write_cross_sample(const fs::path& path, const CrossSample& cs);

// ---------------------------------------------------------------------------
// Dense matrices: `%%dense rows cols` then one whitespace-separated row per line.

Matrix read_dense(const fs::path& path);
void write_dense(const fs::path& path, const Matrix& m);

// ---------------------------------------------------------------------------
// Result tables.

struct ResultRow {
  std::string experiment;
  std::string dataset;
  double alpha = 0;
  double delta = 0;
  double p = 0;
  Index r = 0;
  std::int64_t seed = 0;
  std::string metric;
  double value = 0;
  double seconds = 0;
};

inline constexpr const char* kResultHeader =
    "experiment,dataset,alpha,delta,p,r,seed,metric,value,seconds";

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_results_csv(const fs::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const fs::path& path);

/// `metric,value` rows.
void write_metric_csv(std::ostream& os, const std::vector<std::pair<std::string, double>>& rows);

/// `iter,e_k,seconds`; seconds is empty when timing was not recorded.
void write_trace_csv(std::ostream& os, const IcurcTrace& trace);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace ccs::io
