#include "ccs/io_formats.hpp"

#include "ccs/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace ccs::io {

namespace {

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

class LineReader {
 public:
  explicit LineReader(const fs::path& path) : path_(path.string()), in_(open_in(path)) {}

  // Next line that is neither blank nor (optionally) a comment.
  bool next(std::string& line, bool skip_comments) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      if (skip_comments && (line[first] == '#' || line[first] == '%')) continue;
      return true;
    }
    return false;
  }

  std::size_t line() const { return line_no_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_, line_no_, what); }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

template <typename T>
bool parse_number(const std::string& tok, T& out) {
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

template <typename T>
T number_or_fail(const LineReader& reader, const std::string& tok, const char* what) {
  T v{};
  if (!parse_number(tok, v)) reader.fail(std::string("cannot parse ") + what + " '" + tok + "'");
  return v;
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

// `%%obs rows cols` header.
std::pair<Index, Index> read_obs_header(LineReader& reader) {
  std::string line;
  if (!reader.next(line, false)) reader.fail("missing %%obs header");
  const auto tok = split_ws(line);
  if (tok.size() != 3 || tok[0] != "%%obs") {
    throw HeaderError(reader.path(), reader.line(), "expected '%%obs rows cols'");
  }
  const auto rows = number_or_fail<Index>(reader, tok[1], "row count");
  const auto cols = number_or_fail<Index>(reader, tok[2], "column count");
  if (rows < 1 || cols < 1) throw HeaderError(reader.path(), reader.line(), "non-positive dims");
  return {rows, cols};
}

Observation parse_observation(const LineReader& reader, const std::string& line, Index rows,
                              Index cols) {
  const auto tok = split_ws(line);
  if (tok.size() != 4) reader.fail("expected 'i j value multiplicity'");
  Observation o{};
  o.row = number_or_fail<Index>(reader, tok[0], "row index");
  o.col = number_or_fail<Index>(reader, tok[1], "column index");
  o.value = number_or_fail<double>(reader, tok[2], "value");
  const auto mult = number_or_fail<std::int64_t>(reader, tok[3], "multiplicity");
  if (o.row < 0 || o.row >= rows || o.col < 0 || o.col >= cols) {
    throw RangeError(reader.path(), reader.line(), "position outside the declared dimensions");
  }
  if (mult < 1 || mult > std::numeric_limits<std::uint32_t>::max()) {
    throw RangeError(reader.path(), reader.line(), "multiplicity must be a positive count");
  }
  if (!std::isfinite(o.value)) throw RangeError(reader.path(), reader.line(), "non-finite value");
  o.multiplicity = static_cast<std::uint32_t>(mult);
  return o;
}

// Collects observation lines until a `%%` marker or end of file; the marker
// line (if any) is returned through `marker`.
ObservationMultiset read_entries(LineReader& reader, Index rows, Index cols, std::string* marker) {
  std::vector<Observation> entries;
  std::map<std::pair<Index, Index>, std::size_t> seen;
  std::string line;
  if (marker) marker->clear();
  while (reader.next(line, false)) {
    if (starts_with(line, "%%")) {
      if (!marker) reader.fail("unexpected section marker");
      *marker = line;
      break;
    }
    if (line[line.find_first_not_of(" \t")] == '#') continue;
    Observation o = parse_observation(reader, line, rows, cols);
    if (!seen.emplace(std::pair{o.row, o.col}, reader.line()).second) {
      throw RangeError(reader.path(), reader.line(), "duplicate observation position");
    }
    entries.push_back(o);
  }
  return ObservationMultiset(rows, cols, std::move(entries));
}

void write_entries(std::ostream& os, const ObservationMultiset& omega) {
  for (const Observation& e : omega.entries()) {
    os << e.row << ' ' << e.col << ' ' << format_double(e.value) << ' ' << e.multiplicity << '\n';
  }
}

IndexList parse_index_header(LineReader& reader, const std::string& line, const std::string& key,
                             Index bound) {
  auto tok = split_ws(line);
  if (tok.empty() || tok[0] != key) {
    throw HeaderError(reader.path(), reader.line(), "expected '" + key + " ...'");
  }
  IndexList idx;
  for (std::size_t k = 1; k < tok.size(); ++k) {
    const auto v = number_or_fail<Index>(reader, tok[k], "index");
    if (v < 0 || v >= bound) throw RangeError(reader.path(), reader.line(), "index out of range");
    if (!idx.empty() && v <= idx.back()) {
      throw RangeError(reader.path(), reader.line(), "indices must be sorted and distinct");
    }
    idx.push_back(v);
  }
  if (idx.empty()) throw HeaderError(reader.path(), reader.line(), "empty index list");
  return idx;
}

Delimiter detect(const std::string& line) {
  if (line.find("::") != std::string::npos) return Delimiter::DoubleColon;
  if (line.find(',') != std::string::npos) return Delimiter::Comma;
  return Delimiter::Whitespace;
}

const char* separator(Delimiter d) {
  switch (d) {
    case Delimiter::DoubleColon:
      return "::";
    case Delimiter::Comma:
      return ",";
    default:
      return " ";
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("cannot format number");
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------

RatingTriplets read_triplets(const fs::path& path, Delimiter delimiter,
                             const std::optional<RatingScale>& scale) {
  if (scale) scale->validate();
  LineReader reader(path);
  RatingTriplets out;
  std::unordered_map<std::int64_t, Index> users;
  std::unordered_map<std::int64_t, Index> items;
  std::string line;
  while (reader.next(line, true)) {
    const Delimiter d = delimiter == Delimiter::Auto ? detect(line) : delimiter;
    if (d == Delimiter::DoubleColon) line = replace_all(line, "::", " ");
    if (d == Delimiter::Comma) std::replace(line.begin(), line.end(), ',', ' ');
    const auto tok = split_ws(line);
    if (tok.size() < 3 || tok.size() > 4) reader.fail("expected 'user item rating [timestamp]'");
    const auto user = number_or_fail<std::int64_t>(reader, tok[0], "user id");
    const auto item = number_or_fail<std::int64_t>(reader, tok[1], "item id");
    const auto rating = number_or_fail<double>(reader, tok[2], "rating");
    if (!std::isfinite(rating)) throw RangeError(reader.path(), reader.line(), "non-finite rating");
    if (scale && (rating < scale->s_min || rating > scale->s_max)) {
      throw RangeError(reader.path(), reader.line(), "rating outside the declared scale");
    }
    RatingRecord rec{};
    rec.rating = rating;
    if (tok.size() == 4) rec.timestamp = number_or_fail<std::int64_t>(reader, tok[3], "timestamp");
    auto [u, u_new] = users.emplace(user, out.user_count());
    if (u_new) out.user_ids.push_back(user);
    auto [it, i_new] = items.emplace(item, out.item_count());
    if (i_new) out.item_ids.push_back(item);
    rec.user = u->second;
    rec.item = it->second;
    out.records.push_back(rec);
  }
  return out;
}

void write_triplets(const fs::path& path, const RatingTriplets& triplets, Delimiter delimiter) {
  auto out = open_out(path);
  const char* sep = separator(delimiter);
  for (const RatingRecord& r : triplets.records) {
    out << triplets.user_ids.at(static_cast<std::size_t>(r.user)) << sep
        << triplets.item_ids.at(static_cast<std::size_t>(r.item)) << sep
        << format_double(r.rating);
    if (r.timestamp) out << sep << *r.timestamp;
    out << '\n';
  }
  finish(out, path);
}

// ---------------------------------------------------------------------------

EdgeList normalize(EdgeList g) {
  std::vector<std::pair<Index, Index>> kept;
  kept.reserve(g.edges.size());
  for (auto [i, j] : g.edges) {
    if (i < 0 || j < 0 || i >= g.node_count || j >= g.node_count) {
      throw ValidationError("edge endpoint outside [0, node_count)");
    }
    if (i == j) continue;
    if (!g.directed && i > j) std::swap(i, j);
    kept.emplace_back(i, j);
  }
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  g.edges = std::move(kept);
  return g;
}

EdgeList read_edge_list(const fs::path& path, const EdgeReadOptions& options) {
  LineReader reader(path);
  EdgeList g;
  g.directed = options.directed;
  std::optional<Index> declared;
  Index max_id = -1;
  std::string line;
  while (reader.next(line, false)) {
    const auto tok = split_ws(line);
    if (tok[0][0] == '%' || tok[0][0] == '#') {
      if (tok.size() == 3 && tok[1] == "nodes") {
        declared = number_or_fail<Index>(reader, tok[2], "node count");
        if (*declared < 0) throw HeaderError(reader.path(), reader.line(), "negative node count");
      }
      continue;
    }
    if (tok.size() < 2) reader.fail("expected 'i j'");
    Index i = number_or_fail<Index>(reader, tok[0], "node id");
    Index j = number_or_fail<Index>(reader, tok[1], "node id");
    if (options.one_based) {
      --i;
      --j;
    }
    if (i < 0 || j < 0) throw RangeError(reader.path(), reader.line(), "negative node id");
    if (declared && (i >= *declared || j >= *declared)) {
      throw RangeError(reader.path(), reader.line(), "node id exceeds the declared node count");
    }
    max_id = std::max({max_id, i, j});
    g.edges.emplace_back(i, j);
  }
  g.node_count = declared.value_or(max_id + 1);
  return normalize(std::move(g));
}

void write_edge_list(const fs::path& path, const EdgeList& graph) {
  auto out = open_out(path);
  out << "% nodes " << graph.node_count << '\n';
  for (const auto& [i, j] : graph.edges) out << i << ' ' << j << '\n';
  finish(out, path);
}

// ---------------------------------------------------------------------------

Matrix GrayImage::to_matrix() const {
  Matrix m(height, width);
  for (Index y = 0; y < height; ++y) {
    for (Index x = 0; x < width; ++x) m(y, x) = pixels[static_cast<std::size_t>(y * width + x)];
  }
  return m;
}

GrayImage GrayImage::from_matrix(const Matrix& m) {
  require_finite(m, "image matrix");
  GrayImage img{m.cols(), m.rows(), {}};
  img.pixels.reserve(static_cast<std::size_t>(m.size()));
  for (Index y = 0; y < m.rows(); ++y) {
    for (Index x = 0; x < m.cols(); ++x) img.pixels.push_back(std::clamp(m(y, x), 0.0, 1.0));
  }
  return img;
}

GrayImage read_pgm(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  const std::string name = path.string();
  std::size_t line = 1;
  // Header tokens separated by whitespace, with '#' comments to end of line.
  auto token = [&]() {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
      if (c == '#') {
        while ((c = in.get()) != EOF && c != '\n') {
        }
        ++line;
        continue;
      }
      if (std::isspace(c)) {
        if (c == '\n') ++line;
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw HeaderError(name, line, "PGM header ends early");
    return tok;
  };
  if (token() != "P5") throw HeaderError(name, line, "not a binary PGM (magic P5)");
  Index width = 0;
  Index height = 0;
  int maxval = 0;
  if (!parse_number(token(), width) || !parse_number(token(), height) || width < 1 || height < 1) {
    throw HeaderError(name, line, "bad PGM dimensions");
  }
  if (!parse_number(token(), maxval)) throw HeaderError(name, line, "bad PGM maxval");
  if (maxval < 1 || maxval > 255) throw RangeError(name, line, "PGM maxval must be in [1, 255]");

  GrayImage img{width, height, {}};
  const auto count = static_cast<std::size_t>(width * height);
  std::vector<char> raw(count);
  in.read(raw.data(), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) {
    throw TruncatedError(name, line, "PGM payload has " + std::to_string(in.gcount()) + " of " +
                                         std::to_string(count) + " bytes");
  }
  img.pixels.reserve(count);
  for (char c : raw) {
    const int v = static_cast<unsigned char>(c);
    if (v > maxval) throw RangeError(name, line, "PGM pixel exceeds maxval");
    img.pixels.push_back(static_cast<double>(v) / maxval);
  }
  return img;
}

void write_pgm(const fs::path& path, const GrayImage& image) {
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() != static_cast<std::size_t>(image.width * image.height)) {
    throw ValidationError("write_pgm: pixel count does not match width x height");
  }
  auto out = open_out(path, std::ios::binary);
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  for (double v : image.pixels) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("write_pgm: pixel outside [0, 1]");
    out.put(static_cast<char>(static_cast<unsigned char>(std::floor(v * 255.0 + 0.5))));
  }
  finish(out, path);
}

// ---------------------------------------------------------------------------

ObservationMultiset read_observations(const fs::path& path) {
  LineReader reader(path);
  const auto [rows, cols] = read_obs_header(reader);
  return read_entries(reader, rows, cols, nullptr);
}

void write_observations(const fs::path& path, const ObservationMultiset& omega) {
  auto out = open_out(path);
  out << "%%obs " << omega.rows() << ' ' << omega.cols() << '\n';
  write_entries(out, omega);
  finish(out, path);
}

CrossSample read_cross_sample(const fs::path& path) {
  LineReader reader(path);
  const auto [rows, cols] = read_obs_header(reader);
  std::string line;
  if (!reader.next(line, false)) throw HeaderError(reader.path(), reader.line(), "missing %%rows");
  IndexList I = parse_index_header(reader, line, "%%rows", rows);
  if (!reader.next(line, false)) throw HeaderError(reader.path(), reader.line(), "missing %%cols");
  IndexList J = parse_index_header(reader, line, "%%cols", cols);

  if (!reader.next(line, false)) throw TruncatedError(reader.path(), reader.line(), "no entries");
  std::uint64_t row_draws = 0;
  std::uint64_t col_draws = 0;
  if (starts_with(line, "%%draws")) {
    const auto tok = split_ws(line);
    if (tok.size() != 3) throw HeaderError(reader.path(), reader.line(), "expected '%%draws a b'");
    row_draws = number_or_fail<std::uint64_t>(reader, tok[1], "row draw count");
    col_draws = number_or_fail<std::uint64_t>(reader, tok[2], "column draw count");
    if (!reader.next(line, false)) throw TruncatedError(reader.path(), reader.line(), "no entries");
  }
  if (split_ws(line) != std::vector<std::string>{"%%omega_R"}) {
    throw HeaderError(reader.path(), reader.line(), "expected %%omega_R section");
  }
  std::string marker;
  ObservationMultiset omega_r = read_entries(reader, rows, cols, &marker);
  if (split_ws(marker) != std::vector<std::string>{"%%omega_C"}) {
    throw TruncatedError(reader.path(), reader.line(), "expected %%omega_C section");
  }
  ObservationMultiset omega_c = read_entries(reader, rows, cols, &marker);
  if (!marker.empty()) throw HeaderError(reader.path(), reader.line(), "unexpected section");
  try {
    return CrossSample(std::move(I), std::move(J), std::move(omega_r), std::move(omega_c),
                       row_draws, col_draws);
  } catch (const ValidationError& e) {
    throw RangeError(reader.path(), reader.line(), e.what());
  }
}

void write_cross_sample(const fs::path& path, const CrossSample& cs) {
  auto out = open_out(path);
  out << "%%obs " << cs.rows() << ' ' << cs.cols() << '\n' << "%%rows";
  for (Index i : cs.I()) out << ' ' << i;
  out << "\n%%cols";
  for (Index j : cs.J()) out << ' ' << j;
  out << "\n%%draws " << cs.row_index_draws() << ' ' << cs.col_index_draws() << '\n';
  out << "%%omega_R\n";
  write_entries(out, cs.omega_R());
  out << "%%omega_C\n";
  write_entries(out, cs.omega_C());
  finish(out, path);
}

// ---------------------------------------------------------------------------

Matrix read_dense(const fs::path& path) {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line, false)) throw HeaderError(reader.path(), 1, "missing %%dense header");
  const auto head = split_ws(line);
  if (head.size() != 3 || head[0] != "%%dense") {
    throw HeaderError(reader.path(), reader.line(), "expected '%%dense rows cols'");
  }
  const auto rows = number_or_fail<Index>(reader, head[1], "row count");
  const auto cols = number_or_fail<Index>(reader, head[2], "column count");
  if (rows < 1 || cols < 1) throw HeaderError(reader.path(), reader.line(), "non-positive dims");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (!reader.next(line, true)) {
      throw TruncatedError(reader.path(), reader.line(), "expected " + std::to_string(rows) +
                                                             " rows, got " + std::to_string(i));
    }
    const auto tok = split_ws(line);
    if (static_cast<Index>(tok.size()) != cols) reader.fail("wrong number of columns");
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = number_or_fail<double>(reader, tok[static_cast<std::size_t>(j)], "value");
      if (!std::isfinite(m(i, j))) throw RangeError(reader.path(), reader.line(), "non-finite");
    }
  }
  if (reader.next(line, true)) reader.fail("trailing data after the last row");
  return m;
}

void write_dense(const fs::path& path, const Matrix& m) {
  require_finite(m, "write_dense");
  auto out = open_out(path);
  out << "%%dense " << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_double(m(i, j));
    out << '\n';
  }
  finish(out, path);
}

// ---------------------------------------------------------------------------

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kResultHeader << '\n';
  for (const ResultRow& r : rows) {
    for (const std::string* s : {&r.experiment, &r.dataset, &r.metric}) {
      if (s->find_first_of(",\n") != std::string::npos) {
        throw ValidationError("result field contains a separator: " + *s);
      }
    }
    os << r.experiment << ',' << r.dataset << ',' << format_double(r.alpha) << ','
       << format_double(r.delta) << ',' << format_double(r.p) << ',' << r.r << ',' << r.seed << ','
       << r.metric << ',' << format_double(r.value) << ',' << format_double(r.seconds) << '\n';
  }
}

void write_results_csv(const fs::path& path, const std::vector<ResultRow>& rows) {
  auto out = open_out(path);
  write_results_csv(out, rows);
  finish(out, path);
}

std::vector<ResultRow> read_results_csv(const fs::path& path) {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line, false) || line != kResultHeader) {
    throw HeaderError(reader.path(), reader.line(), "missing result CSV header");
  }
  std::vector<ResultRow> rows;
  while (reader.next(line, false)) {
    std::vector<std::string> f;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) f.push_back(cell);
    if (f.size() != 10) reader.fail("expected 10 fields");
    ResultRow r;
    r.experiment = f[0];
    r.dataset = f[1];
    r.alpha = number_or_fail<double>(reader, f[2], "alpha");
    r.delta = number_or_fail<double>(reader, f[3], "delta");
    r.p = number_or_fail<double>(reader, f[4], "p");
    r.r = number_or_fail<Index>(reader, f[5], "r");
    r.seed = number_or_fail<std::int64_t>(reader, f[6], "seed");
    r.metric = f[7];
    r.value = number_or_fail<double>(reader, f[8], "value");
    r.seconds = number_or_fail<double>(reader, f[9], "seconds");
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_metric_csv(std::ostream& os, const std::vector<std::pair<std::string, double>>& rows) {
  os << "metric,value\n";
  for (const auto& [name, value] : rows) os << name << ',' << format_double(value) << '\n';
}

void write_trace_csv(std::ostream& os, const IcurcTrace& trace) {
  os << "iter,e_k,seconds\n";
  for (std::size_t k = 0; k < trace.residuals.size(); ++k) {
    os << k << ',' << format_double(trace.residuals[k]) << ',';
    // Step k produced iterate k, so iterate 0 has no timing.
    if (k >= 1 && k - 1 < trace.seconds.size()) os << format_double(trace.seconds[k - 1]);
    os << '\n';
  }
}

}  // namespace ccs::io
