#include "ccs/harness.hpp"

#include "ccs/icurc.hpp"
#include "ccs/solvers_aux.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace ccs::harness {

namespace {

using Clock = std::chrono::steady_clock;

// Dense baselines (SVP, TSC) are refused above this many cells.
constexpr double kDenseCellLimit = 2000.0 * 2000.0;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::uint64_t round_count(double v) {
  return static_cast<std::uint64_t>(std::max<long long>(1, std::llround(v)));
}

std::uint64_t key(Index i, Index j, Index cols) {
  return static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(cols) +
         static_cast<std::uint64_t>(j);
}

void require_dense_ok(SolverKind solver, Index rows, Index cols) {
  if (solver != SolverKind::Icurc &&
      static_cast<double>(rows) * static_cast<double>(cols) > kDenseCellLimit) {
    throw ValidationError(std::string(to_string(solver)) +
                          " forms a dense estimate; refused above 2000 x 2000 cells");
  }
}

SubSolverSpec sub_spec(const ExperimentConfig& config) {
  SubSolverSpec spec;
  spec.rank = config.r;
  spec.eps = config.eps;
  spec.max_iter = config.max_iter;
  spec.step_scale = config.step_scale;
  return spec;
}

IcurcConfig icurc_config(const ExperimentConfig& config, const CrossSample& cs) {
  IcurcConfig c;
  c.rank = config.r;
  c.eps = config.eps;
  c.max_iter = config.max_iter;
  const StepSizes eta = default_step_sizes(cs);
  c.eta_r = config.step_scale * eta.eta_r;
  c.eta_c = config.step_scale * eta.eta_c;
  c.eta_u = config.step_scale * eta.eta_u;
  return c;
}

// Entry predictor produced by one of the solvers.
struct Estimate {
  std::function<double(Index, Index)> at;
  bool converged = false;
  int iterations = 0;
};

// Solves from the cross sample; SVP instead draws a uniform sample of the
// same total size from `source`.
Estimate solve_with(const ExperimentConfig& config, const CrossSample& cs,
                    const EntrySource& source, Rng& rng) {
  switch (config.solver) {
    case SolverKind::Icurc: {
      auto res = std::make_shared<IcurcResult>(solve(cs, icurc_config(config, cs)));
      auto eval = std::make_shared<CurEvaluator>(res->factors);
      return {[eval](Index i, Index j) { return (*eval)(i, j); }, res->trace.converged,
              res->trace.iterations};
    }
    case SolverKind::Tsc: {
      auto res = std::make_shared<TscResult>(tsc_solve(cs, sub_spec(config)));
      return {[res](Index i, Index j) { return res->estimate(i, j); },
              res->row_trace.converged && res->col_trace.converged,
              std::max(res->row_trace.iterations, res->col_trace.iterations)};
    }
    case SolverKind::Svp: {
      const std::uint64_t draws = cs.omega_R().total_draws() + cs.omega_C().total_draws();
      const ObservationMultiset omega = uniform_sample(cs.rows(), cs.cols(), source, draws, rng);
      auto res = std::make_shared<SvpResult>(svp_solve(omega, sub_spec(config)));
      return {[res](Index i, Index j) { return res->estimate(i, j); }, res->trace.converged,
              res->trace.iterations};
    }
  }
  throw ValidationError("unknown solver");
}

double ground_truth_error(const Matrix& x, const Estimate& est) {
  double err2 = 0.0;
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      const double d = x(i, j) - est.at(i, j);
      err2 += d * d;
    }
  }
  const double norm = x.norm();
  if (norm == 0.0) return err2 == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(err2) / norm;
}

bool rank_fits(const CrossSample& cs, Index r) {
  return static_cast<Index>(cs.I().size()) >= r && static_cast<Index>(cs.J().size()) >= r;
}

TrialOutcome solve_synthetic(const ExperimentConfig& config, const Matrix& x, const CrossSample& cs,
                             Rng& rng) {
  TrialOutcome out;
  out.alpha = overall_rate(cs);
  if (config.solver != SolverKind::Svp && !rank_fits(cs, config.r)) {
    // Fewer selected rows or columns than the rank: the cross cannot
    // determine X, so the trial counts as a failure.
    out.error = std::numeric_limits<double>::infinity();
    return out;
  }
  const EntrySource source = [&x](Index i, Index j) { return x(i, j); };
  if (config.solver == SolverKind::Icurc) {
    const IcurcResult res = solve(cs, icurc_config(config, cs));
    out.error = relative_error(x, res.factors);
    out.solver_converged = res.trace.converged;
    out.iterations = res.trace.iterations;
    return out;
  }
  const Estimate est = solve_with(config, cs, source, rng);
  out.error = ground_truth_error(x, est);
  out.solver_converged = est.converged;
  out.iterations = est.iterations;
  return out;
}

TrialOutcome run_size_draws_trial(const ExperimentConfig& config, Index n, std::uint64_t s,
                                  std::uint64_t seed) {
  Rng rng(seed);
  const Matrix x = synth_lowrank(n, config.r, rng);
  const std::uint64_t m = concentrated_index_draws(n, config.r, config.c);
  IndexList rows = sample_indices(n, m, rng).distinct;
  IndexList cols = sample_indices(n, m, rng).distinct;
  const EntrySource source = [&x](Index i, Index j) { return x(i, j); };
  const std::uint64_t half = std::max<std::uint64_t>(1, s / 2);
  const std::uint64_t rest = std::max<std::uint64_t>(1, s - s / 2);
  const CrossSample cs =
      ccs_sample_on(n, n, source, std::move(rows), std::move(cols), half, rest, rng);
  return solve_synthetic(config, x, cs, rng);
}

void finish_cell(PhaseCell& cell, double threshold) {
  std::size_t ok = 0;
  double alpha = 0.0;
  for (const TrialOutcome& t : cell.trials) {
    if (t.error <= threshold) ++ok;
    alpha += t.alpha;
  }
  const auto count = static_cast<double>(cell.trials.size());
  cell.success_fraction = static_cast<double>(ok) / count;
  cell.mean_alpha = alpha / count;
}

io::ResultRow base_row(const ExperimentConfig& config, const std::string& experiment) {
  io::ResultRow row;
  row.experiment = experiment;
  row.dataset = config.dataset;
  row.delta = config.delta;
  row.alpha = config.alpha;
  row.r = config.r;
  row.seed = static_cast<std::int64_t>(config.seed);
  return row;
}

void append_trials(std::vector<io::ResultRow>& out, const io::ResultRow& base,
                   const std::string& metric, const std::vector<double>& values,
                   const std::vector<double>& alpha, const std::vector<double>& seconds) {
  for (std::size_t t = 0; t < values.size(); ++t) {
    io::ResultRow row = base;
    row.seed = base.seed + static_cast<std::int64_t>(t);
    row.alpha = alpha[t];
    row.metric = metric;
    row.value = values[t];
    row.seconds = seconds[t];
    out.push_back(row);
  }
  io::ResultRow row = base;
  row.alpha = mean(alpha);
  row.metric = metric + "_mean";
  row.value = mean(values);
  row.seconds = mean(seconds);
  out.push_back(row);
}

// Rating lookup of the item x user matrix.
struct RatingMatrix {
  Index rows = 0;  // items
  Index cols = 0;  // users
  std::vector<Observation> entries;
  std::unordered_map<std::uint64_t, double> value;
};

RatingMatrix build_rating_matrix(const io::RatingTriplets& data) {
  RatingMatrix m;
  m.rows = data.item_count();
  m.cols = data.user_count();
  std::unordered_map<std::uint64_t, std::size_t> slot;
  for (const io::RatingRecord& rec : data.records) {
    const std::uint64_t k = key(rec.item, rec.user, m.cols);
    auto [it, fresh] = slot.emplace(k, m.entries.size());
    if (fresh) {
      m.entries.push_back({rec.item, rec.user, rec.rating, 1});
    } else {
      m.entries[it->second].value = rec.rating;
    }
    m.value[k] = rec.rating;
  }
  return m;
}

RatingScale infer_scale(const RatingMatrix& m) {
  RatingScale scale;
  if (m.entries.empty()) return scale;
  const auto [lo, hi] = std::minmax_element(
      m.entries.begin(), m.entries.end(),
      [](const Observation& a, const Observation& b) { return a.value < b.value; });
  scale.s_min = lo->value;
  scale.s_max = hi->value > lo->value ? hi->value : lo->value + 1.0;
  scale.step = 1.0;
  return scale;
}

IndexList mark(const IndexList& idx, Index bound) {
  IndexList in(static_cast<std::size_t>(bound), 0);
  for (Index i : idx) in[static_cast<std::size_t>(i)] = 1;
  return in;
}

// Partial Fisher-Yates: the first k entries become a uniform k-subset.
template <typename T>
void choose_prefix(std::vector<T>& v, std::size_t k, Rng& rng) {
  for (std::size_t a = 0; a < k; ++a) {
    std::uniform_int_distribution<std::size_t> pick(a, v.size() - 1);
    std::swap(v[a], v[pick(rng)]);
  }
}

// Splits picked observations of the crosses into Omega_R and Omega_C;
// entries in I x J go to either side with equal probability.
CrossSample cross_from_picks(Index rows, Index cols, IndexList I, IndexList J,
                             const std::vector<Observation>& picks, Rng& rng) {
  const IndexList in_i = mark(I, rows);
  const IndexList in_j = mark(J, cols);
  std::vector<Observation> r_side;
  std::vector<Observation> c_side;
  std::bernoulli_distribution coin(0.5);
  for (const Observation& o : picks) {
    const bool ri = in_i[static_cast<std::size_t>(o.row)] != 0;
    const bool cj = in_j[static_cast<std::size_t>(o.col)] != 0;
    if (ri && cj) {
      (coin(rng) ? r_side : c_side).push_back(o);
    } else if (ri) {
      r_side.push_back(o);
    } else {
      c_side.push_back(o);
    }
  }
  if (r_side.empty() || c_side.empty()) {
    throw ShortfallError("training picks leave the row or column cross without observations");
  }
  return CrossSample(std::move(I), std::move(J), ObservationMultiset(rows, cols, std::move(r_side)),
                     ObservationMultiset(rows, cols, std::move(c_side)));
}

}  // namespace

SolverKind parse_solver(std::string_view name) {
  if (name == "icurc") return SolverKind::Icurc;
  if (name == "tsc") return SolverKind::Tsc;
  if (name == "svp") return SolverKind::Svp;
  throw ValidationError("unknown solver '" + std::string(name) + "' (icurc, tsc, svp)");
}

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::Icurc:
      return "icurc";
    case SolverKind::Tsc:
      return "tsc";
    case SolverKind::Svp:
      return "svp";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  if (n < 1) throw ValidationError("n must be at least 1");
  if (r < 1) throw ValidationError("r must be at least 1");
  if (trials < 1) throw ValidationError("trials must be at least 1");
  if (!(threshold > 0.0)) throw ValidationError("threshold must be positive");
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  if (max_iter < 1) throw ValidationError("max-iter must be at least 1");
  if (!(c > 0.0)) throw ValidationError("c must be positive");
  if (!(step_scale > 0.0)) throw ValidationError("step scale must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw ValidationError("delta must lie in (0, 1]");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in (0, 1]");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test fraction must lie in (0, 1)");
  }
  if (auc_samples < 1) throw ValidationError("AUC sample count must be at least 1");
  if (binarize && !(*binarize >= 0.0 && *binarize <= 1.0)) {
    throw ValidationError("binarize threshold must lie in [0, 1]");
  }
  if (scale) scale->validate();
  if (top_items < 0 || top_users < 0) throw ValidationError("top-k counts must be nonnegative");
  if (grid == GridMode::DeltaP) {
    if (deltas.empty() || ps.empty()) throw ValidationError("delta and p grids must be nonempty");
    for (double d : deltas) {
      if (!(d > 0.0 && d <= 1.0)) throw ValidationError("grid delta must lie in (0, 1]");
    }
    for (double p : ps) {
      if (!(p > 0.0 && p <= 1.0)) throw ValidationError("grid p must lie in (0, 1]");
    }
  } else {
    if (sizes.empty() || draw_totals.empty()) {
      throw ValidationError("n and s grids must be nonempty");
    }
    for (Index s : sizes) {
      if (s < r) throw ValidationError("grid n must be at least r");
    }
    for (std::uint64_t s : draw_totals) {
      if (s < 2) throw ValidationError("grid s must be at least 2");
    }
  }
}

Matrix synth_lowrank(Index rows, Index cols, Index r, Rng& rng) {
  if (rows < 1 || cols < 1) throw ValidationError("synth_lowrank: dimensions must be positive");
  if (r < 1 || r > std::min(rows, cols)) {
    throw ValidationError("synth_lowrank: need 1 <= r <= min(rows, cols)");
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix a(rows, r);
  Matrix b(cols, r);
  for (Index k = 0; k < a.size(); ++k) a.data()[k] = gauss(rng);
  for (Index k = 0; k < b.size(); ++k) b.data()[k] = gauss(rng);
  return a * b.transpose();
}

Matrix synth_lowrank(Index n, Index r, Rng& rng) { return synth_lowrank(n, n, r, rng); }

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t concentrated_index_draws(Index n, Index r, double c) {
  const double l = std::log(static_cast<double>(n));
  return static_cast<std::uint64_t>(std::max(1.0, std::ceil(c * static_cast<double>(r) * l * l)));
}

// ---------------------------------------------------------------------------

TrialOutcome run_phase_trial(const ExperimentConfig& config, Index n, double delta, double p,
                             std::uint64_t seed) {
  Rng rng(seed);
  const Matrix x = synth_lowrank(n, config.r, rng);
  const std::uint64_t draws = round_count(delta * static_cast<double>(n));
  const CrossSample cs = ccs_sample(x, draws, draws, p, rng);
  return solve_synthetic(config, x, cs, rng);
}

PhaseReport run_phase_transition(const ExperimentConfig& config) {
  config.validate();
  PhaseReport report;
  report.mode = config.grid;
  if (config.grid == GridMode::DeltaP) {
    require_dense_ok(config.solver, config.n, config.n);
    for (double d : config.deltas) {
      for (double p : config.ps) report.cells.push_back({config.n, d, p, 0, {}, 0, 0, 0});
    }
  } else {
    for (Index n : config.sizes) {
      require_dense_ok(config.solver, n, n);
      for (std::uint64_t s : config.draw_totals) report.cells.push_back({n, 0, 0, s, {}, 0, 0, 0});
    }
  }

  const auto trials = static_cast<std::size_t>(config.trials);
  for (PhaseCell& cell : report.cells) cell.trials.resize(trials);
  std::vector<double> seconds(report.cells.size() * trials, 0.0);
  parallel_for(report.cells.size() * trials, config.threads, [&](std::size_t job) {
    PhaseCell& cell = report.cells[job / trials];
    const std::size_t t = job % trials;
    const std::uint64_t seed = config.seed + t;
    const auto start = Clock::now();
    cell.trials[t] = config.grid == GridMode::DeltaP
                         ? run_phase_trial(config, cell.n, cell.delta, cell.p, seed)
                         : run_size_draws_trial(config, cell.n, cell.draw_total, seed);
    if (config.timing) seconds[job] = seconds_since(start);
  });
  for (std::size_t k = 0; k < report.cells.size(); ++k) {
    finish_cell(report.cells[k], config.threshold);
    for (std::size_t t = 0; t < trials; ++t) report.cells[k].seconds += seconds[k * trials + t];
  }
  return report;
}

std::vector<io::ResultRow> PhaseReport::rows(const ExperimentConfig& config) const {
  std::vector<io::ResultRow> out;
  for (const PhaseCell& cell : cells) {
    io::ResultRow row;
    row.experiment = mode == GridMode::DeltaP ? "phase" : "phase_ns";
    row.dataset = config.dataset + "_n" + std::to_string(cell.n);
    row.alpha = cell.mean_alpha;
    // The n x s grid reports c in the delta column and s in the p column.
    row.delta = mode == GridMode::DeltaP ? cell.delta : config.c;
    row.p = mode == GridMode::DeltaP ? cell.p : static_cast<double>(cell.draw_total);
    row.r = config.r;
    row.seed = static_cast<std::int64_t>(config.seed);
    row.seconds = cell.seconds;
    row.metric = "success_fraction";
    row.value = cell.success_fraction;
    out.push_back(row);
    if (config.binarize) {
      row.metric = "success_binary";
      row.value = cell.success_fraction >= *config.binarize ? 1.0 : 0.0;
      out.push_back(row);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

double ImageReport::mean_snr_db() const { return mean(snr_db); }

ImageReport run_image_experiment(const ExperimentConfig& config, const Matrix& image) {
  config.validate();
  require_finite(image, "image");
  const Index m = image.rows();
  const Index n = image.cols();
  if (config.r > std::min(m, n)) throw ValidationError("rank exceeds the image dimensions");
  require_dense_ok(config.solver, m, n);
  const double cells = static_cast<double>(m) * static_cast<double>(n);
  const auto budget =
      static_cast<std::uint64_t>(std::floor(config.alpha * cells / 2.0));
  if (budget < 1) throw ValidationError("alpha m n / 2 rounds down to zero draws");

  const auto trials = static_cast<std::size_t>(config.trials);
  ImageReport report;
  report.snr_db.resize(trials);
  report.alpha.resize(trials);
  report.seconds.assign(trials, 0.0);
  const EntrySource source = [&image](Index i, Index j) { return image(i, j); };
  parallel_for(trials, config.threads, [&](std::size_t t) {
    Rng rng(config.seed + t);
    IndexList rows = sample_indices(m, round_count(config.delta * static_cast<double>(m)), rng)
                         .distinct;
    IndexList cols = sample_indices(n, round_count(config.delta * static_cast<double>(n)), rng)
                         .distinct;
    const double row_cells = static_cast<double>(rows.size()) * static_cast<double>(n);
    const double col_cells = static_cast<double>(m) * static_cast<double>(cols.size());
    if (static_cast<double>(budget) > std::min(row_cells, col_cells)) {
      throw ValidationError("alpha m n / 2 = " + std::to_string(budget) +
                            " exceeds the cells of a selected cross");
    }
    const CrossSample cs = ccs_sample_on(m, n, source, std::move(rows), std::move(cols), budget,
                                         budget, rng);
    report.alpha[t] = overall_rate(cs);
    const auto start = Clock::now();
    Matrix estimate;
    if (config.solver == SolverKind::Icurc) {
      estimate = cur_reconstruct(solve(cs, icurc_config(config, cs)).factors);
    } else if (config.solver == SolverKind::Tsc) {
      estimate = tsc_solve(cs, sub_spec(config)).estimate;
    } else {
      const std::uint64_t draws = cs.omega_R().total_draws() + cs.omega_C().total_draws();
      estimate = svp_solve(uniform_sample(image, draws, rng), sub_spec(config)).estimate;
    }
    if (config.timing) report.seconds[t] = seconds_since(start);
    report.snr_db[t] = snr_db(image, estimate);
  });
  report.oracle_snr_db = snr_db(image, truncated_svd(image, config.r).dense());
  return report;
}

ImageReport run_image_experiment(const ExperimentConfig& config, const io::fs::path& pgm) {
  return run_image_experiment(config, io::read_pgm(pgm).to_matrix());
}

std::vector<io::ResultRow> ImageReport::rows(const ExperimentConfig& config) const {
  std::vector<io::ResultRow> out;
  io::ResultRow base = base_row(config, "image");
  append_trials(out, base, "snr_db", snr_db, alpha, seconds);
  base.metric = "oracle_snr_db";
  base.value = oracle_snr_db;
  out.push_back(base);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// old index -> new index, or -1 when dropped.
IndexList keep_top(const std::vector<std::size_t>& counts, Index k) {
  const auto size = static_cast<Index>(counts.size());
  IndexList order(counts.size());
  std::iota(order.begin(), order.end(), Index{0});
  if (k > 0 && k < size) {
    std::stable_sort(order.begin(), order.end(), [&counts](Index a, Index b) {
      return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
    });
    order.resize(static_cast<std::size_t>(k));
    std::sort(order.begin(), order.end());
  }
  IndexList map(counts.size(), -1);
  for (std::size_t a = 0; a < order.size(); ++a) {
    map[static_cast<std::size_t>(order[a])] = static_cast<Index>(a);
  }
  return map;
}

}  // namespace

io::RatingTriplets densest_submatrix(const io::RatingTriplets& data, Index items, Index users) {
  if (items < 0 || users < 0) throw ValidationError("top-k counts must be nonnegative");
  std::vector<std::size_t> item_count(static_cast<std::size_t>(data.item_count()), 0);
  std::vector<std::size_t> user_count(static_cast<std::size_t>(data.user_count()), 0);
  for (const io::RatingRecord& r : data.records) {
    ++item_count[static_cast<std::size_t>(r.item)];
    ++user_count[static_cast<std::size_t>(r.user)];
  }
  const IndexList item_map = keep_top(item_count, items);
  const IndexList user_map = keep_top(user_count, users);

  io::RatingTriplets out;
  for (std::size_t k = 0; k < item_map.size(); ++k) {
    if (item_map[k] >= 0) out.item_ids.push_back(data.item_ids[k]);
  }
  for (std::size_t k = 0; k < user_map.size(); ++k) {
    if (user_map[k] >= 0) out.user_ids.push_back(data.user_ids[k]);
  }
  for (io::RatingRecord r : data.records) {
    r.item = item_map[static_cast<std::size_t>(r.item)];
    r.user = user_map[static_cast<std::size_t>(r.user)];
    if (r.item >= 0 && r.user >= 0) out.records.push_back(r);
  }
  return out;
}

RecsysReport run_recsys_experiment(const ExperimentConfig& config,
                                   const io::RatingTriplets& data) {
  config.validate();
  const RatingMatrix mat = build_rating_matrix(
      config.top_items > 0 || config.top_users > 0
          ? densest_submatrix(data, config.top_items, config.top_users)
          : data);
  if (mat.entries.empty()) throw ValidationError("no ratings");
  const Index m = mat.rows;
  const Index n = mat.cols;
  require_dense_ok(config.solver, m, n);
  const RatingScale scale = config.scale.value_or(infer_scale(mat));
  const std::uint64_t budget = round_count(
      config.alpha * static_cast<double>(m) * static_cast<double>(n));
  const EntrySource source = [&mat, n](Index i, Index j) {
    const auto it = mat.value.find(key(i, j, n));
    return it == mat.value.end() ? 0.0 : it->second;
  };

  const auto trials = static_cast<std::size_t>(config.trials);
  RecsysReport report;
  report.hit_rate.resize(trials);
  report.nmae.resize(trials);
  report.alpha.resize(trials);
  report.seconds.assign(trials, 0.0);
  parallel_for(trials, config.threads, [&](std::size_t t) {
    Rng rng(config.seed + t);
    IndexList I = sample_indices(m, round_count(config.delta * static_cast<double>(m)), rng)
                      .distinct;
    IndexList J = sample_indices(n, round_count(config.delta * static_cast<double>(n)), rng)
                      .distinct;
    const IndexList in_i = mark(I, m);
    const IndexList in_j = mark(J, n);

    std::vector<std::size_t> cross;
    for (std::size_t k = 0; k < mat.entries.size(); ++k) {
      const Observation& o = mat.entries[k];
      if (in_i[static_cast<std::size_t>(o.row)] || in_j[static_cast<std::size_t>(o.col)]) {
        cross.push_back(k);
      }
    }
    if (budget > cross.size()) {
      throw ShortfallError("alpha m n = " + std::to_string(budget) + " exceeds the " +
                           std::to_string(cross.size()) + " observed entries in the crosses");
    }
    choose_prefix(cross, budget, rng);
    std::vector<char> used(mat.entries.size(), 0);
    std::vector<Observation> picks;
    picks.reserve(budget);
    for (std::size_t k = 0; k < budget; ++k) {
      used[cross[k]] = 1;
      picks.push_back(mat.entries[cross[k]]);
    }
    std::vector<const Observation*> test;
    for (std::size_t k = 0; k < mat.entries.size(); ++k) {
      if (config.test_on_training || !used[k]) test.push_back(&mat.entries[k]);
    }
    if (test.empty()) throw ValidationError("empty test set");

    const CrossSample cs = cross_from_picks(m, n, std::move(I), std::move(J), picks, rng);
    if (!rank_fits(cs, config.r)) throw ValidationError("fewer selected rows or columns than r");
    report.alpha[t] = overall_rate(cs);
    const auto start = Clock::now();
    const Estimate est = solve_with(config, cs, source, rng);
    if (config.timing) report.seconds[t] = seconds_since(start);

    std::vector<ScoredPair> pairs;
    pairs.reserve(test.size());
    for (const Observation* o : test) pairs.push_back({est.at(o->row, o->col), o->value});
    report.hit_rate[t] = hit_rate(pairs, scale);
    report.nmae[t] = nmae(pairs, scale);
  });
  return report;
}

RecsysReport run_recsys_experiment(const ExperimentConfig& config, const io::fs::path& triplets) {
  return run_recsys_experiment(config, io::read_triplets(triplets, io::Delimiter::Auto,
                                                         config.scale));
}

std::vector<io::ResultRow> RecsysReport::rows(const ExperimentConfig& config) const {
  std::vector<io::ResultRow> out;
  const io::ResultRow base = base_row(config, "recsys");
  append_trials(out, base, "hit_rate", hit_rate, alpha, seconds);
  append_trials(out, base, "nmae", nmae, alpha, seconds);
  return out;
}

// ---------------------------------------------------------------------------

EdgeSplit split_edges(const io::EdgeList& graph, double test_fraction, Rng& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test fraction must lie in (0, 1)");
  }
  const io::EdgeList g = io::normalize(graph);
  const auto held = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(g.edges.size())));
  if (held == 0) throw ValidationError("empty test split");
  if (held >= g.edges.size()) throw ValidationError("empty training split");
  std::vector<Position> edges = g.edges;
  std::shuffle(edges.begin(), edges.end(), rng);
  EdgeSplit split;
  split.node_count = g.node_count;
  split.directed = g.directed;
  split.test.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(held));
  split.train.assign(edges.begin() + static_cast<std::ptrdiff_t>(held), edges.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

LinkScores evaluate_link_prediction(const EdgeSplit& split,
                                    const std::function<double(Index, Index)>& score,
                                    int auc_samples, Rng& rng) {
  if (split.test.empty()) throw ValidationError("empty test split");
  const Index n = split.node_count;
  std::unordered_set<std::uint64_t> train;
  for (const auto& [i, j] : split.train) train.insert(key(i, j, n));
  std::unordered_set<std::uint64_t> test;
  for (const auto& [i, j] : split.test) test.insert(key(i, j, n));

  std::vector<ScoredPosition> candidates;
  std::vector<double> missing;
  std::vector<double> nonexistent;
  for (Index i = 0; i < n; ++i) {
    for (Index j = split.directed ? 0 : i + 1; j < n; ++j) {
      if (i == j) continue;
      const std::uint64_t k = key(i, j, n);
      if (train.count(k)) continue;
      const double s = score(i, j);
      candidates.push_back({{i, j}, s});
      (test.count(k) ? missing : nonexistent).push_back(s);
    }
  }
  if (nonexistent.empty()) throw ValidationError("graph has no non-existent links");
  LinkScores out;
  out.precision = precision_at_L(candidates, split.test, split.test.size());
  out.auc = auc(missing, nonexistent, auc_samples, rng);
  return out;
}

LinkpredReport run_linkpred_experiment(const ExperimentConfig& config,
                                       const io::EdgeList& graph) {
  config.validate();
  const Index n = graph.node_count;
  if (n < 2) throw ValidationError("graph needs at least two nodes");
  require_dense_ok(config.solver, n, n);
  const double cells = static_cast<double>(n) * static_cast<double>(n);
  const auto budget = static_cast<std::uint64_t>(std::floor(config.alpha * cells / 2.0));
  if (budget < 1) throw ValidationError("alpha n^2 / 2 rounds down to zero draws");

  const auto trials = static_cast<std::size_t>(config.trials);
  LinkpredReport report;
  report.precision.resize(trials);
  report.auc.resize(trials);
  report.alpha.resize(trials);
  report.seconds.assign(trials, 0.0);
  parallel_for(trials, config.threads, [&](std::size_t t) {
    Rng rng(config.seed + t);
    const EdgeSplit split = split_edges(graph, config.test_fraction, rng);
    std::unordered_set<std::uint64_t> adjacency;
    for (const auto& [i, j] : split.train) {
      adjacency.insert(key(i, j, n));
      if (!split.directed) adjacency.insert(key(j, i, n));
    }
    const EntrySource source = [&adjacency, n](Index i, Index j) {
      return adjacency.count(key(i, j, n)) ? 1.0 : 0.0;
    };

    IndexList rows = sample_indices(n, round_count(config.delta * static_cast<double>(n)), rng)
                         .distinct;
    IndexList cols = sample_indices(n, round_count(config.delta * static_cast<double>(n)), rng)
                         .distinct;
    const double cross_cells = static_cast<double>(std::min(rows.size(), cols.size())) *
                               static_cast<double>(n);
    if (static_cast<double>(budget) > cross_cells) {
      throw ShortfallError("alpha n^2 / 2 = " + std::to_string(budget) +
                           " exceeds the cells of a selected cross");
    }
    const CrossSample cs =
        ccs_sample_on(n, n, source, std::move(rows), std::move(cols), budget, budget, rng);
    if (!rank_fits(cs, config.r)) throw ValidationError("fewer selected rows or columns than r");
    report.alpha[t] = overall_rate(cs);
    const auto start = Clock::now();
    const Estimate est = solve_with(config, cs, source, rng);
    if (config.timing) report.seconds[t] = seconds_since(start);

    const auto score = [&](Index i, Index j) {
      return split.directed ? est.at(i, j) : 0.5 * (est.at(i, j) + est.at(j, i));
    };
    const LinkScores s = evaluate_link_prediction(split, score, config.auc_samples, rng);
    report.precision[t] = s.precision;
    report.auc[t] = s.auc;
  });
  return report;
}

LinkpredReport run_linkpred_experiment(const ExperimentConfig& config,
                                       const io::fs::path& edges) {
  return run_linkpred_experiment(config, io::read_edge_list(edges));
}

std::vector<io::ResultRow> LinkpredReport::rows(const ExperimentConfig& config) const {
  std::vector<io::ResultRow> out;
  const io::ResultRow base = base_row(config, "linkpred");
  append_trials(out, base, "precision", precision, alpha, seconds);
  append_trials(out, base, "auc", auc, alpha, seconds);
  return out;
}

// ---------------------------------------------------------------------------

ConvergenceReport run_convergence_trace(const ExperimentConfig& config) {
  config.validate();
  const Index n = config.n;
  if (config.r > n) throw ValidationError("r exceeds n");
  const std::uint64_t m = concentrated_index_draws(n, config.r, config.c);
  const auto budget = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::floor(config.alpha * static_cast<double>(n) *
                                                static_cast<double>(n) / 2.0)));

  const auto trials = static_cast<std::size_t>(config.trials);
  ConvergenceReport report;
  report.series.resize(trials);
  parallel_for(trials, config.threads, [&](std::size_t t) {
    ConvergenceSeries& series = report.series[t];
    series.seed = config.seed + t;
    Rng rng(series.seed);
    const Matrix x = synth_lowrank(n, config.r, rng);
    const EntrySource source = [&x](Index i, Index j) { return x(i, j); };
    IndexList rows = sample_indices(n, m, rng).distinct;
    IndexList cols = sample_indices(n, m, rng).distinct;
    const CrossSample cs =
        ccs_sample_on(n, n, source, std::move(rows), std::move(cols), budget, budget, rng);

    IcurcConfig icfg = icurc_config(config, cs);
    // The stop rule here is on the ground-truth error, so the observed
    // residual tolerance is pushed to round-off.
    icfg.eps = 1e-30;
    solve(cs, icfg, [&](int, const CURFactors& f, double e) {
      const double err = relative_error(x, f);
      series.error.push_back(err);
      series.residual.push_back(e);
      if (err <= config.eps) {
        series.reached_target = true;
        return false;
      }
      return true;
    });
  });

  std::size_t longest = 0;
  for (const auto& s : report.series) longest = std::max(longest, s.error.size());
  for (std::size_t k = 0; k < longest; ++k) {
    double sum = 0.0;
    double sum2 = 0.0;
    int count = 0;
    for (const auto& s : report.series) {
      if (k >= s.error.size()) continue;
      sum += s.error[k];
      sum2 += s.error[k] * s.error[k];
      ++count;
    }
    const double mu = sum / count;
    const double var = count > 1 ? std::max(0.0, (sum2 - count * mu * mu) / (count - 1)) : 0.0;
    report.trace.push_back({static_cast<int>(k), mu, std::sqrt(var), count});
  }
  return report;
}

void ConvergenceReport::write_csv(std::ostream& os) const {
  os << "iter,mean_error,std_error,count\n";
  for (const TracePoint& p : trace) {
    os << p.iter << ',' << io::format_double(p.mean) << ',' << io::format_double(p.stddev) << ','
       << p.count << '\n';
  }
}

LinearRate linear_rate(const std::vector<double>& series, std::size_t burn_in) {
  LinearRate out;
  std::vector<double> ks;
  std::vector<double> logs;
  for (std::size_t k = burn_in; k < series.size(); ++k) {
    if (!(series[k] > 0.0) || !std::isfinite(series[k])) continue;
    ks.push_back(static_cast<double>(k));
    logs.push_back(std::log(series[k]));
  }
  out.points = ks.size();
  if (ks.size() < 2) return out;

  double log_ratio = 0.0;
  std::size_t ratios = 0;
  for (std::size_t a = 0; a + 1 < ks.size(); ++a) {
    if (ks[a + 1] != ks[a] + 1.0) continue;
    log_ratio += logs[a + 1] - logs[a];
    ++ratios;
  }
  out.geometric_mean_ratio = ratios ? std::exp(log_ratio / static_cast<double>(ratios)) : 0.0;

  const double kbar = mean(ks);
  const double lbar = mean(logs);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t a = 0; a < ks.size(); ++a) {
    sxx += (ks[a] - kbar) * (ks[a] - kbar);
    sxy += (ks[a] - kbar) * (logs[a] - lbar);
    syy += (logs[a] - lbar) * (logs[a] - lbar);
  }
  out.slope = sxy / sxx;
  out.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return out;
}

}  // namespace ccs::harness
