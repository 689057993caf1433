#pragma once

#include "ccs/errors.hpp"
#include "ccs/io_formats.hpp"
#include "ccs/linalg.hpp"
#include "ccs/metrics.hpp"
#include "ccs/sampling.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccs::harness {

enum class SolverKind { Icurc, Tsc, Svp };

SolverKind parse_solver(std::string_view name);
std::string_view to_string(SolverKind kind);

enum class GridMode {
  DeltaP,     // delta x p grid at fixed n
  SizeDraws,  // n x s grid with |I| = |J| = ceil(c r log^2 n) index draws
};

/// Raised when the observed entries inside the crosses cannot cover the
/// requested training budget.
class ShortfallError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct ExperimentConfig {
  std::string dataset = "synthetic";
  Index n = 300;
  Index r = 5;

  GridMode grid = GridMode::DeltaP;
  std::vector<double> deltas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> ps{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<Index> sizes;
  std::vector<std::uint64_t> draw_totals;
  double c = 0.5;

  /// Single-point parameters of the image, recsys, linkpred and
  /// convergence experiments.
  double delta = 0.3;
  double alpha = 0.1;

  int trials = 20;
  double threshold = 1e-2;
  /// When set, phase cells also report success_fraction >= binarize.
  std::optional<double> binarize;
  std::uint64_t seed = 0;
  SolverKind solver = SolverKind::Icurc;
  double eps = 1e-5;
  int max_iter = 1000;
  /// Solvers run with step_scale times their automatic steps: ICURC's
  /// (1/p1, 1/p2, 1/(p1 + p2)) and SVP's rows * cols / draws.
  double step_scale = 0.4;

  double test_fraction = 0.1;
  int auc_samples = 5000;
  /// Evaluate recsys predictions on every observed entry, training ones included.
  bool test_on_training = false;
  std::optional<RatingScale> scale;
  /// Restrict recsys data to the most-rated items and most-active users; 0 keeps all.
  Index top_items = 0;
  Index top_users = 0;

  /// Record wall time; off by default so result files are reproducible byte for byte.
  bool timing = false;
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned threads = 0;

  void validate() const;
};

/// X = A B^T with standard Gaussian A (rows x r) and B (cols x r).
Matrix synth_lowrank(Index rows, Index cols, Index r, Rng& rng);
Matrix synth_lowrank(Index n, Index r, Rng& rng);

/// Runs fn(0) .. fn(count - 1) on up to `threads` workers; the first
/// exception is rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Index draws ceil(c r log^2 n) for the concentration grid.
std::uint64_t concentrated_index_draws(Index n, Index r, double c);

// ---------------------------------------------------------------------------

struct TrialOutcome {
  double error = 0.0;  // ground-truth relative Frobenius error
  double alpha = 0.0;  // overall_rate of the sample
  bool solver_converged = false;
  int iterations = 0;
};

struct PhaseCell {
  Index n = 0;
  double delta = 0.0;            // DeltaP mode
  double p = 0.0;                // DeltaP mode
  std::uint64_t draw_total = 0;  // SizeDraws mode
  std::vector<TrialOutcome> trials;
  double success_fraction = 0.0;
  double mean_alpha = 0.0;
  double seconds = 0.0;
};

struct PhaseReport {
  GridMode mode = GridMode::DeltaP;
  std::vector<PhaseCell> cells;  // deltas outer, ps inner (sizes outer, draws inner)

  std::vector<io::ResultRow> rows(const ExperimentConfig& config) const;
};

PhaseReport run_phase_transition(const ExperimentConfig& config);

/// One synthetic problem of the delta x p grid; exposed for tests.
TrialOutcome run_phase_trial(const ExperimentConfig& config, Index n, double delta, double p,
                             std::uint64_t seed);

// ---------------------------------------------------------------------------

struct ImageReport {
  std::vector<double> snr_db;
  std::vector<double> alpha;
  std::vector<double> seconds;
  double oracle_snr_db = 0.0;

  double mean_snr_db() const;
  std::vector<io::ResultRow> rows(const ExperimentConfig& config) const;
};

/// Per trial: |I| from round(delta m) row draws, |J| from round(delta n)
/// column draws, floor(alpha m n / 2) entry draws on each side.
ImageReport run_image_experiment(const ExperimentConfig& config, const Matrix& image);
ImageReport run_image_experiment(const ExperimentConfig& config, const io::fs::path& pgm);

// ---------------------------------------------------------------------------

struct RecsysReport {
  std::vector<double> hit_rate;
  std::vector<double> nmae;
  std::vector<double> alpha;
  std::vector<double> seconds;

  std::vector<io::ResultRow> rows(const ExperimentConfig& config) const;
};

/// Keeps the `items` items and `users` users with the most ratings (counted
/// on the full data, ties to the earlier index); 0 keeps every one. Kept ids
/// stay in their original order.
io::RatingTriplets densest_submatrix(const io::RatingTriplets& data, Index items, Index users);

/// Item x user matrix from the triplets (after densest_submatrix when
/// top_items or top_users is set); the last rating of a repeated
/// (user, item) pair wins.
RecsysReport run_recsys_experiment(const ExperimentConfig& config, const io::RatingTriplets& data);
RecsysReport run_recsys_experiment(const ExperimentConfig& config, const io::fs::path& triplets);

// ---------------------------------------------------------------------------

struct EdgeSplit {
  Index node_count = 0;
  bool directed = false;
  std::vector<Position> train;
  std::vector<Position> test;
};

/// Shuffles the edges and holds out round(test_fraction |E|) of them.
EdgeSplit split_edges(const io::EdgeList& graph, double test_fraction, Rng& rng);

struct LinkScores {
  double precision = 0.0;
  double auc = 0.0;
};

/// Scores every pair absent from the training edges (i < j when
/// undirected, i != j otherwise), then Precision@|test| and sampled AUC.
LinkScores evaluate_link_prediction(const EdgeSplit& split,
                                    const std::function<double(Index, Index)>& score,
                                    int auc_samples, Rng& rng);

struct LinkpredReport {
  std::vector<double> precision;
  std::vector<double> auc;
  std::vector<double> alpha;
  std::vector<double> seconds;

  std::vector<io::ResultRow> rows(const ExperimentConfig& config) const;
};

LinkpredReport run_linkpred_experiment(const ExperimentConfig& config, const io::EdgeList& graph);
LinkpredReport run_linkpred_experiment(const ExperimentConfig& config,
                                       const io::fs::path& edges);

// ---------------------------------------------------------------------------

struct ConvergenceSeries {
  std::uint64_t seed = 0;
  std::vector<double> error;     // epsilon_k
  std::vector<double> residual;  // e_k
  bool reached_target = false;
};

struct TracePoint {
  int iter = 0;
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;  // series still running at this iteration
};

struct ConvergenceReport {
  std::vector<ConvergenceSeries> series;
  std::vector<TracePoint> trace;

  void write_csv(std::ostream& os) const;
};

/// ICURC on synthetic rank-r data with ceil(c r log^2 n) index draws and
/// floor(alpha n^2 / 2) entry draws per side, stopped once epsilon_k <= eps.
ConvergenceReport run_convergence_trace(const ExperimentConfig& config);

struct LinearRate {
  double geometric_mean_ratio = 0.0;  // of s[k+1] / s[k]
  double r_squared = 0.0;             // of log s[k] against k
  double slope = 0.0;
  std::size_t points = 0;
};

/// Fits the positive entries of series[burn_in..].
LinearRate linear_rate(const std::vector<double>& series, std::size_t burn_in);

}  // namespace ccs::harness
