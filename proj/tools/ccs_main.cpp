#include "ccs/errors.hpp"
#include "ccs/harness.hpp"
#include "ccs/icurc.hpp"
#include "ccs/io_formats.hpp"
#include "ccs/metrics.hpp"
#include "ccs/sampling.hpp"
#include "ccs/solvers_aux.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using ccs::harness::ExperimentConfig;
namespace io = ccs::io;

constexpr int kValidationExit = 2;
constexpr int kIoExit = 3;

struct Shared {
  ExperimentConfig config;
  std::string solver = "icurc";
  std::string out;
  std::string config_path;
  std::optional<int> trials;
};

void add_seed(CLI::App* sub, Shared& s) {
  sub->add_option("--seed", s.config.seed, "base seed; trial t uses seed + t")
      ->capture_default_str();
}

void add_solver(CLI::App* sub, Shared& s) {
  sub->add_option("--r", s.config.r, "target rank")->capture_default_str();
  sub->add_option("--eps", s.config.eps, "stopping tolerance")->capture_default_str();
  sub->add_option("--max-iter", s.config.max_iter, "iteration cap")->capture_default_str();
  sub->add_option("--step-scale", s.config.step_scale,
                  "multiplier on the automatic solver steps")
      ->capture_default_str();
  sub->add_option("--solver", s.solver, "icurc, tsc or svp")
      ->check(CLI::IsMember({"icurc", "tsc", "svp"}))
      ->capture_default_str();
}

void add_run(CLI::App* sub, Shared& s) {
  add_seed(sub, s);
  add_solver(sub, s);
  sub->add_option("--trials", s.trials, "independent trials");
  sub->add_option("--threads", s.config.threads, "worker threads, 0 = all cores")
      ->capture_default_str();
  sub->add_flag("--timing", s.config.timing, "record wall time in the seconds column");
  sub->add_option("--out", s.out, "result CSV (stdout when omitted)");
  sub->add_option("--dataset", s.config.dataset, "dataset label")->capture_default_str();
}

void add_point(CLI::App* sub, Shared& s) {
  sub->add_option("--delta", s.config.delta, "fraction of rows and columns drawn")
      ->capture_default_str();
  sub->add_option("--alpha", s.config.alpha, "overall sampling rate")->capture_default_str();
}

// `key=value` lines become `--key=value` tokens placed right after the
// subcommand name, so flags given on the command line take precedence.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ccs::IoError("cannot open config " + path);
  std::vector<std::string> tokens;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ccs::ParseError(path, line_no, "expected key=value");
    auto trim = [](std::string v) {
      const auto a = v.find_first_not_of(" \t\r");
      const auto b = v.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
    };
    std::string k = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    if (k.rfind("--", 0) != 0) k = "--" + k;
    tokens.push_back(k + "=" + v);
  }
  return tokens;
}

std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t k = 0; k < args.size(); ++k) {
    std::string path;
    std::size_t width = 0;
    if (args[k] == "--config" && k + 1 < args.size()) {
      path = args[k + 1];
      width = 2;
    } else if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
      width = 1;
    } else {
      continue;
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(k),
               args.begin() + static_cast<std::ptrdiff_t>(k + width));
    const auto tokens = config_tokens(path);
    const std::size_t at = args.empty() ? 0 : 1;
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), tokens.begin(), tokens.end());
    break;
  }
  return args;
}

void emit_rows(const std::string& out, const std::vector<io::ResultRow>& rows) {
  if (out.empty()) {
    io::write_results_csv(std::cout, rows);
  } else {
    io::write_results_csv(out, rows);
  }
}

void write_manifest(const CLI::App& app, const std::string& out) {
  if (out.empty()) return;
  const std::string path = out + ".manifest";
  std::ofstream m(path);
  if (!m) throw ccs::IoError("cannot write " + path);
  m << app.config_to_str(true, false);
  if (!m) throw ccs::IoError("write to " + path + " failed");
}

ccs::Matrix synthetic_or_file(const std::string& in, const ExperimentConfig& c, ccs::Rng& rng) {
  if (!in.empty()) return io::read_dense(in);
  return ccs::harness::synth_lowrank(c.n, c.r, rng);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-concentrated sampling and CUR completion toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--config", "key=value file with defaults for the subcommand flags");

  Shared s;
  std::string in;
  std::string truth;
  std::string trace;
  double p = 0.5;
  Eigen::Index cols = 0;

  auto* synth = app.add_subcommand("synth", "rank-r Gaussian product matrix");
  synth->add_option("--n", s.config.n, "rows")->capture_default_str();
  synth->add_option("--cols", cols, "columns (defaults to n)");
  synth->add_option("--r", s.config.r, "rank")->capture_default_str();
  add_seed(synth, s);
  synth->add_option("--out", s.out, "dense matrix file")->required();

  auto* sample = app.add_subcommand("sample", "cross-concentrated sample of a matrix");
  sample->add_option("--in", in, "dense matrix file (synthetic when omitted)");
  sample->add_option("--n", s.config.n, "size of the synthetic matrix")->capture_default_str();
  sample->add_option("--r", s.config.r, "rank of the synthetic matrix")->capture_default_str();
  sample->add_option("--delta", s.config.delta, "index draws per side / dimension")
      ->capture_default_str();
  sample->add_option("--p", p, "within-cross sampling rate")->capture_default_str();
  add_seed(sample, s);
  sample->add_option("--out", s.out, "cross sample file")->required();

  auto* solve = app.add_subcommand("solve", "complete a stored cross sample");
  solve->add_option("--in", in, "cross sample file")->required();
  add_solver(solve, s);
  add_seed(solve, s);
  solve->add_option("--truth", truth, "dense ground truth for the relative error");
  solve->add_option("--trace", trace, "ICURC trace CSV");
  solve->add_option("--out", s.out, "dense estimate file");

  auto* phase = app.add_subcommand("phase", "phase-transition grid");
  phase->add_option("--n", s.config.n, "matrix size of the delta x p grid")
      ->capture_default_str();
  phase->add_option("--delta", s.config.deltas, "delta grid")->delimiter(',')
      ->capture_default_str();
  phase->add_option("--p", s.config.ps, "p grid")->delimiter(',')->capture_default_str();
  phase->add_option("--sizes", s.config.sizes, "n grid; switches to the n x s mode")
      ->delimiter(',');
  phase->add_option("--draws", s.config.draw_totals, "s grid of total entry draws")
      ->delimiter(',');
  phase->add_option("--c", s.config.c, "index draws ceil(c r log^2 n) in the n x s mode")
      ->capture_default_str();
  phase->add_option("--threshold", s.config.threshold, "success threshold on the error")
      ->capture_default_str();
  phase->add_option("--binarize", s.config.binarize, "also report fraction >= value as 0/1");
  add_run(phase, s);

  auto* image = app.add_subcommand("image", "image completion from an 8-bit PGM");
  image->add_option("--in", in, "PGM image")->required();
  add_point(image, s);
  add_run(image, s);

  auto* recsys = app.add_subcommand("recsys", "rating prediction from triplets");
  recsys->add_option("--in", in, "triplet file")->required();
  add_point(recsys, s);
  double s_min = 0;
  double s_max = 0;
  double s_step = 1;
  auto* smin = recsys->add_option("--scale-min", s_min, "lowest rating");
  auto* smax = recsys->add_option("--scale-max", s_max, "highest rating");
  recsys->add_option("--scale-step", s_step, "rating step")->capture_default_str();
  smin->needs(smax);
  smax->needs(smin);
  recsys->add_flag("--test-on-training", s.config.test_on_training,
                   "evaluate on every observed entry");
  recsys->add_option("--top-items", s.config.top_items, "keep the most-rated items (0: all)")
      ->check(CLI::NonNegativeNumber);
  recsys->add_option("--top-users", s.config.top_users, "keep the most-active users (0: all)")
      ->check(CLI::NonNegativeNumber);
  add_run(recsys, s);

  auto* linkpred = app.add_subcommand("linkpred", "link prediction from an edge list");
  linkpred->add_option("--in", in, "edge list")->required();
  add_point(linkpred, s);
  io::EdgeReadOptions edge_opts;
  linkpred->add_flag("--directed", edge_opts.directed, "keep edge direction");
  linkpred->add_flag("--one-based", edge_opts.one_based, "node ids start at 1");
  linkpred->add_option("--test-fraction", s.config.test_fraction, "held-out share of links")
      ->capture_default_str();
  linkpred->add_option("--auc-samples", s.config.auc_samples, "AUC comparisons")
      ->capture_default_str();
  add_run(linkpred, s);

  auto* converge = app.add_subcommand("converge", "averaged ICURC error trace");
  converge->add_option("--n", s.config.n, "matrix size")->capture_default_str();
  converge->add_option("--c", s.config.c, "index draws ceil(c r log^2 n)")->capture_default_str();
  converge->add_option("--alpha", s.config.alpha, "overall sampling rate")
      ->capture_default_str();
  add_run(converge, s);

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationExit;
  } catch (const ccs::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoExit;
  }

  try {
    ExperimentConfig& c = s.config;
    c.solver = ccs::harness::parse_solver(s.solver);

    if (*synth) {
      ccs::Rng rng(c.seed);
      io::write_dense(s.out, ccs::harness::synth_lowrank(c.n, cols > 0 ? cols : c.n, c.r, rng));
    } else if (*sample) {
      ccs::Rng rng(c.seed);
      const ccs::Matrix x = synthetic_or_file(in, c, rng);
      const auto rd = static_cast<std::uint64_t>(
          std::max<long long>(1, std::llround(c.delta * static_cast<double>(x.rows()))));
      const auto cd = static_cast<std::uint64_t>(
          std::max<long long>(1, std::llround(c.delta * static_cast<double>(x.cols()))));
      const ccs::CrossSample cs = ccs::ccs_sample(x, rd, cd, p, rng);
      io::write_cross_sample(s.out, cs);
      std::cout << "alpha," << io::format_double(ccs::overall_rate(cs)) << '\n';
    } else if (*solve) {
      const ccs::CrossSample cs = io::read_cross_sample(in);
      ccs::Matrix estimate;
      std::vector<std::pair<std::string, double>> metrics;
      if (c.solver == ccs::harness::SolverKind::Icurc) {
        ccs::IcurcConfig ic;
        ic.rank = c.r;
        ic.eps = c.eps;
        ic.max_iter = c.max_iter;
        ic.record_timing = true;
        const ccs::StepSizes eta = ccs::default_step_sizes(cs);
        ic.eta_r = c.step_scale * eta.eta_r;
        ic.eta_c = c.step_scale * eta.eta_c;
        ic.eta_u = c.step_scale * eta.eta_u;
        const ccs::IcurcResult res = ccs::solve(cs, ic);
        metrics.emplace_back("iterations", res.trace.iterations);
        metrics.emplace_back("converged", res.trace.converged ? 1 : 0);
        metrics.emplace_back("e_final", res.trace.residuals.back());
        if (!trace.empty()) {
          std::ofstream t(trace);
          if (!t) throw ccs::IoError("cannot write " + trace);
          io::write_trace_csv(t, res.trace);
        }
        if (!truth.empty()) {
          metrics.emplace_back("relative_error",
                               ccs::relative_error(io::read_dense(truth), res.factors));
        }
        if (!s.out.empty()) estimate = ccs::cur_reconstruct(res.factors);
      } else {
        ccs::SubSolverSpec spec;
        spec.rank = c.r;
        spec.eps = c.eps;
        spec.max_iter = c.max_iter;
        spec.step_scale = c.step_scale;
        if (c.solver == ccs::harness::SolverKind::Tsc) {
          const ccs::TscResult res = ccs::tsc_solve(cs, spec);
          metrics.emplace_back("rank_deficient", res.rank_deficient ? 1 : 0);
          estimate = res.estimate;
        } else {
          const ccs::SvpResult res = ccs::svp_solve(ccs::omega_union(cs), spec);
          metrics.emplace_back("iterations", res.trace.iterations);
          metrics.emplace_back("converged", res.trace.converged ? 1 : 0);
          estimate = res.estimate;
        }
        if (!truth.empty()) {
          metrics.emplace_back("relative_error",
                               ccs::relative_error(io::read_dense(truth), estimate));
        }
      }
      io::write_metric_csv(std::cout, metrics);
      if (!s.out.empty()) io::write_dense(s.out, estimate);
    } else if (*phase) {
      if (!c.sizes.empty() || !c.draw_totals.empty()) c.grid = ccs::harness::GridMode::SizeDraws;
      c.trials = s.trials.value_or(20);
      emit_rows(s.out, ccs::harness::run_phase_transition(c).rows(c));
    } else if (*image) {
      c.trials = s.trials.value_or(10);
      emit_rows(s.out, ccs::harness::run_image_experiment(c, in).rows(c));
    } else if (*recsys) {
      c.trials = s.trials.value_or(10);
      if (smin->count() > 0) c.scale = ccs::RatingScale{s_min, s_max, s_step};
      emit_rows(s.out, ccs::harness::run_recsys_experiment(c, in).rows(c));
    } else if (*linkpred) {
      c.trials = s.trials.value_or(10);
      emit_rows(s.out,
                ccs::harness::run_linkpred_experiment(c, io::read_edge_list(in, edge_opts)).rows(c));
    } else if (*converge) {
      c.trials = s.trials.value_or(10);
      const auto report = ccs::harness::run_convergence_trace(c);
      if (s.out.empty()) {
        report.write_csv(std::cout);
      } else {
        std::ofstream f(s.out);
        if (!f) throw ccs::IoError("cannot write " + s.out);
        report.write_csv(f);
        if (!f) throw ccs::IoError("write to " + s.out + " failed");
      }
    }
    write_manifest(app, s.out);
  } catch (const ccs::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationExit;
  } catch (const ccs::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoExit;
  } catch (const ccs::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
