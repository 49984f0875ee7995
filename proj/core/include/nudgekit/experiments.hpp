#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nudgekit/assimilation.hpp"

namespace nudgekit {

// ---------------------------------------------------------------------------
// Sweep grids

/// delta = m dt with m = floor(base_m ratio^p), p = p_first..p_last, and
/// kappa = ratio^(q / kappa_ratio_root) restricted to
/// [kappa_floor, kappa_ceiling_factor delta].
struct SweepSpec {
  int p_first = 0;
  int p_last = 17;
  int base_m = 228;
  double ratio = 0.75;
  int kappa_ratio_root = 3;
  double kappa_floor = 0.0056;
  double kappa_ceiling_factor = 5.0;
  /// Lower floor used only when delta = dt, to reach small enough kappa at
  /// the finest interval. Values >= kappa_floor disable the extension.
  double finest_kappa_floor = 0.00317;
  /// Explicit observation periods (in steps). Replaces the p range when nonempty.
  std::vector<int> periods;

  void validate() const;
};

struct DeltaPoint {
  int p = 0;  // exponent, or position in `periods`
  int m = 0;
  double delta = 0.0;
};

/// Strictly decreasing deltas; floor-induced duplicates keep their first occurrence.
std::vector<DeltaPoint> delta_grid(const SweepSpec& spec, double dt);

struct KappaPoint {
  int q = 0;
  double kappa = 0.0;
};

/// Every kappa = ratio^(q/root) in [floor, ceiling_factor delta], descending.
/// Throws ConfigError naming delta when the range holds no grid point.
std::vector<KappaPoint> kappa_grid(double delta, const SweepSpec& spec, double floor);
std::vector<KappaPoint> kappa_grid(double delta, const SweepSpec& spec);

struct SweepCell {
  DeltaPoint delta;
  KappaPoint kappa;
  bool extended = false;  // below kappa_floor, from the finest-interval extension
};

/// All (delta, kappa) cells, deltas descending and kappas descending within each.
std::vector<SweepCell> sweep_cells(const SweepSpec& spec, double dt);

/// Number of (delta, kappa) pairs on the main grid, without the finest-interval extension.
std::size_t grid_pair_count(const SweepSpec& spec, double dt);

// ---------------------------------------------------------------------------
// Ensembles

struct EnsembleSpec {
  int size = 8;
  double spinup_time = 200.0;
  std::uint64_t seed = 0;
  double spectrum_peak = 4.0;
  double initial_l2 = 3.0;  // |Z0| before spinup
  int max_retries = 3;

  void validate() const;
};

struct EnsembleMember {
  int index = 0;
  int attempts = 1;            // 1 + number of regenerations after a divergent spinup
  std::uint64_t stream = 0;    // random stream that produced Z0
  SpectralVorticityField state;
};

/// Random stream used for member i at the given attempt.
std::uint64_t member_stream(int index, int attempt, int max_retries);

using LogFn = std::function<void(const std::string&)>;

/// Z0 from the member's stream, Leray-projected, advanced by spinup_time.
/// Deterministic in (seed, index); divergence moves to the next sub-stream.
EnsembleMember generate_member(const EnsembleSpec& spec, const SolverParams& params, int index,
                               const LogFn& log = {});
std::vector<EnsembleMember> generate_ensemble(const EnsembleSpec& spec, const SolverParams& params, int threads = 1,
                                              const LogFn& log = {});

// ---------------------------------------------------------------------------
// Statistics

double ensemble_average(const std::vector<double>& values);
/// exp(mean log v). Throws ConfigError naming the first nonpositive entry.
double geometric_mean(const std::vector<double>& values);
/// Linear interpolation between order statistics (h = (n - 1) p).
double quantile(std::vector<double> values, double p);

struct Quartiles {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
};
Quartiles quartiles(const std::vector<double>& values);

struct CellStats {
  double delta = 0.0;
  double kappa = 0.0;
  int n_ok = 0;
  int n_diverged = 0;
  double mean = 0.0, gm = 0.0, median = 0.0, q1 = 0.0, q3 = 0.0, min = 0.0, max = 0.0;
};

/// Statistics of the finite terminal errors; NaN fields when no member finished.
CellStats summarize(double delta, double kappa, const std::vector<double>& terminal_errors, int diverged);

void write_summary_csv(std::ostream& os, const std::vector<CellStats>& rows);
std::vector<CellStats> read_summary_csv(std::istream& is);

// ---------------------------------------------------------------------------
// Fits

struct KappaMinFit {
  double kappa_min = 0.0;
  bool boundary = false;  // sampled minimum at an end of the curve
  bool fitted = false;    // vertex of a convex quadratic was used
  std::size_t argmin = 0; // index of the sampled minimum in the input order
};

/// Quadratic least squares in kappa over the `window` points nearest the
/// sampled minimum (by position along the curve). Points with non-finite
/// errors are skipped. The vertex is clamped to the sampled kappa range; if
/// the fitted parabola is not convex the sampled argmin is returned.
KappaMinFit fit_kappa_min(const std::vector<std::pair<double, double>>& curve, int window = 5);

struct LinearFit {
  double mu = 0.0;
  double r2 = 0.0;  // uncentered: 1 - sum (kappa - mu delta)^2 / sum kappa^2
  int points = 0;
  double delta_cap = 0.0;
};

/// kappa = mu delta through the origin, over points with delta <= delta_cap.
LinearFit fit_linear_mu(const std::vector<std::pair<double, double>>& points, double delta_cap);

/// Least-squares slope of log y against log x over points with x, y > 0 and
/// finite. NaN with fewer than two distinct x.
double loglog_slope(const std::vector<std::pair<double, double>>& points);

// ---------------------------------------------------------------------------
// Sweeps

struct SweepConfig {
  SweepSpec sweep;
  EnsembleSpec ensemble;
  AssimilationConfig assimilation;  // solver, J, duration T, sampling
  std::filesystem::path root;       // results/<sweep-id>
  int threads = 1;
  int batch_size = 64;              // cells sharing one reference run
  bool resume = true;
  double delta_cap = 0.5;           // for the linear fit

  void validate() const;
};

struct SweepPlan {
  std::vector<SweepCell> cells;
  int members = 0;
  std::size_t grid_pairs = 0;
  std::size_t total_runs() const { return cells.size() * static_cast<std::size_t>(members); }
  std::size_t completed = 0;  // runs with a sidecar already on disk
};

SweepPlan plan_sweep(const SweepConfig& config);
std::string describe_plan(const SweepPlan& plan);

/// root/<delta>/<kappa>/<member>.csv
std::filesystem::path run_path(const std::filesystem::path& root, const SweepCell& cell, int member);

struct SweepOutcome {
  std::vector<CellStats> summary;
  std::size_t executed = 0;
  std::size_t skipped = 0;
};

/// Runs every missing (cell, member), then aggregates all trajectories on disk
/// into summary.csv. Divergent runs are recorded, never fatal.
SweepOutcome run_sweep(const SweepConfig& config, const LogFn& log = {});

/// Terminal errors per cell read back from the results tree.
std::vector<CellStats> aggregate_sweep(const SweepConfig& config);

struct KappaMinRow {
  double delta = 0.0;
  KappaMinFit fit;
};

/// kappa_min per delta from the geometric-mean curves.
std::vector<KappaMinRow> kappa_min_curve(const std::vector<CellStats>& summary, int window = 5);
/// kappa_min per delta and member from the individual terminal errors.
std::vector<std::pair<int, KappaMinRow>> kappa_min_per_member(const SweepConfig& config, int window = 5);

void write_kappa_min_csv(std::ostream& os, const std::vector<KappaMinRow>& rows);
void write_mu_fit(std::ostream& os, const LinearFit& fit);

}  // namespace nudgekit
