#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "erwlab/model.hpp"

namespace erwlab {

struct WalkState {
    long n = 0;                    // number of steps taken
    std::vector<double> S_tilde;   // auxiliary walk
    std::uint64_t key = 0;         // Philox stream
};

enum class LilScale { Diffusive, Critical };

/// Normalizer of the LIL envelope: sqrt(2 n log log n) or sqrt(2 n log n log log log n).
double lil_normalizer(LilScale scale, double n);

/// Conditional noise statistics binned by the first coordinate of S_tilde/n.
struct NoiseBins {
    double lo = 0.0, hi = 1.0;
    int bins = 20;
    std::vector<double> count, sum_e, sum_e2, sum_sigma2, sum_dev, sum_dev2;  // dev = |e|^2 - sigma^2(x)

    void reset(double lo_, double hi_, int bins_);
    void merge(const NoiseBins& other);
    int bin_of(double x) const;
};

/// Optional per-trajectory functionals. Paths never depend on these settings.
struct FunctionalConfig {
    bool retain_aux = false;  // also keep S_tilde/n at checkpoints

    bool lil = false;
    LilScale lil_scale = LilScale::Diffusive;
    double lil_center = 0.0;  // s0
    long lil_from = 1000;

    bool returns = false;  // d == 1 lattice models only

    bool noise = false;
    long noise_from = 100;
    double noise_lo = 0.0, noise_hi = 1.0;
    int noise_bins = 20;
    double lindeberg_eps = 0.1;
};

struct TrajectoryResult {
    std::vector<double> values;  // checkpoint-major, d per checkpoint: S_n / n
    std::vector<double> aux;     // checkpoint-major, s per checkpoint: S_tilde_n / n
    double lil_max = 0.0;
    long returns = 0;
    long returns_late = 0;  // returns at n > n_max / 10
    long last_return = 0;
    NoiseBins noise;
    std::vector<double> lindeberg;  // cumulative tail sums per checkpoint
};

struct CheckpointSummary {
    long n = 0;
    Eigen::VectorXd mean;  // of S_n / n
    Eigen::VectorXd se;
    Eigen::MatrixXd cov;   // of sqrt(n) S_n / n, denominator N - 1
};

struct EnsembleStats {
    std::vector<long> checkpoints;
    std::vector<CheckpointSummary> summary;
    int N = 0;
    int d = 0;
    int s = 0;
    std::uint64_t master_seed = 0;
    // values[c][i * d + k]: trajectory i, component k of S_n / n at checkpoint c
    std::vector<std::vector<double>> values;
    std::vector<std::vector<double>> aux;
    std::vector<double> lil_max;
    std::vector<long> returns, returns_late, last_return;
    NoiseBins noise;
    std::vector<double> lindeberg;  // mean tail sum per checkpoint over trajectories
    std::vector<std::string> warnings;

    /// Column of S_n / n component k at checkpoint c across trajectories.
    std::vector<double> column(std::size_t c, int k = 0) const;
    std::size_t index_of(long n) const;  // throws ConfigInvalid when absent
};

/// {floor(n_max 2^-j)} for j >= 0 while >= min_n, ascending and deduplicated.
std::vector<long> default_checkpoints(long n_max, long min_n = 1);

/// Time-1 state drawn from the initial law.
WalkState initial_state(const ValidatedModel& model, std::uint64_t key);

/// One step n -> n+1. Writes the auxiliary increment to `increment` when given.
/// Throws ProbabilityOutOfRange when the maps leave [0, 1] by more than 1e-9.
void step(WalkState& state, const ValidatedModel& model, std::vector<double>* increment = nullptr);

/// Observed walk A S_tilde + n b.
Eigen::VectorXd observe(const ValidatedModel& model, const WalkState& state);

TrajectoryResult trajectory(const ValidatedModel& model, long n_max, std::uint64_t key,
                            const std::vector<long>& checkpoints, const FunctionalConfig& cfg = {});

/// Trajectory i uses key trajectory_key(master_seed, i). Output is independent of `threads`.
EnsembleStats ensemble(const ValidatedModel& model, long n_max, int N, std::uint64_t master_seed,
                       std::vector<long> checkpoints, const FunctionalConfig& cfg = {}, int threads = 0);

/// Run fn(i) for i in [0, count) over contiguous ranges on `threads` workers (0 = hardware).
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

std::string stats_to_csv(const EnsembleStats& stats);

}  // namespace erwlab
