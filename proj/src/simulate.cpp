#include "erwlab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "erwlab/error.hpp"
#include "erwlab/rng.hpp"

namespace erwlab {

double lil_normalizer(LilScale scale, double n) {
    const double ln = std::log(n);
    if (scale == LilScale::Diffusive) return std::sqrt(2.0 * n * std::log(ln));
    return std::sqrt(2.0 * n * ln * std::log(std::log(ln)));
}

void NoiseBins::reset(double lo_, double hi_, int bins_) {
    lo = lo_;
    hi = hi_;
    bins = bins_;
    for (auto* v : {&count, &sum_e, &sum_e2, &sum_sigma2, &sum_dev, &sum_dev2}) v->assign(bins, 0.0);
}

void NoiseBins::merge(const NoiseBins& o) {
    if (count.empty()) {
        *this = o;
        return;
    }
    for (int i = 0; i < bins; ++i) {
        count[i] += o.count[i];
        sum_e[i] += o.sum_e[i];
        sum_e2[i] += o.sum_e2[i];
        sum_sigma2[i] += o.sum_sigma2[i];
        sum_dev[i] += o.sum_dev[i];
        sum_dev2[i] += o.sum_dev2[i];
    }
}

int NoiseBins::bin_of(double x) const {
    if (x < lo || x >= hi) return -1;
    return std::min(bins - 1, static_cast<int>((x - lo) / (hi - lo) * bins));
}

std::vector<double> EnsembleStats::column(std::size_t c, int k) const {
    std::vector<double> out(N);
    for (int i = 0; i < N; ++i) out[i] = values.at(c)[static_cast<std::size_t>(i) * d + k];
    return out;
}

std::size_t EnsembleStats::index_of(long n) const {
    auto it = std::find(checkpoints.begin(), checkpoints.end(), n);
    if (it == checkpoints.end()) throw Error(ErrorCode::ConfigInvalid, "checkpoint " + std::to_string(n) + " not recorded");
    return static_cast<std::size_t>(it - checkpoints.begin());
}

std::vector<long> default_checkpoints(long n_max, long min_n) {
    std::vector<long> out;
    for (long v = n_max; v >= std::max(1L, min_n); v /= 2) out.push_back(v);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

std::size_t pick(const std::vector<double>& probs, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

/// Block index for uniform u given P_1..P_{r-1}; validates the runtime range.
int pick_block(const double* P, int r_minus_1, double u, long n) {
    double acc = 0.0;
    int chosen = r_minus_1;
    for (int i = 0; i < r_minus_1; ++i) {
        const double p = P[i];
        if (!(p >= -1e-9 && p <= 1.0 + 1e-9))
            throw Error(ErrorCode::ProbabilityOutOfRange,
                        "P_" + std::to_string(i + 1) + " = " + std::to_string(p) + " at step " + std::to_string(n));
        acc += p;
        if (chosen == r_minus_1 && u < acc) chosen = i;
    }
    if (acc > 1.0 + 1e-9)
        throw Error(ErrorCode::ProbabilityOutOfRange,
                    "probabilities sum to " + std::to_string(acc) + " at step " + std::to_string(n));
    return chosen;
}

struct Stepper {
    const ValidatedModel& model;
    const ModelSpec& spec;
    int s, r;
    std::vector<double> x, P;

    explicit Stepper(const ValidatedModel& m)
        : model(m), spec(m.spec()), s(m.s()), r(m.r()), x(m.s()), P(std::max(1, m.r() - 1)) {}

    // The increment is the chosen atom restricted to the chosen block.
    void advance(WalkState& st, std::vector<double>* inc) {
        const double inv = 1.0 / static_cast<double>(st.n);
        for (int j = 0; j < s; ++j) x[j] = st.S_tilde[j] * inv;
        model.probs(x, std::span<double>(P.data(), r - 1));
        const auto u = Philox::uniforms(st.key, static_cast<std::uint64_t>(st.n));
        const int block = pick_block(P.data(), r - 1, u[0], st.n);
        const auto& law = spec.step_law;
        const std::size_t a = law.atoms.size() == 1 ? 0 : pick(law.probs, u[1]);
        if (inc) inc->assign(s, 0.0);
        for (int c : spec.partition[block]) {
            st.S_tilde[c] += law.atoms[a][c];
            if (inc) (*inc)[c] = law.atoms[a][c];
        }
        ++st.n;
    }
};

}  // namespace

WalkState initial_state(const ValidatedModel& model, std::uint64_t key) {
    const auto& init = model.spec().initial;
    WalkState st;
    st.key = key;
    st.n = 1;
    const auto u = Philox::uniforms(key, 0);
    st.S_tilde = init.atoms[pick(init.probs, u[0])];
    return st;
}

void step(WalkState& state, const ValidatedModel& model, std::vector<double>* increment) {
    Stepper(model).advance(state, increment);
}

Eigen::VectorXd observe(const ValidatedModel& model, const WalkState& state) {
    const auto& spec = model.spec();
    const Eigen::Map<const Eigen::VectorXd> st(state.S_tilde.data(), static_cast<Eigen::Index>(state.S_tilde.size()));
    return spec.A * st + static_cast<double>(state.n) * spec.b;
}

namespace {

TrajectoryResult run_one(const ValidatedModel& model, long n_max, std::uint64_t key, const std::vector<long>& cps,
                         const FunctionalConfig& cfg, const std::vector<double>* inv_norm) {
    const auto& spec = model.spec();
    const int s = model.s(), d = model.d(), r = model.r();
    TrajectoryResult res;
    res.values.reserve(cps.size() * d);
    if (cfg.retain_aux) res.aux.reserve(cps.size() * s);
    if (cfg.noise) res.noise.reset(cfg.noise_lo, cfg.noise_hi, cfg.noise_bins);

    const bool track_1d = d == 1 && (cfg.lil || cfg.returns);
    Eigen::RowVectorXd a_row;
    double b0 = 0.0;
    if (track_1d) {
        a_row = spec.A.row(0);
        b0 = spec.b(0);
    }
    double atom_bound = model.max_atom_norm();
    for (const auto& a : spec.initial.atoms)
        for (double v : a) atom_bound = std::max(atom_bound, std::fabs(v));

    Stepper stepper(model);
    WalkState st = initial_state(model, key);
    std::vector<double> inc(s), xb(s), Pall(r);
    double lind = 0.0;
    std::size_t ci = 0;

    for (;;) {
        const long n = st.n;
        const double nd = static_cast<double>(n);
        if (track_1d) {
            double S = b0 * nd;
            for (int j = 0; j < s; ++j) S += a_row(j) * st.S_tilde[j];
            if (cfg.lil && n >= cfg.lil_from) {
                const double norm_inv = inv_norm ? (*inv_norm)[n - cfg.lil_from] : 1.0 / lil_normalizer(cfg.lil_scale, nd);
                res.lil_max = std::max(res.lil_max, std::fabs(S - nd * cfg.lil_center) * norm_inv);
            }
            if (cfg.returns && S == 0.0) {
                ++res.returns;
                res.last_return = n;
                if (10 * n > n_max) ++res.returns_late;
            }
        }
        if (ci < cps.size() && cps[ci] == n) {
            for (int j = 0; j < s; ++j)
                if (!(std::fabs(st.S_tilde[j]) <= nd * atom_bound * (1.0 + 1e-12)))
                    throw Error(ErrorCode::OverflowGuard, "auxiliary walk exceeds n * max atom at n=" + std::to_string(n));
            const Eigen::VectorXd S = observe(model, st);
            for (int k = 0; k < d; ++k) res.values.push_back(S(k) / nd);
            if (cfg.retain_aux)
                for (int j = 0; j < s; ++j) res.aux.push_back(st.S_tilde[j] / nd);
            if (cfg.noise) res.lindeberg.push_back(lind);
            ++ci;
        }
        if (n >= n_max) break;

        if (cfg.noise && n >= cfg.noise_from) {
            for (int j = 0; j < s; ++j) xb[j] = st.S_tilde[j] / nd;
            model.probs(xb, std::span<double>(Pall.data(), r - 1));
            double rest = 1.0;
            for (int i = 0; i < r - 1; ++i) rest -= Pall[i];
            Pall[r - 1] = rest;
            Eigen::VectorXd H = Eigen::VectorXd::Zero(s);
            double tr = 0.0;
            for (int i = 0; i < r; ++i) {
                H += Pall[i] * model.block_mu(i);
                tr += Pall[i] * model.block_second_moment(i).trace();
            }
            const double sigma2 = tr - H.squaredNorm();
            stepper.advance(st, &inc);
            double e0 = H(0) - inc[0], e2 = 0.0;
            for (int j = 0; j < s; ++j) e2 += (H(j) - inc[j]) * (H(j) - inc[j]);
            const int bin = res.noise.bin_of(xb[0]);
            if (bin >= 0) {
                res.noise.count[bin] += 1.0;
                res.noise.sum_e[bin] += e0;
                res.noise.sum_e2[bin] += e0 * e0;
                res.noise.sum_sigma2[bin] += sigma2;
                res.noise.sum_dev[bin] += e2 - sigma2;
                res.noise.sum_dev2[bin] += (e2 - sigma2) * (e2 - sigma2);
            }
            if (std::sqrt(e2) > cfg.lindeberg_eps * std::sqrt(nd + 1.0)) lind += e2;
        } else {
            stepper.advance(st, nullptr);
        }
    }
    return res;
}

std::vector<long> normalize_checkpoints(std::vector<long> cps, long n_max) {
    if (cps.empty()) return default_checkpoints(n_max);
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
    if (cps.front() < 1 || cps.back() > n_max)
        throw Error(ErrorCode::ConfigInvalid, "checkpoints must lie in [1, n_max]");
    return cps;
}

}  // namespace

TrajectoryResult trajectory(const ValidatedModel& model, long n_max, std::uint64_t key,
                            const std::vector<long>& checkpoints, const FunctionalConfig& cfg) {
    if (n_max < 1) throw Error(ErrorCode::ConfigInvalid, "n_max must be >= 1");
    return run_one(model, n_max, key, normalize_checkpoints(checkpoints, n_max), cfg, nullptr);
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = count * w / workers, hi = count * (w + 1) / workers;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

EnsembleStats ensemble(const ValidatedModel& model, long n_max, int N, std::uint64_t master_seed,
                       std::vector<long> checkpoints, const FunctionalConfig& cfg_in, int threads) {
    if (N < 2) throw Error(ErrorCode::ConfigInvalid, "ensemble needs N >= 2");
    if (n_max < 1) throw Error(ErrorCode::ConfigInvalid, "n_max must be >= 1");
    EnsembleStats out;
    out.checkpoints = normalize_checkpoints(std::move(checkpoints), n_max);
    out.N = N;
    out.d = model.d();
    out.s = model.s();
    out.master_seed = master_seed;

    FunctionalConfig cfg = cfg_in;
    if ((cfg.lil || cfg.returns) && model.d() != 1) {
        out.warnings.push_back("LIL and return functionals need d == 1; disabled");
        cfg.lil = cfg.returns = false;
    }
    if (cfg.returns && !model.integer_lattice()) {
        out.warnings.push_back("returns to the origin need an integer-valued walk; disabled");
        cfg.returns = false;
    }
    std::vector<double> inv_norm;
    const std::vector<double>* table = nullptr;
    if (cfg.lil && n_max >= cfg.lil_from && n_max - cfg.lil_from < 20'000'000) {
        inv_norm.resize(static_cast<std::size_t>(n_max - cfg.lil_from + 1));
        for (std::size_t i = 0; i < inv_norm.size(); ++i)
            inv_norm[i] = 1.0 / lil_normalizer(cfg.lil_scale, static_cast<double>(cfg.lil_from + static_cast<long>(i)));
        table = &inv_norm;
    }

    std::vector<TrajectoryResult> results(N);
    parallel_for(static_cast<std::size_t>(N), threads, [&](std::size_t i) {
        results[i] = run_one(model, n_max, trajectory_key(master_seed, i), out.checkpoints, cfg, table);
    });

    const std::size_t C = out.checkpoints.size();
    const int d = out.d, s = out.s;
    out.values.assign(C, std::vector<double>(static_cast<std::size_t>(N) * d));
    if (cfg.retain_aux) out.aux.assign(C, std::vector<double>(static_cast<std::size_t>(N) * s));
    if (cfg.noise) {
        out.noise.reset(cfg.noise_lo, cfg.noise_hi, cfg.noise_bins);
        out.lindeberg.assign(C, 0.0);
    }
    for (int i = 0; i < N; ++i) {
        const auto& tr = results[i];
        for (std::size_t c = 0; c < C; ++c) {
            for (int k = 0; k < d; ++k) out.values[c][static_cast<std::size_t>(i) * d + k] = tr.values[c * d + k];
            if (cfg.retain_aux)
                for (int j = 0; j < s; ++j) out.aux[c][static_cast<std::size_t>(i) * s + j] = tr.aux[c * s + j];
            if (cfg.noise) out.lindeberg[c] += tr.lindeberg[c] / N;
        }
        if (cfg.lil) out.lil_max.push_back(tr.lil_max);
        if (cfg.returns) {
            out.returns.push_back(tr.returns);
            out.returns_late.push_back(tr.returns_late);
            out.last_return.push_back(tr.last_return);
        }
        if (cfg.noise) out.noise.merge(tr.noise);
    }

    for (std::size_t c = 0; c < C; ++c) {
        CheckpointSummary cs;
        cs.n = out.checkpoints[c];
        Eigen::Map<const Eigen::MatrixXd> X(out.values[c].data(), d, N);  // column per trajectory
        cs.mean = X.rowwise().mean();
        const Eigen::MatrixXd centered = X.colwise() - cs.mean;
        cs.cov = static_cast<double>(cs.n) * (centered * centered.transpose()) / (N - 1);
        cs.se = (cs.cov.diagonal() / static_cast<double>(cs.n) / N).cwiseSqrt();
        out.summary.push_back(std::move(cs));
    }
    return out;
}

std::string stats_to_csv(const EnsembleStats& st) {
    std::ostringstream os;
    os.precision(17);
    os << "checkpoint,component,mean,se,var";
    for (int j = 0; j < st.d; ++j) os << ",cov_" << (j + 1);
    os << '\n';
    for (const auto& cs : st.summary) {
        for (int k = 0; k < st.d; ++k) {
            os << cs.n << ',' << (k + 1) << ',' << cs.mean(k) << ',' << cs.se(k) << ',' << cs.cov(k, k);
            for (int j = 0; j < st.d; ++j) os << ',' << cs.cov(k, j);
            os << '\n';
        }
    }
    return os.str();
}

}  // namespace erwlab
