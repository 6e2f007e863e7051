#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "optdiff/errors.hpp"
#include "optdiff/parallel.hpp"
#include "optdiff/potential.hpp"

namespace optdiff {

/// xoshiro256** seeded through splitmix64 from (seed, stream). Different streams
/// are independent for all practical purposes, which lets each chain, walker or
/// transition draw from its own generator regardless of the thread running it.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    for (auto& w : s_) w = splitmix64(x);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on (0, 1].
  double uniform() noexcept { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

  /// Uniform on [0, 1).
  double uniform0() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(*this); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  static std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t s_[4]{};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Smallest admissible diffusion value for sampling.
inline constexpr double kDiffusionFloor = 1e-12;

/// Continuous positive diffusion on the torus: node values on j/N with periodic
/// linear interpolation, e^{V}, or a constant.
class DiffusionField {
 public:
  enum class Kind { Nodal, ExpV, Constant };

  /// Cell values of a diffusion vector placed at the left nodes j/N.
  static DiffusionField nodal(std::vector<double> values, bool require_positive = true) {
    if (values.size() < 2) throw InvalidArgument("nodal diffusion field needs at least 2 values");
    DiffusionField f(Kind::Nodal);
    f.values_ = std::move(values);
    if (require_positive) f.check_floor(*std::min_element(f.values_.begin(), f.values_.end()));
    return f;
  }
  static DiffusionField nodal(const Eigen::VectorXd& v, bool require_positive = true) {
    return nodal(std::vector<double>(v.data(), v.data() + v.size()), require_positive);
  }
  /// D(q) = e^{V(q)} evaluated exactly.
  static DiffusionField exp_v(const Potential& pot, bool require_positive = true) {
    DiffusionField f(Kind::ExpV);
    f.pot_ = pot;
    (void)require_positive;  // e^V is positive
    return f;
  }
  static DiffusionField constant(double gamma, bool require_positive = true) {
    DiffusionField f(Kind::Constant);
    f.gamma_ = gamma;
    if (require_positive) f.check_floor(gamma);
    return f;
  }

  Kind kind() const noexcept { return kind_; }

  /// D(q) when V(q) is already known (skips re-evaluating V for e^V).
  double at(double q, double v) const noexcept {
    return kind_ == Kind::ExpV ? std::exp(v) : (*this)(q);
  }

  double operator()(double q) const noexcept {
    switch (kind_) {
      case Kind::Constant: return gamma_;
      case Kind::ExpV: return std::exp((*pot_)(q));
      case Kind::Nodal: {
        const std::size_t n = values_.size();
        const double y = wrap_unit(q) * static_cast<double>(n);
        std::size_t j = static_cast<std::size_t>(y);
        if (j >= n) j = n - 1;
        const double frac = y - static_cast<double>(j);
        return (1.0 - frac) * values_[j] + frac * values_[j + 1 == n ? 0 : j + 1];
      }
    }
    return gamma_;
  }

  /// Maximum over the nodes (or over a fine grid for e^V).
  double max_value() const {
    switch (kind_) {
      case Kind::Constant: return gamma_;
      case Kind::Nodal: return *std::max_element(values_.begin(), values_.end());
      case Kind::ExpV: {
        double m = 0.0;
        for (int i = 0; i < 10000; ++i) m = std::max(m, (*this)(i / 10000.0));
        return m;
      }
    }
    return gamma_;
  }

 private:
  explicit DiffusionField(Kind k) : kind_(k) {}
  void check_floor(double m) const {
    if (!(m >= kDiffusionFloor))
      throw DegenerateDiffusion("diffusion field has values below " + std::to_string(kDiffusionFloor) +
                                " (minimum " + std::to_string(m) +
                                "); re-optimize with a positive lower bound a");
  }

  Kind kind_;
  std::vector<double> values_;
  std::optional<Potential> pot_;
  double gamma_ = 1.0;
};

/// True when the largest proposal standard deviation exceeds half the torus.
inline bool proposal_too_wide(const DiffusionField& field, double dt) {
  return std::sqrt(2.0 * dt * field.max_value()) > 0.5;
}

/// log of the Metropolis ratio for the move q -> qt (before taking min with 1).
inline double metropolis_log_ratio(const Potential& pot, const DiffusionField& field, double q, double qt,
                                   double dt) {
  const double dq = field(q), dqt = field(qt);
  const double g2 = (qt - q) * (qt - q) / (2.0 * dt * dq);
  const double gt2 = (dq / dqt) * g2;
  return 0.5 * std::log(dq / dqt) - (pot(qt) - pot(q)) - 0.5 * (gt2 - g2);
}

struct StepResult {
  double q = 0.0;
  bool accepted = false;
};

/// One RWMH move from q with standard normal g and uniform u in (0, 1].
inline StepResult rwmh_step(const Potential& pot, const DiffusionField& field, double q, double dt, double g,
                            double u) {
  const double dq = field(q);
  const double qt = q + std::sqrt(2.0 * dt * dq) * g;
  const double dqt = field(qt);
  const double ratio = dq / dqt;
  const double r = std::sqrt(ratio) * std::exp(-(pot(qt) - pot(q)) - 0.5 * (ratio - 1.0) * g * g);
  if (u <= r) return {qt, true};
  return {q, false};
}

namespace detail {

// Chain state with V and D cached at the current position.
struct Walker {
  double q, v, d;
  Walker(const Potential& pot, const DiffusionField& field, double q0) : q(q0), v(pot(q0)), d(field.at(q0, v)) {}

  bool step(const Potential& pot, const DiffusionField& field, double two_dt, Rng& rng) {
    const double g = rng.normal();
    const double u = rng.uniform();
    const double qt = q + std::sqrt(two_dt * d) * g;
    const double vt = pot(qt);
    const double dt_ = field.at(qt, vt);
    const double ratio = d / dt_;
    const double r = std::sqrt(ratio) * std::exp(-(vt - v) - 0.5 * (ratio - 1.0) * g * g);
    if (u <= r) {
      q = qt;
      v = vt;
      d = dt_;
      return true;
    }
    return false;
  }
};

}  // namespace detail

struct SamplerConfig {
  double dt = 1e-4;
  std::int64_t n_steps = 0;
  std::uint64_t seed = 0;
  double q0 = 0.0;
  std::int64_t record_stride = 1;
  std::uint64_t chain_id = 0;
};

struct ChainRun {
  std::vector<std::int64_t> steps;   // step index of each record
  std::vector<double> positions;     // unfolded coordinates
  std::vector<char> accepted;        // acceptance of the move that ended at the record (1 for step 0)
  std::int64_t n_accepted = 0;
  std::int64_t n_proposed = 0;

  double acceptance() const { return n_proposed ? static_cast<double>(n_accepted) / n_proposed : 1.0; }
  double rejection() const { return 1.0 - acceptance(); }
};

inline ChainRun run_chain(const Potential& pot, const DiffusionField& field, const SamplerConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw InvalidArgument("dt must be > 0");
  if (cfg.n_steps < 0 || cfg.record_stride < 1) throw InvalidArgument("bad step count or stride");
  Rng rng(cfg.seed, cfg.chain_id);
  detail::Walker w(pot, field, cfg.q0);
  ChainRun run;
  run.steps.push_back(0);
  run.positions.push_back(w.q);
  run.accepted.push_back(1);
  const double two_dt = 2.0 * cfg.dt;
  for (std::int64_t s = 1; s <= cfg.n_steps; ++s) {
    const bool acc = w.step(pot, field, two_dt, rng);
    run.n_accepted += acc;
    ++run.n_proposed;
    if (s % cfg.record_stride == 0) {
      run.steps.push_back(s);
      run.positions.push_back(w.q);
      run.accepted.push_back(acc);
    }
  }
  return run;
}

struct MsdPoint {
  double t = 0.0;
  double msd = 0.0;
  double ci95 = 0.0;
};

struct MsdResult {
  std::vector<MsdPoint> curve;
  double acceptance = 0.0;
};

/// Mean squared unfolded displacement over n_sim independent chains started at q0,
/// recorded every `stride` steps up to time T.
inline MsdResult msd_curve(const Potential& pot, const DiffusionField& field, int n_sim, double T, double dt,
                           std::int64_t stride, std::uint64_t seed, double q0 = 0.0, int threads = 1) {
  if (n_sim < 2) throw InvalidArgument("msd needs n_sim >= 2");
  if (!(dt > 0.0) || !(T > 0.0) || stride < 1) throw InvalidArgument("bad msd time parameters");
  const std::int64_t n_steps = static_cast<std::int64_t>(std::llround(T / dt));
  const std::int64_t n_rec = n_steps / stride;
  std::vector<std::vector<double>> sq(static_cast<std::size_t>(n_sim));
  std::vector<std::int64_t> acc(static_cast<std::size_t>(n_sim), 0);
  parallel_for(static_cast<std::size_t>(n_sim), threads, [&](std::size_t i) {
    Rng rng(seed, i);
    detail::Walker w(pot, field, q0);
    std::vector<double> out(static_cast<std::size_t>(n_rec));
    const double two_dt = 2.0 * dt;
    std::int64_t a = 0;
    for (std::int64_t r = 0; r < n_rec; ++r) {
      for (std::int64_t k = 0; k < stride; ++k) a += w.step(pot, field, two_dt, rng);
      out[static_cast<std::size_t>(r)] = (w.q - q0) * (w.q - q0);
    }
    sq[i] = std::move(out);
    acc[i] = a;
  });
  MsdResult res;
  res.curve.push_back({0.0, 0.0, 0.0});
  for (std::int64_t r = 0; r < n_rec; ++r) {
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n_sim; ++i) {
      const double x = sq[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)];
      s += x;
      s2 += x * x;
    }
    const double mean = s / n_sim;
    const double var = std::max(0.0, (s2 - n_sim * mean * mean) / (n_sim - 1));
    res.curve.push_back({static_cast<double>((r + 1) * stride) * dt, mean, 1.96 * std::sqrt(var / n_sim)});
  }
  std::int64_t total = 0;
  for (auto a : acc) total += a;
  res.acceptance = static_cast<double>(total) / (static_cast<double>(n_steps) * n_sim);
  return res;
}

/// Half the least-squares slope of msd against t over [t_lo, t_hi].
inline double effective_diffusion_estimate(const std::vector<MsdPoint>& curve, double t_lo, double t_hi) {
  double st = 0.0, sm = 0.0, stt = 0.0, stm = 0.0;
  int n = 0;
  for (const auto& p : curve) {
    if (p.t < t_lo || p.t > t_hi) continue;
    st += p.t;
    sm += p.msd;
    stt += p.t * p.t;
    stm += p.t * p.msd;
    ++n;
  }
  if (n < 2) throw EmptyWindow("regression window contains fewer than two samples");
  const double den = n * stt - st * st;
  if (den <= 0.0) throw EmptyWindow("regression window has no time spread");
  return 0.5 * (n * stm - st * sm) / den;
}

struct Chi2Point {
  double t = 0.0;
  double chi2 = 0.0;
};

/// Binned Gibbs reference: mu_k = N_bins e^{-V(mid_k)} / sum_j e^{-V(mid_j)}.
inline std::vector<double> binned_gibbs(const Potential& pot, int n_bins) {
  std::vector<double> mu(static_cast<std::size_t>(n_bins));
  double s = 0.0;
  for (int k = 0; k < n_bins; ++k) {
    mu[static_cast<std::size_t>(k)] = std::exp(-pot((k + 0.5) / n_bins));
    s += mu[static_cast<std::size_t>(k)];
  }
  for (auto& m : mu) m *= n_bins / s;
  return mu;
}

/// Weighted L2 distance between bin counts and the binned Gibbs density.
inline double chi2_from_counts(const std::vector<std::int64_t>& counts, const std::vector<double>& mu,
                               std::int64_t n_samples) {
  const std::size_t nb = mu.size();
  double acc = 0.0;
  for (std::size_t k = 0; k < nb; ++k) {
    const double emp = static_cast<double>(nb) * static_cast<double>(counts[k]) / static_cast<double>(n_samples);
    acc += (emp - mu[k]) * (emp - mu[k]) / mu[k];
  }
  return std::sqrt(acc / static_cast<double>(nb));
}

inline int bin_of(double q, int n_bins) {
  int k = static_cast<int>(wrap_unit(q) * n_bins);
  return std::min(k, n_bins - 1);
}

enum class Chi2Init { Uniform, Gibbs };

/// Draws from the Gibbs density by rejection from the uniform law.
inline double sample_gibbs(const Potential& pot, double v_min, Rng& rng) {
  while (true) {
    const double q = rng.uniform0();
    if (rng.uniform() <= std::exp(-(pot(q) - v_min))) return q;
  }
}

/// Chi-square error decay of n_samples independent walkers, recorded every record_stride steps.
inline std::vector<Chi2Point> chi2_curve(const Potential& pot, const DiffusionField& field, int n_samples,
                                         int n_bins, double dt, std::int64_t n_steps,
                                         std::int64_t record_stride, std::uint64_t seed, int threads = 1,
                                         Chi2Init init = Chi2Init::Uniform) {
  if (n_bins < 2) throw InvalidArgument("chi2 needs n_bins >= 2");
  if (n_samples < n_bins) throw InvalidArgument("chi2 needs n_samples >= n_bins");
  if (record_stride < 1 || n_steps < 0 || !(dt > 0.0)) throw InvalidArgument("bad chi2 time parameters");
  const std::int64_t n_rec = n_steps / record_stride + 1;
  const std::vector<double> mu = binned_gibbs(pot, n_bins);
  double v_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100000; ++i) v_min = std::min(v_min, pot(i / 100000.0));
  v_min -= 1e-3;

  // walkers are split into fixed blocks; integer counts make the reduction order-free
  const std::size_t n_blocks = static_cast<std::size_t>(std::min(n_samples, 64));
  std::vector<std::vector<std::int64_t>> counts(n_blocks);
  parallel_for(n_blocks, threads, [&](std::size_t b) {
    std::vector<std::int64_t> c(static_cast<std::size_t>(n_rec * n_bins), 0);
    const double two_dt = 2.0 * dt;
    for (int i = static_cast<int>(b); i < n_samples; i += static_cast<int>(n_blocks)) {
      Rng rng(seed, static_cast<std::uint64_t>(i));
      const double q0 = init == Chi2Init::Uniform ? rng.uniform0() : sample_gibbs(pot, v_min, rng);
      detail::Walker w(pot, field, q0);
      c[static_cast<std::size_t>(bin_of(w.q, n_bins))] += 1;
      for (std::int64_t r = 1; r < n_rec; ++r) {
        for (std::int64_t k = 0; k < record_stride; ++k) w.step(pot, field, two_dt, rng);
        c[static_cast<std::size_t>(r * n_bins + bin_of(w.q, n_bins))] += 1;
      }
    }
    counts[b] = std::move(c);
  });
  std::vector<Chi2Point> out;
  std::vector<std::int64_t> row(static_cast<std::size_t>(n_bins));
  for (std::int64_t r = 0; r < n_rec; ++r) {
    std::fill(row.begin(), row.end(), 0);
    for (const auto& c : counts)
      for (int k = 0; k < n_bins; ++k) row[static_cast<std::size_t>(k)] += c[static_cast<std::size_t>(r * n_bins + k)];
    out.push_back({static_cast<double>(r * record_stride) * dt, chi2_from_counts(row, mu, n_samples)});
  }
  return out;
}

/// Negated least-squares slope of log chi2 against t over [t_lo, t_hi].
inline double chi2_decay_rate(const std::vector<Chi2Point>& curve, double t_lo, double t_hi) {
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  int n = 0;
  for (const auto& p : curve) {
    if (p.t < t_lo || p.t > t_hi || !(p.chi2 > 0.0)) continue;
    const double y = std::log(p.chi2);
    st += p.t;
    sy += y;
    stt += p.t * p.t;
    sty += p.t * y;
    ++n;
  }
  if (n < 2) throw EmptyWindow("decay-rate window contains fewer than two samples");
  return -(n * sty - st * sy) / (n * stt - st * st);
}

struct TransitionResult {
  double mean = 0.0;
  double ci95 = 0.0;
  int n = 0;
  double rejection = 0.0;
};

/// Mean physical time for the unfolded chain started at x0 to reach x0 - 1 or x0 + 1.
inline TransitionResult mean_transition_time(const Potential& pot, const DiffusionField& field, double x0,
                                             double dt, int n_transitions, std::uint64_t seed, int threads = 1,
                                             std::int64_t max_steps = std::numeric_limits<std::int64_t>::max()) {
  if (n_transitions < 1) throw InvalidArgument("need at least one transition");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be > 0");
  std::vector<std::int64_t> steps(static_cast<std::size_t>(n_transitions));
  std::vector<std::int64_t> accepted(static_cast<std::size_t>(n_transitions));
  parallel_for(static_cast<std::size_t>(n_transitions), threads, [&](std::size_t i) {
    Rng rng(seed, i);
    detail::Walker w(pot, field, x0);
    const double two_dt = 2.0 * dt;
    std::int64_t s = 0, a = 0;
    while (std::abs(w.q - x0) < 1.0 && s < max_steps) {
      a += w.step(pot, field, two_dt, rng);
      ++s;
    }
    steps[i] = s;
    accepted[i] = a;
  });
  double sum = 0.0, sum2 = 0.0;
  std::int64_t tot_s = 0, tot_a = 0;
  for (int i = 0; i < n_transitions; ++i) {
    const double t = static_cast<double>(steps[static_cast<std::size_t>(i)]) * dt;
    sum += t;
    sum2 += t * t;
    tot_s += steps[static_cast<std::size_t>(i)];
    tot_a += accepted[static_cast<std::size_t>(i)];
  }
  TransitionResult res;
  res.n = n_transitions;
  res.mean = sum / n_transitions;
  const double var = n_transitions > 1 ? std::max(0.0, (sum2 - n_transitions * res.mean * res.mean) / (n_transitions - 1)) : 0.0;
  res.ci95 = 1.96 * std::sqrt(var / n_transitions);
  res.rejection = tot_s ? 1.0 - static_cast<double>(tot_a) / static_cast<double>(tot_s) : 0.0;
  return res;
}

struct RejectionPoint {
  double q = 0.0;
  double reject_prob = 0.0;
};

/// Empirical rejection fraction of n_proposals independent moves from each grid point i/grid_size.
inline std::vector<RejectionPoint> rejection_probability_map(const Potential& pot, const DiffusionField& field,
                                                             double dt, int grid_size, int n_proposals,
                                                             std::uint64_t seed, int threads = 1) {
  if (grid_size < 1 || n_proposals < 1) throw InvalidArgument("grid_size and n_proposals must be >= 1");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be > 0");
  return parallel_map<RejectionPoint>(static_cast<std::size_t>(grid_size), threads, [&](std::size_t i) {
    const double q = static_cast<double>(i) / grid_size;
    Rng rng(seed, i);
    const double two_dt = 2.0 * dt;
    const detail::Walker start(pot, field, q);
    std::int64_t rej = 0;
    for (int k = 0; k < n_proposals; ++k) {
      detail::Walker w = start;
      rej += !w.step(pot, field, two_dt, rng);
    }
    return RejectionPoint{q, static_cast<double>(rej) / n_proposals};
  });
}

inline double mean_rejection(const std::vector<RejectionPoint>& map) {
  double s = 0.0;
  for (const auto& p : map) s += p.reject_prob;
  return map.empty() ? 0.0 : s / static_cast<double>(map.size());
}

}  // namespace optdiff
