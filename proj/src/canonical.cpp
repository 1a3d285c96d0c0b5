#include "aai/canonical.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace aai {

EmpiricalCDF EmpiricalCDF::from_samples(std::vector<double> samples) {
  if (samples.empty()) {
    throw InsufficientRuns("empirical CDF over an empty sample");
  }
  for (double s : samples) {
    if (!std::isfinite(s)) {
      throw ValidationError("non-finite score in sample");
    }
  }
  std::sort(samples.begin(), samples.end());
  EmpiricalCDF cdf;
  cdf.n_ = static_cast<int>(samples.size());
  double n = static_cast<double>(samples.size());
  std::size_t i = 0;
  std::size_t seen = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    while (j < samples.size() && samples[j] == samples[i]) ++j;
    seen += j - i;
    cdf.values_.push_back(samples[i]);
    cdf.cum_.push_back(static_cast<double>(seen) / n);
    i = j;
  }
  return cdf;
}

std::pair<double, double> EmpiricalCDF::eval(double x) const {
  // First value strictly greater than x bounds F(x); an exact hit on a
  // sample value opens the (F(x-), F(x)) gap.
  auto it = std::lower_bound(values_.begin(), values_.end(), x);
  if (it == values_.end()) return {cum_.back(), cum_.back()};
  std::size_t k = static_cast<std::size_t>(it - values_.begin());
  double below = k == 0 ? 0.0 : cum_[k - 1];
  if (values_[k] == x) return {below, cum_[k]};
  return {below, below};
}

double randomized_pit(const EmpiricalCDF& cdf, double s, double xi) {
  auto [lo, hi] = cdf.eval(s);
  return lo + xi * (hi - lo);
}

double aligned_threshold(const EmpiricalCDF& cdf, double q_star) {
  auto [lo, hi] = cdf.eval(q_star);
  return lo + 0.5 * (hi - lo);
}

CanonicalRep canonicalize(const AgentRep& rep, const RandomStream& stream,
                          const CanonicalizeOptions& opts) {
  const Battery& b = rep.battery;
  CanonicalRep out;
  out.master_seed = stream.state();
  out.task_ids.reserve(b.tasks.size());
  out.tau.resize(b.tasks.size());
  out.u.resize(b.tasks.size());
  out.q.resize(b.tasks.size());

  for (std::size_t i = 0; i < b.tasks.size(); ++i) {
    const auto& recs = rep.runs[i];
    if (recs.empty()) {
      throw InsufficientRuns("task '" + b.tasks[i].id + "' has no runs");
    }
    out.task_ids.push_back(b.tasks[i].id);

    std::vector<double> pooled;
    pooled.reserve(recs.size());
    for (const auto& r : recs) pooled.push_back(r.score);
    EmpiricalCDF pooled_cdf = EmpiricalCDF::from_samples(pooled);
    out.tau[i] = aligned_threshold(pooled_cdf, b.tasks[i].q_star);

    std::map<std::string, EmpiricalCDF> per_drift;
    if (opts.per_drift) {
      std::map<std::string, std::vector<double>> strata;
      for (const auto& r : recs) strata[r.drift].push_back(r.score);
      for (auto& [d, v] : strata) {
        per_drift.emplace(d, EmpiricalCDF::from_samples(std::move(v)));
      }
    }

    out.u[i].resize(recs.size());
    out.q[i].resize(recs.size());
    for (std::size_t k = 0; k < recs.size(); ++k) {
      const EmpiricalCDF& cdf =
          opts.per_drift ? per_drift.at(recs[k].drift) : pooled_cdf;
      double xi = stream.u01("pit", recs[k].xi_task, recs[k].xi_index);
      double u = randomized_pit(cdf, recs[k].score, xi);
      out.u[i][k] = u;
      out.q[i][k] = u >= out.tau[i] ? 1 : 0;
    }
  }

  std::size_t d_r = b.n_resources();
  out.mean_resources.assign(d_r, 0.0);
  std::size_t n_rec = 0;
  for (const auto& recs : rep.runs) {
    for (const auto& r : recs) {
      out.run_resources.push_back(r.resources);
      for (std::size_t j = 0; j < d_r; ++j) {
        out.mean_resources[j] += r.resources[j];
      }
      ++n_rec;
    }
  }
  for (auto& v : out.mean_resources) v /= static_cast<double>(n_rec);
  double total = 0.0;
  for (double v : out.mean_resources) total += v;
  if (!(total > 0.0)) {
    throw ValidationError("mean resource vector has zero mass");
  }
  out.ray.resize(d_r);
  for (std::size_t j = 0; j < d_r; ++j) out.ray[j] = out.mean_resources[j] / total;
  return out;
}

CanonicalRep dyadic_coarsen(const CanonicalRep& canon, int level) {
  if (level < 0 || level > 40) {
    throw ValidationError("dyadic level outside [0,40]");
  }
  std::size_t t = canon.n_tasks();
  if (t == 0) throw ValidationError("empty canonical representation");
  std::size_t n = canon.u[0].size();
  for (const auto& v : canon.u) {
    if (v.size() != n) {
      throw ValidationError("dyadic_coarsen requires aligned run counts");
    }
  }

  double cells = std::ldexp(1.0, level);  // 2^level
  auto cell_of = [&](double x) {
    double c = std::floor(x * cells);
    if (c >= cells) c = cells - 1.0;
    if (c < 0.0) c = 0.0;
    return static_cast<std::int64_t>(c);
  };

  // Group joint samples by their cell vector.
  std::map<std::vector<std::int64_t>, std::vector<std::size_t>> groups;
  std::vector<std::int64_t> key(t);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ti = 0; ti < t; ++ti) key[ti] = cell_of(canon.u[ti][i]);
    groups[key].push_back(i);
  }

  CanonicalRep out = canon;
  for (const auto& [cell, members] : groups) {
    (void)cell;
    for (std::size_t ti = 0; ti < t; ++ti) {
      double m = 0.0;
      for (std::size_t i : members) m += canon.u[ti][i];
      m /= static_cast<double>(members.size());
      for (std::size_t i : members) out.u[ti][i] = m;
    }
  }
  for (std::size_t ti = 0; ti < t; ++ti) {
    for (std::size_t i = 0; i < n; ++i) {
      out.q[ti][i] = out.u[ti][i] >= out.tau[ti] ? 1 : 0;
    }
  }
  return out;
}

}  // namespace aai
