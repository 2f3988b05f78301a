#include "dwmpc/bo.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dwmpc/rng.hpp"

namespace dwmpc {

namespace {

bool lex_less(const Vec3& a, const Vec3& b) {
  if (a.x() != b.x()) return a.x() < b.x();
  if (a.y() != b.y()) return a.y() < b.y();
  return a.z() < b.z();
}

double target_std(const std::vector<double>& ys) {
  if (ys.size() < 2) return 1.0;
  double mean = 0.0;
  for (double y : ys) mean += y;
  mean /= static_cast<double>(ys.size());
  double var = 0.0;
  for (double y : ys) var += (y - mean) * (y - mean);
  var /= static_cast<double>(ys.size());
  return var > 1e-18 ? std::sqrt(var) : 1.0;
}

}  // namespace

void BoRegion::validate() const {
  if (!((hi - lo).array() > 0.0).all())
    throw std::invalid_argument("interaction region must be nonempty");
}

void BoConfig::validate() const {
  region.validate();
  if (episodes < 1) throw std::invalid_argument("episode budget must be >= 1");
  if (grid_resolution < 2)
    throw std::invalid_argument("acquisition grid needs >= 2 points per axis");
  if (!(beta_delta > 0.0 && beta_delta < 1.0))
    throw std::invalid_argument("beta delta must lie in (0, 1)");
  if (sample_stride < 1) throw std::invalid_argument("sample stride must be >= 1");
}

double beta_schedule(int t, double delta) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return 2.0 * std::log(static_cast<double>(t) * t * pi2 / delta);
}

GpModel fit_perf_gp(const ForceDataset& perf_data, const Kernel& kernel,
                    double noise_var) {
  if (perf_data.size() == 0)
    throw std::invalid_argument("cannot fit performance GP without episodes");
  // Targets are -J, z-scored: larger is better, unit spread.
  double mean = 0.0;
  for (double j : perf_data.targets) mean += -j;
  mean /= static_cast<double>(perf_data.size());
  const double stddev = [&] {
    if (perf_data.size() < 2) return 1.0;
    double var = 0.0;
    for (double j : perf_data.targets) var += (-j - mean) * (-j - mean);
    var /= static_cast<double>(perf_data.size());
    return var > 1e-18 ? std::sqrt(var) : 1.0;
  }();

  ForceDataset normalized;
  normalized.inputs = perf_data.inputs;
  normalized.targets.reserve(perf_data.size());
  for (double j : perf_data.targets)
    normalized.targets.push_back((-j - mean) / stddev);
  return GpModel::fit(std::move(normalized), kernel, noise_var);
}

Vec3 acquire_with_beta(const GpModel* force_gp, const GpModel* perf_gp,
                       double force_scale, const BoConfig& cfg, double beta) {
  cfg.validate();
  if (perf_gp == nullptr || !perf_gp->fitted()) return cfg.region.center();

  const int res = cfg.grid_resolution;
  const Vec3 span = cfg.region.hi - cfg.region.lo;
  const double scale = force_scale > 1e-12 ? force_scale : 1.0;

  // Cell-center grid: boundary targets would lose half their recorded
  // samples to the region filter, so the candidates sit half a cell in.
  Vec3 best = cfg.region.lo;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int ix = 0; ix < res; ++ix)
    for (int iy = 0; iy < res; ++iy)
      for (int iz = 0; iz < res; ++iz) {
        Vec3 x = cfg.region.lo;
        x.x() += span.x() * (ix + 0.5) / res;
        x.y() += span.y() * (iy + 0.5) / res;
        x.z() += span.z() * (iz + 0.5) / res;
        double score = perf_gp->predict_mean(x) +
                       beta * std::sqrt(perf_gp->predict_var(x));
        if (force_gp != nullptr && force_gp->fitted()) {
          score += cfg.force_weight * cfg.force_sign *
                   force_gp->predict_mean(x) / scale;
          if (cfg.force_sigma_weight > 0.0)
            score += cfg.force_sigma_weight *
                     std::sqrt(force_gp->predict_var(x) /
                               force_gp->kernel().signal_var);
        }
        if (score > best_score) {  // strict: first (lex-lowest) point wins ties
          best_score = score;
          best = x;
        }
      }
  return best;
}

Vec3 acquire(const GpModel* force_gp, const GpModel* perf_gp,
             double force_scale, const BoConfig& cfg, int t) {
  return acquire_with_beta(force_gp, perf_gp, force_scale, cfg,
                           beta_schedule(t, cfg.beta_delta));
}

std::pair<QuinticTrajectory, QuinticTrajectory> plan_swap_through(
    const Vec3& target, const BoConfig& cfg) {
  if (!cfg.region.contains(target))
    throw std::invalid_argument("swap target outside the interaction region");
  const double T = cfg.episode_duration;
  const double z0 = cfg.z0;
  // Lower drone sweeps +x to -x at z0; the upper drone mirrors it with a
  // constant (dx, dy, dz) offset applied to its whole path, so at
  // mid-time (both at their path midpoints) the relative offset equals
  // the target exactly.
  QuinticTrajectory lower(Vec3{0.5, 0.0, z0}, Vec3{-0.5, 0.0, z0}, T);
  QuinticTrajectory upper(
      Vec3{-0.5 + target.x(), target.y(), z0 + target.z()},
      Vec3{0.5 + target.x(), target.y(), z0 + target.z()}, T);
  return {upper, lower};
}

EpisodeResult run_episode(const Vec3& target, const GpModel* force_gp,
                          const BoConfig& cfg, const SimConfig& sim_cfg,
                          Rng& noise_rng) {
  auto [upper, lower] = plan_swap_through(target, cfg);

  Scenario scenario;
  scenario.num_drones = 2;
  scenario.reference[0] = upper;
  scenario.reference[1] = lower;
  scenario.initial[0].position = upper.position(0.0);
  scenario.initial[1].position = lower.position(0.0);
  scenario.controller[0] = ControllerKind::LinMpcLinGp;
  scenario.controller[1] = ControllerKind::LinMpcLinGp;
  scenario.separation = target.z();
  scenario.duration = cfg.episode_duration;

  SimConfig episode_cfg = sim_cfg;
  episode_cfg.gp = (force_gp != nullptr && force_gp->fitted()) ? force_gp : nullptr;
  episode_cfg.divergence_limit = 2.0;

  EpisodeResult ep;
  ep.target = target;
  ep.sim = run_scenario(scenario, episode_cfg);
  ep.diverged = ep.sim.diverged;
  ep.cost = ep.diverged ? cfg.penalty_cost
                        : ep.sim.summary[1].avg_abs_z_err;

  const auto& upper_tr = ep.sim.traces[0];
  const auto& lower_tr = ep.sim.traces[1];
  for (std::size_t i = 0; i < lower_tr.t.size();
       i += static_cast<std::size_t>(cfg.sample_stride)) {
    const Vec3 offset = upper_tr.position[i] - lower_tr.position[i];
    if (!cfg.region.contains(offset)) continue;
    ep.offsets.push_back(offset);
    ep.measured_fz.push_back(lower_tr.fz_true[i] +
                             noise_rng.gaussian(0.0, cfg.measurement_noise_std));
  }
  return ep;
}

void update_datasets(BoState& state, const EpisodeResult& episode,
                     const BoConfig& cfg) {
  for (std::size_t i = 0; i < episode.offsets.size(); ++i)
    state.force_data.append(episode.offsets[i], episode.measured_fz[i]);

  // Most informative visited offset under the pre-update performance GP;
  // with no data yet the variance is constant and the lexicographic
  // tie-break decides.
  Vec3 chosen;
  if (!episode.offsets.empty()) {
    if (state.perf_data.size() == 0) {
      chosen = episode.offsets.front();
      for (const Vec3& o : episode.offsets)
        if (lex_less(o, chosen)) chosen = o;
    } else {
      const GpModel perf =
          fit_perf_gp(state.perf_data, cfg.perf_kernel, cfg.perf_noise_var);
      double best_var = -1.0;
      chosen = episode.offsets.front();
      for (const Vec3& o : episode.offsets) {
        const double v = perf.predict_var(o);
        if (v > best_var + 1e-15 ||
            (std::abs(v - best_var) <= 1e-15 && lex_less(o, chosen))) {
          best_var = v;
          chosen = o;
        }
      }
    }
  } else {
    chosen = episode.target;  // divergence before entering the region
  }
  state.perf_data.append(chosen, episode.cost);
  ++state.episode;
}

BoRunResult bo_loop(const BoConfig& cfg, const SimConfig& sim_cfg,
                    const Kernel& force_kernel, double force_noise_var,
                    std::uint64_t seed, TargetSampler sampler,
                    const BoState* resume_from) {
  cfg.validate();
  BoRunResult run;
  if (resume_from != nullptr) run.state = *resume_from;
  run.state.seed = seed;

  GpModel force_gp;  // unfitted until the first episode lands samples
  if (run.state.force_data.size() > 0)
    force_gp = GpModel::fit(run.state.force_data, force_kernel, force_noise_var);

  // Per-episode sub-streams keep a resumed run bit-identical to an
  // uninterrupted one.
  for (int t = run.state.episode + 1; t <= cfg.episodes; ++t) {
    Rng noise_rng = Rng::stream(seed, "bo.measure_noise." + std::to_string(t));

    Vec3 target;
    if (sampler == TargetSampler::UniformRandom) {
      Rng target_rng =
          Rng::stream(seed, "bo.random_targets." + std::to_string(t));
      target = Vec3{target_rng.uniform(cfg.region.lo.x(), cfg.region.hi.x()),
                    target_rng.uniform(cfg.region.lo.y(), cfg.region.hi.y()),
                    target_rng.uniform(cfg.region.lo.z(), cfg.region.hi.z())};
    } else if (run.state.perf_data.size() == 0) {
      target = cfg.region.center();
    } else {
      const GpModel perf_gp =
          fit_perf_gp(run.state.perf_data, cfg.perf_kernel, cfg.perf_noise_var);
      const double scale = target_std(run.state.force_data.targets);
      target = acquire(force_gp.fitted() ? &force_gp : nullptr, &perf_gp, scale,
                       cfg, t);
    }

    EpisodeResult ep = run_episode(
        target, force_gp.fitted() ? &force_gp : nullptr, cfg, sim_cfg, noise_rng);
    update_datasets(run.state, ep, cfg);
    if (run.state.force_data.size() > 0)
      force_gp = GpModel::fit(run.state.force_data, force_kernel, force_noise_var);

    run.curve.push_back(CurvePoint{t, ep.cost, target});
  }
  run.force_gp = std::move(force_gp);
  return run;
}

}  // namespace dwmpc
