#include "hopsim/stiffness_sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "hopsim/error.hpp"

namespace hopsim {

namespace {

constexpr double kValueMatchTol = 1e-9;

std::size_t find_value(const std::vector<double>& values, double v) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::abs(values[i] - v) <= kValueMatchTol * std::max(1.0, std::abs(v))) return i;
  }
  return values.size();
}

StiffnessOutcome evaluate(const SweepSpec& spec, double kl, double dl, double kg, double dg,
                          double energy) {
  StiffnessOutcome out;
  out.leg_stiffness = kl;
  const HopperParams hopper(spec.body_mass, spec.toe_mass, spec.rest_length, kl, dl);
  try {
    const EpisodeOutcome ep =
        run_episode(hopper, GroundProfile(kg, dg), EnergyBudget(energy), spec.episode,
                    spec.integrator);
    out.status = ep.status;
    out.apex_mean = ep.steady_apex_mean;
    out.apex_std = ep.steady_apex_std;
    out.failure_reason = ep.failure_reason;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::CompressionExceedsLeg) throw;
    out.status = EpisodeStatus::NumericalFailure;
    out.failure_reason = e.what();
  }
  if (!out.succeeded()) {
    out.apex_mean = std::nan("");
    out.apex_std = std::nan("");
  }
  return out;
}

}  // namespace

std::size_t GridRange::size() const {
  if (!(step > 0.0) || end < start) return 0;
  return static_cast<std::size_t>(std::floor((end - start) / step + 1e-9)) + 1;
}

std::vector<double> GridRange::values() const {
  std::vector<double> v(size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = at(i);
  return v;
}

void SweepSpec::validate() const {
  auto all_positive = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x) && x > 0.0; });
  };
  if (leg_stiffness.empty() || !all_positive(leg_stiffness)) {
    fail(ErrorCode::InvalidArgument, "leg stiffness list must be non-empty and positive");
  }
  if (leg_damping.empty()) fail(ErrorCode::InvalidArgument, "leg damping list must be non-empty");
  if (energies.empty() || !all_positive(energies)) {
    fail(ErrorCode::InvalidArgument, "energy list must be non-empty and positive");
  }
  for (const GridRange* r : {&ground_stiffness, &ground_damping}) {
    if (!(r->step > 0.0) || !std::isfinite(r->start) || !std::isfinite(r->end) ||
        r->end < r->start) {
      fail(ErrorCode::InvalidArgument, "ground ranges need step > 0 and end >= start");
    }
  }
  if (!(ground_stiffness.start > 0.0) || ground_damping.start < 0.0) {
    fail(ErrorCode::InvalidArgument, "ground stiffness must be > 0 and damping >= 0");
  }
  if (!(tie_threshold >= 0.0)) fail(ErrorCode::InvalidArgument, "tie threshold must be >= 0");
  if (threads < 1) fail(ErrorCode::InvalidArgument, "threads must be >= 1");
  episode.validate();
  integrator.validate();
}

std::size_t SweepResult::ground_cells() const {
  return spec.ground_stiffness.size() * spec.ground_damping.size();
}

std::size_t SweepResult::cell_index(std::size_t damping_idx, std::size_t energy_idx,
                                    std::size_t kg_idx, std::size_t dg_idx) const {
  const std::size_t n_dg = spec.ground_damping.size();
  return ((damping_idx * spec.energies.size() + energy_idx) * spec.ground_stiffness.size() +
          kg_idx) * n_dg + dg_idx;
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  SweepResult result;
  result.spec = spec;
  const std::size_t n_kg = spec.ground_stiffness.size();
  const std::size_t n_dg = spec.ground_damping.size();
  const std::size_t n_cells = spec.leg_damping.size() * spec.energies.size() * n_kg * n_dg;
  const std::size_t n_kl = spec.leg_stiffness.size();

  result.cells.resize(n_cells);
  for (std::size_t d = 0; d < spec.leg_damping.size(); ++d) {
    for (std::size_t e = 0; e < spec.energies.size(); ++e) {
      for (std::size_t i = 0; i < n_kg; ++i) {
        for (std::size_t j = 0; j < n_dg; ++j) {
          CellResult& cell = result.cells[result.cell_index(d, e, i, j)];
          cell.leg_damping = spec.leg_damping[d];
          cell.energy = spec.energies[e];
          cell.ground_stiffness = spec.ground_stiffness.at(i);
          cell.ground_damping = spec.ground_damping.at(j);
          cell.kg_index = i;
          cell.dg_index = j;
          cell.outcomes.resize(n_kl);
        }
      }
    }
  }

  // Work items are (cell, stiffness) pairs; each writes only its own slot.
  const std::size_t n_items = n_cells * n_kl;
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t item = next.fetch_add(1);
      if (item >= n_items) return;
      CellResult& cell = result.cells[item / n_kl];
      const std::size_t k = item % n_kl;
      try {
        cell.outcomes[k] = evaluate(spec, spec.leg_stiffness[k], cell.leg_damping,
                                    cell.ground_stiffness, cell.ground_damping, cell.energy);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n_items);
        return;
      }
    }
  };

  const auto n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(spec.threads), std::max<std::size_t>(n_items, 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);

  for (auto& cell : result.cells) {
    const bool any = std::any_of(cell.outcomes.begin(), cell.outcomes.end(),
                                 [](const StiffnessOutcome& o) { return o.succeeded(); });
    if (any) cell.winners = cell_winners(cell, spec.tie_threshold);
  }
  return result;
}

std::vector<double> cell_winners(const CellResult& cell, double tie_threshold) {
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& o : cell.outcomes) {
    if (!o.succeeded()) continue;
    any = true;
    best = std::max(best, o.apex_mean);
  }
  if (!any) {
    fail(ErrorCode::EmptyCell, "no stiffness reached steady hopping at k_g = " +
                                   std::to_string(cell.ground_stiffness) +
                                   ", d_g = " + std::to_string(cell.ground_damping));
  }
  std::vector<double> winners;
  for (const auto& o : cell.outcomes) {
    if (o.succeeded() && o.apex_mean >= best - tie_threshold) winners.push_back(o.leg_stiffness);
  }
  std::sort(winners.begin(), winners.end());
  return winners;
}

std::vector<WinnerMap> best_stiffness_map(const SweepResult& result, double tie_threshold) {
  const auto& spec = result.spec;
  const std::size_t n_kg = spec.ground_stiffness.size();
  const std::size_t n_dg = spec.ground_damping.size();
  std::vector<WinnerMap> maps;
  for (std::size_t d = 0; d < spec.leg_damping.size(); ++d) {
    for (std::size_t e = 0; e < spec.energies.size(); ++e) {
      WinnerMap map;
      map.leg_damping = spec.leg_damping[d];
      map.energy = spec.energies[e];
      map.ground_stiffness = spec.ground_stiffness;
      map.ground_damping = spec.ground_damping;
      map.winners.resize(n_kg * n_dg);
      for (std::size_t i = 0; i < n_kg; ++i) {
        for (std::size_t j = 0; j < n_dg; ++j) {
          try {
            map.winners[i * n_dg + j] = cell_winners(result.cell(d, e, i, j), tie_threshold);
          } catch (const Error& err) {
            if (err.code() != ErrorCode::EmptyCell) throw;
          }
        }
      }
      maps.push_back(std::move(map));
    }
  }
  return maps;
}

std::size_t SuccessRegion::count() const {
  return static_cast<std::size_t>(std::count(success.begin(), success.end(), true));
}

SuccessRegion success_region(const SweepResult& result, double energy, double leg_damping) {
  const auto& spec = result.spec;
  const std::size_t e = find_value(spec.energies, energy);
  if (e == spec.energies.size()) {
    fail(ErrorCode::UnknownEnergyLevel, "sweep did not run at E_in = " + std::to_string(energy));
  }
  const std::size_t d = find_value(spec.leg_damping, leg_damping);
  if (d == spec.leg_damping.size()) {
    fail(ErrorCode::UnknownEnergyLevel,
         "sweep did not run at leg damping " + std::to_string(leg_damping));
  }
  SuccessRegion region;
  region.energy = spec.energies[e];
  region.leg_damping = spec.leg_damping[d];
  region.ground_stiffness = spec.ground_stiffness;
  region.ground_damping = spec.ground_damping;
  const std::size_t n_kg = spec.ground_stiffness.size();
  const std::size_t n_dg = spec.ground_damping.size();
  region.success.assign(n_kg * n_dg, false);
  if (result.cells.empty()) return region;
  for (std::size_t i = 0; i < n_kg; ++i) {
    for (std::size_t j = 0; j < n_dg; ++j) {
      const auto& outcomes = result.cell(d, e, i, j).outcomes;
      region.success[i * n_dg + j] = std::any_of(
          outcomes.begin(), outcomes.end(), [](const StiffnessOutcome& o) { return o.succeeded(); });
    }
  }
  return region;
}

SuccessRegion success_region(const SweepResult& result, double energy) {
  if (result.spec.leg_damping.size() != 1) {
    fail(ErrorCode::InvalidArgument, "sweep has several leg damping values; pass one explicitly");
  }
  return success_region(result, energy, result.spec.leg_damping.front());
}

double select_stiffness(const WinnerMap& map, const GroundProfile& query) {
  const std::size_t n_kg = map.ground_stiffness.size();
  const std::size_t n_dg = map.ground_damping.size();
  if (n_kg == 0 || n_dg == 0) fail(ErrorCode::OutOfDomain, "winner map is empty");
  constexpr double kSlack = 1e-9;
  const double u = (query.stiffness() - map.ground_stiffness.start) / map.ground_stiffness.step;
  const double v = (query.damping() - map.ground_damping.start) / map.ground_damping.step;
  const double u_max = static_cast<double>(n_kg - 1);
  const double v_max = static_cast<double>(n_dg - 1);
  if (u < -kSlack || u > u_max + kSlack || v < -kSlack || v > v_max + kSlack) {
    fail(ErrorCode::OutOfDomain, "query ground profile lies outside the swept grid");
  }
  // On a regular grid the Euclidean-nearest node is the per-axis rounding.
  const auto i = static_cast<std::size_t>(std::clamp(std::floor(u + 0.5), 0.0, u_max));
  const auto j = static_cast<std::size_t>(std::clamp(std::floor(v + 0.5), 0.0, v_max));
  const auto& winners = map.at(i, j);
  if (winners.empty()) {
    fail(ErrorCode::UnreachableCell, "nearest cell (k_g = " +
                                         std::to_string(map.ground_stiffness.at(i)) + ", d_g = " +
                                         std::to_string(map.ground_damping.at(j)) +
                                         ") has no successful stiffness");
  }
  return *std::min_element(winners.begin(), winners.end());
}

std::vector<TrendViolation> check_trends(const SweepResult& result, double leg_damping,
                                         double energy) {
  const auto& spec = result.spec;
  const std::size_t e = find_value(spec.energies, energy);
  const std::size_t d = find_value(spec.leg_damping, leg_damping);
  if (e == spec.energies.size() || d == spec.leg_damping.size()) {
    fail(ErrorCode::UnknownEnergyLevel, "sweep did not run at the requested (d_l, E_in)");
  }
  const std::size_t n_kg = spec.ground_stiffness.size();
  const std::size_t n_dg = spec.ground_damping.size();
  std::vector<TrendViolation> violations;
  for (std::size_t k = 0; k < spec.leg_stiffness.size(); ++k) {
    for (std::size_t i = 0; i < n_kg; ++i) {
      for (std::size_t j = 0; j < n_dg; ++j) {
        const auto& here = result.cell(d, e, i, j).outcomes[k];
        if (!here.succeeded()) continue;
        if (j + 1 < n_dg) {
          const auto& next = result.cell(d, e, i, j + 1).outcomes[k];
          if (next.succeeded() && next.apex_mean > here.apex_mean) {
            violations.push_back({spec.leg_stiffness[k], spec.ground_stiffness.at(i),
                                  spec.ground_damping.at(j), "damping", here.apex_mean,
                                  next.apex_mean});
          }
        }
        if (i + 1 < n_kg) {
          const auto& next = result.cell(d, e, i + 1, j).outcomes[k];
          if (next.succeeded() && next.apex_mean < here.apex_mean) {
            violations.push_back({spec.leg_stiffness[k], spec.ground_stiffness.at(i),
                                  spec.ground_damping.at(j), "stiffness", here.apex_mean,
                                  next.apex_mean});
          }
        }
      }
    }
  }
  return violations;
}

}  // namespace hopsim
