#include "hopsim/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "hopsim/error.hpp"

namespace hopsim::io {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_double(const std::string& text, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::Io, "line " + std::to_string(line_no) + ": not a number: '" + text + "'");
}

bool next_data_line(std::istream& is, std::string& line, int& line_no) {
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) return true;
  }
  return false;
}

GridRange infer_range(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (values.empty()) fail(ErrorCode::Io, "winner map has no rows");
  if (values.size() == 1) return {values.front(), 1.0, values.front()};
  const double step = (values.back() - values.front()) / static_cast<double>(values.size() - 1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double expected = values.front() + step * static_cast<double>(i);
    if (std::abs(values[i] - expected) > 1e-6 * std::max(1.0, std::abs(step))) {
      fail(ErrorCode::Io, "winner map grid is not evenly spaced");
    }
  }
  return {values.front(), step, values.back()};
}

}  // namespace

std::string format_number(double value, int precision) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, value);
  std::string s(buf);
  if (s == "-0" || (s.rfind("-0.", 0) == 0 &&
                    s.find_first_not_of("0.", 1) == std::string::npos)) {
    s.erase(0, 1);
  }
  return s;
}

void write_trajectory_csv(std::ostream& os, const EpisodeOutcome& outcome) {
  os << "time_s,phase,x_b_m,v_b_m_s,x_t_m,v_t_m_s\n";
  for (const auto& s : outcome.trajectory) {
    os << format_number(s.time, 9) << ',' << to_string(s.phase) << ','
       << format_number(s.body_pos, 12) << ',' << format_number(s.body_vel, 12) << ','
       << format_number(s.toe_pos, 12) << ',' << format_number(s.toe_vel, 12) << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << "k_g_N_m,d_g_Ns_m,k_l_N_m,d_l_Ns_m,E_in_J,status,apex_mean_mm,apex_std_mm,winner_flag\n";
  for (const auto& cell : result.cells) {
    for (const auto& o : cell.outcomes) {
      const bool winner = std::find(cell.winners.begin(), cell.winners.end(), o.leg_stiffness) !=
                          cell.winners.end();
      os << format_number(cell.ground_stiffness, 3) << ',' << format_number(cell.ground_damping, 3)
         << ',' << format_number(o.leg_stiffness, 3) << ',' << format_number(cell.leg_damping, 3)
         << ',' << format_number(cell.energy, 4) << ',' << to_string(o.status) << ','
         << (o.succeeded() ? format_number(o.apex_mean * 1e3, 6) : "") << ','
         << (o.succeeded() ? format_number(o.apex_std * 1e3, 9) : "") << ','
         << (winner ? 1 : 0) << '\n';
    }
  }
}

void write_winner_map_csv(std::ostream& os, const WinnerMap& map) {
  os << "k_g_N_m,d_g_Ns_m,winners\n";
  for (std::size_t i = 0; i < map.ground_stiffness.size(); ++i) {
    for (std::size_t j = 0; j < map.ground_damping.size(); ++j) {
      os << format_number(map.ground_stiffness.at(i), 3) << ','
         << format_number(map.ground_damping.at(j), 3) << ',';
      const auto& w = map.at(i, j);
      if (w.empty()) {
        os << "FAIL";
      } else {
        for (std::size_t k = 0; k < w.size(); ++k) {
          if (k) os << ';';
          os << format_number(w[k], 3);
        }
      }
      os << '\n';
    }
  }
}

WinnerMap read_winner_map_csv(std::istream& is) {
  std::string line;
  int line_no = 0;
  if (!next_data_line(is, line, line_no) || trim(line) != "k_g_N_m,d_g_Ns_m,winners") {
    fail(ErrorCode::Io, "winner map must start with 'k_g_N_m,d_g_Ns_m,winners'");
  }
  struct Row {
    double kg, dg;
    std::vector<double> winners;
  };
  std::vector<Row> rows;
  while (next_data_line(is, line, line_no)) {
    const auto fields = split(line, ',');
    if (fields.size() != 3) {
      fail(ErrorCode::Io, "line " + std::to_string(line_no) + ": expected 3 columns");
    }
    Row row{parse_double(fields[0], line_no), parse_double(fields[1], line_no), {}};
    if (trim(fields[2]) != "FAIL") {
      for (const auto& w : split(fields[2], ';')) row.winners.push_back(parse_double(w, line_no));
      std::sort(row.winners.begin(), row.winners.end());
    }
    rows.push_back(std::move(row));
  }
  std::vector<double> kgs, dgs;
  for (const auto& r : rows) {
    kgs.push_back(r.kg);
    dgs.push_back(r.dg);
  }
  WinnerMap map;
  map.ground_stiffness = infer_range(kgs);
  map.ground_damping = infer_range(dgs);
  const std::size_t n_kg = map.ground_stiffness.size(), n_dg = map.ground_damping.size();
  if (rows.size() != n_kg * n_dg) fail(ErrorCode::Io, "winner map does not cover a full grid");
  map.winners.resize(n_kg * n_dg);
  for (const auto& r : rows) {
    const auto i = static_cast<std::size_t>(
        std::lround((r.kg - map.ground_stiffness.start) / map.ground_stiffness.step));
    const auto j = static_cast<std::size_t>(
        std::lround((r.dg - map.ground_damping.start) / map.ground_damping.step));
    map.winners[i * n_dg + j] = r.winners;
  }
  return map;
}

void write_success_region_csv(std::ostream& os, const SuccessRegion& region) {
  os << "k_g_N_m,d_g_Ns_m,success\n";
  for (std::size_t i = 0; i < region.ground_stiffness.size(); ++i) {
    for (std::size_t j = 0; j < region.ground_damping.size(); ++j) {
      os << format_number(region.ground_stiffness.at(i), 3) << ','
         << format_number(region.ground_damping.at(j), 3) << ',' << (region.at(i, j) ? 1 : 0)
         << '\n';
    }
  }
}

emulator::OscillationTrace read_trace_csv(std::istream& is) {
  std::string line;
  int line_no = 0;
  if (!next_data_line(is, line, line_no)) fail(ErrorCode::Io, "trace file is empty");
  const std::string first = trim(line);
  const std::string prefix = "mass_kg=";
  if (first.rfind(prefix, 0) != 0) {
    fail(ErrorCode::Io, "line " + std::to_string(line_no) + ": expected 'mass_kg=<value>'");
  }
  emulator::OscillationTrace trace;
  trace.mass = parse_double(first.substr(prefix.size()), line_no);
  if (!next_data_line(is, line, line_no) || trim(line) != "t_s,r_m") {
    fail(ErrorCode::Io, "line " + std::to_string(line_no) + ": expected header 't_s,r_m'");
  }
  while (next_data_line(is, line, line_no)) {
    const auto fields = split(line, ',');
    if (fields.size() != 2) {
      fail(ErrorCode::Io, "line " + std::to_string(line_no) + ": expected 2 columns");
    }
    trace.time.push_back(parse_double(fields[0], line_no));
    trace.position.push_back(parse_double(fields[1], line_no));
  }
  return trace;
}

void write_trace_csv(std::ostream& os, const emulator::OscillationTrace& trace) {
  os << "mass_kg=" << format_number(trace.mass, 6) << "\nt_s,r_m\n";
  for (std::size_t i = 0; i < trace.time.size(); ++i) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%.9f,%.17g\n", trace.time[i], trace.position[i]);
    os << buf;
  }
}

void write_calibration_row(std::ostream& os, const emulator::PdGains& gains,
                           const emulator::OscillatorFit& fit) {
  os << format_number(gains.kp, 6) << ',' << format_number(gains.kd, 6) << ','
     << format_number(fit.ground_stiffness, 6) << ',' << format_number(fit.ground_damping, 6)
     << ',' << format_number(fit.r_squared, 6) << '\n';
}

std::vector<std::pair<emulator::PdGains, emulator::OscillatorFit>> read_calibration_csv(
    std::istream& is) {
  std::string line;
  int line_no = 0;
  if (!next_data_line(is, line, line_no) || trim(line) != kCalibrationHeader) {
    fail(ErrorCode::Io, std::string("calibration table must start with '") +
                            kCalibrationHeader + "'");
  }
  std::vector<std::pair<emulator::PdGains, emulator::OscillatorFit>> rows;
  while (next_data_line(is, line, line_no)) {
    const auto f = split(line, ',');
    if (f.size() != 5) fail(ErrorCode::Io, "line " + std::to_string(line_no) + ": expected 5 columns");
    emulator::PdGains gains{parse_double(f[0], line_no), parse_double(f[1], line_no)};
    emulator::OscillatorFit fit;
    fit.ground_stiffness = parse_double(f[2], line_no);
    fit.ground_damping = parse_double(f[3], line_no);
    fit.r_squared = parse_double(f[4], line_no);
    rows.emplace_back(gains, fit);
  }
  return rows;
}

nlohmann::ordered_json episode_summary(const EpisodeOutcome& outcome, const HopperParams& hopper,
                                       const GroundProfile& ground, double energy) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["status"] = to_string(outcome.status);
  if (!outcome.failure_reason.empty()) j["failure_reason"] = outcome.failure_reason;
  j["parameters"] = {{"k_l_N_m", hopper.leg_stiffness()},
                     {"d_l_Ns_m", hopper.leg_damping()},
                     {"k_g_N_m", ground.stiffness()},
                     {"d_g_Ns_m", ground.damping()},
                     {"E_in_J", energy},
                     {"precompression_mm", outcome.precompression * 1e3}};
  if (outcome.status == EpisodeStatus::SteadyHopping ||
      outcome.status == EpisodeStatus::NoConvergence) {
    j["steady_apex_mean_mm"] = outcome.steady_apex_mean * 1e3;
    j["steady_apex_std_mm"] = outcome.steady_apex_std * 1e3;
  } else {
    j["steady_apex_mean_mm"] = nullptr;
    j["steady_apex_std_mm"] = nullptr;
  }
  j["hop_count"] = outcome.hops.size();
  ordered_json hops = ordered_json::array();
  for (const auto& h : outcome.hops) {
    hops.push_back({{"index", h.index},
                    {"touchdown_s", h.touchdown_time},
                    {"liftoff_s", h.liftoff_time},
                    {"apex_s", h.apex_time},
                    {"apex_mm", h.apex_height * 1e3},
                    {"injected_J", h.injected_energy},
                    {"dissipated_J", h.dissipated_energy}});
  }
  j["energy_audit"] = std::move(hops);
  return j;
}

nlohmann::ordered_json fit_summary(const emulator::OscillatorFit& fit, double mass) {
  return {{"A_m", fit.params.amplitude},
          {"alpha_1_s2", fit.params.alpha},
          {"beta_1_s", fit.params.beta},
          {"phi_rad", fit.params.phase},
          {"mass_kg", mass},
          {"k_g_N_m", fit.ground_stiffness},
          {"d_g_Ns_m", fit.ground_damping},
          {"r2", fit.r_squared},
          {"residual_rms_m", fit.residual_rms},
          {"accepted", fit.accepted()},
          {"iterations", fit.iterations}};
}

std::string pair_tag(double leg_damping, double energy) {
  auto compact = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
  };
  return "dl" + compact(leg_damping) + "_E" + compact(energy);
}

}  // namespace hopsim::io
