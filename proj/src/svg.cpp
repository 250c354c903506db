#include "hopsim/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "hopsim/error.hpp"

namespace hopsim::svg {

namespace {

constexpr double kCell = 28.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginTop = 30.0;
constexpr double kMarginBottom = 50.0;
constexpr double kLegendWidth = 150.0;

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                              "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// Linear blue-to-yellow ramp.
std::string ramp(double u) {
  u = std::clamp(u, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(68 + u * (253 - 68)));
  const int g = static_cast<int>(std::lround(1 + u * (231 - 1)));
  const int b = static_cast<int>(std::lround(84 + u * (37 - 84)));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

class GridCanvas {
 public:
  GridCanvas(std::ostream& os, const GridRange& kg, const GridRange& dg, const std::string& title)
      : os_(os), kg_(kg), dg_(dg) {
    const double w = kMarginLeft + kCell * static_cast<double>(kg.size()) + kLegendWidth;
    const double h = kMarginTop + kCell * static_cast<double>(dg.size()) + kMarginBottom;
    os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\""
        << num(h) << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    os_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os_ << "<text x=\"" << num(kMarginLeft) << "\" y=\"18\" font-size=\"12\">" << title
        << "</text>\n";
  }

  double x(std::size_t i) const { return kMarginLeft + kCell * static_cast<double>(i); }
  double y(std::size_t j) const {
    return kMarginTop + kCell * static_cast<double>(dg_.size() - 1 - j);
  }
  double legend_x() const { return x(kg_.size()) + 15.0; }

  void rect(double x0, double y0, double w, double h, const std::string& fill) {
    os_ << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(w)
        << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\"/>\n";
  }

  void cell(std::size_t i, std::size_t j, const std::string& fill) {
    rect(x(i), y(j), kCell, kCell, fill);
  }

  void text(double x0, double y0, const std::string& s, const char* anchor = "start") {
    os_ << "<text x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" text-anchor=\"" << anchor
        << "\">" << s << "</text>\n";
  }

  void finish() {
    const double bottom = y(0) + kCell;
    os_ << "<g fill=\"none\" stroke=\"#999\" stroke-width=\"0.5\">\n";
    for (std::size_t i = 0; i <= kg_.size(); ++i) {
      os_ << "<line x1=\"" << num(x(i)) << "\" y1=\"" << num(kMarginTop) << "\" x2=\""
          << num(x(i)) << "\" y2=\"" << num(bottom) << "\"/>\n";
    }
    for (std::size_t j = 0; j <= dg_.size(); ++j) {
      const double yy = kMarginTop + kCell * static_cast<double>(j);
      os_ << "<line x1=\"" << num(kMarginLeft) << "\" y1=\"" << num(yy) << "\" x2=\""
          << num(x(kg_.size())) << "\" y2=\"" << num(yy) << "\"/>\n";
    }
    os_ << "</g>\n";
    for (std::size_t i = 0; i < kg_.size(); i += 2) {
      text(x(i) + kCell / 2, bottom + 14, label(kg_.at(i)), "middle");
    }
    for (std::size_t j = 0; j < dg_.size(); ++j) {
      text(kMarginLeft - 6, y(j) + kCell / 2 + 3, label(dg_.at(j)), "end");
    }
    text(x(0) + kCell * static_cast<double>(kg_.size()) / 2, bottom + 32, "k_g [N/m]", "middle");
    text(14, kMarginTop - 8, "d_g [Ns/m]");
    os_ << "</svg>\n";
  }

 private:
  std::ostream& os_;
  GridRange kg_, dg_;
};

}  // namespace

void write_winner_map(std::ostream& os, const WinnerMap& map,
                      const std::vector<double>& leg_stiffness) {
  auto color_of = [&](double k) -> std::string {
    const auto it = std::find(leg_stiffness.begin(), leg_stiffness.end(), k);
    if (it == leg_stiffness.end()) return "#000000";
    return kPalette[static_cast<std::size_t>(it - leg_stiffness.begin()) % kPalette.size()];
  };
  GridCanvas c(os, map.ground_stiffness, map.ground_damping,
               "best leg stiffness, d_l=" + label(map.leg_damping) +
                   " Ns/m, E=" + label(map.energy) + " J");
  for (std::size_t i = 0; i < map.ground_stiffness.size(); ++i) {
    for (std::size_t j = 0; j < map.ground_damping.size(); ++j) {
      const auto& w = map.at(i, j);
      if (w.empty()) continue;
      // Vertical stripes, one per tied stiffness.
      const double stripe = kCell / static_cast<double>(w.size());
      for (std::size_t k = 0; k < w.size(); ++k) {
        c.rect(c.x(i) + stripe * static_cast<double>(k), c.y(j), stripe, kCell, color_of(w[k]));
      }
    }
  }
  for (std::size_t k = 0; k < leg_stiffness.size(); ++k) {
    const double yy = kMarginTop + 16.0 * static_cast<double>(k);
    c.rect(c.legend_x(), yy, 12, 12, color_of(leg_stiffness[k]));
    c.text(c.legend_x() + 18, yy + 10, "k_l=" + label(leg_stiffness[k]) + " N/m");
  }
  c.finish();
}

void write_apex_map(std::ostream& os, const SweepResult& result, std::size_t damping_idx,
                    std::size_t energy_idx, std::size_t stiffness_idx) {
  const auto& spec = result.spec;
  if (stiffness_idx >= spec.leg_stiffness.size()) {
    fail(ErrorCode::InvalidArgument, "stiffness index out of range");
  }
  const std::size_t n_kg = spec.ground_stiffness.size(), n_dg = spec.ground_damping.size();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < n_kg; ++i) {
    for (std::size_t j = 0; j < n_dg; ++j) {
      const auto& o = result.cell(damping_idx, energy_idx, i, j).outcomes[stiffness_idx];
      if (!o.succeeded()) continue;
      lo = std::min(lo, o.apex_mean);
      hi = std::max(hi, o.apex_mean);
    }
  }
  GridCanvas c(os, spec.ground_stiffness, spec.ground_damping,
               "steady apex [mm], k_l=" + label(spec.leg_stiffness[stiffness_idx]) +
                   " N/m, d_l=" + label(spec.leg_damping.at(damping_idx)) +
                   " Ns/m, E=" + label(spec.energies.at(energy_idx)) + " J");
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t i = 0; i < n_kg; ++i) {
    for (std::size_t j = 0; j < n_dg; ++j) {
      const auto& o = result.cell(damping_idx, energy_idx, i, j).outcomes[stiffness_idx];
      if (o.succeeded()) c.cell(i, j, ramp((o.apex_mean - lo) / span));
    }
  }
  if (hi >= lo) {
    for (int k = 0; k <= 4; ++k) {
      const double u = 1.0 - k / 4.0;
      const double yy = kMarginTop + 18.0 * k;
      c.rect(c.legend_x(), yy, 12, 12, ramp(u));
      c.text(c.legend_x() + 18, yy + 10, num((lo + u * span) * 1e3) + " mm");
    }
  }
  c.finish();
}

void write_success_overlay(std::ostream& os, const std::vector<SuccessRegion>& regions) {
  if (regions.empty()) fail(ErrorCode::InvalidArgument, "no success regions to draw");
  const auto& first = regions.front();
  GridCanvas c(os, first.ground_stiffness, first.ground_damping,
               "success region by input energy, d_l=" + label(first.leg_damping) + " Ns/m");
  const std::size_t n = regions.size();
  auto shade = [n](std::size_t r) { return ramp(n > 1 ? double(r) / double(n - 1) : 0.0); };
  for (std::size_t i = 0; i < first.ground_stiffness.size(); ++i) {
    for (std::size_t j = 0; j < first.ground_damping.size(); ++j) {
      for (std::size_t r = 0; r < n; ++r) {
        if (regions[r].at(i, j)) {
          c.cell(i, j, shade(r));
          break;
        }
      }
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    const double yy = kMarginTop + 16.0 * static_cast<double>(r);
    c.rect(c.legend_x(), yy, 12, 12, shade(r));
    c.text(c.legend_x() + 18, yy + 10, "E=" + label(regions[r].energy) + " J");
  }
  c.finish();
}

void write_phase_portrait(std::ostream& os, const std::vector<PortraitCurve>& curves,
                          double rest_length) {
  constexpr double W = 640, H = 420, L = 70, R = 170, T = 30, B = 50;
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double v_lo = x_lo, v_hi = -x_lo;
  for (const auto& c : curves) {
    for (const auto& s : c.samples) {
      const double h = (s.body_pos - rest_length) * 1e3;
      x_lo = std::min(x_lo, h);
      x_hi = std::max(x_hi, h);
      v_lo = std::min(v_lo, s.body_vel);
      v_hi = std::max(v_hi, s.body_vel);
    }
  }
  if (!(x_hi > x_lo)) x_lo = -1, x_hi = 1;
  if (!(v_hi > v_lo)) v_lo = -1, v_hi = 1;
  auto px = [&](double h) { return L + (h - x_lo) / (x_hi - x_lo) * (W - L - R); };
  auto py = [&](double v) { return T + (v_hi - v) / (v_hi - v_lo) * (H - T - B); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W) << "\" height=\""
     << num(H) << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<rect x=\"" << num(L) << "\" y=\"" << num(T) << "\" width=\"" << num(W - L - R)
     << "\" height=\"" << num(H - T - B) << "\" fill=\"none\" stroke=\"#999\"/>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const char* color = kPalette[k % kPalette.size()];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"0.8\" points=\"";
    for (const auto& s : curves[k].samples) {
      os << num(px((s.body_pos - rest_length) * 1e3)) << ',' << num(py(s.body_vel)) << ' ';
    }
    os << "\"/>\n";
    const double yy = T + 16.0 * static_cast<double>(k);
    os << "<rect x=\"" << num(W - R + 15) << "\" y=\"" << num(yy) << "\" width=\"12\" "
       << "height=\"3\" fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << num(W - R + 32) << "\" y=\"" << num(yy + 5) << "\">" << curves[k].label
       << "</text>\n";
  }
  os << "<text x=\"" << num(L) << "\" y=\"" << num(H - B + 14) << "\">" << num(x_lo) << "</text>\n";
  os << "<text x=\"" << num(W - R) << "\" y=\"" << num(H - B + 14) << "\" text-anchor=\"end\">"
     << num(x_hi) << "</text>\n";
  os << "<text x=\"" << num((L + W - R) / 2) << "\" y=\"" << num(H - 14)
     << "\" text-anchor=\"middle\">body height above rest length [mm]</text>\n";
  os << "<text x=\"" << num(L - 6) << "\" y=\"" << num(T + 4) << "\" text-anchor=\"end\">"
     << num(v_hi) << "</text>\n";
  os << "<text x=\"" << num(L - 6) << "\" y=\"" << num(H - B) << "\" text-anchor=\"end\">"
     << num(v_lo) << "</text>\n";
  os << "<text x=\"14\" y=\"" << num(T - 10) << "\">body velocity [m/s]</text>\n";
  os << "</svg>\n";
}

}  // namespace hopsim::svg
