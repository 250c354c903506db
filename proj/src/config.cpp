#include "hopsim/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "hopsim/error.hpp"

namespace hopsim {

namespace {

[[noreturn]] void config_error(const std::string& source, const YAML::Mark& mark,
                               const std::string& message) {
  std::ostringstream os;
  os << source;
  if (!mark.is_null()) os << ":" << mark.line + 1 << ":" << mark.column + 1;
  os << ": " << message;
  fail(ErrorCode::Config, os.str());
}

// Walks one mapping node, remembering which keys were consumed so that
// anything left over can be reported as unknown.
class Section {
 public:
  Section(const YAML::Node& node, std::string path, const std::string& source)
      : node_(node), path_(std::move(path)), source_(source) {
    if (node_ && !node_.IsMap()) config_error(source_, node_.Mark(), path_ + " must be a mapping");
  }

  bool has(const std::string& key) const { return node_ && node_[key]; }

  // Missing keys (and explicit nulls) come back as an invalid node.
  YAML::Node raw(const std::string& key) {
    used_.insert(key);
    if (!node_ || node_.IsNull()) return YAML::Node(YAML::NodeType::Undefined);
    const YAML::Node value = node_[key];
    if (!value || value.IsNull()) return YAML::Node(YAML::NodeType::Undefined);
    return value;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    const YAML::Node value = raw(key);
    if (!value) return;
    if (!value.IsScalar()) config_error(source_, value.Mark(), name(key) + " must be a scalar");
    try {
      out = value.as<T>();
    } catch (const YAML::Exception&) {
      config_error(source_, value.Mark(), "cannot parse " + name(key) + " from '" +
                                              value.Scalar() + "'");
    }
  }

  void get_list(const std::string& key, std::vector<double>& out) {
    const YAML::Node value = raw(key);
    if (!value) return;
    if (!value.IsSequence()) config_error(source_, value.Mark(), name(key) + " must be a list");
    out.clear();
    for (const auto& item : value) {
      try {
        out.push_back(item.as<double>());
      } catch (const YAML::Exception&) {
        config_error(source_, item.Mark(), "non-numeric entry in " + name(key));
      }
    }
  }

  Section child(const std::string& key) { return Section(raw(key), full(key), source_); }

  YAML::Mark mark() const { return node_ ? node_.Mark() : YAML::Mark::null_mark(); }

  YAML::Mark mark_of(const std::string& key) const {
    return has(key) ? node_[key].Mark() : mark();
  }

  void reject_unknown() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) config_error(source_, kv.first.Mark(), "unknown key " + name(key));
    }
  }

 private:
  std::string full(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  std::string name(const std::string& key) const { return "'" + full(key) + "'"; }

  YAML::Node node_;
  std::string path_;
  const std::string& source_;
  std::set<std::string> used_;
};

template <typename Fn>
void checked(const std::string& source, const YAML::Mark& mark, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    config_error(source, mark, e.what());
  }
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    config_error(source, e.mark, e.msg);
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) config_error(source, root.Mark(), "top level must be a mapping");

  RunConfig cfg;
  Section top(root, "", source);

  {
    Section s = top.child("hopper");
    double mb = cfg.hopper.body_mass(), mt = cfg.hopper.toe_mass(), l = cfg.hopper.rest_length();
    double kl = cfg.hopper.leg_stiffness(), dl = cfg.hopper.leg_damping();
    s.get("body_mass_kg", mb);
    s.get("toe_mass_kg", mt);
    s.get("rest_length_m", l);
    s.get("leg_stiffness_N_m", kl);
    s.get("leg_damping_Ns_m", dl);
    s.reject_unknown();
    checked(source, s.mark(), [&] { cfg.hopper = HopperParams(mb, mt, l, kl, dl); });
  }
  {
    Section s = top.child("ground");
    double kg = cfg.ground.stiffness(), dg = cfg.ground.damping();
    s.get("stiffness_N_m", kg);
    s.get("damping_Ns_m", dg);
    s.reject_unknown();
    checked(source, s.mark(), [&] { cfg.ground = GroundProfile(kg, dg); });
  }
  top.get("energy_J", cfg.energy);
  checked(source, top.mark_of("energy_J"), [&] {
    if (!(cfg.energy > 0.0)) fail(ErrorCode::InvalidArgument, "energy_J must be > 0");
  });
  {
    Section s = top.child("physics");
    s.get("gravity_m_s2", cfg.episode.physics.gravity);
    s.get("non_sticking_ground", cfg.episode.physics.non_sticking_ground);
    s.reject_unknown();
  }
  {
    Section s = top.child("episode");
    auto& e = cfg.episode;
    s.get("max_hops", e.max_hops);
    s.get("steady_window", e.steady_window);
    s.get("steady_std_tol_m", e.steady_std_tol);
    s.get("drop_height_m", e.drop_height);
    std::string mode = to_string(e.guard_mode);
    s.get("guard_mode", mode);
    if (mode == "simulation") {
      e.guard_mode = GuardMode::Simulation;
    } else if (mode == "experiment") {
      e.guard_mode = GuardMode::Experiment;
    } else {
      config_error(source, s.mark_of("guard_mode"),
                   "guard_mode must be 'simulation' or 'experiment'");
    }
    s.get("stance_fixed_duration_s", e.stance_fixed_duration);
    s.get("max_stance_duration_s", e.max_stance_duration);
    s.get("max_flight_duration_s", e.max_flight_duration);
    s.get("chatter_interval_s", e.chatter_interval);
    s.get("skip_initial_hops", e.skip_initial_hops);
    s.reject_unknown();
    checked(source, s.mark(), [&] { e.validate(); });
  }
  {
    Section s = top.child("integrator");
    auto& i = cfg.integrator;
    s.get("rel_tol", i.rel_tol);
    s.get("abs_tol", i.abs_tol);
    s.get("max_step_s", i.max_step);
    s.get("event_time_tol_s", i.event_time_tol);
    s.get("event_samples", i.event_samples);
    s.reject_unknown();
    checked(source, s.mark(), [&] { i.validate(); });
  }
  {
    Section s = top.child("sweep");
    auto& w = cfg.sweep;
    s.get_list("leg_stiffness_N_m", w.leg_stiffness);
    s.get_list("leg_damping_Ns_m", w.leg_damping);
    s.get_list("energy_J", w.energies);
    for (const auto& [key, range] : {std::pair{"ground_stiffness_N_m", &w.ground_stiffness},
                                     std::pair{"ground_damping_Ns_m", &w.ground_damping}}) {
      Section r = s.child(key);
      r.get("start", range->start);
      r.get("step", range->step);
      r.get("end", range->end);
      r.reject_unknown();
    }
    s.get("tie_threshold_m", w.tie_threshold);
    s.get("threads", w.threads);
    s.reject_unknown();
    w.body_mass = cfg.hopper.body_mass();
    w.toe_mass = cfg.hopper.toe_mass();
    w.rest_length = cfg.hopper.rest_length();
    w.episode = cfg.episode;
    w.integrator = cfg.integrator;
    checked(source, s.mark(), [&] { w.validate(); });
  }
  {
    Section s = top.child("portrait");
    s.get_list("drop_heights_m", cfg.portrait_drop_heights);
    s.reject_unknown();
    for (double h : cfg.portrait_drop_heights) {
      if (!(h > 0.0)) config_error(source, s.mark(), "portrait drop heights must be > 0");
    }
  }
  {
    Section s = top.child("fit");
    s.get("free_offset", cfg.fit_free_offset);
    s.reject_unknown();
  }
  top.get("output_dir", cfg.output_dir);
  top.get("seed", cfg.seed);
  top.reject_unknown();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, path.string() + ": cannot open config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string());
}

std::string default_config_text() {
  return R"(# Reference robot and sweep grid. Lengths in m, stiffness in N/m,
# damping in N s/m, energy in J.
hopper:
  body_mass_kg: 2.5
  toe_mass_kg: 0.3
  rest_length_m: 0.0975
  leg_stiffness_N_m: 4000
  leg_damping_Ns_m: 35
ground:
  stiffness_N_m: 3800
  damping_Ns_m: 45
energy_J: 1.0
physics:
  gravity_m_s2: 9.81
  non_sticking_ground: false
episode:
  max_hops: 60
  steady_window: 10
  steady_std_tol_m: 1.0e-6
  drop_height_m: 0.1
  guard_mode: simulation
  stance_fixed_duration_s: 0.150
  max_stance_duration_s: 1.0
  max_flight_duration_s: 5.0
  chatter_interval_s: 0.001
  skip_initial_hops: 0
integrator:
  rel_tol: 1.0e-8
  abs_tol: 1.0e-10
  max_step_s: 0.002
  event_time_tol_s: 1.0e-12
  event_samples: 8
sweep:
  leg_stiffness_N_m: [3000, 4000, 5000]
  leg_damping_Ns_m: [30, 35, 40]
  ground_stiffness_N_m: {start: 2400, step: 200, end: 5400}
  ground_damping_Ns_m: {start: 15, step: 5, end: 75}
  energy_J: [1.0, 1.56, 2.25]
  tie_threshold_m: 0.001
  threads: 1
portrait:
  drop_heights_m: []
fit:
  free_offset: false
output_dir: out
seed: 0
)";
}

}  // namespace hopsim
