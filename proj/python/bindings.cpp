#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hopsim/config.hpp"
#include "hopsim/emulator_model.hpp"
#include "hopsim/error.hpp"
#include "hopsim/hopping_sim.hpp"
#include "hopsim/stiffness_sweep.hpp"

namespace py = pybind11;
using namespace hopsim;

namespace {

// Rows of (time, phase, x_b, v_b, x_t, v_t); phase is 0 in flight, 1 in stance.
py::array_t<double> trajectory_array(const EpisodeOutcome& o) {
  py::array_t<double> out({static_cast<py::ssize_t>(o.trajectory.size()), py::ssize_t{6}});
  auto a = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    const auto& s = o.trajectory[static_cast<std::size_t>(i)];
    a(i, 0) = s.time;
    a(i, 1) = s.phase == Phase::Stance ? 1.0 : 0.0;
    a(i, 2) = s.body_pos;
    a(i, 3) = s.body_vel;
    a(i, 4) = s.toe_pos;
    a(i, 5) = s.toe_vel;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(hopsim, m) {
  m.doc() = "Two-mass vertical hopper on spring-damper ground";

  py::exception<Error>(m, "HopsimError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = py::module_::import("hopsim").attr("HopsimError");
      py::object err = type(e.what());
      err.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(type.ptr(), err.ptr());
    }
  });

  py::enum_<Phase>(m, "Phase").value("Flight", Phase::Flight).value("Stance", Phase::Stance);
  py::enum_<GuardMode>(m, "GuardMode")
      .value("Simulation", GuardMode::Simulation)
      .value("Experiment", GuardMode::Experiment);
  py::enum_<EpisodeStatus>(m, "EpisodeStatus")
      .value("SteadyHopping", EpisodeStatus::SteadyHopping)
      .value("FailedLiftoff", EpisodeStatus::FailedLiftoff)
      .value("NoConvergence", EpisodeStatus::NoConvergence)
      .value("NumericalFailure", EpisodeStatus::NumericalFailure);

  py::class_<HopperParams>(m, "HopperParams")
      .def(py::init<double, double, double, double, double>(), py::arg("body_mass"),
           py::arg("toe_mass"), py::arg("rest_length"), py::arg("leg_stiffness"),
           py::arg("leg_damping"))
      .def_static("reference", &HopperParams::reference, py::arg("leg_stiffness"),
                  py::arg("leg_damping"))
      .def_property_readonly("body_mass", &HopperParams::body_mass)
      .def_property_readonly("toe_mass", &HopperParams::toe_mass)
      .def_property_readonly("rest_length", &HopperParams::rest_length)
      .def_property_readonly("leg_stiffness", &HopperParams::leg_stiffness)
      .def_property_readonly("leg_damping", &HopperParams::leg_damping)
      .def("with_leg", &HopperParams::with_leg, py::arg("stiffness"), py::arg("damping"));

  py::class_<GroundProfile>(m, "GroundProfile")
      .def(py::init<double, double>(), py::arg("stiffness"), py::arg("damping"))
      .def_property_readonly("stiffness", &GroundProfile::stiffness)
      .def_property_readonly("damping", &GroundProfile::damping);

  m.def(
      "precompression",
      [](double energy, double leg_stiffness) {
        return precompression_from_energy(EnergyBudget(energy), leg_stiffness);
      },
      py::arg("energy"), py::arg("leg_stiffness"));

  py::class_<PhysicsOptions>(m, "PhysicsOptions")
      .def(py::init<>())
      .def_readwrite("gravity", &PhysicsOptions::gravity)
      .def_readwrite("non_sticking_ground", &PhysicsOptions::non_sticking_ground);

  py::class_<IntegratorConfig>(m, "IntegratorConfig")
      .def(py::init<>())
      .def_readwrite("rel_tol", &IntegratorConfig::rel_tol)
      .def_readwrite("abs_tol", &IntegratorConfig::abs_tol)
      .def_readwrite("max_step", &IntegratorConfig::max_step)
      .def_readwrite("event_time_tol", &IntegratorConfig::event_time_tol)
      .def_readwrite("event_samples", &IntegratorConfig::event_samples);

  py::class_<EpisodeConfig>(m, "EpisodeConfig")
      .def(py::init<>())
      .def_readwrite("max_hops", &EpisodeConfig::max_hops)
      .def_readwrite("steady_window", &EpisodeConfig::steady_window)
      .def_readwrite("steady_std_tol", &EpisodeConfig::steady_std_tol)
      .def_readwrite("drop_height", &EpisodeConfig::drop_height)
      .def_readwrite("guard_mode", &EpisodeConfig::guard_mode)
      .def_readwrite("stance_fixed_duration", &EpisodeConfig::stance_fixed_duration)
      .def_readwrite("max_stance_duration", &EpisodeConfig::max_stance_duration)
      .def_readwrite("max_flight_duration", &EpisodeConfig::max_flight_duration)
      .def_readwrite("chatter_interval", &EpisodeConfig::chatter_interval)
      .def_readwrite("skip_initial_hops", &EpisodeConfig::skip_initial_hops)
      .def_readwrite("record_trajectory", &EpisodeConfig::record_trajectory)
      .def_readwrite("physics", &EpisodeConfig::physics);

  py::class_<HopRecord>(m, "HopRecord")
      .def_readonly("index", &HopRecord::index)
      .def_readonly("touchdown_time", &HopRecord::touchdown_time)
      .def_readonly("liftoff_time", &HopRecord::liftoff_time)
      .def_readonly("apex_time", &HopRecord::apex_time)
      .def_readonly("apex_height", &HopRecord::apex_height)
      .def_readonly("injected_energy", &HopRecord::injected_energy)
      .def_readonly("dissipated_energy", &HopRecord::dissipated_energy);

  py::class_<EpisodeOutcome>(m, "EpisodeOutcome")
      .def_readonly("status", &EpisodeOutcome::status)
      .def_readonly("steady_apex_mean", &EpisodeOutcome::steady_apex_mean)
      .def_readonly("steady_apex_std", &EpisodeOutcome::steady_apex_std)
      .def_readonly("precompression", &EpisodeOutcome::precompression)
      .def_readonly("hops", &EpisodeOutcome::hops)
      .def_readonly("failure_reason", &EpisodeOutcome::failure_reason)
      .def_property_readonly("trajectory", &trajectory_array);

  m.def(
      "run_episode",
      [](const HopperParams& hopper, const GroundProfile& ground, double energy,
         const EpisodeConfig& cfg, const IntegratorConfig& icfg) {
        py::gil_scoped_release release;
        return run_episode(hopper, ground, EnergyBudget(energy), cfg, icfg);
      },
      py::arg("hopper"), py::arg("ground"), py::arg("energy"), py::arg("config") = EpisodeConfig{},
      py::arg("integrator") = IntegratorConfig{});

  py::class_<GridRange>(m, "GridRange")
      .def(py::init([](double start, double step, double end) { return GridRange{start, step, end}; }),
           py::arg("start"), py::arg("step"), py::arg("end"))
      .def_readwrite("start", &GridRange::start)
      .def_readwrite("step", &GridRange::step)
      .def_readwrite("end", &GridRange::end)
      .def("values", &GridRange::values)
      .def("__len__", &GridRange::size);

  py::class_<SweepSpec>(m, "SweepSpec")
      .def(py::init<>())
      .def_readwrite("body_mass", &SweepSpec::body_mass)
      .def_readwrite("toe_mass", &SweepSpec::toe_mass)
      .def_readwrite("rest_length", &SweepSpec::rest_length)
      .def_readwrite("leg_stiffness", &SweepSpec::leg_stiffness)
      .def_readwrite("leg_damping", &SweepSpec::leg_damping)
      .def_readwrite("ground_stiffness", &SweepSpec::ground_stiffness)
      .def_readwrite("ground_damping", &SweepSpec::ground_damping)
      .def_readwrite("energies", &SweepSpec::energies)
      .def_readwrite("tie_threshold", &SweepSpec::tie_threshold)
      .def_readwrite("episode", &SweepSpec::episode)
      .def_readwrite("integrator", &SweepSpec::integrator)
      .def_readwrite("threads", &SweepSpec::threads);

  py::class_<StiffnessOutcome>(m, "StiffnessOutcome")
      .def_readonly("leg_stiffness", &StiffnessOutcome::leg_stiffness)
      .def_readonly("status", &StiffnessOutcome::status)
      .def_readonly("apex_mean", &StiffnessOutcome::apex_mean)
      .def_readonly("apex_std", &StiffnessOutcome::apex_std)
      .def_readonly("failure_reason", &StiffnessOutcome::failure_reason)
      .def_property_readonly("succeeded", &StiffnessOutcome::succeeded);

  py::class_<CellResult>(m, "CellResult")
      .def_readonly("leg_damping", &CellResult::leg_damping)
      .def_readonly("energy", &CellResult::energy)
      .def_readonly("ground_stiffness", &CellResult::ground_stiffness)
      .def_readonly("ground_damping", &CellResult::ground_damping)
      .def_readonly("outcomes", &CellResult::outcomes)
      .def_readonly("winners", &CellResult::winners);

  py::class_<SweepResult>(m, "SweepResult")
      .def_readonly("spec", &SweepResult::spec)
      .def_readonly("cells", &SweepResult::cells)
      .def("ground_cells", &SweepResult::ground_cells)
      .def("cell", &SweepResult::cell, py::return_value_policy::reference_internal);

  m.def(
      "run_sweep",
      [](const SweepSpec& spec) {
        py::gil_scoped_release release;
        return run_sweep(spec);
      },
      py::arg("spec"));

  py::class_<WinnerMap>(m, "WinnerMap")
      .def_readonly("leg_damping", &WinnerMap::leg_damping)
      .def_readonly("energy", &WinnerMap::energy)
      .def_readonly("ground_stiffness", &WinnerMap::ground_stiffness)
      .def_readonly("ground_damping", &WinnerMap::ground_damping)
      .def_readonly("winners", &WinnerMap::winners)
      .def("at", &WinnerMap::at);
  m.def("best_stiffness_map", &best_stiffness_map, py::arg("result"), py::arg("tie_threshold"));
  m.def(
      "select_stiffness",
      [](const WinnerMap& map, double kg, double dg) { return select_stiffness(map, GroundProfile(kg, dg)); },
      py::arg("map"), py::arg("ground_stiffness"), py::arg("ground_damping"));

  py::class_<SuccessRegion>(m, "SuccessRegion")
      .def_readonly("energy", &SuccessRegion::energy)
      .def_readonly("leg_damping", &SuccessRegion::leg_damping)
      .def_readonly("success", &SuccessRegion::success)
      .def("count", &SuccessRegion::count);
  m.def("success_region", py::overload_cast<const SweepResult&, double, double>(&success_region),
        py::arg("result"), py::arg("energy"), py::arg("leg_damping"));

  py::class_<TrendViolation>(m, "TrendViolation")
      .def_readonly("leg_stiffness", &TrendViolation::leg_stiffness)
      .def_readonly("ground_stiffness", &TrendViolation::ground_stiffness)
      .def_readonly("ground_damping", &TrendViolation::ground_damping)
      .def_readonly("axis", &TrendViolation::axis);
  m.def("check_trends", &check_trends, py::arg("result"), py::arg("leg_damping"), py::arg("energy"));

  py::class_<RunConfig>(m, "RunConfig")
      .def_readonly("hopper", &RunConfig::hopper)
      .def_readonly("ground", &RunConfig::ground)
      .def_readonly("energy", &RunConfig::energy)
      .def_readonly("episode", &RunConfig::episode)
      .def_readonly("integrator", &RunConfig::integrator)
      .def_readonly("sweep", &RunConfig::sweep)
      .def_readonly("portrait_drop_heights", &RunConfig::portrait_drop_heights)
      .def_readonly("seed", &RunConfig::seed);
  m.def("parse_config", &parse_config, py::arg("text"), py::arg("source") = "<config>");
  m.def("load_config", &load_config, py::arg("path"));
  m.def("default_config_text", &default_config_text);

  auto em = m.def_submodule("emulator", "Ground emulator kinematics and oscillator fits");
  using namespace hopsim::emulator;
  py::class_<LinkageGeometry>(em, "LinkageGeometry")
      .def(py::init<double, double>(), py::arg("l1"), py::arg("l2"))
      .def_property_readonly("l1", &LinkageGeometry::l1)
      .def_property_readonly("l2", &LinkageGeometry::l2);
  em.def("forward_kinematics", &forward_kinematics, py::arg("theta"), py::arg("geometry"));
  em.def("kinematic_jacobian", &kinematic_jacobian, py::arg("theta"), py::arg("geometry"));

  py::class_<OscillatorParams>(em, "OscillatorParams")
      .def(py::init([](double a, double alpha, double beta, double phase, double offset) {
             return OscillatorParams{a, alpha, beta, phase, offset};
           }),
           py::arg("amplitude"), py::arg("alpha"), py::arg("beta"), py::arg("phase") = 0.0,
           py::arg("offset") = 0.0)
      .def_readwrite("amplitude", &OscillatorParams::amplitude)
      .def_readwrite("alpha", &OscillatorParams::alpha)
      .def_readwrite("beta", &OscillatorParams::beta)
      .def_readwrite("phase", &OscillatorParams::phase)
      .def_readwrite("offset", &OscillatorParams::offset);

  py::class_<OscillationTrace>(em, "OscillationTrace")
      .def(py::init([](std::vector<double> t, std::vector<double> r, double mass) {
             return OscillationTrace{std::move(t), std::move(r), mass};
           }),
           py::arg("time"), py::arg("position"), py::arg("mass"))
      .def_readonly("time", &OscillationTrace::time)
      .def_readonly("position", &OscillationTrace::position)
      .def_readonly("mass", &OscillationTrace::mass);
  em.def("synthesize_trace", &synthesize_trace, py::arg("params"), py::arg("mass"), py::arg("duration"),
         py::arg("sample_rate"), py::arg("noise_sigma") = 0.0, py::arg("seed") = 0ULL,
         py::arg("gravity") = kStandardGravity);

  py::class_<OscillatorFit>(em, "OscillatorFit")
      .def_readonly("params", &OscillatorFit::params)
      .def_readonly("residual_rms", &OscillatorFit::residual_rms)
      .def_readonly("r_squared", &OscillatorFit::r_squared)
      .def_readonly("ground_stiffness", &OscillatorFit::ground_stiffness)
      .def_readonly("ground_damping", &OscillatorFit::ground_damping)
      .def_readonly("iterations", &OscillatorFit::iterations)
      .def_property_readonly("accepted", &OscillatorFit::accepted);
  em.def(
      "fit_oscillator",
      [](const OscillationTrace& trace, bool free_offset) {
        FitOptions opts;
        opts.free_offset = free_offset;
        return fit_oscillator(trace, opts);
      },
      py::arg("trace"), py::arg("free_offset") = false);
}
