#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "adnoise/errors.hpp"
#include "adnoise/pipeline.hpp"
#include "adnoise/potential.hpp"
#include "adnoise/report.hpp"
#include "adnoise/spectrum.hpp"

namespace py = pybind11;
using namespace adnoise;

namespace {

TransitionSet transitions_from(const std::string& name) {
  if (name == "all_pairs") return TransitionSet::all_pairs();
  if (name == "nearest_neighbor") return TransitionSet::nearest_neighbor();
  throw DomainError("transitions must be 'all_pairs' or 'nearest_neighbor'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adatom dipole noise: bound levels, symmetric master equation and noise spectra";
  m.attr("__version__") = version();

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<InvalidParameters>(m, "InvalidParameters", error.ptr());
  py::register_exception<InsufficientLevels>(m, "InsufficientLevels", error.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", error.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<ReducibilityError>(m, "ReducibilityError", error.ptr());
  py::register_exception<ResolutionError>(m, "ResolutionError", error.ptr());
  py::register_exception<CapacityError>(m, "CapacityError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());

  py::class_<PotentialParams>(m, "PotentialParams")
      .def(py::init<>())
      .def_readwrite("U0_meV", &PotentialParams::U0_meV)
      .def_readwrite("z0_A", &PotentialParams::z0_A)
      .def_readwrite("beta0_per_A", &PotentialParams::beta0_per_A)
      .def_readwrite("mass_amu", &PotentialParams::mass_amu)
      .def_readwrite("polarizability_A3", &PotentialParams::polarizability_A3)
      .def("validate", &PotentialParams::validate);

  py::class_<MaterialParams>(m, "MaterialParams")
      .def(py::init<>())
      .def_readwrite("phonon_speed_m_per_s", &MaterialParams::phonon_speed_m_per_s)
      .def_readwrite("bulk_density_per_A3", &MaterialParams::bulk_density_per_A3)
      .def_readwrite("bulk_atom_mass_amu", &MaterialParams::bulk_atom_mass_amu)
      .def_readwrite("adatom_density_per_A2", &MaterialParams::adatom_density_per_A2);

  py::class_<LevelStructure>(m, "LevelStructure")
      .def_static("from_model", &LevelStructure::from_model, py::arg("omegas_per_s"), py::arg("dipoles_debye"),
                  py::arg("rates_per_s"))
      .def_readonly("energies_meV", &LevelStructure::energies_meV)
      .def_readonly("dipoles_debye", &LevelStructure::dipoles_debye)
      .def_readonly("rates_per_s", &LevelStructure::rates_per_s)
      .def_readonly("omega0_per_s", &LevelStructure::omega0_per_s)
      .def_readonly("delta_per_s", &LevelStructure::delta_per_s)
      .def_property_readonly("count", &LevelStructure::count)
      .def("fundamental_frequency", &LevelStructure::fundamental_frequency)
      .def("fundamental_rate", &LevelStructure::fundamental_rate)
      .def("__len__", &LevelStructure::count);

  m.def("evaluate_potential", &evaluate_potential, py::arg("params"), py::arg("z_A"));
  m.def("harmonic_frequency", &harmonic_frequency, py::arg("params"));
  m.def("anharmonic_shift", &anharmonic_shift, py::arg("params"));
  m.def(
      "solve_bound_states",
      [](const PotentialParams& p, const MaterialParams& mat, std::size_t max_levels) {
        return solve_bound_states(p, mat, max_levels);
      },
      py::arg("params") = PotentialParams{}, py::arg("material") = MaterialParams{}, py::arg("max_levels") = 10);
  m.def("truncate_levels", &truncate_levels, py::arg("levels"), py::arg("count"));

  py::class_<LorentzianPair>(m, "LorentzianPair")
      .def_readonly("lambda_per_s", &LorentzianPair::lambda_per_s)
      .def_readonly("weight", &LorentzianPair::weight)
      .def("__repr__", [](const LorentzianPair& p) {
        return "LorentzianPair(lambda_per_s=" + std::to_string(p.lambda_per_s) +
               ", weight=" + std::to_string(p.weight) + ")";
      });

  py::class_<SpectralDecomposition>(m, "SpectralDecomposition")
      .def_readonly("pairs", &SpectralDecomposition::pairs)
      .def_readonly("mean_dipole", &SpectralDecomposition::mean_dipole)
      .def_readonly("variance", &SpectralDecomposition::variance)
      .def_readonly("krylov_steps", &SpectralDecomposition::krylov_steps)
      .def("white_noise", &SpectralDecomposition::white_noise)
      .def("sum_rule_residual", &SpectralDecomposition::sum_rule_residual)
      .def(
          "__call__",
          [](const SpectralDecomposition& sd, const std::vector<double>& omegas) {
            return evaluate_spectrum(sd, omegas);
          },
          py::arg("omegas"));

  py::class_<GridSpectrum>(m, "GridSpectrum")
      .def_readonly("omegas", &GridSpectrum::omegas)
      .def_readonly("values", &GridSpectrum::values)
      .def_property_readonly("white_noise", [](const GridSpectrum& g) { return g.point.white_noise; })
      .def_property_readonly("dimension", [](const GridSpectrum& g) { return g.point.dimension; })
      .def_property_readonly("gamma0_per_s", [](const GridSpectrum& g) { return g.point.gamma0_per_s; })
      .def_property_readonly("decomposition", [](const GridSpectrum& g) { return g.point.decomposition; });

  m.def(
      "spectrum",
      [](const LevelStructure& levels, int atoms, double temperature_ratio,
         const std::vector<double>& omegas_over_gamma0, const std::string& transitions, std::size_t dense_cap) {
        py::gil_scoped_release release;
        return spectrum_on_grid(levels, atoms, temperature_ratio, transitions_from(transitions), omegas_over_gamma0,
                                kDefaultDimensionCap, dense_cap);
      },
      py::arg("levels"), py::arg("atoms"), py::arg("temperature_ratio"), py::arg("omegas_over_gamma0"),
      py::arg("transitions") = "all_pairs", py::arg("dense_cap") = kDefaultDenseCap,
      "Noise spectrum S(omega) in Debye^2 s on a grid given in units of the fundamental rate.");

  m.def(
      "low_temperature_spectrum",
      [](int atoms, const LevelStructure& levels, double ratio) {
        return low_temperature_spectrum(atoms, levels, ThermalParams{ratio});
      },
      py::arg("atoms"), py::arg("levels"), py::arg("temperature_ratio"));
  m.def("log_frequency_grid", &log_frequency_grid, py::arg("lo"), py::arg("hi"), py::arg("points_per_decade") = 50);
  m.def("fit_log_slope", &fit_log_slope, py::arg("omegas"), py::arg("values"), py::arg("lo"), py::arg("hi"));
  m.def(
      "pink_noise_closed_form",
      [](double gamma0, double amplitude, const std::vector<double>& omegas) {
        return pink_noise_closed_form(gamma0, amplitude, omegas);
      },
      py::arg("gamma0_per_s"), py::arg("amplitude"), py::arg("omegas"));
}
