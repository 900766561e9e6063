// Python extension: lattices, covers, measures, walks, flows and fits.
// Matrices cross the boundary as 2x2 float arrays; records come back as
// numpy columns.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "covwalk/config.hpp"
#include "covwalk/error.hpp"
#include "covwalk/stats.hpp"

namespace py = pybind11;
using namespace covwalk;

namespace {

using Matrix = py::array_t<double, py::array::c_style | py::array::forcecast>;

hyp2::GroupElement to_element(const Matrix& m) {
    if (m.ndim() != 2 || m.shape(0) != 2 || m.shape(1) != 2) throw py::value_error("expected a 2x2 matrix");
    const auto r = m.unchecked<2>();
    return hyp2::GroupElement::from_entries(r(0, 0), r(0, 1), r(1, 0), r(1, 1));
}

Matrix to_matrix(const hyp2::GroupElement& g) {
    Matrix out({2, 2});
    auto w = out.mutable_unchecked<2>();
    w(0, 0) = g.a(), w(0, 1) = g.b(), w(1, 0) = g.c(), w(1, 1) = g.d();
    return out;
}

std::vector<hyp2::GroupElement> to_elements(const std::vector<Matrix>& ms) {
    std::vector<hyp2::GroupElement> out;
    for (const auto& m : ms) out.push_back(to_element(m));
    return out;
}

hyp2::GroupElement start_rep(const std::optional<Matrix>& start, const std::optional<std::pair<double, double>>& point,
                             const fuchsian::SurfaceGeometry& geom) {
    if (start) return to_element(*start);
    const hyp2::PointH z = point ? hyp2::PointH(point->first, point->second) : geom.polygon.center;
    return hyp2::UnitTangent::upright_at(z).rep();
}

walk::StartMode start_mode(const std::string& s) {
    if (s == "fixed") return walk::StartMode::Fixed;
    if (s == "haar") return walk::StartMode::Haar;
    throw py::value_error("start must be 'fixed' or 'haar'");
}

py::dict result_dict(const walk::WalkResult& r, int d) {
    const auto n = static_cast<py::ssize_t>(r.records.size());
    py::array_t<int> traj(n), cusp(n);
    py::array_t<long long> steps(n);
    py::array_t<double> time(n), log_height(n), cartan_t(n), excursion(n);
    py::array_t<long long> sigma({n, static_cast<py::ssize_t>(d)});
    py::array_t<double> drift({n, static_cast<py::ssize_t>(d)});
    auto tr = traj.mutable_unchecked<1>();
    auto cu = cusp.mutable_unchecked<1>();
    auto st = steps.mutable_unchecked<1>();
    auto ti = time.mutable_unchecked<1>();
    auto lh = log_height.mutable_unchecked<1>();
    auto ct = cartan_t.mutable_unchecked<1>();
    auto ex = excursion.mutable_unchecked<1>();
    auto sg = sigma.mutable_unchecked<2>();
    auto dr = drift.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < n; ++i) {
        const auto& rec = r.records[static_cast<std::size_t>(i)];
        tr(i) = rec.trajectory, cu(i) = rec.cusp, st(i) = rec.n, ti(i) = rec.time;
        lh(i) = rec.cusp_log_height, ct(i) = rec.cartan_t, ex(i) = rec.max_excursion;
        for (int k = 0; k < d; ++k) sg(i, k) = rec.sigma[k], dr(i, k) = rec.drift[k];
    }
    py::list summaries;
    for (const auto& s : r.summaries) {
        py::dict e;
        e["trajectory"] = s.trajectory;
        e["ok"] = s.ok;
        e["error"] = s.error;
        e["steps_done"] = s.steps_done;
        e["first_return"] = s.first_return;
        e["return_count"] = s.return_count;
        summaries.append(e);
    }
    py::dict out;
    out["trajectory"] = traj;
    out["n"] = steps;
    out["time"] = time;
    out["sigma"] = sigma;
    out["drift"] = drift;
    out["cusp"] = cusp;
    out["cusp_log_height"] = log_height;
    out["cartan_t"] = cartan_t;
    out["max_excursion"] = excursion;
    out["summaries"] = summaries;
    out["orbit_chain"] = r.orbit_chain;
    out["orbit_size"] = r.orbit_size;
    return out;
}

py::dict walk_py(const cover::CoverModel& model, const walk::MeasureSpec& m, long long steps, int trajectories, std::uint64_t seed,
                 const std::vector<long long>& checkpoints, const std::string& start, const std::optional<Matrix>& start_matrix,
                 const std::optional<std::pair<double, double>>& start_point, std::optional<double> haar_log_height,
                 double return_radius, bool use_orbit_chain, int threads) {
    walk::WalkConfig cfg;
    cfg.steps = steps;
    cfg.trajectories = trajectories;
    cfg.seed = seed;
    cfg.checkpoints = checkpoints;
    cfg.start = start_mode(start);
    cfg.start_rep = start_rep(start_matrix, start_point, model.geometry());
    cfg.haar_log_height = haar_log_height.value_or(model.geometry().disjoint_height);
    cfg.return_radius = return_radius;
    cfg.use_orbit_chain = use_orbit_chain;
    cfg.threads = threads;
    walk::WalkResult r;
    {
        py::gil_scoped_release release;
        r = walk::run_walk(model, m, cfg);
    }
    return result_dict(r, model.d());
}

py::dict geodesic_py(const cover::CoverModel& model, double T, double dt, int trajectories, std::uint64_t seed,
                     const std::vector<double>& checkpoints, const std::string& start, const std::optional<Matrix>& start_matrix,
                     const std::optional<std::pair<double, double>>& start_point, std::optional<double> haar_log_height, int threads) {
    walk::GeodesicConfig cfg;
    cfg.T = T;
    cfg.dt = dt;
    cfg.trajectories = trajectories;
    cfg.seed = seed;
    cfg.checkpoints = checkpoints;
    cfg.start = start_mode(start);
    cfg.start_rep = start_rep(start_matrix, start_point, model.geometry());
    cfg.haar_log_height = haar_log_height.value_or(model.geometry().disjoint_height);
    cfg.threads = threads;
    walk::WalkResult r;
    {
        py::gil_scoped_release release;
        r = walk::run_geodesic(model, cfg);
    }
    return result_dict(r, model.d());
}

cover::CoverModel make_cover(const fuchsian::SurfaceGeometry& geom, const std::vector<cover::IntVec>& weights) {
    if (weights.empty()) throw py::value_error("weights must have one row per generator");
    auto spec = cover::validate_cover(geom.presentation, geom.cusps, static_cast<int>(weights[0].size()), weights);
    return cover::CoverModel(geom, std::move(spec));
}

}  // namespace

PYBIND11_MODULE(_covwalk, m) {
    m.doc() = "Random walks and geodesic flow on Z^d-covers of hyperbolic surfaces";

    py::exception<Error> error_type(m, "CovwalkError", PyExc_RuntimeError);
    error_type.inc_ref();
    static PyObject* error_class = error_type.ptr();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error_class)(e.what());
            exc.attr("code") = std::string(to_string(e.code()));
            exc.attr("line") = e.line();
            PyErr_SetObject(error_class, exc.ptr());
        }
    });

    m.def("build_id", [] { return std::string(COVWALK_BUILD_ID); });

    // group kernel
    m.def("translation", [](double t) { return to_matrix(hyp2::translation(t)); }, py::arg("t"));
    m.def("rotation", [](double theta) { return to_matrix(hyp2::rotation(theta)); }, py::arg("theta"));
    m.def("unipotent", [](double u) { return to_matrix(hyp2::unipotent(u)); }, py::arg("u"));
    m.def(
        "iwasawa",
        [](const Matrix& g) {
            const auto c = hyp2::iwasawa(to_element(g));
            return py::make_tuple(c.u, c.t, c.theta);
        },
        py::arg("g"), "(u, t, theta) with g = n(u) a_t R_theta");
    m.def(
        "cartan",
        [](const Matrix& g) {
            const auto c = hyp2::cartan(to_element(g));
            return py::make_tuple(c.theta1, c.t, c.theta2);
        },
        py::arg("g"), "(theta1, t, theta2) with g = R_theta1 a_t R_theta2, t >= 0");
    m.def("psl_distance", [](const Matrix& g, const Matrix& h) { return hyp2::psl_distance(to_element(g), to_element(h)); });

    py::class_<fuchsian::SurfaceGeometry>(m, "Lattice")
        .def_static(
            "builtin",
            [](const std::string& name, std::optional<double> l1, std::optional<double> l2) {
                fuchsian::TorusParams p;
                if (l1) p.l1 = *l1;
                if (l2) p.l2 = *l2;
                return fuchsian::builtin_lattice(name, p);
            },
            py::arg("name"), py::arg("l1") = py::none(), py::arg("l2") = py::none())
        .def_static("names", &fuchsian::builtin_names)
        .def_static(
            "from_file", [](const std::filesystem::path& path) { return config::lattice_geometry(config::load_lattice(path)); },
            py::arg("path"))
        .def_property_readonly("name", [](const fuchsian::SurfaceGeometry& g) { return g.name; })
        .def_property_readonly("generators",
                               [](const fuchsian::SurfaceGeometry& g) {
                                   std::vector<std::pair<std::string, Matrix>> out;
                                   for (const auto& gen : g.presentation.generators()) out.emplace_back(gen.label, to_matrix(gen.element));
                                   return out;
                               })
        .def_property_readonly("relators",
                               [](const fuchsian::SurfaceGeometry& g) {
                                   std::vector<std::string> out;
                                   for (const auto& w : g.presentation.relators()) out.push_back(g.presentation.format(w));
                                   return out;
                               })
        .def_property_readonly("euler_characteristic",
                               [](const fuchsian::SurfaceGeometry& g) { return g.presentation.euler_characteristic(); })
        .def_property_readonly("area", [](const fuchsian::SurfaceGeometry& g) { return g.polygon.area; })
        .def_property_readonly("cusp_count", [](const fuchsian::SurfaceGeometry& g) { return g.cusps.size(); })
        .def_property_readonly("disjoint_height", [](const fuchsian::SurfaceGeometry& g) { return g.disjoint_height; })
        .def(
            "evaluate", [](const fuchsian::SurfaceGeometry& g, const std::string& word) {
                return to_matrix(g.presentation.evaluate(g.presentation.parse_word(word)));
            },
            py::arg("word"));

    py::class_<cover::CoverModel>(m, "Cover")
        .def(py::init(&make_cover), py::arg("lattice"), py::arg("weights"),
             "weights: one integer row of length d per generator")
        .def_property_readonly("d", &cover::CoverModel::d)
        .def_property_readonly("lattice", &cover::CoverModel::geometry)
        .def_property_readonly("ec_dim", [](const cover::CoverModel& c) { return c.spec().ec_dim(); })
        .def_property_readonly("cusp_vectors", [](const cover::CoverModel& c) { return c.spec().v; })
        .def_property_readonly("unfolded", [](const cover::CoverModel& c) { return c.spec().unfolded; })
        .def(
            "phi",
            [](const cover::CoverModel& c, const std::string& word) {
                return cover::phi(c.spec(), c.geometry().presentation.parse_word(word));
            },
            py::arg("word"))
        .def(
            "sigma_path",
            [](const cover::CoverModel& c, const Matrix& start, const std::vector<Matrix>& letters) {
                return c.sigma_path(c.lift(hyp2::UnitTangent(to_element(start))), to_elements(letters));
            },
            py::arg("start"), py::arg("letters"), "cumulative index change after each letter, from a raw tangent rep");

    py::class_<walk::MeasureSpec>(m, "Measure")
        .def_static(
            "atoms",
            [](const std::vector<std::tuple<std::string, Matrix, double>>& atoms) {
                std::vector<walk::Atom> out;
                for (const auto& [label, g, p] : atoms) out.push_back({to_element(g), p, label});
                return walk::MeasureSpec::atoms(std::move(out));
            },
            py::arg("atoms"), "list of (label, matrix, probability)")
        .def_static("parametric", &walk::MeasureSpec::parametric, py::arg("tau_min"), py::arg("tau_max"))
        .def_property_readonly("is_atomic", &walk::MeasureSpec::is_atomic)
        .def("zariski_check", [](const walk::MeasureSpec& s, std::uint64_t seed) {
            const auto r = walk::zariski_density_check(s, seed);
            return py::make_tuple(r.pass, r.reason);
        }, py::arg("seed") = 0);

    m.def("checkpoints", &walk::make_checkpoints, py::arg("steps"), py::arg("stride") = 0, py::arg("per_decade") = 0);

    m.def("run_walk", &walk_py, py::arg("cover"), py::arg("measure"), py::arg("steps"), py::arg("trajectories") = 1,
          py::arg("seed") = 0, py::arg("checkpoints") = std::vector<long long>{}, py::arg("start") = "fixed",
          py::arg("start_matrix") = py::none(), py::arg("start_point") = py::none(), py::arg("haar_log_height") = py::none(),
          py::arg("return_radius") = 2.0, py::arg("use_orbit_chain") = true, py::arg("threads") = 0);

    m.def("run_geodesic", &geodesic_py, py::arg("cover"), py::arg("T"), py::arg("dt") = 0.25, py::arg("trajectories") = 1,
          py::arg("seed") = 0, py::arg("checkpoints") = std::vector<double>{}, py::arg("start") = "haar",
          py::arg("start_matrix") = py::none(), py::arg("start_point") = py::none(), py::arg("haar_log_height") = py::none(),
          py::arg("threads") = 0);

    m.def(
        "lyapunov",
        [](const walk::MeasureSpec& s, long long steps, int trajectories, std::uint64_t seed, bool override_check, int threads) {
            walk::LyapunovEstimate e;
            {
                py::gil_scoped_release release;
                e = walk::lyapunov_estimate(s, steps, trajectories, seed, override_check, threads);
            }
            py::dict out;
            out["lambda"] = e.lambda;
            out["standard_error"] = e.standard_error;
            out["positive"] = e.positive;
            out["per_trajectory"] = e.per_trajectory;
            return out;
        },
        py::arg("measure"), py::arg("steps") = 2000, py::arg("trajectories") = 1000, py::arg("seed") = 0,
        py::arg("override_zariski") = false, py::arg("threads") = 0);

    m.def(
        "cauchy_fit",
        [](const std::vector<double>& x) {
            const auto f = stats::cauchy_fit(x);
            py::dict out;
            out["location"] = f.location;
            out["scale"] = f.scale;
            out["ks_distance"] = f.ks_distance;
            out["tail_index"] = f.tail_index;
            out["n"] = f.n;
            return out;
        },
        py::arg("samples"));
    m.def(
        "gaussian_fit",
        [](const std::vector<double>& x) {
            const auto f = stats::gaussian_fit(x);
            py::dict out;
            out["mean"] = f.mean;
            out["sd"] = f.sd;
            out["standard_error"] = f.standard_error;
            out["ks_distance"] = f.ks_distance;
            out["tail_index"] = f.tail_index;
            out["n"] = f.n;
            return out;
        },
        py::arg("samples"));

    // experiment configs
    py::class_<config::Bundle>(m, "Experiment")
        .def(py::init([](const std::filesystem::path& path) { return config::make_bundle(config::load_config(path)); }),
             py::arg("path"))
        .def_static(
            "from_text",
            [](const std::string& text, const std::filesystem::path& base_dir) {
                return config::make_bundle(config::parse_config(text, base_dir));
            },
            py::arg("text"), py::arg("base_dir") = std::filesystem::path{})
        .def_property_readonly("canonical", [](const config::Bundle& b) { return config::canonical(b.config); })
        .def_property_readonly("config_hash", [](const config::Bundle& b) { return config::hex64(config::fnv1a64(config::canonical(b.config))); })
        .def_property_readonly("cover", [](const config::Bundle& b) { return b.model; })
        .def_property_readonly("measure", [](const config::Bundle& b) { return b.measure; })
        .def("run_walk",
             [](const config::Bundle& b) {
                 walk::WalkResult r;
                 {
                     py::gil_scoped_release release;
                     r = walk::run_walk(b.model, b.measure, b.walk);
                 }
                 return result_dict(r, b.model.d());
             })
        .def("run_geodesic", [](const config::Bundle& b) {
            walk::WalkResult r;
            {
                py::gil_scoped_release release;
                r = walk::run_geodesic(b.model, b.geodesic);
            }
            return result_dict(r, b.model.d());
        });
}
