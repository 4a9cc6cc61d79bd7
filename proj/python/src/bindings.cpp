#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "milt/bench.hpp"
#include "milt/error.hpp"
#include "milt/miltree.hpp"
#include "milt/session.hpp"

namespace py = pybind11;
using namespace milt;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

SvmConfig make_svm(const std::string& variant, double c, double nu, bool scale) {
  SvmConfig cfg;
  cfg.variant = parse_svm_variant(variant);
  cfg.c = c;
  cfg.nu = nu;
  cfg.scale = scale;
  return cfg;
}

using DatasetPtr = std::shared_ptr<const MilDataset>;

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bag trees, prototype selection and prototype-based SVM sessions for multiple-instance data.";

  py::register_exception<Error>(m, "MiltError", PyExc_ValueError);

  py::class_<MilDataset, std::shared_ptr<MilDataset>>(m, "Dataset")
      .def_readonly("name", &MilDataset::name)
      .def_readonly("dimension", &MilDataset::dimension)
      .def_readonly("class_names", &MilDataset::class_names)
      .def_property_readonly("num_bags", [](const MilDataset& d) { return d.bags.size(); })
      .def_property_readonly("num_instances", &MilDataset::num_instances)
      .def_property_readonly("bag_ids",
                             [](const MilDataset& d) {
                               std::vector<std::string> ids;
                               for (const auto& b : d.bags) ids.push_back(b.id);
                               return ids;
                             })
      .def_property_readonly("labels",
                             [](const MilDataset& d) {
                               std::vector<ClassId> out;
                               for (const auto& b : d.bags) out.push_back(b.label);
                               return out;
                             })
      .def("instances", [](const MilDataset& d, std::size_t bag) { return d.bags.at(bag).instances; })
      .def("to_csv", [](const MilDataset& d) { return to_csv(d); })
      .def("hash", [](const MilDataset& d) { return dataset_hash(d); });

  m.def("load_csv", [](const std::string& path) { return std::make_shared<MilDataset>(load_csv(path)); });
  m.def("parse_csv", [](const std::string& text, const std::string& name) {
    return std::make_shared<MilDataset>(parse_csv(text, name));
  }, py::arg("text"), py::arg("name") = "dataset");
  m.def("load_musk_uci", [](const std::string& path) { return std::make_shared<MilDataset>(load_musk_uci(path)); });
  m.def(
      "synthetic",
      [](std::size_t n_bags, double shift, double sigma, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.n_bags = n_bags;
        spec.planted_shift = shift;
        spec.noise_sigma = sigma;
        spec.seed = seed;
        auto syn = generate_synthetic(spec);
        return py::make_tuple(std::make_shared<MilDataset>(std::move(syn.dataset)), syn.planted);
      },
      py::arg("n_bags") = 40, py::arg("shift") = 6.0, py::arg("sigma") = 1.0, py::arg("seed") = 1,
      "Planted-prototype dataset and the planted instance index of each positive bag.");

  py::class_<MilTree, std::shared_ptr<MilTree>>(m, "MilTree")
      .def(py::init([](const std::shared_ptr<MilDataset>& ds, const std::string& method) {
             return build_miltree(DatasetPtr(ds), parse_selection_method(method));
           }),
           py::arg("dataset"), py::arg("method") = "med")
      .def_property_readonly("method", [](const MilTree& t) { return to_string(t.method()); })
      .def_property_readonly("prototypes",
                             [](const MilTree& t) {
                               std::vector<std::pair<std::size_t, std::size_t>> out;
                               for (const auto& p : t.pairs()) out.emplace_back(p.b_ix, p.b_iy);
                               return out;
                             })
      .def("positions",
           [](const MilTree& t) {
             std::vector<std::string> out;
             for (const auto& p : t.classify_positions()) out.push_back(to_string(p.kind));
             return out;
           })
      .def("bag_tree",
           [](const MilTree& t) { return to_py(bag_tree_json(t, t.initial_slots(), t.classify_positions())); })
      .def("instance_tree",
           [](const MilTree& t, std::size_t bag) { return to_py(instance_tree_json(t, bag, t.initial_slots().at(bag))); })
      .def("suggest_training",
           [](const MilTree& t, double fraction, std::uint64_t seed, const std::string& mode) {
             return suggest_training(t.dataset(), t.classify_positions(), fraction, seed, parse_training_mode(mode));
           },
           py::arg("fraction") = 0.3, py::arg("seed") = 1, py::arg("mode") = "combined");

  py::class_<Session>(m, "Session")
      .def(py::init([](const std::shared_ptr<MilTree>& tree, const std::string& svm, double c, double nu, bool scale) {
             return Session(tree, make_svm(svm, c, nu, scale));
           }),
           py::arg("tree"), py::arg("svm") = "nu", py::arg("c") = 1.0, py::arg("nu") = 0.6, py::arg("scale") = false)
      .def_property_readonly("training", &Session::training)
      .def_property_readonly("trained", [](const Session& s) { return s.model().has_value(); })
      .def_property_readonly("proto_class",
                             [](const Session& s) {
                               std::vector<std::size_t> out;
                               for (const auto& sl : s.slots()) out.push_back(sl.proto_class);
                               return out;
                             })
      .def("set_training", &Session::set_training)
      .def("swap_to_alternative", &Session::swap_to_alternative)
      .def("set_prototype", &Session::set_prototype)
      .def("add_prototype", &Session::add_prototype, py::arg("bag"), py::arg("instance") = py::none())
      .def("add_bags", &Session::add_bags)
      .def("rewind", &Session::rewind)
      .def("train", [](Session& s) { return to_py(to_json(s.train(), s.dataset())); })
      .def("classmatch",
           [](const Session& s, const std::string& scope) {
             return to_py(to_json(s.classmatch(parse_scope(scope)), s.dataset()));
           },
           py::arg("scope") = "all")
      .def("error_branches",
           [](const Session& s) {
             nlohmann::json out = nlohmann::json::array();
             for (const auto& b : s.error_branches(s.classmatch(Scope::All))) out.push_back(to_json(b, s.dataset()));
             return to_py(out);
           })
      .def("to_json", [](const Session& s) { return to_py(s.to_json()); })
      .def_static("from_json", [](const py::object& j, const std::shared_ptr<MilTree>& tree) {
        return Session::from_json(from_py(j), tree);
      });

  m.def(
      "run_benchmark",
      [](const std::shared_ptr<MilTree>& tree, double fraction, std::uint64_t seed, const std::string& svm, double c,
         double nu, std::size_t rounds, const std::string& mode) {
        BenchConfig cfg;
        cfg.fraction = fraction;
        cfg.seed = seed;
        cfg.svm = make_svm(svm, c, nu, false);
        cfg.rounds = rounds;
        cfg.mode = parse_training_mode(mode);
        return to_py(to_json(run_benchmark(tree, cfg)));
      },
      py::arg("tree"), py::arg("fraction") = 0.3, py::arg("seed") = 1, py::arg("svm") = "nu", py::arg("c") = 1.0,
      py::arg("nu") = 0.6, py::arg("rounds") = 1, py::arg("mode") = "combined");
}
