#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "skilltree/cli/commands.hpp"
#include "skilltree/cli/config.hpp"
#include "skilltree/cli/manifest.hpp"
#include "skilltree/distill/cart.hpp"
#include "skilltree/env/dataset.hpp"
#include "skilltree/sdt/soft_tree.hpp"
#include "skilltree/skillvq/skill_model.hpp"

namespace py = pybind11;
using namespace skilltree;

namespace {

diffcore::Tensor to_tensor(const std::vector<std::vector<float>>& rows) {
  require(!rows.empty(), "expected at least one row");
  const auto cols = rows.front().size();
  diffcore::Tensor t(static_cast<int>(rows.size()), static_cast<int>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].size() == cols, "rows must all have the same length");
    std::copy(rows[r].begin(), rows[r].end(), t.row_span(static_cast<int>(r)).begin());
  }
  return t;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Skill-tree pipeline core";

  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericFault>(m, "NumericFault", PyExc_ArithmeticError);

  m.attr("OBS_DIM") = env::kObsDim;
  m.attr("HORIZON") = env::kHorizon;
  m.attr("NUM_TARGETS") = env::kNumTargets;

  py::class_<sdt::SoftTree>(m, "SoftTree")
      .def(py::init<int, int, int, std::uint64_t>(), py::arg("depth"), py::arg("obs_dim"), py::arg("num_skills"),
           py::arg("seed") = 0)
      .def_property_readonly("depth", &sdt::SoftTree::depth)
      .def_property_readonly("obs_dim", &sdt::SoftTree::obs_dim)
      .def_property_readonly("num_skills", &sdt::SoftTree::num_skills)
      .def_property_readonly("num_leaves", &sdt::SoftTree::num_leaves)
      .def(
          "forward",
          [](const sdt::SoftTree& t, const std::vector<float>& x) {
            auto out = t.forward(x);
            return py::make_tuple(out.distribution, out.path_probabilities);
          },
          py::arg("x"), "(mixture over skills, path probability per leaf)")
      .def(
          "greedy_path",
          [](const sdt::SoftTree& t, const std::vector<float>& x) {
            const auto path = t.greedy_path(x);
            std::vector<int> nodes;
            for (const auto& s : path.steps) nodes.push_back(s.node);
            py::dict d;
            d["nodes"] = nodes;
            d["leaf"] = path.leaf;
            d["skill"] = path.skill();
            d["probability"] = path.probability();
            return d;
          },
          py::arg("x"))
      .def("set_leaf_logit", [](sdt::SoftTree& t, int leaf, int k, float v) { t.leaf_logits().value(leaf, k) = v; })
      .def("set_gate", [](sdt::SoftTree& t, int node, const std::vector<float>& w, float bias) {
        require(static_cast<int>(w.size()) == t.obs_dim(), "gate weights must have obs_dim entries");
        require(node >= 0 && node < t.num_inner(), "node index out of range");
        for (int f = 0; f < t.obs_dim(); ++f) t.weights().value(f, node) = w[static_cast<std::size_t>(f)];
        t.biases().value.data[static_cast<std::size_t>(node)] = bias;
      });

  m.def(
      "quantize",
      [](const std::vector<std::vector<float>>& codebook, const std::vector<float>& z) {
        const auto r = skillvq::quantize(to_tensor(codebook), z);
        return py::make_tuple(r.index, r.embedding, r.distance);
      },
      py::arg("codebook"), py::arg("z_e"), "(index, embedding, distance) of the nearest codebook row");

  py::class_<env::SequentialReachEnv>(m, "SequentialReach")
      .def(py::init<>())
      .def("reset", &env::SequentialReachEnv::reset, py::arg("seed"))
      .def(
          "step",
          [](env::SequentialReachEnv& e, const env::Action& a) {
            const auto r = e.step(a);
            return py::make_tuple(r.next.observation(), r.reward, r.done, r.subtasks);
          },
          py::arg("action"), "(observation, reward, done, completed subtasks)");

  m.def(
      "dataset_csv",
      [](int n, std::uint64_t seed) { return env::dataset_to_csv(env::generate_dataset(n, seed).trajectories); },
      py::arg("n_traj"), py::arg("seed"), "scripted demonstrations as CSV text");

  py::class_<distill::HardTree>(m, "HardTree")
      .def_static(
          "from_text", [](const std::string& text) { return distill::HardTree::from_text(text); }, py::arg("text"))
      .def("predict", [](const distill::HardTree& t, const std::vector<float>& x) { return t.predict(x); })
      .def("to_text", [](const distill::HardTree& t) { return t.to_text(); })
      .def_property_readonly("depth", &distill::HardTree::depth)
      .def_property_readonly("leaf_count", &distill::HardTree::leaf_count)
      .def_property_readonly("split_features", &distill::HardTree::split_features);

  m.def(
      "cart_fit",
      [](const std::vector<std::vector<float>>& states, const std::vector<int>& skills, int num_skills, int max_depth,
         int min_leaf) {
        distill::LabelledSet set;
        set.states = to_tensor(states);
        set.skills = skills;
        set.num_skills = num_skills;
        return distill::cart_fit(set, {max_depth, min_leaf});
      },
      py::arg("states"), py::arg("skills"), py::arg("num_skills"), py::arg("max_depth") = 6, py::arg("min_leaf") = 1);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"skilltree"};
        full.insert(full.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : full) argv.push_back(a.c_str());
        std::ostringstream out;
        std::ostringstream err;
        const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "(exit code, stdout, stderr)");

  m.def("config_defaults", [] { return cli::Config().values(); });
  m.def(
      "git_blob_hash", [](const py::bytes& content) { return cli::git_blob_hash(std::string(content)); },
      py::arg("content"));
}
