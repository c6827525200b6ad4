#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "skilltree/distill/distill.hpp"
#include "trained_model.hpp"

using namespace skilltree;
using namespace skilltree::distill;
using diffcore::Tensor;

namespace {

LabelledSet random_labels(int n, int features, int k, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  LabelledSet set;
  set.num_skills = k;
  set.states = Tensor(n, features);
  for (auto& v : set.states.data) v = u(rng);
  for (int i = 0; i < n; ++i) set.skills.push_back(std::uniform_int_distribution<int>(0, k - 1)(rng));
  return set;
}

double partition_gini(const LabelledSet& set, int feature, double threshold) {
  std::vector<int> lo(static_cast<size_t>(set.num_skills), 0);
  std::vector<int> hi(static_cast<size_t>(set.num_skills), 0);
  for (int i = 0; i < set.states.rows; ++i)
    ++(set.states(i, feature) < threshold ? lo : hi)[static_cast<size_t>(set.skills[static_cast<size_t>(i)])];
  auto mass = [](const std::vector<int>& c) {
    double n = 0.0;
    double sq = 0.0;
    for (int v : c) {
      n += v;
      sq += static_cast<double>(v) * v;
    }
    return n > 0 ? n - sq / n : 0.0;
  };
  return mass(lo) + mass(hi);
}

/// A random complete tree of the given depth with random leaf skills.
HardTree random_hard_tree(int depth, int features, int k, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<HardNode> nodes((static_cast<size_t>(1) << (depth + 1)) - 1);
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (i < (static_cast<size_t>(1) << depth) - 1) {
      nodes[i].feature = std::uniform_int_distribution<int>(0, features - 1)(rng);
      nodes[i].threshold = u(rng);
      nodes[i].left = static_cast<int>(2 * i + 1);
      nodes[i].right = static_cast<int>(2 * i + 2);
    } else {
      nodes[i].skill = std::uniform_int_distribution<int>(0, k - 1)(rng);
    }
  }
  return HardTree(std::move(nodes));
}

hrl::EpisodeRecord episode_with(int subtasks) {
  hrl::EpisodeRecord e;
  e.subtasks = subtasks;
  return e;
}

}  // namespace

TEST_SUITE("distill") {

TEST_CASE("gini mass") {
  CHECK(gini_mass(std::vector<int>{5, 0, 0}) == 0.0);
  CHECK(gini_mass(std::vector<int>{2, 2}) == doctest::Approx(2.0));
  CHECK(gini_mass(std::vector<int>{}) == 0.0);
}

TEST_CASE("separable one-dimensional data") {
  LabelledSet set;
  set.num_skills = 2;
  std::vector<float> xs{-0.9f, -0.5f, -0.2f, -0.05f, 0.0f, 0.1f, 0.4f, 0.8f};
  set.states = Tensor(static_cast<int>(xs.size()), 1, xs);
  for (float x : xs) set.skills.push_back(x < 0.0f ? 0 : 1);
  const HardTree t = cart_fit(set, {1, 1});
  CHECK(t.depth() == 1);
  CHECK(t.nodes()[0].feature == 0);
  CHECK(t.nodes()[0].threshold == doctest::Approx(-0.025).epsilon(1e-6));
  CHECK(training_accuracy(t, set) == 1.0);
}

TEST_CASE("pure labels give a single leaf") {
  LabelledSet set = random_labels(50, 3, 4, 1);
  std::fill(set.skills.begin(), set.skills.end(), 2);
  const HardTree t = cart_fit(set, {6, 1});
  CHECK(t.depth() == 0);
  CHECK(t.leaf_count() == 1);
  CHECK(t.nodes()[0].skill == 2);
  CHECK(t.nodes()[0].count == 50);
}

TEST_CASE("root split matches a brute-force Gini minimizer") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const LabelledSet set = random_labels(200, 3, 4, seed);
    double best = std::numeric_limits<double>::infinity();
    int best_f = -1;
    double best_t = 0.0;
    for (int f = 0; f < 3; ++f) {
      std::set<float> values;
      for (int i = 0; i < 200; ++i) values.insert(set.states(i, f));
      std::vector<float> sorted(values.begin(), values.end());
      for (size_t i = 0; i + 1 < sorted.size(); ++i) {
        float mid = static_cast<float>(0.5 * (static_cast<double>(sorted[i]) + sorted[i + 1]));
        if (!(sorted[i] < mid)) mid = sorted[i + 1];
        const double g = partition_gini(set, f, mid);
        if (g < best - 1e-9) {
          best = g;
          best_f = f;
          best_t = mid;
        }
      }
    }
    for (int depth = 1; depth <= 3; ++depth) {
      const HardTree t = cart_fit(set, {depth, 1});
      CHECK(t.nodes()[0].feature == best_f);
      CHECK(t.nodes()[0].threshold == best_t);
    }
  }
}

TEST_CASE("training accuracy never drops with depth and leaves stay bounded") {
  const LabelledSet set = random_labels(300, 4, 5, 9);
  double previous = 0.0;
  for (int depth = 1; depth <= 8; ++depth) {
    const HardTree t = cart_fit(set, {depth, 1});
    const double acc = training_accuracy(t, set);
    CHECK(acc >= previous);
    previous = acc;
    CHECK(t.depth() <= depth);
    CHECK(t.leaf_count() <= (1 << depth));
    for (const auto& n : t.nodes()) CHECK((n.skill >= 0 && n.skill < 5));
  }
}

TEST_CASE("min_leaf is honoured") {
  const LabelledSet set = random_labels(120, 2, 3, 4);
  const HardTree t = cart_fit(set, {6, 10});
  for (const auto& n : t.nodes())
    if (n.is_leaf()) CHECK(n.count >= 10);
}

TEST_CASE("cart rejects bad input") {
  LabelledSet empty;
  empty.num_skills = 3;
  CHECK_THROWS_AS(cart_fit(empty, {3, 1}), ContractViolation);
  LabelledSet bad = random_labels(10, 2, 3, 1);
  bad.skills[0] = 3;
  CHECK_THROWS_AS(cart_fit(bad, {3, 1}), ContractViolation);
}

TEST_CASE("hard tree routing and text") {
  std::vector<HardNode> nodes(3);
  nodes[0].feature = 1;
  nodes[0].threshold = 0.5;
  nodes[0].left = 1;
  nodes[0].right = 2;
  nodes[0].count = 7;
  nodes[1].skill = 3;
  nodes[1].count = 4;
  nodes[2].skill = 0;
  nodes[2].count = 3;
  nodes[0].skill = 3;
  const HardTree t(nodes);
  CHECK(t.predict(std::vector<float>{0.0f, 0.49f}) == 3);
  CHECK(t.predict(std::vector<float>{0.0f, 0.5f}) == 0);
  CHECK(t.to_text() == "s1 < 0.5\n  leaf 4 4\n  leaf 1 3\n");
  CHECK(HardTree::from_text(t.to_text()) == t);

  std::vector<HardNode> cyclic(2);
  cyclic[0].feature = 0;
  cyclic[0].left = 1;
  cyclic[0].right = 1;
  CHECK_THROWS_AS(HardTree{cyclic}, ContractViolation);
  CHECK_THROWS_AS(HardTree::from_text("s0 < 1\n  leaf 1 1\n"), IoError);
  CHECK_THROWS_AS(HardTree::from_text("leaf 0 1\n"), IoError);
  CHECK_THROWS_AS(HardTree::from_text(""), IoError);
}

TEST_CASE("fitted trees survive a text round trip") {
  const LabelledSet set = random_labels(400, 5, 6, 12);
  const HardTree t = cart_fit(set, {6, 1});
  const HardTree back = HardTree::from_text(t.to_text());
  CHECK(back.to_text() == t.to_text());
  REQUIRE(back.nodes().size() == t.nodes().size());
  for (size_t i = 0; i < t.nodes().size(); ++i) {
    const auto& a = t.nodes()[i];
    const auto& b = back.nodes()[i];
    CHECK(a.feature == b.feature);
    CHECK(a.threshold == b.threshold);
    CHECK(a.left == b.left);
    CHECK(a.right == b.right);
    CHECK(a.count == b.count);
    if (a.is_leaf()) CHECK(a.skill == b.skill);
  }
  for (int i = 0; i < set.states.rows; ++i) CHECK(back.predict(set.states.row_span(i)) == t.predict(set.states.row_span(i)));
}

TEST_CASE("labels csv") {
  LabelledSet set = random_labels(20, env::kObsDim, 8, 3);
  const std::string csv = labels_to_csv(set);
  CHECK(csv.rfind("s0,s1,s2,s3,s4,s5,s6,s7,s8,s9,s10,k\n", 0) == 0);
  const LabelledSet back = labels_from_csv(csv, 8);
  CHECK(back.states == set.states);
  CHECK(back.skills == set.skills);
  CHECK(labels_to_csv(back) == csv);
  CHECK_THROWS_AS(labels_from_csv(csv, 2), IoError);
}

TEST_CASE("data cleaning") {
  const std::vector<hrl::EpisodeRecord> eps{episode_with(3), episode_with(1), episode_with(3), episode_with(0)};
  const auto kept = clean_dataset(eps, 2);
  CHECK(kept.size() == 2);
  for (const auto& e : kept) CHECK(e.subtasks == 3);
  CHECK(clean_dataset(eps, -1).size() == 4);
  CHECK_THROWS_AS(clean_dataset(eps, 3), EmptyAfterCleaning);
}

TEST_CASE("label sampling follows the greedy path") {
  const auto& skills = fixtures::trained_skills();
  const auto exec = fixtures::trained_executor();
  const LabelSample a = sample_labels(skills.prior, exec, 20, 5);
  const LabelSample b = sample_labels(skills.prior, exec, 20, 5);
  CHECK(a.episodes.size() == 20);
  CHECK(a.labels.size() <= 20 * 20);
  CHECK(a.labels.skills == b.labels.skills);
  CHECK(a.labels.states == b.labels.states);
  for (int i = 0; i < a.labels.states.rows; ++i)
    CHECK(a.labels.skills[static_cast<size_t>(i)] == skills.prior.greedy_path(a.labels.states.row_span(i)).skill());
  CHECK_THROWS_AS(sample_labels(skills.prior, exec, 0, 5), ContractViolation);
}

TEST_CASE("fidelity") {
  const auto& skills = fixtures::trained_skills();
  const auto exec = fixtures::trained_executor();
  const LabelSample sample = sample_labels(skills.prior, exec, 30, 6);
  const HardTree exact = cart_fit(sample.labels, {30, 1});
  CHECK(fidelity(exact, skills.prior, sample.labels.states) == 1.0);

  sdt::SoftTree policy(4, env::kObsDim, 8, 11);
  Rng rng(12);
  diffcore::fill_uniform(policy.weights().value, 6.0f, rng);
  diffcore::fill_uniform(policy.biases().value, 3.0f, rng);
  diffcore::fill_uniform(policy.leaf_logits().value, 4.0f, rng);
  Tensor states(1000, env::kObsDim);
  for (int i = 0; i < 1000; ++i) {
    const auto o = fixtures::random_observation(rng);
    std::copy(o.begin(), o.end(), states.row_span(i).begin());
  }
  const HardTree random_tree = random_hard_tree(8, 2, 8, 13);
  CHECK(std::abs(fidelity(random_tree, policy, states) - 0.125) <= 0.05);
  CHECK_THROWS_AS(fidelity(random_tree, policy, Tensor(0, env::kObsDim)), ContractViolation);
}

TEST_CASE("policy evaluation is reproducible") {
  const auto& skills = fixtures::trained_skills();
  const auto exec = fixtures::trained_executor();
  const auto a = evaluate_policy(hrl::greedy_chooser(skills.prior), exec, 10, 3);
  const auto b = evaluate_policy(hrl::greedy_chooser(skills.prior), exec, 10, 3);
  CHECK(a.subtasks == b.subtasks);
  double mean = 0.0;
  for (int c : a.subtasks) mean += c;
  mean /= 10.0;
  double var = 0.0;
  for (int c : a.subtasks) var += (c - mean) * (c - mean);
  CHECK(a.mean_subtasks == doctest::Approx(mean));
  CHECK(a.std_subtasks == doctest::Approx(std::sqrt(var / 10.0)));
}

TEST_CASE("distilled trees ignore the constant target features") {
  const auto& skills = fixtures::trained_skills();
  const auto exec = fixtures::trained_executor();
  const LabelSample sample = sample_labels(skills.prior, exec, 100, 21);
  for (int depth : {3, 6}) {
    const HardTree t = cart_fit(sample.labels, {depth, 1});
    for (int f : t.split_features()) CHECK(f < env::kFirstConstantFeature);
  }
}

}  // TEST_SUITE
