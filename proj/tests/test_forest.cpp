#include <doctest.h>

#include "neutral_gate/error.hpp"
#include "neutral_gate/forest.hpp"
#include "support/oracles.hpp"

using namespace ngate;

namespace {

// Depth of every node from the root, by walking child links.
std::vector<std::uint32_t> node_depths(const DecisionTree& tree) {
  std::vector<std::uint32_t> depth(tree.nodes.size(), 0);
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (n.is_leaf()) continue;
    depth[n.left] = depth[i] + 1;
    depth[n.right] = depth[i] + 1;
  }
  return depth;
}

ForestConfig blob_config() {
  ForestConfig cfg;
  cfg.active_var_count = 3;
  cfg.seed = 99;
  return cfg;
}

}  // namespace

TEST_SUITE("forest") {
  TEST_CASE("separable blobs are learned exactly") {
    const auto set = ngate::testing::separable_blobs(500, 10, 1);
    ForestTrainReport report;
    const auto model = train_forest(set, blob_config(), &report);
    for (std::size_t i = 0; i < set.size(); ++i) {
      CHECK((predict_confidence(model, set.x.row(i)).neutral >= 0.5) == (set.y[i] > 0));
    }
    CHECK(report.oob_errors.size() == std::get<ForestModel>(model.payload).trees.size());
  }

  TEST_CASE("same seed gives identical bytes, another seed does not") {
    auto set = ngate::testing::separable_blobs(300, 10, 2);
    for (std::size_t i = 0; i < set.y.size(); i += 5) set.y[i] = static_cast<std::int8_t>(-set.y[i]);
    auto cfg = blob_config();
    const auto a = serialize_model(train_forest(set, cfg));
    const auto b = serialize_model(train_forest(set, cfg));
    CHECK(a == b);
    cfg.seed = 100;
    CHECK(serialize_model(train_forest(set, cfg)) != a);
  }

  TEST_CASE("stored trees respect depth and min-sample limits") {
    auto set = ngate::testing::separable_blobs(400, 10, 3);
    for (std::size_t i = 0; i < set.y.size(); i += 3) set.y[i] = static_cast<std::int8_t>(-set.y[i]);
    for (std::uint32_t max_depth : {2u, 5u, 25u}) {
      for (std::uint32_t min_samples : {2u, 12u, 40u}) {
        auto cfg = blob_config();
        cfg.max_depth = max_depth;
        cfg.min_sample_count = min_samples;
        cfg.max_trees = 5;
        const auto model = train_forest(set, cfg);
        for (const auto& tree : std::get<ForestModel>(model.payload).trees) {
          const auto depth = node_depths(tree);
          CHECK(tree.depth() <= max_depth);
          for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const auto& n = tree.nodes[i];
            CHECK(depth[i] <= max_depth);
            if (!n.is_leaf()) {
              CHECK(n.sample_count >= min_samples);
              CHECK(depth[i] < max_depth);
              CHECK(tree.nodes[n.left].sample_count + tree.nodes[n.right].sample_count == n.sample_count);
            }
          }
        }
        CHECK_NOTHROW(check_invariants(model));
      }
    }
  }

  TEST_CASE("OOB stopping rules") {
    const auto set = ngate::testing::separable_blobs(200, 10, 4);
    auto cfg = blob_config();
    ForestTrainReport delta, absolute;
    train_forest(set, cfg, &delta);
    CHECK(delta.stopped_by_epsilon);
    CHECK(delta.oob_errors.size() >= 2);
    cfg.stop_rule = OobStopRule::kAbsolute;
    train_forest(set, cfg, &absolute);
    CHECK(absolute.stopped_by_epsilon);
    CHECK(absolute.oob_errors.back() < cfg.oob_epsilon);

    // noisy labels: the absolute rule never fires, all trees are grown
    auto noisy = set;
    for (std::size_t i = 0; i < noisy.y.size(); i += 4) noisy.y[i] = static_cast<std::int8_t>(-noisy.y[i]);
    cfg.max_trees = 12;
    ForestTrainReport full;
    const auto model = train_forest(noisy, cfg, &full);
    CHECK_FALSE(full.stopped_by_epsilon);
    CHECK(std::get<ForestModel>(model.payload).trees.size() == 12);
  }

  TEST_CASE("configuration errors") {
    ForestConfig cfg;
    cfg.max_trees = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = ForestConfig{};
    cfg.oob_epsilon = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
}
