#pragma once

#include <memory>
#include <vector>

#include "webdream/acctree.hpp"
#include "webdream/corpus.hpp"
#include "webdream/edit_script.hpp"
#include "webdream/env.hpp"
#include "webdream/policy.hpp"
#include "webdream/rollout.hpp"
#include "webdream/task.hpp"
#include "webdream/world_model.hpp"

namespace webdream::testkit {

/// Random valid tree with up to max_nodes nodes. Names include characters
/// that need escaping; at most one node is focused.
AccessibilityTree random_tree(Rng& rng, size_t max_nodes = 30);

/// 1 to max_edits random edits applied directly to the tree value
/// (rename, insert, remove, refocus, url change, wholesale replacement).
AccessibilityTree random_mutation(Rng& rng, const AccessibilityTree& tree, size_t max_edits = 5);

/// A script of 1 to max_ops ops that applies cleanly to tree.
EditScript random_script(Rng& rng, const AccessibilityTree& tree, size_t max_ops = 5);

/// Small random weights so that distributions are far from uniform.
PolicyParams random_params(Rng& rng, double scale = 0.5, size_t dim = kDefaultFeatureDim);

/// Tasks, store and a trained world model on 10-page shop sites, built once.
struct ShopFixture {
    std::vector<GeneratedTask> tasks;
    std::vector<std::shared_ptr<const Task>> task_ptrs;
    WebEnv env;
    ExpertStore store;
    TransitionCorpus corpus;
    WorldModel wm;
};
const ShopFixture& shop_fixture();

/// Every concrete action available on obs: clicks, typed vocab entries with
/// and without enter on each textbox, scrolls, go_back and stops.
std::vector<Action> all_actions(const AccessibilityTree& obs, const std::vector<std::string>& vocab);

/// Relative error with an absolute floor, for gradient checks.
double rel_error(double a, double b, double floor = 1e-8);

}  // namespace webdream::testkit
