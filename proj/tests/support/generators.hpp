#pragma once

// Hand-rolled random generators for property tests. Deterministic per seed.

#include <random>
#include <string>
#include <vector>

#include "staging/dialog.hpp"
#include "staging/site.hpp"

namespace staging::testing {

struct ScriptGen {
  std::mt19937_64 rng;
  int max_prompts = 12;
  int token_pool = 10;  // a pool smaller than max_prompts produces duplicates

  explicit ScriptGen(std::uint64_t seed) : rng(seed) {}

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

  DialogNode node(int& budget, int depth) {
    if (budget <= 1 || depth >= 4 || pick(0, 99) < 35) {
      --budget;
      return DialogNode::prompt("t" + std::to_string(pick(0, token_pool - 1)));
    }
    static constexpr Stager kinds[] = {Stager::I, Stager::PE, Stager::C, Stager::A};
    Stager s = kinds[pick(0, 3)];
    int n = pick(1, std::min(4, budget));
    std::vector<DialogNode> kids;
    for (int i = 0; i < n && budget > 0; ++i) kids.push_back(node(budget, depth + 1));
    if (pick(0, 99) < 5) kids.push_back(DialogNode::theta());
    return DialogNode::composite(s, std::move(kids));
  }

  DialogNode script() {
    int budget = pick(1, max_prompts);
    return node(budget, 0);
  }
};

/// Random faceted site trees: each depth draws labels from its own pool, so a
/// label names one facet value wherever it appears.
struct SiteGen {
  std::mt19937_64 rng;
  int max_nodes = 30;
  int max_depth = 5;
  int max_fanout = 3;
  int pool = 4;

  explicit SiteGen(std::uint64_t seed) : rng(seed) {}

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

  SiteNode grow(int depth, int& budget, std::string path) {
    SiteNode n;
    bool leaf = depth >= max_depth || budget <= 0 || (depth > 0 && pick(0, 99) < 30);
    if (!leaf) {
      std::vector<int> labels(static_cast<std::size_t>(pool));
      for (int i = 0; i < pool; ++i) labels[static_cast<std::size_t>(i)] = i;
      std::shuffle(labels.begin(), labels.end(), rng);
      int fan = pick(1, std::min(max_fanout, pool));
      for (int i = 0; i < fan && budget > 0; ++i) {
        --budget;
        std::string lab = std::string(1, static_cast<char>('a' + depth)) +
                          std::to_string(labels[static_cast<std::size_t>(i)]);
        SiteNode c = grow(depth + 1, budget, path + "/" + lab);
        c.label = Token(lab);
        n.children.push_back(std::move(c));
      }
    }
    if (n.children.empty()) n.page = "page:" + path;
    return n;
  }

  SiteTree tree() {
    int budget = pick(1, max_nodes - 1);
    SiteNode root = grow(0, budget, "");
    if (root.children.empty()) {
      root.page.reset();
      SiteNode leaf;
      leaf.label = Token("a0");
      leaf.page = "page:/a0";
      root.children.push_back(std::move(leaf));
    }
    root.label = Token("site");
    return SiteTree("random", std::move(root));
  }
};

}  // namespace staging::testing
