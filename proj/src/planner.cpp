#include "cgraph/planner.hpp"

#include <algorithm>
#include <numeric>

namespace cgraph {

BlockPool::BlockPool() : comparisons_(std::make_unique<std::size_t>(0)), free_(Less{comparisons_.get()}) {}

BlockId BlockPool::find_best_block(std::size_t bytes, std::span<const BlockId> preferred) {
  const auto before = *comparisons_;
  ++stats_.lookups;
  stats_.max_free_blocks = std::max(stats_.max_free_blocks, free_.size());

  std::optional<BlockId> chosen;
  for (auto b : preferred) {
    if (sizes_[b] < bytes || !is_free(b)) continue;
    if (!chosen || sizes_[b] < sizes_[*chosen] || (sizes_[b] == sizes_[*chosen] && b < *chosen)) chosen = b;
  }
  if (chosen) {
    free_.erase(Entry{sizes_[*chosen], *chosen});
  } else if (auto it = free_.lower_bound(Entry{bytes, 0}); it != free_.end()) {
    chosen = it->id;
    free_.erase(it);
  } else if (!free_.empty()) {
    // Nothing fits: grow the largest free block (lowest id among equals).
    auto largest = free_.lower_bound(Entry{std::prev(free_.end())->size, 0});
    chosen = largest->id;
    free_.erase(largest);
    sizes_[*chosen] = bytes;
  } else {
    chosen = static_cast<BlockId>(sizes_.size());
    sizes_.push_back(bytes);
  }

  const auto spent = *comparisons_ - before;
  stats_.comparisons += spent;
  stats_.max_comparisons_per_lookup = std::max(stats_.max_comparisons_per_lookup, spent);
  return *chosen;
}

void BlockPool::release(BlockId block) {
  if (!free_.insert(Entry{sizes_.at(block), block}).second) {
    throw PlanError("block " + std::to_string(block) + " released twice");
  }
}

bool BlockPool::is_free(BlockId block) const { return free_.contains(Entry{sizes_.at(block), block}); }

std::size_t AllocationPlan::pool_bytes() const noexcept {
  return std::accumulate(block_sizes.begin(), block_sizes.end(), std::size_t{0});
}

namespace {

void check_inputs(const Graph& graph, const Ordering& ordering, std::span<const std::size_t> sizes) {
  if (sizes.size() != graph.size()) {
    throw PlanError("expected " + std::to_string(graph.size()) + " node sizes, got " + std::to_string(sizes.size()));
  }
  if (ordering.sequence.size() != graph.size() || ordering.rank.size() != graph.size()) {
    throw PlanError("ordering does not cover every node");
  }
  std::vector<bool> seen(graph.size(), false);
  for (std::size_t r = 0; r < ordering.sequence.size(); ++r) {
    auto id = ordering.sequence[r];
    if (id >= graph.size() || seen[id] || ordering.rank[id] != r) throw PlanError("ordering is not a bijection");
    seen[id] = true;
  }
  for (const auto& n : graph.nodes()) {
    if (sizes[n.id] == 0) throw PlanError("node " + std::to_string(n.id) + " has zero size");
    for (auto p : n.preds) {
      if (ordering.rank[p] >= ordering.rank[n.id]) {
        throw PlanError("ordering is not topological: " + std::to_string(p) + " -> " + std::to_string(n.id));
      }
    }
  }
}

bool is_external(const Node& n) { return n.op.kind() == OpKind::Var || n.op.kind() == OpKind::Const; }

}  // namespace

AllocationPlan plan_memory(const Graph& graph, const Ordering& ordering, std::span<const std::size_t> sizes) {
  check_inputs(graph, ordering, sizes);

  const auto keep = graph.keep_flags();
  auto refs = graph.out_degrees();
  AllocationPlan plan;
  plan.order = ordering.sequence;
  plan.assignment.assign(graph.size(), std::nullopt);
  BlockPool pool;

  auto consume = [&](NodeId p, std::vector<BlockId>* freed) {
    if (--refs[p] != 0 || keep[p] || !plan.assignment[p]) return;
    pool.release(*plan.assignment[p]);
    if (freed) freed->push_back(*plan.assignment[p]);
  };

  std::vector<BlockId> freed;
  for (auto id : ordering.sequence) {
    const Node& n = graph.node(id);
    if (is_external(n)) {
      plan.external.push_back(id);
      plan.external_bytes += sizes[id];
      continue;
    }
    const bool inplace = is_inplace_safe(n.op.kind());
    auto shares_storage = [&](NodeId p) { return inplace && sizes[p] == sizes[id]; };

    freed.clear();
    for (auto p : n.preds) {
      if (shares_storage(p)) consume(p, &freed);
    }
    plan.assignment[id] = pool.find_best_block(sizes[id], freed);
    for (auto p : n.preds) {
      if (!shares_storage(p)) consume(p, nullptr);
    }
    if (refs[id] == 0 && !keep[id]) pool.release(*plan.assignment[id]);
  }

  std::sort(plan.external.begin(), plan.external.end());
  plan.block_sizes = pool.block_sizes();
  plan.peak_bytes = plan.pool_bytes() + plan.external_bytes;
  plan.stats = pool.stats();
  return plan;
}

std::vector<std::string> validate_plan(const Graph& graph, const Ordering& ordering,
                                       std::span<const std::size_t> sizes, const AllocationPlan& plan) {
  std::vector<std::string> violations;
  const auto n = graph.size();
  if (plan.assignment.size() != n || sizes.size() != n || ordering.rank.size() != n) {
    violations.emplace_back("plan, sizes and ordering disagree on node count");
    return violations;
  }
  if (plan.order != ordering.sequence) violations.emplace_back("plan was built for a different ordering");

  const auto keep = graph.keep_flags();
  // Lifetime of x spans [rank(x), rank(last consumer)], or to the end when keep-flagged.
  std::vector<std::size_t> start(n), end(n);
  for (const auto& node : graph.nodes()) {
    start[node.id] = ordering.rank[node.id];
    end[node.id] = keep[node.id] ? n : start[node.id];
  }
  for (const auto& node : graph.nodes()) {
    for (auto p : node.preds) end[p] = std::max(end[p], ordering.rank[node.id]);
  }

  std::vector<std::vector<NodeId>> members(plan.block_sizes.size());
  for (const auto& node : graph.nodes()) {
    const auto id = node.id;
    const auto& block = plan.assignment[id];
    const std::string who = "node " + std::to_string(id);
    if (is_external(node)) {
      if (block) violations.push_back(who + " is external but has a block");
      continue;
    }
    if (!block) {
      violations.push_back(who + " has no block");
      continue;
    }
    if (*block >= plan.block_sizes.size()) {
      violations.push_back(who + " refers to unknown block " + std::to_string(*block));
      continue;
    }
    if (plan.block_sizes[*block] < sizes[id]) {
      violations.push_back("undersized block " + std::to_string(*block) + " for " + who + " (" +
                           std::to_string(plan.block_sizes[*block]) + " < " + std::to_string(sizes[id]) + " bytes)");
    }
    members[*block].push_back(id);
  }

  for (std::size_t b = 0; b < members.size(); ++b) {
    const auto& m = members[b];
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = i + 1; j < m.size(); ++j) {
        auto x = m[i], y = m[j];
        if (start[x] > start[y]) std::swap(x, y);
        if (start[y] > end[x]) continue;
        // y computed over x's storage while reading x for the last time.
        if (start[y] == end[x] && is_inplace_safe(graph.node(y).op.kind()) && sizes[x] == sizes[y]) continue;
        std::string what = keep[x] ? "keep-flagged node " + std::to_string(x) + " has its block reassigned to node " +
                                         std::to_string(y)
                                   : "overlapping lifetimes: nodes " + std::to_string(x) + " and " +
                                         std::to_string(y);
        violations.push_back(what + " share block " + std::to_string(b));
      }
    }
  }
  return violations;
}

std::size_t naive_bytes(std::span<const std::size_t> sizes) {
  return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
}

}  // namespace cgraph
