#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgraph/graph.hpp"

namespace cgraph {

using BlockId = std::uint32_t;

class PlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Counters for the free-block lookup structure.
struct PoolStats {
  std::size_t lookups = 0;
  std::size_t comparisons = 0;
  std::size_t max_comparisons_per_lookup = 0;
  std::size_t max_free_blocks = 0;
};

/// Best-fit pool of reusable blocks ordered by (size, id).
class BlockPool {
 public:
  BlockPool();

  /// Takes a block for a value of `bytes`:
  ///  - a block from `preferred` that is free and large enough, smallest first;
  ///  - else the smallest free block of size >= bytes;
  ///  - else the largest free block, grown to `bytes`;
  ///  - else a fresh block.
  /// Ties go to the lowest block id. The block leaves the pool.
  BlockId find_best_block(std::size_t bytes, std::span<const BlockId> preferred = {});

  void release(BlockId block);
  bool is_free(BlockId block) const;

  std::size_t free_count() const noexcept { return free_.size(); }
  const std::vector<std::size_t>& block_sizes() const noexcept { return sizes_; }
  const PoolStats& stats() const noexcept { return stats_; }

 private:
  struct Entry {
    std::size_t size;
    BlockId id;
  };
  struct Less {
    std::size_t* counter;
    bool operator()(const Entry& a, const Entry& b) const {
      ++*counter;
      return a.size != b.size ? a.size < b.size : a.id < b.id;
    }
  };

  std::unique_ptr<std::size_t> comparisons_;
  std::set<Entry, Less> free_;
  std::vector<std::size_t> sizes_;
  PoolStats stats_;
};

struct AllocationPlan {
  std::vector<NodeId> order;                      // the evaluation order planned for
  std::vector<std::optional<BlockId>> assignment;  // by node id; empty for external nodes
  std::vector<std::size_t> block_sizes;            // bytes, by block id
  std::vector<NodeId> external;                   // Var and Const nodes, stored outside the pool
  std::size_t external_bytes = 0;
  std::size_t peak_bytes = 0;                     // pool bytes + external bytes
  PoolStats stats;

  std::size_t pool_bytes() const noexcept;
};

/// Minimal-time block-sharing allocation following the given ordering.
///
/// Consumers release a predecessor's block once its remaining-consumer count
/// reaches zero, unless the predecessor is keep-flagged. Inplace-safe ops
/// release same-sized dying operands before choosing their own block and
/// prefer those blocks; every other operand is released afterwards, so a node
/// never overwrites a value it reads non-pointwise.
AllocationPlan plan_memory(const Graph& graph, const Ordering& ordering, std::span<const std::size_t> sizes);

/// Independent brute-force check of a plan: missing or spurious blocks,
/// undersized blocks, and blocks shared by nodes whose lifetimes overlap.
std::vector<std::string> validate_plan(const Graph& graph, const Ordering& ordering,
                                       std::span<const std::size_t> sizes, const AllocationPlan& plan);

/// One private buffer per node.
std::size_t naive_bytes(std::span<const std::size_t> sizes);

}  // namespace cgraph
