#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fnet/correlate.hpp"

namespace fnet {

/// One agglomeration step. Node ids: leaves 0..n-1, the k-th merge creates node n+k.
/// `left` is the child holding the smaller leaf index.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;

  friend bool operator==(const Merge&, const Merge&) = default;
};

struct Dendrogram {
  std::vector<std::string> leaves;
  std::vector<Merge> merges;

  std::size_t leaf_count() const noexcept { return leaves.size(); }
  std::size_t node_count() const noexcept { return leaves.size() + merges.size(); }
  std::size_t root() const noexcept { return node_count() - 1; }
};

/// Checks the structural invariants (n-1 merges, single parent per node, sizes add up).
void validate(const Dendrogram& d);

/// Average-linkage (UPGMA) agglomeration. Ties on linkage go to the pair with the smallest node
/// id, then the smallest partner id.
Dendrogram average_link(const DistanceMatrix& dist);

/// Parent/children/leaf-range view over a dendrogram for ancestry queries.
class TreeIndex {
 public:
  explicit TreeIndex(const Dendrogram& d);

  std::size_t leaf_count() const noexcept { return n_; }
  std::size_t parent(std::size_t node) const { return parent_[node]; }
  std::size_t left(std::size_t internal) const { return children_[internal - n_].first; }
  std::size_t right(std::size_t internal) const { return children_[internal - n_].second; }
  std::size_t size(std::size_t node) const { return size_[node]; }
  double height(std::size_t node) const { return node < n_ ? 0.0 : heights_[node - n_]; }
  std::size_t root() const noexcept { return parent_.size() - 1; }

  /// Lowest common ancestor node of two distinct leaves.
  std::size_t lca(std::size_t a, std::size_t b) const;

  /// Leaves under a node, ascending.
  std::vector<std::size_t> leaves_under(std::size_t node) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::size_t n_;
  std::vector<std::size_t> parent_;
  std::vector<std::pair<std::size_t, std::size_t>> children_;
  std::vector<std::size_t> size_;
  std::vector<std::size_t> depth_;
  std::vector<double> heights_;
};

/// Leaf set of the lowest internal node containing both leaves.
std::vector<std::size_t> smallest_common_cluster(const Dendrogram& d, std::size_t a, std::size_t b);

/// Newick text with branch length = parent height - child height, leaf heights zero.
std::string to_newick(const Dendrogram& d);

/// Parses a rooted binary Newick tree with branch lengths. Node heights are rebuilt from the
/// leaves up; internal node ids are assigned in (height, post-order) order.
Dendrogram parse_newick(std::string_view text);

/// `step,left,right,height,size`, one row per merge.
std::string format_merge_table(const Dendrogram& d);
Dendrogram parse_merge_table(std::string_view content, const std::string& source, std::vector<std::string> leaves);

/// Canonical nested-set description of the topology over leaf names, independent of node ids
/// and child order. Equal strings mean isomorphic trees.
std::string topology_signature(const Dendrogram& d);

Dendrogram read_newick(const std::filesystem::path& path);

}  // namespace fnet
