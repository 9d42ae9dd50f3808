#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fnet/defactor.hpp"
#include "fnet/hcluster.hpp"
#include "fnet/panel.hpp"

namespace fnet {

/// Mean over all pairs of marked leaves of the marked fraction of their smallest common cluster.
/// `members[leaf]` marks the target set; at least two leaves must be marked.
double purity(const TreeIndex& tree, std::span<const std::uint8_t> members);

/// Purity of the leaves carrying `group` in `labels` (one label per leaf).
double purity(const Dendrogram& d, std::span<const std::string> labels, const std::string& group);

struct PermutationResult {
  double observed = 0.0;
  double p_value = 1.0;
  std::size_t replicates = 0;
  std::size_t at_least_observed = 0;
  double replicate_mean = 0.0;
  double replicate_sd = 0.0;
};

/// Replicates counting as "at least as pure" use this relative slack on the comparison, so
/// configurations with the same exact purity are not split by summation order.
inline constexpr double kPurityTieTolerance = 1e-12;

/// Null distribution from B uniformly drawn M-subsets of all leaves, each scored as its own
/// target set; p = (1 + #{replicate >= observed}) / (B + 1).
PermutationResult permutation_pvalue(const Dendrogram& d, std::span<const std::string> labels,
                                     const std::string& group, std::size_t replicates, std::uint64_t seed);

/// Same statistic with the replicate subsets supplied explicitly (leaf index lists).
PermutationResult permutation_pvalue(const Dendrogram& d, std::span<const std::string> labels,
                                     const std::string& group,
                                     const std::vector<std::vector<std::size_t>>& subsets);

struct PurityRow {
  std::string label;
  std::size_t members = 0;
  double purity = 0.0;
  double p_value = 1.0;
  std::size_t replicates = 0;
};

struct PurityReport {
  Grouping grouping = Grouping::sector;
  std::vector<PurityRow> rows;

  double mean_purity() const;
};

/// One row per label with at least two leaves, sorted by label. Each group draws from its own
/// seed-derived stream, so rows do not depend on which other groups exist.
PurityReport purity_report(const Dendrogram& d, std::span<const CompanyMeta> meta, Grouping grouping,
                           std::size_t replicates, std::uint64_t seed);

/// `grouping,label,M,purity,p_value,B` with header.
std::string format_report_csv(const PurityReport& report, bool header = true);

/// Reads the CSV form back, one report per run of rows sharing a grouping.
std::vector<PurityReport> parse_report_csv(std::string_view content, const std::string& source);

/// Column-aligned human-readable table.
std::string format_report_table(const PurityReport& report);

/// Labels of the dendrogram leaves under a grouping, looked up by company id.
std::vector<std::string> leaf_labels(const Dendrogram& d, std::span<const CompanyMeta> meta, Grouping grouping);

/// SplitMix64 step, used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace fnet
