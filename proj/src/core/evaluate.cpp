#include "fnet/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>

#include "fnet/error.hpp"
#include "fnet/parallel.hpp"
#include "fnet/text.hpp"

namespace fnet {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double purity(const TreeIndex& tree, std::span<const std::uint8_t> members) {
  const std::size_t n = tree.leaf_count();
  if (members.size() != n) throw ValidationError("purity: membership mask does not match the tree");
  std::vector<std::size_t> count(2 * n - 1, 0);
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    count[i] = members[i] ? 1 : 0;
    m += count[i];
  }
  if (m < 2) throw ValidationError("purity: needs at least 2 members, got " + std::to_string(m));

  // A member pair has its smallest common cluster at node v exactly when the two leaves sit on
  // opposite sides of v, which happens count(left) * count(right) times.
  std::vector<std::size_t> hits;
  for (std::size_t v = n; v < 2 * n - 1; ++v) {
    std::size_t cl = count[tree.left(v)];
    std::size_t cr = count[tree.right(v)];
    count[v] = cl + cr;
    if (cl != 0 && cr != 0) hits.push_back(v);
  }
  const std::uint64_t pairs = static_cast<std::uint64_t>(m) * (m - 1) / 2;

  // Exact rational sum over a common denominator while it stays within double's integer range;
  // the final quotient is then correctly rounded and independent of summation order.
  constexpr std::uint64_t exact_limit = std::uint64_t{1} << 53;
  std::uint64_t denom = 1;
  bool exact = true;
  for (std::size_t v : hits) {
    std::uint64_t s = tree.size(v);
    std::uint64_t next = denom / std::gcd(denom, s) * s;
    if (next >= exact_limit) {
      exact = false;
      break;
    }
    denom = next;
  }
  if (exact) {
    unsigned __int128 num = 0;
    for (std::size_t v : hits) {
      std::uint64_t cl = count[tree.left(v)], cr = count[tree.right(v)];
      num += static_cast<unsigned __int128>(cl * cr * count[v]) * (denom / tree.size(v));
    }
    unsigned __int128 den = static_cast<unsigned __int128>(denom) * pairs;
    unsigned __int128 a = num, b = den;
    while (b != 0) {
      unsigned __int128 r = a % b;
      a = b;
      b = r;
    }
    if (a != 0) {
      num /= a;
      den /= a;
    }
    if (num < exact_limit && den < exact_limit) return static_cast<double>(num) / static_cast<double>(den);
  }

  double total = 0.0;
  for (std::size_t v : hits) {
    std::size_t cl = count[tree.left(v)], cr = count[tree.right(v)];
    total += static_cast<double>(cl * cr) * static_cast<double>(count[v]) / static_cast<double>(tree.size(v));
  }
  return total / static_cast<double>(pairs);
}

namespace {

std::vector<std::uint8_t> mask_for(std::span<const std::string> labels, const std::string& group) {
  std::vector<std::uint8_t> mask(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) mask[i] = labels[i] == group ? 1 : 0;
  return mask;
}

// Unbiased integer in [0, bound) by rejection; independent of the standard library's
// distribution implementation.
std::size_t bounded(std::mt19937_64& rng, std::size_t bound) {
  const std::uint64_t b = bound;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % b;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % b);
}

PermutationResult summarize(double observed, const std::vector<double>& scores) {
  PermutationResult r;
  r.observed = observed;
  r.replicates = scores.size();
  const double threshold = observed - kPurityTieTolerance * std::max(1.0, std::abs(observed));
  double sum = 0.0;
  for (double s : scores) {
    if (s >= threshold) ++r.at_least_observed;
    sum += s;
  }
  const double b = static_cast<double>(scores.size());
  r.p_value = (1.0 + static_cast<double>(r.at_least_observed)) / (b + 1.0);
  r.replicate_mean = scores.empty() ? 0.0 : sum / b;
  double ss = 0.0;
  for (double s : scores) ss += (s - r.replicate_mean) * (s - r.replicate_mean);
  r.replicate_sd = scores.size() > 1 ? std::sqrt(ss / (b - 1.0)) : 0.0;
  return r;
}

}  // namespace

double purity(const Dendrogram& d, std::span<const std::string> labels, const std::string& group) {
  if (labels.size() != d.leaf_count()) throw ValidationError("purity: one label per leaf required");
  TreeIndex tree(d);
  return purity(tree, mask_for(labels, group));
}

PermutationResult permutation_pvalue(const Dendrogram& d, std::span<const std::string> labels,
                                     const std::string& group, std::size_t replicates, std::uint64_t seed) {
  if (labels.size() != d.leaf_count()) throw ValidationError("permutation_pvalue: one label per leaf required");
  if (replicates < 1) throw ValidationError("permutation_pvalue: need at least one replicate");
  TreeIndex tree(d);
  auto mask = mask_for(labels, group);
  const std::size_t n = d.leaf_count();
  const std::size_t m = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
  if (m > n) throw ValidationError("permutation_pvalue: group larger than the tree");
  const double observed = purity(tree, mask);

  std::vector<double> scores(replicates);
  parallel_for(replicates, [&](std::size_t b) {
    // Per-replicate stream: results do not depend on scheduling.
    std::mt19937_64 rng(mix_seed(seed ^ mix_seed(b)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::vector<std::uint8_t> sample(n, 0);
    for (std::size_t k = 0; k < m; ++k) {
      std::size_t j = k + bounded(rng, n - k);
      std::swap(order[k], order[j]);
      sample[order[k]] = 1;
    }
    scores[b] = purity(tree, sample);
  });
  return summarize(observed, scores);
}

PermutationResult permutation_pvalue(const Dendrogram& d, std::span<const std::string> labels,
                                     const std::string& group,
                                     const std::vector<std::vector<std::size_t>>& subsets) {
  if (labels.size() != d.leaf_count()) throw ValidationError("permutation_pvalue: one label per leaf required");
  if (subsets.empty()) throw ValidationError("permutation_pvalue: need at least one replicate");
  TreeIndex tree(d);
  const double observed = purity(tree, mask_for(labels, group));
  std::vector<double> scores;
  for (const auto& subset : subsets) {
    std::vector<std::uint8_t> sample(d.leaf_count(), 0);
    for (std::size_t leaf : subset) {
      if (leaf >= d.leaf_count()) throw ValidationError("permutation_pvalue: unknown leaf in subset");
      sample[leaf] = 1;
    }
    scores.push_back(purity(tree, sample));
  }
  return summarize(observed, scores);
}

double PurityReport::mean_purity() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.purity;
  return s / static_cast<double>(rows.size());
}

std::vector<std::string> leaf_labels(const Dendrogram& d, std::span<const CompanyMeta> meta, Grouping grouping) {
  std::unordered_map<std::string, const CompanyMeta*> by_id;
  for (const auto& m : meta) by_id.emplace(m.id, &m);
  std::vector<std::string> out;
  out.reserve(d.leaf_count());
  for (const auto& leaf : d.leaves) {
    auto it = by_id.find(leaf);
    if (it == by_id.end()) throw ValidationError("no metadata for company: " + leaf);
    out.push_back(group_label(*it->second, grouping));
  }
  return out;
}

PurityReport purity_report(const Dendrogram& d, std::span<const CompanyMeta> meta, Grouping grouping,
                           std::size_t replicates, std::uint64_t seed) {
  auto labels = leaf_labels(d, meta, grouping);
  std::map<std::string, std::size_t> counts;
  for (const auto& l : labels) ++counts[l];

  PurityReport report;
  report.grouping = grouping;
  for (const auto& [label, count] : counts) {
    if (count < 2) continue;
    std::uint64_t group_seed = seed;
    for (unsigned char c : label) group_seed = mix_seed(group_seed ^ c);
    auto res = permutation_pvalue(d, labels, label, replicates, group_seed);
    report.rows.push_back({label, count, res.observed, res.p_value, res.replicates});
  }
  if (report.rows.empty()) {
    throw ValidationError("purity_report: no " + to_string(grouping) + " group has at least 2 members");
  }
  return report;
}

std::string format_report_csv(const PurityReport& report, bool header) {
  std::string out = header ? "grouping,label,M,purity,p_value,B\n" : "";
  for (const auto& r : report.rows) {
    out += to_string(report.grouping) + "," + r.label + "," + std::to_string(r.members) + "," +
           text::format_double(r.purity) + "," + text::format_double(r.p_value) + "," + std::to_string(r.replicates) +
           "\n";
  }
  return out;
}

std::vector<PurityReport> parse_report_csv(std::string_view content, const std::string& source) {
  auto lines = text::split_lines(content);
  if (lines.empty() || text::split_csv(lines.front().text) !=
                           std::vector<std::string>{"grouping", "label", "M", "purity", "p_value", "B"}) {
    throw ParseError(source, lines.empty() ? 1 : lines.front().number, "header must be 'grouping,label,M,purity,p_value,B'");
  }
  std::vector<PurityReport> reports;
  auto count = [&](const std::string& s, std::size_t line) {
    double v = text::parse_double(s, source, line);
    if (v < 0.0 || v != std::floor(v)) throw ParseError(source, line, "not a count: '" + s + "'");
    return static_cast<std::size_t>(v);
  };
  for (std::size_t k = 1; k < lines.size(); ++k) {
    auto cells = text::split_csv(lines[k].text);
    const std::size_t ln = lines[k].number;
    if (cells.size() != 6) throw ParseError(source, ln, "expected 6 fields");
    Grouping g = parse_grouping(cells[0]);
    if (reports.empty() || reports.back().grouping != g) {
      reports.emplace_back();
      reports.back().grouping = g;
    }
    reports.back().rows.push_back({cells[1], count(cells[2], ln), text::parse_double(cells[3], source, ln),
                           text::parse_double(cells[4], source, ln), count(cells[5], ln)});
  }
  return reports;
}

std::string format_report_table(const PurityReport& report) {
  std::size_t width = std::max<std::size_t>(5, to_string(report.grouping).size());
  for (const auto& r : report.rows) width = std::max(width, r.label.size());
  auto pad = [](std::string s, std::size_t w, bool right) {
    if (s.size() >= w) return s;
    return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
  };
  std::string title = to_string(report.grouping);
  title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
  std::string out = pad(title, width, false) + "  " + pad("M", 5, true) + "  " + pad("Purity", 7, true) + "  " +
                    pad("p-value", 9, true) + "\n";
  out += std::string(width + 2 + 5 + 2 + 7 + 2 + 9, '-') + "\n";
  for (const auto& r : report.rows) {
    char purity_buf[32];
    std::snprintf(purity_buf, sizeof purity_buf, "%.2f", r.purity);
    char p_buf[32];
    if (r.p_value < 0.001) {
      std::snprintf(p_buf, sizeof p_buf, "(< 0.001)");
    } else {
      std::snprintf(p_buf, sizeof p_buf, "(%.3f)", r.p_value);
    }
    out += pad(r.label, width, false) + "  " + pad(std::to_string(r.members), 5, true) + "  " +
           pad(purity_buf, 7, true) + "  " + pad(p_buf, 9, true) + "\n";
  }
  return out;
}

}  // namespace fnet
