#include "fnet/hcluster.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "fnet/error.hpp"
#include "fnet/text.hpp"

namespace fnet {

void validate(const Dendrogram& d) {
  const std::size_t n = d.leaf_count();
  if (n < 1) throw ValidationError("dendrogram has no leaves");
  if (d.merges.size() + 1 != n) {
    throw ValidationError("dendrogram with " + std::to_string(n) + " leaves needs " + std::to_string(n - 1) +
                          " merges, has " + std::to_string(d.merges.size()));
  }
  std::vector<std::size_t> size(n + d.merges.size(), 0);
  std::vector<bool> has_parent(size.size(), false);
  std::fill(size.begin(), size.begin() + static_cast<std::ptrdiff_t>(n), 1);
  for (std::size_t k = 0; k < d.merges.size(); ++k) {
    const auto& m = d.merges[k];
    const std::size_t id = n + k;
    for (std::size_t child : {m.left, m.right}) {
      if (child >= id) throw ValidationError("merge " + std::to_string(k) + " references a later node");
      if (has_parent[child]) throw ValidationError("node " + std::to_string(child) + " has two parents");
      has_parent[child] = true;
    }
    if (m.left == m.right) throw ValidationError("merge " + std::to_string(k) + " joins a node with itself");
    size[id] = size[m.left] + size[m.right];
    if (m.size != size[id]) throw ValidationError("merge " + std::to_string(k) + " has inconsistent size");
  }
}

namespace {

void check_distance(const DistanceMatrix& dist) {
  const std::size_t n = dist.size();
  if (n < 2) throw ValidationError("average_link: need at least 2 companies");
  if (dist.w.rows() != n || dist.w.cols() != n) throw ValidationError("average_link: matrix is not n x n");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double a = dist.w(i, j), b = dist.w(j, i);
      if (!std::isfinite(a) || !std::isfinite(b)) throw ValidationError("average_link: non-finite distance");
      if (a < 0.0 || b < 0.0) {
        throw ValidationError("average_link: negative distance between " + dist.companies[i] + " and " +
                              dist.companies[j]);
      }
      if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) {
        throw ValidationError("average_link: asymmetric distance between " + dist.companies[i] + " and " +
                              dist.companies[j]);
      }
    }
  }
}

// Candidate ordering: linkage value, then the two node ids.
struct Candidate {
  double value;
  std::size_t low;
  std::size_t high;

  bool operator<(const Candidate& o) const {
    if (value != o.value) return value < o.value;
    if (low != o.low) return low < o.low;
    return high < o.high;
  }
};

}  // namespace

Dendrogram average_link(const DistanceMatrix& dist) {
  check_distance(dist);
  const std::size_t n = dist.size();
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

  // Slot-based state. sums(a, b) is the total of all cross-pair leaf distances between the
  // clusters in slots a and b; merging adds rows, so linkage = sum / (size_a * size_b).
  Matrix sums(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) sums(i, j) = i == j ? 0.0 : dist.w(std::min(i, j), std::max(i, j));
  }
  std::vector<std::size_t> node(n), size(n, 1), min_leaf(n);
  std::iota(node.begin(), node.end(), 0);
  std::iota(min_leaf.begin(), min_leaf.end(), 0);
  std::vector<bool> active(n, true);

  auto linkage = [&](std::size_t a, std::size_t b) {
    return sums(a, b) / (static_cast<double>(size[a]) * static_cast<double>(size[b]));
  };

  // Each slot caches its best partner among slots holding a larger node id, so every pair is
  // owned by the row of its smaller id and the row minimum orders by (value, partner id).
  std::vector<std::size_t> nn(n, none);
  std::vector<double> nn_value(n, std::numeric_limits<double>::infinity());
  auto refresh = [&](std::size_t a) {
    nn[a] = none;
    nn_value[a] = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < n; ++b) {
      if (!active[b] || b == a || node[b] < node[a]) continue;
      double v = linkage(a, b);
      if (nn[a] == none || v < nn_value[a] || (v == nn_value[a] && node[b] < node[nn[a]])) {
        nn[a] = b;
        nn_value[a] = v;
      }
    }
  };
  for (std::size_t a = 0; a < n; ++a) refresh(a);

  Dendrogram out;
  out.leaves = dist.companies;
  out.merges.reserve(n - 1);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t best = none;
    Candidate best_key{0.0, 0, 0};
    for (std::size_t a = 0; a < n; ++a) {
      if (!active[a] || nn[a] == none) continue;
      Candidate key{nn_value[a], node[a], node[nn[a]]};
      if (best == none || key < best_key) {
        best = a;
        best_key = key;
      }
    }
    const std::size_t a = best;
    const std::size_t b = nn[a];
    const std::size_t new_node = n + step;

    Merge m;
    m.height = linkage(a, b);
    m.size = size[a] + size[b];
    if (min_leaf[a] < min_leaf[b]) {
      m.left = node[a];
      m.right = node[b];
    } else {
      m.left = node[b];
      m.right = node[a];
    }
    out.merges.push_back(m);

    // The merged cluster takes slot a.
    for (std::size_t x = 0; x < n; ++x) {
      if (!active[x] || x == a || x == b) continue;
      double s = sums(a, x) + sums(b, x);
      sums(a, x) = s;
      sums(x, a) = s;
    }
    active[b] = false;
    node[a] = new_node;
    size[a] = m.size;
    min_leaf[a] = std::min(min_leaf[a], min_leaf[b]);
    nn[b] = none;
    nn[a] = none;  // new node has the largest id, so it owns no pairs
    nn_value[a] = std::numeric_limits<double>::infinity();

    for (std::size_t x = 0; x < n; ++x) {
      if (!active[x] || x == a) continue;
      if (nn[x] == a || nn[x] == b) {
        refresh(x);
        continue;
      }
      // New node id exceeds every existing id, so it only wins on a strictly smaller value.
      double v = linkage(x, a);
      if (nn[x] == none || v < nn_value[x]) {
        nn[x] = a;
        nn_value[x] = v;
      }
    }
  }
  return out;
}

TreeIndex::TreeIndex(const Dendrogram& d) : n_(d.leaf_count()) {
  validate(d);
  const std::size_t total = d.node_count();
  parent_.assign(total, npos);
  size_.assign(total, 1);
  depth_.assign(total, 0);
  for (std::size_t k = 0; k < d.merges.size(); ++k) {
    const auto& m = d.merges[k];
    const std::size_t id = n_ + k;
    parent_[m.left] = id;
    parent_[m.right] = id;
    children_.emplace_back(m.left, m.right);
    heights_.push_back(m.height);
    size_[id] = size_[m.left] + size_[m.right];
  }
  for (std::size_t id = total; id-- > 0;) {
    if (parent_[id] != npos) depth_[id] = depth_[parent_[id]] + 1;
  }
}

std::size_t TreeIndex::lca(std::size_t a, std::size_t b) const {
  while (a != b) {
    if (depth_[a] >= depth_[b]) {
      a = parent_[a];
    } else {
      b = parent_[b];
    }
  }
  return a;
}

std::vector<std::size_t> TreeIndex::leaves_under(std::size_t node) const {
  std::vector<std::size_t> out;
  std::vector<std::size_t> stack{node};
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    if (v < n_) {
      out.push_back(v);
    } else {
      stack.push_back(left(v));
      stack.push_back(right(v));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> smallest_common_cluster(const Dendrogram& d, std::size_t a, std::size_t b) {
  const std::size_t n = d.leaf_count();
  if (a >= n || b >= n) throw ValidationError("smallest_common_cluster: unknown leaf");
  if (a == b) throw ValidationError("smallest_common_cluster: leaves must differ");
  TreeIndex tree(d);
  return tree.leaves_under(tree.lca(a, b));
}

namespace {

std::string newick_label(const std::string& label) {
  if (label.find_first_of(" \t\n()[]':;,") == std::string::npos && !label.empty()) return label;
  std::string out = "'";
  for (char c : label) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

void emit_newick(const Dendrogram& d, const TreeIndex& tree, std::size_t node, std::string& out) {
  const std::size_t n = d.leaf_count();
  if (node < n) {
    out += newick_label(d.leaves[node]);
  } else {
    out += '(';
    emit_newick(d, tree, tree.left(node), out);
    out += ',';
    emit_newick(d, tree, tree.right(node), out);
    out += ')';
  }
  if (node != tree.root()) {
    out += ':';
    out += text::format_shortest(tree.height(tree.parent(node)) - tree.height(node));
  }
}

}  // namespace

std::string to_newick(const Dendrogram& d) {
  TreeIndex tree(d);
  std::string out;
  emit_newick(d, tree, tree.root(), out);
  return out + ";";
}

namespace {

class NewickParser {
 public:
  explicit NewickParser(std::string_view s) : s_(s) {}

  struct Node {
    std::string label;
    double length = 0.0;
    std::vector<std::size_t> children;
  };

  std::vector<Node> nodes;

  std::size_t parse_tree() {
    std::size_t root = parse_subtree();
    skip_ws();
    if (peek() != ';') fail("expected ';'");
    ++pos_;
    skip_ws();
    if (pos_ != s_.size()) fail("trailing text after ';'");
    return root;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("newick", 1, what + " at offset " + std::to_string(pos_));
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  std::string parse_label() {
    skip_ws();
    std::string out;
    if (peek() == '\'') {
      ++pos_;
      while (true) {
        if (pos_ >= s_.size()) fail("unterminated quoted label");
        char c = s_[pos_++];
        if (c == '\'') {
          if (peek() == '\'') {
            out += '\'';
            ++pos_;
          } else {
            break;
          }
        } else {
          out += c;
        }
      }
      return out;
    }
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (c == '(' || c == ')' || c == ',' || c == ':' || c == ';' || std::isspace(static_cast<unsigned char>(c))) break;
      out += c;
      ++pos_;
    }
    return out;
  }

  double parse_length() {
    skip_ws();
    if (peek() != ':') return 0.0;
    ++pos_;
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::string_view("0123456789+-.eE").find(s_[pos_]) != std::string_view::npos) ++pos_;
    auto field = s_.substr(start, pos_ - start);
    double v = 0.0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || res.ec != std::errc{} || res.ptr != field.data() + field.size()) fail("bad branch length");
    return v;
  }

  std::size_t parse_subtree() {
    skip_ws();
    Node node;
    if (peek() == '(') {
      ++pos_;
      while (true) {
        node.children.push_back(parse_subtree());
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        if (peek() == ')') {
          ++pos_;
          break;
        }
        fail("expected ',' or ')'");
      }
      node.label = parse_label();
    } else {
      node.label = parse_label();
      if (node.label.empty()) fail("empty leaf label");
    }
    node.length = parse_length();
    nodes.push_back(std::move(node));
    return nodes.size() - 1;
  }
};

}  // namespace

Dendrogram parse_newick(std::string_view text_in) {
  NewickParser parser(text_in);
  std::size_t root = parser.parse_tree();
  auto& nodes = parser.nodes;

  // Nodes are stored in post-order, so children always precede parents.
  Dendrogram d;
  std::vector<std::size_t> id(nodes.size());
  std::vector<double> height(nodes.size(), 0.0);
  std::vector<std::size_t> min_leaf(nodes.size(), 0);
  std::vector<std::size_t> internal;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto& node = nodes[k];
    if (node.length < 0.0) throw ParseError("newick", 1, "negative branch length");
    if (node.children.empty()) {
      id[k] = d.leaves.size();
      min_leaf[k] = id[k];
      d.leaves.push_back(node.label);
      continue;
    }
    if (node.children.size() != 2) throw ParseError("newick", 1, "tree is not binary");
    double h = 0.0;
    for (std::size_t c : node.children) h = std::max(h, height[c] + nodes[c].length);
    height[k] = h;
    min_leaf[k] = std::min(min_leaf[node.children[0]], min_leaf[node.children[1]]);
    internal.push_back(k);
  }
  if (d.leaves.size() < 2 || nodes[root].children.empty()) throw ParseError("newick", 1, "tree needs two leaves");
  {
    std::vector<std::string> sorted = d.leaves;
    std::sort(sorted.begin(), sorted.end());
    auto dup = std::adjacent_find(sorted.begin(), sorted.end());
    if (dup != sorted.end()) throw ValidationError("newick: duplicate leaf label '" + *dup + "'");
  }

  // Parent height >= child height and post-order puts children first, so this order keeps
  // every child id below its parent's.
  std::sort(internal.begin(), internal.end(), [&](std::size_t a, std::size_t b) {
    return height[a] != height[b] ? height[a] < height[b] : a < b;
  });
  const std::size_t n = d.leaves.size();
  std::vector<std::size_t> size(nodes.size(), 1);
  for (std::size_t k = 0; k < internal.size(); ++k) id[internal[k]] = n + k;
  for (std::size_t k : internal) {
    std::size_t c0 = nodes[k].children[0], c1 = nodes[k].children[1];
    if (min_leaf[c1] < min_leaf[c0]) std::swap(c0, c1);
    size[k] = size[c0] + size[c1];
    d.merges.push_back({id[c0], id[c1], height[k], size[k]});
  }
  validate(d);
  return d;
}

Dendrogram read_newick(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_newick(ss.str());
}

std::string format_merge_table(const Dendrogram& d) {
  std::string out = "step,left,right,height,size\n";
  for (std::size_t k = 0; k < d.merges.size(); ++k) {
    const auto& m = d.merges[k];
    out += std::to_string(k) + "," + std::to_string(m.left) + "," + std::to_string(m.right) + "," +
           text::format_double(m.height) + "," + std::to_string(m.size) + "\n";
  }
  return out;
}

Dendrogram parse_merge_table(std::string_view content, const std::string& source, std::vector<std::string> leaves) {
  auto lines = text::split_lines(content);
  if (lines.empty() || text::split_csv(lines.front().text) !=
                           std::vector<std::string>{"step", "left", "right", "height", "size"}) {
    throw ParseError(source, lines.empty() ? 1 : lines.front().number, "header must be 'step,left,right,height,size'");
  }
  Dendrogram d;
  d.leaves = std::move(leaves);
  auto to_index = [&](const std::string& s, std::size_t line) {
    std::size_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw ParseError(source, line, "not a node id: '" + s + "'");
    }
    return v;
  };
  for (std::size_t k = 1; k < lines.size(); ++k) {
    auto cells = text::split_csv(lines[k].text);
    if (cells.size() != 5) throw ParseError(source, lines[k].number, "expected 5 fields");
    if (to_index(cells[0], lines[k].number) != k - 1) throw ParseError(source, lines[k].number, "steps out of order");
    d.merges.push_back({to_index(cells[1], lines[k].number), to_index(cells[2], lines[k].number),
                        text::parse_double(cells[3], source, lines[k].number), to_index(cells[4], lines[k].number)});
  }
  validate(d);
  return d;
}

namespace {

std::string signature_of(const Dendrogram& d, const TreeIndex& tree, std::size_t node) {
  if (node < d.leaf_count()) return newick_label(d.leaves[node]);
  std::string a = signature_of(d, tree, tree.left(node));
  std::string b = signature_of(d, tree, tree.right(node));
  if (b < a) std::swap(a, b);
  return "(" + a + "," + b + ")";
}

}  // namespace

std::string topology_signature(const Dendrogram& d) {
  TreeIndex tree(d);
  return signature_of(d, tree, tree.root());
}

}  // namespace fnet
