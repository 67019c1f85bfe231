#include "pcmg/dtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pcmg {

double entropy(int n_true, int n_total) {
  if (n_total <= 0 || n_true <= 0 || n_true >= n_total) return 0.0;
  const double p = static_cast<double>(n_true) / n_total;
  const double q = 1.0 - p;
  return -p * std::log2(p) - q * std::log2(q);
}

double info_gain(int parent_true, int parent_total, int left_true,
                 int left_total, int right_true, int right_total) {
  const double hp = entropy(parent_true, parent_total);
  if (hp <= 0.0) return 0.0;
  const double n = static_cast<double>(parent_total);
  const double g = (hp - (left_total / n) * entropy(left_true, left_total) -
                    (right_total / n) * entropy(right_true, right_total)) /
                   hp;
  return std::clamp(g, 0.0, 1.0);
}

SplitCandidate best_split(const std::vector<LabeledSample>& samples,
                          const std::vector<std::uint32_t>& subset) {
  SplitCandidate best;
  if (subset.size() < 2) return best;
  const size_t n_attr = samples[subset[0]].attrs.size();
  int parent_true = 0;
  for (auto i : subset) parent_true += samples[i].label ? 1 : 0;
  const int n = static_cast<int>(subset.size());

  std::vector<std::pair<double, bool>> col(subset.size());
  for (size_t a = 0; a < n_attr; ++a) {
    for (size_t k = 0; k < subset.size(); ++k)
      col[k] = {samples[subset[k]].attrs[a], samples[subset[k]].label};
    std::sort(col.begin(), col.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    int left_true = 0;
    for (int k = 0; k + 1 < n; ++k) {
      left_true += col[k].second ? 1 : 0;
      if (col[k].first == col[k + 1].first) continue;
      const double thr = (col[k].first + col[k + 1].first) / 2.0;
      // left child holds "attr >= thr": the upper part of the sorted column
      const int lo_total = k + 1;
      const int hi_total = n - lo_total;
      const int hi_true = parent_true - left_true;
      const double g = info_gain(parent_true, n, hi_true, hi_total, left_true,
                                 lo_total);
      if (!best.valid || g > best.gain) {
        best.valid = true;
        best.attr = static_cast<int>(a);
        best.threshold = thr;
        best.gain = g;
      }
    }
  }
  return best;
}

double chi2_statistic(int left_true, int left_false, int right_true,
                      int right_false) {
  const double nl = left_true + left_false;
  const double nr = right_true + right_false;
  const double n = nl + nr;
  const double pt = (left_true + right_true) / n;
  const double pf = (left_false + right_false) / n;
  const double e[4] = {nl * pt, nl * pf, nr * pt, nr * pf};
  const double o[4] = {static_cast<double>(left_true),
                       static_cast<double>(left_false),
                       static_cast<double>(right_true),
                       static_cast<double>(right_false)};
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (e[i] <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    s += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
  }
  return s;
}

// chi-square CDF with 1 dof is erf(sqrt(x/2)); invert by bisection.
double chi2_critical(double alpha) {
  if (alpha <= 0.0 || alpha >= 1.0)
    throw std::invalid_argument("alpha must be in (0,1)");
  double lo = 0.0, hi = 400.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double tail = 1.0 - std::erf(std::sqrt(mid / 2.0));
    if (tail > alpha)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

bool chi2_accept(int left_true, int left_false, int right_true,
                 int right_false, double alpha) {
  const double s = chi2_statistic(left_true, left_false, right_true, right_false);
  if (std::isnan(s)) return false;  // a zero expected cell: nothing to test
  return s > chi2_critical(alpha);
}

namespace {

struct OpenNode {
  int index;
  SplitCandidate split;
};

int make_node(DecisionTree& tree, const std::vector<LabeledSample>& samples,
              std::vector<std::uint32_t> subset, int depth, int parent) {
  DTNode nd;
  nd.id = static_cast<int>(tree.nodes.size()) + 1;
  nd.depth = depth;
  nd.parent = parent;
  nd.subset = std::move(subset);
  for (auto i : nd.subset) nd.n_true += samples[i].label ? 1 : 0;
  nd.purity = nd.subset.empty()
                  ? 0.0
                  : static_cast<double>(nd.n_true) / nd.subset.size();
  tree.nodes.push_back(std::move(nd));
  return static_cast<int>(tree.nodes.size()) - 1;
}

bool is_terminal(const DTNode& n) {
  return n.kind == DTNode::Kind::Leaf || n.kind == DTNode::Kind::DeadEnd;
}

bool in_prune_band(const DTNode& n, const TrainConfig& cfg) {
  return n.kind == DTNode::Kind::DeadEnd && n.purity >= cfg.prune_lo &&
         n.purity <= cfg.prune_hi;
}

// Decide leaf/dead-end/openness for a freshly created node.
void triage(DecisionTree& tree, const std::vector<LabeledSample>& samples,
            int idx, const TrainConfig& cfg, std::vector<OpenNode>& open) {
  DTNode& nd = tree.nodes[idx];
  // The purity bounds stop recursion below an attempted split; the root must
  // try one first, otherwise a learning set whose class prior sits at a bound
  // (e.g. top-10% profit labeling) could never be learned at all.
  const bool settled = nd.depth == 0
                           ? (nd.purity == 0.0 || nd.purity == 1.0)
                           : (nd.purity > cfg.true_leaf_purity ||
                              nd.purity < cfg.false_leaf_purity);
  if (settled) {
    nd.kind = DTNode::Kind::Leaf;
    return;
  }
  if (nd.depth >= cfg.max_depth) {
    nd.kind = DTNode::Kind::DeadEnd;
    return;
  }
  const SplitCandidate sc = best_split(samples, nd.subset);
  if (!sc.valid) {
    nd.kind = DTNode::Kind::DeadEnd;
    return;
  }
  int lt = 0, lf = 0;
  for (auto i : nd.subset) {
    const bool left = samples[i].attrs[sc.attr] >= sc.threshold;
    if (left)
      samples[i].label ? ++lt : ++lf;
  }
  const int rt = nd.n_true - lt;
  const int rf = static_cast<int>(nd.subset.size()) - nd.n_true - lf;
  if (!chi2_accept(lt, lf, rt, rf, cfg.alpha)) {
    nd.kind = DTNode::Kind::DeadEnd;
    return;
  }
  open.push_back({idx, sc});
}

}  // namespace

DecisionTree train(const std::vector<LabeledSample>& samples,
                   const std::vector<std::string>& attr_names,
                   const TrainConfig& cfg) {
  if (samples.empty()) throw std::invalid_argument("empty learning set");
  for (const auto& s : samples) {
    if (s.attrs.size() != attr_names.size())
      throw std::invalid_argument("attribute count mismatch");
    for (double v : s.attrs)
      if (!std::isfinite(v))
        throw std::invalid_argument("non-finite attribute value");
  }

  DecisionTree tree;
  tree.attr_names = attr_names;
  tree.trained_on = samples.size();

  std::vector<std::uint32_t> all(samples.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
  std::vector<OpenNode> open;
  triage(tree, samples, make_node(tree, samples, std::move(all), 0, -1), cfg,
         open);

  while (!open.empty()) {
    // expand the open node whose split carries the maximum normalized gain
    size_t pick = 0;
    for (size_t i = 1; i < open.size(); ++i) {
      if (open[i].split.gain > open[pick].split.gain ||
          (open[i].split.gain == open[pick].split.gain &&
           tree.nodes[open[i].index].id < tree.nodes[open[pick].index].id))
        pick = i;
    }
    const OpenNode chosen = open[pick];
    open.erase(open.begin() + pick);

    std::vector<std::uint32_t> ls, rs;
    for (auto i : tree.nodes[chosen.index].subset) {
      if (samples[i].attrs[chosen.split.attr] >= chosen.split.threshold)
        ls.push_back(i);
      else
        rs.push_back(i);
    }
    const int depth = tree.nodes[chosen.index].depth + 1;
    const int li = make_node(tree, samples, std::move(ls), depth, chosen.index);
    const int ri = make_node(tree, samples, std::move(rs), depth, chosen.index);
    {
      DTNode& nd = tree.nodes[chosen.index];
      nd.kind = DTNode::Kind::Internal;
      nd.attr = chosen.split.attr;
      nd.threshold = chosen.split.threshold;
      nd.left = li;
      nd.right = ri;
    }
    triage(tree, samples, li, cfg, open);
    triage(tree, samples, ri, cfg, open);
  }

  // dumb pruning: retract splits whose terminal children sit in the band
  for (bool changed = true; changed;) {
    changed = false;
    for (size_t q = tree.nodes.size(); q-- > 0;) {
      DTNode& nd = tree.nodes[q];
      if (nd.kind != DTNode::Kind::Internal) continue;
      DTNode& l = tree.nodes[nd.left];
      DTNode& r = tree.nodes[nd.right];
      if (!is_terminal(l) || !is_terminal(r)) continue;
      if (in_prune_band(l, cfg) || in_prune_band(r, cfg)) {
        l.kind = DTNode::Kind::Removed;
        r.kind = DTNode::Kind::Removed;
        nd.kind = DTNode::Kind::DeadEnd;  // internal purity is never leaf-pure
        nd.attr = -1;
        nd.left = nd.right = -1;
        changed = true;
      }
    }
  }

  // no-True-leaf fallback
  bool has_true_leaf = false;
  for (const auto& nd : tree.nodes)
    if (nd.kind == DTNode::Kind::Leaf && nd.purity > cfg.true_leaf_purity)
      has_true_leaf = true;
  if (!has_true_leaf) {
    int cand = -1;
    for (size_t i = 0; i < tree.nodes.size(); ++i) {
      const auto& nd = tree.nodes[i];
      if (nd.kind != DTNode::Kind::DeadEnd) continue;
      if (cand < 0 || nd.purity > tree.nodes[cand].purity) cand = static_cast<int>(i);
    }
    if (cand >= 0) {
      tree.nodes[cand].kind = DTNode::Kind::Leaf;
      tree.nodes[cand].promoted = true;
    }
  }
  return tree;
}

std::vector<Rule> extract_rules(const DecisionTree& tree,
                                const std::vector<LabeledSample>& samples) {
  if (samples.size() != tree.trained_on)
    throw std::invalid_argument("rules must be extracted from the training set");
  const TrainConfig cfg;  // purity bounds for True-leaf identification

  std::vector<int> terminals;
  for (size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& nd = tree.nodes[i];
    if (nd.promoted ||
        (nd.kind == DTNode::Kind::Leaf && nd.purity > cfg.true_leaf_purity))
      terminals.push_back(static_cast<int>(i));
  }
  bool fallback = false;
  if (terminals.empty()) {
    int cand = -1;
    for (size_t i = 0; i < tree.nodes.size(); ++i) {
      const auto& nd = tree.nodes[i];
      if (nd.kind != DTNode::Kind::DeadEnd) continue;
      if (cand < 0 || nd.purity > tree.nodes[cand].purity) cand = static_cast<int>(i);
    }
    if (cand >= 0) {
      terminals.push_back(cand);
      fallback = true;
    }
  }

  std::vector<Rule> rules;
  for (int ti : terminals) {
    Rule r;
    r.leaf_id = tree.nodes[ti].id;
    r.purity = tree.nodes[ti].purity;
    r.promoted = tree.nodes[ti].promoted || fallback;
    for (int cur = ti; tree.nodes[cur].parent >= 0; cur = tree.nodes[cur].parent) {
      const auto& par = tree.nodes[tree.nodes[cur].parent];
      r.predicates.push_back(
          {par.attr, par.left == cur, par.threshold});
    }
    std::reverse(r.predicates.begin(), r.predicates.end());
    double sum = 0.0;
    r.min_true_profit = std::numeric_limits<double>::infinity();
    const std::size_t width = samples.empty() ? 0 : samples[0].attrs.size();
    r.mean_true_attrs.assign(width, 0.0);
    for (auto i : tree.nodes[ti].subset) {
      if (!samples[i].label) continue;
      ++r.true_count;
      sum += samples[i].profit;
      r.min_true_profit = std::min(r.min_true_profit, samples[i].profit);
      for (std::size_t a = 0; a < width; ++a)
        r.mean_true_attrs[a] += samples[i].attrs[a];
    }
    r.mean_true_profit = r.true_count ? sum / r.true_count : 0.0;
    if (!r.true_count) r.min_true_profit = 0.0;
    if (r.true_count)
      for (double& v : r.mean_true_attrs) v /= r.true_count;
    rules.push_back(std::move(r));
  }
  std::sort(rules.begin(), rules.end(), [](const Rule& a, const Rule& b) {
    if (a.mean_true_profit != b.mean_true_profit)
      return a.mean_true_profit > b.mean_true_profit;
    return a.leaf_id < b.leaf_id;
  });
  return rules;
}

std::pair<bool, int> classify(const DecisionTree& tree,
                              const std::vector<double>& attrs) {
  if (tree.nodes.empty()) throw std::invalid_argument("empty tree");
  int cur = 0;
  while (tree.nodes[cur].kind == DTNode::Kind::Internal) {
    const auto& nd = tree.nodes[cur];
    if (nd.attr >= static_cast<int>(attrs.size()))
      throw std::invalid_argument("attribute vector too short");
    cur = attrs[nd.attr] >= nd.threshold ? nd.left : nd.right;
  }
  const auto& t = tree.nodes[cur];
  const bool label = t.promoted || t.purity >= 0.5;
  return {label, t.id};
}

MrReport evaluate_mr(const DecisionTree& tree,
                     const std::vector<LabeledSample>& test_set) {
  if (test_set.empty())
    throw std::invalid_argument("empty test set");
  const TrainConfig cfg;
  MrReport rep;
  rep.test_size = static_cast<int>(test_set.size());
  for (const auto& s : test_set) {
    auto [pred, id] = classify(tree, s.attrs);
    if (pred == s.label) continue;
    ++rep.misclassified;
    const auto& t = tree.nodes[id - 1];
    const bool true_rule_terminal =
        t.promoted ||
        (t.kind == DTNode::Kind::Leaf && t.purity > cfg.true_leaf_purity);
    if (true_rule_terminal || s.label) ++rep.true_rule_related;
  }
  rep.mr = static_cast<double>(rep.misclassified) / rep.test_size;
  rep.mrr = static_cast<double>(rep.true_rule_related) / rep.test_size;
  return rep;
}

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>>
split_train_test(const std::vector<LabeledSample>& all) {
  std::vector<LabeledSample> train, test;
  for (const auto& s : all)
    (s.sample_index % 3 == 2 ? test : train).push_back(s);
  return {std::move(train), std::move(test)};
}

std::string rule_text(const Rule& r, const std::vector<std::string>& attr_names) {
  std::ostringstream os;
  os << "if ";
  if (r.predicates.empty()) os << "(always)";
  for (size_t i = 0; i < r.predicates.size(); ++i) {
    const auto& p = r.predicates[i];
    if (i) os << " and ";
    os << "(" << attr_names.at(p.attr) << (p.geq ? " ≥ " : " < ");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", p.threshold);
    os << buf << ")";
  }
  os << " then TRUE";
  char pb[48];
  std::snprintf(pb, sizeof pb, " (purity≈%.0f%%%s)", r.purity * 100.0,
                r.promoted ? ", promoted dead-end" : "");
  os << pb;
  return os.str();
}

}  // namespace pcmg
