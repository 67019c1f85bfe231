#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace pcmg {

// One Monte Carlo dispatch draw after labeling. attrs follow the attribute
// schema of the learning set it belongs to; profit is the hourly operating
// profit used both for labeling and for rule merit.
struct LabeledSample {
  std::uint32_t sample_index = 0;
  std::vector<double> attrs;
  double profit = 0.0;
  bool feasible = true;
  bool label = false;
};

struct TrainConfig {
  double true_leaf_purity = 0.90;   // leaf when purity strictly above
  double false_leaf_purity = 0.10;  // leaf when purity strictly below
  double alpha = 0.001;             // chi-square stop rule, 1 dof
  double prune_lo = 0.42;           // dead-end purity band removed by pruning
  double prune_hi = 0.58;
  int max_depth = 25;
};

struct SplitCandidate {
  bool valid = false;
  int attr = -1;
  double threshold = 0.0;
  double gain = 0.0;  // normalized, in [0,1]
};

struct DTNode {
  enum class Kind { Internal, Leaf, DeadEnd, Removed };
  int id = 0;  // 1-based creation order; stable for a given LS + config
  Kind kind = Kind::DeadEnd;
  int attr = -1;          // internal nodes: split "attr >= threshold"
  double threshold = 0.0; // left child satisfies, right child does not
  int left = -1, right = -1, parent = -1;  // indices into DecisionTree::nodes
  int depth = 0;
  std::vector<std::uint32_t> subset;  // training sample positions
  int n_true = 0;
  double purity = 0.0;  // fraction of True in subset
  bool promoted = false;  // no-True-leaf fallback
};

struct DecisionTree {
  std::vector<DTNode> nodes;  // nodes[0] is the root
  std::vector<std::string> attr_names;
  std::size_t trained_on = 0;  // size of the training vector
};

struct Predicate {
  int attr = -1;
  bool geq = true;  // true: attr >= threshold, false: attr < threshold
  double threshold = 0.0;
};

struct Rule {
  std::vector<Predicate> predicates;  // conjunction, root-to-leaf order
  int leaf_id = 0;
  double purity = 0.0;
  bool promoted = false;
  int true_count = 0;
  double min_true_profit = 0.0;
  double mean_true_profit = 0.0;
  // mean attribute vector over the leaf's True samples: the dispatch this
  // rule stands for, used by reports and rule-selection diagnostics
  std::vector<double> mean_true_attrs;
};

struct MrReport {
  double mr = 0.0;
  double mrr = 0.0;
  int test_size = 0;
  int misclassified = 0;
  int true_rule_related = 0;
};

// Shannon entropy of a boolean class split, bits.
double entropy(int n_true, int n_total);

// Normalized average mutual information gain of a candidate split:
// [H(parent) - (nl/n)H(left) - (nr/n)H(right)] / H(parent), 0 when the parent
// is pure, clamped into [0,1].
double info_gain(int parent_true, int parent_total, int left_true,
                 int left_total, int right_true, int right_total);

// Exhausts every attribute and every midpoint between consecutive distinct
// sorted values; maximizes normalized gain; ties resolved to the lowest
// attribute index, then the lowest threshold.
SplitCandidate best_split(const std::vector<LabeledSample>& samples,
                          const std::vector<std::uint32_t>& subset);

// Carlett/Quinlan-style stop rule: 2x2 contingency of children x classes,
// expected counts from the parent ratio, 1 degree of freedom. Accepts only if
// the statistic strictly exceeds the critical value; any zero expected cell
// rejects. The critical value is computed from the chi-square CDF.
double chi2_statistic(int left_true, int left_false, int right_true,
                      int right_false);
double chi2_critical(double alpha);
bool chi2_accept(int left_true, int left_false, int right_true,
                 int right_false, double alpha);

// Grows the tree expanding, at every step, the open node whose best split has
// maximum normalized gain; stops per node on purity bounds, chi-square
// rejection, exhausted attributes, or depth cap; then retracts dead-end splits
// in the prune band and finally promotes the highest-purity dead-end when no
// True leaf exists. Deterministic: no RNG, fixed tie-breaks.
DecisionTree train(const std::vector<LabeledSample>& samples,
                   const std::vector<std::string>& attr_names,
                   const TrainConfig& cfg = {});

// One Rule per True leaf (purity above the leaf bound, or promoted),
// merit-ordered by descending mean profit of the leaf's True samples.
// `samples` must be the training vector the tree was grown on.
std::vector<Rule> extract_rules(const DecisionTree& tree,
                                const std::vector<LabeledSample>& samples);

// Root-to-terminal descent, left when "attr >= threshold" holds.
// Returns (predicted label, terminal node id).
std::pair<bool, int> classify(const DecisionTree& tree,
                              const std::vector<double>& attrs);

// mr: fraction of the test set misclassified. mrr: fraction misclassified in a
// way that concerns True rules (lands on a True-rule terminal while labeled
// False, or is labeled True and cannot be described by any True rule).
// mrr <= mr by construction.
MrReport evaluate_mr(const DecisionTree& tree,
                     const std::vector<LabeledSample>& test_set);

// Every 3rd sample by sample_index (index % 3 == 2) goes to the test set.
std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>>
split_train_test(const std::vector<LabeledSample>& all);

std::string rule_text(const Rule& r, const std::vector<std::string>& attr_names);

}  // namespace pcmg
