#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "microswarm/swarm.hpp"

namespace microswarm {

/// A vector field on the stacked 3n state (positions then orientations).
using FieldFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Binary bracket expression over the per-group control fields. Leaves
/// are group indices; internal nodes are bracket applications [left, right].
/// Instances share immutable subtrees, so copies are cheap.
class BracketExpr {
 public:
  static BracketExpr leaf(int group);
  static BracketExpr bracket(const BracketExpr& left, const BracketExpr& right);

  bool is_leaf() const;
  int group() const;  // leaf only
  const BracketExpr& left() const;
  const BracketExpr& right() const;

  /// Total number of leaves.
  int degree() const;
  /// Leaf count per group index, length m.
  Eigen::VectorXi degree_vector(int m) const;
  /// Canonical printable form, e.g. "[f0,[f0,f1]]".
  const std::string& key() const;

 private:
  struct Node;
  explicit BracketExpr(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

/// True when the expression vanishes identically for this field class:
/// every bracket carries a zero rotation-rate part, and the fields are
/// insensitive to positions, so a bracket of two non-leaf brackets is
/// the zero field at every state.
bool bracket_vanishes_structurally(const BracketExpr& expr);

/// Multidegree constraints on bracket expressions: exactly `exact`
/// factors of one group, at most `secondary` of a second, at most
/// `others` of each remaining group.
struct DegreeBudget {
  int exact = 1;
  int secondary = 3;
  int others = 2;

  void validate() const;
  /// Largest admissible total degree for m groups.
  int max_degree(int m) const;
  /// Whether a complete expression with this degree vector is admitted.
  bool admits(const Eigen::VectorXi& degrees) const;
  /// Whether a subtree with this degree vector can still grow into an
  /// admitted expression.
  bool admits_subtree(const Eigen::VectorXi& degrees) const;
};

/// The control fields and all their iterated brackets stay inside one
/// small class: robot j's position block is radial_j * (cos, sin) +
/// tangential_j * (-sin, cos) of its own heading, and the rotation-rate
/// part is a constant. Brackets then have closed-form Jacobians at
/// every depth, so nested evaluations carry no differencing error.
struct StructuredField {
  Eigen::VectorXd radial;      // n
  Eigen::VectorXd tangential;  // n
  Eigen::VectorXd spin;        // n

  /// The field value at the given headings, as a stacked 3n vector.
  Eigen::VectorXd at(const SwarmState& q) const;
};

/// Structured form of the per-group base field.
StructuredField structured_base_field(int group, const GroupAllocation& alloc,
                                      const SwarmParams& params);

/// Exact bracket within the structured class: robot j picks up the
/// quarter-turned coefficients of each side scaled by the other side's
/// rotation rate, and the resulting rotation-rate part is zero.
StructuredField structured_bracket(const StructuredField& x,
                                   const StructuredField& y);

/// Structured (state-independent) coefficients of a bracket expression.
StructuredField structured_eval(const BracketExpr& expr,
                                const GroupAllocation& alloc,
                                const SwarmParams& params);

/// The per-group control field as a function of the raw 3n state vector.
FieldFn group_field_fn(int group, const GroupAllocation& alloc,
                       const SwarmParams& params);

/// Bracket [f, g](q) = Dg*f - Df*g of two per-group base fields with
/// Jacobians in closed form (the only state dependence is the heading
/// direction in each driving robot's position block).
Eigen::VectorXd lie_bracket(int group_f, int group_g, const SwarmState& q,
                            const GroupAllocation& alloc,
                            const SwarmParams& params);

/// Generic bracket with central finite-difference Jacobians; the
/// independent cross-check for the closed-form and nested evaluations.
Eigen::VectorXd lie_bracket_fd(const FieldFn& f, const FieldFn& g,
                               const Eigen::VectorXd& q, double step = 1e-6);

/// Full central finite-difference Jacobian of a field.
Eigen::MatrixXd fd_jacobian(const FieldFn& f, const Eigen::VectorXd& q,
                            double step = 1e-6);

/// Evaluate a bracket expression at q through the structured class,
/// which is exact at every nesting depth. lie_bracket_fd is the
/// independent differencing cross-check for shallow expressions (a
/// cascade of differences loses all significant digits beyond depth
/// four at these field scales, so it cannot serve as the evaluator).
Eigen::VectorXd eval_bracket(const BracketExpr& expr, const SwarmState& q,
                             const GroupAllocation& alloc,
                             const SwarmParams& params);

/// All bracket expressions over m groups whose degree vectors satisfy
/// the budget for some assignment of the exact/secondary roles,
/// including the base fields. Each expression appears once up to
/// antisymmetry: children are ordered by (degree, key), which drops the
/// mirrored form and any [x, x]. Sorted by degree, then key.
std::vector<BracketExpr> enumerate_brackets(const DegreeBudget& budget, int m);

struct RankOptions {
  /// Relative singular-value cutoff for the numerical rank.
  double sv_cutoff = 1e-8;
  /// Skip expressions that vanish structurally (their columns are zero).
  bool skip_structural_zeros = true;
  /// Stop evaluating once the position rank reaches 2n.
  bool early_stop = true;
};

/// Numerical rank of the enumerated bracket evaluations restricted to
/// the 2n position coordinates. Columns are scaled to unit norm before
/// the SVD so that the relative cutoff is insensitive to the turn-gain
/// powers deep brackets carry; near-zero columns (below a degree-aware
/// floor) are dropped.
int position_rank(const SwarmState& q, const std::vector<BracketExpr>& brackets,
                  const GroupAllocation& alloc, const SwarmParams& params,
                  const RankOptions& options = {});

/// Convenience overload enumerating with the default budget.
int position_rank(const SwarmState& q, const GroupAllocation& alloc,
                  const SwarmParams& params);

struct StateRankReport {
  int position_rank = 0;
  /// Rank of the same evaluations on the n orientation coordinates;
  /// reported for diagnosis only (only the base fields contribute).
  int orientation_rank = 0;
  int columns_used = 0;
  int brackets_evaluated = 0;
};

/// Detailed per-state report (no early stop).
StateRankReport rank_report_at(const SwarmState& q,
                               const std::vector<BracketExpr>& brackets,
                               const GroupAllocation& alloc,
                               const SwarmParams& params,
                               const RankOptions& options = {});

}  // namespace microswarm
