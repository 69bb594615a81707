#include "microswarm/accessibility.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace microswarm {

struct BracketExpr::Node {
  int group = -1;               // >= 0 for leaves
  std::vector<BracketExpr> children;  // empty for leaves, two otherwise
  int degree = 1;
  std::string key;
};

BracketExpr::BracketExpr(std::shared_ptr<const Node> node)
    : node_(std::move(node)) {}

BracketExpr BracketExpr::leaf(int group) {
  if (group < 0) throw std::invalid_argument("group index must be nonnegative");
  auto node = std::make_shared<Node>();
  node->group = group;
  node->degree = 1;
  node->key = "f" + std::to_string(group);
  return BracketExpr(std::move(node));
}

BracketExpr BracketExpr::bracket(const BracketExpr& left,
                                 const BracketExpr& right) {
  auto node = std::make_shared<Node>();
  node->children = {left, right};
  node->degree = left.degree() + right.degree();
  node->key = "[" + left.key() + "," + right.key() + "]";
  return BracketExpr(std::move(node));
}

bool BracketExpr::is_leaf() const { return node_->group >= 0; }

int BracketExpr::group() const {
  if (!is_leaf()) throw std::logic_error("group() on a bracket node");
  return node_->group;
}

const BracketExpr& BracketExpr::left() const {
  if (is_leaf()) throw std::logic_error("left() on a leaf");
  return node_->children[0];
}

const BracketExpr& BracketExpr::right() const {
  if (is_leaf()) throw std::logic_error("right() on a leaf");
  return node_->children[1];
}

int BracketExpr::degree() const { return node_->degree; }

Eigen::VectorXi BracketExpr::degree_vector(int m) const {
  Eigen::VectorXi deg = Eigen::VectorXi::Zero(m);
  std::function<void(const BracketExpr&)> walk = [&](const BracketExpr& e) {
    if (e.is_leaf()) {
      if (e.group() >= m) throw std::out_of_range("leaf group exceeds m");
      deg[e.group()] += 1;
      return;
    }
    walk(e.left());
    walk(e.right());
  };
  walk(*this);
  return deg;
}

const std::string& BracketExpr::key() const { return node_->key; }

bool bracket_vanishes_structurally(const BracketExpr& expr) {
  if (expr.is_leaf()) return false;
  const BracketExpr& l = expr.left();
  const BracketExpr& r = expr.right();
  if (!l.is_leaf() && !r.is_leaf()) return true;
  return bracket_vanishes_structurally(l) || bracket_vanishes_structurally(r);
}

void DegreeBudget::validate() const {
  if (exact < 0 || secondary < 0 || others < 0)
    throw std::invalid_argument("degree budgets must be nonnegative");
}

int DegreeBudget::max_degree(int m) const {
  return exact + secondary + others * std::max(0, m - 2);
}

bool DegreeBudget::admits(const Eigen::VectorXi& degrees) const {
  const int m = static_cast<int>(degrees.size());
  for (int i = 0; i < m; ++i) {
    if (degrees[i] != exact) continue;
    for (int j = 0; j < m; ++j) {
      if (j == i || degrees[j] > secondary) continue;
      bool ok = true;
      for (int l = 0; l < m; ++l)
        if (l != i && l != j && degrees[l] > others) ok = false;
      if (ok) return true;
    }
  }
  return false;
}

bool DegreeBudget::admits_subtree(const Eigen::VectorXi& degrees) const {
  const int m = static_cast<int>(degrees.size());
  for (int i = 0; i < m; ++i) {
    if (degrees[i] > exact) continue;
    for (int j = 0; j < m; ++j) {
      if (j == i || degrees[j] > secondary) continue;
      bool ok = true;
      for (int l = 0; l < m; ++l)
        if (l != i && l != j && degrees[l] > others) ok = false;
      if (ok) return true;
    }
  }
  return false;
}

Eigen::VectorXd StructuredField::at(const SwarmState& q) const {
  const int n = static_cast<int>(radial.size());
  if (q.num_robots() != n)
    throw std::invalid_argument("state and field disagree on n");
  Eigen::VectorXd out(3 * n);
  for (int j = 0; j < n; ++j) {
    const double c = std::cos(q.orientation(j));
    const double s = std::sin(q.orientation(j));
    out[2 * j] = radial[j] * c - tangential[j] * s;
    out[2 * j + 1] = radial[j] * s + tangential[j] * c;
    out[2 * n + j] = spin[j];
  }
  return out;
}

StructuredField structured_base_field(int group, const GroupAllocation& alloc,
                                      const SwarmParams& params) {
  const int n = alloc.num_robots();
  const ActivationVector& alpha = alloc.row(group);
  StructuredField f;
  f.radial = Eigen::VectorXd::Zero(n);
  f.tangential = Eigen::VectorXd::Zero(n);
  f.spin = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (alpha.active(j))
      f.radial[j] = 1.0;
    else
      f.spin[j] = params.turn_gain;
  }
  return f;
}

StructuredField structured_bracket(const StructuredField& x,
                                   const StructuredField& y) {
  const auto n = x.radial.size();
  if (y.radial.size() != n)
    throw std::invalid_argument("bracket operands disagree on n");
  StructuredField out;
  out.radial.resize(n);
  out.tangential.resize(n);
  out.spin = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    // d/dtheta_j maps (radial, tangential) to (-tangential, radial);
    // robot j's heading rate under a field is its spin entry.
    out.radial[j] = -x.spin[j] * y.tangential[j] + y.spin[j] * x.tangential[j];
    out.tangential[j] = x.spin[j] * y.radial[j] - y.spin[j] * x.radial[j];
  }
  return out;
}

StructuredField structured_eval(const BracketExpr& expr,
                                const GroupAllocation& alloc,
                                const SwarmParams& params) {
  if (expr.is_leaf())
    return structured_base_field(expr.group(), alloc, params);
  return structured_bracket(structured_eval(expr.left(), alloc, params),
                            structured_eval(expr.right(), alloc, params));
}

namespace {

// Raw-vector evaluation of the per-group field; q is the stacked 3n state.
Eigen::VectorXd field_raw(int group, const Eigen::VectorXd& q,
                          const GroupAllocation& alloc,
                          const SwarmParams& params) {
  const int n = alloc.num_robots();
  const ActivationVector& alpha = alloc.row(group);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(3 * n);
  for (int j = 0; j < n; ++j) {
    if (alpha.active(j)) {
      out[2 * j] = std::cos(q[2 * n + j]);
      out[2 * j + 1] = std::sin(q[2 * n + j]);
    } else {
      out[2 * n + j] = params.turn_gain;
    }
  }
  return out;
}

// Closed-form J_{f_group}(q) * v: only the driving robots' position
// blocks depend on the state, through their own headings.
Eigen::VectorXd leaf_jvp(int group, const Eigen::VectorXd& q,
                         const Eigen::VectorXd& v,
                         const GroupAllocation& alloc) {
  const int n = alloc.num_robots();
  const ActivationVector& alpha = alloc.row(group);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(3 * n);
  for (int j = 0; j < n; ++j) {
    if (!alpha.active(j)) continue;
    const double th = q[2 * n + j];
    const double w = v[2 * n + j];
    out[2 * j] = -std::sin(th) * w;
    out[2 * j + 1] = std::cos(th) * w;
  }
  return out;
}

int rank_of_columns(const std::vector<Eigen::VectorXd>& columns, int rows,
                    double sv_cutoff) {
  if (columns.empty()) return 0;
  Eigen::MatrixXd mat(rows, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) mat.col(c) = columns[c];
  Eigen::BDCSVD<Eigen::MatrixXd> svd(mat);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > sv_cutoff * sv[0]) ++rank;
  return rank;
}

}  // namespace

FieldFn group_field_fn(int group, const GroupAllocation& alloc,
                       const SwarmParams& params) {
  if (group < 0 || group >= alloc.num_groups())
    throw std::out_of_range("group index");
  return [group, alloc, params](const Eigen::VectorXd& q) {
    return field_raw(group, q, alloc, params);
  };
}

Eigen::VectorXd lie_bracket(int group_f, int group_g, const SwarmState& q,
                            const GroupAllocation& alloc,
                            const SwarmParams& params) {
  const Eigen::VectorXd qv = q.to_vector();
  const Eigen::VectorXd vf = field_raw(group_f, qv, alloc, params);
  const Eigen::VectorXd vg = field_raw(group_g, qv, alloc, params);
  return leaf_jvp(group_g, qv, vf, alloc) - leaf_jvp(group_f, qv, vg, alloc);
}

Eigen::MatrixXd fd_jacobian(const FieldFn& f, const Eigen::VectorXd& q,
                            double step) {
  const Eigen::Index dim = q.size();
  Eigen::MatrixXd jac(dim, dim);
  Eigen::VectorXd probe = q;
  for (Eigen::Index l = 0; l < dim; ++l) {
    probe[l] = q[l] + step;
    const Eigen::VectorXd plus = f(probe);
    probe[l] = q[l] - step;
    const Eigen::VectorXd minus = f(probe);
    probe[l] = q[l];
    jac.col(l) = (plus - minus) / (2.0 * step);
  }
  return jac;
}

Eigen::VectorXd lie_bracket_fd(const FieldFn& f, const FieldFn& g,
                               const Eigen::VectorXd& q, double step) {
  return fd_jacobian(g, q, step) * f(q) - fd_jacobian(f, q, step) * g(q);
}

Eigen::VectorXd eval_bracket(const BracketExpr& expr, const SwarmState& q,
                             const GroupAllocation& alloc,
                             const SwarmParams& params) {
  if (q.num_robots() != alloc.num_robots())
    throw std::invalid_argument("state and allocation disagree on n");
  return structured_eval(expr, alloc, params).at(q);
}

std::vector<BracketExpr> enumerate_brackets(const DegreeBudget& budget, int m) {
  budget.validate();
  if (m < 2) throw std::invalid_argument("enumeration needs m >= 2 groups");

  const int max_degree = budget.max_degree(m);
  // trees[d] holds every canonical subtree of total degree d + 1 whose
  // degree vector can still grow into an admitted one.
  std::vector<std::vector<BracketExpr>> trees(
      static_cast<std::size_t>(std::max(max_degree, 0)));
  if (max_degree >= 1) {
    for (int i = 0; i < m; ++i) {
      BracketExpr lf = BracketExpr::leaf(i);
      if (budget.admits_subtree(lf.degree_vector(m))) trees[0].push_back(lf);
    }
  }
  for (int d = 2; d <= max_degree; ++d) {
    auto& bucket = trees[d - 1];
    for (int dl = 1; 2 * dl <= d; ++dl) {
      const int dr = d - dl;
      for (const auto& l : trees[dl - 1]) {
        for (const auto& r : trees[dr - 1]) {
          if (dl == dr && !(l.key() < r.key())) continue;
          BracketExpr node = BracketExpr::bracket(l, r);
          if (budget.admits_subtree(node.degree_vector(m)))
            bucket.push_back(node);
        }
      }
    }
    std::sort(bucket.begin(), bucket.end(),
              [](const BracketExpr& a, const BracketExpr& b) {
                return a.key() < b.key();
              });
  }

  std::vector<BracketExpr> out;
  for (const auto& bucket : trees)
    for (const auto& t : bucket)
      if (budget.admits(t.degree_vector(m))) out.push_back(t);
  return out;
}

int position_rank(const SwarmState& q, const std::vector<BracketExpr>& brackets,
                  const GroupAllocation& alloc, const SwarmParams& params,
                  const RankOptions& options) {
  const int n = q.num_robots();
  std::vector<Eigen::VectorXd> columns;
  columns.reserve(brackets.size());

  int last_degree = brackets.empty() ? 0 : brackets.front().degree();
  int rank = 0;
  auto flush_rank = [&]() {
    rank = rank_of_columns(columns, 2 * n, options.sv_cutoff);
    return rank;
  };

  for (const auto& expr : brackets) {
    if (options.early_stop && expr.degree() != last_degree) {
      if (flush_rank() == 2 * n) return rank;
      last_degree = expr.degree();
    }
    if (options.skip_structural_zeros && bracket_vanishes_structurally(expr))
      continue;
    Eigen::VectorXd value = structured_eval(expr, alloc, params).at(q);
    Eigen::VectorXd pos = value.head(2 * n);
    // Degree-aware zero floor: a degree-d bracket carries d-1 powers of
    // the turn gain, so compare against that scale rather than unity.
    const double floor =
        1e-4 * std::pow(params.turn_gain, expr.degree() - 1) * std::sqrt(n);
    const double norm = pos.norm();
    if (norm <= floor) continue;
    columns.push_back(pos / norm);
  }
  return flush_rank();
}

int position_rank(const SwarmState& q, const GroupAllocation& alloc,
                  const SwarmParams& params) {
  const auto brackets = enumerate_brackets(DegreeBudget{}, alloc.num_groups());
  return position_rank(q, brackets, alloc, params);
}

StateRankReport rank_report_at(const SwarmState& q,
                               const std::vector<BracketExpr>& brackets,
                               const GroupAllocation& alloc,
                               const SwarmParams& params,
                               const RankOptions& options) {
  const int n = q.num_robots();
  std::vector<Eigen::VectorXd> position_columns;
  std::vector<Eigen::VectorXd> orientation_columns;
  int evaluated = 0;
  for (const auto& expr : brackets) {
    if (options.skip_structural_zeros && bracket_vanishes_structurally(expr))
      continue;
    Eigen::VectorXd value = structured_eval(expr, alloc, params).at(q);
    ++evaluated;
    const double floor =
        1e-4 * std::pow(params.turn_gain, expr.degree() - 1) * std::sqrt(n);
    Eigen::VectorXd pos = value.head(2 * n);
    if (pos.norm() > floor) position_columns.push_back(pos / pos.norm());
    Eigen::VectorXd ori = value.tail(n);
    if (ori.norm() > floor) orientation_columns.push_back(ori / ori.norm());
  }
  StateRankReport report;
  report.position_rank =
      rank_of_columns(position_columns, 2 * n, options.sv_cutoff);
  report.orientation_rank =
      rank_of_columns(orientation_columns, n, options.sv_cutoff);
  report.columns_used = static_cast<int>(position_columns.size());
  report.brackets_evaluated = evaluated;
  return report;
}

}  // namespace microswarm
