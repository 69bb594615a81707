#include "microswarm/groups.hpp"

#include <stdexcept>

namespace microswarm {

ActivationVector::ActivationVector(std::vector<std::uint8_t> bits)
    : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) throw std::invalid_argument("activation bits must be 0 or 1");
  }
}

int ActivationVector::active_count() const {
  int count = 0;
  for (auto b : bits_) count += b;
  return count;
}

GroupAllocation::GroupAllocation(int num_groups, int num_robots,
                                 std::vector<ActivationVector> rows)
    : m_(num_groups), n_(num_robots), rows_(std::move(rows)) {
  if (m_ < 2) throw std::invalid_argument("group allocation needs m >= 2");
  if (n_ < 2) throw std::invalid_argument("group allocation needs n >= 2");
  if (static_cast<int>(rows_.size()) != m_)
    throw std::invalid_argument("row count does not match group count");
  for (const auto& row : rows_) {
    if (row.size() != n_)
      throw std::invalid_argument("activation vector length does not match n");
  }
  // Column validity: each robot in >= 1 and < m groups, all columns distinct.
  std::vector<std::uint32_t> columns(n_, 0);
  for (int j = 0; j < n_; ++j) {
    std::uint32_t col = 0;
    for (int i = 0; i < m_; ++i) col = (col << 1) | (rows_[i].active(j) ? 1u : 0u);
    if (col == 0) throw std::invalid_argument("robot belongs to no group");
    if (col == (1u << m_) - 1)
      throw std::invalid_argument("robot belongs to every group");
    columns[j] = col;
  }
  for (int a = 0; a < n_; ++a)
    for (int b = a + 1; b < n_; ++b)
      if (columns[a] == columns[b])
        throw std::invalid_argument("two robots share the same group subset");
}

const ActivationVector& GroupAllocation::row(int group) const {
  if (group < 0 || group >= m_) throw std::out_of_range("group index");
  return rows_[group];
}

std::vector<int> GroupAllocation::groups_of(int robot) const {
  if (robot < 0 || robot >= n_) throw std::out_of_range("robot index");
  std::vector<int> out;
  for (int i = 0; i < m_; ++i)
    if (rows_[i].active(robot)) out.push_back(i);
  return out;
}

int num_groups(int num_robots) {
  if (num_robots < 2) throw std::invalid_argument("need at least 2 robots");
  int m = 1;
  while ((1LL << m) < static_cast<long long>(num_robots) + 2) ++m;
  return m;
}

GroupAllocation allocate_groups(int num_robots) {
  const int m = num_groups(num_robots);
  std::vector<ActivationVector> rows;
  rows.reserve(m);
  for (int i = 0; i < m; ++i) {
    std::vector<std::uint8_t> bits(num_robots, 0);
    for (int j = 0; j < num_robots; ++j) {
      // Robot j carries the m-bit encoding of j + 1, MSB in group 0.
      bits[j] = static_cast<std::uint8_t>(((j + 1) >> (m - 1 - i)) & 1);
    }
    rows.emplace_back(std::move(bits));
  }
  return GroupAllocation(m, num_robots, std::move(rows));
}

int code_width(int num_groups) {
  if (num_groups < 2) throw std::invalid_argument("need at least 2 groups");
  int w = 1;
  while ((1 << w) < num_groups) ++w;
  return w;
}

GroupCode encode_group(int group, int num_groups) {
  if (group < 0 || group >= num_groups) throw std::out_of_range("group index");
  const int w = code_width(num_groups);
  std::string symbols(w, '0');
  for (int b = 0; b < w; ++b)
    if ((group >> (w - 1 - b)) & 1) symbols[b] = '1';
  return GroupCode{group, std::move(symbols)};
}

ActivationVector pfsm_activate(const std::string& code_stream,
                               const GroupAllocation& alloc) {
  const int w = code_width(alloc.num_groups());
  if (static_cast<int>(code_stream.size()) != w)
    throw std::invalid_argument("code stream has wrong symbol count");
  int value = 0;
  for (char c : code_stream) {
    if (c != '0' && c != '1')
      throw std::invalid_argument("code stream symbols must be 0 or 1");
    value = (value << 1) | (c == '1' ? 1 : 0);
  }
  if (value >= alloc.num_groups())
    throw std::invalid_argument("code stream addresses no group");
  return alloc.row(value);
}

}  // namespace microswarm
