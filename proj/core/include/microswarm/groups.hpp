#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace microswarm {

/// Binary membership indicator of one group over the n robots.
/// Robots with bit 1 drive forward when the group is activated; the
/// rest rotate in place.
class ActivationVector {
 public:
  ActivationVector() = default;
  explicit ActivationVector(std::vector<std::uint8_t> bits);

  int size() const { return static_cast<int>(bits_.size()); }
  bool active(int robot) const { return bits_[robot] != 0; }
  int active_count() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool operator==(const ActivationVector& other) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// m-by-n binary membership matrix. Row i is the activation vector of
/// group i. Valid allocations have pairwise-distinct columns, none
/// all-zero and none all-one, with m = ceil(log2(n + 2)).
class GroupAllocation {
 public:
  GroupAllocation(int num_groups, int num_robots,
                  std::vector<ActivationVector> rows);

  int num_groups() const { return m_; }
  int num_robots() const { return n_; }
  const ActivationVector& row(int group) const;
  bool member(int group, int robot) const { return rows_[group].active(robot); }

  /// Groups the given robot belongs to.
  std::vector<int> groups_of(int robot) const;

 private:
  int m_ = 0;
  int n_ = 0;
  std::vector<ActivationVector> rows_;
};

/// Fixed-width bit string addressing one group through the on-board
/// state machines.
struct GroupCode {
  int group = 0;
  std::string symbols;
};

/// Minimal number of groups for n robots: ceil(log2(n + 2)). The +2
/// accounts for the excluded all-zero and all-one membership columns.
int num_groups(int num_robots);

/// Assign robot j (0-indexed) the binary encoding of j + 1, most
/// significant bit in group 0. Throws std::invalid_argument for n < 2.
GroupAllocation allocate_groups(int num_robots);

/// Width of a group address in symbols: ceil(log2(m)).
int code_width(int num_groups);

/// Fixed-width binary encoding of a group index. Throws
/// std::out_of_range for an invalid index.
GroupCode encode_group(int group, int num_groups);

/// Decode a symbol frame the way every robot's on-board machine does:
/// the frame addresses one group and the addressed group's activation
/// vector results. Throws std::invalid_argument when the frame has the
/// wrong width or addresses no group.
ActivationVector pfsm_activate(const std::string& code_stream,
                               const GroupAllocation& alloc);

}  // namespace microswarm
