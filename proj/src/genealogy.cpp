#include "pitsim/genealogy.hpp"

#include <algorithm>

namespace pitsim {

std::optional<std::int64_t> Genealogy::parent_of(std::int64_t id) const {
  if (id <= 0 || static_cast<std::size_t>(id) > parents_.size()) return std::nullopt;
  return parents_[static_cast<std::size_t>(id - 1)];
}

std::vector<std::int64_t> Genealogy::lineage(std::int64_t id) const {
  std::vector<std::int64_t> out{id};
  while (auto p = parent_of(out.back())) out.push_back(*p);
  return out;
}

bool Genealogy::is_tree_rooted_at_zero(std::size_t n) const {
  const std::size_t upto = std::min(n, parents_.size());
  for (std::size_t k = 0; k < upto; ++k) {
    const auto child = static_cast<std::int64_t>(k + 1);
    const auto parent = parents_[k];
    // Parents precede children, so following parents terminates; for a tree
    // rooted at 0 no lineage may leave through a negative id.
    if (parent < 0 || parent >= child) return false;
  }
  return true;
}

}  // namespace pitsim
