#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace pitsim {

/// Ancestral tree of mutations: type i >= 1 arose from parent(i) < i.
class Genealogy {
 public:
  Genealogy() = default;
  /// parents[k] is the parent of type k+1.
  explicit Genealogy(std::vector<std::int64_t> parents) : parents_(std::move(parents)) {}

  void add_child(std::int64_t parent) { parents_.push_back(parent); }

  std::size_t size() const { return parents_.size(); }
  std::int64_t root() const { return 0; }
  /// nullopt for ids <= 0.
  std::optional<std::int64_t> parent_of(std::int64_t id) const;
  const std::vector<std::int64_t>& parents() const { return parents_; }

  /// id, parent(id), parent(parent(id)), ... down to the first id <= 0.
  std::vector<std::int64_t> lineage(std::int64_t id) const;

  /// Restricted to {0..n}: every parent precedes its child and every
  /// lineage ends at the root.
  bool is_tree_rooted_at_zero(std::size_t n) const;

  friend bool operator==(const Genealogy&, const Genealogy&) = default;

 private:
  std::vector<std::int64_t> parents_;
};

}  // namespace pitsim
