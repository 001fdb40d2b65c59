#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "drhmc/errors.hpp"

namespace drhmc {

enum class BlockStructure { kDense, kTriDiag };

struct BlockSpec {
  int dim = 0;
  BlockStructure structure = BlockStructure::kDense;
};

inline int total_dim(std::span<const BlockSpec> specs) {
  int d = 0;
  for (const auto& s : specs) d += s.dim;
  return d;
}

// A parameter vector partitioned into ordered blocks. Blocks are contiguous
// in the flat storage.
template <class S>
class Blocked {
 public:
  Blocked() = default;
  Blocked(std::vector<S> flat, std::span<const BlockSpec> specs)
      : flat_(std::move(flat)) {
    offsets_.reserve(specs.size() + 1);
    offsets_.push_back(0);
    for (const auto& s : specs) offsets_.push_back(offsets_.back() + s.dim);
    if (static_cast<int>(flat_.size()) != offsets_.back())
      throw InvalidArgument("Blocked: flat size does not match block dims");
  }

  static Blocked zeros(std::span<const BlockSpec> specs) {
    return Blocked(std::vector<S>(static_cast<std::size_t>(total_dim(specs)),
                                  S(0.0)),
                   specs);
  }

  int block_count() const { return static_cast<int>(offsets_.size()) - 1; }
  int dim() const { return offsets_.empty() ? 0 : offsets_.back(); }
  int block_dim(int r) const { return offsets_[r + 1] - offsets_[r]; }
  int offset(int r) const { return offsets_[r]; }

  std::span<const S> block(int r) const {
    return std::span<const S>(flat_.data() + offsets_[r],
                              static_cast<std::size_t>(block_dim(r)));
  }
  std::span<S> mutable_block(int r) {
    return std::span<S>(flat_.data() + offsets_[r],
                        static_cast<std::size_t>(block_dim(r)));
  }

  const std::vector<S>& flat() const { return flat_; }
  std::vector<S>& mutable_flat() { return flat_; }

 private:
  std::vector<S> flat_;
  std::vector<int> offsets_;
};

// Read-only view of the blocks preceding block `limit`. Scaling and
// location factories receive one of these, which makes it structurally
// impossible for block r to read blocks >= r.
template <class S>
class Prefix {
 public:
  Prefix(const Blocked<S>& v, int limit) : v_(&v), limit_(limit) {}

  int limit() const { return limit_; }
  std::span<const S> block(int r) const {
    if (r >= limit_)
      throw std::logic_error(
          "Prefix: factory attempted to read a non-predecessor block");
    return v_->block(r);
  }

 private:
  const Blocked<S>* v_;
  int limit_;
};

}  // namespace drhmc
