#include "skilltree/hrl/replay.hpp"

namespace skilltree::hrl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  require(capacity >= 1, "replay capacity must be >= 1");
}

void ReplayBuffer::push(SkillTransition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const SkillTransition& ReplayBuffer::at(std::size_t i) const {
  require(i < items_.size(), "replay index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::vector<const SkillTransition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  require(!items_.empty(), "sampling from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<const SkillTransition*> out(n);
  for (auto& p : out) p = &items_[pick(rng)];
  return out;
}

}  // namespace skilltree::hrl
