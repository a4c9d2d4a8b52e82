#include "transtext/params.hpp"

#include <functional>
#include <numeric>
#include <stdexcept>

namespace transtext {

std::size_t ParamStore::add(std::string name, std::vector<std::size_t> shape, double fill) {
  if (find(name)) throw std::invalid_argument("ParamStore: duplicate tensor '" + name + "'");
  ParamEntry e;
  e.name = std::move(name);
  e.size = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  e.shape = std::move(shape);
  e.offset = data_.size();
  data_.resize(data_.size() + e.size, fill);
  entries_.push_back(std::move(e));
  return entries_.size() - 1;
}

std::optional<std::size_t> ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  return std::nullopt;
}

bool ParamStore::same_layout(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name || entries_[i].shape != other.entries_[i].shape) return false;
  }
  return true;
}

}  // namespace transtext
