#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace transtext {

struct ParamEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Named tensors packed into one flat buffer, so optimisers and gradient checks
/// can treat the whole model as a single vector.
class ParamStore {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape, double fill = 0.0);

  std::span<double> view(std::size_t index) { return std::span(data_).subspan(entries_[index].offset, entries_[index].size); }
  std::span<const double> view(std::size_t index) const {
    return std::span(data_).subspan(entries_[index].offset, entries_[index].size);
  }
  /// The same slice in a buffer laid out like this store (e.g. a gradient).
  std::span<double> view_in(std::span<double> flat, std::size_t index) const {
    return flat.subspan(entries_[index].offset, entries_[index].size);
  }

  std::optional<std::size_t> find(const std::string& name) const;

  const std::vector<ParamEntry>& entries() const { return entries_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  /// True when names and shapes match entry by entry.
  bool same_layout(const ParamStore& other) const;

  bool operator==(const ParamStore& other) const { return same_layout(other) && data_ == other.data_; }

 private:
  std::vector<ParamEntry> entries_;
  std::vector<double> data_;
};

}  // namespace transtext
