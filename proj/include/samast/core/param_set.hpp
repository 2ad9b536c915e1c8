#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "samast/core/error.hpp"
#include "samast/core/tensor.hpp"

namespace samast {

// Ordered collection of named tensors. Used for model parameters, their
// gradients and optimizer moments; iteration order is insertion order, which
// fixes every reduction order downstream.
class ParamSet {
 public:
  void add(std::string name, Tensor value) {
    if (index_.contains(name)) throw ContractError("duplicate parameter " + name);
    index_.emplace(name, tensors_.size());
    names_.push_back(std::move(name));
    tensors_.push_back(std::move(value));
  }

  std::size_t size() const { return tensors_.size(); }
  bool empty() const { return tensors_.empty(); }

  const std::string& name(std::size_t i) const { return names_[i]; }
  const std::vector<std::string>& names() const { return names_; }

  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }

  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter " + name);
    return it->second;
  }

  Tensor& at(const std::string& name) { return tensors_[index_of(name)]; }
  const Tensor& at(const std::string& name) const { return tensors_[index_of(name)]; }

  // Same names and shapes, all values zero.
  ParamSet zeros_like() const {
    ParamSet out;
    for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], Tensor(tensors_[i].shape()));
    return out;
  }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

  friend bool operator==(const ParamSet& a, const ParamSet& b) {
    return a.names_ == b.names_ && a.tensors_ == b.tensors_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline void require_same_layout(const ParamSet& a, const ParamSet& b, const char* what) {
  if (a.size() != b.size()) {
    throw ContractError(std::string(what) + ": parameter count " +
                        std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].shape() != b[i].shape()) {
      throw ContractError(std::string(what) + ": shape mismatch for " + a.name(i) +
                          " " + shape_string(a[i].shape()) + " vs " +
                          shape_string(b[i].shape()));
    }
  }
}

// Euclidean norm over the concatenation of every tensor in the set.
inline double global_norm(const ParamSet& set) {
  double sq = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (double v : set[i].values()) sq += v * v;
  }
  return std::sqrt(sq);
}

}  // namespace samast
