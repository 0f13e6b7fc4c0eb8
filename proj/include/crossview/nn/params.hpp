#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "crossview/core/errors.hpp"
#include "crossview/core/rng.hpp"
#include "crossview/nn/graph.hpp"

namespace crossview {

enum class ParamInit { normal002, zero, one };

// Ordered, named parameter store. Insertion order is the canonical order used
// for gradient accumulation, optimizer state, and checkpoint layout.
template <typename S>
class Params {
 public:
  using Matrix = Mat<S>;

  Matrix& create(const std::string& name, int rows, int cols, ParamInit init, Rng& rng) {
    if (index_.count(name)) throw ConfigError("Params: duplicate parameter '" + name + "'");
    Matrix m(rows, cols);
    switch (init) {
      case ParamInit::normal002:
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
          for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = static_cast<S>(0.02 * rng.normal());
          }
        }
        break;
      case ParamInit::zero: m.setZero(); break;
      case ParamInit::one: m.setOnes(); break;
    }
    index_[name] = entries_.size();
    entries_.emplace_back(name, std::move(m));
    return entries_.back().second;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  const Matrix& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("Params: unknown parameter '" + name + "'");
    return entries_[it->second].second;
  }

  Matrix& get_mutable(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("Params: unknown parameter '" + name + "'");
    return entries_[it->second].second;
  }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("Params: unknown parameter '" + name + "'");
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }
  const std::pair<std::string, Matrix>& entry(std::size_t i) const { return entries_[i]; }
  std::pair<std::string, Matrix>& entry(std::size_t i) { return entries_[i]; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, m] : entries_) n += static_cast<std::size_t>(m.size());
    return n;
  }

  template <typename T>
  Params<T> cast() const {
    Params<T> out;
    for (const auto& [name, m] : entries_) {
      typename Params<T>::Matrix c = m.template cast<T>();
      out.adopt(name, std::move(c));
    }
    return out;
  }

  // Inserts a pre-built matrix (checkpoint load, cast).
  void adopt(const std::string& name, Matrix m) {
    if (index_.count(name)) throw ConfigError("Params: duplicate parameter '" + name + "'");
    index_[name] = entries_.size();
    entries_.emplace_back(name, std::move(m));
  }

 private:
  std::vector<std::pair<std::string, Matrix>> entries_;
  std::map<std::string, std::size_t> index_;
};

// Bridges Params and Graph during a forward build.
//
// Create mode (params mutable, rng set): param() materializes missing entries
// with the requested shape and initializer, so the forward-build code itself is
// the single source of truth for parameter names and shapes.
// Bind mode: param() requires the entry to exist and binds it as a tracked
// graph leaf, memoizing node ids so each parameter appears once per graph.
template <typename S>
class ParamBinder {
 public:
  // Bind mode. Never mutates params (the const_cast only serves the shared
  // member; create mode is the sole writer).
  ParamBinder(Graph<S>& graph, const Params<S>& params)
      : graph_(graph), params_(const_cast<Params<S>&>(params)), rng_(nullptr) {}
  // Create mode.
  ParamBinder(Graph<S>& graph, Params<S>& params, Rng& rng)
      : graph_(graph), params_(params), rng_(&rng) {}

  int param(const std::string& name, int rows, int cols, ParamInit init) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    if (!params_.has(name)) {
      if (rng_ == nullptr) throw ConfigError("ParamBinder: unknown parameter '" + name + "'");
      params_.create(name, rows, cols, init, *rng_);
    }
    const auto& m = params_.get(name);
    if (m.rows() != rows || m.cols() != cols) {
      throw ConfigError("ParamBinder: shape mismatch for '" + name + "'");
    }
    const int id = graph_.leaf(m, /*requires_grad=*/true);
    ids_[name] = id;
    return id;
  }

  const std::map<std::string, int>& bound_ids() const { return ids_; }

  // Adds this graph's parameter gradients into an accumulator aligned with the
  // Params insertion order. Call after graph.backward().
  void add_grads_to(std::vector<Mat<S>>& accum) const {
    if (accum.size() != params_.size()) {
      accum.assign(params_.size(), Mat<S>());
      for (std::size_t i = 0; i < params_.size(); ++i) {
        const auto& m = params_.entry(i).second;
        accum[i] = Mat<S>::Zero(m.rows(), m.cols());
      }
    }
    for (const auto& [name, id] : ids_) {
      accum[params_.index_of(name)] += graph_.grad(id);
    }
  }

  Graph<S>& graph() { return graph_; }

 private:
  Graph<S>& graph_;
  Params<S>& params_;
  Rng* rng_;
  std::map<std::string, int> ids_;
};

// Zeroed gradient accumulator aligned with params.
template <typename S>
inline std::vector<Mat<S>> make_grad_accumulator(const Params<S>& params) {
  std::vector<Mat<S>> accum(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& m = params.entry(i).second;
    accum[i] = Mat<S>::Zero(m.rows(), m.cols());
  }
  return accum;
}

}  // namespace crossview
