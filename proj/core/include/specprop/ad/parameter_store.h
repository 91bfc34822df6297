#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "specprop/ad/tape.h"
#include "specprop/linalg/matrix.h"

namespace specprop::ad {

// Named parameter tensors in insertion order.
class ParameterStore {
 public:
  // Returns the index of the new tensor. Names must be unique.
  std::size_t add(std::string name, Matrix value);

  std::size_t size() const { return tensors_.size(); }
  std::size_t total_count() const;

  const std::string& name(std::size_t i) const { return tensors_.at(i).name; }
  const Matrix& value(std::size_t i) const { return tensors_.at(i).value; }
  Matrix& value(std::size_t i) { return tensors_.at(i).value; }
  // Index of `name`; throws std::out_of_range when absent.
  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const;

  linalg::Vector flatten() const;
  void unflatten(const linalg::Vector& flat);

  bool operator==(const ParameterStore&) const = default;

 private:
  struct Entry {
    std::string name;
    Matrix value;
    bool operator==(const Entry&) const = default;
  };
  std::vector<Entry> tensors_;
};

// Parameters placed on a tape as differentiable leaves (or constants when
// frozen), indexed like the store.
class BoundParameters {
 public:
  BoundParameters(Tape& tape, const ParameterStore& store, bool trainable = true);

  Var operator[](std::size_t i) const { return vars_.at(i); }
  std::span<const Var> vars() const { return vars_; }
  Tape& tape() const { return *tape_; }

  // Gradient of a 1x1 node with respect to every parameter, flattened in
  // store order.
  linalg::Vector gradient(Var output) const;

 private:
  Tape* tape_;
  std::vector<Var> vars_;
};

// Flattens a list of same-ordered gradient nodes.
linalg::Vector flatten_values(std::span<const Var> vars);

}  // namespace specprop::ad
