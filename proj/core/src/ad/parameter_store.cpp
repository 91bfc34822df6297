#include "specprop/ad/parameter_store.h"

#include <algorithm>
#include <stdexcept>

#include "specprop/ad/derivatives.h"

namespace specprop::ad {

std::size_t ParameterStore::add(std::string name, Matrix value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  tensors_.push_back({std::move(name), std::move(value)});
  return tensors_.size() - 1;
}

std::size_t ParameterStore::total_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.value.size();
  return n;
}

std::size_t ParameterStore::index_of(std::string_view name) const {
  auto it = std::find_if(tensors_.begin(), tensors_.end(),
                         [&](const Entry& e) { return e.name == name; });
  if (it == tensors_.end()) throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - tensors_.begin());
}

bool ParameterStore::contains(std::string_view name) const {
  return std::any_of(tensors_.begin(), tensors_.end(),
                     [&](const Entry& e) { return e.name == name; });
}

linalg::Vector ParameterStore::flatten() const {
  std::vector<double> flat;
  flat.reserve(total_count());
  for (const auto& t : tensors_) flat.insert(flat.end(), t.value.data(), t.value.data() + t.value.size());
  return linalg::Vector(std::move(flat));
}

void ParameterStore::unflatten(const linalg::Vector& flat) {
  if (flat.size() != total_count()) {
    throw linalg::DimensionError("unflatten: expected " + std::to_string(total_count()) +
                                 " values, got " + std::to_string(flat.size()));
  }
  std::size_t offset = 0;
  for (auto& t : tensors_) {
    std::copy(flat.values().begin() + static_cast<std::ptrdiff_t>(offset),
              flat.values().begin() + static_cast<std::ptrdiff_t>(offset + t.value.size()),
              t.value.data());
    offset += t.value.size();
  }
}

BoundParameters::BoundParameters(Tape& tape, const ParameterStore& store, bool trainable)
    : tape_(&tape) {
  vars_.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    vars_.push_back(trainable ? tape.variable(store.value(i)) : tape.constant(store.value(i)));
  }
}

linalg::Vector BoundParameters::gradient(Var output) const {
  return flatten_values(gradients(output, vars_));
}

linalg::Vector flatten_values(std::span<const Var> vars) {
  std::vector<double> flat;
  for (const Var& v : vars) {
    const Matrix& m = v.value();
    flat.insert(flat.end(), m.data(), m.data() + m.size());
  }
  return linalg::Vector(std::move(flat));
}

}  // namespace specprop::ad
