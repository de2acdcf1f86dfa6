#include "tessera/nn/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "tessera/error.hpp"

namespace tessera::nn {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  require(data_.size() == product(shape_), "tensor data length must equal product of shape");
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Parameter& ParameterSet::add(const std::string& name, std::vector<std::size_t> shape, Init init,
                             Rng& rng) {
  require(!contains(name), "duplicate parameter " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor(shape);
  p->grad = Tensor(shape);
  switch (init) {
    case Init::Zero:
      break;
    case Init::Uniform: {
      std::uniform_real_distribution<double> dist(-0.1, 0.1);
      for (double& v : p->value.data()) v = dist(rng);
      break;
    }
    case Init::ScaledGaussian: {
      const double fan_in = static_cast<double>(std::max<std::size_t>(1, p->value.cols()));
      std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(fan_in));
      for (double& v : p->value.data()) v = dist(rng);
      break;
    }
  }
  Parameter& ref = *p;
  index_[name] = p.get();
  params_.push_back(std::move(p));
  return ref;
}

Parameter& ParameterSet::get(const std::string& name) {
  const auto it = index_.find(name);
  require(it != index_.end(), "unknown parameter " + name);
  return *it->second;
}

const Parameter& ParameterSet::get(const std::string& name) const {
  const auto it = index_.find(name);
  require(it != index_.end(), "unknown parameter " + name);
  return *it->second;
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

std::size_t ParameterSet::num_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

}  // namespace tessera::nn
