#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace tessera::nn {

using Rng = std::mt19937_64;

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  /// First dimension (1 for a scalar).
  std::size_t rows() const { return shape_.empty() ? 1 : shape_[0]; }
  /// Product of the remaining dimensions.
  std::size_t cols() const { return rows() == 0 ? 0 : size() / rows(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

enum class Init {
  Zero,
  /// uniform(-0.1, 0.1), used for embedding tables.
  Uniform,
  /// Gaussian scaled by 1/sqrt(fan_in), fan_in = cols.
  ScaledGaussian,
};

/// Owns the trainable tensors of one model. Addresses are stable.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, std::vector<std::size_t> shape, Init init, Rng& rng);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;

  void zero_grad();
  std::size_t num_values() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, Parameter*> index_;
};

}  // namespace tessera::nn
