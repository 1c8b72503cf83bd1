#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "ssomc/rng.hpp"

namespace ssomc {

enum class OutputActivation { Identity, Tanh };

/// Fully connected network over column batches: tanh hidden layers and an
/// identity (or tanh) output layer.
template <typename Scalar>
class DenseNet {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
  };

  DenseNet() = default;
  explicit DenseNet(std::vector<int> sizes, OutputActivation output = OutputActivation::Identity)
      : sizes_(std::move(sizes)), output_(output) {
    if (sizes_.size() < 2) throw std::invalid_argument("network needs an input and an output size");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) throw std::invalid_argument("layer sizes must be positive");
      weights_.push_back(Matrix::Zero(sizes_[l + 1], sizes_[l]));
      biases_.push_back(Vector::Zero(sizes_[l + 1]));
    }
  }

  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  void initialize(Rng& rng) {
    for (auto& w : weights_) {
      const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(w.cols()));
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = bound * static_cast<Scalar>(2.0 * uniform01(rng) - 1.0);
      }
    }
    for (auto& b : biases_) b.setZero();
  }

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  OutputActivation output_activation() const { return output_; }
  std::size_t layer_count() const { return weights_.size(); }
  Matrix& weight(std::size_t l) { return weights_[l]; }
  const Matrix& weight(std::size_t l) const { return weights_[l]; }
  Vector& bias(std::size_t l) { return biases_[l]; }
  const Vector& bias(std::size_t l) const { return biases_[l]; }

  /// Columns of `x` are samples. Activations are cached for backward().
  Matrix forward(const Matrix& x) {
    if (x.rows() != input_size()) throw std::invalid_argument("input has the wrong dimension");
    acts_.clear();
    acts_.push_back(x);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix z = (weights_[l] * acts_.back()).colwise() + biases_[l];
      if (l + 1 < weights_.size() || output_ == OutputActivation::Tanh) z = z.array().tanh().matrix();
      acts_.push_back(std::move(z));
    }
    return acts_.back();
  }

  Vector forward_one(const Vector& x) {
    Matrix m = x;
    return forward(m).col(0);
  }

  /// Forward pass that leaves the cache untouched.
  Matrix predict(const Matrix& x) const {
    Matrix a = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      a = (weights_[l] * a).colwise() + biases_[l];
      if (l + 1 < weights_.size() || output_ == OutputActivation::Tanh) a = a.array().tanh().matrix();
    }
    return a;
  }

  Gradients zero_gradients() const {
    Gradients g;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      g.weights.push_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
      g.biases.push_back(Vector::Zero(biases_[l].size()));
    }
    return g;
  }

  /// Accumulates d(sum(output .* upstream))/d(params) into `grads` for the
  /// batch of the last forward() and returns the gradient w.r.t. the input.
  Matrix backward(const Matrix& upstream, Gradients& grads) const {
    if (acts_.size() != weights_.size() + 1) throw std::logic_error("backward() without a cached forward pass");
    if (upstream.rows() != output_size() || upstream.cols() != acts_.back().cols()) {
      throw std::invalid_argument("upstream gradient has the wrong shape");
    }
    Matrix delta = upstream;
    for (std::size_t l = weights_.size(); l-- > 0;) {
      const Matrix& out = acts_[l + 1];
      if (l + 1 < weights_.size() || output_ == OutputActivation::Tanh) {
        delta = (delta.array() * (Scalar(1) - out.array().square())).matrix();
      }
      grads.weights[l].noalias() += delta * acts_[l].transpose();
      grads.biases[l].noalias() += delta.rowwise().sum();
      delta = weights_[l].transpose() * delta;
    }
    return delta;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
  }

  /// Layer by layer: weights column-major, then biases.
  Vector flatten() const {
    Vector out(parameter_count());
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.segment(k, weights_[l].size()) = Eigen::Map<const Vector>(weights_[l].data(), weights_[l].size());
      k += weights_[l].size();
      out.segment(k, biases_[l].size()) = biases_[l];
      k += biases_[l].size();
    }
    return out;
  }

  void unflatten(const Vector& flat) {
    if (static_cast<std::size_t>(flat.size()) != parameter_count()) throw std::invalid_argument("parameter count mismatch");
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Eigen::Map<Vector>(weights_[l].data(), weights_[l].size()) = flat.segment(k, weights_[l].size());
      k += weights_[l].size();
      biases_[l] = flat.segment(k, biases_[l].size());
      k += biases_[l].size();
    }
  }

  static Vector flatten(const Gradients& g) {
    std::size_t n = 0;
    for (std::size_t l = 0; l < g.weights.size(); ++l) n += g.weights[l].size() + g.biases[l].size();
    Vector out(n);
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
      out.segment(k, g.weights[l].size()) = Eigen::Map<const Vector>(g.weights[l].data(), g.weights[l].size());
      k += g.weights[l].size();
      out.segment(k, g.biases[l].size()) = g.biases[l];
      k += g.biases[l].size();
    }
    return out;
  }

  bool finite() const {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
    }
    return true;
  }

 private:
  std::vector<int> sizes_;
  OutputActivation output_ = OutputActivation::Identity;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
  std::vector<Matrix> acts_;
};

template <typename Scalar>
struct Adamax {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Scalar lr = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Vector m, u;
  long t = 0;

  Adamax() = default;
  explicit Adamax(Scalar learning_rate) : lr(learning_rate) {}

  void step(Vector& params, const Vector& grads) {
    if (m.size() != params.size()) {
      m = Vector::Zero(params.size());
      u = Vector::Zero(params.size());
    }
    ++t;
    m = beta1 * m + (Scalar(1) - beta1) * grads;
    u = (beta2 * u).cwiseMax(grads.cwiseAbs());
    const Scalar step_size = lr / (Scalar(1) - std::pow(beta1, static_cast<Scalar>(t)));
    params -= step_size * (m.array() / u.array().max(Scalar(1e-12))).matrix();
  }
};

/// Scales every vector by max_norm / norm when their joint L2 norm exceeds
/// max_norm. Returns the norm before clipping.
template <typename Scalar>
Scalar clip_grad_norm(std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>*> grads, Scalar max_norm) {
  Scalar sq = 0;
  for (auto* g : grads) sq += g->squaredNorm();
  const Scalar norm = std::sqrt(sq);
  if (norm > max_norm) {
    const Scalar scale = max_norm / norm;
    for (auto* g : grads) *g *= scale;
  }
  return norm;
}

/// One JSON header line describing the networks, then their parameters as
/// little-endian float64 in header order.
inline void save_checkpoint(const std::filesystem::path& path,
                            const std::vector<std::pair<std::string, const DenseNet<double>*>>& nets) {
  nlohmann::json header;
  header["format"] = "ssomc-weights";
  header["nets"] = nlohmann::json::array();
  for (const auto& [name, net] : nets) {
    header["nets"].push_back({{"name", name},
                              {"sizes", net->sizes()},
                              {"output", net->output_activation() == OutputActivation::Tanh ? "tanh" : "identity"}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << header.dump() << '\n';
  for (const auto& entry : nets) {
    const auto flat = entry.second->flatten();
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
      std::uint64_t bits = 0;
      const double v = flat[i];
      std::memcpy(&bits, &v, sizeof bits);
      unsigned char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
      out.write(reinterpret_cast<const char*>(bytes), 8);
    }
  }
}

inline void load_checkpoint(const std::filesystem::path& path,
                            const std::vector<std::pair<std::string, DenseNet<double>*>>& nets) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  const auto header = nlohmann::json::parse(line);
  const auto& listed = header.at("nets");
  if (listed.size() != nets.size()) throw std::runtime_error("checkpoint holds a different set of networks");
  for (std::size_t k = 0; k < nets.size(); ++k) {
    auto* net = nets[k].second;
    if (listed[k].at("name").get<std::string>() != nets[k].first ||
        listed[k].at("sizes").get<std::vector<int>>() != net->sizes()) {
      throw std::runtime_error("checkpoint network '" + nets[k].first + "' has a different shape");
    }
    typename DenseNet<double>::Vector flat(net->parameter_count());
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
      unsigned char bytes[8];
      if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("checkpoint is truncated");
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
      double v = 0.0;
      std::memcpy(&v, &bits, sizeof v);
      flat[i] = v;
    }
    net->unflatten(flat);
  }
}

}  // namespace ssomc
