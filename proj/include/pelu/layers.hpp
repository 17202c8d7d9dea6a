#ifndef PELU_LAYERS_HPP
#define PELU_LAYERS_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pelu/activations.hpp"
#include "pelu/parameter.hpp"
#include "pelu/rng.hpp"
#include "pelu/tensor.hpp"

namespace pelu {

enum class Mode { Train, Eval };

/// Zero-mean normal draws with variance 2 / fan_in.
Tensord he_init(const Shape& shape, std::size_t fan_in, Rng& rng);

/// One differentiable stage. forward() in train mode caches what backward()
/// needs; backward() overwrites the layer's parameter gradients and returns
/// the gradient with respect to the layer input.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  virtual Tensord forward(const Tensord& x, Mode mode) = 0;
  virtual Tensord backward(const Tensord& upstream) = 0;
  virtual void collect_params(ParamRegistry& /*out*/, const std::string& /*prefix*/) {}
  virtual std::unique_ptr<Layer> clone() const = 0;
  /// Hyperparameters for the model file.
  virtual nlohmann::json describe() const { return {{"kind", kind()}}; }

 protected:
  void require_cache(bool ready) const;
};

class Linear : public Layer {
 public:
  Linear(std::size_t in, std::size_t out, Rng& rng);

  std::string kind() const override { return "linear"; }
  Tensord forward(const Tensord& x, Mode mode) override;
  Tensord backward(const Tensord& upstream) override;
  void collect_params(ParamRegistry& out, const std::string& prefix) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Linear>(*this); }
  nlohmann::json describe() const override;

  Tensord& weight() { return weight_; }  // [in x out]
  Tensord& bias() { return bias_; }      // [out]
  const Tensord& weight_grad() const { return weight_grad_; }
  const Tensord& bias_grad() const { return bias_grad_; }

 private:
  Tensord weight_, bias_;
  Tensord weight_grad_, bias_grad_;
  Tensord weight_vel_, bias_vel_;
  Tensord input_;
  bool cached_ = false;
};

/// 3x3 convolution, stride 1, zero padding 1, computed as im2col + matmul.
class Conv2d : public Layer {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, Rng& rng);

  std::string kind() const override { return "conv2d"; }
  Tensord forward(const Tensord& x, Mode mode) override;
  Tensord backward(const Tensord& upstream) override;
  void collect_params(ParamRegistry& out, const std::string& prefix) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }
  nlohmann::json describe() const override;

  Tensord& weight() { return weight_; }  // [out_c x in_c*9]
  Tensord& bias() { return bias_; }

 private:
  std::size_t in_channels_, out_channels_;
  Tensord weight_, bias_;
  Tensord weight_grad_, bias_grad_;
  Tensord weight_vel_, bias_vel_;
  std::vector<Tensord> columns_;  // per-sample im2col buffers
  Shape input_shape_;
  bool cached_ = false;
};

/// Unfolds one [c x h x w] image into [c*9 x h*w] columns for a 3x3 kernel
/// with padding 1. col2im is its adjoint (scatter-add).
void im2col3x3(std::span<const double> image, std::size_t channels, std::size_t height, std::size_t width,
               Tensord& columns);
void col2im3x3(const Tensord& columns, std::size_t channels, std::size_t height, std::size_t width,
               std::span<double> image);

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
/// Ties go to the first maximum in row-major window order.
class MaxPool2x2 : public Layer {
 public:
  std::string kind() const override { return "maxpool2x2"; }
  Tensord forward(const Tensord& x, Mode mode) override;
  Tensord backward(const Tensord& upstream) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool2x2>(*this); }

 private:
  std::vector<std::size_t> argmax_;
  Shape input_shape_, output_shape_;
  bool cached_ = false;
};

/// Inverted dropout: train-mode survivors are scaled by 1/(1-rate), eval is
/// the identity.
class Dropout : public Layer {
 public:
  Dropout(double rate, std::uint64_t seed);

  std::string kind() const override { return "dropout"; }
  Tensord forward(const Tensord& x, Mode mode) override;
  Tensord backward(const Tensord& upstream) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dropout>(*this); }
  nlohmann::json describe() const override;

  void reseed(std::uint64_t seed) { rng_ = Rng(seed); }
  double rate() const { return rate_; }

 private:
  double rate_;
  Rng rng_;
  Tensord mask_;
  bool cached_ = false;
};

/// Batch normalization over the batch axis of [n x f] inputs, or over
/// (n, h, w) per channel of [n x c x h x w] inputs. Epsilon 1e-5, running
/// statistics momentum 0.1.
class BatchNorm : public Layer {
 public:
  explicit BatchNorm(std::size_t features, double epsilon = 1e-5, double momentum = 0.1);

  std::string kind() const override { return "batchnorm"; }
  Tensord forward(const Tensord& x, Mode mode) override;
  Tensord backward(const Tensord& upstream) override;
  void collect_params(ParamRegistry& out, const std::string& prefix) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm>(*this); }
  nlohmann::json describe() const override;

  Tensord& gamma() { return gamma_; }
  Tensord& beta() { return beta_; }
  const Tensord& running_mean() const { return running_mean_; }
  const Tensord& running_var() const { return running_var_; }
  /// Normalized values before the affine transform, from the last train pass.
  const Tensord& normalized() const { return xhat_; }

 private:
  struct Layout {
    std::size_t batch, features, spatial;
  };
  Layout layout_of(const Tensord& x) const;

  std::size_t features_;
  double epsilon_, momentum_;
  Tensord gamma_, beta_, gamma_grad_, beta_grad_, gamma_vel_, beta_vel_;
  Tensord running_mean_, running_var_;
  Tensord xhat_;
  std::vector<double> inv_std_;
  bool cached_ = false;
};

class Flatten : public Layer {
 public:
  std::string kind() const override { return "flatten"; }
  Tensord forward(const Tensord& x, Mode mode) override;
  Tensord backward(const Tensord& upstream) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }

 private:
  Shape input_shape_;
  bool cached_ = false;
};

/// Elementwise activation. PELU holds one (p, q) pair for the whole layer;
/// PReLU holds one learned slope.
class Activation : public Layer {
 public:
  explicit Activation(ActivationKind kind, ParamConfig config = kDefaultParamConfig);

  std::string kind() const override { return std::string(to_string(kind_.type)); }
  Tensord forward(const Tensord& x, Mode mode) override;
  Tensord backward(const Tensord& upstream) override;
  void collect_params(ParamRegistry& out, const std::string& prefix) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Activation>(*this); }
  nlohmann::json describe() const override;

  const ActivationKind& activation() const { return kind_; }
  PeluParams<double>& pelu_params() { return pelu_; }
  const PeluParams<double>& pelu_params() const { return pelu_; }
  double slope() const { return slope_; }
  void set_slope(double slope) { slope_ = slope; }

 private:
  ActivationKind kind_;
  PeluParams<double> pelu_;
  double grad_p_ = 0.0, grad_q_ = 0.0;
  double slope_ = 0.0, slope_grad_ = 0.0, slope_vel_ = 0.0;
  Tensord input_;
  bool cached_ = false;
};

/// Ordered stack of layers. Copying deep-copies every layer.
class Network {
 public:
  Network() = default;
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }
  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  Tensord forward(const Tensord& x, Mode mode);
  /// Back-propagates dLoss/dLogits and returns the populated registry.
  ParamRegistry backward(const Tensord& dlogits);
  ParamRegistry parameters();
  /// dLoss/dInput from the last backward().
  const Tensord& input_grad() const { return input_grad_; }

  /// Activation layers that carry PELU parameters, in network order.
  std::vector<Activation*> pelu_layers();
  /// Restarts every dropout mask stream from `seed`.
  void reseed_noise(std::uint64_t seed);

  nlohmann::json describe() const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  Tensord input_grad_;
  bool forwarded_ = false;
};

struct SoftmaxXent {
  double loss;
  Tensord grad;  // dLoss/dLogits
};

/// Mean cross-entropy over the batch with log-sum-exp stabilization.
SoftmaxXent softmax_xent(const Tensord& logits, std::span<const std::size_t> labels);

/// Row-wise argmax of [n x k] logits.
std::vector<std::size_t> predict(const Tensord& logits);

// Builders.

/// Linear layers between consecutive widths with the activation after every
/// hidden layer.
Network make_mlp(std::span<const std::size_t> widths, const ActivationKind& act, ParamConfig config, Rng& rng,
                 bool batchnorm = false);

struct SmallNetSpec {
  std::size_t channels = 1, height = 16, width = 16, classes = 10;
  std::vector<std::size_t> filters{8, 16, 32};
  std::size_t hidden = 64;
  double conv_dropout = 0.2;
  double fc_dropout = 0.5;
};

/// Conv(3x3) + act + 2x2 pool + dropout per filter stage, then
/// Linear + act + dropout and a final Linear to the classes.
Network make_smallnet_lite(const SmallNetSpec& spec, const ActivationKind& act, ParamConfig config, Rng& rng);

}  // namespace pelu

#endif  // PELU_LAYERS_HPP
