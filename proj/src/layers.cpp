#include "pelu/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pelu {

namespace {

ParamRef tensor_param(const std::string& name, Tensord& value, Tensord& grad, Tensord& velocity, bool decay) {
  return {name, value.data(), grad.data(), velocity.data(), decay, false, false};
}

void require_rank(const Tensord& x, std::size_t rank, const std::string& who) {
  if (x.rank() != rank) {
    throw ShapeError(who + ": expected rank-" + std::to_string(rank) + " input, got " + shape_string(x.shape()));
  }
}

}  // namespace

Tensord he_init(const Shape& shape, std::size_t fan_in, Rng& rng) {
  if (fan_in == 0) throw std::invalid_argument("he_init: fan_in must be positive");
  const double stddev = std::sqrt(2.0 / double(fan_in));
  Tensord out(shape);
  for (double& v : out.data()) v = rng.normal(0.0, stddev);
  return out;
}

void Layer::require_cache(bool ready) const {
  if (!ready) throw std::logic_error(kind() + ": backward called without a preceding train-mode forward");
}

// Linear

Linear::Linear(std::size_t in, std::size_t out, Rng& rng)
    : weight_(he_init({in, out}, in, rng)),
      bias_({out}),
      weight_grad_({in, out}),
      bias_grad_({out}),
      weight_vel_({in, out}),
      bias_vel_({out}) {}

Tensord Linear::forward(const Tensord& x, Mode mode) {
  require_rank(x, 2, "linear");
  if (x.dim(1) != weight_.dim(0)) {
    throw ShapeError("linear: input width " + std::to_string(x.dim(1)) + " != " + std::to_string(weight_.dim(0)));
  }
  Tensord out({x.dim(0), weight_.dim(1)});
  out.mat().noalias() = x.mat() * weight_.mat();
  out.mat().rowwise() += bias_.vec().transpose();
  cached_ = mode == Mode::Train;
  if (cached_) input_ = x;
  return out;
}

Tensord Linear::backward(const Tensord& upstream) {
  require_cache(cached_);
  if (upstream.shape() != Shape{input_.dim(0), weight_.dim(1)}) {
    throw ShapeError("linear: upstream gradient shape " + shape_string(upstream.shape()));
  }
  weight_grad_.mat().noalias() = input_.mat().transpose() * upstream.mat();
  bias_grad_.vec() = upstream.mat().colwise().sum().transpose();
  Tensord dx(input_.shape());
  dx.mat().noalias() = upstream.mat() * weight_.mat().transpose();
  return dx;
}

void Linear::collect_params(ParamRegistry& out, const std::string& prefix) {
  out.push_back(tensor_param(prefix + ".weight", weight_, weight_grad_, weight_vel_, true));
  out.push_back(tensor_param(prefix + ".bias", bias_, bias_grad_, bias_vel_, false));
}

nlohmann::json Linear::describe() const {
  return {{"kind", kind()}, {"in", weight_.dim(0)}, {"out", weight_.dim(1)}};
}

// Conv2d

void im2col3x3(std::span<const double> image, std::size_t channels, std::size_t height, std::size_t width,
               Tensord& columns) {
  const std::size_t pixels = height * width;
  if (columns.shape() != Shape{channels * 9, pixels}) columns = Tensord({channels * 9, pixels});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        double* row = columns.data().data() + ((c * 9 + ky * 3 + kx) * pixels);
        for (std::size_t y = 0; y < height; ++y) {
          const std::ptrdiff_t sy = std::ptrdiff_t(y + ky) - 1;
          for (std::size_t x = 0; x < width; ++x) {
            const std::ptrdiff_t sx = std::ptrdiff_t(x + kx) - 1;
            const bool inside = sy >= 0 && sy < std::ptrdiff_t(height) && sx >= 0 && sx < std::ptrdiff_t(width);
            row[y * width + x] = inside ? image[(c * height + std::size_t(sy)) * width + std::size_t(sx)] : 0.0;
          }
        }
      }
    }
  }
}

void col2im3x3(const Tensord& columns, std::size_t channels, std::size_t height, std::size_t width,
               std::span<double> image) {
  const std::size_t pixels = height * width;
  std::fill(image.begin(), image.end(), 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const double* row = columns.data().data() + ((c * 9 + ky * 3 + kx) * pixels);
        for (std::size_t y = 0; y < height; ++y) {
          const std::ptrdiff_t sy = std::ptrdiff_t(y + ky) - 1;
          if (sy < 0 || sy >= std::ptrdiff_t(height)) continue;
          for (std::size_t x = 0; x < width; ++x) {
            const std::ptrdiff_t sx = std::ptrdiff_t(x + kx) - 1;
            if (sx < 0 || sx >= std::ptrdiff_t(width)) continue;
            image[(c * height + std::size_t(sy)) * width + std::size_t(sx)] += row[y * width + x];
          }
        }
      }
    }
  }
}

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, Rng& rng)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      weight_(he_init({out_channels, in_channels * 9}, in_channels * 9, rng)),
      bias_({out_channels}),
      weight_grad_({out_channels, in_channels * 9}),
      bias_grad_({out_channels}),
      weight_vel_({out_channels, in_channels * 9}),
      bias_vel_({out_channels}) {}

Tensord Conv2d::forward(const Tensord& x, Mode mode) {
  require_rank(x, 4, "conv2d");
  if (x.dim(1) != in_channels_) {
    throw ShapeError("conv2d: expected " + std::to_string(in_channels_) + " input channels, got " +
                     shape_string(x.shape()));
  }
  const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const std::size_t in_plane = in_channels_ * h * w, out_plane = out_channels_ * h * w;
  Tensord out({n, out_channels_, h, w});
  cached_ = mode == Mode::Train;
  columns_.resize(n);
  Tensord scratch;
  for (std::size_t s = 0; s < n; ++s) {
    Tensord& cols = cached_ ? columns_[s] : scratch;
    im2col3x3(x.data().subspan(s * in_plane, in_plane), in_channels_, h, w, cols);
    MatrixMap<double> y(out.data().data() + s * out_plane, Eigen::Index(out_channels_), Eigen::Index(h * w));
    y.noalias() = weight_.mat() * cols.mat();
    y.colwise() += bias_.vec();
  }
  if (cached_) input_shape_ = x.shape();
  else columns_.clear();
  return out;
}

Tensord Conv2d::backward(const Tensord& upstream) {
  require_cache(cached_);
  const std::size_t n = input_shape_[0], h = input_shape_[2], w = input_shape_[3];
  if (upstream.shape() != Shape{n, out_channels_, h, w}) {
    throw ShapeError("conv2d: upstream gradient shape " + shape_string(upstream.shape()));
  }
  const std::size_t in_plane = in_channels_ * h * w, out_plane = out_channels_ * h * w;
  weight_grad_.fill(0.0);
  bias_grad_.fill(0.0);
  Tensord dx(input_shape_);
  Tensord dcols({in_channels_ * 9, h * w});
  for (std::size_t s = 0; s < n; ++s) {
    ConstMatrixMap<double> dy(upstream.data().data() + s * out_plane, Eigen::Index(out_channels_),
                              Eigen::Index(h * w));
    weight_grad_.mat().noalias() += dy * columns_[s].mat().transpose();
    bias_grad_.vec() += dy.rowwise().sum();
    dcols.mat().noalias() = weight_.mat().transpose() * dy;
    col2im3x3(dcols, in_channels_, h, w, dx.data().subspan(s * in_plane, in_plane));
  }
  return dx;
}

void Conv2d::collect_params(ParamRegistry& out, const std::string& prefix) {
  out.push_back(tensor_param(prefix + ".weight", weight_, weight_grad_, weight_vel_, true));
  out.push_back(tensor_param(prefix + ".bias", bias_, bias_grad_, bias_vel_, false));
}

nlohmann::json Conv2d::describe() const {
  return {{"kind", kind()}, {"in_channels", in_channels_}, {"out_channels", out_channels_}, {"kernel", 3}};
}

// MaxPool2x2

Tensord MaxPool2x2::forward(const Tensord& x, Mode mode) {
  require_rank(x, 4, "maxpool2x2");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h < 2 || w < 2) throw ShapeError("maxpool2x2: spatial extent below 2 in " + shape_string(x.shape()));
  const std::size_t oh = h / 2, ow = w / 2;
  Tensord out({n, c, oh, ow});
  cached_ = mode == Mode::Train;
  argmax_.assign(cached_ ? out.size() : 0, 0);
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xx = 0; xx < ow; ++xx, ++o) {
        std::size_t best = base + (2 * y) * w + 2 * xx;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = base + (2 * y + dy) * w + 2 * xx + dx;
            if (x[idx] > x[best]) best = idx;
          }
        }
        out[o] = x[best];
        if (cached_) argmax_[o] = best;
      }
    }
  }
  if (cached_) {
    input_shape_ = x.shape();
    output_shape_ = out.shape();
  }
  return out;
}

Tensord MaxPool2x2::backward(const Tensord& upstream) {
  require_cache(cached_);
  if (upstream.shape() != output_shape_) {
    throw ShapeError("maxpool2x2: upstream gradient shape " + shape_string(upstream.shape()));
  }
  Tensord dx(input_shape_);
  for (std::size_t o = 0; o < upstream.size(); ++o) dx[argmax_[o]] += upstream[o];
  return dx;
}

// Dropout

Dropout::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
}

Tensord Dropout::forward(const Tensord& x, Mode mode) {
  cached_ = mode == Mode::Train;
  if (!cached_) return x;
  const double keep = 1.0 - rate_;
  mask_ = Tensord(x.shape());
  Tensord out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask_[i] = rng_.bernoulli(keep) ? 1.0 / keep : 0.0;
    out[i] = x[i] * mask_[i];
  }
  return out;
}

Tensord Dropout::backward(const Tensord& upstream) {
  require_cache(cached_);
  return mul(upstream, mask_);
}

nlohmann::json Dropout::describe() const { return {{"kind", kind()}, {"rate", rate_}}; }

// BatchNorm

BatchNorm::BatchNorm(std::size_t features, double epsilon, double momentum)
    : features_(features),
      epsilon_(epsilon),
      momentum_(momentum),
      gamma_({features}, 1.0),
      beta_({features}),
      gamma_grad_({features}),
      beta_grad_({features}),
      gamma_vel_({features}),
      beta_vel_({features}),
      running_mean_({features}),
      running_var_({features}, 1.0) {}

BatchNorm::Layout BatchNorm::layout_of(const Tensord& x) const {
  if ((x.rank() != 2 && x.rank() != 4) || x.dim(1) != features_) {
    throw ShapeError("batchnorm: expected [n x " + std::to_string(features_) + "] or [n x " +
                     std::to_string(features_) + " x h x w], got " + shape_string(x.shape()));
  }
  return {x.dim(0), features_, x.rank() == 4 ? x.dim(2) * x.dim(3) : 1};
}

Tensord BatchNorm::forward(const Tensord& x, Mode mode) {
  const auto [n, f, spatial] = layout_of(x);
  const auto at = [&](std::size_t s, std::size_t c, std::size_t p) { return (s * f + c) * spatial + p; };
  Tensord out(x.shape());
  cached_ = mode == Mode::Train;
  if (!cached_) {
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t c = 0; c < f; ++c) {
        const double inv = 1.0 / std::sqrt(running_var_[c] + epsilon_);
        for (std::size_t p = 0; p < spatial; ++p) {
          const std::size_t i = at(s, c, p);
          out[i] = gamma_[c] * (x[i] - running_mean_[c]) * inv + beta_[c];
        }
      }
    return out;
  }
  const double count = double(n * spatial);
  xhat_ = Tensord(x.shape());
  inv_std_.assign(f, 0.0);
  for (std::size_t c = 0; c < f; ++c) {
    double mu = 0.0;
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t p = 0; p < spatial; ++p) mu += x[at(s, c, p)];
    mu /= count;
    double var = 0.0;
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t p = 0; p < spatial; ++p) var += (x[at(s, c, p)] - mu) * (x[at(s, c, p)] - mu);
    var /= count;
    inv_std_[c] = 1.0 / std::sqrt(var + epsilon_);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t p = 0; p < spatial; ++p) {
        const std::size_t i = at(s, c, p);
        xhat_[i] = (x[i] - mu) * inv_std_[c];
        out[i] = gamma_[c] * xhat_[i] + beta_[c];
      }
    const double unbiased = count > 1.0 ? var * count / (count - 1.0) : var;
    running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mu;
    running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * unbiased;
  }
  return out;
}

Tensord BatchNorm::backward(const Tensord& upstream) {
  require_cache(cached_);
  if (upstream.shape() != xhat_.shape()) {
    throw ShapeError("batchnorm: upstream gradient shape " + shape_string(upstream.shape()));
  }
  const auto [n, f, spatial] = layout_of(upstream);
  const auto at = [&](std::size_t s, std::size_t c, std::size_t p) { return (s * f + c) * spatial + p; };
  const double count = double(n * spatial);
  Tensord dx(upstream.shape());
  for (std::size_t c = 0; c < f; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t p = 0; p < spatial; ++p) {
        const std::size_t i = at(s, c, p);
        sum_dy += upstream[i];
        sum_dy_xhat += upstream[i] * xhat_[i];
      }
    gamma_grad_[c] = sum_dy_xhat;
    beta_grad_[c] = sum_dy;
    const double scale = gamma_[c] * inv_std_[c] / count;
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t p = 0; p < spatial; ++p) {
        const std::size_t i = at(s, c, p);
        dx[i] = scale * (count * upstream[i] - sum_dy - xhat_[i] * sum_dy_xhat);
      }
  }
  return dx;
}

void BatchNorm::collect_params(ParamRegistry& out, const std::string& prefix) {
  out.push_back(tensor_param(prefix + ".gamma", gamma_, gamma_grad_, gamma_vel_, false));
  out.push_back(tensor_param(prefix + ".beta", beta_, beta_grad_, beta_vel_, false));
}

nlohmann::json BatchNorm::describe() const {
  return {{"kind", kind()},
          {"features", features_},
          {"epsilon", epsilon_},
          {"momentum", momentum_},
          {"running_mean", running_mean_.values()},
          {"running_var", running_var_.values()}};
}

// Flatten

Tensord Flatten::forward(const Tensord& x, Mode mode) {
  if (x.rank() < 2) throw ShapeError("flatten: expected a batch axis, got " + shape_string(x.shape()));
  cached_ = mode == Mode::Train;
  if (cached_) input_shape_ = x.shape();
  return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

Tensord Flatten::backward(const Tensord& upstream) {
  require_cache(cached_);
  if (upstream.size() != shape_size(input_shape_)) {
    throw ShapeError("flatten: upstream gradient shape " + shape_string(upstream.shape()));
  }
  return upstream.reshaped(input_shape_);
}

// Activation

Activation::Activation(ActivationKind kind, ParamConfig config)
    : kind_(kind), pelu_(PeluParams<double>::from_effective(1.0, 1.0, config)) {
  if (kind_.type == ActivationType::PRELU) slope_ = kind_.slope > 0.0 ? kind_.slope : 0.25;
  if (kind_.type == ActivationType::LRELU) {
    if (!(kind_.slope > 0.0)) throw std::invalid_argument("LReLU slope must be positive");
    slope_ = kind_.slope;
  }
}

Tensord Activation::forward(const Tensord& x, Mode mode) {
  cached_ = mode == Mode::Train;
  if (cached_) input_ = x;
  if (kind_.type == ActivationType::PELU) {
    const auto [a, b] = effective_params(pelu_);
    return pelu_forward(x, a, b);
  }
  return baseline_forward(kind_, x, slope_);
}

Tensord Activation::backward(const Tensord& upstream) {
  require_cache(cached_);
  if (kind_.type == ActivationType::PELU) {
    const auto [a, b] = effective_params(pelu_);
    const auto grad = stored_gradient(pelu_, pelu_backward_params(input_, a, b, upstream));
    grad_p_ = grad.da;
    grad_q_ = grad.db;
    return pelu_backward_input(input_, a, b, upstream);
  }
  auto grad = baseline_backward(kind_, input_, slope_, upstream);
  slope_grad_ = grad.slope;
  return std::move(grad.input);
}

void Activation::collect_params(ParamRegistry& out, const std::string& prefix) {
  if (kind_.type == ActivationType::PELU) {
    out.push_back({prefix + ".p", {&pelu_.p, 1}, {&grad_p_, 1}, {&pelu_.vp, 1}, true, true, true});
    out.push_back({prefix + ".q", {&pelu_.q, 1}, {&grad_q_, 1}, {&pelu_.vq, 1}, true, true, true});
  } else if (kind_.type == ActivationType::PRELU) {
    out.push_back({prefix + ".slope", {&slope_, 1}, {&slope_grad_, 1}, {&slope_vel_, 1}, false, true, false});
  }
}

nlohmann::json Activation::describe() const {
  nlohmann::json j{{"kind", kind()}};
  if (kind_.type == ActivationType::PELU) {
    const auto [a, b] = effective_params(pelu_);
    j["param_config"] = std::string(to_string(pelu_.config));
    j["a"] = a;
    j["b"] = b;
  } else if (kind_.type == ActivationType::LRELU || kind_.type == ActivationType::PRELU) {
    j["slope"] = slope_;
  } else if (kind_.type == ActivationType::ELU) {
    j["alpha"] = kind_.alpha;
  }
  return j;
}

// Network

Network::Network(const Network& other) : forwarded_(false) {
  layers_.reserve(other.layers_.size());
  for (const auto& layer : other.layers_) layers_.push_back(layer->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Tensord Network::forward(const Tensord& x, Mode mode) {
  Tensord current = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      current = layers_[i]->forward(current, mode);
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + ": " + e.what());
    }
  }
  forwarded_ = mode == Mode::Train;
  return current;
}

ParamRegistry Network::backward(const Tensord& dlogits) {
  if (!forwarded_) throw std::logic_error("Network::backward called before a train-mode forward");
  Tensord grad = dlogits;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    try {
      grad = layers_[i]->backward(grad);
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + ": " + e.what());
    }
  }
  input_grad_ = std::move(grad);
  return parameters();
}

ParamRegistry Network::parameters() {
  ParamRegistry out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->collect_params(out, "layer" + std::to_string(i) + "." + layers_[i]->kind());
  }
  return out;
}

std::vector<Activation*> Network::pelu_layers() {
  std::vector<Activation*> out;
  for (auto& layer : layers_) {
    if (auto* act = dynamic_cast<Activation*>(layer.get()); act && act->activation().type == ActivationType::PELU) {
      out.push_back(act);
    }
  }
  return out;
}

void Network::reseed_noise(std::uint64_t seed) {
  std::uint64_t stream = 0;
  for (auto& layer : layers_) {
    if (auto* drop = dynamic_cast<Dropout*>(layer.get())) drop->reseed(Rng(seed).fork(stream++).seed());
  }
}

nlohmann::json Network::describe() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : layers_) layers.push_back(layer->describe());
  return layers;
}

// Loss

SoftmaxXent softmax_xent(const Tensord& logits, std::span<const std::size_t> labels) {
  require_rank(logits, 2, "softmax_xent");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != n) {
    throw ShapeError("softmax_xent: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) + " rows");
  }
  SoftmaxXent out{0.0, Tensord(logits.shape())};
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= k) {
      throw std::out_of_range("softmax_xent: label " + std::to_string(labels[i]) + " outside [0, " +
                              std::to_string(k) + ")");
    }
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) peak = std::max(peak, logits(i, j));
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += std::exp(logits(i, j) - peak);
    const double log_norm = peak + std::log(total);
    out.loss += log_norm - logits(i, labels[i]);
    for (std::size_t j = 0; j < k; ++j) {
      const double prob = std::exp(logits(i, j) - log_norm);
      out.grad(i, j) = (prob - (j == labels[i] ? 1.0 : 0.0)) / double(n);
    }
  }
  out.loss /= double(n);
  if (!std::isfinite(out.loss)) throw NumericalError("softmax_xent: non-finite loss");
  return out;
}

std::vector<std::size_t> predict(const Tensord& logits) {
  require_rank(logits, 2, "predict");
  std::vector<std::size_t> out(logits.dim(0));
  for (std::size_t i = 0; i < logits.dim(0); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.dim(1); ++j) {
      if (logits(i, j) > logits(i, best)) best = j;
    }
    out[i] = best;
  }
  return out;
}

// Builders

Network make_mlp(std::span<const std::size_t> widths, const ActivationKind& act, ParamConfig config, Rng& rng,
                 bool batchnorm) {
  if (widths.size() < 2) throw std::invalid_argument("make_mlp: need at least input and output widths");
  Network net;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    net.emplace<Linear>(widths[i], widths[i + 1], rng);
    if (i + 2 < widths.size()) {
      if (batchnorm) net.emplace<BatchNorm>(widths[i + 1]);
      net.emplace<Activation>(act, config);
    }
  }
  return net;
}

Network make_smallnet_lite(const SmallNetSpec& spec, const ActivationKind& act, ParamConfig config, Rng& rng) {
  if (spec.filters.empty()) throw std::invalid_argument("make_smallnet_lite: need at least one conv stage");
  Network net;
  std::size_t channels = spec.channels, h = spec.height, w = spec.width;
  for (std::size_t filters : spec.filters) {
    if (h < 2 || w < 2) throw std::invalid_argument("make_smallnet_lite: input too small for the pooling stages");
    net.emplace<Conv2d>(channels, filters, rng);
    net.emplace<Activation>(act, config);
    net.emplace<MaxPool2x2>();
    if (spec.conv_dropout > 0.0) net.emplace<Dropout>(spec.conv_dropout, rng.next_u64());
    channels = filters;
    h /= 2;
    w /= 2;
  }
  net.emplace<Flatten>();
  net.emplace<Linear>(channels * h * w, spec.hidden, rng);
  net.emplace<Activation>(act, config);
  if (spec.fc_dropout > 0.0) net.emplace<Dropout>(spec.fc_dropout, rng.next_u64());
  net.emplace<Linear>(spec.hidden, spec.classes, rng);
  return net;
}

}  // namespace pelu
