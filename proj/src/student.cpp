// Copyright 2026 The kdalign Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kdalign/student.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "kdalign/error.hpp"

namespace kdalign {
namespace {

AffineLayer zero_like(const AffineLayer& l) {
  return {Matrix(l.weight.rows(), l.weight.cols()), Vector(l.bias.size(), 0.0)};
}

AffineLayer uniform_layer(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  AffineLayer l{Matrix(in, out), Vector(out)};
  for (double& w : l.weight.data()) w = dist(rng);
  for (double& b : l.bias) b = dist(rng);
  return l;
}

Matrix affine(const Matrix& x, const AffineLayer& l) {
  const std::size_t out_dim = l.weight.cols();
  Matrix y(x.rows(), out_dim);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto yr = y.row(r);
    std::ranges::copy(l.bias, yr.begin());
    const auto xr = x.row(r);
    for (std::size_t i = 0; i < xr.size(); ++i) {
      const double xi = xr[i];
      const auto wi = l.weight.row(i);
      for (std::size_t j = 0; j < out_dim; ++j) yr[j] += xi * wi[j];
    }
  }
  return y;
}

// Accumulates x^T g into grad.weight and column sums of g into grad.bias;
// returns g * W^T when `propagate` is set.
Matrix affine_backward(const Matrix& x, const AffineLayer& l, const Matrix& g, AffineLayer& grad,
                       bool propagate) {
  const std::size_t in_dim = l.weight.rows();
  const std::size_t out_dim = l.weight.cols();
  Matrix gx = propagate ? Matrix(x.rows(), in_dim) : Matrix();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    const auto gr = g.row(r);
    for (std::size_t j = 0; j < out_dim; ++j) grad.bias[j] += gr[j];
    for (std::size_t i = 0; i < in_dim; ++i) {
      auto gw = grad.weight.row(i);
      const auto wi = l.weight.row(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < out_dim; ++j) {
        gw[j] += xr[i] * gr[j];
        acc += gr[j] * wi[j];
      }
      if (propagate) gx(r, i) = acc;
    }
  }
  return gx;
}

bool layers_finite(const std::vector<AffineLayer>& layers) {
  return std::ranges::all_of(layers, [](const AffineLayer& l) {
    return kdalign::all_finite(l.weight.data()) && kdalign::all_finite(l.bias);
  });
}

}  // namespace

std::string_view arch_name(Arch a) { return a == Arch::kLinear ? "linear" : "mlp2"; }

std::optional<Arch> parse_arch(std::string_view name) {
  if (name == "linear") return Arch::kLinear;
  if (name == "mlp2") return Arch::kMlp2;
  return std::nullopt;
}

std::size_t StudentParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

bool StudentParams::all_finite() const { return layers_finite(layers); }

StudentGrads& StudentGrads::operator+=(const StudentGrads& other) {
  if (other.layers.size() != layers.size()) fail(ErrorCode::kDimMismatch, "gradient layer count");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight += other.layers[i].weight;
    for (std::size_t j = 0; j < layers[i].bias.size(); ++j) {
      layers[i].bias[j] += other.layers[i].bias[j];
    }
  }
  return *this;
}

bool StudentGrads::all_finite() const { return layers_finite(layers); }

StudentParams student_init(Arch arch, std::size_t in_dim, std::size_t out_dim,
                           std::uint64_t seed, std::size_t hidden_dim) {
  if (in_dim == 0 || out_dim == 0) fail(ErrorCode::kBadConfig, "student dims must be >= 1");
  std::mt19937_64 rng(seed);
  StudentParams p;
  p.arch = arch;
  p.in_dim = in_dim;
  p.out_dim = out_dim;
  if (arch == Arch::kLinear) {
    p.layers.push_back(uniform_layer(in_dim, out_dim, rng));
  } else {
    p.hidden_dim = hidden_dim == 0 ? out_dim : hidden_dim;
    p.layers.push_back(uniform_layer(in_dim, p.hidden_dim, rng));
    p.layers.push_back(uniform_layer(p.hidden_dim, out_dim, rng));
  }
  return p;
}

StudentParams student_identity(std::size_t in_dim, std::size_t out_dim) {
  if (in_dim == 0 || out_dim == 0) fail(ErrorCode::kBadConfig, "student dims must be >= 1");
  StudentParams p;
  p.arch = Arch::kLinear;
  p.in_dim = in_dim;
  p.out_dim = out_dim;
  AffineLayer l{Matrix(in_dim, out_dim), Vector(out_dim, 0.0)};
  for (std::size_t i = 0; i < std::min(in_dim, out_dim); ++i) l.weight(i, i) = 1.0;
  p.layers.push_back(std::move(l));
  return p;
}

StudentGrads zero_grads(const StudentParams& p) {
  StudentGrads g;
  for (const auto& l : p.layers) g.layers.push_back(zero_like(l));
  return g;
}

ForwardResult student_forward(const StudentParams& p, const Matrix& x) {
  if (x.cols() != p.in_dim) {
    fail(ErrorCode::kDimMismatch, "student expects " + std::to_string(p.in_dim) +
                                      " input features, got " + std::to_string(x.cols()));
  }
  ForwardResult out;
  out.tape.input = x;
  if (p.arch == Arch::kLinear) {
    out.output = affine(x, p.layers[0]);
  } else {
    Matrix h = affine(x, p.layers[0]);
    for (double& v : h.data()) v = std::tanh(v);
    out.output = affine(h, p.layers[1]);
    out.tape.hidden = std::move(h);
  }
  return out;
}

Matrix student_embed(const StudentParams& p, const Matrix& x) {
  return student_forward(p, x).output;
}

StudentGrads student_backward(const StudentParams& p, const ForwardTape& tape,
                              const Matrix& grad_output) {
  if (grad_output.rows() != tape.input.rows() || grad_output.cols() != p.out_dim) {
    fail(ErrorCode::kDimMismatch, "gradient shape does not match student output");
  }
  StudentGrads g = zero_grads(p);
  if (p.arch == Arch::kLinear) {
    affine_backward(tape.input, p.layers[0], grad_output, g.layers[0], false);
    return g;
  }
  Matrix gh = affine_backward(tape.hidden, p.layers[1], grad_output, g.layers[1], true);
  const auto h = tape.hidden.data();
  auto ghd = gh.data();
  for (std::size_t i = 0; i < ghd.size(); ++i) ghd[i] *= 1.0 - h[i] * h[i];
  affine_backward(tape.input, p.layers[0], gh, g.layers[0], false);
  return g;
}

OptimizerState adam_init(const StudentParams& p, const AdamConfig& config) {
  if (!(config.base_lr >= 0.0) || !(config.beta1 >= 0.0 && config.beta1 < 1.0) ||
      !(config.beta2 >= 0.0 && config.beta2 < 1.0) || !(config.eps > 0.0)) {
    fail(ErrorCode::kBadConfig, "invalid Adam hyperparameters");
  }
  OptimizerState s;
  s.config = config;
  for (const auto& l : p.layers) {
    s.first_moment.push_back(zero_like(l));
    s.second_moment.push_back(zero_like(l));
  }
  return s;
}

double effective_lr(const OptimizerState& opt) {
  const auto& c = opt.config;
  if (c.warmup_steps == 0 || opt.step >= c.warmup_steps) return c.base_lr;
  return c.base_lr * static_cast<double>(opt.step) / static_cast<double>(c.warmup_steps);
}

void adam_step(OptimizerState& opt, StudentParams& p, const StudentGrads& grads) {
  if (grads.layers.size() != p.layers.size() || opt.first_moment.size() != p.layers.size()) {
    fail(ErrorCode::kDimMismatch, "optimizer/parameter layer count mismatch");
  }
  if (!grads.all_finite()) {
    fail(ErrorCode::kNonFiniteGradient, "non-finite gradient at step " + std::to_string(opt.step));
  }
  const auto& c = opt.config;
  const double lr = effective_lr(opt);
  const double t = static_cast<double>(opt.step + 1);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  auto update = [&](std::span<double> param, std::span<const double> grad, std::span<double> m,
                    std::span<double> v) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      param[i] -= lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  };
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    update(p.layers[l].weight.data(), grads.layers[l].weight.data(),
           opt.first_moment[l].weight.data(), opt.second_moment[l].weight.data());
    update(p.layers[l].bias, grads.layers[l].bias, opt.first_moment[l].bias,
           opt.second_moment[l].bias);
  }
  ++opt.step;
}

}  // namespace kdalign
