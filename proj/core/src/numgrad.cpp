// Copyright (c) 2026 The Lifelong Authors. All Rights Reserved.
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

#include "lifelong/numgrad.hpp"

#include <algorithm>
#include <cmath>

namespace lifelong {

NumericWarnings& numeric_warnings() {
  thread_local NumericWarnings warnings;
  return warnings;
}

void reset_numeric_warnings() { numeric_warnings() = NumericWarnings{}; }

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != rows * cols) {
    throw ContractViolation("Matrix: data length does not match rows*cols");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

std::size_t ParamLayout::add(std::string name, std::size_t rows, std::size_t cols) {
  for (const auto& s : segments_) {
    if (s.name == name) throw ContractViolation("ParamLayout: duplicate segment " + name);
  }
  segments_.push_back(Segment{std::move(name), rows, cols, total_});
  total_ += rows * cols;
  return segments_.size() - 1;
}

std::size_t ParamLayout::find(const std::string& name) const {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].name == name) return i;
  }
  throw ContractViolation("ParamLayout: no segment named " + name);
}

ParamVector::ParamVector(std::shared_ptr<const ParamLayout> layout)
    : layout_(std::move(layout)), values_(layout_->total(), 0.0) {}

std::span<const double> ParamVector::segment(std::size_t seg) const {
  const auto& s = layout_->segment(seg);
  return std::span<const double>(values_).subspan(s.offset, s.size());
}

std::span<double> ParamVector::mutable_segment(std::size_t seg) {
  ++version_;
  const auto& s = layout_->segment(seg);
  return std::span<double>(values_).subspan(s.offset, s.size());
}

GradVector::GradVector(std::shared_ptr<const ParamLayout> layout)
    : layout_(std::move(layout)), values_(layout_->total(), 0.0) {}

std::span<const double> GradVector::segment(std::size_t seg) const {
  const auto& s = layout_->segment(seg);
  return std::span<const double>(values_).subspan(s.offset, s.size());
}

std::span<double> GradVector::segment(std::size_t seg) {
  const auto& s = layout_->segment(seg);
  return std::span<double>(values_).subspan(s.offset, s.size());
}

void GradVector::zero_segment(std::size_t seg) {
  auto s = segment(seg);
  std::fill(s.begin(), s.end(), 0.0);
}

GradVector& GradVector::operator+=(const GradVector& other) {
  if (other.values_.size() != values_.size()) {
    throw ContractViolation("GradVector: layout mismatch in +=");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

GradVector& GradVector::operator*=(double factor) {
  for (auto& v : values_) v *= factor;
  return *this;
}

bool GradVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void affine_apply(std::span<const double> weight, std::size_t rows, std::size_t cols,
                  std::span<const double> bias, std::span<const double> x, std::span<double> out) {
  if (x.size() != cols || bias.size() != rows || weight.size() != rows * cols || out.size() != rows) {
    throw ContractViolation("affine: dimension mismatch (W is " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", x has length " + std::to_string(x.size()) + ")");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    const double* w = weight.data() + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += w[j] * x[j];
    out[i] = acc + bias[i];
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine(std::span<const double> u, std::span<const double> v) {
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) {
    ++numeric_warnings().zero_norm_cosine;
    return 0.0;
  }
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

double margin_rank_loss(double score_pos, double score_neg, double margin) {
  if (!(margin > 0.0)) throw ContractViolation("margin_rank_loss: margin must be positive");
  return std::max(0.0, margin - score_pos + score_neg);
}

void sgd_step(ParamVector& params, const GradVector& grad, double lr) {
  if (!(lr > 0.0)) throw ContractViolation("sgd_step: learning rate must be positive");
  if (grad.size() != params.size()) throw ContractViolation("sgd_step: layout mismatch");
  if (!grad.all_finite()) throw NumericError("sgd_step: non-finite gradient entry");
  auto values = params.mutable_values();
  const auto g = grad.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= lr * g[i];
}

Tape::Tape(const ParamVector& params) : params_(&params), params_version_(params.version()) {}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.index >= nodes_.size()) throw ContractViolation("Tape: variable does not belong to this tape");
  return nodes_[v.index];
}

double Tape::scalar(Var v) const {
  const auto& n = node(v);
  if (n.value.size() != 1) throw ContractViolation("Tape: value is not a scalar");
  return n.value[0];
}

Var Tape::constant(std::vector<double> value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::affine(std::size_t weight_seg, std::size_t bias_seg, Var x) {
  const auto& layout = params_->layout();
  const auto& ws = layout.segment(weight_seg);
  const auto& bs = layout.segment(bias_seg);
  if (bs.size() != ws.rows) throw ContractViolation("affine: bias length does not match weight rows");
  Node n;
  n.op = Op::kAffine;
  n.needs_grad = true;
  n.a = x.index;
  n.weight_seg = weight_seg;
  n.bias_seg = bias_seg;
  n.value.assign(ws.rows, 0.0);
  affine_apply(params_->segment(weight_seg), ws.rows, ws.cols, params_->segment(bias_seg), node(x).value,
               n.value);
  return push(std::move(n));
}

Var Tape::tanh(Var x) {
  const auto& in = node(x);
  Node n;
  n.op = Op::kTanh;
  n.needs_grad = in.needs_grad;
  n.a = x.index;
  n.value.resize(in.value.size());
  std::transform(in.value.begin(), in.value.end(), n.value.begin(), [](double v) { return std::tanh(v); });
  return push(std::move(n));
}

Var Tape::cosine(Var u, Var v) {
  const auto& nu_node = node(u);
  const auto& nv_node = node(v);
  Node n;
  n.op = Op::kCosine;
  n.needs_grad = nu_node.needs_grad || nv_node.needs_grad;
  n.a = u.index;
  n.b = v.index;
  const double nu = norm(nu_node.value);
  const double nv = norm(nv_node.value);
  n.aux = {nu, nv};
  n.value = {lifelong::cosine(nu_node.value, nv_node.value)};
  return push(std::move(n));
}

Var Tape::hinge(Var score_pos, Var score_neg, double margin) {
  Node n;
  n.op = Op::kHinge;
  n.needs_grad = node(score_pos).needs_grad || node(score_neg).needs_grad;
  n.a = score_pos.index;
  n.b = score_neg.index;
  n.scalar = margin;
  n.value = {margin_rank_loss(scalar(score_pos), scalar(score_neg), margin)};
  return push(std::move(n));
}

Var Tape::squared_distance(Var x, std::vector<double> target) {
  const auto& in = node(x);
  if (target.size() != in.value.size()) throw ContractViolation("squared_distance: length mismatch");
  Node n;
  n.op = Op::kSquaredDistance;
  n.needs_grad = in.needs_grad;
  n.a = x.index;
  n.aux.resize(target.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    n.aux[i] = in.value[i] - target[i];
    acc += n.aux[i] * n.aux[i];
  }
  n.value = {acc};
  return push(std::move(n));
}

Var Tape::sum(std::span<const Var> terms) {
  Node n;
  n.op = Op::kSum;
  double acc = 0.0;
  for (Var t : terms) {
    const auto& tn = node(t);
    if (tn.value.size() != 1) throw ContractViolation("Tape::sum: terms must be scalars");
    acc += tn.value[0];
    n.needs_grad = n.needs_grad || tn.needs_grad;
    n.terms.push_back(t.index);
  }
  n.value = {acc};
  return push(std::move(n));
}

Var Tape::scale(Var x, double factor) {
  const auto& in = node(x);
  Node n;
  n.op = Op::kScale;
  n.needs_grad = in.needs_grad;
  n.a = x.index;
  n.scalar = factor;
  n.value.resize(in.value.size());
  for (std::size_t i = 0; i < in.value.size(); ++i) n.value[i] = in.value[i] * factor;
  return push(std::move(n));
}

GradVector Tape::backward(Var loss, double seed) const {
  GradVector grad(params_->layout_ptr());
  backward_into(loss, seed, grad);
  return grad;
}

void Tape::backward_into(Var loss, double seed, GradVector& grad) const {
  if (nodes_.empty() || loss.index + 1 != nodes_.size()) {
    throw ContractViolation("Tape::backward: tape was extended after the loss was recorded");
  }
  if (params_->version() != params_version_) {
    throw ContractViolation("Tape::backward: parameters changed since the forward pass");
  }
  if (node(loss).value.size() != 1) throw ContractViolation("Tape::backward: loss must be a scalar");
  if (grad.size() != params_->size()) throw ContractViolation("Tape::backward: gradient layout mismatch");

  std::vector<std::vector<double>> adj(nodes_.size());
  adj[loss.index] = {seed};
  auto adj_of = [&](std::uint32_t i) -> std::vector<double>& {
    if (adj[i].empty()) adj[i].assign(nodes_[i].value.size(), 0.0);
    return adj[i];
  };

  const auto& layout = params_->layout();
  for (std::size_t idx = nodes_.size(); idx-- > 0;) {
    const Node& n = nodes_[idx];
    if (adj[idx].empty() || !n.needs_grad) continue;
    const auto& g = adj[idx];
    switch (n.op) {
      case Op::kConstant:
        break;
      case Op::kAffine: {
        const auto& ws = layout.segment(n.weight_seg);
        const auto& x = nodes_[n.a].value;
        auto gw = grad.segment(n.weight_seg);
        auto gb = grad.segment(n.bias_seg);
        for (std::size_t i = 0; i < ws.rows; ++i) {
          if (g[i] == 0.0) continue;
          gb[i] += g[i];
          double* row = gw.data() + i * ws.cols;
          for (std::size_t j = 0; j < ws.cols; ++j) row[j] += g[i] * x[j];
        }
        if (nodes_[n.a].needs_grad) {
          const auto w = params_->segment(n.weight_seg);
          auto& gx = adj_of(n.a);
          for (std::size_t i = 0; i < ws.rows; ++i) {
            if (g[i] == 0.0) continue;
            const double* row = w.data() + i * ws.cols;
            for (std::size_t j = 0; j < ws.cols; ++j) gx[j] += row[j] * g[i];
          }
        }
        break;
      }
      case Op::kTanh: {
        auto& gx = adj_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
        break;
      }
      case Op::kCosine: {
        const double nu = n.aux[0];
        const double nv = n.aux[1];
        if (nu == 0.0 || nv == 0.0) break;
        const double c = n.value[0];
        const auto& u = nodes_[n.a].value;
        const auto& v = nodes_[n.b].value;
        const double inv = 1.0 / (nu * nv);
        if (nodes_[n.a].needs_grad) {
          auto& gu = adj_of(n.a);
          for (std::size_t i = 0; i < u.size(); ++i) gu[i] += g[0] * (v[i] * inv - c * u[i] / (nu * nu));
        }
        if (nodes_[n.b].needs_grad) {
          auto& gv = adj_of(n.b);
          for (std::size_t i = 0; i < v.size(); ++i) gv[i] += g[0] * (u[i] * inv - c * v[i] / (nv * nv));
        }
        break;
      }
      case Op::kHinge: {
        if (n.value[0] <= 0.0) break;
        if (nodes_[n.a].needs_grad) adj_of(n.a)[0] -= g[0];
        if (nodes_[n.b].needs_grad) adj_of(n.b)[0] += g[0];
        break;
      }
      case Op::kSquaredDistance: {
        auto& gx = adj_of(n.a);
        for (std::size_t i = 0; i < n.aux.size(); ++i) gx[i] += 2.0 * n.aux[i] * g[0];
        break;
      }
      case Op::kSum:
        for (auto t : n.terms) {
          if (nodes_[t].needs_grad) adj_of(t)[0] += g[0];
        }
        break;
      case Op::kScale: {
        auto& gx = adj_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.scalar;
        break;
      }
    }
  }
}

}  // namespace lifelong
