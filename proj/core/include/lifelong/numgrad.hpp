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

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lifelong {

/// Thrown when a caller breaks an operation's precondition (shape mismatch,
/// stale tape, budget overflow...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Thrown when a numeric guard trips, e.g. a non-finite gradient reaching
/// the optimizer.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-thread counters for conditions that are tolerated but worth
/// surfacing in run metadata.
struct NumericWarnings {
  std::uint64_t zero_norm_cosine = 0;
  std::uint64_t zero_reference_gradient = 0;
};

NumericWarnings& numeric_warnings();
void reset_numeric_warnings();

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values);

  static Matrix identity(std::size_t n);

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

struct Segment {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Segment&) const = default;
};

/// Ordered list of named parameter blocks. Fixed once a model is built.
class ParamLayout {
 public:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols);
  std::size_t find(const std::string& name) const;

  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& segment(std::size_t i) const { return segments_.at(i); }
  std::size_t total() const { return total_; }

  bool operator==(const ParamLayout&) const = default;

 private:
  std::vector<Segment> segments_;
  std::size_t total_ = 0;
};

class GradVector;

/// Flat parameter storage over a shared layout. Every mutable access bumps
/// a version counter so tapes can detect parameters changing under them.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::shared_ptr<const ParamLayout> layout);

  const ParamLayout& layout() const { return *layout_; }
  const std::shared_ptr<const ParamLayout>& layout_ptr() const { return layout_; }
  std::size_t size() const { return values_.size(); }
  std::uint64_t version() const { return version_; }

  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() {
    ++version_;
    return values_;
  }
  std::span<const double> segment(std::size_t seg) const;
  std::span<double> mutable_segment(std::size_t seg);

  bool same_values(const ParamVector& other) const { return values_ == other.values_; }

 private:
  std::shared_ptr<const ParamLayout> layout_;
  std::vector<double> values_;
  std::uint64_t version_ = 0;
};

/// Gradient over a ParamVector layout.
class GradVector {
 public:
  GradVector() = default;
  explicit GradVector(std::shared_ptr<const ParamLayout> layout);

  const ParamLayout& layout() const { return *layout_; }
  const std::shared_ptr<const ParamLayout>& layout_ptr() const { return layout_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::span<const double> segment(std::size_t seg) const;
  std::span<double> segment(std::size_t seg);

  void zero_segment(std::size_t seg);
  GradVector& operator+=(const GradVector& other);
  GradVector& operator*=(double factor);
  bool all_finite() const;

 private:
  std::shared_ptr<const ParamLayout> layout_;
  std::vector<double> values_;
};

// Plain kernels shared by the tape and by tape-free evaluation so both
// produce identical values.
void affine_apply(std::span<const double> weight, std::size_t rows, std::size_t cols,
                  std::span<const double> bias, std::span<const double> x, std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// Cosine similarity. A zero-norm operand yields 0 and bumps
/// numeric_warnings().zero_norm_cosine.
double cosine(std::span<const double> u, std::span<const double> v);

/// max(0, margin - score_pos + score_neg). Requires margin > 0.
double margin_rank_loss(double score_pos, double score_neg, double margin);

/// params <- params - lr * grad. Rejects non-finite gradients with NumericError.
void sgd_step(ParamVector& params, const GradVector& grad, double lr);

/// Handle to a value recorded on a Tape.
struct Var {
  std::uint32_t index = 0;
};

/// Reverse-mode tape for the small operator set the relation model needs.
/// Parameter operands are referenced by layout segment, so backward() can
/// scatter gradients straight into a GradVector.
class Tape {
 public:
  explicit Tape(const ParamVector& params);

  Var constant(std::vector<double> value);
  /// weight * x + bias where weight/bias are parameter segments.
  Var affine(std::size_t weight_seg, std::size_t bias_seg, Var x);
  Var tanh(Var x);
  Var cosine(Var u, Var v);
  Var hinge(Var score_pos, Var score_neg, double margin);
  /// Squared Euclidean distance to a fixed target.
  Var squared_distance(Var x, std::vector<double> target);
  Var sum(std::span<const Var> terms);
  Var scale(Var x, double factor);

  std::span<const double> value(Var v) const { return nodes_.at(v.index).value; }
  double scalar(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Gradient of `loss` (a scalar recorded last on this tape) times `seed`
  /// with respect to every parameter; segments the tape never touched stay 0.
  GradVector backward(Var loss, double seed = 1.0) const;
  /// Accumulating variant.
  void backward_into(Var loss, double seed, GradVector& grad) const;

 private:
  enum class Op : std::uint8_t { kConstant, kAffine, kTanh, kCosine, kHinge, kSquaredDistance, kSum, kScale };

  struct Node {
    Op op = Op::kConstant;
    bool needs_grad = false;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::size_t weight_seg = 0;
    std::size_t bias_seg = 0;
    double scalar = 0.0;
    std::vector<double> value;
    std::vector<double> aux;
    std::vector<std::uint32_t> terms;
  };

  Var push(Node node);
  const Node& node(Var v) const;

  const ParamVector* params_;
  std::uint64_t params_version_;
  std::vector<Node> nodes_;
};

}  // namespace lifelong
