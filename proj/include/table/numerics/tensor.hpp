#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace table::numerics {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Operand shapes are incompatible with the requested operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation was violated.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A forward op produced NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  std::span<T> ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};

template <typename T>
class Tape;

/// Handle to a shared tensor node. Copies alias the same storage; use clone()
/// for an independent copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node_->data.size(); }

  std::span<const T> data() const { return node_->data; }
  /// Direct write access; only meaningful for leaves (parameters, inputs).
  std::span<T> mutable_data() { return node_->data; }
  T item() const;
  T operator[](std::size_t flat) const { return node_->data[flat]; }
  T at(std::size_t row, std::size_t col) const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient buffer; zeros if nothing has been accumulated yet.
  std::span<const T> grad() const;
  std::span<T> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() { node_->grad.clear(); }

  Tensor clone() const;
  /// Same values, cut from the tape.
  Tensor detach() const;

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Ordered record of differentiable ops. Ops are recorded only while a tape is
/// active on the current thread (see TapeScope); backward() replays it in
/// exact reverse order and then resets it.
template <typename T>
class Tape {
 public:
  void record(std::shared_ptr<Node<T>> node) { ops_.push_back(std::move(node)); }
  std::size_t size() const { return ops_.size(); }
  bool contains(const Node<T>* node) const;
  void reset() { ops_.clear(); }
  void backward(const Tensor<T>& loss);

  /// Active tape of the calling thread, or nullptr.
  static Tape* current() { return current_slot(); }
  static Tape*& current_slot();

 private:
  std::vector<std::shared_ptr<Node<T>>> ops_;
};

/// Activates a tape for the lifetime of the scope on the calling thread.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape) : previous_(Tape<T>::current_slot()) {
    Tape<T>::current_slot() = &tape;
  }
  ~TapeScope() { Tape<T>::current_slot() = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

/// Suspends recording (inference, finite differences).
template <typename T>
class NoGradScope {
 public:
  NoGradScope() : previous_(Tape<T>::current_slot()) { Tape<T>::current_slot() = nullptr; }
  ~NoGradScope() { Tape<T>::current_slot() = previous_; }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape<T>* previous_;
};

/// Runs backward over the active tape from a scalar loss.
template <typename T>
void backward(const Tensor<T>& loss);

namespace detail {

/// Builds an op output, recording it on the active tape when any input needs
/// gradients. `backward` receives the output node whose grad is populated.
template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> values,
                      std::vector<std::shared_ptr<Node<T>>> inputs,
                      std::function<void(Node<T>&)> backward);

}  // namespace detail

}  // namespace table::numerics
