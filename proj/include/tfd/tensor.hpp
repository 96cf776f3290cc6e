// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tfd {

class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<int> dims);
    explicit Shape(std::vector<int> dims);

    int rank() const noexcept { return static_cast<int>(dims_.size()); }
    int operator[](int axis) const { return dims_.at(static_cast<std::size_t>(axis)); }
    const std::vector<int>& dims() const noexcept { return dims_; }
    std::size_t numel() const noexcept;

    bool operator==(const Shape&) const = default;
    std::string str() const;

private:
    std::vector<int> dims_;
};

class Tape;

/// Dense row-major array of doubles, optionally recorded on a Tape.
///
/// Storage is shared between copies and never written through a const
/// path, so ops can keep references to their inputs for the backward pass
/// without copying. `mutable_data()` detaches (copy-on-write) and drops the
/// tape link.
class Tensor {
public:
    Tensor();
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor scalar(double value);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t numel() const noexcept { return data_->size(); }
    std::span<const double> data() const noexcept { return {data_->data(), data_->size()}; }
    std::span<double> mutable_data();
    double operator[](std::size_t i) const { return (*data_)[i]; }
    double item() const;

    // NCHW helpers; only valid for rank-4 tensors.
    int n() const { return shape_[0]; }
    int c() const { return shape_[1]; }
    int h() const { return shape_[2]; }
    int w() const { return shape_[3]; }
    double at(int n, int c, int y, int x) const;

    Tape* tape() const noexcept { return tape_; }
    int node() const noexcept { return node_; }
    bool tracked() const noexcept { return tape_ != nullptr; }

    /// Same values, no tape link.
    Tensor detach() const;

private:
    friend class Tape;
    friend Tensor reshape(const Tensor&, Shape);

    Shape shape_;
    std::shared_ptr<std::vector<double>> data_;
    Tape* tape_ = nullptr;
    int node_ = -1;
};

struct Param {
    std::string name;
    Tensor value;
    std::vector<double> grad;
};

/// Named parameters in insertion order. Addresses are stable for the
/// lifetime of the store.
class ParamStore {
public:
    Param& add(std::string name, Tensor init);
    Param& get(std::string_view name);
    const Param& get(std::string_view name) const;
    Param* find(std::string_view name);
    bool contains(std::string_view name) const;

    void zero_grad();
    std::size_t size() const noexcept { return params_.size(); }
    std::size_t scalar_count() const;
    std::size_t scalar_count(std::string_view prefix) const;

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::deque<Param> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Receives d(loss)/d(output) and accumulates into each parent's gradient.
/// Parents that are not tracked get an empty span.
using BackwardFn = std::function<void(std::span<const double> grad_out,
                                      std::span<const std::span<double>> grad_in)>;

/// Append-only record of differentiable operations.
///
/// Nodes are stored in creation order, which is a topological order since an
/// op can only consume tensors that already exist. A tape is single-owner.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf bound to a parameter: backward() adds into `p.grad`.
    Tensor watch(Param& p);
    /// Free leaf; its gradient is read back with grad().
    Tensor watch(const Tensor& t);

    /// Records `value` as the output of an op over `inputs`. Returns the value
    /// untracked when no input lives on a tape.
    static Tensor record(Tensor value, std::initializer_list<const Tensor*> inputs, BackwardFn fn);
    static Tensor record(Tensor value, std::span<const Tensor* const> inputs, BackwardFn fn);

    void backward(const Tensor& loss);

    /// Gradient of the last backward() with respect to a tensor on this tape.
    std::span<const double> grad(const Tensor& t) const;

    std::size_t size() const noexcept { return nodes_.size(); }
    void clear();

private:
    struct Node {
        Shape shape;
        std::vector<int> parents;
        BackwardFn backward;
        Param* param = nullptr;
    };

    int push(Node node);

    std::vector<Node> nodes_;
    std::vector<std::vector<double>> grads_;
};

/// Binds parameters to a tape once per forward pass. With a null tape it
/// hands out plain values, so the same model code serves inference.
class Binder {
public:
    explicit Binder(Tape* tape) : tape_(tape) {}
    Tensor operator()(Param& p);
    Tape* tape() const noexcept { return tape_; }

private:
    Tape* tape_;
    std::unordered_map<const Param*, Tensor> cache_;
};

}  // namespace tfd
