// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include "tfd/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "tfd/error.hpp"

namespace tfd {

Shape::Shape(std::initializer_list<int> dims) : dims_(dims) {
    for (int d : dims_)
        if (d < 0) throw ShapeError("negative extent in shape " + str());
}

Shape::Shape(std::vector<int> dims) : dims_(std::move(dims)) {
    for (int d : dims_)
        if (d < 0) throw ShapeError("negative extent in shape " + str());
}

std::size_t Shape::numel() const noexcept {
    std::size_t n = 1;
    for (int d : dims_) n *= static_cast<std::size_t>(d);
    return n;
}

std::string Shape::str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (i) os << 'x';
        os << dims_[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor() : data_(std::make_shared<std::vector<double>>()) {}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(std::make_shared<std::vector<double>>(shape_.numel(), fill)) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::make_shared<std::vector<double>>(std::move(values))) {
    if (data_->size() != shape_.numel())
        throw ShapeError("tensor of shape " + shape_.str() + " given " +
                         std::to_string(data_->size()) + " values");
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{1}, std::vector<double>{value}); }

std::span<double> Tensor::mutable_data() {
    if (data_.use_count() > 1) data_ = std::make_shared<std::vector<double>>(*data_);
    tape_ = nullptr;
    node_ = -1;
    return {data_->data(), data_->size()};
}

double Tensor::item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_.str());
    return (*data_)[0];
}

double Tensor::at(int n, int c, int y, int x) const {
    const std::size_t idx =
        ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
    return (*data_)[idx];
}

Tensor Tensor::detach() const {
    Tensor t = *this;
    t.tape_ = nullptr;
    t.node_ = -1;
    return t;
}

// ---------------------------------------------------------------------------

Param& ParamStore::add(std::string name, Tensor init) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    index_.emplace(name, params_.size());
    std::vector<double> grad(init.numel(), 0.0);
    params_.push_back(Param{std::move(name), init.detach(), std::move(grad)});
    return params_.back();
}

Param* ParamStore::find(std::string_view name) {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? nullptr : &params_[it->second];
}

Param& ParamStore::get(std::string_view name) {
    Param* p = find(name);
    if (!p) throw ConfigError("unknown parameter: " + std::string(name));
    return *p;
}

const Param& ParamStore::get(std::string_view name) const {
    return const_cast<ParamStore*>(this)->get(name);
}

bool ParamStore::contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }

void ParamStore::zero_grad() {
    for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.numel();
    return n;
}

std::size_t ParamStore::scalar_count(std::string_view prefix) const {
    std::size_t n = 0;
    for (const auto& p : params_)
        if (std::string_view(p.name).substr(0, prefix.size()) == prefix) n += p.value.numel();
    return n;
}

// ---------------------------------------------------------------------------

int Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::watch(Param& p) {
    Tensor t = p.value.detach();
    t.tape_ = this;
    t.node_ = push(Node{t.shape(), {}, {}, &p});
    return t;
}

Tensor Tape::watch(const Tensor& value) {
    Tensor t = value.detach();
    t.tape_ = this;
    t.node_ = push(Node{t.shape(), {}, {}, nullptr});
    return t;
}

Tensor Tape::record(Tensor value, std::initializer_list<const Tensor*> inputs, BackwardFn fn) {
    return record(std::move(value), std::span<const Tensor* const>(inputs.begin(), inputs.size()),
                  std::move(fn));
}

Tensor Tape::record(Tensor value, std::span<const Tensor* const> inputs, BackwardFn fn) {
    Tape* tape = nullptr;
    for (const Tensor* in : inputs) {
        if (!in->tracked()) continue;
        if (tape && tape != in->tape()) throw Error("op mixes tensors from different tapes");
        tape = in->tape();
    }
    value.tape_ = nullptr;
    value.node_ = -1;
    if (!tape) return value;

    Node node;
    node.shape = value.shape();
    node.parents.reserve(inputs.size());
    for (const Tensor* in : inputs) node.parents.push_back(in->tracked() ? in->node() : -1);
    node.backward = std::move(fn);
    value.tape_ = tape;
    value.node_ = tape->push(std::move(node));
    return value;
}

void Tape::backward(const Tensor& loss) {
    if (loss.tape() != this) throw Error("backward(): loss is not recorded on this tape");
    if (loss.numel() != 1) throw ShapeError("backward(): loss must be scalar, got " + loss.shape().str());

    grads_.assign(nodes_.size(), {});
    grads_[static_cast<std::size_t>(loss.node())].assign(1, 1.0);

    std::vector<std::span<double>> parent_grads;
    for (int i = loss.node(); i >= 0; --i) {
        auto& g = grads_[static_cast<std::size_t>(i)];
        if (g.empty()) continue;
        const Node& node = nodes_[static_cast<std::size_t>(i)];
        if (node.param) {
            for (std::size_t k = 0; k < g.size(); ++k) node.param->grad[k] += g[k];
            continue;
        }
        if (!node.backward) continue;
        parent_grads.clear();
        for (int p : node.parents) {
            if (p < 0) {
                parent_grads.emplace_back();
                continue;
            }
            auto& pg = grads_[static_cast<std::size_t>(p)];
            if (pg.empty()) pg.assign(nodes_[static_cast<std::size_t>(p)].shape.numel(), 0.0);
            parent_grads.emplace_back(pg.data(), pg.size());
        }
        node.backward(std::span<const double>(g.data(), g.size()), parent_grads);
    }
}

std::span<const double> Tape::grad(const Tensor& t) const {
    if (t.tape() != this) throw Error("grad(): tensor is not recorded on this tape");
    const auto idx = static_cast<std::size_t>(t.node());
    if (idx >= grads_.size()) throw Error("grad(): no backward pass has reached this tensor");
    return {grads_[idx].data(), grads_[idx].size()};
}

void Tape::clear() {
    nodes_.clear();
    grads_.clear();
}

Tensor Binder::operator()(Param& p) {
    if (!tape_) return p.value;
    auto it = cache_.find(&p);
    if (it != cache_.end()) return it->second;
    Tensor t = tape_->watch(p);
    cache_.emplace(&p, t);
    return t;
}

}  // namespace tfd
