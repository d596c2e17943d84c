#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "frontal/errors.hpp"

namespace frontal {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (std::int64_t e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

namespace detail {

struct TensorData {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad; // empty until needed; values.size() once allocated
    bool parameter = false;
    const void* producer_tape = nullptr; // tape that recorded the producing op

    std::int64_t numel() const { return static_cast<std::int64_t>(values.size()); }

    void ensure_grad() {
        if (grad.empty()) grad.assign(values.size(), 0.0);
    }
};

} // namespace detail

// N-dimensional double-precision array, row-major. Copies of a Tensor are
// shallow handles onto the same storage; clone() makes a deep copy. Values
// written by an op are never mutated afterwards; only leaf tensors (model
// parameters, latent codes under inversion) are updated in place, between
// tape lifetimes.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape) {
        return full(std::move(shape), 0.0);
    }

    static Tensor full(Shape shape, double value) {
        check_shape(shape);
        auto d = std::make_shared<detail::TensorData>();
        d->values.assign(static_cast<std::size_t>(shape_numel(shape)), value);
        d->shape = std::move(shape);
        return Tensor(std::move(d));
    }

    static Tensor from_values(Shape shape, std::vector<double> values) {
        check_shape(shape);
        if (shape_numel(shape) != static_cast<std::int64_t>(values.size())) {
            throw ShapeError("from_values: " + shape_str(shape) + " does not hold " +
                             std::to_string(values.size()) + " values");
        }
        auto d = std::make_shared<detail::TensorData>();
        d->shape = std::move(shape);
        d->values = std::move(values);
        return Tensor(std::move(d));
    }

    bool defined() const { return impl_ != nullptr; }

    const Shape& shape() const { return impl_->shape; }
    std::int64_t numel() const { return impl_->numel(); }

    std::span<const double> values() const { return impl_->values; }
    std::span<double> values_mut() { return impl_->values; }

    bool has_grad() const { return impl_ && !impl_->grad.empty(); }
    std::span<const double> grad() const {
        if (!has_grad()) throw ContractError("grad: no gradient populated");
        return impl_->grad;
    }
    std::span<double> grad_mut() {
        impl_->ensure_grad();
        return impl_->grad;
    }

    void zero_grad() {
        if (impl_ && !impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), 0.0);
    }

    void mark_parameter(bool on = true) { impl_->parameter = on; }
    bool is_parameter() const { return impl_ && impl_->parameter; }

    // Deep copy of the values; gradient and parameter mark are not copied.
    Tensor clone() const {
        auto d = std::make_shared<detail::TensorData>();
        d->shape = impl_->shape;
        d->values = impl_->values;
        return Tensor(std::move(d));
    }

    double item() const {
        if (numel() != 1) {
            throw ContractError("item: tensor has " + std::to_string(numel()) + " elements");
        }
        return impl_->values[0];
    }

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

    std::shared_ptr<detail::TensorData> impl() const { return impl_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorData> impl) : impl_(std::move(impl)) {}

    static void check_shape(const Shape& shape) {
        if (shape.empty()) throw ShapeError("tensor shape must be non-empty");
        for (std::int64_t e : shape) {
            if (e <= 0) throw ShapeError("tensor shape " + shape_str(shape) + " has a non-positive extent");
        }
    }

    friend class Tape;
    friend Tensor make_op_output(Shape, const void*);

    std::shared_ptr<detail::TensorData> impl_;
};

inline Tensor make_op_output(Shape shape, const void* tape) {
    Tensor t = Tensor::zeros(std::move(shape));
    t.impl_->producer_tape = tape;
    return t;
}

// Record of the forward pass. Each entry keeps the operand and output
// storages alive together with a backward rule; backward() replays the
// rules in reverse order, accumulating into operand gradients, then clears
// the tape.
class Tape {
public:
    struct Node {
        std::vector<std::shared_ptr<detail::TensorData>> inputs;
        std::shared_ptr<detail::TensorData> output;
        std::function<void()> backward;
    };

    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    void clear() { nodes_.clear(); }

    void record(std::vector<std::shared_ptr<detail::TensorData>> inputs,
                std::shared_ptr<detail::TensorData> output,
                std::function<void()> backward) {
        nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(backward)});
    }

    // Seeds d(loss)/d(loss) = 1 and visits every recorded op exactly once,
    // newest first. Ops whose output never received a gradient are dead
    // branches and are skipped. The tape is cleared afterwards; gradients
    // stay on the tensors.
    void backward(const Tensor& loss) {
        if (loss.numel() != 1) {
            throw ContractError("backward: loss must be a scalar, got shape " + shape_str(loss.shape()));
        }
        if (loss.impl()->producer_tape != this) {
            throw ContractError("backward: loss was not produced on this tape");
        }
        loss.impl()->grad.assign(1, 1.0);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            if (it->output->grad.empty()) continue;
            it->backward();
        }
        clear();
    }

private:
    std::vector<Node> nodes_;
};

inline void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

} // namespace frontal
