#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vitalcast/error.hpp"

namespace vitalcast {

/// Dense row-major tensor of doubles with an optional gradient buffer.
///
/// `requires_grad` marks tensors that participate in differentiation. Leaf
/// tensors created with requires_grad are the trainable parameters; tensors
/// produced by tape operations inherit the flag from their inputs so the
/// backward sweep knows which paths to follow.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    std::vector<double> grad; // empty until backward populates it
    bool requires_grad = false;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> d, bool rg = false);

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }
    /// 2-D access; no bounds checks beyond debug builds.
    double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    void ensure_grad();      // allocate zero grad if absent
    void clear_grad();       // drop the gradient buffer

    static std::string shape_str(const std::vector<std::size_t>& s);
};

using TensorPtr = std::shared_ptr<Tensor>;

/// Creates a tensor filled with zeros.
TensorPtr zeros(std::vector<std::size_t> shape, bool requires_grad = false);
/// Creates a tensor filled with a constant.
TensorPtr full(std::vector<std::size_t> shape, double value, bool requires_grad = false);
/// Creates a tensor from explicit data.
TensorPtr tensor_of(std::vector<std::size_t> shape, std::vector<double> data,
                    bool requires_grad = false);
/// Identity matrix of size n x n.
TensorPtr identity(std::size_t n, bool requires_grad = false);

/// Recording tape for reverse-mode differentiation.
///
/// Every operation appends its backward rule, so the tape is topologically
/// ordered by construction. backward() replays the rules in reverse and then
/// ensures every requires_grad participant has a gradient buffer (zeros for
/// parameters whose path to the loss was cut). The sweep consumes the tape;
/// gradient buffers stay on the tensors until cleared.
///
/// A tape built with recording=false evaluates forward only. One tape belongs
/// to one thread; tensors without gradient buffers are immutable after
/// creation and may be read concurrently.
class Tape {
public:
    explicit Tape(bool recording = true) : recording_(recording) {}

    // -- elementwise and shape ops ------------------------------------------
    TensorPtr relu(const TensorPtr& x);
    TensorPtr abs(const TensorPtr& x);
    TensorPtr add(const TensorPtr& a, const TensorPtr& b);
    TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
    TensorPtr scale(const TensorPtr& x, double c);
    TensorPtr reshape(const TensorPtr& x, std::vector<std::size_t> shape);
    /// Contiguous sub-range of the flat data as a 1-D tensor.
    TensorPtr slice(const TensorPtr& x, std::size_t offset, std::size_t len);
    /// Concatenation of 1-D tensors into one 1-D tensor.
    TensorPtr concat(const std::vector<TensorPtr>& parts);

    // -- linear algebra -----------------------------------------------------
    TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);

    // -- reductions and normalizers -----------------------------------------
    TensorPtr sum(const TensorPtr& x);
    TensorPtr softmax_rows(const TensorPtr& x);
    TensorPtr maxpool1d(const TensorPtr& x, std::size_t k);
    TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gain,
                         const TensorPtr& bias, double eps = 1e-5);
    TensorPtr mse_loss(const TensorPtr& pred, const TensorPtr& target);

    /// Reverse sweep from a scalar loss. Accumulates into existing gradient
    /// buffers, so batching works by calling backward once per sample.
    void backward(const TensorPtr& loss);

    void clear();
    std::size_t size() const { return records_.size(); }
    bool recording() const { return recording_; }

private:
    struct Record {
        std::vector<TensorPtr> inputs;
        TensorPtr output;
        std::function<void()> backprop;
    };

    TensorPtr make_output(std::vector<std::size_t> shape, std::vector<double> data,
                          const std::vector<TensorPtr>& inputs);
    void record(std::vector<TensorPtr> inputs, TensorPtr output,
                std::function<void()> backprop);

    std::vector<Record> records_;
    bool recording_;
};

/// Zeroes the gradients of a parameter set.
void zero_grads(const std::vector<TensorPtr>& params);

} // namespace vitalcast
