#include "vitalcast/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

namespace vitalcast {

namespace {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d, bool rg)
    : shape(std::move(s)), data(std::move(d)), requires_grad(rg) {
    if (data.size() != shape_numel(shape)) {
        throw ShapeError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
    }
}

void Tensor::ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
}

void Tensor::clear_grad() {
    grad.clear();
}

std::string Tensor::shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out << 'x';
        out << s[i];
    }
    out << ']';
    return out.str();
}

TensorPtr zeros(std::vector<std::size_t> shape, bool requires_grad) {
    std::size_t n = shape_numel(shape);
    return std::make_shared<Tensor>(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

TensorPtr full(std::vector<std::size_t> shape, double value, bool requires_grad) {
    std::size_t n = shape_numel(shape);
    return std::make_shared<Tensor>(std::move(shape), std::vector<double>(n, value), requires_grad);
}

TensorPtr tensor_of(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad) {
    return std::make_shared<Tensor>(std::move(shape), std::move(data), requires_grad);
}

TensorPtr identity(std::size_t n, bool requires_grad) {
    auto t = zeros({n, n}, requires_grad);
    for (std::size_t i = 0; i < n; ++i) t->at(i, i) = 1.0;
    return t;
}

TensorPtr Tape::make_output(std::vector<std::size_t> shape, std::vector<double> data,
                            const std::vector<TensorPtr>& inputs) {
    bool rg = false;
    for (const auto& in : inputs) rg = rg || in->requires_grad;
    return std::make_shared<Tensor>(std::move(shape), std::move(data), rg);
}

void Tape::record(std::vector<TensorPtr> inputs, TensorPtr output,
                  std::function<void()> backprop) {
    if (!recording_ || !output->requires_grad) return;
    records_.push_back({std::move(inputs), std::move(output), std::move(backprop)});
}

TensorPtr Tape::relu(const TensorPtr& x) {
    std::vector<double> out(x->numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->data[i] > 0.0 ? x->data[i] : 0.0;
    auto y = make_output(x->shape, std::move(out), {x});
    record({x}, y, [x, y] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        // Subgradient at 0 is 0.
        for (std::size_t i = 0; i < x->numel(); ++i)
            if (x->data[i] > 0.0) x->grad[i] += y->grad[i];
    });
    return y;
}

TensorPtr Tape::abs(const TensorPtr& x) {
    std::vector<double> out(x->numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::fabs(x->data[i]);
    auto y = make_output(x->shape, std::move(out), {x});
    record({x}, y, [x, y] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (std::size_t i = 0; i < x->numel(); ++i) {
            if (x->data[i] > 0.0) x->grad[i] += y->grad[i];
            else if (x->data[i] < 0.0) x->grad[i] -= y->grad[i];
        }
    });
    return y;
}

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape) {
        throw ShapeError("add: shape mismatch " + Tensor::shape_str(a->shape) + " vs " +
                         Tensor::shape_str(b->shape));
    }
    std::vector<double> out(a->numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] + b->data[i];
    auto y = make_output(a->shape, std::move(out), {a, b});
    record({a, b}, y, [a, b, y] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < a->numel(); ++i) a->grad[i] += y->grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < b->numel(); ++i) b->grad[i] += y->grad[i];
        }
    });
    return y;
}

TensorPtr Tape::sub(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape) {
        throw ShapeError("sub: shape mismatch " + Tensor::shape_str(a->shape) + " vs " +
                         Tensor::shape_str(b->shape));
    }
    std::vector<double> out(a->numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] - b->data[i];
    auto y = make_output(a->shape, std::move(out), {a, b});
    record({a, b}, y, [a, b, y] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < a->numel(); ++i) a->grad[i] += y->grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < b->numel(); ++i) b->grad[i] -= y->grad[i];
        }
    });
    return y;
}

TensorPtr Tape::scale(const TensorPtr& x, double c) {
    std::vector<double> out(x->numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * x->data[i];
    auto y = make_output(x->shape, std::move(out), {x});
    record({x}, y, [x, y, c] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (std::size_t i = 0; i < x->numel(); ++i) x->grad[i] += c * y->grad[i];
    });
    return y;
}

TensorPtr Tape::reshape(const TensorPtr& x, std::vector<std::size_t> shape) {
    if (shape_numel(shape) != x->numel()) {
        throw ShapeError("reshape: cannot view " + Tensor::shape_str(x->shape) + " as " +
                         Tensor::shape_str(shape));
    }
    auto y = make_output(std::move(shape), x->data, {x});
    record({x}, y, [x, y] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (std::size_t i = 0; i < x->numel(); ++i) x->grad[i] += y->grad[i];
    });
    return y;
}

TensorPtr Tape::slice(const TensorPtr& x, std::size_t offset, std::size_t len) {
    if (offset + len > x->numel()) {
        throw ShapeError("slice: range [" + std::to_string(offset) + ", " +
                         std::to_string(offset + len) + ") exceeds numel " +
                         std::to_string(x->numel()));
    }
    std::vector<double> out(x->data.begin() + offset, x->data.begin() + offset + len);
    auto y = make_output({len}, std::move(out), {x});
    record({x}, y, [x, y, offset, len] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (std::size_t i = 0; i < len; ++i) x->grad[offset + i] += y->grad[i];
    });
    return y;
}

TensorPtr Tape::concat(const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw UsageError("concat: no inputs");
    std::vector<double> out;
    for (const auto& p : parts) out.insert(out.end(), p->data.begin(), p->data.end());
    const std::size_t total = out.size();
    auto y = make_output({total}, std::move(out), parts);
    record(parts, y, [parts, y] {
        std::size_t off = 0;
        for (const auto& p : parts) {
            if (p->requires_grad) {
                p->ensure_grad();
                for (std::size_t i = 0; i < p->numel(); ++i) p->grad[i] += y->grad[off + i];
            }
            off += p->numel();
        }
    });
    return y;
}

TensorPtr Tape::matmul(const TensorPtr& a, const TensorPtr& b) {
    if (a->rank() != 2 || b->rank() != 2 || a->shape[1] != b->shape[0]) {
        throw ShapeError("matmul: incompatible shapes " + Tensor::shape_str(a->shape) +
                         " and " + Tensor::shape_str(b->shape));
    }
    const std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a->data.data() + i * k;
        double* orow = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b->data.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    auto y = make_output({m, n}, std::move(out), {a, b});
    record({a, b}, y, [a, b, y, m, k, n] {
        // dA = dO . B^T, dB = A^T . dO
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = y->grad.data() + i * n;
                double* garow = a->grad.data() + i * k;
                for (std::size_t p = 0; p < k; ++p) {
                    const double* brow = b->data.data() + p * n;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                    garow[p] += acc;
                }
            }
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                const double* arow = a->data.data() + i * k;
                const double* grow = y->grad.data() + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = arow[p];
                    if (av == 0.0) continue;
                    double* gbrow = b->grad.data() + p * n;
                    for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
                }
            }
        }
    });
    return y;
}

TensorPtr Tape::sum(const TensorPtr& x) {
    double s = 0.0;
    for (double v : x->data) s += v;
    auto y = make_output({1}, {s}, {x});
    record({x}, y, [x, y] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (std::size_t i = 0; i < x->numel(); ++i) x->grad[i] += y->grad[0];
    });
    return y;
}

TensorPtr Tape::softmax_rows(const TensorPtr& x) {
    if (x->rank() != 2 || x->shape[1] == 0) {
        throw ShapeError("softmax_rows: expected non-empty 2-D tensor, got " +
                         Tensor::shape_str(x->shape));
    }
    for (double v : x->data) {
        if (!std::isfinite(v)) throw NumericError("softmax_rows: non-finite input");
    }
    const std::size_t r = x->shape[0], c = x->shape[1];
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = x->data.data() + i * c;
        double* orow = out.data() + i * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            orow[j] = std::exp(row[j] - mx);
            denom += orow[j];
        }
        for (std::size_t j = 0; j < c; ++j) orow[j] /= denom;
    }
    auto y = make_output({r, c}, std::move(out), {x});
    record({x}, y, [x, y, r, c] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (std::size_t i = 0; i < r; ++i) {
            const double* yrow = y->data.data() + i * c;
            const double* grow = y->grad.data() + i * c;
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += grow[j] * yrow[j];
            double* gxrow = x->grad.data() + i * c;
            for (std::size_t j = 0; j < c; ++j) gxrow[j] += yrow[j] * (grow[j] - dot);
        }
    });
    return y;
}

TensorPtr Tape::maxpool1d(const TensorPtr& x, std::size_t k) {
    if (k == 0) throw ConfigError("maxpool1d: kernel size must be >= 1");
    if (x->rank() != 1) {
        throw ShapeError("maxpool1d: expected 1-D tensor, got " + Tensor::shape_str(x->shape));
    }
    const std::size_t len = x->numel();
    const std::size_t olen = (len + k - 1) / k;
    std::vector<double> out(olen);
    auto argmax = std::make_shared<std::vector<std::size_t>>(olen);
    for (std::size_t i = 0; i < olen; ++i) {
        std::size_t begin = i * k;
        std::size_t end = std::min(begin + k, len);
        std::size_t best = begin;
        for (std::size_t j = begin + 1; j < end; ++j)
            if (x->data[j] > x->data[best]) best = j; // ties keep the lowest index
        out[i] = x->data[best];
        (*argmax)[i] = best;
    }
    auto y = make_output({olen}, std::move(out), {x});
    record({x}, y, [x, y, argmax] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (std::size_t i = 0; i < argmax->size(); ++i) x->grad[(*argmax)[i]] += y->grad[i];
    });
    return y;
}

TensorPtr Tape::layer_norm(const TensorPtr& x, const TensorPtr& gain, const TensorPtr& bias,
                           double eps) {
    const std::size_t n = x->numel();
    if (gain->numel() != n || bias->numel() != n) {
        throw ShapeError("layer_norm: gain/bias length must match input length " +
                         std::to_string(n));
    }
    if (n == 0) throw ShapeError("layer_norm: empty input");
    double mean = 0.0;
    for (double v : x->data) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x->data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n); // population variance
    const double inv_sd = 1.0 / std::sqrt(var + eps);
    std::vector<double> xhat(n), out(n);
    for (std::size_t i = 0; i < n; ++i) {
        xhat[i] = (x->data[i] - mean) * inv_sd;
        out[i] = xhat[i] * gain->data[i] + bias->data[i];
    }
    auto xhat_keep = std::make_shared<std::vector<double>>(std::move(xhat));
    auto y = make_output(x->shape, std::move(out), {x, gain, bias});
    record({x, gain, bias}, y, [x, gain, bias, y, xhat_keep, inv_sd, n] {
        const auto& xh = *xhat_keep;
        if (gain->requires_grad) {
            gain->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) gain->grad[i] += y->grad[i] * xh[i];
        }
        if (bias->requires_grad) {
            bias->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) bias->grad[i] += y->grad[i];
        }
        if (x->requires_grad) {
            x->ensure_grad();
            // dxhat = dy * gain; dx = inv_sd * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat))
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double dxh = y->grad[i] * gain->data[i];
                m1 += dxh;
                m2 += dxh * xh[i];
            }
            m1 /= static_cast<double>(n);
            m2 /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                double dxh = y->grad[i] * gain->data[i];
                x->grad[i] += inv_sd * (dxh - m1 - xh[i] * m2);
            }
        }
    });
    return y;
}

TensorPtr Tape::mse_loss(const TensorPtr& pred, const TensorPtr& target) {
    if (pred->shape != target->shape) {
        throw ShapeError("mse_loss: shape mismatch " + Tensor::shape_str(pred->shape) +
                         " vs " + Tensor::shape_str(target->shape));
    }
    const std::size_t n = pred->numel();
    if (n == 0) throw ShapeError("mse_loss: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = pred->data[i] - target->data[i];
        acc += d * d;
    }
    auto y = make_output({1}, {acc / static_cast<double>(n)}, {pred, target});
    record({pred, target}, y, [pred, target, y, n] {
        const double up = y->grad[0] * 2.0 / static_cast<double>(n);
        if (pred->requires_grad) {
            pred->ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
                pred->grad[i] += up * (pred->data[i] - target->data[i]);
        }
        if (target->requires_grad) {
            target->ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
                target->grad[i] -= up * (pred->data[i] - target->data[i]);
        }
    });
    return y;
}

void Tape::backward(const TensorPtr& loss) {
    if (loss->numel() != 1) {
        throw UsageError("backward: loss must be a scalar, got shape " +
                         Tensor::shape_str(loss->shape));
    }
    loss->ensure_grad();
    loss->grad[0] += 1.0;
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        if (it->output->grad.empty()) continue; // not on the path to the loss
        it->backprop();
    }
    // Participating parameters disconnected from the loss get zero gradients.
    for (const auto& rec : records_) {
        for (const auto& in : rec.inputs) {
            if (in->requires_grad) in->ensure_grad();
        }
    }
    records_.clear(); // tape consumed
}

void Tape::clear() {
    records_.clear();
}

void zero_grads(const std::vector<TensorPtr>& params) {
    for (const auto& p : params) p->clear_grad();
}

} // namespace vitalcast
