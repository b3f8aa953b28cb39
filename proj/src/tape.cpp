// SPDX-License-Identifier: Apache-2.0
#include "mlmkit/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <sstream>

namespace mlmkit {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

std::string shape_of(const std::vector<int64_t>& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ',';
        os << s[i];
    }
    os << ']';
    return os.str();
}

[[noreturn]] void shape_fail(const char* op, const Node* a, const Node* b = nullptr) {
    std::string msg = std::string(op) + ": incompatible shapes " + shape_of(a->value.shape);
    if (b) msg += " and " + shape_of(b->value.shape);
    throw ContractError(msg);
}

// C[m,n] = (or +=) A'[m,k] * B'[k,n], accumulating in float64.
// Stored A is [m,k], or [k,m] when ta; stored B is [k,n], or [n,k] when tb.
template <class TA, class TB, class TC>
void mm(const TA* A, const TB* B, TC* C, int64_t m, int64_t n, int64_t k, bool ta, bool tb,
        bool accumulate) {
    if (!ta && !tb) {
        std::vector<double> row(static_cast<size_t>(n));
        for (int64_t i = 0; i < m; ++i) {
            std::fill(row.begin(), row.end(), 0.0);
            const TA* arow = A + i * k;
            for (int64_t l = 0; l < k; ++l) {
                double a = static_cast<double>(arow[l]);
                const TB* brow = B + l * n;
                for (int64_t j = 0; j < n; ++j) row[static_cast<size_t>(j)] += a * static_cast<double>(brow[j]);
            }
            TC* crow = C + i * n;
            if (accumulate) {
                for (int64_t j = 0; j < n; ++j)
                    crow[j] = static_cast<TC>(static_cast<double>(crow[j]) + row[static_cast<size_t>(j)]);
            } else {
                for (int64_t j = 0; j < n; ++j) crow[j] = static_cast<TC>(row[static_cast<size_t>(j)]);
            }
        }
        return;
    }
    if (!ta && tb) {
        for (int64_t i = 0; i < m; ++i) {
            const TA* arow = A + i * k;
            TC* crow = C + i * n;
            for (int64_t j = 0; j < n; ++j) {
                const TB* brow = B + j * k;
                double s = 0.0;
                for (int64_t l = 0; l < k; ++l) s += static_cast<double>(arow[l]) * static_cast<double>(brow[l]);
                crow[j] = accumulate ? static_cast<TC>(static_cast<double>(crow[j]) + s) : static_cast<TC>(s);
            }
        }
        return;
    }
    if (ta && !tb) {
        // Rank-1 accumulation into a float64 staging buffer, flushed once.
        std::vector<double> acc(static_cast<size_t>(m * n), 0.0);
        for (int64_t l = 0; l < k; ++l) {
            const TA* arow = A + l * m;
            const TB* brow = B + l * n;
            for (int64_t i = 0; i < m; ++i) {
                double a = static_cast<double>(arow[i]);
                double* crow = acc.data() + i * n;
                for (int64_t j = 0; j < n; ++j) crow[j] += a * static_cast<double>(brow[j]);
            }
        }
        if (accumulate) {
            for (int64_t i = 0; i < m * n; ++i)
                C[i] = static_cast<TC>(static_cast<double>(C[i]) + acc[static_cast<size_t>(i)]);
        } else {
            for (int64_t i = 0; i < m * n; ++i) C[i] = static_cast<TC>(acc[static_cast<size_t>(i)]);
        }
        return;
    }
    // ta && tb: only reachable from hand-written backward rules, which never
    // need it, but keep it correct.
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (int64_t l = 0; l < k; ++l)
                s += static_cast<double>(A[l * m + i]) * static_cast<double>(B[j * k + l]);
            TC* c = C + i * n + j;
            *c = accumulate ? static_cast<TC>(static_cast<double>(*c) + s) : static_cast<TC>(s);
        }
    }
}

template <class TIn, class TOut>
void softmax_rows(const TIn* in, TOut* out, int64_t rows, int64_t cols) {
    for (int64_t r = 0; r < rows; ++r) {
        const TIn* x = in + r * cols;
        TOut* y = out + r * cols;
        double mx = static_cast<double>(x[0]);
        for (int64_t j = 1; j < cols; ++j) mx = std::max(mx, static_cast<double>(x[j]));
        double denom = 0.0;
        for (int64_t j = 0; j < cols; ++j) denom += std::exp(static_cast<double>(x[j]) - mx);
        for (int64_t j = 0; j < cols; ++j)
            y[j] = static_cast<TOut>(std::exp(static_cast<double>(x[j]) - mx) / denom);
    }
}

template <class TIn, class TOut>
void layer_norm_rows(const TIn* x, const TIn* gain, const TIn* bias, TOut* y, int64_t rows,
                     int64_t cols, double eps) {
    for (int64_t r = 0; r < rows; ++r) {
        const TIn* xr = x + r * cols;
        TOut* yr = y + r * cols;
        double mu = 0.0;
        for (int64_t j = 0; j < cols; ++j) mu += static_cast<double>(xr[j]);
        mu /= static_cast<double>(cols);
        double var = 0.0;
        for (int64_t j = 0; j < cols; ++j) {
            double d = static_cast<double>(xr[j]) - mu;
            var += d * d;
        }
        var /= static_cast<double>(cols);
        double inv = 1.0 / std::sqrt(var + eps);
        for (int64_t j = 0; j < cols; ++j) {
            double xh = (static_cast<double>(xr[j]) - mu) * inv;
            yr[j] = static_cast<TOut>(static_cast<double>(gain[j]) * xh + static_cast<double>(bias[j]));
        }
    }
}

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_deriv(double x) {
    return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

template <class T>
void heads_permute(const T* in, T* out, int64_t batch, int64_t seq, int64_t heads, int64_t dh,
                   bool splitting) {
    // split: in is [B*T, heads*dh], out is [B*heads, T, dh]; merge is the inverse.
    for (int64_t b = 0; b < batch; ++b)
        for (int64_t t = 0; t < seq; ++t)
            for (int64_t h = 0; h < heads; ++h) {
                const int64_t flat_in = (b * seq + t) * (heads * dh) + h * dh;
                const int64_t flat_out = ((b * heads + h) * seq + t) * dh;
                if (splitting)
                    std::copy(in + flat_in, in + flat_in + dh, out + flat_out);
                else
                    std::copy(in + flat_out, in + flat_out + dh, out + flat_in);
            }
}

std::vector<double>& gbuf(Node* n) {
    if (n->grad.empty()) n->grad.assign(static_cast<size_t>(n->numel()), 0.0);
    return n->grad;
}

bool needs(const Node* n) { return n->requires_grad; }

void check_finite(const Node* n) {
    if (!all_finite(n->value))
        throw NumericError(std::string("non-finite value produced by op '") + n->op + "'");
}

}  // namespace

void Parameter::ensure_grad() {
    if (grad.empty()) grad.assign(static_cast<size_t>(numel()), 0.0);
}

void Parameter::zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
}

Node* Tape::make(const char* op, Tensor value, std::vector<Node*> inputs) {
    auto node = std::make_unique<Node>();
    node->op = op;
    node->value = std::move(value);
    node->inputs = std::move(inputs);
    for (const Node* in : node->inputs)
        if (in->requires_grad) node->requires_grad = true;
    Node* raw = node.get();
    nodes_.push_back(std::move(node));
    check_finite(raw);
    return raw;
}

Node* Tape::constant(Tensor t) {
    Node* n = make("constant", std::move(t), {});
    n->forward64_fn = [](Node& self) {
        for (int64_t i = 0; i < self.numel(); ++i) self.value64[static_cast<size_t>(i)] = self.value.at(i);
    };
    return n;
}

Node* Tape::param(Parameter& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return it->second;
    Node* n = make("param", p.value, {});
    n->param = &p;
    n->requires_grad = true;
    n->forward64_fn = [&p](Node& self) {
        // Re-read from the parameter so perturbations are visible to replays.
        for (int64_t i = 0; i < self.numel(); ++i) self.value64[static_cast<size_t>(i)] = p.value.at(i);
    };
    param_nodes_.emplace(&p, n);
    return n;
}

Node* Tape::add(Node* a, Node* b) {
    const auto& sa = a->value.shape;
    const auto& sb = b->value.shape;
    bool same = sa == sb;
    bool suffix = !same && sb.size() < sa.size() &&
                  std::equal(sb.begin(), sb.end(), sa.end() - static_cast<int64_t>(sb.size()));
    if (!same && !suffix) shape_fail("add", a, b);
    const int64_t bn = b->value.numel();
    Tensor out = Tensor::zeros(sa);
    for (int64_t i = 0; i < out.numel(); ++i)
        out.at(i) = static_cast<float>(static_cast<double>(a->value.at(i)) + b->value.at(i % bn));
    Node* n = make("add", std::move(out), {a, b});
    n->forward64_fn = [bn](Node& self) {
        const auto& a64 = self.inputs[0]->value64;
        const auto& b64 = self.inputs[1]->value64;
        for (size_t i = 0; i < self.value64.size(); ++i) self.value64[i] = a64[i] + b64[i % bn];
    };
    if (n->requires_grad)
        n->backward_fn = [bn](Node& self) {
            Node* a_ = self.inputs[0];
            Node* b_ = self.inputs[1];
            if (needs(a_)) {
                auto& ga = gbuf(a_);
                for (size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
            }
            if (needs(b_)) {
                auto& gb = gbuf(b_);
                for (size_t i = 0; i < self.grad.size(); ++i) gb[i % bn] += self.grad[i];
            }
        };
    return n;
}

Node* Tape::mul(Node* a, Node* b) {
    if (a->value.shape != b->value.shape) shape_fail("mul", a, b);
    Tensor out = Tensor::zeros(a->value.shape);
    for (int64_t i = 0; i < out.numel(); ++i)
        out.at(i) = static_cast<float>(static_cast<double>(a->value.at(i)) * b->value.at(i));
    Node* n = make("mul", std::move(out), {a, b});
    n->forward64_fn = [](Node& self) {
        const auto& a64 = self.inputs[0]->value64;
        const auto& b64 = self.inputs[1]->value64;
        for (size_t i = 0; i < self.value64.size(); ++i) self.value64[i] = a64[i] * b64[i];
    };
    if (n->requires_grad)
        n->backward_fn = [](Node& self) {
            Node* a_ = self.inputs[0];
            Node* b_ = self.inputs[1];
            if (needs(a_)) {
                auto& ga = gbuf(a_);
                for (size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * b_->value.at(static_cast<int64_t>(i));
            }
            if (needs(b_)) {
                auto& gb = gbuf(b_);
                for (size_t i = 0; i < self.grad.size(); ++i) gb[i] += self.grad[i] * a_->value.at(static_cast<int64_t>(i));
            }
        };
    return n;
}

Node* Tape::scale(Node* a, double c) {
    Tensor out = Tensor::zeros(a->value.shape);
    for (int64_t i = 0; i < out.numel(); ++i) out.at(i) = static_cast<float>(a->value.at(i) * c);
    Node* n = make("scale", std::move(out), {a});
    n->forward64_fn = [c](Node& self) {
        const auto& a64 = self.inputs[0]->value64;
        for (size_t i = 0; i < self.value64.size(); ++i) self.value64[i] = a64[i] * c;
    };
    if (n->requires_grad)
        n->backward_fn = [c](Node& self) {
            auto& ga = gbuf(self.inputs[0]);
            for (size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * c;
        };
    return n;
}

Node* Tape::matmul(Node* a, Node* b) {
    if (a->value.rank() != 2 || b->value.rank() != 2 || a->value.dim(1) != b->value.dim(0))
        shape_fail("matmul", a, b);
    const int64_t m = a->value.dim(0), k = a->value.dim(1), nn = b->value.dim(1);
    Tensor out = Tensor::zeros({m, nn});
    mm(a->value.data.data(), b->value.data.data(), out.data.data(), m, nn, k, false, false, false);
    Node* n = make("matmul", std::move(out), {a, b});
    n->forward64_fn = [m, k, nn](Node& self) {
        mm(self.inputs[0]->value64.data(), self.inputs[1]->value64.data(), self.value64.data(), m, nn,
           k, false, false, false);
    };
    if (n->requires_grad)
        n->backward_fn = [m, k, nn](Node& self) {
            Node* a_ = self.inputs[0];
            Node* b_ = self.inputs[1];
            if (needs(a_))
                mm(self.grad.data(), b_->value.data.data(), gbuf(a_).data(), m, k, nn, false, true, true);
            if (needs(b_))
                mm(a_->value.data.data(), self.grad.data(), gbuf(b_).data(), k, nn, m, true, false, true);
        };
    return n;
}

Node* Tape::matmul_nt(Node* a, Node* b) {
    if (a->value.rank() != 2 || b->value.rank() != 2 || a->value.dim(1) != b->value.dim(1))
        shape_fail("matmul_nt", a, b);
    const int64_t m = a->value.dim(0), k = a->value.dim(1), nn = b->value.dim(0);
    Tensor out = Tensor::zeros({m, nn});
    mm(a->value.data.data(), b->value.data.data(), out.data.data(), m, nn, k, false, true, false);
    Node* n = make("matmul_nt", std::move(out), {a, b});
    n->forward64_fn = [m, k, nn](Node& self) {
        mm(self.inputs[0]->value64.data(), self.inputs[1]->value64.data(), self.value64.data(), m, nn,
           k, false, true, false);
    };
    if (n->requires_grad)
        n->backward_fn = [m, k, nn](Node& self) {
            Node* a_ = self.inputs[0];
            Node* b_ = self.inputs[1];
            if (needs(a_))
                mm(self.grad.data(), b_->value.data.data(), gbuf(a_).data(), m, k, nn, false, false, true);
            if (needs(b_))
                mm(self.grad.data(), a_->value.data.data(), gbuf(b_).data(), nn, k, m, true, false, true);
        };
    return n;
}

namespace {
void bmm_shapes(const char* op, const Node* a, const Node* b, bool nt, int64_t& B, int64_t& m,
                int64_t& k, int64_t& n) {
    if (a->value.rank() != 3 || b->value.rank() != 3 || a->value.dim(0) != b->value.dim(0))
        shape_fail(op, a, b);
    B = a->value.dim(0);
    m = a->value.dim(1);
    k = a->value.dim(2);
    n = nt ? b->value.dim(1) : b->value.dim(2);
    const int64_t bk = nt ? b->value.dim(2) : b->value.dim(1);
    if (bk != k) shape_fail(op, a, b);
}
}  // namespace

Node* Tape::bmm(Node* a, Node* b) {
    int64_t B, m, k, nn;
    bmm_shapes("bmm", a, b, false, B, m, k, nn);
    Tensor out = Tensor::zeros({B, m, nn});
    for (int64_t i = 0; i < B; ++i)
        mm(a->value.data.data() + i * m * k, b->value.data.data() + i * k * nn,
           out.data.data() + i * m * nn, m, nn, k, false, false, false);
    Node* n = make("bmm", std::move(out), {a, b});
    n->forward64_fn = [B, m, k, nn](Node& self) {
        for (int64_t i = 0; i < B; ++i)
            mm(self.inputs[0]->value64.data() + i * m * k, self.inputs[1]->value64.data() + i * k * nn,
               self.value64.data() + i * m * nn, m, nn, k, false, false, false);
    };
    if (n->requires_grad)
        n->backward_fn = [B, m, k, nn](Node& self) {
            Node* a_ = self.inputs[0];
            Node* b_ = self.inputs[1];
            for (int64_t i = 0; i < B; ++i) {
                const double* g = self.grad.data() + i * m * nn;
                if (needs(a_))
                    mm(g, b_->value.data.data() + i * k * nn, gbuf(a_).data() + i * m * k, m, k, nn,
                       false, true, true);
                if (needs(b_))
                    mm(a_->value.data.data() + i * m * k, g, gbuf(b_).data() + i * k * nn, k, nn, m,
                       true, false, true);
            }
        };
    return n;
}

Node* Tape::bmm_nt(Node* a, Node* b) {
    int64_t B, m, k, nn;
    bmm_shapes("bmm_nt", a, b, true, B, m, k, nn);
    Tensor out = Tensor::zeros({B, m, nn});
    for (int64_t i = 0; i < B; ++i)
        mm(a->value.data.data() + i * m * k, b->value.data.data() + i * nn * k,
           out.data.data() + i * m * nn, m, nn, k, false, true, false);
    Node* n = make("bmm_nt", std::move(out), {a, b});
    n->forward64_fn = [B, m, k, nn](Node& self) {
        for (int64_t i = 0; i < B; ++i)
            mm(self.inputs[0]->value64.data() + i * m * k, self.inputs[1]->value64.data() + i * nn * k,
               self.value64.data() + i * m * nn, m, nn, k, false, true, false);
    };
    if (n->requires_grad)
        n->backward_fn = [B, m, k, nn](Node& self) {
            Node* a_ = self.inputs[0];
            Node* b_ = self.inputs[1];
            for (int64_t i = 0; i < B; ++i) {
                const double* g = self.grad.data() + i * m * nn;
                if (needs(a_))
                    mm(g, b_->value.data.data() + i * nn * k, gbuf(a_).data() + i * m * k, m, k, nn,
                       false, false, true);
                if (needs(b_))
                    mm(g, a_->value.data.data() + i * m * k, gbuf(b_).data() + i * nn * k, nn, k, m,
                       true, false, true);
            }
        };
    return n;
}

Node* Tape::softmax_lastdim(Node* a) {
    if (a->value.rank() < 1) shape_fail("softmax", a);
    const int64_t cols = a->value.dim(-1);
    const int64_t rows = a->value.numel() / cols;
    Tensor out = Tensor::zeros(a->value.shape);
    softmax_rows(a->value.data.data(), out.data.data(), rows, cols);
    Node* n = make("softmax", std::move(out), {a});
    n->forward64_fn = [rows, cols](Node& self) {
        softmax_rows(self.inputs[0]->value64.data(), self.value64.data(), rows, cols);
    };
    if (n->requires_grad)
        n->backward_fn = [rows, cols](Node& self) {
            auto& ga = gbuf(self.inputs[0]);
            for (int64_t r = 0; r < rows; ++r) {
                const float* y = self.value.data.data() + r * cols;
                const double* g = self.grad.data() + r * cols;
                double dot = 0.0;
                for (int64_t j = 0; j < cols; ++j) dot += g[j] * static_cast<double>(y[j]);
                double* out = ga.data() + r * cols;
                for (int64_t j = 0; j < cols; ++j) out[j] += static_cast<double>(y[j]) * (g[j] - dot);
            }
        };
    return n;
}

Node* Tape::layer_norm(Node* x, Node* gain, Node* bias, double eps) {
    if (x->value.rank() < 1) shape_fail("layer_norm", x);
    const int64_t cols = x->value.dim(-1);
    const int64_t rows = x->value.numel() / cols;
    if (gain->value.shape != std::vector<int64_t>{cols} || bias->value.shape != std::vector<int64_t>{cols})
        shape_fail("layer_norm", x, gain);
    Tensor out = Tensor::zeros(x->value.shape);
    layer_norm_rows(x->value.data.data(), gain->value.data.data(), bias->value.data.data(),
                    out.data.data(), rows, cols, eps);
    Node* n = make("layer_norm", std::move(out), {x, gain, bias});
    n->forward64_fn = [rows, cols, eps](Node& self) {
        layer_norm_rows(self.inputs[0]->value64.data(), self.inputs[1]->value64.data(),
                        self.inputs[2]->value64.data(), self.value64.data(), rows, cols, eps);
    };
    if (n->requires_grad)
        n->backward_fn = [rows, cols, eps](Node& self) {
            Node* x_ = self.inputs[0];
            Node* gain_ = self.inputs[1];
            Node* bias_ = self.inputs[2];
            std::vector<double> xh(static_cast<size_t>(cols));
            for (int64_t r = 0; r < rows; ++r) {
                const float* xr = x_->value.data.data() + r * cols;
                const double* g = self.grad.data() + r * cols;
                double mu = 0.0;
                for (int64_t j = 0; j < cols; ++j) mu += xr[j];
                mu /= static_cast<double>(cols);
                double var = 0.0;
                for (int64_t j = 0; j < cols; ++j) {
                    double d = xr[j] - mu;
                    var += d * d;
                }
                var /= static_cast<double>(cols);
                double inv = 1.0 / std::sqrt(var + eps);
                for (int64_t j = 0; j < cols; ++j) xh[static_cast<size_t>(j)] = (xr[j] - mu) * inv;
                if (needs(gain_)) {
                    auto& gg = gbuf(gain_);
                    for (int64_t j = 0; j < cols; ++j) gg[static_cast<size_t>(j)] += g[j] * xh[static_cast<size_t>(j)];
                }
                if (needs(bias_)) {
                    auto& gb = gbuf(bias_);
                    for (int64_t j = 0; j < cols; ++j) gb[static_cast<size_t>(j)] += g[j];
                }
                if (needs(x_)) {
                    double m1 = 0.0, m2 = 0.0;
                    for (int64_t j = 0; j < cols; ++j) {
                        double gg = g[j] * static_cast<double>(gain_->value.at(j));
                        m1 += gg;
                        m2 += gg * xh[static_cast<size_t>(j)];
                    }
                    m1 /= static_cast<double>(cols);
                    m2 /= static_cast<double>(cols);
                    auto& gx = gbuf(x_);
                    double* out = gx.data() + r * cols;
                    for (int64_t j = 0; j < cols; ++j) {
                        double gg = g[j] * static_cast<double>(gain_->value.at(j));
                        out[j] += inv * (gg - m1 - xh[static_cast<size_t>(j)] * m2);
                    }
                }
            }
        };
    return n;
}

Node* Tape::gelu(Node* x) {
    Tensor out = Tensor::zeros(x->value.shape);
    for (int64_t i = 0; i < out.numel(); ++i)
        out.at(i) = static_cast<float>(gelu_scalar(x->value.at(i)));
    Node* n = make("gelu", std::move(out), {x});
    n->forward64_fn = [](Node& self) {
        const auto& x64 = self.inputs[0]->value64;
        for (size_t i = 0; i < self.value64.size(); ++i) self.value64[i] = gelu_scalar(x64[i]);
    };
    if (n->requires_grad)
        n->backward_fn = [](Node& self) {
            Node* x_ = self.inputs[0];
            auto& gx = gbuf(x_);
            for (size_t i = 0; i < self.grad.size(); ++i)
                gx[i] += self.grad[i] * gelu_deriv(x_->value.at(static_cast<int64_t>(i)));
        };
    return n;
}

Node* Tape::tanh_act(Node* x) {
    Tensor out = Tensor::zeros(x->value.shape);
    for (int64_t i = 0; i < out.numel(); ++i)
        out.at(i) = static_cast<float>(std::tanh(static_cast<double>(x->value.at(i))));
    Node* n = make("tanh", std::move(out), {x});
    n->forward64_fn = [](Node& self) {
        const auto& x64 = self.inputs[0]->value64;
        for (size_t i = 0; i < self.value64.size(); ++i) self.value64[i] = std::tanh(x64[i]);
    };
    if (n->requires_grad)
        n->backward_fn = [](Node& self) {
            auto& gx = gbuf(self.inputs[0]);
            for (size_t i = 0; i < self.grad.size(); ++i) {
                double y = self.value.at(static_cast<int64_t>(i));
                gx[i] += self.grad[i] * (1.0 - y * y);
            }
        };
    return n;
}

Node* Tape::embedding(Node* table, std::vector<int64_t> ids) {
    if (table->value.rank() != 2) shape_fail("embedding", table);
    const int64_t V = table->value.dim(0), H = table->value.dim(1);
    for (int64_t id : ids)
        if (id < 0 || id >= V)
            throw ContractError("embedding: id " + std::to_string(id) + " out of range [0," +
                                std::to_string(V) + ")");
    const int64_t N = static_cast<int64_t>(ids.size());
    Tensor out = Tensor::zeros({N, H});
    for (int64_t r = 0; r < N; ++r)
        std::copy_n(table->value.data.data() + ids[static_cast<size_t>(r)] * H, H,
                    out.data.data() + r * H);
    auto ids_ptr = std::make_shared<std::vector<int64_t>>(std::move(ids));
    Node* n = make("embedding", std::move(out), {table});
    n->forward64_fn = [ids_ptr, H](Node& self) {
        const auto& t64 = self.inputs[0]->value64;
        for (size_t r = 0; r < ids_ptr->size(); ++r)
            std::copy_n(t64.data() + (*ids_ptr)[r] * H, H, self.value64.data() + static_cast<int64_t>(r) * H);
    };
    if (n->requires_grad)
        n->backward_fn = [ids_ptr, H](Node& self) {
            auto& gt = gbuf(self.inputs[0]);
            for (size_t r = 0; r < ids_ptr->size(); ++r) {
                const double* g = self.grad.data() + static_cast<int64_t>(r) * H;
                double* dst = gt.data() + (*ids_ptr)[r] * H;
                for (int64_t j = 0; j < H; ++j) dst[j] += g[j];
            }
        };
    return n;
}

Node* Tape::take_rows(Node* x, std::vector<int64_t> rows) {
    if (x->value.rank() != 2) shape_fail("take_rows", x);
    const int64_t N = x->value.dim(0), H = x->value.dim(1);
    for (int64_t r : rows)
        if (r < 0 || r >= N)
            throw ContractError("take_rows: row " + std::to_string(r) + " out of range [0," +
                                std::to_string(N) + ")");
    const int64_t R = static_cast<int64_t>(rows.size());
    Tensor out = Tensor::zeros({R, H});
    for (int64_t r = 0; r < R; ++r)
        std::copy_n(x->value.data.data() + rows[static_cast<size_t>(r)] * H, H, out.data.data() + r * H);
    auto rows_ptr = std::make_shared<std::vector<int64_t>>(std::move(rows));
    Node* n = make("take_rows", std::move(out), {x});
    n->forward64_fn = [rows_ptr, H](Node& self) {
        const auto& x64 = self.inputs[0]->value64;
        for (size_t r = 0; r < rows_ptr->size(); ++r)
            std::copy_n(x64.data() + (*rows_ptr)[r] * H, H, self.value64.data() + static_cast<int64_t>(r) * H);
    };
    if (n->requires_grad)
        n->backward_fn = [rows_ptr, H](Node& self) {
            auto& gx = gbuf(self.inputs[0]);
            for (size_t r = 0; r < rows_ptr->size(); ++r) {
                const double* g = self.grad.data() + static_cast<int64_t>(r) * H;
                double* dst = gx.data() + (*rows_ptr)[r] * H;
                for (int64_t j = 0; j < H; ++j) dst[j] += g[j];
            }
        };
    return n;
}

Node* Tape::cross_entropy(Node* logits, std::vector<int64_t> targets, Reduction reduction) {
    if (logits->value.rank() != 2) shape_fail("cross_entropy", logits);
    const int64_t N = logits->value.dim(0), C = logits->value.dim(1);
    if (static_cast<int64_t>(targets.size()) != N)
        throw ContractError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                            std::to_string(N) + " rows");
    int64_t valid = 0;
    for (int64_t t : targets) {
        if (t < -1 || t >= C)
            throw ContractError("cross_entropy: target " + std::to_string(t) + " out of range");
        if (t >= 0) ++valid;
    }
    if (valid == 0) throw ContractError("cross_entropy: every row is ignored");

    // Forward in float64; stash float32 probabilities of valid rows for backward.
    auto probs = std::make_shared<std::vector<float>>(static_cast<size_t>(N * C), 0.0f);
    double total = 0.0;
    for (int64_t r = 0; r < N; ++r) {
        if (targets[static_cast<size_t>(r)] < 0) continue;
        const float* x = logits->value.data.data() + r * C;
        double mx = x[0];
        for (int64_t j = 1; j < C; ++j) mx = std::max(mx, static_cast<double>(x[j]));
        double denom = 0.0;
        for (int64_t j = 0; j < C; ++j) denom += std::exp(static_cast<double>(x[j]) - mx);
        double lse = std::log(denom) + mx;
        total += lse - static_cast<double>(x[targets[static_cast<size_t>(r)]]);
        float* p = probs->data() + r * C;
        for (int64_t j = 0; j < C; ++j)
            p[j] = static_cast<float>(std::exp(static_cast<double>(x[j]) - lse));
    }
    if (reduction == Reduction::mean) total /= static_cast<double>(valid);

    auto tgt = std::make_shared<std::vector<int64_t>>(std::move(targets));
    Node* n = make("cross_entropy", Tensor::scalar(static_cast<float>(total)), {logits});
    n->forward64_fn = [tgt, N, C, reduction, valid](Node& self) {
        const auto& x64 = self.inputs[0]->value64;
        double tot = 0.0;
        for (int64_t r = 0; r < N; ++r) {
            if ((*tgt)[static_cast<size_t>(r)] < 0) continue;
            const double* x = x64.data() + r * C;
            double mx = x[0];
            for (int64_t j = 1; j < C; ++j) mx = std::max(mx, x[j]);
            double denom = 0.0;
            for (int64_t j = 0; j < C; ++j) denom += std::exp(x[j] - mx);
            tot += std::log(denom) + mx - x[(*tgt)[static_cast<size_t>(r)]];
        }
        if (reduction == Reduction::mean) tot /= static_cast<double>(valid);
        self.value64[0] = tot;
    };
    if (n->requires_grad)
        n->backward_fn = [tgt, probs, N, C, reduction, valid](Node& self) {
            const double g = self.grad[0] * (reduction == Reduction::mean ? 1.0 / static_cast<double>(valid) : 1.0);
            auto& gx = gbuf(self.inputs[0]);
            for (int64_t r = 0; r < N; ++r) {
                const int64_t t = (*tgt)[static_cast<size_t>(r)];
                if (t < 0) continue;
                const float* p = probs->data() + r * C;
                double* out = gx.data() + r * C;
                for (int64_t j = 0; j < C; ++j) out[j] += g * static_cast<double>(p[j]);
                out[t] -= g;
            }
        };
    return n;
}

Node* Tape::reshape(Node* a, std::vector<int64_t> shape) {
    if (Tensor::numel_of(shape) != a->value.numel()) shape_fail("reshape", a);
    Tensor out(std::move(shape), a->value.data);
    Node* n = make("reshape", std::move(out), {a});
    n->forward64_fn = [](Node& self) { self.value64 = self.inputs[0]->value64; };
    if (n->requires_grad)
        n->backward_fn = [](Node& self) {
            auto& ga = gbuf(self.inputs[0]);
            for (size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
        };
    return n;
}

Node* Tape::split_heads(Node* x, int64_t batch, int64_t seq, int64_t heads) {
    if (x->value.rank() != 2 || x->value.dim(0) != batch * seq || x->value.dim(1) % heads != 0)
        shape_fail("split_heads", x);
    const int64_t dh = x->value.dim(1) / heads;
    Tensor out = Tensor::zeros({batch * heads, seq, dh});
    heads_permute(x->value.data.data(), out.data.data(), batch, seq, heads, dh, true);
    Node* n = make("split_heads", std::move(out), {x});
    n->forward64_fn = [batch, seq, heads, dh](Node& self) {
        heads_permute(self.inputs[0]->value64.data(), self.value64.data(), batch, seq, heads, dh, true);
    };
    if (n->requires_grad)
        n->backward_fn = [batch, seq, heads, dh](Node& self) {
            auto& gx = gbuf(self.inputs[0]);
            // Inverse permutation: scatter grad back to [B*T, H] layout.
            std::vector<double> tmp(gx.size(), 0.0);
            heads_permute(self.grad.data(), tmp.data(), batch, seq, heads, dh, false);
            for (size_t i = 0; i < gx.size(); ++i) gx[i] += tmp[i];
        };
    return n;
}

Node* Tape::merge_heads(Node* x, int64_t batch, int64_t seq, int64_t heads) {
    if (x->value.rank() != 3 || x->value.dim(0) != batch * heads || x->value.dim(1) != seq)
        shape_fail("merge_heads", x);
    const int64_t dh = x->value.dim(2);
    Tensor out = Tensor::zeros({batch * seq, heads * dh});
    heads_permute(x->value.data.data(), out.data.data(), batch, seq, heads, dh, false);
    Node* n = make("merge_heads", std::move(out), {x});
    n->forward64_fn = [batch, seq, heads, dh](Node& self) {
        heads_permute(self.inputs[0]->value64.data(), self.value64.data(), batch, seq, heads, dh, false);
    };
    if (n->requires_grad)
        n->backward_fn = [batch, seq, heads, dh](Node& self) {
            auto& gx = gbuf(self.inputs[0]);
            std::vector<double> tmp(gx.size(), 0.0);
            heads_permute(self.grad.data(), tmp.data(), batch, seq, heads, dh, true);
            for (size_t i = 0; i < gx.size(); ++i) gx[i] += tmp[i];
        };
    return n;
}

Node* Tape::dropout(Node* x, double p, Rng& rng, bool training) {
    if (!training || p <= 0.0) return x;
    if (p >= 1.0) throw ContractError("dropout: rate must be < 1");
    const double keep_scale = 1.0 / (1.0 - p);
    auto mask = std::make_shared<std::vector<float>>(static_cast<size_t>(x->value.numel()));
    Tensor out = Tensor::zeros(x->value.shape);
    for (int64_t i = 0; i < out.numel(); ++i) {
        const float m = rng.uniform() < p ? 0.0f : static_cast<float>(keep_scale);
        (*mask)[static_cast<size_t>(i)] = m;
        out.at(i) = static_cast<float>(static_cast<double>(x->value.at(i)) * m);
    }
    Node* n = make("dropout", std::move(out), {x});
    n->forward64_fn = [mask](Node& self) {
        const auto& x64 = self.inputs[0]->value64;
        for (size_t i = 0; i < self.value64.size(); ++i)
            self.value64[i] = x64[i] * static_cast<double>((*mask)[i]);
    };
    if (n->requires_grad)
        n->backward_fn = [mask](Node& self) {
            auto& gx = gbuf(self.inputs[0]);
            for (size_t i = 0; i < self.grad.size(); ++i)
                gx[i] += self.grad[i] * static_cast<double>((*mask)[i]);
        };
    return n;
}

Node* Tape::sum_all(Node* a) {
    double total = 0.0;
    for (float v : a->value.data) total += v;
    Node* n = make("sum", Tensor::scalar(static_cast<float>(total)), {a});
    n->forward64_fn = [](Node& self) {
        double t = 0.0;
        for (double v : self.inputs[0]->value64) t += v;
        self.value64[0] = t;
    };
    if (n->requires_grad)
        n->backward_fn = [](Node& self) {
            auto& ga = gbuf(self.inputs[0]);
            const double g = self.grad[0];
            for (double& v : ga) v += g;
        };
    return n;
}

void Tape::backward(Node* loss, double seed) {
    if (loss == nullptr || loss->numel() != 1)
        throw ContractError("backward: loss must be a single scalar node");
    // Node-level grads start fresh on every pass; only the parameter-side
    // accumulators survive across calls (micro-batching relies on that).
    for (auto& n : nodes_) n->grad.clear();
    loss->grad.assign(1, seed);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Node& n = **it;
        if (n.grad.empty() || !n.requires_grad || !n.backward_fn) continue;
        n.backward_fn(n);
    }
    for (auto& [p, node] : param_nodes_) {
        if (node->grad.empty()) continue;
        p->ensure_grad();
        for (size_t i = 0; i < p->grad.size(); ++i) p->grad[i] += node->grad[i];
        // Drop the node-side copy so a second backward on the same tape
        // does not double-flush.
        node->grad.clear();
    }
}

void Tape::forward64_all() {
    for (auto& n : nodes_) {
        if (!n->forward64_fn) throw ContractError(std::string("op '") + n->op + "' has no float64 replay");
        n->value64.resize(static_cast<size_t>(n->numel()));
        n->forward64_fn(*n);
    }
}

double Tape::scalar64(const Node* n) const {
    if (n == nullptr || n->value64.size() != 1)
        throw ContractError("scalar64: node is not a replayed scalar");
    return n->value64[0];
}

void Tape::clear() {
    nodes_.clear();
    param_nodes_.clear();
}

GradCheckReport grad_check(Tape& tape, Node* loss,
                           const std::vector<std::pair<Parameter*, std::vector<int64_t>>>& coords,
                           double h) {
    for (const auto& [p, idxs] : coords) p->zero_grad();
    tape.backward(loss);

    GradCheckReport rep;
    for (const auto& [p, idxs] : coords) {
        p->ensure_grad();
        for (int64_t i : idxs) {
            if (i < 0 || i >= p->numel())
                throw ContractError("grad_check: coordinate out of range for " + p->name);
            const float orig = p->value.at(i);
            const float xp = static_cast<float>(static_cast<double>(orig) + h);
            const float xm = static_cast<float>(static_cast<double>(orig) - h);
            const double denom = static_cast<double>(xp) - static_cast<double>(xm);
            if (denom == 0.0)
                throw ContractError("grad_check: step underflow at " + p->name + "[" + std::to_string(i) + "]");
            p->value.at(i) = xp;
            tape.forward64_all();
            const double fp = tape.scalar64(loss);
            p->value.at(i) = xm;
            tape.forward64_all();
            const double fm = tape.scalar64(loss);
            p->value.at(i) = orig;
            const double numeric = (fp - fm) / denom;
            const double analytic = p->grad[static_cast<size_t>(i)];
            const double rel = std::abs(analytic - numeric) /
                               std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            ++rep.coords_checked;
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst_param = p->name;
                rep.worst_index = i;
                rep.worst_analytic = analytic;
                rep.worst_numeric = numeric;
            }
        }
    }
    return rep;
}

}  // namespace mlmkit
