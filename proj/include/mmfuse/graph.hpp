#pragma once
// Reverse-mode autodiff over dense tensors. A Graph is a tape of tensor ops;
// nodes are appended after their inputs so the reverse pass is a plain
// backwards sweep over node indices. Values are computed eagerly; each op
// stores a closure holding its vector-Jacobian product.
//
// Accumulation order inside every kernel is fixed, so identical inputs give
// bit-identical outputs and forward(batch) equals row-wise forward.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "mmfuse/errors.hpp"
#include "mmfuse/tensor.hpp"

namespace mmfuse {

class Graph {
public:
    using NodeId = int;

    NodeId leaf(Tensor value, bool requires_grad = false) {
        return push(std::move(value), requires_grad, nullptr);
    }
    NodeId param(Tensor value) { return leaf(std::move(value), true); }
    NodeId constant(Tensor value) { return leaf(std::move(value), false); }

    const Tensor& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }

    double scalar_value(NodeId id) const {
        const Tensor& t = value(id);
        if (t.numel() != 1) throw ShapeMismatch("scalar_value on tensor " + shape_str(t.shape));
        return t.data[0];
    }

    // Gradient of the last backward() target w.r.t. this node. Zero tensor if
    // the node was not reached.
    const Tensor& grad(NodeId id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.grad_live) {
            n.grad = Tensor::zeros(n.value.shape);
            n.grad_live = true;
        }
        return n.grad;
    }

    bool needs_grad(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

    std::size_t size() const { return nodes_.size(); }

    // ---- ops -------------------------------------------------------------

    NodeId matmul(NodeId a, NodeId b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows())
            throw ShapeMismatch("matmul " + shape_str(A.shape) + " x " + shape_str(B.shape));
        std::size_t m = A.rows(), k = A.cols(), n = B.cols();
        Tensor C = Tensor::zeros({m, n});
        gemm_nn_accum(A.data.data(), B.data.data(), C.data.data(), m, k, n);
        return push(std::move(C), needs_grad(a) || needs_grad(b),
                    [a, b, m, k, n](Graph& g, NodeId self) {
                        const Tensor& dC = g.grad(self);
                        if (g.needs_grad(a))
                            gemm_nt_accum(dC.data.data(), g.value(b).data.data(),
                                          g.grad_buf(a).data.data(), m, n, k);
                        if (g.needs_grad(b))
                            gemm_tn_accum(g.value(a).data.data(), dC.data.data(),
                                          g.grad_buf(b).data.data(), k, m, n);
                    });
    }

    // A (m x d) times B^T (n x d) -> m x n. Saves an explicit transpose node.
    NodeId matmul_nt(NodeId a, NodeId b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.cols())
            throw ShapeMismatch("matmul_nt " + shape_str(A.shape) + " x " + shape_str(B.shape));
        std::size_t m = A.rows(), d = A.cols(), n = B.rows();
        Tensor C = Tensor::zeros({m, n});
        gemm_nt_accum(A.data.data(), B.data.data(), C.data.data(), m, d, n);
        return push(std::move(C), needs_grad(a) || needs_grad(b),
                    [a, b, m, d, n](Graph& g, NodeId self) {
                        const Tensor& dC = g.grad(self);
                        if (g.needs_grad(a))
                            gemm_nn_accum(dC.data.data(), g.value(b).data.data(),
                                          g.grad_buf(a).data.data(), m, n, d);
                        if (g.needs_grad(b))
                            gemm_tn_accum(dC.data.data(), g.value(a).data.data(),
                                          g.grad_buf(b).data.data(), n, m, d);
                    });
    }

    // Batched matmul over the leading dim: (B x m x k) * (B x k x n).
    NodeId bmm(NodeId a, NodeId b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        if (A.rank() != 3 || B.rank() != 3 || A.shape[0] != B.shape[0] || A.shape[2] != B.shape[1])
            throw ShapeMismatch("bmm " + shape_str(A.shape) + " x " + shape_str(B.shape));
        std::size_t nb = A.shape[0], m = A.shape[1], k = A.shape[2], n = B.shape[2];
        Tensor C = Tensor::zeros({nb, m, n});
        for (std::size_t i = 0; i < nb; ++i)
            gemm_nn_accum(A.data.data() + i * m * k, B.data.data() + i * k * n,
                          C.data.data() + i * m * n, m, k, n);
        return push(std::move(C), needs_grad(a) || needs_grad(b),
                    [a, b, nb, m, k, n](Graph& g, NodeId self) {
                        const Tensor& dC = g.grad(self);
                        for (std::size_t i = 0; i < nb; ++i) {
                            const double* dc = dC.data.data() + i * m * n;
                            if (g.needs_grad(a))
                                gemm_nt_accum(dc, g.value(b).data.data() + i * k * n,
                                              g.grad_buf(a).data.data() + i * m * k, m, n, k);
                            if (g.needs_grad(b))
                                gemm_tn_accum(g.value(a).data.data() + i * m * k, dc,
                                              g.grad_buf(b).data.data() + i * k * n, k, m, n);
                        }
                    });
    }

    // Batched A * B^T: (B x m x d) * (B x n x d) -> B x m x n.
    NodeId bmm_nt(NodeId a, NodeId b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        if (A.rank() != 3 || B.rank() != 3 || A.shape[0] != B.shape[0] || A.shape[2] != B.shape[2])
            throw ShapeMismatch("bmm_nt " + shape_str(A.shape) + " x " + shape_str(B.shape));
        std::size_t nb = A.shape[0], m = A.shape[1], d = A.shape[2], n = B.shape[1];
        Tensor C = Tensor::zeros({nb, m, n});
        for (std::size_t i = 0; i < nb; ++i)
            gemm_nt_accum(A.data.data() + i * m * d, B.data.data() + i * n * d,
                          C.data.data() + i * m * n, m, d, n);
        return push(std::move(C), needs_grad(a) || needs_grad(b),
                    [a, b, nb, m, d, n](Graph& g, NodeId self) {
                        const Tensor& dC = g.grad(self);
                        for (std::size_t i = 0; i < nb; ++i) {
                            const double* dc = dC.data.data() + i * m * n;
                            if (g.needs_grad(a))
                                gemm_nn_accum(dc, g.value(b).data.data() + i * n * d,
                                              g.grad_buf(a).data.data() + i * m * d, m, n, d);
                            if (g.needs_grad(b))
                                gemm_tn_accum(dc, g.value(a).data.data() + i * m * d,
                                              g.grad_buf(b).data.data() + i * n * d, n, m, d);
                        }
                    });
    }

    NodeId relu(NodeId a) {
        Tensor y = value(a);
        for (double& v : y.data) v = v > 0.0 ? v : 0.0;
        return push(std::move(y), needs_grad(a), [a](Graph& g, NodeId self) {
            if (!g.needs_grad(a)) return;
            const Tensor& dY = g.grad(self);
            const Tensor& X = g.value(a);
            Tensor& dX = g.grad_buf(a);
            for (std::size_t i = 0; i < dX.numel(); ++i)
                if (X.data[i] > 0.0) dX.data[i] += dY.data[i];
        });
    }

    // a + row-broadcast bias; bias is rank-1 of length = last dim of a.
    NodeId bias_add(NodeId a, NodeId b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        if (B.rank() != 1 || A.shape.back() != B.shape[0])
            throw ShapeMismatch("bias_add " + shape_str(A.shape) + " + " + shape_str(B.shape));
        std::size_t n = B.shape[0], rows = A.numel() / n;
        Tensor Y = A;
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < n; ++j) Y.data[i * n + j] += B.data[j];
        return push(std::move(Y), needs_grad(a) || needs_grad(b),
                    [a, b, rows, n](Graph& g, NodeId self) {
                        const Tensor& dY = g.grad(self);
                        if (g.needs_grad(a)) {
                            Tensor& dA = g.grad_buf(a);
                            for (std::size_t i = 0; i < dA.numel(); ++i) dA.data[i] += dY.data[i];
                        }
                        if (g.needs_grad(b)) {
                            Tensor& dB = g.grad_buf(b);
                            for (std::size_t i = 0; i < rows; ++i)
                                for (std::size_t j = 0; j < n; ++j)
                                    dB.data[j] += dY.data[i * n + j];
                        }
                    });
    }

    // Row-wise softmax with max subtraction. 2-D only; reshape first for
    // higher ranks.
    NodeId softmax_rows(NodeId a) {
        const Tensor& A = value(a);
        if (A.rank() != 2) throw ShapeMismatch("softmax_rows on " + shape_str(A.shape));
        std::size_t m = A.rows(), n = A.cols();
        Tensor Y = Tensor::zeros({m, n});
        for (std::size_t i = 0; i < m; ++i) {
            const double* x = A.data.data() + i * n;
            double mx = x[0];
            for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
            double sum = 0.0;
            double* y = Y.data.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                y[j] = std::exp(x[j] - mx);
                sum += y[j];
            }
            for (std::size_t j = 0; j < n; ++j) y[j] /= sum;
        }
        return push(std::move(Y), needs_grad(a), [a, m, n](Graph& g, NodeId self) {
            if (!g.needs_grad(a)) return;
            const Tensor& Y = g.value(self);
            const Tensor& dY = g.grad(self);
            Tensor& dX = g.grad_buf(a);
            for (std::size_t i = 0; i < m; ++i) {
                const double* y = Y.data.data() + i * n;
                const double* dy = dY.data.data() + i * n;
                double inner = dot(y, dy, n);
                double* dx = dX.data.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) dx[j] += y[j] * (dy[j] - inner);
            }
        });
    }

    // Row-wise L2 normalization; all-zero rows pass through unchanged.
    NodeId l2_normalize_rows(NodeId a) {
        const Tensor& A = value(a);
        if (A.rank() != 2) throw ShapeMismatch("l2_normalize_rows on " + shape_str(A.shape));
        std::size_t m = A.rows(), n = A.cols();
        Tensor Y = A;
        for (std::size_t i = 0; i < m; ++i) {
            double* y = Y.data.data() + i * n;
            double nm = l2_norm(y, n);
            if (nm == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) y[j] /= nm;
        }
        return push(std::move(Y), needs_grad(a), [a, m, n](Graph& g, NodeId self) {
            if (!g.needs_grad(a)) return;
            const Tensor& X = g.value(a);
            const Tensor& Y = g.value(self);
            const Tensor& dY = g.grad(self);
            Tensor& dX = g.grad_buf(a);
            for (std::size_t i = 0; i < m; ++i) {
                const double* x = X.data.data() + i * n;
                const double* y = Y.data.data() + i * n;
                const double* dy = dY.data.data() + i * n;
                double* dx = dX.data.data() + i * n;
                double nm = l2_norm(x, n);
                if (nm == 0.0) {
                    for (std::size_t j = 0; j < n; ++j) dx[j] += dy[j];
                    continue;
                }
                double inner = dot(y, dy, n);
                for (std::size_t j = 0; j < n; ++j) dx[j] += (dy[j] - y[j] * inner) / nm;
            }
        });
    }

    // Mean across rows: (m x n) -> (1 x n); (b x t x w) -> (b x w).
    NodeId mean_rows(NodeId a) {
        const Tensor& A = value(a);
        std::size_t nb, t, w;
        Shape out_shape;
        if (A.rank() == 2) {
            nb = 1, t = A.shape[0], w = A.shape[1];
            out_shape = {1, w};
        } else if (A.rank() == 3) {
            nb = A.shape[0], t = A.shape[1], w = A.shape[2];
            out_shape = {nb, w};
        } else {
            throw ShapeMismatch("mean_rows on " + shape_str(A.shape));
        }
        Tensor Y = Tensor::zeros(out_shape);
        for (std::size_t b = 0; b < nb; ++b)
            for (std::size_t i = 0; i < t; ++i)
                for (std::size_t j = 0; j < w; ++j)
                    Y.data[b * w + j] += A.data[(b * t + i) * w + j] / static_cast<double>(t);
        return push(std::move(Y), needs_grad(a), [a, nb, t, w](Graph& g, NodeId self) {
            if (!g.needs_grad(a)) return;
            const Tensor& dY = g.grad(self);
            Tensor& dX = g.grad_buf(a);
            for (std::size_t b = 0; b < nb; ++b)
                for (std::size_t i = 0; i < t; ++i)
                    for (std::size_t j = 0; j < w; ++j)
                        dX.data[(b * t + i) * w + j] += dY.data[b * w + j] / static_cast<double>(t);
        });
    }

    NodeId reshape(NodeId a, Shape shape) {
        const Tensor& A = value(a);
        if (shape_numel(shape) != A.numel())
            throw ShapeMismatch("reshape " + shape_str(A.shape) + " -> " + shape_str(shape));
        Tensor Y(std::move(shape), A.data);
        return push(std::move(Y), needs_grad(a), [a](Graph& g, NodeId self) {
            if (!g.needs_grad(a)) return;
            const Tensor& dY = g.grad(self);
            Tensor& dX = g.grad_buf(a);
            for (std::size_t i = 0; i < dX.numel(); ++i) dX.data[i] += dY.data[i];
        });
    }

    // Swap axes 1 and 2 of a 4-D tensor (p,q,r,s) -> (p,r,q,s). Self-inverse.
    NodeId transpose_0213(NodeId a) {
        const Tensor& A = value(a);
        if (A.rank() != 4) throw ShapeMismatch("transpose_0213 on " + shape_str(A.shape));
        std::size_t p = A.shape[0], q = A.shape[1], r = A.shape[2], s = A.shape[3];
        Tensor Y = Tensor::zeros({p, r, q, s});
        permute_0213(A.data.data(), Y.data.data(), p, q, r, s);
        return push(std::move(Y), needs_grad(a), [a, p, q, r, s](Graph& g, NodeId self) {
            if (!g.needs_grad(a)) return;
            const Tensor& dY = g.grad(self);
            Tensor tmp = Tensor::zeros({p, q, r, s});
            permute_0213(dY.data.data(), tmp.data.data(), p, r, q, s);
            Tensor& dX = g.grad_buf(a);
            for (std::size_t i = 0; i < dX.numel(); ++i) dX.data[i] += tmp.data[i];
        });
    }

    NodeId scale(NodeId a, double c) {
        Tensor Y = value(a);
        for (double& v : Y.data) v *= c;
        return push(std::move(Y), needs_grad(a), [a, c](Graph& g, NodeId self) {
            if (!g.needs_grad(a)) return;
            const Tensor& dY = g.grad(self);
            Tensor& dX = g.grad_buf(a);
            for (std::size_t i = 0; i < dX.numel(); ++i) dX.data[i] += c * dY.data[i];
        });
    }

    NodeId add(NodeId a, NodeId b) { return add_sub(a, b, 1.0); }
    NodeId sub(NodeId a, NodeId b) { return add_sub(a, b, -1.0); }

    // Horizontal concatenation of two 2-D tensors with equal row counts.
    NodeId hcat(NodeId a, NodeId b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        if (A.rank() != 2 || B.rank() != 2 || A.rows() != B.rows())
            throw ShapeMismatch("hcat " + shape_str(A.shape) + " | " + shape_str(B.shape));
        std::size_t m = A.rows(), p = A.cols(), q = B.cols();
        Tensor Y = Tensor::zeros({m, p + q});
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < p; ++j) Y.data[i * (p + q) + j] = A.data[i * p + j];
            for (std::size_t j = 0; j < q; ++j) Y.data[i * (p + q) + p + j] = B.data[i * q + j];
        }
        return push(std::move(Y), needs_grad(a) || needs_grad(b),
                    [a, b, m, p, q](Graph& g, NodeId self) {
                        const Tensor& dY = g.grad(self);
                        if (g.needs_grad(a)) {
                            Tensor& dA = g.grad_buf(a);
                            for (std::size_t i = 0; i < m; ++i)
                                for (std::size_t j = 0; j < p; ++j)
                                    dA.data[i * p + j] += dY.data[i * (p + q) + j];
                        }
                        if (g.needs_grad(b)) {
                            Tensor& dB = g.grad_buf(b);
                            for (std::size_t i = 0; i < m; ++i)
                                for (std::size_t j = 0; j < q; ++j)
                                    dB.data[i * q + j] += dY.data[i * (p + q) + p + j];
                        }
                    });
    }

    NodeId diag_part(NodeId a) {
        const Tensor& A = value(a);
        if (A.rank() != 2 || A.rows() != A.cols())
            throw ShapeMismatch("diag_part on " + shape_str(A.shape));
        std::size_t m = A.rows();
        Tensor Y = Tensor::zeros({m});
        for (std::size_t i = 0; i < m; ++i) Y.data[i] = A.at(i, i);
        return push(std::move(Y), needs_grad(a), [a, m](Graph& g, NodeId self) {
            if (!g.needs_grad(a)) return;
            const Tensor& dY = g.grad(self);
            Tensor& dX = g.grad_buf(a);
            for (std::size_t i = 0; i < m; ++i) dX.data[i * m + i] += dY.data[i];
        });
    }

    // Per-row log-sum-exp over the entries where mask is nonzero, with max
    // subtraction. Every row must keep at least one entry.
    NodeId masked_row_logsumexp(NodeId a, std::vector<std::uint8_t> mask) {
        const Tensor& A = value(a);
        if (A.rank() != 2 || mask.size() != A.numel())
            throw ShapeMismatch("masked_row_logsumexp on " + shape_str(A.shape));
        std::size_t m = A.rows(), n = A.cols();
        Tensor Y = Tensor::zeros({m});
        for (std::size_t i = 0; i < m; ++i) {
            const double* x = A.data.data() + i * n;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j)
                if (mask[i * n + j] && x[j] > mx) mx = x[j];
            if (!std::isfinite(mx)) throw NumericalError("logsumexp row with empty mask");
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (mask[i * n + j]) sum += std::exp(x[j] - mx);
            Y.data[i] = mx + std::log(sum);
        }
        return push(std::move(Y), needs_grad(a),
                    [a, m, n, mask = std::move(mask)](Graph& g, NodeId self) {
                        if (!g.needs_grad(a)) return;
                        const Tensor& X = g.value(a);
                        const Tensor& Y = g.value(self);
                        const Tensor& dY = g.grad(self);
                        Tensor& dX = g.grad_buf(a);
                        for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < n; ++j)
                                if (mask[i * n + j])
                                    dX.data[i * n + j] +=
                                        dY.data[i] * std::exp(X.data[i * n + j] - Y.data[i]);
                    });
    }

    NodeId reduce_sum(NodeId a) {
        const Tensor& A = value(a);
        double s = 0.0;
        for (double v : A.data) s += v;
        return push(Tensor::scalar(s), needs_grad(a), [a](Graph& g, NodeId self) {
            if (!g.needs_grad(a)) return;
            double dy = g.grad(self).data[0];
            Tensor& dX = g.grad_buf(a);
            for (double& v : dX.data) v += dy;
        });
    }

    // Zero-pad a 2-D tensor on the right to new_cols columns.
    NodeId pad_cols(NodeId a, std::size_t new_cols) {
        const Tensor& A = value(a);
        if (A.rank() != 2 || new_cols < A.cols())
            throw ShapeMismatch("pad_cols " + shape_str(A.shape) + " -> " +
                                std::to_string(new_cols));
        std::size_t m = A.rows(), n = A.cols();
        Tensor Y = Tensor::zeros({m, new_cols});
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) Y.data[i * new_cols + j] = A.data[i * n + j];
        return push(std::move(Y), needs_grad(a), [a, m, n, new_cols](Graph& g, NodeId self) {
            if (!g.needs_grad(a)) return;
            const Tensor& dY = g.grad(self);
            Tensor& dX = g.grad_buf(a);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    dX.data[i * n + j] += dY.data[i * new_cols + j];
        });
    }

    // ---- reverse pass ----------------------------------------------------

    void backward(NodeId loss) {
        const Tensor& L = value(loss);
        if (L.numel() != 1)
            throw ShapeMismatch("backward target must be scalar, got " + shape_str(L.shape));
        for (Node& n : nodes_) n.grad_live = false;
        Node& seed = nodes_[static_cast<std::size_t>(loss)];
        seed.grad = Tensor::scalar(1.0);
        seed.grad_live = true;
        for (NodeId id = loss; id >= 0; --id) {
            Node& n = nodes_[static_cast<std::size_t>(id)];
            if (!n.grad_live || !n.requires_grad || !n.backprop) continue;
            n.backprop(*this, id);
        }
    }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool grad_live = false;
        bool requires_grad = false;
        std::function<void(Graph&, NodeId)> backprop;
    };

    std::vector<Node> nodes_;

    Tensor& grad_buf(NodeId id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.grad_live) {
            n.grad = Tensor::zeros(n.value.shape);
            n.grad_live = true;
        }
        return n.grad;
    }

    NodeId push(Tensor value, bool requires_grad, std::function<void(Graph&, NodeId)> backprop) {
        Node n;
        n.value = std::move(value);
        n.requires_grad = requires_grad;
        if (requires_grad) n.backprop = std::move(backprop);
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    NodeId add_sub(NodeId a, NodeId b, double sign) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        if (!A.same_shape(B))
            throw ShapeMismatch("elementwise " + shape_str(A.shape) + " vs " +
                                shape_str(B.shape));
        Tensor Y = A;
        for (std::size_t i = 0; i < Y.numel(); ++i) Y.data[i] += sign * B.data[i];
        return push(std::move(Y), needs_grad(a) || needs_grad(b),
                    [a, b, sign](Graph& g, NodeId self) {
                        const Tensor& dY = g.grad(self);
                        if (g.needs_grad(a)) {
                            Tensor& dA = g.grad_buf(a);
                            for (std::size_t i = 0; i < dA.numel(); ++i) dA.data[i] += dY.data[i];
                        }
                        if (g.needs_grad(b)) {
                            Tensor& dB = g.grad_buf(b);
                            for (std::size_t i = 0; i < dB.numel(); ++i)
                                dB.data[i] += sign * dY.data[i];
                        }
                    });
    }

    static void permute_0213(const double* src, double* dst, std::size_t p, std::size_t q,
                             std::size_t r, std::size_t s) {
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < q; ++j)
                for (std::size_t k = 0; k < r; ++k)
                    for (std::size_t l = 0; l < s; ++l)
                        dst[((i * r + k) * q + j) * s + l] = src[((i * q + j) * r + k) * s + l];
    }
};

// Entry (i, j) is cos(A_i, B_j); rows of zero norm compare as 0 against
// everything (normalization leaves them unchanged).
inline Graph::NodeId cosine_matrix(Graph& g, Graph::NodeId a, Graph::NodeId b) {
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.cols())
        throw ShapeMismatch("cosine_matrix " + shape_str(A.shape) + " x " + shape_str(B.shape));
    Graph::NodeId na = g.l2_normalize_rows(a);
    Graph::NodeId nb = (b == a) ? na : g.l2_normalize_rows(b);
    return g.matmul_nt(na, nb);
}

}  // namespace mmfuse
