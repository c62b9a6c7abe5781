#pragma once
// Reverse-mode differentiation over dense matrices.
//
// A Tape records a computation as a flat list of nodes; backward() walks
// the list in reverse and accumulates gradients into every node that
// requires them. Gradients are allocated lazily, so branches that never
// receive a gradient cost nothing on the way back. One tape per loss
// evaluation; tapes are cheap to build and are not reused across steps.

#include <functional>
#include <utility>
#include <vector>

#include "kgalign/common.hpp"

namespace kgalign {

using NodeId = int;

class Tape {
public:
    struct Node {
        Mat val;
        Mat grad;  // empty until something flows into it
        std::function<void(Tape&)> back;
        bool requires_grad = false;
    };

    NodeId constant(Mat v) { return push(std::move(v), false, nullptr); }

    // Parameter leaf: gradient is accumulated and can be read after backward().
    NodeId leaf(Mat v) { return push(std::move(v), true, nullptr); }

    const Mat& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].val; }

    // Gradient of a node after backward(); zeros if nothing reached it.
    Mat grad(NodeId id) const {
        const Node& n = nodes_[static_cast<size_t>(id)];
        if (n.grad.size() == 0) return Mat::Zero(n.val.rows(), n.val.cols());
        return n.grad;
    }

    size_t size() const { return nodes_.size(); }

    // Seeds d(root)/d(root) = 1 and propagates. root must be 1x1.
    void backward(NodeId root) {
        Node& r = nodes_[static_cast<size_t>(root)];
        if (r.val.rows() != 1 || r.val.cols() != 1)
            throw DimensionError("backward: root node must be a scalar");
        r.grad = Mat::Ones(1, 1);
        for (int i = root; i >= 0; --i) {
            Node& n = nodes_[static_cast<size_t>(i)];
            if (n.back && n.grad.size() != 0) n.back(*this);
        }
    }

    // ---- ops ----

    NodeId matmul(NodeId a, NodeId b) {
        const Mat& A = value(a);
        const Mat& B = value(b);
        if (A.cols() != B.rows()) throw DimensionError("matmul: inner dimensions differ");
        return binary(a, b, A * B, [a, b](Tape& t, const Mat& g) {
            t.accumulate(a, g * t.value(b).transpose());
            t.accumulate(b, t.value(a).transpose() * g);
        });
    }

    // A * B^T
    NodeId matmul_bt(NodeId a, NodeId b) {
        const Mat& A = value(a);
        const Mat& B = value(b);
        if (A.cols() != B.cols()) throw DimensionError("matmul_bt: column counts differ");
        return binary(a, b, A * B.transpose(), [a, b](Tape& t, const Mat& g) {
            t.accumulate(a, g * t.value(b));
            t.accumulate(b, g.transpose() * t.value(a));
        });
    }

    NodeId add(NodeId a, NodeId b) {
        check_same_shape(a, b, "add");
        return binary(a, b, value(a) + value(b), [a, b](Tape& t, const Mat& g) {
            t.accumulate(a, g);
            t.accumulate(b, g);
        });
    }

    NodeId sub(NodeId a, NodeId b) {
        check_same_shape(a, b, "sub");
        return binary(a, b, value(a) - value(b), [a, b](Tape& t, const Mat& g) {
            t.accumulate(a, g);
            t.accumulate(b, -g);
        });
    }

    NodeId cwise_mul(NodeId a, NodeId b) {
        check_same_shape(a, b, "cwise_mul");
        return binary(a, b, value(a).cwiseProduct(value(b)), [a, b](Tape& t, const Mat& g) {
            t.accumulate(a, g.cwiseProduct(t.value(b)));
            t.accumulate(b, g.cwiseProduct(t.value(a)));
        });
    }

    NodeId scale(NodeId a, double c) {
        return unary(a, value(a) * c, [a, c](Tape& t, const Mat& g) { t.accumulate(a, g * c); });
    }

    // 1 - A, elementwise.
    NodeId one_minus(NodeId a) {
        Mat v = Mat::Ones(value(a).rows(), value(a).cols()) - value(a);
        return unary(a, std::move(v), [a](Tape& t, const Mat& g) { t.accumulate(a, -g); });
    }

    // Adds a 1 x d row vector to every row of A.
    NodeId add_row_vector(NodeId a, NodeId row) {
        const Mat& A = value(a);
        const Mat& R = value(row);
        if (R.rows() != 1 || R.cols() != A.cols())
            throw DimensionError("add_row_vector: row vector shape mismatch");
        Mat v = A.rowwise() + R.row(0);
        return binary(a, row, std::move(v), [a, row](Tape& t, const Mat& g) {
            t.accumulate(a, g);
            t.accumulate(row, g.colwise().sum());
        });
    }

    NodeId relu(NodeId a) {
        Mat v = value(a).cwiseMax(0.0);
        NodeId out = push(std::move(v), needs_grad(a), nullptr);
        attach(out, [a, out](Tape& t) {
            const Mat& g = t.nodes_[static_cast<size_t>(out)].grad;
            Mat mask = (t.value(out).array() > 0.0).cast<double>();
            t.accumulate(a, g.cwiseProduct(mask));
        });
        return out;
    }

    NodeId sigmoid(NodeId a) {
        Mat v = (1.0 / (1.0 + (-value(a).array()).exp())).matrix();
        NodeId out = push(std::move(v), needs_grad(a), nullptr);
        attach(out, [a, out](Tape& t) {
            const Mat& g = t.nodes_[static_cast<size_t>(out)].grad;
            const Mat& s = t.value(out);
            t.accumulate(a, (g.array() * s.array() * (1.0 - s.array())).matrix());
        });
        return out;
    }

    // Softmax over each row, computed with the max-shift trick.
    NodeId row_softmax(NodeId a) {
        const Mat& A = value(a);
        Mat v(A.rows(), A.cols());
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
            double m = A.row(i).maxCoeff();
            Eigen::ArrayXd e = (A.row(i).array() - m).exp();
            v.row(i) = (e / e.sum()).matrix();
        }
        NodeId out = push(std::move(v), needs_grad(a), nullptr);
        attach(out, [a, out](Tape& t) {
            const Mat& g = t.nodes_[static_cast<size_t>(out)].grad;
            const Mat& s = t.value(out);
            Mat gin(s.rows(), s.cols());
            for (Eigen::Index i = 0; i < s.rows(); ++i) {
                double dot = g.row(i).dot(s.row(i));
                gin.row(i) = (s.row(i).array() * (g.row(i).array() - dot)).matrix();
            }
            t.accumulate(a, gin);
        });
        return out;
    }

    // A * X with A a constant sparse matrix. A must outlive the tape.
    NodeId spmm(const SpMat* A, NodeId x) {
        if (A->cols() != value(x).rows()) throw DimensionError("spmm: inner dimensions differ");
        Mat v = (*A) * value(x);
        return unary(x, std::move(v),
                     [A, x](Tape& t, const Mat& g) { t.accumulate(x, A->transpose() * g); });
    }

    NodeId gather_rows(NodeId x, std::vector<int> rows) {
        const Mat& X = value(x);
        Mat v(static_cast<Eigen::Index>(rows.size()), X.cols());
        for (size_t i = 0; i < rows.size(); ++i) {
            if (rows[i] < 0 || rows[i] >= X.rows()) throw LookupError("gather_rows: index out of range");
            v.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
        }
        return unary(x, std::move(v), [x, rows = std::move(rows)](Tape& t, const Mat& g) {
            Mat gx = Mat::Zero(t.value(x).rows(), t.value(x).cols());
            for (size_t i = 0; i < rows.size(); ++i)
                gx.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
            t.accumulate(x, gx);
        });
    }

    NodeId concat_cols(NodeId a, NodeId b) {
        const Mat& A = value(a);
        const Mat& B = value(b);
        if (A.rows() != B.rows()) throw DimensionError("concat_cols: row counts differ");
        Mat v(A.rows(), A.cols() + B.cols());
        v << A, B;
        Eigen::Index ca = A.cols();
        return binary(a, b, std::move(v), [a, b, ca](Tape& t, const Mat& g) {
            t.accumulate(a, g.leftCols(ca));
            t.accumulate(b, g.rightCols(g.cols() - ca));
        });
    }

    NodeId transpose(NodeId a) {
        return unary(a, value(a).transpose(),
                     [a](Tape& t, const Mat& g) { t.accumulate(a, g.transpose()); });
    }

    // Scales row i of A by w(i); w is m x 1.
    NodeId row_scale(NodeId a, NodeId w) {
        const Mat& A = value(a);
        const Mat& W = value(w);
        if (W.cols() != 1 || W.rows() != A.rows())
            throw DimensionError("row_scale: weight must be a column vector matching rows");
        Mat v = A.array().colwise() * W.col(0).array();
        return binary(a, w, std::move(v), [a, w](Tape& t, const Mat& g) {
            const Mat& A_ = t.value(a);
            const Mat& W_ = t.value(w);
            t.accumulate(a, (g.array().colwise() * W_.col(0).array()).matrix());
            Mat gw = (g.cwiseProduct(A_)).rowwise().sum();
            t.accumulate(w, gw);
        });
    }

    // Column sums: 1 x d.
    NodeId col_sum(NodeId a) {
        Mat v = value(a).colwise().sum();
        return unary(a, std::move(v), [a](Tape& t, const Mat& g) {
            t.accumulate(a, g.replicate(t.value(a).rows(), 1));
        });
    }

    // m_p = sum_q attn(p,q) * (left_p - right_q), computed termwise so a
    // right side made only of copies of left_p gives an exact zero row.
    NodeId match_vectors(NodeId left, NodeId right, NodeId attn) {
        const Mat& L = value(left);
        const Mat& R = value(right);
        const Mat& A = value(attn);
        if (L.cols() != R.cols()) throw DimensionError("match_vectors: embedding widths differ");
        if (A.rows() != L.rows() || A.cols() != R.rows())
            throw DimensionError("match_vectors: attention shape mismatch");
        Mat v = Mat::Zero(L.rows(), L.cols());
        for (Eigen::Index p = 0; p < L.rows(); ++p)
            for (Eigen::Index q = 0; q < R.rows(); ++q)
                v.row(p) += A(p, q) * (L.row(p) - R.row(q));
        NodeId out = push(std::move(v), needs_grad(left) || needs_grad(right) || needs_grad(attn), nullptr);
        attach(out, [left, right, attn, out](Tape& t) {
            const Mat& g = t.nodes_[static_cast<size_t>(out)].grad;
            const Mat& L_ = t.value(left);
            const Mat& R_ = t.value(right);
            const Mat& A_ = t.value(attn);
            t.accumulate(left, (g.array().colwise() * A_.rowwise().sum().col(0).array()).matrix());
            t.accumulate(right, -(A_.transpose() * g));
            Mat ga(A_.rows(), A_.cols());
            for (Eigen::Index p = 0; p < A_.rows(); ++p)
                for (Eigen::Index q = 0; q < A_.cols(); ++q)
                    ga(p, q) = g.row(p).dot(L_.row(p) - R_.row(q));
            t.accumulate(attn, ga);
        });
        return out;
    }

    // L1 distance between two same-shape matrices, as a scalar node.
    NodeId l1_distance(NodeId a, NodeId b) {
        check_same_shape(a, b, "l1_distance");
        Mat v(1, 1);
        v(0, 0) = (value(a) - value(b)).cwiseAbs().sum();
        return binary(a, b, std::move(v), [a, b](Tape& t, const Mat& g) {
            Mat s = (t.value(a) - t.value(b)).unaryExpr([](double x) {
                return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
            });
            t.accumulate(a, g(0, 0) * s);
            t.accumulate(b, -g(0, 0) * s);
        });
    }

    // d_k = || H.row(I[k]) - H.row(J[k]) ||_1, stacked as m x 1.
    NodeId rows_l1(NodeId h, std::vector<int> i_rows, std::vector<int> j_rows) {
        if (i_rows.size() != j_rows.size()) throw DimensionError("rows_l1: index lists differ in length");
        const Mat& H = value(h);
        Mat v(static_cast<Eigen::Index>(i_rows.size()), 1);
        for (size_t k = 0; k < i_rows.size(); ++k)
            v(static_cast<Eigen::Index>(k), 0) = (H.row(i_rows[k]) - H.row(j_rows[k])).cwiseAbs().sum();
        return unary(h, std::move(v),
                     [h, i_rows = std::move(i_rows), j_rows = std::move(j_rows)](Tape& t, const Mat& g) {
                         const Mat& H_ = t.value(h);
                         Mat gh = Mat::Zero(H_.rows(), H_.cols());
                         for (size_t k = 0; k < i_rows.size(); ++k) {
                             Eigen::RowVectorXd s =
                                 (H_.row(i_rows[k]) - H_.row(j_rows[k])).unaryExpr([](double x) {
                                     return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                                 });
                             gh.row(i_rows[k]) += g(static_cast<Eigen::Index>(k), 0) * s;
                             gh.row(j_rows[k]) -= g(static_cast<Eigen::Index>(k), 0) * s;
                         }
                         t.accumulate(h, gh);
                     });
    }

    // sum_i sum_j max(0, pos_i - neg_j + gamma); pos and neg are column vectors.
    NodeId hinge_cross(NodeId pos, NodeId neg, double gamma) {
        const Mat& P = value(pos);
        const Mat& N = value(neg);
        if (P.cols() != 1 || N.cols() != 1) throw DimensionError("hinge_cross: expects column vectors");
        double total = 0.0;
        for (Eigen::Index i = 0; i < P.rows(); ++i)
            for (Eigen::Index j = 0; j < N.rows(); ++j)
                total += std::max(0.0, P(i, 0) - N(j, 0) + gamma);
        Mat v(1, 1);
        v(0, 0) = total;
        return binary(pos, neg, std::move(v), [pos, neg, gamma](Tape& t, const Mat& g) {
            const Mat& P_ = t.value(pos);
            const Mat& N_ = t.value(neg);
            Mat gp = Mat::Zero(P_.rows(), 1);
            Mat gn = Mat::Zero(N_.rows(), 1);
            for (Eigen::Index i = 0; i < P_.rows(); ++i)
                for (Eigen::Index j = 0; j < N_.rows(); ++j)
                    if (P_(i, 0) - N_(j, 0) + gamma > 0.0) {
                        gp(i, 0) += g(0, 0);
                        gn(j, 0) -= g(0, 0);
                    }
            t.accumulate(pos, gp);
            t.accumulate(neg, gn);
        });
    }

    // Stacks scalar nodes into an m x 1 column.
    NodeId stack_scalars(std::vector<NodeId> ids) {
        Mat v(static_cast<Eigen::Index>(ids.size()), 1);
        bool rg = false;
        for (size_t k = 0; k < ids.size(); ++k) {
            const Mat& s = value(ids[k]);
            if (s.rows() != 1 || s.cols() != 1) throw DimensionError("stack_scalars: inputs must be scalars");
            v(static_cast<Eigen::Index>(k), 0) = s(0, 0);
            rg = rg || needs_grad(ids[k]);
        }
        NodeId out = push(std::move(v), rg, nullptr);
        attach(out, [ids = std::move(ids), out](Tape& t) {
            const Mat& g = t.nodes_[static_cast<size_t>(out)].grad;
            for (size_t k = 0; k < ids.size(); ++k) {
                Mat gs(1, 1);
                gs(0, 0) = g(static_cast<Eigen::Index>(k), 0);
                t.accumulate(ids[k], gs);
            }
        });
        return out;
    }

    NodeId sum_scalars(const std::vector<NodeId>& ids) {
        if (ids.empty()) return constant(Mat::Zero(1, 1));
        NodeId total = ids[0];
        for (size_t i = 1; i < ids.size(); ++i) total = add(total, ids[i]);
        return total;
    }

    void accumulate(NodeId id, const Mat& g) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (!n.requires_grad) return;
        if (n.grad.size() == 0)
            n.grad = g;
        else
            n.grad += g;
    }

private:
    bool needs_grad(NodeId id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

    void check_same_shape(NodeId a, NodeId b, const char* op) const {
        const Mat& A = value(a);
        const Mat& B = value(b);
        if (A.rows() != B.rows() || A.cols() != B.cols())
            throw DimensionError(std::string(op) + ": operand shapes differ");
    }

    NodeId push(Mat v, bool rg, std::function<void(Tape&)> back) {
        nodes_.push_back(Node{std::move(v), Mat(), std::move(back), rg});
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    void attach(NodeId id, std::function<void(Tape&)> back) {
        if (nodes_[static_cast<size_t>(id)].requires_grad)
            nodes_[static_cast<size_t>(id)].back = std::move(back);
    }

    template <typename BackFn>
    NodeId unary(NodeId a, Mat v, BackFn&& fn) {
        NodeId out = push(std::move(v), needs_grad(a), nullptr);
        attach(out, [fn = std::forward<BackFn>(fn), out](Tape& t) {
            fn(t, t.nodes_[static_cast<size_t>(out)].grad);
        });
        return out;
    }

    template <typename BackFn>
    NodeId binary(NodeId a, NodeId b, Mat v, BackFn&& fn) {
        NodeId out = push(std::move(v), needs_grad(a) || needs_grad(b), nullptr);
        attach(out, [fn = std::forward<BackFn>(fn), out](Tape& t) {
            fn(t, t.nodes_[static_cast<size_t>(out)].grad);
        });
        return out;
    }

    std::vector<Node> nodes_;
};

}  // namespace kgalign
