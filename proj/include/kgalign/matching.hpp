#pragma once
// Cross-graph neighborhood matching and aggregation.
//
// For a candidate pair, every neighbor p of one side attends over the
// neighbors q of the other side with weights a_pq = softmax_q(h_p . h_q).
// Its matching vector m_p = sum_q a_pq (h_p - h_q) is computed termwise,
// so a counterpart consisting only of copies of h_p yields an exact zero.
// Each neighbor is augmented to [h_p || beta * m_p], gated, summed, and
// projected to the neighborhood representation g; the matching-oriented
// representation of an entity is [g || h]. Entities are compared by the L1
// distance of these representations.

#include <vector>

#include "kgalign/common.hpp"
#include "kgalign/neighborhood.hpp"
#include "kgalign/tape.hpp"

namespace kgalign {

struct MatchParams {
    double beta = 0.1;
    Mat w_gate;  // 2d x 2d
    Mat w_n;     // 2d x d_g

    void validate() const {
        if (beta < 0.0) throw InvalidInputError("match: beta must be non-negative");
        if (w_gate.rows() != w_gate.cols()) throw DimensionError("match: W_gate must be square");
        if (w_n.rows() != w_gate.rows()) throw DimensionError("match: W_N rows must equal gate width");
    }

    int rep_dim() const { return static_cast<int>(w_n.cols()); }

    static MatchParams init(int d, int d_g, double beta, uint64_t seed) {
        Rng rng(seed);
        MatchParams p;
        p.beta = beta;
        p.w_gate = glorot_uniform(2 * d, 2 * d, rng);
        p.w_n = glorot_uniform(2 * d, d_g, rng);
        return p;
    }
};

struct MatchedPair {
    NeighborhoodSubgraph left, right;
    Mat attention_left_to_right;  // |N_left| x |N_right|, rows sum to 1
    Mat attention_right_to_left;  // |N_right| x |N_left|, rows sum to 1
    Mat matching_vectors_left;    // |N_left| x d
    Mat matching_vectors_right;   // |N_right| x d
    double distance = 0.0;        // filled by the pair-scoring pipeline
};

namespace detail {

inline Mat cross_attention(const Mat& a, const Mat& b) {
    Mat logits = a * b.transpose();
    Mat out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        double m = logits.row(i).maxCoeff();
        Eigen::ArrayXd e = (logits.row(i).array() - m).exp();
        out.row(i) = (e / e.sum()).matrix();
    }
    return out;
}

inline Mat matching_vectors(const Mat& own, const Mat& other, const Mat& attn) {
    Mat m = Mat::Zero(own.rows(), own.cols());
    for (Eigen::Index p = 0; p < own.rows(); ++p)
        for (Eigen::Index q = 0; q < other.rows(); ++q)
            m.row(p) += attn(p, q) * (own.row(p) - other.row(q));
    return m;
}

}  // namespace detail

inline MatchedPair cross_match(const NeighborhoodSubgraph& left, const NeighborhoodSubgraph& right) {
    if (left.empty() || right.empty())
        throw InvalidInputError("cross_match: both subgraphs must be non-empty");
    if (left.neighbor_embeddings.cols() != right.neighbor_embeddings.cols())
        throw DimensionError("cross_match: embedding widths differ between sides");
    MatchedPair mp;
    mp.left = left;
    mp.right = right;
    mp.attention_left_to_right =
        detail::cross_attention(left.neighbor_embeddings, right.neighbor_embeddings);
    mp.attention_right_to_left =
        detail::cross_attention(right.neighbor_embeddings, left.neighbor_embeddings);
    mp.matching_vectors_left = detail::matching_vectors(
        left.neighbor_embeddings, right.neighbor_embeddings, mp.attention_left_to_right);
    mp.matching_vectors_right = detail::matching_vectors(
        right.neighbor_embeddings, left.neighbor_embeddings, mp.attention_right_to_left);
    return mp;
}

// [h_p || beta * m_p]
inline Eigen::RowVectorXd augment_neighbor(const Eigen::RowVectorXd& h_p, const Eigen::RowVectorXd& m_p,
                                           double beta) {
    if (h_p.cols() != m_p.cols()) throw DimensionError("augment_neighbor: lengths differ");
    Eigen::RowVectorXd out(2 * h_p.cols());
    out << h_p, beta * m_p;
    return out;
}

inline Mat augment_all(const Mat& embs, const Mat& match_vecs, double beta) {
    if (embs.rows() != match_vecs.rows() || embs.cols() != match_vecs.cols())
        throw DimensionError("augment_all: shapes differ");
    Mat out(embs.rows(), 2 * embs.cols());
    out << embs, beta * match_vecs;
    return out;
}

// g = (sum_p sigmoid(h^_p W_gate) .* h^_p) W_N; an empty neighborhood
// aggregates to the zero vector.
inline Vec aggregate_neighborhood(const Mat& augmented, const MatchParams& params) {
    params.validate();
    if (augmented.rows() == 0) return Vec::Zero(params.rep_dim());
    if (augmented.cols() != params.w_gate.rows())
        throw DimensionError("aggregate_neighborhood: width does not match W_gate");
    Mat gate = (augmented * params.w_gate)
                   .unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    Eigen::RowVectorXd pooled = gate.cwiseProduct(augmented).colwise().sum();
    return (pooled * params.w_n).transpose();
}

// [g || h]
inline Vec match_representation(const Vec& g, const Vec& h) {
    Vec out(g.size() + h.size());
    out << g, h;
    return out;
}

// Soft aggregation over the full neighborhood with weights alpha (the
// sampling probabilities); differentiable in W_s through alpha.
inline Vec soft_aggregate(const Mat& all_augmented, const Vec& alphas, const MatchParams& params) {
    params.validate();
    if (alphas.size() != all_augmented.rows())
        throw DimensionError("soft_aggregate: weight count does not match rows");
    if (all_augmented.rows() == 0) return Vec::Zero(params.rep_dim());
    if (all_augmented.cols() != params.w_gate.rows())
        throw DimensionError("soft_aggregate: width does not match W_gate");
    Mat gate = (all_augmented * params.w_gate)
                   .unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    Mat weighted = (gate.cwiseProduct(all_augmented).array().colwise() * alphas.array()).matrix();
    Eigen::RowVectorXd pooled = weighted.colwise().sum();
    return (pooled * params.w_n).transpose();
}

inline double pair_distance(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("pair_distance: lengths differ");
    return (a - b).cwiseAbs().sum();
}

// Matching-oriented representation of one entity against a counterpart
// subgraph. An empty own side gives g = 0; an empty counterpart leaves
// matching vectors at zero (the entity then aligns on h and gate alone).
inline Vec matching_representation(const NeighborhoodSubgraph& own, const NeighborhoodSubgraph& other,
                                   const Eigen::RowVectorXd& h_center, const MatchParams& params) {
    Vec g;
    if (own.empty()) {
        g = Vec::Zero(params.rep_dim());
    } else {
        Mat match_vecs;
        if (other.empty())
            match_vecs = Mat::Zero(own.neighbor_embeddings.rows(), own.neighbor_embeddings.cols());
        else
            match_vecs = detail::matching_vectors(
                own.neighbor_embeddings, other.neighbor_embeddings,
                detail::cross_attention(own.neighbor_embeddings, other.neighbor_embeddings));
        g = aggregate_neighborhood(augment_all(own.neighbor_embeddings, match_vecs, params.beta),
                                   params);
    }
    return match_representation(g, h_center.transpose());
}

// Ablation representation: neighborhood term is the plain average of the
// sampled neighbor embeddings, no matching, no gate.
inline Vec mean_representation(const NeighborhoodSubgraph& own, const Eigen::RowVectorXd& h_center) {
    Vec g = Vec::Zero(h_center.cols());
    if (!own.empty())
        g = own.neighbor_embeddings.colwise().mean().transpose();
    return match_representation(g, h_center.transpose());
}

// ---- tape versions, used by the differentiable losses ----

struct MatchLeaves {
    NodeId w_gate = -1;
    NodeId w_n = -1;
    double beta = 0.1;

    static MatchLeaves insert(Tape& tape, const MatchParams& p) {
        return MatchLeaves{tape.leaf(p.w_gate), tape.leaf(p.w_n), p.beta};
    }
};

// g as a 1 x d_g tape node from an augmented block (k x 2d).
inline NodeId aggregate_on_tape(Tape& tape, NodeId augmented, const MatchLeaves& leaves) {
    NodeId gate = tape.sigmoid(tape.matmul(augmented, leaves.w_gate));
    return tape.matmul(tape.col_sum(tape.cwise_mul(gate, augmented)), leaves.w_n);
}

// Matching-oriented representation (1 x (d_g + d)) for `own_rows` of H
// matched against `other_rows`.
inline NodeId representation_on_tape(Tape& tape, NodeId h, const std::vector<int>& own_rows,
                                     const std::vector<int>& other_rows, int center_row,
                                     const MatchLeaves& leaves) {
    NodeId center = tape.gather_rows(h, {center_row});
    NodeId g;
    if (own_rows.empty()) {
        g = tape.constant(Mat::Zero(1, tape.value(leaves.w_n).cols()));
    } else {
        NodeId own = tape.gather_rows(h, own_rows);
        NodeId match;
        if (other_rows.empty()) {
            match = tape.constant(
                Mat::Zero(static_cast<Eigen::Index>(own_rows.size()), tape.value(h).cols()));
        } else {
            NodeId other = tape.gather_rows(h, other_rows);
            NodeId attn = tape.row_softmax(tape.matmul_bt(own, other));
            match = tape.match_vectors(own, other, attn);
        }
        NodeId augmented = tape.concat_cols(own, tape.scale(match, leaves.beta));
        g = aggregate_on_tape(tape, augmented, leaves);
    }
    return tape.concat_cols(g, center);
}

// Ablation representation on tape: [mean of neighbor rows || h].
inline NodeId mean_representation_on_tape(Tape& tape, NodeId h, const std::vector<int>& own_rows,
                                          int center_row) {
    NodeId center = tape.gather_rows(h, {center_row});
    NodeId g;
    if (own_rows.empty())
        g = tape.constant(Mat::Zero(1, tape.value(h).cols()));
    else
        g = tape.scale(tape.col_sum(tape.gather_rows(h, own_rows)),
                       1.0 / static_cast<double>(own_rows.size()));
    return tape.concat_cols(g, center);
}

}  // namespace kgalign
