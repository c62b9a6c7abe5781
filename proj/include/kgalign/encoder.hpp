#pragma once
// Multi-layer graph convolution with per-layer highway gating.
//
// One layer maps H (n x d) to relu(P H W) where P is the row-normalized
// adjacency with self-loops (P(i,j) = 1/eps_i for j in N_i u {i}), then a
// highway gate T = sigmoid(H W_T + b_T) blends layer output with layer
// input: T .* out + (1-T) .* in. Gating each layer against its own input
// requires equal widths across all layers, which the default configuration
// (hidden width = feature width) satisfies.

#include <string>
#include <vector>

#include "kgalign/common.hpp"
#include "kgalign/kg.hpp"
#include "kgalign/tape.hpp"

namespace kgalign {

struct EncoderParams {
    std::vector<Mat> gcn_weights;        // W per layer, d x d
    std::vector<Mat> highway_gate_weights;  // W_T per layer, d x d
    std::vector<Vec> highway_gate_bias;     // b_T per layer, length d

    int num_layers() const { return static_cast<int>(gcn_weights.size()); }

    void validate() const {
        if (gcn_weights.size() != highway_gate_weights.size() ||
            gcn_weights.size() != highway_gate_bias.size())
            throw DimensionError("encoder: per-layer parameter lists differ in length");
        for (size_t l = 0; l < gcn_weights.size(); ++l) {
            const Mat& w = gcn_weights[l];
            if (w.rows() != w.cols())
                throw DimensionError("encoder: layer widths must be equal for highway gating");
            if (highway_gate_weights[l].rows() != w.rows() || highway_gate_weights[l].cols() != w.cols())
                throw DimensionError("encoder: gate weight shape mismatch at layer " + std::to_string(l));
            if (highway_gate_bias[l].size() != w.cols())
                throw DimensionError("encoder: gate bias length mismatch at layer " + std::to_string(l));
            if (l > 0 && gcn_weights[l - 1].cols() != w.rows())
                throw DimensionError("encoder: layer shapes do not chain");
        }
    }

    // Glorot-uniform weights; gate bias starts at -1 so early training
    // favors the carry path.
    static EncoderParams init(int dim, int layers, uint64_t seed) {
        EncoderParams p;
        Rng rng(seed);
        for (int l = 0; l < layers; ++l) {
            p.gcn_weights.push_back(glorot_uniform(dim, dim, rng));
            p.highway_gate_weights.push_back(glorot_uniform(dim, dim, rng));
            p.highway_gate_bias.push_back(Vec::Constant(dim, -1.0));
        }
        return p;
    }
};

// One graph convolution: relu(P H W).
inline Mat gcn_layer_forward(const Mat& h, const MergedGraph& merged, const Mat& w) {
    if (h.rows() != merged.num_nodes)
        throw DimensionError("gcn_layer_forward: feature rows must equal node count");
    if (h.cols() != w.rows()) throw DimensionError("gcn_layer_forward: H and W do not chain");
    return ((merged.adj_norm * h) * w).cwiseMax(0.0);
}

// Highway blend: sigmoid(H_in W_T + b_T) .* H_out + complement .* H_in.
inline Mat highway_combine(const Mat& h_in, const Mat& h_out, const Mat& w_t, const Vec& b_t) {
    if (h_in.rows() != h_out.rows() || h_in.cols() != h_out.cols())
        throw DimensionError("highway_combine: input/output shapes differ");
    if (w_t.rows() != h_in.cols() || w_t.cols() != h_in.cols() || b_t.size() != h_in.cols())
        throw DimensionError("highway_combine: gate parameter shapes do not match");
    Mat t = ((h_in * w_t).rowwise() + b_t.transpose()).unaryExpr(
        [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    return t.cwiseProduct(h_out) + (Mat::Ones(t.rows(), t.cols()) - t).cwiseProduct(h_in);
}

// Full encoder: stacked gcn layers, each highway-gated against its input.
inline Mat encode(const MergedGraph& merged, const EncoderParams& params) {
    params.validate();
    if (!params.gcn_weights.empty() && merged.features.cols() != params.gcn_weights[0].rows())
        throw DimensionError("encode: feature width does not match first layer");
    Mat h = merged.features;
    for (int l = 0; l < params.num_layers(); ++l) {
        Mat out = gcn_layer_forward(h, merged, params.gcn_weights[l]);
        h = highway_combine(h, out, params.highway_gate_weights[l],
                            params.highway_gate_bias[l]);
    }
    return h;
}

// Tape-resident encoder parameters, for losses that differentiate the
// whole pipeline.
struct EncoderLeaves {
    std::vector<NodeId> gcn_w;
    std::vector<NodeId> gate_w;
    std::vector<NodeId> gate_b;  // stored as 1 x d rows

    static EncoderLeaves insert(Tape& tape, const EncoderParams& p) {
        EncoderLeaves lv;
        for (int l = 0; l < p.num_layers(); ++l) {
            lv.gcn_w.push_back(tape.leaf(p.gcn_weights[static_cast<size_t>(l)]));
            lv.gate_w.push_back(tape.leaf(p.highway_gate_weights[static_cast<size_t>(l)]));
            lv.gate_b.push_back(tape.leaf(p.highway_gate_bias[static_cast<size_t>(l)].transpose()));
        }
        return lv;
    }
};

inline NodeId encode_on_tape(Tape& tape, const MergedGraph& merged, const EncoderLeaves& leaves) {
    NodeId h = tape.constant(merged.features);
    for (size_t l = 0; l < leaves.gcn_w.size(); ++l) {
        NodeId z = tape.relu(tape.spmm(&merged.adj_norm, tape.matmul(h, leaves.gcn_w[l])));
        NodeId t = tape.sigmoid(tape.add_row_vector(tape.matmul(h, leaves.gate_w[l]), leaves.gate_b[l]));
        h = tape.add(tape.cwise_mul(t, z), tape.cwise_mul(tape.one_minus(t), h));
    }
    return h;
}

}  // namespace kgalign
