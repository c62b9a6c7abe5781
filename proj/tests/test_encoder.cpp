#include <catch2/catch_amalgamated.hpp>

#include "kgalign/encoder.hpp"
#include "support/grad_check.hpp"

using namespace kgalign;

namespace {

KnowledgeGraph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    KnowledgeGraph kg;
    for (int i = 0; i < n; ++i) {
        kg.entity_ids.insert(i);
        kg.entity_names[i] = "n" + std::to_string(i);
    }
    kg.relation_ids.insert(0);
    for (auto [a, b] : edges) kg.triples.push_back({a, 0, b});
    kg.rebuild_neighbor_index();
    return kg;
}

KnowledgeGraph empty_graph(int n) { return graph_from_edges(n, {}); }

MergedGraph merged_single_side(int n, const std::vector<std::pair<int, int>>& edges, const Mat& feats) {
    // A lone placeholder node keeps the second side non-empty without edges.
    KnowledgeGraph g2 = empty_graph(1);
    Mat f2 = Mat::Zero(1, feats.cols());
    return merge_graphs(graph_from_edges(n, edges), g2, feats, f2);
}

Mat random_mat(Eigen::Index r, Eigen::Index c, uint64_t seed) {
    Rng rng(seed);
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.gaussian();
    return m;
}

// Straight-line dense oracle: relu(D^-1 (A + I) H W).
Mat dense_gcn_oracle(const Mat& h, const MergedGraph& merged, const Mat& w) {
    int n = merged.num_nodes;
    Mat a = Mat::Zero(n, n);
    for (auto [i, j] : merged.edges) a(i, j) = 1.0;
    Mat d_inv = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) d_inv(i, i) = 1.0 / a.row(i).sum();
    return (d_inv * a * h * w).cwiseMax(0.0);
}

}  // namespace

TEST_CASE("gcn layer on an isolated node is relu of the identity map") {
    Mat feats(2, 2);
    feats << 1.0, -2.0, 0.0, 0.0;
    MergedGraph m = merged_single_side(1, {}, feats.topRows(1));
    // merged has 2 nodes (placeholder side 2); node 0 is isolated.
    Mat h(2, 2);
    h << 1.0, -2.0, 0.0, 0.0;
    Mat out = gcn_layer_forward(h, m, Mat::Identity(2, 2));
    REQUIRE(out(0, 0) == 1.0);
    REQUIRE(out(0, 1) == 0.0);
}

TEST_CASE("gcn layer averages over the closed neighborhood") {
    Mat feats(2, 1);
    feats << 2.0, 4.0;
    MergedGraph m = merged_single_side(2, {{0, 1}}, feats);
    Mat h(3, 1);
    h << 2.0, 4.0, 0.0;
    Mat w(1, 1);
    w << 1.0;
    Mat out = gcn_layer_forward(h, m, w);
    REQUIRE(out(0, 0) == Catch::Approx(3.0));
    REQUIRE(out(1, 0) == Catch::Approx(3.0));
}

TEST_CASE("gcn layer matches the dense oracle on a random graph") {
    Mat feats = random_mat(6, 4, 1);
    MergedGraph m = merged_single_side(6, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 1}, {5, 2}}, feats);
    Mat h = random_mat(7, 4, 2);
    Mat w = random_mat(4, 4, 3);
    Mat out = gcn_layer_forward(h, m, w);
    REQUIRE((out - dense_gcn_oracle(h, m, w)).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE(out.minCoeff() >= 0.0);  // relu non-negativity
    REQUIRE_THROWS_AS(gcn_layer_forward(random_mat(3, 4, 4), m, w), DimensionError);
}

TEST_CASE("highway gate saturation") {
    Mat h_in = random_mat(3, 2, 5);
    Mat h_out = random_mat(3, 2, 6);
    Mat w_t = Mat::Zero(2, 2);
    REQUIRE(highway_combine(h_in, h_out, w_t, Vec::Constant(2, -1e9)).isApprox(h_in));
    REQUIRE(highway_combine(h_in, h_out, w_t, Vec::Constant(2, 1e9)).isApprox(h_out));
    REQUIRE(highway_combine(h_in, h_out, w_t, Vec::Zero(2)).isApprox(0.5 * (h_in + h_out)));
    REQUIRE_THROWS_AS(highway_combine(h_in, random_mat(2, 2, 7), w_t, Vec::Zero(2)), DimensionError);
}

TEST_CASE("encode cannot leak across disconnected components") {
    Mat feats = random_mat(4, 3, 8);
    KnowledgeGraph g1 = graph_from_edges(2, {{0, 1}});
    KnowledgeGraph g2 = graph_from_edges(2, {{0, 1}});
    MergedGraph a = merge_graphs(g1, g2, feats.topRows(2), feats.bottomRows(2));
    EncoderParams params = EncoderParams::init(3, 2, 42);
    Mat out_a = encode(a, params);

    Mat perturbed = feats;
    perturbed.bottomRows(2) = random_mat(2, 3, 9);
    MergedGraph b = merge_graphs(g1, g2, perturbed.topRows(2), perturbed.bottomRows(2));
    Mat out_b = encode(b, params);
    REQUIRE(out_a.topRows(2).isApprox(out_b.topRows(2)));
    REQUIRE(!out_a.bottomRows(2).isApprox(out_b.bottomRows(2)));
}

TEST_CASE("encode output shape follows the feature width") {
    int d = 300;
    Mat feats = random_mat(5, d, 10);
    MergedGraph m = merged_single_side(5, {{0, 1}, {2, 3}}, feats);
    EncoderParams params = EncoderParams::init(d, 2, 7);
    Mat out = encode(m, params);
    REQUIRE(out.rows() == 6);
    REQUIRE(out.cols() == d);
}

TEST_CASE("encode equals a straight-line composition oracle") {
    Mat feats = random_mat(8, 3, 11);
    MergedGraph m = merged_single_side(8, {{0, 1}, {1, 2}, {2, 3}, {4, 5}, {6, 7}, {0, 7}}, feats);
    EncoderParams params = EncoderParams::init(3, 2, 13);
    Mat h = m.features;
    for (int l = 0; l < 2; ++l) {
        Mat out = dense_gcn_oracle(h, m, params.gcn_weights[static_cast<size_t>(l)]);
        Mat t = ((h * params.highway_gate_weights[static_cast<size_t>(l)]).rowwise() +
                 params.highway_gate_bias[static_cast<size_t>(l)].transpose())
                    .unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
        h = t.cwiseProduct(out) + (Mat::Ones(t.rows(), t.cols()) - t).cwiseProduct(h);
    }
    REQUIRE((encode(m, params) - h).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("encode is permutation equivariant") {
    Mat feats = random_mat(5, 3, 14);
    std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}, {3, 4}, {0, 4}};
    EncoderParams params = EncoderParams::init(3, 2, 15);

    // Relabel side-1 nodes by a permutation and compare rows.
    std::vector<int> perm{3, 0, 4, 1, 2};
    std::vector<std::pair<int, int>> pedges;
    for (auto [a, b] : edges)
        pedges.emplace_back(perm[static_cast<size_t>(a)], perm[static_cast<size_t>(b)]);
    Mat pfeats(5, 3);
    for (int i = 0; i < 5; ++i) pfeats.row(perm[static_cast<size_t>(i)]) = feats.row(i);

    Mat out = encode(merged_single_side(5, edges, feats), params);
    Mat pout = encode(merged_single_side(5, pedges, pfeats), params);
    for (int i = 0; i < 5; ++i) REQUIRE(out.row(i).isApprox(pout.row(perm[static_cast<size_t>(i)]), 1e-12));
}

TEST_CASE("tape encoder matches the plain encoder") {
    Mat feats = random_mat(6, 4, 16);
    MergedGraph m = merged_single_side(6, {{0, 1}, {2, 3}, {4, 5}, {1, 4}}, feats);
    EncoderParams params = EncoderParams::init(4, 2, 17);
    Tape tape;
    EncoderLeaves lv = EncoderLeaves::insert(tape, params);
    NodeId h = encode_on_tape(tape, m, lv);
    REQUIRE(tape.value(h).isApprox(encode(m, params), 1e-12));
}

TEST_CASE("encoder gradients match central finite differences") {
    Mat feats = random_mat(5, 3, 18);
    MergedGraph m = merged_single_side(5, {{0, 1}, {1, 2}, {3, 4}, {2, 4}}, feats);
    Mat target = random_mat(6, 3, 19);

    // L1-based scalar loss of the encoder output against a fixed target.
    auto loss_of = [&m, &target](const std::vector<Mat>& ps) {
        EncoderParams p;
        p.gcn_weights = {ps[0], ps[1]};
        p.highway_gate_weights = {ps[2], ps[3]};
        p.highway_gate_bias = {Vec(ps[4].transpose()), Vec(ps[5].transpose())};
        Tape tape;
        EncoderLeaves lv = EncoderLeaves::insert(tape, p);
        NodeId h = encode_on_tape(tape, m, lv);
        NodeId loss = tape.l1_distance(h, tape.constant(target));
        return tape.value(loss)(0, 0);
    };

    EncoderParams p = EncoderParams::init(3, 2, 20);
    std::vector<Mat> params{p.gcn_weights[0],          p.gcn_weights[1],
                            p.highway_gate_weights[0], p.highway_gate_weights[1],
                            Mat(p.highway_gate_bias[0].transpose()),
                            Mat(p.highway_gate_bias[1].transpose())};

    std::vector<Mat> analytic;
    {
        Tape tape;
        EncoderLeaves lv = EncoderLeaves::insert(tape, p);
        NodeId h = encode_on_tape(tape, m, lv);
        NodeId loss = tape.l1_distance(h, tape.constant(target));
        tape.backward(loss);
        analytic = {tape.grad(lv.gcn_w[0]),  tape.grad(lv.gcn_w[1]), tape.grad(lv.gate_w[0]),
                    tape.grad(lv.gate_w[1]), tape.grad(lv.gate_b[0]), tape.grad(lv.gate_b[1])};
    }
    auto report = kgalign::testing::check_gradients(loss_of, params, analytic);
    INFO("max rel err " << report.max_rel_err << " over " << report.checked << " entries");
    REQUIRE(report.max_rel_err <= 1e-4);
}

TEST_CASE("encoder parameter validation") {
    EncoderParams p = EncoderParams::init(3, 2, 21);
    p.highway_gate_bias[1] = Vec::Zero(5);
    REQUIRE_THROWS_AS(p.validate(), DimensionError);
    EncoderParams q = EncoderParams::init(3, 2, 22);
    q.gcn_weights[0] = Mat::Zero(3, 4);
    REQUIRE_THROWS_AS(q.validate(), DimensionError);
}
