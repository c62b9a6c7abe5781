#include <catch2/catch_amalgamated.hpp>

#include "kgalign/datatools.hpp"
#include "kgalign/evaluation.hpp"

using namespace kgalign;

namespace {

AlignmentTask synthetic_task(int n, double avg_degree, double drop, int dim, uint64_t seed) {
    SyntheticOptions opt;
    opt.n = n;
    opt.avg_degree = avg_degree;
    opt.drop_edges = drop;
    opt.feature_dim = dim;
    opt.seed = seed;
    SyntheticPair sp = make_synthetic_pair(opt);
    return make_task(sp.g1, sp.g2, sp.features1, sp.features2, sp.gold, 0.3, seed + 1);
}

// Hand-built ranking table: source i has counterpart list given explicitly.
AlignmentRanking rankings_from(const std::vector<std::pair<int, std::vector<int>>>& rows) {
    AlignmentRanking r;
    for (const auto& [src, ids] : rows) {
        RankedCounterparts rc;
        rc.source = src;
        rc.ids = ids;
        rc.distances = Vec::Zero(static_cast<Eigen::Index>(ids.size()));
        r.by_source.emplace(src, std::move(rc));
    }
    return r;
}

}  // namespace

TEST_CASE("full-width rescreen equals a pure matching-distance ranking") {
    AlignmentTask task = synthetic_task(8, 3.0, 0.2, 4, 1);
    ModelParams model = init_model(4, 2, 3, 0.1, 2);
    ModelMeta meta;
    meta.sample_k = 2;
    Mat h = encode(task.merged, model.encoder);

    RankedCounterparts rc = rank_counterparts(0, model, meta, task, h, task.merged.n2());

    // Oracle: matching distance to every counterpart, sorted (distance, id).
    const MergedGraph& m = task.merged;
    int row_src = m.row(1, 0);
    auto rows_of = [&](int row) {
        return sample_neighbor_rows(row, m.row_neighbors[static_cast<size_t>(row)], h,
                                    model.sampler.w_s, meta.sample_k, SamplingMode::kDeterministic, 0)
            .rows;
    };
    std::vector<std::pair<double, int>> scored;
    for (int j = 0; j < m.n2(); ++j) {
        int row_c = m.n1() + j;
        auto ra = rows_of(row_src), rb = rows_of(row_c);
        Vec rep_a = representation_for_rows(h, ra, rb, row_src, model.match);
        Vec rep_b = representation_for_rows(h, rb, ra, row_c, model.match);
        scored.emplace_back(pair_distance(rep_a, rep_b), m.g2_ids[static_cast<size_t>(j)]);
    }
    std::sort(scored.begin(), scored.end());
    for (size_t i = 0; i < scored.size(); ++i) REQUIRE(rc.ids[i] == scored[i].second);
    for (int i = 1; i < rc.distances.size(); ++i) REQUIRE(rc.distances(i) >= rc.distances(i - 1));
}

TEST_CASE("identical embeddings and neighborhoods rank the gold counterpart first") {
    // Isomorphic pair, no perturbation: gold distance is exactly zero.
    AlignmentTask task = synthetic_task(10, 3.0, 0.0, 4, 3);
    ModelParams model = init_model(4, 2, 3, 0.1, 4);
    ModelMeta meta;
    meta.sample_k = 3;
    Mat h = encode(task.merged, model.encoder);
    for (const auto& [src, gold] : task.seeds.test_pairs) {
        RankedCounterparts rc = rank_counterparts(src, model, meta, task, h, task.merged.n2());
        REQUIRE(rc.ids[0] == gold);
        REQUIRE(rc.distances(0) <= 1e-9);
    }
}

TEST_CASE("two-stage ranking matches an exhaustive oracle on a 10x10 instance") {
    AlignmentTask task = synthetic_task(10, 3.0, 0.3, 4, 5);
    ModelParams model = init_model(4, 2, 3, 0.1, 6);
    ModelMeta meta;
    meta.sample_k = 2;
    Mat h = encode(task.merged, model.encoder);
    const MergedGraph& m = task.merged;
    int c = 4;

    RankedCounterparts rc = rank_counterparts(3, model, meta, task, h, c);

    // Oracle. Stage 1: embedding distances, sorted (distance, id).
    int row_src = m.row(1, 3);
    std::vector<std::pair<double, int>> stage1;
    for (int j = 0; j < m.n2(); ++j)
        stage1.emplace_back((h.row(row_src) - h.row(m.n1() + j)).cwiseAbs().sum(),
                            m.g2_ids[static_cast<size_t>(j)]);
    std::sort(stage1.begin(), stage1.end());
    // Stage 2: re-rank the first c by matching distance.
    auto rows_of = [&](int row) {
        return sample_neighbor_rows(row, m.row_neighbors[static_cast<size_t>(row)], h,
                                    model.sampler.w_s, meta.sample_k, SamplingMode::kDeterministic, 0)
            .rows;
    };
    std::vector<std::pair<double, int>> prefix;
    for (int p = 0; p < c; ++p) {
        int id = stage1[static_cast<size_t>(p)].second;
        int row_c = m.row(2, id);
        auto ra = rows_of(row_src), rb = rows_of(row_c);
        Vec rep_a = representation_for_rows(h, ra, rb, row_src, model.match);
        Vec rep_b = representation_for_rows(h, rb, ra, row_c, model.match);
        prefix.emplace_back(pair_distance(rep_a, rep_b), id);
    }
    std::sort(prefix.begin(), prefix.end());
    for (int p = 0; p < c; ++p) REQUIRE(rc.ids[static_cast<size_t>(p)] == prefix[static_cast<size_t>(p)].second);
    for (size_t p = static_cast<size_t>(c); p < rc.ids.size(); ++p)
        REQUIRE(rc.ids[p] == stage1[p].second);
}

TEST_CASE("ranking is invariant to triple order in the input") {
    SyntheticOptions opt;
    opt.n = 8;
    opt.avg_degree = 3.0;
    opt.feature_dim = 4;
    opt.seed = 7;
    SyntheticPair sp = make_synthetic_pair(opt);

    AlignmentTask a = make_task(sp.g1, sp.g2, sp.features1, sp.features2, sp.gold, 0.3, 8);
    std::reverse(sp.g2.triples.begin(), sp.g2.triples.end());
    sp.g2.rebuild_neighbor_index();
    AlignmentTask b = make_task(sp.g1, sp.g2, sp.features1, sp.features2, sp.gold, 0.3, 8);

    ModelParams model = init_model(4, 2, 3, 0.1, 9);
    ModelMeta meta;
    Mat ha = encode(a.merged, model.encoder);
    Mat hb = encode(b.merged, model.encoder);
    RankedCounterparts ra = rank_counterparts(0, model, meta, a, ha, a.merged.n2());
    RankedCounterparts rb = rank_counterparts(0, model, meta, b, hb, b.merged.n2());
    REQUIRE(ra.ids == rb.ids);
}

TEST_CASE("hits_at_k on hand-built rankings") {
    AlignmentRanking perfect = rankings_from({{0, {10, 11}}, {1, {11, 10}}});
    std::vector<std::pair<int, int>> gold{{0, 10}, {1, 11}};
    REQUIRE(hits_at_k(perfect, gold, 1) == 1.0);

    AlignmentRanking second = rankings_from({{0, {11, 10}}, {1, {10, 11}}});
    REQUIRE(hits_at_k(second, gold, 1) == 0.0);
    REQUIRE(hits_at_k(second, gold, 10) == 1.0);

    // Monotone in k, and hits at the full width is 1.
    for (int k = 1; k <= 2; ++k)
        REQUIRE(hits_at_k(second, gold, k) <= hits_at_k(second, gold, k + 1));
    REQUIRE(hits_at_k(second, gold, 2) == 1.0);

    AlignmentRanking missing = rankings_from({{0, {10}}});
    REQUIRE_THROWS_AS(hits_at_k(missing, gold, 1), IntegrityError);
    REQUIRE_THROWS_AS(hits_at_k(perfect, gold, 0), InvalidInputError);
}

TEST_CASE("hits_at_k reproduces a 733-of-1000 fraction") {
    std::vector<std::pair<int, std::vector<int>>> rows;
    std::vector<std::pair<int, int>> gold;
    for (int i = 0; i < 1000; ++i) {
        int counterpart = 5000 + i;
        gold.emplace_back(i, counterpart);
        if (i < 733)
            rows.push_back({i, {counterpart, 9999}});
        else
            rows.push_back({i, {9999, counterpart}});
    }
    REQUIRE(hits_at_k(rankings_from(rows), gold, 1) == Catch::Approx(0.733));
}

TEST_CASE("bucketed hits against a hand-binning oracle") {
    // Degrees are controlled through star graphs.
    KnowledgeGraph g1, g2;
    auto add_star = [](KnowledgeGraph& g, int center, int leaves, int leaf_base) {
        g.entity_ids.insert(center);
        g.entity_names[center] = "c" + std::to_string(center);
        g.relation_ids.insert(0);
        for (int i = 0; i < leaves; ++i) {
            int leaf = leaf_base + i;
            g.entity_ids.insert(leaf);
            g.entity_names[leaf] = "l" + std::to_string(leaf);
            g.triples.push_back({center, 0, leaf});
        }
    };
    // g1 centers 0,1,2 with degrees 5, 2, 12; g2 centers 0,1,2 with degrees 5, 7, 40.
    add_star(g1, 0, 5, 100);
    add_star(g1, 1, 2, 200);
    add_star(g1, 2, 12, 300);
    add_star(g2, 0, 5, 100);
    add_star(g2, 1, 7, 200);
    add_star(g2, 2, 40, 300);
    g1.rebuild_neighbor_index();
    g2.rebuild_neighbor_index();

    std::vector<std::pair<int, int>> gold{{0, 0}, {1, 1}, {2, 2}};
    // diffs: 0, 5, 28 -> buckets [0,10): two pairs, [10,20): none, [20,inf): one
    AlignmentRanking rankings =
        rankings_from({{0, {0, 1, 2}}, {1, {2, 1, 0}}, {2, {0, 1, 2}}});  // hits: 0 yes, 1 no, 2 no
    auto stats = bucketed_hits(rankings, gold, g1, g2, {0.0, 10.0, 20.0});
    REQUIRE(stats.size() == 3);
    REQUIRE(stats[0].count == 2);
    REQUIRE(stats[1].count == 0);
    REQUIRE(stats[2].count == 1);
    REQUIRE(stats[0].hits1.value() == Catch::Approx(0.5));
    REQUIRE(!stats[1].hits1.has_value());  // empty-bucket marker
    REQUIRE(stats[2].hits1.value() == 0.0);
    int total = 0;
    for (const auto& s : stats) total += s.count;
    REQUIRE(total == static_cast<int>(gold.size()));
}

TEST_CASE("single catch-all bucket equals global hits") {
    AlignmentTask task = synthetic_task(10, 3.0, 0.0, 4, 11);
    ModelParams model = init_model(4, 2, 3, 0.1, 12);
    ModelMeta meta;
    AlignmentRanking ranking = evaluate_all(model, meta, task, task.merged.n2());
    double global = hits_at_k(ranking, task.seeds.test_pairs, 1);
    auto stats = bucketed_hits(ranking, task.seeds.test_pairs, task.g1, task.g2, {0.0});
    REQUIRE(stats.size() == 1);
    REQUIRE(stats[0].count == static_cast<int>(task.seeds.test_pairs.size()));
    REQUIRE(stats[0].hits1.value() == Catch::Approx(global));
}

TEST_CASE("equal-degree pairs land in the first bucket") {
    AlignmentTask task = synthetic_task(8, 3.0, 0.0, 4, 13);  // isomorphic: all diffs zero
    AlignmentRanking ranking;
    for (const auto& [src, gold] : task.seeds.test_pairs) {
        RankedCounterparts rc;
        rc.source = src;
        rc.ids = {gold};
        rc.distances = Vec::Zero(1);
        ranking.by_source.emplace(src, std::move(rc));
    }
    auto stats = bucketed_hits(ranking, task.seeds.test_pairs, task.g1, task.g2,
                               {0.0, 10.0, 20.0, 30.0});
    REQUIRE(stats[0].count == static_cast<int>(task.seeds.test_pairs.size()));
    for (size_t b = 1; b < stats.size(); ++b) REQUIRE(stats[b].count == 0);
}

TEST_CASE("parallel evaluation matches serial evaluation") {
    AlignmentTask task = synthetic_task(12, 3.0, 0.2, 4, 14);
    ModelParams model = init_model(4, 2, 3, 0.1, 15);
    ModelMeta meta;
    AlignmentRanking serial = evaluate_all(model, meta, task, 5, 1);
    AlignmentRanking parallel = evaluate_all(model, meta, task, 5, 4);
    REQUIRE(serial.by_source.size() == parallel.by_source.size());
    for (const auto& [src, rc] : serial.by_source)
        REQUIRE(rc.ids == parallel.by_source.at(src).ids);
}
