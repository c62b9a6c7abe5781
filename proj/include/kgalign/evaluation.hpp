#pragma once
// Alignment inference and metrics.
//
// Ranking is two-stage: counterparts are first ordered by L1 distance
// between encoder embeddings, then the top C are re-ranked by the L1
// distance between matching-oriented representations (which are pair
// dependent and too expensive to build against every counterpart at full
// scale). Counterparts beyond C keep their first-stage order behind the
// re-ranked prefix. C = |E2| makes the protocol a pure matching-distance
// ranking.

#include <map>
#include <optional>
#include <vector>

#include "kgalign/common.hpp"
#include "kgalign/kg.hpp"
#include "kgalign/training.hpp"

namespace kgalign {

struct RankedCounterparts {
    int source = -1;
    std::vector<int> ids;  // counterpart ids, best first
    Vec distances;         // matching distance within the re-ranked prefix,
                           // embedding distance beyond it
    int rescreen_width = 0;
};

struct AlignmentRanking {
    std::map<int, RankedCounterparts> by_source;
    int rescreen_width = 0;
};

namespace detail {

inline std::vector<int> subgraph_rows(const MergedGraph& merged, const SamplerParams& sampler,
                                      const Mat& h, int node_row, int k, SamplerKind kind,
                                      uint64_t seed) {
    const std::vector<int>& nbrs = merged.row_neighbors[static_cast<size_t>(node_row)];
    if (kind == SamplerKind::kLearned)
        return sample_neighbor_rows(node_row, nbrs, h, sampler.w_s, k, SamplingMode::kDeterministic, 0)
            .rows;
    return random_neighbor_rows(nbrs, k, derive_seed(seed, static_cast<uint64_t>(node_row))).rows;
}

}  // namespace detail

// Full ranked counterpart list for one G1 source entity.
inline RankedCounterparts rank_counterparts(int source, const ModelParams& model, const ModelMeta& meta,
                                            const AlignmentTask& task, const Mat& h, int rescreen_width,
                                            uint64_t seed = 0) {
    if (rescreen_width < 1) throw InvalidInputError("rank_counterparts: rescreen width must be >= 1");
    const MergedGraph& merged = task.merged;
    int row_src = merged.row(1, source);

    // Stage 1: embedding distance over all counterparts.
    std::vector<int> order(static_cast<size_t>(merged.n2()));
    Vec emb_dist(merged.n2());
    for (int i = 0; i < merged.n2(); ++i) {
        order[static_cast<size_t>(i)] = i;
        emb_dist(i) = (h.row(row_src) - h.row(merged.n1() + i)).cwiseAbs().sum();
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (emb_dist(a) != emb_dist(b)) return emb_dist(a) < emb_dist(b);
        return merged.g2_ids[static_cast<size_t>(a)] < merged.g2_ids[static_cast<size_t>(b)];
    });

    // Stage 2: re-rank the prefix by matching distance.
    int c = std::min(rescreen_width, merged.n2());
    std::vector<int> src_rows =
        detail::subgraph_rows(merged, model.sampler, h, row_src, meta.sample_k, meta.sampler_kind, seed);
    std::vector<std::pair<double, int>> rescored;  // (distance, stage-1 position)
    rescored.reserve(static_cast<size_t>(c));
    for (int p = 0; p < c; ++p) {
        int cand_row = merged.n1() + order[static_cast<size_t>(p)];
        std::vector<int> cand_rows = detail::subgraph_rows(merged, model.sampler, h, cand_row,
                                                           meta.sample_k, meta.sampler_kind, seed);
        Vec rep_s = representation_for_rows(h, src_rows, cand_rows, row_src, model.match,
                                            meta.matching_enabled);
        Vec rep_c = representation_for_rows(h, cand_rows, src_rows, cand_row, model.match,
                                            meta.matching_enabled);
        rescored.emplace_back(pair_distance(rep_s, rep_c), p);
    }
    std::sort(rescored.begin(), rescored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return merged.g2_ids[static_cast<size_t>(order[static_cast<size_t>(a.second)])] <
               merged.g2_ids[static_cast<size_t>(order[static_cast<size_t>(b.second)])];
    });

    RankedCounterparts out;
    out.source = source;
    out.rescreen_width = c;
    out.ids.reserve(static_cast<size_t>(merged.n2()));
    out.distances.resize(merged.n2());
    Eigen::Index pos = 0;
    for (const auto& [d, p] : rescored) {
        out.ids.push_back(merged.g2_ids[static_cast<size_t>(order[static_cast<size_t>(p)])]);
        out.distances(pos++) = d;
    }
    for (int p = c; p < merged.n2(); ++p) {
        out.ids.push_back(merged.g2_ids[static_cast<size_t>(order[static_cast<size_t>(p)])]);
        out.distances(pos++) = emb_dist(order[static_cast<size_t>(p)]);
    }
    return out;
}

// Rankings for every test source, parallel over sources.
inline AlignmentRanking evaluate_all(const ModelParams& model, const ModelMeta& meta,
                                     const AlignmentTask& task, int rescreen_width, int threads = 1,
                                     uint64_t seed = 0) {
    Mat h = encode(task.merged, model.encoder);
    AlignmentRanking ranking;
    ranking.rescreen_width = std::min(rescreen_width, task.merged.n2());
    const auto& pairs = task.seeds.test_pairs;
    std::vector<RankedCounterparts> slots(pairs.size());
    parallel_for(pairs.size(), threads, [&](size_t i) {
        slots[i] = rank_counterparts(pairs[i].first, model, meta, task, h, rescreen_width, seed);
    });
    for (auto& rc : slots) ranking.by_source.emplace(rc.source, std::move(rc));
    return ranking;
}

// Fraction of gold pairs whose counterpart ranks within the top k.
inline double hits_at_k(const AlignmentRanking& rankings, const std::vector<std::pair<int, int>>& gold,
                        int k) {
    if (k < 1) throw InvalidInputError("hits_at_k: k must be >= 1");
    if (gold.empty()) throw InvalidInputError("hits_at_k: empty gold set");
    int hits = 0;
    for (const auto& [src, counterpart] : gold) {
        auto it = rankings.by_source.find(src);
        if (it == rankings.by_source.end())
            throw IntegrityError("hits_at_k: no ranking for source " + std::to_string(src));
        const std::vector<int>& ids = it->second.ids;
        int limit = std::min<int>(k, static_cast<int>(ids.size()));
        for (int p = 0; p < limit; ++p)
            if (ids[static_cast<size_t>(p)] == counterpart) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / static_cast<double>(gold.size());
}

struct BucketStat {
    double lo = 0.0;
    double hi = 0.0;  // infinity for the last bucket
    int count = 0;
    std::optional<double> hits1;  // empty marker for empty buckets
};

// Hits@1 bucketed by |deg_G1(e1) - deg_G2(e2)| over the gold pairs.
// Edges must start at 0 and increase strictly; the last bucket is open.
inline std::vector<BucketStat> bucketed_hits(const AlignmentRanking& rankings,
                                             const std::vector<std::pair<int, int>>& gold,
                                             const KnowledgeGraph& g1, const KnowledgeGraph& g2,
                                             const std::vector<double>& bucket_edges) {
    if (bucket_edges.empty() || bucket_edges.front() != 0.0)
        throw InvalidInputError("bucketed_hits: bucket edges must start at 0");
    for (size_t i = 1; i < bucket_edges.size(); ++i)
        if (bucket_edges[i] <= bucket_edges[i - 1])
            throw InvalidInputError("bucketed_hits: bucket edges must be strictly increasing");

    std::vector<BucketStat> stats(bucket_edges.size());
    for (size_t b = 0; b < bucket_edges.size(); ++b) {
        stats[b].lo = bucket_edges[b];
        stats[b].hi = b + 1 < bucket_edges.size() ? bucket_edges[b + 1]
                                                  : std::numeric_limits<double>::infinity();
    }
    std::vector<int> bucket_hits(bucket_edges.size(), 0);
    for (const auto& [e1, e2] : gold) {
        double diff = std::abs(static_cast<double>(g1.degree(e1)) - static_cast<double>(g2.degree(e2)));
        size_t b = bucket_edges.size() - 1;
        for (size_t i = 0; i + 1 < bucket_edges.size(); ++i)
            if (diff >= bucket_edges[i] && diff < bucket_edges[i + 1]) {
                b = i;
                break;
            }
        ++stats[b].count;
        auto it = rankings.by_source.find(e1);
        if (it == rankings.by_source.end())
            throw IntegrityError("bucketed_hits: no ranking for source " + std::to_string(e1));
        if (!it->second.ids.empty() && it->second.ids[0] == e2) ++bucket_hits[b];
    }
    for (size_t b = 0; b < stats.size(); ++b)
        if (stats[b].count > 0)
            stats[b].hits1 = static_cast<double>(bucket_hits[b]) / static_cast<double>(stats[b].count);
    return stats;
}

}  // namespace kgalign
