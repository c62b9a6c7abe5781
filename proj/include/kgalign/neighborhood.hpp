#pragma once
// Informative-neighbor sampling and counterpart candidate selection.
//
// A neighbor j of center i is scored by the bilinear form h_i W_s h_j^T;
// softmax over the full one-hop neighborhood turns scores into sampling
// probabilities. Deterministic mode keeps the top-K neighbors (ties to the
// smaller entity id); stochastic mode draws K without replacement
// proportionally to the probabilities. Candidate counterparts are the t
// entities of the other KG closest in L1 distance.

#include <algorithm>
#include <numeric>
#include <vector>

#include "kgalign/common.hpp"
#include "kgalign/kg.hpp"

namespace kgalign {

struct SamplerParams {
    Mat w_s;  // d x d shared bilinear weight

    void validate() const {
        if (w_s.rows() != w_s.cols()) throw DimensionError("sampler: W_s must be square");
    }

    static SamplerParams init(int dim, uint64_t seed) {
        Rng rng(seed);
        return SamplerParams{glorot_uniform(dim, dim, rng)};
    }
};

enum class SamplingMode { kDeterministic, kStochastic };

struct NeighborhoodSubgraph {
    int center = -1;
    std::vector<int> neighbor_ids;  // <= K entries, subset of the center's one-hop set
    Mat neighbor_embeddings;        // |neighbor_ids| x d
    Vec sample_probs;               // softmax over the FULL neighborhood, restricted to the kept set

    int size() const { return static_cast<int>(neighbor_ids.size()); }
    bool empty() const { return neighbor_ids.empty(); }
};

struct CandidateSet {
    int source = -1;
    std::vector<int> candidates;  // ids in the other KG, by ascending distance
    Vec distances;                // aligned with candidates, non-decreasing
};

// Softmax over j of h_center * W_s * h_j^T.
inline Vec neighbor_sampling_probs(const Eigen::RowVectorXd& h_center, const Mat& neighbor_embs,
                                   const Mat& w_s) {
    if (neighbor_embs.rows() == 0) throw InvalidInputError("neighbor_sampling_probs: empty neighborhood");
    if (h_center.cols() != w_s.rows() || w_s.cols() != neighbor_embs.cols())
        throw DimensionError("neighbor_sampling_probs: shapes do not chain");
    Vec logits = neighbor_embs * (h_center * w_s).transpose();
    double m = logits.maxCoeff();
    Vec e = (logits.array() - m).exp();
    return e / e.sum();
}

namespace detail {

// Shared core over arbitrary index lists; callers map ids <-> rows.
struct SampledIndices {
    std::vector<int> picked;  // positions into the neighbor list
    Vec probs;                // probabilities of the picked positions
};

inline SampledIndices pick_top_k(const Vec& probs, const std::vector<int>& ids, int k) {
    std::vector<int> order(ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (probs(a) != probs(b)) return probs(a) > probs(b);
        return ids[static_cast<size_t>(a)] < ids[static_cast<size_t>(b)];
    });
    SampledIndices out;
    int take = std::min<int>(k, static_cast<int>(ids.size()));
    out.picked.assign(order.begin(), order.begin() + take);
    out.probs.resize(take);
    for (int i = 0; i < take; ++i) out.probs(i) = probs(out.picked[static_cast<size_t>(i)]);
    return out;
}

inline SampledIndices pick_weighted_without_replacement(const Vec& probs, int k, Rng& rng) {
    int m = static_cast<int>(probs.size());
    int take = std::min(k, m);
    std::vector<int> alive(static_cast<size_t>(m));
    std::iota(alive.begin(), alive.end(), 0);
    std::vector<double> w(probs.data(), probs.data() + m);
    SampledIndices out;
    out.probs.resize(take);
    for (int step = 0; step < take; ++step) {
        double total = 0.0;
        for (int idx : alive) total += w[static_cast<size_t>(idx)];
        double u = rng.uniform() * total;
        size_t chosen = alive.size() - 1;
        double acc = 0.0;
        for (size_t pos = 0; pos < alive.size(); ++pos) {
            acc += w[static_cast<size_t>(alive[pos])];
            if (u < acc) {
                chosen = pos;
                break;
            }
        }
        int idx = alive[chosen];
        out.picked.push_back(idx);
        out.probs(step) = probs(idx);
        alive.erase(alive.begin() + static_cast<long>(chosen));
    }
    return out;
}

}  // namespace detail

// Builds the sampled subgraph of `center`. `embeddings` holds one row per
// entity of `graph` in ascending id order. If the neighborhood has at most
// K entries all of them are kept.
inline NeighborhoodSubgraph sample_neighborhood(int center, const KnowledgeGraph& graph,
                                                const Mat& embeddings, const Mat& w_s, int k,
                                                SamplingMode mode, uint64_t rng_seed) {
    if (k < 1) throw InvalidInputError("sample_neighborhood: K must be >= 1");
    const std::vector<int>& nbrs = graph.neighbors(center);  // throws LookupError if absent

    std::vector<int> id_list(graph.entity_ids.begin(), graph.entity_ids.end());
    auto row_of = [&id_list](int id) {
        auto it = std::lower_bound(id_list.begin(), id_list.end(), id);
        return static_cast<int>(it - id_list.begin());
    };

    NeighborhoodSubgraph sub;
    sub.center = center;
    if (nbrs.empty()) {
        sub.neighbor_embeddings.resize(0, embeddings.cols());
        sub.sample_probs.resize(0);
        return sub;
    }

    Mat nbr_embs(static_cast<Eigen::Index>(nbrs.size()), embeddings.cols());
    for (size_t i = 0; i < nbrs.size(); ++i) nbr_embs.row(static_cast<Eigen::Index>(i)) = embeddings.row(row_of(nbrs[i]));
    Vec probs = neighbor_sampling_probs(embeddings.row(row_of(center)), nbr_embs, w_s);

    detail::SampledIndices picked;
    if (static_cast<int>(nbrs.size()) <= k) {
        picked.picked.resize(nbrs.size());
        std::iota(picked.picked.begin(), picked.picked.end(), 0);
        picked.probs = probs;
    } else if (mode == SamplingMode::kDeterministic) {
        picked = detail::pick_top_k(probs, nbrs, k);
    } else {
        Rng rng(rng_seed);
        picked = detail::pick_weighted_without_replacement(probs, k, rng);
    }

    for (int pos : picked.picked) sub.neighbor_ids.push_back(nbrs[static_cast<size_t>(pos)]);
    sub.neighbor_embeddings.resize(static_cast<Eigen::Index>(picked.picked.size()), embeddings.cols());
    for (size_t i = 0; i < picked.picked.size(); ++i)
        sub.neighbor_embeddings.row(static_cast<Eigen::Index>(i)) = nbr_embs.row(picked.picked[i]);
    sub.sample_probs = picked.probs;
    return sub;
}

// Uniform K-subset baseline. sample_probs are the uniform weights 1/|N|.
inline NeighborhoodSubgraph random_sample_neighborhood(int center, const KnowledgeGraph& graph, int k,
                                                       uint64_t rng_seed) {
    if (k < 1) throw InvalidInputError("random_sample_neighborhood: K must be >= 1");
    const std::vector<int>& nbrs = graph.neighbors(center);
    NeighborhoodSubgraph sub;
    sub.center = center;
    if (nbrs.empty()) {
        sub.sample_probs.resize(0);
        return sub;
    }
    std::vector<int> pool = nbrs;
    if (static_cast<int>(pool.size()) > k) {
        Rng rng(rng_seed);
        for (int i = 0; i < k; ++i) {
            size_t j = i + static_cast<size_t>(rng.below(pool.size() - static_cast<size_t>(i)));
            std::swap(pool[static_cast<size_t>(i)], pool[j]);
        }
        pool.resize(static_cast<size_t>(k));
    }
    sub.neighbor_ids = pool;
    sub.sample_probs = Vec::Constant(static_cast<Eigen::Index>(pool.size()),
                                     1.0 / static_cast<double>(nbrs.size()));
    return sub;
}

// Row-space variant used by training and evaluation: neighbors are node
// rows of the merged graph and embeddings index those rows directly.
// Row order is ascending entity id within a side, so row tie-breaking
// matches id tie-breaking.
struct SampledRows {
    std::vector<int> rows;
    Vec probs;
};

inline SampledRows sample_neighbor_rows(int center_row, const std::vector<int>& nbr_rows, const Mat& h,
                                        const Mat& w_s, int k, SamplingMode mode, uint64_t rng_seed) {
    SampledRows out;
    if (nbr_rows.empty()) {
        out.probs.resize(0);
        return out;
    }
    Mat nbr_embs(static_cast<Eigen::Index>(nbr_rows.size()), h.cols());
    for (size_t i = 0; i < nbr_rows.size(); ++i)
        nbr_embs.row(static_cast<Eigen::Index>(i)) = h.row(nbr_rows[i]);
    Vec probs = neighbor_sampling_probs(h.row(center_row), nbr_embs, w_s);

    detail::SampledIndices picked;
    if (static_cast<int>(nbr_rows.size()) <= k) {
        picked.picked.resize(nbr_rows.size());
        std::iota(picked.picked.begin(), picked.picked.end(), 0);
        picked.probs = probs;
    } else if (mode == SamplingMode::kDeterministic) {
        picked = detail::pick_top_k(probs, nbr_rows, k);
    } else {
        Rng rng(rng_seed);
        picked = detail::pick_weighted_without_replacement(probs, k, rng);
    }
    for (int pos : picked.picked) out.rows.push_back(nbr_rows[static_cast<size_t>(pos)]);
    out.probs = picked.probs;
    return out;
}

inline SampledRows random_neighbor_rows(const std::vector<int>& nbr_rows, int k, uint64_t rng_seed) {
    SampledRows out;
    if (nbr_rows.empty()) {
        out.probs.resize(0);
        return out;
    }
    std::vector<int> pool = nbr_rows;
    if (static_cast<int>(pool.size()) > k) {
        Rng rng(rng_seed);
        for (int i = 0; i < k; ++i) {
            size_t j = i + static_cast<size_t>(rng.below(pool.size() - static_cast<size_t>(i)));
            std::swap(pool[static_cast<size_t>(i)], pool[j]);
        }
        pool.resize(static_cast<size_t>(k));
    }
    out.rows = pool;
    out.probs = Vec::Constant(static_cast<Eigen::Index>(pool.size()),
                              1.0 / static_cast<double>(nbr_rows.size()));
    return out;
}

// The t counterparts with smallest L1 distance to source_emb, ascending,
// ties to the smaller id. Deterministic.
inline CandidateSet select_candidates(const Eigen::RowVectorXd& source_emb, const Mat& other_embeddings,
                                      const std::vector<int>& other_ids, int t) {
    if (t < 1) throw InvalidInputError("select_candidates: t must be >= 1");
    if (other_ids.empty() || other_embeddings.rows() == 0)
        throw InvalidInputError("select_candidates: other KG is empty");
    if (static_cast<size_t>(other_embeddings.rows()) != other_ids.size())
        throw DimensionError("select_candidates: ids and embedding rows differ");

    Vec dists = (other_embeddings.rowwise() - source_emb).cwiseAbs().rowwise().sum();
    std::vector<int> order(other_ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (dists(a) != dists(b)) return dists(a) < dists(b);
        return other_ids[static_cast<size_t>(a)] < other_ids[static_cast<size_t>(b)];
    });

    CandidateSet cs;
    int take = std::min<int>(t, static_cast<int>(other_ids.size()));
    cs.distances.resize(take);
    for (int i = 0; i < take; ++i) {
        cs.candidates.push_back(other_ids[static_cast<size_t>(order[static_cast<size_t>(i)])]);
        cs.distances(i) = dists(order[static_cast<size_t>(i)]);
    }
    return cs;
}

}  // namespace kgalign
