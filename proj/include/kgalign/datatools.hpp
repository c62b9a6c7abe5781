#pragma once
// Dataset tooling: sparse-variant generation, statistics, synthetic
// benchmark pairs, and the neighborhood-size-difference histogram.

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "kgalign/common.hpp"
#include "kgalign/kg.hpp"

namespace kgalign {

// Uniformly keeps floor(keep_fraction * |T|) triples without replacement,
// preserving input order. Entities stay even if they become isolated;
// entity and relation id sets are unchanged.
inline KnowledgeGraph sparsify(const KnowledgeGraph& kg, double keep_fraction, uint64_t seed) {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw InvalidInputError("sparsify: keep_fraction must lie in (0, 1]");
    KnowledgeGraph out = kg;
    size_t keep = static_cast<size_t>(keep_fraction * static_cast<double>(kg.triples.size()));
    if (keep < kg.triples.size()) {
        std::vector<size_t> idx(kg.triples.size());
        std::iota(idx.begin(), idx.end(), 0);
        Rng rng(seed);
        for (size_t i = 0; i < keep; ++i) {
            size_t j = i + static_cast<size_t>(rng.below(idx.size() - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(keep);
        std::sort(idx.begin(), idx.end());
        std::vector<Triple> kept;
        kept.reserve(keep);
        for (size_t i : idx) kept.push_back(kg.triples[i]);
        out.triples = std::move(kept);
        out.rebuild_neighbor_index();
    }
    return out;
}

struct DegreeDiffBucket {
    double lo = 0.0;
    double hi = 0.0;  // infinity for the last bucket
    int count = 0;
};

// Histogram of |deg(e1) - deg(e2)| over the gold pairs. Edges start at 0,
// strictly increasing; the last bucket is open-ended.
inline std::vector<DegreeDiffBucket> degree_diff_distribution(
    const KnowledgeGraph& g1, const KnowledgeGraph& g2,
    const std::vector<std::pair<int, int>>& gold_pairs, const std::vector<double>& bucket_edges) {
    if (bucket_edges.empty() || bucket_edges.front() != 0.0)
        throw InvalidInputError("degree_diff_distribution: bucket edges must start at 0");
    for (size_t i = 1; i < bucket_edges.size(); ++i)
        if (bucket_edges[i] <= bucket_edges[i - 1])
            throw InvalidInputError("degree_diff_distribution: bucket edges must be strictly increasing");

    std::vector<DegreeDiffBucket> buckets(bucket_edges.size());
    for (size_t b = 0; b < bucket_edges.size(); ++b) {
        buckets[b].lo = bucket_edges[b];
        buckets[b].hi = b + 1 < bucket_edges.size() ? bucket_edges[b + 1]
                                                    : std::numeric_limits<double>::infinity();
    }
    for (const auto& [e1, e2] : gold_pairs) {
        if (!g1.entity_ids.count(e1) || !g2.entity_ids.count(e2))
            throw IntegrityError("degree_diff_distribution: gold pair references unknown entity");
        double diff = std::abs(static_cast<double>(g1.degree(e1)) - static_cast<double>(g2.degree(e2)));
        size_t b = bucket_edges.size() - 1;
        for (size_t i = 0; i + 1 < bucket_edges.size(); ++i)
            if (diff >= bucket_edges[i] && diff < bucket_edges[i + 1]) {
                b = i;
                break;
            }
        ++buckets[b].count;
    }
    return buckets;
}

inline std::tuple<size_t, size_t, size_t> kg_stats(const KnowledgeGraph& kg) {
    return {kg.num_entities(), kg.num_relations(), kg.num_triples()};
}

struct SyntheticOptions {
    int n = 100;
    double avg_degree = 6.0;
    double drop_edges = 0.0;     // fraction of triples removed from side 2
    double feature_noise = 0.0;  // sigma of gaussian noise added to side-2 features
    int feature_dim = 300;
    // 0 = every entity gets its own feature vector. A positive count draws
    // that many cluster centers and scatters entities around them with
    // feature_jitter, producing confusable names that only structure can
    // separate.
    int feature_clusters = 0;
    double feature_jitter = 0.1;
    uint64_t seed = 0;
};

struct SyntheticPair {
    KnowledgeGraph g1, g2;
    std::vector<std::pair<int, int>> gold;
    Mat features1, features2;
};

namespace detail {

inline Eigen::RowVectorXd unit_gaussian_row(int dim, Rng& rng) {
    Eigen::RowVectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = rng.gaussian();
    double norm = v.norm();
    if (norm > 0.0) v /= norm;
    return v;
}

inline KnowledgeGraph relabel(const KnowledgeGraph& g, const std::vector<int>& perm) {
    KnowledgeGraph out;
    for (int id : g.entity_ids) {
        int nid = perm[static_cast<size_t>(id)];
        out.entity_ids.insert(nid);
        out.entity_names[nid] = "";
    }
    out.relation_ids = g.relation_ids;
    for (const Triple& t : g.triples)
        out.triples.push_back({perm[static_cast<size_t>(t.head)], t.relation,
                               perm[static_cast<size_t>(t.tail)]});
    out.rebuild_neighbor_index();
    return out;
}

}  // namespace detail

// A seeded random graph and an id-relabeled copy with optional structural
// and feature perturbations; gold pairs are the relabeling map. Side-1
// entities are named e<id>, side-2 entities f<id>.
inline SyntheticPair make_synthetic_pair(const SyntheticOptions& opt) {
    if (opt.n < 2) throw InvalidInputError("make_synthetic_pair: need at least 2 entities");
    if (opt.avg_degree < 0.0 || opt.drop_edges < 0.0 || opt.drop_edges >= 1.0 ||
        opt.feature_noise < 0.0 || opt.feature_dim < 1 || opt.feature_clusters < 0 ||
        opt.feature_jitter < 0.0)
        throw ConfigError("make_synthetic_pair: invalid perturbation parameters");

    uint64_t base = derive_seed(opt.seed, seed_tag::kSynthetic);
    SyntheticPair out;

    // Erdos-Renyi side 1 with edge probability avg_degree / (n - 1).
    {
        Rng rng(derive_seed(base, 1));
        double p = std::min(1.0, opt.avg_degree / static_cast<double>(opt.n - 1));
        for (int i = 0; i < opt.n; ++i) {
            out.g1.entity_ids.insert(i);
            out.g1.entity_names[i] = "e" + std::to_string(i);
        }
        for (int r = 0; r < 3; ++r) out.g1.relation_ids.insert(r);
        for (int i = 0; i < opt.n; ++i)
            for (int j = i + 1; j < opt.n; ++j)
                if (rng.uniform() < p) {
                    int rel = static_cast<int>(rng.below(3));
                    if (rng.uniform() < 0.5)
                        out.g1.triples.push_back({i, rel, j});
                    else
                        out.g1.triples.push_back({j, rel, i});
                }
        out.g1.rebuild_neighbor_index();
    }

    // Relabeling map and side 2.
    std::vector<int> perm(static_cast<size_t>(opt.n));
    std::iota(perm.begin(), perm.end(), 0);
    {
        Rng rng(derive_seed(base, 2));
        rng.shuffle(perm);
    }
    out.g2 = detail::relabel(out.g1, perm);
    for (int id : out.g2.entity_ids) out.g2.entity_names[id] = "f" + std::to_string(id);
    for (int i = 0; i < opt.n; ++i) out.gold.emplace_back(i, perm[static_cast<size_t>(i)]);

    if (opt.drop_edges > 0.0)
        out.g2 = sparsify(out.g2, 1.0 - opt.drop_edges, derive_seed(base, 3));

    // Features: unique rows, or clustered rows when confusable names are
    // wanted.
    {
        Rng rng(derive_seed(base, 4));
        out.features1.resize(opt.n, opt.feature_dim);
        if (opt.feature_clusters > 0) {
            Mat centers(opt.feature_clusters, opt.feature_dim);
            for (int c = 0; c < opt.feature_clusters; ++c)
                centers.row(c) = detail::unit_gaussian_row(opt.feature_dim, rng);
            for (int i = 0; i < opt.n; ++i) {
                int c = static_cast<int>(rng.below(static_cast<uint64_t>(opt.feature_clusters)));
                Eigen::RowVectorXd row =
                    centers.row(c) + opt.feature_jitter * detail::unit_gaussian_row(opt.feature_dim, rng);
                out.features1.row(i) = row / std::max(1e-12, row.norm());
            }
        } else {
            for (int i = 0; i < opt.n; ++i)
                out.features1.row(i) = detail::unit_gaussian_row(opt.feature_dim, rng);
        }
    }
    {
        Rng rng(derive_seed(base, 5));
        out.features2.resize(opt.n, opt.feature_dim);
        for (int i = 0; i < opt.n; ++i)
            out.features2.row(perm[static_cast<size_t>(i)]) = out.features1.row(i);
        if (opt.feature_noise > 0.0)
            for (int i = 0; i < opt.n; ++i)
                for (int j = 0; j < opt.feature_dim; ++j)
                    out.features2(i, j) += opt.feature_noise * rng.gaussian();
    }
    return out;
}

// Rewires a fraction of triples onto a small set of shared high-degree
// hub entities, appending matching feature rows for the hubs. Hubs are
// never part of any gold pair; applied per side with independent seeds
// they act as pure neighborhood noise.
inline std::pair<KnowledgeGraph, Mat> add_noise_hubs(const KnowledgeGraph& kg, const Mat& features,
                                                     double fraction, int num_hubs, uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0) || num_hubs < 1)
        throw ConfigError("add_noise_hubs: invalid parameters");
    KnowledgeGraph out = kg;
    int first_hub = kg.entity_ids.empty() ? 0 : *kg.entity_ids.rbegin() + 1;
    Rng rng(seed);
    Mat new_features(features.rows() + num_hubs, features.cols());
    new_features.topRows(features.rows()) = features;
    for (int hub = 0; hub < num_hubs; ++hub) {
        int id = first_hub + hub;
        out.entity_ids.insert(id);
        out.entity_names[id] = "hub" + std::to_string(id);
        new_features.row(features.rows() + hub) = detail::unit_gaussian_row(
            static_cast<int>(features.cols()), rng);
    }
    for (Triple& t : out.triples)
        if (rng.uniform() < fraction)
            t.tail = first_hub + static_cast<int>(rng.below(static_cast<uint64_t>(num_hubs)));
    out.rebuild_neighbor_index();
    return {std::move(out), std::move(new_features)};
}

}  // namespace kgalign
