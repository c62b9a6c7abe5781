#pragma once
// Two-phase training.
//
// Phase 1 pre-trains the encoder on a margin loss over L1 embedding
// distances, with negatives from nearest-neighbor corruption, until
// validation Hits@1 stops improving. Phase 2 switches to the matching
// objective: the same hinge, but distances are L1 between matching-
// oriented representations, and negatives come from the candidate sets of
// each seed pair. Every ws_interval phase-2 epochs one tuning round (5
// SGD steps) updates the sampler weight W_s alone, using the soft
// aggregation over full neighborhoods, which is differentiable in W_s
// through the sampling probabilities.
//
// Optimizer is plain SGD. One batch covers batch_size seed pairs; the
// parameter step is applied once per batch, serially, so runs with a
// fixed seed are bitwise reproducible.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgalign/checkpoint.hpp"
#include "kgalign/common.hpp"
#include "kgalign/encoder.hpp"
#include "kgalign/kg.hpp"
#include "kgalign/matching.hpp"
#include "kgalign/neighborhood.hpp"
#include "kgalign/tape.hpp"

namespace kgalign {

struct TrainConfig {
    double gamma = 1.0;
    double lr = 0.001;
    int k = 5;
    int t = 20;
    int ws_interval = 50;
    int pretrain_patience = 20;
    int max_epochs = 200;
    int negatives_per_positive = 5;
    int negative_refresh_epochs = 10;
    int batch_size = 16;
    uint64_t seed = 42;

    void validate() const {
        if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
        if (!(lr > 0.0)) throw ConfigError("lr must be positive");
        if (ws_interval < 1) throw ConfigError("ws_interval must be >= 1");
        if (k < 1 || t < 1 || batch_size < 1) throw ConfigError("k, t, batch_size must be >= 1");
        if (pretrain_patience < 1 || negative_refresh_epochs < 1 || negatives_per_positive < 1)
            throw ConfigError("patience, refresh cadence and negative count must be >= 1");
        if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
    }
};

// Flat key=value config file; keys are exactly the TrainConfig field names.
inline TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    TrainConfig cfg;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        try {
            if (key == "gamma") cfg.gamma = std::stod(val);
            else if (key == "lr") cfg.lr = std::stod(val);
            else if (key == "k") cfg.k = std::stoi(val);
            else if (key == "t") cfg.t = std::stoi(val);
            else if (key == "ws_interval") cfg.ws_interval = std::stoi(val);
            else if (key == "pretrain_patience") cfg.pretrain_patience = std::stoi(val);
            else if (key == "max_epochs") cfg.max_epochs = std::stoi(val);
            else if (key == "negatives_per_positive") cfg.negatives_per_positive = std::stoi(val);
            else if (key == "negative_refresh_epochs") cfg.negative_refresh_epochs = std::stoi(val);
            else if (key == "batch_size") cfg.batch_size = std::stoi(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": bad value for " + key);
        } catch (const std::out_of_range&) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": bad value for " + key);
        }
    }
    cfg.validate();
    return cfg;
}

struct ModelParams {
    EncoderParams encoder;
    SamplerParams sampler;
    MatchParams match;

    void validate() const {
        encoder.validate();
        sampler.validate();
        match.validate();
    }
};

inline ModelParams init_model(int dim, int layers, int rep_dim, double beta, uint64_t seed) {
    ModelParams m;
    m.encoder = EncoderParams::init(dim, layers, derive_seed(seed, seed_tag::kInit));
    m.sampler = SamplerParams::init(dim, derive_seed(seed, seed_tag::kInit + 1));
    m.match = MatchParams::init(dim, rep_dim, beta, derive_seed(seed, seed_tag::kInit + 2));
    return m;
}

enum class SamplerKind { kLearned, kRandom };

// Behavioral switches carried alongside the numeric parameters in the
// checkpoint so evaluation reproduces the trained variant.
struct ModelMeta {
    int sample_k = 5;
    SamplerKind sampler_kind = SamplerKind::kLearned;
    bool matching_enabled = true;
};

inline CheckpointEntries model_to_entries(const ModelParams& m, const ModelMeta& meta) {
    CheckpointEntries e;
    for (int l = 0; l < m.encoder.num_layers(); ++l) {
        e["gcn_w_" + std::to_string(l)] = m.encoder.gcn_weights[static_cast<size_t>(l)];
        e["hw_t_" + std::to_string(l)] = m.encoder.highway_gate_weights[static_cast<size_t>(l)];
        e["hw_b_" + std::to_string(l)] = m.encoder.highway_gate_bias[static_cast<size_t>(l)];
    }
    e["w_s"] = m.sampler.w_s;
    e["w_gate"] = m.match.w_gate;
    e["w_n"] = m.match.w_n;
    e["beta"] = Mat::Constant(1, 1, m.match.beta);
    e["sample_k"] = Mat::Constant(1, 1, static_cast<double>(meta.sample_k));
    e["sampler_kind"] = Mat::Constant(1, 1, meta.sampler_kind == SamplerKind::kRandom ? 1.0 : 0.0);
    e["matching_enabled"] = Mat::Constant(1, 1, meta.matching_enabled ? 1.0 : 0.0);
    return e;
}

inline std::pair<ModelParams, ModelMeta> model_from_entries(const CheckpointEntries& e) {
    auto get = [&e](const std::string& name) -> const Mat& {
        auto it = e.find(name);
        if (it == e.end()) throw IntegrityError("checkpoint missing entry '" + name + "'");
        return it->second;
    };
    ModelParams m;
    for (int l = 0;; ++l) {
        std::string key = "gcn_w_" + std::to_string(l);
        if (!e.count(key)) break;
        m.encoder.gcn_weights.push_back(get(key));
        m.encoder.highway_gate_weights.push_back(get("hw_t_" + std::to_string(l)));
        m.encoder.highway_gate_bias.push_back(Vec(get("hw_b_" + std::to_string(l))));
    }
    if (m.encoder.gcn_weights.empty()) throw IntegrityError("checkpoint has no encoder layers");
    m.sampler.w_s = get("w_s");
    m.match.w_gate = get("w_gate");
    m.match.w_n = get("w_n");
    m.match.beta = get("beta")(0, 0);
    ModelMeta meta;
    meta.sample_k = static_cast<int>(get("sample_k")(0, 0));
    meta.sampler_kind = get("sampler_kind")(0, 0) != 0.0 ? SamplerKind::kRandom : SamplerKind::kLearned;
    meta.matching_enabled = get("matching_enabled")(0, 0) != 0.0;
    m.validate();
    return {m, meta};
}

// Everything a training or evaluation run needs about one dataset.
struct AlignmentTask {
    KnowledgeGraph g1, g2;
    MergedGraph merged;
    SeedAlignments seeds;
};

inline AlignmentTask make_task(KnowledgeGraph g1, KnowledgeGraph g2, const Mat& features1,
                               const Mat& features2, std::vector<std::pair<int, int>> ref_pairs,
                               double split_fraction, uint64_t seed) {
    AlignmentTask task;
    task.merged = merge_graphs(g1, g2, features1, features2);
    task.g1 = std::move(g1);
    task.g2 = std::move(g2);
    task.seeds =
        split_reference_pairs(std::move(ref_pairs), split_fraction, derive_seed(seed, seed_tag::kSplit));
    return task;
}

// ---- losses ----

// L1 distance between two embeddings.
inline double pretrain_distance(const Vec& h1, const Vec& h2) {
    if (h1.size() != h2.size()) throw DimensionError("pretrain_distance: lengths differ");
    return (h1 - h2).cwiseAbs().sum();
}

// Hinge over the full cross product of positive and negative pairs:
// sum_pos sum_neg max(0, d(pos) - d(neg) + gamma). Pairs are (g1 id, g2 id).
inline double pretrain_loss(const std::vector<std::pair<int, int>>& positives,
                            const std::vector<std::pair<int, int>>& negatives, const Mat& h,
                            const MergedGraph& merged, double gamma) {
    if (positives.empty()) throw InvalidInputError("pretrain_loss: positive set is empty");
    auto dist = [&](const std::pair<int, int>& p) {
        return (h.row(merged.row(1, p.first)) - h.row(merged.row(2, p.second))).cwiseAbs().sum();
    };
    std::vector<double> dn;
    dn.reserve(negatives.size());
    for (const auto& n : negatives) dn.push_back(dist(n));
    double loss = 0.0;
    for (const auto& p : positives) {
        double dp = dist(p);
        for (double d : dn) loss += std::max(0.0, dp - d + gamma);
    }
    return loss;
}

// For each positive (i, j): the n_neg entities of G2 nearest to h_i
// (excluding j) paired on the right, and the n_neg entities of G1 nearest
// to h_j (excluding i) paired on the left. Ties break to the smaller id.
inline std::vector<std::pair<int, int>> nearest_neighbor_negatives(
    const std::vector<std::pair<int, int>>& positives, const Mat& h, const MergedGraph& merged,
    int n_neg) {
    if (n_neg < 1) throw InvalidInputError("nearest_neighbor_negatives: n_neg must be >= 1");
    std::vector<std::pair<int, int>> out;
    auto nearest = [&](int from_row, const std::vector<int>& pool_ids, int pool_row0, int exclude_id,
                       int count) {
        std::vector<std::pair<double, int>> scored;
        scored.reserve(pool_ids.size());
        for (size_t i = 0; i < pool_ids.size(); ++i) {
            if (pool_ids[i] == exclude_id) continue;
            double d = (h.row(from_row) - h.row(pool_row0 + static_cast<int>(i))).cwiseAbs().sum();
            scored.emplace_back(d, pool_ids[i]);
        }
        int take = std::min<int>(count, static_cast<int>(scored.size()));
        std::partial_sort(scored.begin(), scored.begin() + take, scored.end());
        scored.resize(static_cast<size_t>(take));
        return scored;
    };
    for (const auto& [i, j] : positives) {
        for (const auto& [d, id2] : nearest(merged.row(1, i), merged.g2_ids, merged.n1(), j,
                                            n_neg))
            out.emplace_back(i, id2);
        for (const auto& [d, id1] : nearest(merged.row(2, j), merged.g1_ids, 0, i, n_neg))
            out.emplace_back(id1, j);
    }
    return out;
}

// Candidate sets for both directions, keyed by entity id.
struct CandidateTable {
    std::map<int, CandidateSet> for_g1;  // g1 id -> candidates in g2
    std::map<int, CandidateSet> for_g2;  // g2 id -> candidates in g1
};

inline CandidateTable build_candidate_table(const std::vector<std::pair<int, int>>& positives,
                                            const Mat& h, const MergedGraph& merged, int t) {
    CandidateTable table;
    Mat h1 = h.topRows(merged.n1());
    Mat h2 = h.bottomRows(merged.n2());
    for (const auto& [r, tt] : positives) {
        if (!table.for_g1.count(r)) {
            CandidateSet cs = select_candidates(h.row(merged.row(1, r)), h2, merged.g2_ids, t);
            cs.source = r;
            table.for_g1.emplace(r, std::move(cs));
        }
        if (!table.for_g2.count(tt)) {
            CandidateSet cs = select_candidates(h.row(merged.row(2, tt)), h1, merged.g1_ids, t);
            cs.source = tt;
            table.for_g2.emplace(tt, std::move(cs));
        }
    }
    return table;
}

// Plain (non-differentiable) representation builder shared by the public
// losses and by evaluation.
inline Vec representation_for_rows(const Mat& h, const std::vector<int>& own_rows,
                                   const std::vector<int>& other_rows, int center_row,
                                   const MatchParams& params, bool matching_enabled = true) {
    if (!matching_enabled) {
        Vec g = Vec::Zero(h.cols());
        if (!own_rows.empty()) {
            for (int r : own_rows) g += h.row(r).transpose();
            g /= static_cast<double>(own_rows.size());
        }
        return match_representation(g, h.row(center_row).transpose());
    }
    Vec g;
    if (own_rows.empty()) {
        g = Vec::Zero(params.rep_dim());
    } else {
        Mat own(static_cast<Eigen::Index>(own_rows.size()), h.cols());
        for (size_t i = 0; i < own_rows.size(); ++i) own.row(static_cast<Eigen::Index>(i)) = h.row(own_rows[i]);
        Mat match_vecs;
        if (other_rows.empty()) {
            match_vecs = Mat::Zero(own.rows(), own.cols());
        } else {
            Mat other(static_cast<Eigen::Index>(other_rows.size()), h.cols());
            for (size_t i = 0; i < other_rows.size(); ++i)
                other.row(static_cast<Eigen::Index>(i)) = h.row(other_rows[i]);
            match_vecs = detail::matching_vectors(own, other, detail::cross_attention(own, other));
        }
        g = aggregate_neighborhood(augment_all(own, match_vecs, params.beta), params);
    }
    return match_representation(g, h.row(center_row).transpose());
}

// Per-entity sampled neighbor rows, recomputed from the embeddings at the
// top of each epoch.
class SubgraphCache {
public:
    SubgraphCache(const MergedGraph& merged, const Mat& h, const SamplerParams& sampler, int k,
                  SamplerKind kind, uint64_t epoch_seed)
        : merged_(merged), h_(h), sampler_(sampler), k_(k), kind_(kind), epoch_seed_(epoch_seed) {}

    const std::vector<int>& rows_for(int node_row) {
        auto it = cache_.find(node_row);
        if (it != cache_.end()) return it->second;
        const std::vector<int>& nbrs = merged_.row_neighbors[static_cast<size_t>(node_row)];
        SampledRows sampled;
        if (kind_ == SamplerKind::kLearned) {
            sampled = sample_neighbor_rows(node_row, nbrs, h_, sampler_.w_s, k_,
                                           SamplingMode::kDeterministic, 0);
        } else {
            sampled = random_neighbor_rows(nbrs, k_,
                                           derive_seed(epoch_seed_, static_cast<uint64_t>(node_row)));
        }
        return cache_.emplace(node_row, std::move(sampled.rows)).first->second;
    }

private:
    const MergedGraph& merged_;
    const Mat& h_;
    const SamplerParams& sampler_;
    int k_;
    SamplerKind kind_;
    uint64_t epoch_seed_;
    std::unordered_map<int, std::vector<int>> cache_;
};

// The main matching objective: hinge over seed pairs against candidate
// negatives, with distances taken between matching-oriented
// representations built per pair (sample -> cross-match -> augment ->
// aggregate -> concatenate). The gold counterpart is excluded from the
// candidate set when it is used as negatives.
inline double main_loss(const std::vector<std::pair<int, int>>& positives, const ModelParams& model,
                        const AlignmentTask& task, const CandidateTable& candidates, double gamma,
                        int sample_k, bool matching_enabled = true) {
    if (positives.empty()) throw InvalidInputError("main_loss: positive set is empty");
    const MergedGraph& merged = task.merged;
    Mat h = encode(merged, model.encoder);
    SubgraphCache subs(merged, h, model.sampler, sample_k, SamplerKind::kLearned, 0);

    auto rep_distance = [&](int row_a, int row_b) {
        const std::vector<int>& ra = subs.rows_for(row_a);
        const std::vector<int>& rb = subs.rows_for(row_b);
        Vec rep_a = representation_for_rows(h, ra, rb, row_a, model.match, matching_enabled);
        Vec rep_b = representation_for_rows(h, rb, ra, row_b, model.match, matching_enabled);
        return pair_distance(rep_a, rep_b);
    };

    double loss = 0.0;
    for (const auto& [r, t] : positives) {
        auto it_r = candidates.for_g1.find(r);
        auto it_t = candidates.for_g2.find(t);
        if (it_r == candidates.for_g1.end() || it_t == candidates.for_g2.end())
            throw InvalidInputError("main_loss: missing candidate set for a positive pair");
        int row_r = merged.row(1, r);
        int row_t = merged.row(2, t);
        double d_pos = rep_distance(row_r, row_t);
        bool any_negative = false;
        for (int t2 : it_r->second.candidates) {
            if (t2 == t) continue;
            any_negative = true;
            loss += std::max(0.0, d_pos - rep_distance(row_r, merged.row(2, t2)) + gamma);
        }
        for (int r2 : it_t->second.candidates) {
            if (r2 == r) continue;
            any_negative = true;
            loss += std::max(0.0, d_pos - rep_distance(merged.row(1, r2), row_t) + gamma);
        }
        if (!any_negative) throw InvalidInputError("main_loss: empty candidate set for a positive pair");
    }
    return loss;
}

// Sampler-weight objective: sum over seed pairs of the L1 distance between
// soft-aggregated neighborhood representations over FULL neighborhoods,
// weighted by the sampling probabilities.
inline double ws_loss(const std::vector<std::pair<int, int>>& positives, const ModelParams& model,
                      const AlignmentTask& task, bool matching_enabled = true) {
    const MergedGraph& merged = task.merged;
    Mat h = encode(merged, model.encoder);

    auto soft_rep = [&](int row_own, int row_other) -> Vec {
        const std::vector<int>& own_rows = merged.row_neighbors[static_cast<size_t>(row_own)];
        const std::vector<int>& other_rows = merged.row_neighbors[static_cast<size_t>(row_other)];
        int d_out = matching_enabled ? model.match.rep_dim() : static_cast<int>(h.cols());
        if (own_rows.empty()) return Vec::Zero(d_out);
        Mat own(static_cast<Eigen::Index>(own_rows.size()), h.cols());
        for (size_t i = 0; i < own_rows.size(); ++i) own.row(static_cast<Eigen::Index>(i)) = h.row(own_rows[i]);
        Vec alphas = neighbor_sampling_probs(h.row(row_own), own, model.sampler.w_s);
        if (!matching_enabled) return own.transpose() * alphas;
        Mat match_vecs;
        if (other_rows.empty()) {
            match_vecs = Mat::Zero(own.rows(), own.cols());
        } else {
            Mat other(static_cast<Eigen::Index>(other_rows.size()), h.cols());
            for (size_t i = 0; i < other_rows.size(); ++i)
                other.row(static_cast<Eigen::Index>(i)) = h.row(other_rows[i]);
            match_vecs = detail::matching_vectors(own, other, detail::cross_attention(own, other));
        }
        return soft_aggregate(augment_all(own, match_vecs, model.match.beta), alphas, model.match);
    };

    double loss = 0.0;
    for (const auto& [r, t] : positives) {
        int row_r = merged.row(1, r);
        int row_t = merged.row(2, t);
        loss += (soft_rep(row_r, row_t) - soft_rep(row_t, row_r)).cwiseAbs().sum();
    }
    return loss;
}

// Differentiable-in-W_s evaluation of the soft-aggregation objective.
// Embeddings, matching vectors, gates and projections are constants here:
// W_s only enters through the aggregation weights.
struct WsLossResult {
    double loss = 0.0;
    Mat grad_ws;
};

inline WsLossResult ws_loss_and_grad(const std::vector<std::pair<int, int>>& positives,
                                     const ModelParams& model, const AlignmentTask& task,
                                     const Mat& h, bool matching_enabled = true) {
    const MergedGraph& merged = task.merged;
    Tape tape;
    NodeId w_s = tape.leaf(model.sampler.w_s);
    auto soft_rep = [&](int row_own, int row_other) -> NodeId {
        const std::vector<int>& own_rows = merged.row_neighbors[static_cast<size_t>(row_own)];
        const std::vector<int>& other_rows = merged.row_neighbors[static_cast<size_t>(row_other)];
        int d_out = matching_enabled ? model.match.rep_dim() : static_cast<int>(h.cols());
        if (own_rows.empty()) return tape.constant(Mat::Zero(1, d_out));
        Mat own(static_cast<Eigen::Index>(own_rows.size()), h.cols());
        for (size_t i = 0; i < own_rows.size(); ++i)
            own.row(static_cast<Eigen::Index>(i)) = h.row(own_rows[i]);
        Mat per_neighbor;  // row p = contribution of neighbor p before weighting
        if (matching_enabled) {
            Mat match_vecs;
            if (other_rows.empty()) {
                match_vecs = Mat::Zero(own.rows(), own.cols());
            } else {
                Mat other(static_cast<Eigen::Index>(other_rows.size()), h.cols());
                for (size_t i = 0; i < other_rows.size(); ++i)
                    other.row(static_cast<Eigen::Index>(i)) = h.row(other_rows[i]);
                match_vecs =
                    detail::matching_vectors(own, other, detail::cross_attention(own, other));
            }
            Mat aug = augment_all(own, match_vecs, model.match.beta);
            Mat gate = (aug * model.match.w_gate).unaryExpr([](double x) {
                return 1.0 / (1.0 + std::exp(-x));
            });
            per_neighbor = gate.cwiseProduct(aug) * model.match.w_n;
        } else {
            per_neighbor = own;
        }
        NodeId logits =
            tape.matmul_bt(tape.matmul(tape.constant(h.row(row_own)), w_s), tape.constant(own));
        NodeId alpha = tape.row_softmax(logits);  // 1 x m
        return tape.matmul(alpha, tape.constant(per_neighbor));
    };
    std::vector<NodeId> pair_losses;
    for (const auto& [r, t] : positives)
        pair_losses.push_back(
            tape.l1_distance(soft_rep(merged.row(1, r), merged.row(2, t)),
                             soft_rep(merged.row(2, t), merged.row(1, r))));
    NodeId loss = tape.sum_scalars(pair_losses);
    tape.backward(loss);
    return {tape.value(loss)(0, 0), tape.grad(w_s)};
}

// One tuning round: five SGD steps on the soft-aggregation objective.
// Touches W_s and nothing else.
inline void run_ws_tuning_round(ModelParams& model, const AlignmentTask& task,
                                const std::vector<std::pair<int, int>>& positives, double lr,
                                bool matching_enabled = true) {
    Mat h = encode(task.merged, model.encoder);
    for (int step = 0; step < 5; ++step) {
        WsLossResult r = ws_loss_and_grad(positives, model, task, h, matching_enabled);
        if (!std::isfinite(r.loss)) throw NumericError("non-finite loss in W_s tuning round");
        model.sampler.w_s -= lr * r.grad_ws;
    }
}

// ---- training loop ----

struct LogEntry {
    int epoch = 0;       // global, 1-based
    int phase = 0;       // 1 = pre-training, 2 = matching objective
    int phase_epoch = 0; // 1-based within the phase
    double loss = 0.0;
    double hits1_val = 0.0;
    bool ws_round = false;
};

inline std::string log_to_jsonl(const std::vector<LogEntry>& log) {
    std::ostringstream out;
    out.precision(17);
    for (const LogEntry& e : log) {
        out << "{\"epoch\":" << e.epoch << ",\"phase\":" << e.phase << ",\"phase_epoch\":"
            << e.phase_epoch << ",\"loss\":" << e.loss << ",\"hits1_val\":" << e.hits1_val
            << ",\"ws_round\":" << (e.ws_round ? "true" : "false") << "}\n";
    }
    return out.str();
}

struct TrainVariant {
    SamplerKind sampler_kind = SamplerKind::kLearned;
    bool matching_enabled = true;
};

struct TrainResult {
    ModelParams model;
    ModelMeta meta;
    std::vector<LogEntry> log;
};

namespace detail {

struct ParamLeaves {
    EncoderLeaves enc;
    MatchLeaves match;
};

inline void sgd_step_encoder(ModelParams& model, Tape& tape, const EncoderLeaves& lv, double lr) {
    for (size_t l = 0; l < lv.gcn_w.size(); ++l) {
        model.encoder.gcn_weights[l] -= lr * tape.grad(lv.gcn_w[l]);
        model.encoder.highway_gate_weights[l] -= lr * tape.grad(lv.gate_w[l]);
        model.encoder.highway_gate_bias[l] -= lr * tape.grad(lv.gate_b[l]).transpose();
    }
}

inline void sgd_step_match(ModelParams& model, Tape& tape, const MatchLeaves& lv, double lr) {
    model.match.w_gate -= lr * tape.grad(lv.w_gate);
    model.match.w_n -= lr * tape.grad(lv.w_n);
}

// Rank of the gold counterpart among all G2 rows by embedding L1 distance,
// competition ranking with id tie-break.
inline int embedding_rank(const Mat& h, const MergedGraph& merged, int row_src, int gold_id2) {
    int gold_row = merged.row(2, gold_id2);
    double gold_dist = (h.row(row_src) - h.row(gold_row)).cwiseAbs().sum();
    int rank = 1;
    for (int i = 0; i < merged.n2(); ++i) {
        int row = merged.n1() + i;
        if (row == gold_row) continue;
        double d = (h.row(row_src) - h.row(row)).cwiseAbs().sum();
        if (d < gold_dist || (d == gold_dist && merged.g2_ids[static_cast<size_t>(i)] < gold_id2)) ++rank;
    }
    return rank;
}

inline double validation_hits1_embedding(const Mat& h, const MergedGraph& merged,
                                         const std::vector<std::pair<int, int>>& val_pairs) {
    if (val_pairs.empty()) return 0.0;
    int hits = 0;
    for (const auto& [i, j] : val_pairs)
        if (embedding_rank(h, merged, merged.row(1, i), j) == 1) ++hits;
    return static_cast<double>(hits) / static_cast<double>(val_pairs.size());
}

// Two-stage validation: pre-screen by embedding distance, re-rank the top
// C candidates by matching distance.
inline double validation_hits1_matching(const Mat& h, const ModelParams& model,
                                        const AlignmentTask& task,
                                        const std::vector<std::pair<int, int>>& val_pairs,
                                        SubgraphCache& subs, int rescreen, bool matching_enabled) {
    if (val_pairs.empty()) return 0.0;
    const MergedGraph& merged = task.merged;
    Mat h2 = h.bottomRows(merged.n2());
    int hits = 0;
    for (const auto& [i, j] : val_pairs) {
        int row_src = merged.row(1, i);
        CandidateSet cs = select_candidates(h.row(row_src), h2, merged.g2_ids,
                                            std::min(rescreen, merged.n2()));
        bool gold_in = false;
        double best = 0.0;
        int best_id = -1;
        for (int cand : cs.candidates) {
            int row_c = merged.row(2, cand);
            const std::vector<int>& ra = subs.rows_for(row_src);
            const std::vector<int>& rb = subs.rows_for(row_c);
            Vec rep_a = representation_for_rows(h, ra, rb, row_src, model.match, matching_enabled);
            Vec rep_b = representation_for_rows(h, rb, ra, row_c, model.match, matching_enabled);
            double d = pair_distance(rep_a, rep_b);
            if (best_id < 0 || d < best || (d == best && cand < best_id)) {
                best = d;
                best_id = cand;
            }
            if (cand == j) gold_in = true;
        }
        if (gold_in && best_id == j) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(val_pairs.size());
}

}  // namespace detail

inline TrainResult run_training(const TrainConfig& cfg, const AlignmentTask& task, ModelParams model,
                                TrainVariant variant = {}) {
    cfg.validate();
    model.validate();
    TrainResult result;
    result.meta.sample_k = cfg.k;
    result.meta.sampler_kind = variant.sampler_kind;
    result.meta.matching_enabled = variant.matching_enabled;
    if (cfg.max_epochs == 0) {
        result.model = std::move(model);
        return result;
    }
    if (task.seeds.train_pairs.empty())
        throw InvalidInputError("run_training: no training seed pairs");

    const MergedGraph& merged = task.merged;

    // Hold out 10% of the training seeds as an internal validation set.
    std::vector<std::pair<int, int>> train = task.seeds.train_pairs;
    std::vector<std::pair<int, int>> val;
    {
        Rng rng(derive_seed(cfg.seed, seed_tag::kValidation));
        rng.shuffle(train);
        size_t n_val = train.size() >= 2 ? std::max<size_t>(1, train.size() / 10) : 0;
        val.assign(train.end() - static_cast<long>(n_val), train.end());
        train.resize(train.size() - n_val);
    }
    if (train.empty()) {
        train = val;  // degenerate split: train on everything, skip validation
        val.clear();
    }

    int global_epoch = 0;

    // ---- phase 1: pre-training on embedding distances ----
    std::vector<std::pair<int, int>> negatives;
    double best_val = -1.0;
    int since_best = 0;
    int phase1_epoch = 0;
    while (global_epoch < cfg.max_epochs) {
        ++global_epoch;
        ++phase1_epoch;
        if ((phase1_epoch - 1) % cfg.negative_refresh_epochs == 0) {
            Mat h = encode(merged, model.encoder);
            negatives = nearest_neighbor_negatives(train, h, merged, cfg.negatives_per_positive);
        }
        std::vector<std::pair<int, int>> order = train;
        Rng shuffle_rng(derive_seed(cfg.seed, seed_tag::kEpoch + static_cast<uint64_t>(global_epoch)));
        shuffle_rng.shuffle(order);

        std::vector<int> neg_i, neg_j;
        for (const auto& [a, b] : negatives) {
            neg_i.push_back(merged.row(1, a));
            neg_j.push_back(merged.row(2, b));
        }

        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
            size_t stop = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            Tape tape;
            EncoderLeaves enc = EncoderLeaves::insert(tape, model.encoder);
            NodeId h = encode_on_tape(tape, merged, enc);
            std::vector<int> pos_i, pos_j;
            for (size_t p = start; p < stop; ++p) {
                pos_i.push_back(merged.row(1, order[p].first));
                pos_j.push_back(merged.row(2, order[p].second));
            }
            NodeId d_pos = tape.rows_l1(h, pos_i, pos_j);
            NodeId d_neg = tape.rows_l1(h, neg_i, neg_j);
            if (!tape.value(d_pos).allFinite() || !tape.value(d_neg).allFinite())
                throw NumericError("non-finite loss in phase 1 epoch " + std::to_string(global_epoch) +
                                   ", batch starting at positive " + std::to_string(start));
            NodeId loss = tape.hinge_cross(d_pos, d_neg, cfg.gamma);
            double loss_val = tape.value(loss)(0, 0);
            epoch_loss += loss_val;
            tape.backward(loss);
            detail::sgd_step_encoder(model, tape, enc, cfg.lr);
        }

        Mat h_now = encode(merged, model.encoder);
        double hits = detail::validation_hits1_embedding(h_now, merged, val);
        result.log.push_back({global_epoch, 1, phase1_epoch, epoch_loss, hits, false});

        if (hits > best_val) {
            best_val = hits;
            since_best = 0;
        } else {
            ++since_best;
        }
        if (since_best >= cfg.pretrain_patience) break;
    }

    // ---- phase 2: matching objective with periodic W_s tuning ----
    CandidateTable candidates;
    int phase2_epoch = 0;
    while (global_epoch < cfg.max_epochs) {
        ++global_epoch;
        ++phase2_epoch;
        Mat h_epoch = encode(merged, model.encoder);
        if ((phase2_epoch - 1) % cfg.negative_refresh_epochs == 0)
            candidates = build_candidate_table(train, h_epoch, merged, cfg.t);

        SubgraphCache subs(merged, h_epoch, model.sampler, cfg.k, variant.sampler_kind,
                           derive_seed(cfg.seed, seed_tag::kSampling + static_cast<uint64_t>(global_epoch)));

        std::vector<std::pair<int, int>> order = train;
        Rng shuffle_rng(derive_seed(cfg.seed, seed_tag::kEpoch + static_cast<uint64_t>(global_epoch)));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
            size_t stop = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            Tape tape;
            detail::ParamLeaves lv{EncoderLeaves::insert(tape, model.encoder),
                                   MatchLeaves::insert(tape, model.match)};
            NodeId h = encode_on_tape(tape, merged, lv.enc);

            auto rep_dist = [&](int row_a, int row_b) -> NodeId {
                const std::vector<int>& ra = subs.rows_for(row_a);
                const std::vector<int>& rb = subs.rows_for(row_b);
                NodeId rep_a, rep_b;
                if (variant.matching_enabled) {
                    rep_a = representation_on_tape(tape, h, ra, rb, row_a, lv.match);
                    rep_b = representation_on_tape(tape, h, rb, ra, row_b, lv.match);
                } else {
                    rep_a = mean_representation_on_tape(tape, h, ra, row_a);
                    rep_b = mean_representation_on_tape(tape, h, rb, row_b);
                }
                return tape.l1_distance(rep_a, rep_b);
            };

            std::vector<NodeId> batch_losses;
            for (size_t p = start; p < stop; ++p) {
                const auto& [r, t] = order[p];
                int row_r = merged.row(1, r);
                int row_t = merged.row(2, t);
                NodeId d_pos = rep_dist(row_r, row_t);
                std::vector<NodeId> d_negs;
                for (int t2 : candidates.for_g1.at(r).candidates) {
                    if (t2 == t) continue;
                    d_negs.push_back(rep_dist(row_r, merged.row(2, t2)));
                }
                for (int r2 : candidates.for_g2.at(t).candidates) {
                    if (r2 == r) continue;
                    d_negs.push_back(rep_dist(merged.row(1, r2), row_t));
                }
                if (d_negs.empty())
                    throw InvalidInputError("run_training: empty candidate set for pair (" +
                                            std::to_string(r) + ", " + std::to_string(t) + ")");
                NodeId pos_stack = tape.stack_scalars({d_pos});
                NodeId neg_stack = tape.stack_scalars(d_negs);
                if (!tape.value(pos_stack).allFinite() || !tape.value(neg_stack).allFinite())
                    throw NumericError("non-finite loss in phase 2 epoch " +
                                       std::to_string(phase2_epoch) + ", batch starting at positive " +
                                       std::to_string(start));
                batch_losses.push_back(tape.hinge_cross(pos_stack, neg_stack, cfg.gamma));
            }
            NodeId loss = tape.sum_scalars(batch_losses);
            double loss_val = tape.value(loss)(0, 0);
            epoch_loss += loss_val;
            tape.backward(loss);
            detail::sgd_step_encoder(model, tape, lv.enc, cfg.lr);
            detail::sgd_step_match(model, tape, lv.match, cfg.lr);
        }

        bool ws_round = (phase2_epoch % cfg.ws_interval == 0) &&
                        variant.sampler_kind == SamplerKind::kLearned;
        if (ws_round) run_ws_tuning_round(model, task, train, cfg.lr, variant.matching_enabled);

        Mat h_now = encode(merged, model.encoder);
        SubgraphCache val_subs(merged, h_now, model.sampler, cfg.k, variant.sampler_kind,
                               derive_seed(cfg.seed, seed_tag::kSampling + static_cast<uint64_t>(global_epoch)));
        double hits = detail::validation_hits1_matching(h_now, model, task, val, val_subs,
                                                        std::min(cfg.t, merged.n2()),
                                                        variant.matching_enabled);
        result.log.push_back({global_epoch, 2, phase2_epoch, epoch_loss, hits, ws_round});
    }

    result.model = std::move(model);
    return result;
}

}  // namespace kgalign
