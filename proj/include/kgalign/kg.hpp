#pragma once
// Knowledge-graph domain types and the tab-separated dataset format.
//
// Dataset directory layout (UTF-8, LF newlines, tab-separated):
//   ent_ids_1 / ent_ids_2   <int id>\t<name>
//   triples_1 / triples_2   <head id>\t<relation id>\t<tail id>
//   ref_ent_ids             <id in G1>\t<id in G2>      (all gold pairs)
//   vectors.txt             <token> <float> ... <float>  (optional, one per line)
//
// Entity ids are arbitrary non-negative integers; nothing assumes they are
// dense. The merged graph assigns dense node rows (G1 entities in ascending
// id order, then G2) and keeps id->row maps for both sides.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgalign/common.hpp"

namespace kgalign {

struct Triple {
    int head;
    int relation;
    int tail;
    bool operator==(const Triple&) const = default;
};

struct KnowledgeGraph {
    std::set<int> entity_ids;
    std::map<int, std::string> entity_names;
    std::set<int> relation_ids;
    std::vector<Triple> triples;
    // Undirected one-hop adjacency: sorted, duplicate-free, never contains
    // the entity itself.
    std::map<int, std::vector<int>> neighbor_index;

    size_t num_entities() const { return entity_ids.size(); }
    size_t num_relations() const { return relation_ids.size(); }
    size_t num_triples() const { return triples.size(); }

    const std::vector<int>& neighbors(int id) const {
        auto it = neighbor_index.find(id);
        if (it == neighbor_index.end()) throw LookupError("unknown entity id " + std::to_string(id));
        return it->second;
    }

    int degree(int id) const { return static_cast<int>(neighbors(id).size()); }

    void rebuild_neighbor_index() {
        neighbor_index.clear();
        for (int id : entity_ids) neighbor_index[id];
        for (const Triple& t : triples) {
            if (t.head == t.tail) continue;
            neighbor_index[t.head].push_back(t.tail);
            neighbor_index[t.tail].push_back(t.head);
        }
        for (auto& [id, nbrs] : neighbor_index) {
            std::sort(nbrs.begin(), nbrs.end());
            nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
        }
    }

    void validate() const {
        for (const Triple& t : triples) {
            if (!entity_ids.count(t.head) || !entity_ids.count(t.tail))
                throw IntegrityError("triple references entity not in entity set");
            if (!relation_ids.count(t.relation))
                throw IntegrityError("triple references relation not in relation set");
        }
    }
};

struct SeedAlignments {
    std::vector<std::pair<int, int>> train_pairs;
    std::vector<std::pair<int, int>> test_pairs;
    double split_fraction = 0.0;
    uint64_t split_seed = 0;
};

struct MergedGraph {
    int num_nodes = 0;
    // Id shift that makes G2 entity ids unique in the merged id space:
    // merged id of a G2 entity e is e + offset.
    int offset = 0;
    // Node-row edge list: symmetric, includes one self-loop per node.
    std::vector<std::pair<int, int>> edges;
    // eps(i) = 1 + undirected degree of node i (self-loop excluded).
    Vec norm_constants;
    Mat features;
    std::vector<int> side;  // 1 or 2 per node row

    std::vector<int> g1_ids, g2_ids;  // ascending per side; row = position (+ |g1| for side 2)
    std::unordered_map<int, int> row_of_g1, row_of_g2;
    std::vector<std::vector<int>> row_neighbors;  // node-row adjacency, no self-loops
    SpMat adj_norm;                               // row-normalized adjacency with self-loops

    int row(int which_side, int entity_id) const {
        const auto& m = which_side == 1 ? row_of_g1 : row_of_g2;
        auto it = m.find(entity_id);
        if (it == m.end())
            throw LookupError("entity id " + std::to_string(entity_id) + " not in side " +
                              std::to_string(which_side));
        return it->second;
    }

    int n1() const { return static_cast<int>(g1_ids.size()); }
    int n2() const { return static_cast<int>(g2_ids.size()); }
};

namespace detail {

inline int parse_int_field(const std::string& s, const std::string& file, size_t line_no) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 0)
        throw ParseError(file + ":" + std::to_string(line_no) + ": expected non-negative integer, got '" +
                         s + "'");
    return v;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return in;
}

inline std::string chomp(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace detail

// Loads one KG side from its entity and triple files.
inline KnowledgeGraph load_kg(const std::string& ent_ids_path, const std::string& triples_path) {
    KnowledgeGraph kg;
    {
        std::ifstream in = detail::open_or_throw(ent_ids_path);
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            line = detail::chomp(line);
            if (line.empty()) continue;
            size_t tab = line.find('\t');
            if (tab == std::string::npos)
                throw ParseError(ent_ids_path + ":" + std::to_string(line_no) +
                                 ": expected <id>\\t<name>");
            int id = detail::parse_int_field(line.substr(0, tab), ent_ids_path, line_no);
            if (kg.entity_ids.count(id))
                throw IntegrityError(ent_ids_path + ":" + std::to_string(line_no) +
                                     ": duplicate entity id " + std::to_string(id));
            kg.entity_ids.insert(id);
            kg.entity_names[id] = line.substr(tab + 1);
        }
    }
    {
        std::ifstream in = detail::open_or_throw(triples_path);
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            line = detail::chomp(line);
            if (line.empty()) continue;
            std::vector<std::string> f = detail::split_tabs(line);
            if (f.size() != 3)
                throw ParseError(triples_path + ":" + std::to_string(line_no) +
                                 ": expected 3 tab-separated fields, got " + std::to_string(f.size()));
            Triple t{detail::parse_int_field(f[0], triples_path, line_no),
                     detail::parse_int_field(f[1], triples_path, line_no),
                     detail::parse_int_field(f[2], triples_path, line_no)};
            if (!kg.entity_ids.count(t.head) || !kg.entity_ids.count(t.tail))
                throw IntegrityError(triples_path + ":" + std::to_string(line_no) +
                                     ": triple references unknown entity");
            kg.relation_ids.insert(t.relation);
            kg.triples.push_back(t);
        }
    }
    kg.rebuild_neighbor_index();
    return kg;
}

inline void save_kg(const KnowledgeGraph& kg, const std::string& ent_ids_path,
                    const std::string& triples_path) {
    std::ofstream ent(ent_ids_path);
    if (!ent) throw ParseError("cannot write " + ent_ids_path);
    for (const auto& [id, name] : kg.entity_names) ent << id << '\t' << name << '\n';
    std::ofstream tri(triples_path);
    if (!tri) throw ParseError("cannot write " + triples_path);
    for (const Triple& t : kg.triples) tri << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
}

inline std::vector<std::pair<int, int>> load_ref_pairs(const std::string& path) {
    std::ifstream in = detail::open_or_throw(path);
    std::vector<std::pair<int, int>> pairs;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::chomp(line);
        if (line.empty()) continue;
        std::vector<std::string> f = detail::split_tabs(line);
        if (f.size() != 2)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 2 tab-separated fields");
        pairs.emplace_back(detail::parse_int_field(f[0], path, line_no),
                           detail::parse_int_field(f[1], path, line_no));
    }
    return pairs;
}

inline void save_ref_pairs(const std::vector<std::pair<int, int>>& pairs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    for (const auto& [a, b] : pairs) out << a << '\t' << b << '\n';
}

// Deterministic shuffle under split_seed, first floor(fraction * n) pairs
// become training seeds.
inline SeedAlignments split_reference_pairs(std::vector<std::pair<int, int>> pairs, double fraction,
                                            uint64_t split_seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw InvalidInputError("split fraction must lie in (0,1)");
    {
        std::set<int> left, right;
        for (const auto& [a, b] : pairs) {
            if (!left.insert(a).second || !right.insert(b).second)
                throw IntegrityError("reference pairs reuse an entity id on one side");
        }
    }
    Rng rng(split_seed);
    rng.shuffle(pairs);
    size_t n_train = static_cast<size_t>(fraction * static_cast<double>(pairs.size()));
    SeedAlignments seeds;
    seeds.split_fraction = fraction;
    seeds.split_seed = split_seed;
    seeds.train_pairs.assign(pairs.begin(), pairs.begin() + static_cast<long>(n_train));
    seeds.test_pairs.assign(pairs.begin() + static_cast<long>(n_train), pairs.end());
    return seeds;
}

struct WordVectors {
    std::unordered_map<std::string, int> index;
    Mat vectors;  // one row per token
    int dim = 0;
};

// One token then dim space-separated floats per line.
inline WordVectors load_word_vectors(const std::string& path) {
    std::ifstream in = detail::open_or_throw(path);
    WordVectors wv;
    std::vector<std::vector<double>> rows;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::chomp(line);
        if (line.empty()) continue;
        std::istringstream iss(line);
        std::string token;
        iss >> token;
        std::vector<double> vals;
        double x;
        while (iss >> x) vals.push_back(x);
        if (vals.empty())
            throw ParseError(path + ":" + std::to_string(line_no) + ": no vector values");
        if (wv.dim == 0) wv.dim = static_cast<int>(vals.size());
        if (static_cast<int>(vals.size()) != wv.dim)
            throw ParseError(path + ":" + std::to_string(line_no) + ": inconsistent vector width");
        if (wv.index.emplace(token, static_cast<int>(rows.size())).second) rows.push_back(std::move(vals));
    }
    wv.vectors.resize(static_cast<Eigen::Index>(rows.size()), wv.dim);
    for (size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < wv.dim; ++j) wv.vectors(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<size_t>(j)];
    return wv;
}

// Name features: lower-case, split on whitespace, average the vectors of
// in-vocabulary tokens. A name with no known token gets a zero row. Rows
// follow ascending entity id order.
inline Mat build_name_features(const std::map<int, std::string>& names, const WordVectors& wv) {
    Mat out = Mat::Zero(static_cast<Eigen::Index>(names.size()), wv.dim);
    Eigen::Index r = 0;
    for (const auto& [id, name] : names) {
        std::istringstream iss(name);
        std::string tok;
        int hits = 0;
        while (iss >> tok) {
            std::transform(tok.begin(), tok.end(), tok.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            auto it = wv.index.find(tok);
            if (it != wv.index.end()) {
                out.row(r) += wv.vectors.row(it->second);
                ++hits;
            }
        }
        if (hits > 0) out.row(r) /= static_cast<double>(hits);
        ++r;
    }
    return out;
}

// Joins two KGs into one input graph: dense node rows, undirected edges,
// one self-loop per node, mean-aggregation normalization constants
// eps(i) = degree(i) + 1.
inline MergedGraph merge_graphs(const KnowledgeGraph& g1, const KnowledgeGraph& g2,
                                const Mat& features1, const Mat& features2) {
    if (static_cast<size_t>(features1.rows()) != g1.num_entities() ||
        static_cast<size_t>(features2.rows()) != g2.num_entities())
        throw DimensionError("merge_graphs: feature row count does not match entity count");
    if (features1.cols() != features2.cols())
        throw DimensionError("merge_graphs: feature widths differ between sides");

    MergedGraph m;
    m.num_nodes = static_cast<int>(g1.num_entities() + g2.num_entities());
    m.offset = g1.entity_ids.empty() ? 0 : *g1.entity_ids.rbegin() + 1;
    m.g1_ids.assign(g1.entity_ids.begin(), g1.entity_ids.end());
    m.g2_ids.assign(g2.entity_ids.begin(), g2.entity_ids.end());
    for (size_t i = 0; i < m.g1_ids.size(); ++i) m.row_of_g1[m.g1_ids[i]] = static_cast<int>(i);
    for (size_t i = 0; i < m.g2_ids.size(); ++i)
        m.row_of_g2[m.g2_ids[i]] = static_cast<int>(m.g1_ids.size() + i);

    m.side.assign(static_cast<size_t>(m.num_nodes), 1);
    for (size_t i = m.g1_ids.size(); i < static_cast<size_t>(m.num_nodes); ++i) m.side[i] = 2;

    m.features.resize(m.num_nodes, features1.cols());
    m.features.topRows(features1.rows()) = features1;
    m.features.bottomRows(features2.rows()) = features2;

    m.row_neighbors.assign(static_cast<size_t>(m.num_nodes), {});
    auto add_side = [&m](const KnowledgeGraph& g, const std::unordered_map<int, int>& row_of) {
        for (const auto& [id, nbrs] : g.neighbor_index) {
            int r = row_of.at(id);
            for (int nb : nbrs) m.row_neighbors[static_cast<size_t>(r)].push_back(row_of.at(nb));
        }
    };
    add_side(g1, m.row_of_g1);
    add_side(g2, m.row_of_g2);
    for (auto& nbrs : m.row_neighbors) std::sort(nbrs.begin(), nbrs.end());

    m.norm_constants.resize(m.num_nodes);
    for (int i = 0; i < m.num_nodes; ++i) {
        m.edges.emplace_back(i, i);
        for (int j : m.row_neighbors[static_cast<size_t>(i)]) m.edges.emplace_back(i, j);
        m.norm_constants(i) = static_cast<double>(m.row_neighbors[static_cast<size_t>(i)].size() + 1);
    }

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(m.edges.size());
    for (const auto& [i, j] : m.edges) trips.emplace_back(i, j, 1.0 / m.norm_constants(i));
    m.adj_norm.resize(m.num_nodes, m.num_nodes);
    m.adj_norm.setFromTriplets(trips.begin(), trips.end());
    return m;
}

struct Dataset {
    KnowledgeGraph g1, g2;
    std::vector<std::pair<int, int>> ref_pairs;
    std::filesystem::path dir;
};

inline Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::path p(dir);
    Dataset d;
    d.dir = p;
    d.g1 = load_kg((p / "ent_ids_1").string(), (p / "triples_1").string());
    d.g2 = load_kg((p / "ent_ids_2").string(), (p / "triples_2").string());
    d.ref_pairs = load_ref_pairs((p / "ref_ent_ids").string());
    for (const auto& [a, b] : d.ref_pairs)
        if (!d.g1.entity_ids.count(a) || !d.g2.entity_ids.count(b))
            throw IntegrityError("ref_ent_ids references unknown entity");
    return d;
}

}  // namespace kgalign
