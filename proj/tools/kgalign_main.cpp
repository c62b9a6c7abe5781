// Command-line entry point: training, evaluation, and dataset tooling for
// cross-graph entity alignment.
//
// Exit codes: 0 success, 1 usage error, 2 data/integrity error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "kgalign/datatools.hpp"
#include "kgalign/evaluation.hpp"
#include "kgalign/kg.hpp"
#include "kgalign/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kgalign;

namespace {

struct GlobalOpts {
    uint64_t seed = 42;
    bool seed_given = false;
    int threads = 1;
    bool float64 = true;
};

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Dataset directory + name features. Synthetic datasets ship their own
// vectors.txt; real datasets can point --vectors at an external file.
struct LoadedData {
    Dataset dataset;
    WordVectors vectors;
    Mat features1, features2;
};

LoadedData load_data(const std::string& dir, const std::string& vectors_path) {
    LoadedData d;
    d.dataset = load_dataset(dir);
    fs::path vec = vectors_path.empty() ? fs::path(dir) / "vectors.txt" : fs::path(vectors_path);
    if (!fs::exists(vec))
        throw InvalidInputError("word-vector file not found: " + vec.string() +
                                " (pass --vectors or place vectors.txt in the data directory)");
    d.vectors = load_word_vectors(vec.string());
    d.features1 = build_name_features(d.dataset.g1.entity_names, d.vectors);
    d.features2 = build_name_features(d.dataset.g2.entity_names, d.vectors);
    return d;
}

AlignmentTask task_from(LoadedData& d, double split_fraction, uint64_t seed) {
    return make_task(std::move(d.dataset.g1), std::move(d.dataset.g2), d.features1, d.features2,
                     std::move(d.dataset.ref_pairs), split_fraction, seed);
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stoi(item));
    }
    if (out.empty()) throw InvalidInputError("empty list: '" + csv + "'");
    return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw InvalidInputError("empty list: '" + csv + "'");
    return out;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path);
    out << content;
}

// ---- train ----

struct TrainArgs {
    std::string config, data, out, log, vectors;
    double beta = 0.1;
    int rep_dim = 50;
    int layers = 2;
    double split_fraction = 0.3;
    std::string sampling = "learned";
    bool no_matching = false;
};

int cmd_train(const TrainArgs& a, const GlobalOpts& g) {
    TrainConfig cfg = load_train_config(a.config);
    if (g.seed_given) cfg.seed = g.seed;

    LoadedData data = load_data(a.data, a.vectors);
    AlignmentTask task = task_from(data, a.split_fraction, cfg.seed);

    int dim = static_cast<int>(task.merged.features.cols());
    ModelParams model = init_model(dim, a.layers, a.rep_dim, a.beta, cfg.seed);

    TrainVariant variant;
    variant.sampler_kind = a.sampling == "random" ? SamplerKind::kRandom : SamplerKind::kLearned;
    variant.matching_enabled = !a.no_matching;

    TrainResult result = run_training(cfg, task, std::move(model), variant);

    save_checkpoint(a.out, model_to_entries(result.model, result.meta));
    std::string log_path = a.log.empty() ? a.out + ".log.jsonl" : a.log;
    write_text(log_path, log_to_jsonl(result.log));

    std::cerr << "trained " << result.log.size() << " epochs; checkpoint " << a.out << ", log "
              << log_path << "\n";
    return 0;
}

// ---- evaluate ----

struct EvalArgs {
    std::string checkpoint, data, vectors, out, ranks_csv;
    std::string k_list = "1,10";
    std::string buckets = "0,10,20,30";
    int rescreen = 500;
    double split_fraction = 0.3;
};

int cmd_evaluate(const EvalArgs& a, const GlobalOpts& g) {
    auto [model, meta] = model_from_entries(load_checkpoint(a.checkpoint));
    LoadedData data = load_data(a.data, a.vectors);
    KnowledgeGraph g1_copy = data.dataset.g1;  // degree lookups for buckets
    KnowledgeGraph g2_copy = data.dataset.g2;
    AlignmentTask task = task_from(data, a.split_fraction, g.seed);

    std::vector<int> ks = parse_int_list(a.k_list);
    std::vector<double> bucket_edges = parse_double_list(a.buckets);

    AlignmentRanking ranking =
        evaluate_all(model, meta, task, std::min(a.rescreen, task.merged.n2()), g.threads, g.seed);

    json report;
    for (int k : ks)
        report["hits"][std::to_string(k)] = hits_at_k(ranking, task.seeds.test_pairs, k);
    auto stats = bucketed_hits(ranking, task.seeds.test_pairs, g1_copy, g2_copy, bucket_edges);
    report["buckets"] = json::array();
    for (const auto& b : stats) {
        json jb;
        jb["lo"] = b.lo;
        jb["hi"] = std::isinf(b.hi) ? json(nullptr) : json(b.hi);
        jb["count"] = b.count;
        jb["hits1"] = b.hits1 ? json(*b.hits1) : json(nullptr);
        report["buckets"].push_back(jb);
    }
    report["test_pairs"] = task.seeds.test_pairs.size();
    report["rescreen_width"] = ranking.rescreen_width;

    std::string text = report.dump(2) + "\n";
    if (a.out.empty())
        std::cout << text;
    else
        write_text(a.out, text);

    if (!a.ranks_csv.empty()) {
        std::ostringstream csv;
        csv << "entity_id,gold_id,rank\n";
        for (const auto& [src, gold] : task.seeds.test_pairs) {
            const auto& ids = ranking.by_source.at(src).ids;
            size_t rank = 0;
            for (size_t p = 0; p < ids.size(); ++p)
                if (ids[p] == gold) {
                    rank = p + 1;
                    break;
                }
            csv << src << ',' << gold << ',' << rank << '\n';
        }
        write_text(a.ranks_csv, csv.str());
    }
    return 0;
}

// ---- sparsify ----

struct SparsifyArgs {
    std::string in, out;
    double keep = 0.26;
    int side = 1;
};

int cmd_sparsify(const SparsifyArgs& a, const GlobalOpts& g) {
    Dataset d = load_dataset(a.in);
    KnowledgeGraph& target = a.side == 1 ? d.g1 : d.g2;
    target = sparsify(target, a.keep, g.seed);

    fs::create_directories(a.out);
    save_kg(d.g1, (fs::path(a.out) / "ent_ids_1").string(),
            (fs::path(a.out) / "triples_1").string());
    save_kg(d.g2, (fs::path(a.out) / "ent_ids_2").string(),
            (fs::path(a.out) / "triples_2").string());
    save_ref_pairs(d.ref_pairs, (fs::path(a.out) / "ref_ent_ids").string());
    if (fs::exists(fs::path(a.in) / "vectors.txt"))
        fs::copy_file(fs::path(a.in) / "vectors.txt", fs::path(a.out) / "vectors.txt",
                      fs::copy_options::overwrite_existing);
    std::cerr << "kept " << target.num_triples() << " triples on side " << a.side << "\n";
    return 0;
}

// ---- stats ----

int cmd_stats(const std::string& in) {
    Dataset d = load_dataset(in);
    json out;
    auto fill = [](const KnowledgeGraph& kg) {
        auto [e, r, t] = kg_stats(kg);
        return json{{"entities", e}, {"relations", r}, {"triples", t}};
    };
    out["side1"] = fill(d.g1);
    out["side2"] = fill(d.g2);
    out["ref_pairs"] = d.ref_pairs.size();
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ---- degree-diff ----

int cmd_degree_diff(const std::string& in, const std::string& buckets, const std::string& out) {
    Dataset d = load_dataset(in);
    auto hist = degree_diff_distribution(d.g1, d.g2, d.ref_pairs, parse_double_list(buckets));
    std::ostringstream csv;
    csv << "bucket_lo,bucket_hi,count\n";
    for (const auto& b : hist) {
        csv << b.lo << ',';
        if (std::isinf(b.hi))
            csv << "inf";
        else
            csv << b.hi;
        csv << ',' << b.count << '\n';
    }
    if (out.empty())
        std::cout << csv.str();
    else
        write_text(out, csv.str());
    return 0;
}

// ---- dump-attention ----

struct AttentionArgs {
    std::string checkpoint, data, vectors, out;
    std::vector<int> pair;
    double split_fraction = 0.3;
};

int cmd_dump_attention(const AttentionArgs& a, const GlobalOpts& g) {
    auto [model, meta] = model_from_entries(load_checkpoint(a.checkpoint));
    LoadedData data = load_data(a.data, a.vectors);
    KnowledgeGraph g1_copy = data.dataset.g1;
    KnowledgeGraph g2_copy = data.dataset.g2;
    AlignmentTask task = task_from(data, a.split_fraction, g.seed);
    const MergedGraph& m = task.merged;

    int row_l = m.row(1, a.pair[0]);
    int row_r = m.row(2, a.pair[1]);
    Mat h = encode(m, model.encoder);

    auto rows_of = [&](int row) {
        const auto& nbrs = m.row_neighbors[static_cast<size_t>(row)];
        if (meta.sampler_kind == SamplerKind::kRandom)
            return random_neighbor_rows(nbrs, meta.sample_k,
                                        derive_seed(g.seed, static_cast<uint64_t>(row)))
                .rows;
        return sample_neighbor_rows(row, nbrs, h, model.sampler.w_s, meta.sample_k,
                                    SamplingMode::kDeterministic, 0)
            .rows;
    };
    std::vector<int> left_rows = rows_of(row_l);
    std::vector<int> right_rows = rows_of(row_r);
    if (left_rows.empty() || right_rows.empty())
        throw InvalidInputError("dump-attention: a side has no sampled neighbors");

    auto gather = [&h](const std::vector<int>& rows) {
        Mat out(static_cast<Eigen::Index>(rows.size()), h.cols());
        for (size_t i = 0; i < rows.size(); ++i)
            out.row(static_cast<Eigen::Index>(i)) = h.row(rows[i]);
        return out;
    };
    Mat attn = kgalign::detail::cross_attention(gather(left_rows), gather(right_rows));

    auto name_of = [&](int row) {
        if (m.side[static_cast<size_t>(row)] == 1)
            return g1_copy.entity_names.at(m.g1_ids[static_cast<size_t>(row)]);
        return g2_copy.entity_names.at(m.g2_ids[static_cast<size_t>(row - m.n1())]);
    };
    std::ostringstream csv;
    csv << "left_neighbor_name,right_neighbor_name,a_pq\n";
    for (size_t p = 0; p < left_rows.size(); ++p)
        for (size_t q = 0; q < right_rows.size(); ++q)
            csv << csv_quote(name_of(left_rows[p])) << ',' << csv_quote(name_of(right_rows[q]))
                << ',' << format_double(attn(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)))
                << '\n';
    if (a.out.empty())
        std::cout << csv.str();
    else
        write_text(a.out, csv.str());
    return 0;
}

// ---- compare-sampling ----

struct CompareArgs {
    std::string checkpoint, data, vectors, out;
    std::string k_values = "3,5";
    int rescreen = 500;
    double split_fraction = 0.3;
};

int cmd_compare_sampling(const CompareArgs& a, const GlobalOpts& g) {
    auto [model, meta] = model_from_entries(load_checkpoint(a.checkpoint));
    LoadedData data = load_data(a.data, a.vectors);
    AlignmentTask task = task_from(data, a.split_fraction, g.seed);

    std::vector<int> ks = parse_int_list(a.k_values);
    std::ostringstream csv;
    csv << "entity_id,mode,K,hits1_contribution\n";
    for (int k : ks) {
        for (const char* mode : {"learned", "random"}) {
            ModelMeta run_meta = meta;
            run_meta.sample_k = k;
            run_meta.sampler_kind =
                std::string(mode) == "random" ? SamplerKind::kRandom : SamplerKind::kLearned;
            AlignmentRanking ranking = evaluate_all(
                model, run_meta, task, std::min(a.rescreen, task.merged.n2()), g.threads, g.seed);
            for (const auto& [src, gold] : task.seeds.test_pairs) {
                const auto& ids = ranking.by_source.at(src).ids;
                int hit = (!ids.empty() && ids[0] == gold) ? 1 : 0;
                csv << src << ',' << mode << ',' << k << ',' << hit << '\n';
            }
        }
    }
    if (a.out.empty())
        std::cout << csv.str();
    else
        write_text(a.out, csv.str());
    return 0;
}

// ---- make-synth ----

struct SynthArgs {
    std::string out;
    int n = 200;
    double avg_degree = 6.0;
    std::string perturb = "none";
    double p = 0.0;
    double sigma = 0.0;
    int dim = 300;
    int clusters = 0;
    double jitter = 0.1;
    double hub_fraction = 0.0;
    int num_hubs = 5;
};

int cmd_make_synth(const SynthArgs& a, const GlobalOpts& g) {
    SyntheticOptions opt;
    opt.n = a.n;
    opt.avg_degree = a.avg_degree;
    opt.feature_dim = a.dim;
    opt.feature_clusters = a.clusters;
    opt.feature_jitter = a.jitter;
    opt.seed = g.seed;
    if (a.perturb == "drop_edges")
        opt.drop_edges = a.p;
    else if (a.perturb == "noise")
        opt.feature_noise = a.sigma;
    else if (a.perturb != "none")
        throw ConfigError("unknown perturbation '" + a.perturb + "'");
    // Feature noise combines with any perturbation when passed explicitly.
    if (a.sigma > 0.0) opt.feature_noise = a.sigma;

    SyntheticPair sp = make_synthetic_pair(opt);
    Mat f1 = sp.features1, f2 = sp.features2;
    if (a.hub_fraction > 0.0) {
        std::tie(sp.g1, f1) = add_noise_hubs(sp.g1, f1, a.hub_fraction, a.num_hubs,
                                             derive_seed(g.seed, 1001));
        std::tie(sp.g2, f2) = add_noise_hubs(sp.g2, f2, a.hub_fraction, a.num_hubs,
                                             derive_seed(g.seed, 1002));
    }
    // One unique token per entity so the name features reload exactly.
    for (auto& [id, name] : sp.g1.entity_names) name = "e" + std::to_string(id);
    for (auto& [id, name] : sp.g2.entity_names) name = "f" + std::to_string(id);

    fs::create_directories(a.out);
    fs::path dir(a.out);
    save_kg(sp.g1, (dir / "ent_ids_1").string(), (dir / "triples_1").string());
    save_kg(sp.g2, (dir / "ent_ids_2").string(), (dir / "triples_2").string());
    save_ref_pairs(sp.gold, (dir / "ref_ent_ids").string());

    std::ostringstream vec;
    vec.precision(17);
    auto dump_side = [&vec](const KnowledgeGraph& kg, const Mat& f) {
        Eigen::Index r = 0;
        for (const auto& [id, name] : kg.entity_names) {
            vec << name;
            for (Eigen::Index j = 0; j < f.cols(); ++j) vec << ' ' << f(r, j);
            vec << '\n';
            ++r;
        }
    };
    dump_side(sp.g1, f1);
    dump_side(sp.g2, f2);
    write_text((dir / "vectors.txt").string(), vec.str());

    std::cerr << "wrote synthetic pair (" << sp.g1.num_entities() << " + " << sp.g2.num_entities()
              << " entities) to " << a.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-graph entity alignment: training, evaluation, and dataset tooling"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "Seed for all randomness")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads for evaluation")->capture_default_str();
    app.add_flag("--float64,!--no-float64", g.float64,
                 "Use 64-bit floats (the only implemented mode)");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "Train a model");
    train->add_option("--config", train_args.config, "key=value training config")->required();
    train->add_option("--data", train_args.data, "Dataset directory")->required();
    train->add_option("--out", train_args.out, "Checkpoint output path")->required();
    train->add_option("--log", train_args.log, "Training log path (JSON lines)");
    train->add_option("--vectors", train_args.vectors, "Word-vector file");
    train->add_option("--beta", train_args.beta, "Matching-vector weight")->capture_default_str();
    train->add_option("--rep-dim", train_args.rep_dim, "Neighborhood representation width")
        ->capture_default_str();
    train->add_option("--layers", train_args.layers, "Graph convolution layers")
        ->capture_default_str();
    train->add_option("--split-fraction", train_args.split_fraction, "Training split of ref pairs")
        ->capture_default_str();
    train->add_option("--sampling", train_args.sampling, "Neighbor sampling: learned or random")
        ->check(CLI::IsMember({"learned", "random"}))
        ->capture_default_str();
    train->add_flag("--no-matching", train_args.no_matching,
                    "Replace cross-graph matching by mean aggregation");

    EvalArgs eval_args;
    CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint");
    evaluate->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint path")->required();
    evaluate->add_option("--data", eval_args.data, "Dataset directory")->required();
    evaluate->add_option("--vectors", eval_args.vectors, "Word-vector file");
    evaluate->add_option("--k", eval_args.k_list, "Hits@k cutoffs")->capture_default_str();
    evaluate->add_option("--buckets", eval_args.buckets, "Degree-difference bucket edges")
        ->capture_default_str();
    evaluate->add_option("--rescreen", eval_args.rescreen, "Two-stage pre-screen width")
        ->capture_default_str();
    evaluate->add_option("--split-fraction", eval_args.split_fraction, "Training split of ref pairs")
        ->capture_default_str();
    evaluate->add_option("--out", eval_args.out, "Report output path (default stdout)");
    evaluate->add_option("--ranks-csv", eval_args.ranks_csv, "Per-entity rank CSV path");

    SparsifyArgs sparsify_args;
    CLI::App* sparsify_cmd = app.add_subcommand("sparsify", "Randomly remove triples on one side");
    sparsify_cmd->add_option("--in", sparsify_args.in, "Input dataset directory")->required();
    sparsify_cmd->add_option("--out", sparsify_args.out, "Output dataset directory")->required();
    sparsify_cmd->add_option("--keep", sparsify_args.keep, "Fraction of triples to keep")
        ->capture_default_str();
    sparsify_cmd->add_option("--side", sparsify_args.side, "Side to sparsify (1 or 2)")
        ->check(CLI::IsMember({1, 2}))
        ->capture_default_str();

    std::string stats_in;
    CLI::App* stats_cmd = app.add_subcommand("stats", "Dataset statistics as JSON");
    stats_cmd->add_option("--in", stats_in, "Dataset directory")->required();

    std::string dd_in, dd_buckets = "0,10,20,30", dd_out;
    CLI::App* dd_cmd = app.add_subcommand("degree-diff",
                                          "Histogram of neighborhood-size differences");
    dd_cmd->add_option("--in", dd_in, "Dataset directory")->required();
    dd_cmd->add_option("--buckets", dd_buckets, "Bucket edges")->capture_default_str();
    dd_cmd->add_option("--out", dd_out, "CSV output path (default stdout)");

    AttentionArgs attn_args;
    CLI::App* attn_cmd = app.add_subcommand("dump-attention",
                                            "Cross-graph attention weights for one pair");
    attn_cmd->add_option("--checkpoint", attn_args.checkpoint, "Checkpoint path")->required();
    attn_cmd->add_option("--data", attn_args.data, "Dataset directory")->required();
    attn_cmd->add_option("--vectors", attn_args.vectors, "Word-vector file");
    attn_cmd->add_option("--pair", attn_args.pair, "Entity pair: <id in G1> <id in G2>")
        ->expected(2)
        ->required();
    attn_cmd->add_option("--split-fraction", attn_args.split_fraction, "Training split of ref pairs")
        ->capture_default_str();
    attn_cmd->add_option("--out", attn_args.out, "CSV output path (default stdout)");

    CompareArgs cmp_args;
    CLI::App* cmp_cmd = app.add_subcommand("compare-sampling",
                                           "Learned vs random neighbor sampling, per test entity");
    cmp_cmd->add_option("--checkpoint", cmp_args.checkpoint, "Checkpoint path")->required();
    cmp_cmd->add_option("--data", cmp_args.data, "Dataset directory")->required();
    cmp_cmd->add_option("--vectors", cmp_args.vectors, "Word-vector file");
    cmp_cmd->add_option("--k-values", cmp_args.k_values, "Sampling sizes to compare")
        ->capture_default_str();
    cmp_cmd->add_option("--rescreen", cmp_args.rescreen, "Two-stage pre-screen width")
        ->capture_default_str();
    cmp_cmd->add_option("--split-fraction", cmp_args.split_fraction, "Training split of ref pairs")
        ->capture_default_str();
    cmp_cmd->add_option("--out", cmp_args.out, "CSV output path (default stdout)");

    SynthArgs synth_args;
    CLI::App* synth_cmd = app.add_subcommand("make-synth", "Generate a synthetic benchmark pair");
    synth_cmd->add_option("--out", synth_args.out, "Output dataset directory")->required();
    synth_cmd->add_option("--n", synth_args.n, "Entities per side")->capture_default_str();
    synth_cmd->add_option("--avg-degree", synth_args.avg_degree, "Expected degree")
        ->capture_default_str();
    synth_cmd->add_option("--perturb", synth_args.perturb, "none, drop_edges, or noise")
        ->check(CLI::IsMember({"none", "drop_edges", "noise"}))
        ->capture_default_str();
    synth_cmd->add_option("--p", synth_args.p, "Fraction of side-2 triples to drop")
        ->capture_default_str();
    synth_cmd->add_option("--sigma", synth_args.sigma, "Feature noise on side 2")
        ->capture_default_str();
    synth_cmd->add_option("--dim", synth_args.dim, "Feature width")->capture_default_str();
    synth_cmd->add_option("--clusters", synth_args.clusters,
                          "Feature clusters (0 = unique per entity)")
        ->capture_default_str();
    synth_cmd->add_option("--jitter", synth_args.jitter, "Within-cluster feature jitter")
        ->capture_default_str();
    synth_cmd->add_option("--hub-fraction", synth_args.hub_fraction,
                          "Fraction of triples rewired onto noise hubs")
        ->capture_default_str();
    synth_cmd->add_option("--num-hubs", synth_args.num_hubs, "Noise hub count")
        ->capture_default_str();

    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 1;
    }
    g.seed_given = app.count("--seed") > 0;
    if (!g.float64) {
        std::cerr << "only 64-bit arithmetic is implemented; do not pass --no-float64\n";
        return 1;
    }

    try {
        if (*train) return cmd_train(train_args, g);
        if (*evaluate) return cmd_evaluate(eval_args, g);
        if (*sparsify_cmd) return cmd_sparsify(sparsify_args, g);
        if (*stats_cmd) return cmd_stats(stats_in);
        if (*dd_cmd) return cmd_degree_diff(dd_in, dd_buckets, dd_out);
        if (*attn_cmd) return cmd_dump_attention(attn_args, g);
        if (*cmp_cmd) return cmd_compare_sampling(cmp_args, g);
        if (*synth_cmd) return cmd_make_synth(synth_args, g);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
