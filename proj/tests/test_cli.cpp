#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() /
              ("kgalign_cli_" + std::to_string(reinterpret_cast<uintptr_t>(this)));
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }

    RunResult run(const std::string& args) const {
        fs::path out = dir / "stdout.txt";
        fs::path err = dir / "stderr.txt";
        std::string cmd = std::string(KGALIGN_CLI_PATH) + " " + args + " > " + out.string() +
                          " 2> " + err.string();
        int status = std::system(cmd.c_str());
        RunResult r;
        r.exit_code = WEXITSTATUS(status);
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    std::string file(const std::string& name, const std::string& content) const {
        fs::path p = dir / name;
        std::ofstream o(p);
        o << content;
        return p.string();
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

const char* kTinyConfig =
    "gamma=1.0\nlr=0.001\nk=3\nt=4\nws_interval=3\npretrain_patience=2\nmax_epochs=8\n"
    "negatives_per_positive=2\nnegative_refresh_epochs=4\nbatch_size=8\nseed=11\n";

}  // namespace

TEST_CASE("no arguments prints usage and exits 1") {
    Workspace ws;
    RunResult r = ws.run("");
    REQUIRE(r.exit_code == 1);
    REQUIRE(r.err.find("Usage") != std::string::npos);
}

TEST_CASE("unknown subcommand exits 1") {
    Workspace ws;
    REQUIRE(ws.run("frobnicate").exit_code == 1);
}

TEST_CASE("stats reports hand-counted totals") {
    Workspace ws;
    fs::path data = ws.dir / "data";
    fs::create_directories(data);
    std::ofstream(data / "ent_ids_1") << "0\talpha\n1\tbeta\n2\tgamma\n";
    std::ofstream(data / "triples_1") << "0\t0\t1\n1\t1\t2\n";
    std::ofstream(data / "ent_ids_2") << "0\tun\n1\tdeux\n";
    std::ofstream(data / "triples_2") << "0\t0\t1\n";
    std::ofstream(data / "ref_ent_ids") << "0\t0\n1\t1\n";

    RunResult r = ws.run("stats --in " + data.string());
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.out);
    REQUIRE(j["side1"]["entities"] == 3);
    REQUIRE(j["side1"]["relations"] == 2);
    REQUIRE(j["side1"]["triples"] == 2);
    REQUIRE(j["side2"]["entities"] == 2);
    REQUIRE(j["ref_pairs"] == 2);
}

TEST_CASE("corrupt dataset exits 2") {
    Workspace ws;
    fs::path data = ws.dir / "data";
    fs::create_directories(data);
    std::ofstream(data / "ent_ids_1") << "0\ta\n";
    std::ofstream(data / "triples_1") << "0\t0\t9\n";  // unknown entity
    std::ofstream(data / "ent_ids_2") << "0\tb\n";
    std::ofstream(data / "triples_2") << "";
    std::ofstream(data / "ref_ent_ids") << "0\t0\n";
    REQUIRE(ws.run("stats --in " + data.string()).exit_code == 2);
}

TEST_CASE("train then evaluate round-trips through the checkpoint") {
    Workspace ws;
    std::string data = ws.path("synth");
    REQUIRE(ws.run("make-synth --out " + data + " --n 24 --avg-degree 4 --dim 8 --seed 3")
                .exit_code == 0);
    std::string cfg = ws.file("train.cfg", kTinyConfig);
    std::string ckpt = ws.path("model.ckpt");

    RunResult tr = ws.run("train --config " + cfg + " --data " + data + " --out " + ckpt +
                          " --rep-dim 6");
    INFO(tr.err);
    REQUIRE(tr.exit_code == 0);
    REQUIRE(fs::exists(ckpt));
    REQUIRE(fs::exists(ckpt + ".log.jsonl"));

    RunResult ev = ws.run("evaluate --checkpoint " + ckpt + " --data " + data +
                          " --k 1,10 --buckets 0,5 --ranks-csv " + ws.path("ranks.csv"));
    INFO(ev.err);
    REQUIRE(ev.exit_code == 0);
    json report = json::parse(ev.out);
    REQUIRE(report["hits"].contains("1"));
    REQUIRE(report["hits"].contains("10"));
    REQUIRE(report["hits"]["1"].get<double>() >= 0.0);
    REQUIRE(report["buckets"].size() == 2);

    std::string ranks = slurp(ws.path("ranks.csv"));
    REQUIRE(ranks.rfind("entity_id,gold_id,rank", 0) == 0);

    // The training log is JSON lines with the documented fields.
    std::istringstream log(slurp(ckpt + ".log.jsonl"));
    std::string line;
    size_t lines = 0;
    while (std::getline(log, line)) {
        json e = json::parse(line);
        REQUIRE(e.contains("epoch"));
        REQUIRE(e.contains("phase"));
        REQUIRE(e.contains("loss"));
        REQUIRE(e.contains("hits1_val"));
        REQUIRE(e.contains("ws_round"));
        ++lines;
    }
    REQUIRE(lines == 8);
}

TEST_CASE("identical argv and seed give byte-identical artifacts") {
    Workspace ws;
    std::string d1 = ws.path("a");
    std::string d2 = ws.path("b");
    std::string args = " --n 20 --avg-degree 3 --dim 6 --seed 17";
    REQUIRE(ws.run("make-synth --out " + d1 + args).exit_code == 0);
    REQUIRE(ws.run("make-synth --out " + d2 + args).exit_code == 0);
    for (const char* f : {"ent_ids_1", "ent_ids_2", "triples_1", "triples_2", "ref_ent_ids",
                          "vectors.txt"})
        REQUIRE(slurp(fs::path(d1) / f) == slurp(fs::path(d2) / f));

    std::string cfg = ws.file("train.cfg", kTinyConfig);
    std::string c1 = ws.path("m1.ckpt");
    std::string c2 = ws.path("m2.ckpt");
    REQUIRE(ws.run("train --config " + cfg + " --data " + d1 + " --out " + c1 + " --rep-dim 4")
                .exit_code == 0);
    REQUIRE(ws.run("train --config " + cfg + " --data " + d1 + " --out " + c2 + " --rep-dim 4")
                .exit_code == 0);
    REQUIRE(slurp(c1) == slurp(c2));
    REQUIRE(slurp(c1 + ".log.jsonl") == slurp(c2 + ".log.jsonl"));
}

TEST_CASE("sparsify keeps the floor and emits the wire format") {
    Workspace ws;
    std::string data = ws.path("synth");
    REQUIRE(ws.run("make-synth --out " + data + " --n 20 --avg-degree 5 --dim 4 --seed 29")
                .exit_code == 0);
    json before = json::parse(ws.run("stats --in " + data).out);
    size_t triples = before["side1"]["triples"].get<size_t>();

    std::string out = ws.path("sparse");
    REQUIRE(ws.run("sparsify --in " + data + " --keep 0.26 --side 1 --seed 7 --out " + out)
                .exit_code == 0);
    json after = json::parse(ws.run("stats --in " + out).out);
    REQUIRE(after["side1"]["triples"].get<size_t>() ==
            static_cast<size_t>(0.26 * static_cast<double>(triples)));
    REQUIRE(after["side2"]["triples"] == before["side2"]["triples"]);
}

TEST_CASE("degree-diff, dump-attention, and compare-sampling emit their tables") {
    Workspace ws;
    std::string data = ws.path("synth");
    REQUIRE(ws.run("make-synth --out " + data + " --n 20 --avg-degree 4 --dim 6 --seed 31")
                .exit_code == 0);

    RunResult dd = ws.run("degree-diff --in " + data + " --buckets 0,1,2");
    REQUIRE(dd.exit_code == 0);
    REQUIRE(dd.out.rfind("bucket_lo,bucket_hi,count", 0) == 0);
    // Isomorphic pair: every difference is zero.
    REQUIRE(dd.out.find("0,1,20") != std::string::npos);

    std::string cfg = ws.file("train.cfg", kTinyConfig);
    std::string ckpt = ws.path("m.ckpt");
    REQUIRE(ws.run("train --config " + cfg + " --data " + data + " --out " + ckpt + " --rep-dim 4")
                .exit_code == 0);

    std::ifstream refs(fs::path(data) / "ref_ent_ids");
    int id1 = 0, id2 = 0;
    refs >> id1 >> id2;
    RunResult attn = ws.run("dump-attention --checkpoint " + ckpt + " --data " + data + " --pair " +
                            std::to_string(id1) + " " + std::to_string(id2));
    REQUIRE(attn.exit_code == 0);
    REQUIRE(attn.out.rfind("left_neighbor_name,right_neighbor_name,a_pq", 0) == 0);

    RunResult cmp = ws.run("compare-sampling --checkpoint " + ckpt + " --data " + data +
                           " --k-values 2,3");
    REQUIRE(cmp.exit_code == 0);
    REQUIRE(cmp.out.rfind("entity_id,mode,K,hits1_contribution", 0) == 0);
    REQUIRE(cmp.out.find(",learned,2,") != std::string::npos);
    REQUIRE(cmp.out.find(",random,3,") != std::string::npos);
}

TEST_CASE("evaluate validates inputs before creating outputs") {
    Workspace ws;
    std::string report = ws.path("report.json");
    RunResult r = ws.run("evaluate --checkpoint /nonexistent.ckpt --data /nonexistent --out " +
                         report);
    REQUIRE(r.exit_code == 2);
    REQUIRE(!fs::exists(report));
}

TEST_CASE("float32 mode is rejected explicitly") {
    Workspace ws;
    RunResult r = ws.run("--no-float64 stats --in /nonexistent");
    REQUIRE(r.exit_code == 1);
}
