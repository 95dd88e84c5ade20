#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>

#include "isac/io.hpp"
#include "isac/signal_model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kBin = ISACPACK_BIN;

int run(const std::string& args) {
    const std::string cmd = "\"" + kBin + "\" " + args + " > cli_stdout.txt 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) { return isac::read_text_file(path); }

void write(const std::string& path, const std::string& text) {
    isac::write_text_file(path, text);
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("design writes a complete artifact set for a small problem") {
    TempDir tmp("cli_design");
    write((tmp.path / "cfg.json").string(), R"({
      "problem": {
        "M": 2, "P": 2.0, "eps": 0.4,
        "channel": {"kind": "identity", "n_tx": 2},
        "x0": {"kind": "lfm"}
      },
      "output": {"dir": ")" + (tmp.path / "out").string() + R"("}
    })");
    REQUIRE(run("design --config " + (tmp.path / "cfg.json").string()) == 0);

    const json result = json::parse(slurp((tmp.path / "out" / "result.json").string()));
    CHECK(result.at("d_achieved").get<double>() > 0.0);
    CHECK(result.at("mode") == "bisection");
    CHECK(result.at("converged").get<bool>());

    const auto signals = isac::load_signals_csv((tmp.path / "out" / "signals.csv").string());
    REQUIRE(signals.size() == 2);
    CHECK(signals[0].size() == 4);

    CHECK(fs::exists(tmp.path / "out" / "resolved_config.json"));
    CHECK(fs::exists(tmp.path / "out" / "manifest.json"));
    CHECK(fs::exists(tmp.path / "out" / "x0_used.csv"));

    // the similarity constraint holds on the emitted signals
    const isac::Vec x0 = isac::load_waveform_csv((tmp.path / "out" / "x0_used.csv").string());
    for (const auto& s : signals) CHECK((s - x0).norm() <= 0.4 + 1e-4);
}

TEST_CASE("a point similarity ball pins every signal to the reference") {
    TempDir tmp("cli_eps0");
    write((tmp.path / "cfg.json").string(), R"({
      "problem": {
        "M": 2, "P": 2.0, "eps": 0.0,
        "channel": {"kind": "identity", "n_tx": 2},
        "x0": {"kind": "lfm"}
      },
      "output": {"dir": ")" + (tmp.path / "out").string() + R"("}
    })");
    REQUIRE(run("design --config " + (tmp.path / "cfg.json").string()) == 0);
    const auto signals = isac::load_signals_csv((tmp.path / "out" / "signals.csv").string());
    const isac::Vec x0 = isac::load_waveform_csv((tmp.path / "out" / "x0_used.csv").string());
    for (const auto& s : signals) CHECK((s - x0).norm() <= 1e-3);
}

TEST_CASE("malformed configs exit 3 without partial outputs") {
    TempDir tmp("cli_bad");
    const std::string out = (tmp.path / "out").string();

    write((tmp.path / "bad1.json").string(), "{ not json");
    CHECK(run("design --config " + (tmp.path / "bad1.json").string()) == 3);

    write((tmp.path / "bad2.json").string(), R"({
      "problem": {"M": 2, "eps": 0.1, "unknown_key": 1,
                  "channel": {"kind": "identity", "n_tx": 2}, "x0": {"kind": "lfm"}},
      "output": {"dir": ")" + out + R"("}
    })");
    CHECK(run("design --config " + (tmp.path / "bad2.json").string()) == 3);

    write((tmp.path / "bad3.json").string(), R"({
      "problem": {"M": 2, "eps": 0.1,
                  "channel": {"kind": "identity", "n_tx": 2},
                  "x0": {"kind": "file", "file": "does_not_exist.csv"}},
      "output": {"dir": ")" + out + R"("}
    })");
    CHECK(run("design --config " + (tmp.path / "bad3.json").string()) == 3);

    CHECK(!fs::exists(out));
}

TEST_CASE("infeasible fixed targets exit 2") {
    TempDir tmp("cli_infeas");
    write((tmp.path / "cfg.json").string(), R"({
      "problem": {
        "M": 2, "P": 100.0, "eps": 0.1, "d": 50.0,
        "channel": {"kind": "identity", "n_tx": 2},
        "x0": {"kind": "lfm"}
      },
      "output": {"dir": ")" + (tmp.path / "out").string() + R"("}
    })");
    CHECK(run("design --config " + (tmp.path / "cfg.json").string()) == 2);
    CHECK(!fs::exists(tmp.path / "out"));
    const json err = json::parse(slurp("cli_stdout.txt"));
    CHECK(err.at("error").at("type") == "infeasible");
}

TEST_CASE("eval af on the reference emits a unit-peak grid") {
    TempDir tmp("cli_af");
    write((tmp.path / "cfg.json").string(), R"({
      "problem": {
        "M": 2, "P": 1.0, "eps": 0.3,
        "channel": {"kind": "identity", "n_tx": 16},
        "x0": {"kind": "lfm"}
      },
      "eval": {"metrics": ["af"]},
      "output": {"dir": ")" + (tmp.path / "out").string() + R"("}
    })");
    REQUIRE(run("eval --config " + (tmp.path / "cfg.json").string()) == 0);

    std::ifstream in((tmp.path / "out" / "af.csv").string());
    std::string header;
    std::getline(in, header);
    CHECK(header == "delay,doppler,magnitude");
    double maxval = 0.0;
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.rfind(',');
        maxval = std::max(maxval, std::stod(line.substr(pos + 1)));
    }
    CHECK(maxval == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eval reruns and manifest reproduction are byte-identical") {
    TempDir tmp("cli_repro");
    write((tmp.path / "cfg.json").string(), R"({
      "problem": {
        "M": 2, "P": 2.0, "eps": 0.4,
        "channel": {"kind": "rayleigh", "n_r": 2, "n_tx": 4, "seed": 77, "count": 4},
        "x0": {"kind": "lfm"}
      },
      "eval": {"metrics": ["ser", "cdf"], "snr_db": [0, 4], "trials": 10000, "seed": 9},
      "output": {"dir": ")" + (tmp.path / "a").string() + R"("}
    })");
    REQUIRE(run("eval --config " + (tmp.path / "cfg.json").string()) == 0);
    REQUIRE(run("eval --config " + (tmp.path / "cfg.json").string() + " --out " +
                (tmp.path / "b").string()) == 0);
    CHECK(slurp((tmp.path / "a" / "ser.csv").string()) ==
          slurp((tmp.path / "b" / "ser.csv").string()));
    CHECK(slurp((tmp.path / "a" / "cdf.csv").string()) ==
          slurp((tmp.path / "b" / "cdf.csv").string()));

    // a manifest is a valid config: artifacts reproduce from it byte for byte
    REQUIRE(run("eval --config " + (tmp.path / "a" / "manifest.json").string() + " --out " +
                (tmp.path / "c").string()) == 0);
    CHECK(slurp((tmp.path / "a" / "ser.csv").string()) ==
          slurp((tmp.path / "c" / "ser.csv").string()));

    // different seed changes the Monte Carlo draws
    REQUIRE(run("eval --config " + (tmp.path / "cfg.json").string() + " --seed 1234 --out " +
                (tmp.path / "d").string()) == 0);
    CHECK(slurp((tmp.path / "a" / "ser.csv").string()) !=
          slurp((tmp.path / "d" / "ser.csv").string()));
}

TEST_CASE("threaded eval matches single-threaded output") {
    TempDir tmp("cli_threads");
    write((tmp.path / "cfg.json").string(), R"({
      "problem": {
        "M": 2, "P": 2.0, "eps": 0.4,
        "channel": {"kind": "rayleigh", "n_r": 2, "n_tx": 4, "seed": 5, "count": 6},
        "x0": {"kind": "lfm"}
      },
      "eval": {"metrics": ["ser", "cdf", "similarity"], "snr_db": [2], "trials": 20000, "seed": 3},
      "output": {"dir": ")" + (tmp.path / "t1").string() + R"("}
    })");
    REQUIRE(run("eval --config " + (tmp.path / "cfg.json").string()) == 0);
    REQUIRE(run("eval --config " + (tmp.path / "cfg.json").string() + " --threads 4 --out " +
                (tmp.path / "t4").string()) == 0);
    for (const std::string f : {"ser.csv", "cdf.csv", "similarity.csv"})
        CHECK(slurp((tmp.path / "t1" / f).string()) == slurp((tmp.path / "t4" / f).string()));
}

TEST_CASE("tradeoff sweep composes design and eval and stays monotone") {
    TempDir tmp("cli_sweep");
    const std::string base = R"({
      "problem": {
        "M": 2, "P": 2.0, "eps": 0.4,
        "channel": {"kind": "identity", "n_tx": 4},
        "x0": {"kind": "lfm"}
      },)";
    write((tmp.path / "sweep.json").string(), base + R"(
      "sweep": {"d_values": [0.0, 0.16, 0.32, 0.48, 0.6], "ref_snr_db": 4.0, "trials": 5000},
      "output": {"dir": ")" + (tmp.path / "out").string() + R"("}
    })");
    REQUIRE(run("sweep-tradeoff --config " + (tmp.path / "sweep.json").string()) == 0);

    std::ifstream in((tmp.path / "out" / "tradeoff.csv").string());
    std::string line;
    std::getline(in, line);
    CHECK(line == "d_target,d_achieved,max_similarity,beampattern_mse_db,ser_at_ref_snr,feasible");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos != std::string::npos) {
            const auto next = line.find(',', pos);
            row.push_back(std::stod(line.substr(pos, next - pos)));
            pos = next == std::string::npos ? next : next + 1;
        }
        rows.push_back(row);
    }
    REQUIRE(rows.size() == 5);
    double prev_d = -1.0;
    for (const auto& row : rows) {
        if (row[5] < 0.5) continue;  // infeasible points carry NaNs
        CHECK(row[1] >= prev_d - 1e-6);  // frontier monotone in d
        prev_d = row[1];
        CHECK(row[2] <= 0.4 + 1e-4);
    }

    // single-point sweep equals the design + eval composition
    write((tmp.path / "one.json").string(), base + R"(
      "sweep": {"d_values": [0.32], "ref_snr_db": 4.0, "trials": 5000},
      "output": {"dir": ")" + (tmp.path / "one_out").string() + R"("}
    })");
    REQUIRE(run("sweep-tradeoff --config " + (tmp.path / "one.json").string()) == 0);
    write((tmp.path / "design_fixed.json").string(), R"({
      "problem": {
        "M": 2, "P": 2.0, "eps": 0.4, "d": 0.32,
        "channel": {"kind": "identity", "n_tx": 4},
        "x0": {"kind": "lfm"}
      },
      "output": {"dir": ")" + (tmp.path / "d_out").string() + R"("}
    })");
    REQUIRE(run("design --config " + (tmp.path / "design_fixed.json").string()) == 0);
    write((tmp.path / "eval_fixed.json").string(), R"({
      "problem": {
        "M": 2, "P": 2.0, "eps": 0.4, "d": 0.32,
        "channel": {"kind": "identity", "n_tx": 4},
        "x0": {"kind": "lfm"}
      },
      "eval": {"metrics": ["ser"], "snr_db": [4.0], "trials": 5000, "seed": 1,
               "signals": ")" + (tmp.path / "d_out" / "signals.csv").string() + R"("},
      "output": {"dir": ")" + (tmp.path / "e_out").string() + R"("}
    })");
    REQUIRE(run("eval --config " + (tmp.path / "eval_fixed.json").string()) == 0);

    const json sweep_manifest =
        json::parse(slurp((tmp.path / "one_out" / "manifest.json").string()));
    CHECK(sweep_manifest.at("summary").at("failures").get<int>() == 0);

    auto field = [](const std::string& s, int index) {
        std::size_t pos = 0;
        for (int i = 0; i < index; ++i) pos = s.find(',', pos) + 1;
        return std::stod(s.substr(pos, s.find(',', pos) - pos));
    };
    std::ifstream sw((tmp.path / "one_out" / "tradeoff.csv").string());
    std::getline(sw, line);
    std::getline(sw, line);
    const double sweep_d = field(line, 1);
    const double sweep_ser = field(line, 4);

    const json design_result = json::parse(slurp((tmp.path / "d_out" / "result.json").string()));
    CHECK(sweep_d == doctest::Approx(design_result.at("d_achieved").get<double>()).epsilon(1e-12));

    std::ifstream se((tmp.path / "e_out" / "ser.csv").string());
    std::getline(se, line);
    std::getline(se, line);
    CHECK(field(line, 1) == doctest::Approx(sweep_ser).epsilon(1e-12));
}

TEST_CASE("spatial metrics and imperfect csit through the cli") {
    TempDir tmp("cli_spatial");
    write((tmp.path / "cfg.json").string(), R"({
      "problem": {
        "M": 2, "P": 1.0, "eps": 0.3,
        "channel": {"kind": "rayleigh", "n_r": 2, "n_tx": 4, "seed": 21},
        "x0": {"kind": "widebeam", "lobe": [-30, 30]}
      },
      "eval": {"metrics": ["pd", "beampattern"], "snr_db": [0, 20], "trials": 4000,
               "seed": 2, "lobe": [-30, 30], "pfa": 0.01},
      "output": {"dir": ")" + (tmp.path / "out").string() + R"("}
    })");
    REQUIRE(run("eval --config " + (tmp.path / "cfg.json").string()) == 0);
    std::ifstream in((tmp.path / "out" / "pd.csv").string());
    std::string line;
    std::getline(in, line);
    CHECK(line == "snr_db,pd");
    while (std::getline(in, line)) {
        const double pd = std::stod(line.substr(line.find(',') + 1));
        CHECK(pd >= 0.0);
        CHECK(pd <= 1.0);
    }
    CHECK(fs::exists(tmp.path / "out" / "beampattern.csv"));
    const json manifest = json::parse(slurp((tmp.path / "out" / "manifest.json").string()));
    CHECK(manifest.at("summary").contains("beampattern_mse_db"));

    // imperfect CSIT: designer mode re-designs on the perturbed channel
    write((tmp.path / "csit.json").string(), R"({
      "problem": {
        "M": 2, "P": 1.0, "eps": 0.3,
        "channel": {"kind": "rayleigh", "n_r": 2, "n_tx": 4, "seed": 21},
        "x0": {"kind": "widebeam", "lobe": [-30, 30]}
      },
      "eval": {"metrics": ["ser"], "snr_db": [0, 6], "trials": 4000, "seed": 2,
               "csit_eta": 0.3},
      "output": {"dir": ")" + (tmp.path / "csit_out").string() + R"("}
    })");
    REQUIRE(run("eval --config " + (tmp.path / "csit.json").string()) == 0);
    std::ifstream cs((tmp.path / "csit_out" / "ser.csv").string());
    std::getline(cs, line);
    int rows = 0;
    while (std::getline(cs, line)) ++rows;
    CHECK(rows == 2);

    // csit needs the designer: rejecting it in file mode
    write((tmp.path / "bad.json").string(), R"({
      "problem": {
        "M": 2, "P": 1.0, "eps": 0.3,
        "channel": {"kind": "rayleigh", "n_r": 2, "n_tx": 4, "seed": 21},
        "x0": {"kind": "widebeam", "lobe": [-30, 30]}
      },
      "eval": {"metrics": ["ser"], "snr_db": [0], "trials": 100, "seed": 2,
               "csit_eta": 0.3, "signals": "whatever.csv"},
      "output": {"dir": ")" + (tmp.path / "bad_out").string() + R"("}
    })");
    CHECK(run("eval --config " + (tmp.path / "bad.json").string()) == 3);
}

TEST_CASE("bdps design through the cli") {
    TempDir tmp("cli_bdps");
    write((tmp.path / "cfg.json").string(), R"({
      "problem": {
        "M": 4, "P": 4.0, "eps": 0.5,
        "channel": {"kind": "identity", "n_tx": 2},
        "x0": {"kind": "lfm"}
      },
      "solver": {"algorithm": "bdps",
                 "bdps": {"G": 2, "ga": {"pop": 8, "iters": 4, "seed": 11}}},
      "output": {"dir": ")" + (tmp.path / "out").string() + R"("}
    })");
    REQUIRE(run("design --config " + (tmp.path / "cfg.json").string()) == 0);
    const json result = json::parse(slurp((tmp.path / "out" / "result.json").string()));
    CHECK(result.at("mode") == "bdps");
    CHECK(result.at("d_true").get<double>() <= result.at("d_combined").get<double>() + 1e-12);
    CHECK(result.at("plan").at("groups").size() == 2);
    const auto signals = isac::load_signals_csv((tmp.path / "out" / "signals.csv").string());
    CHECK(signals.size() == 4);
}

TEST_CASE("channel and reference generators round-trip through the csv loaders") {
    TempDir tmp("cli_gen");
    REQUIRE(run("gen-channel --n-r 2 --n-tx 3 --count 2 --seed 4 --out " +
                (tmp.path / "ch").string()) == 0);
    const auto H = isac::load_channel_csv((tmp.path / "ch" / "channel_001.csv").string());
    CHECK(H.rows() == 2);
    CHECK(H.cols() == 3);

    REQUIRE(run("gen-reference --kind widebeam --n-tx 8 --power 2 --lobe-lo -30 --lobe-hi 30 "
                "--out " + (tmp.path / "wb.csv").string()) == 0);
    const isac::Vec x0 = isac::load_waveform_csv((tmp.path / "wb.csv").string());
    CHECK(x0.size() == 16);
    CHECK(x0.squaredNorm() == doctest::Approx(2.0).epsilon(1e-12));
}
