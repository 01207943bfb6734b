#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rlcs/config.hpp"
#include "rlcs/error.hpp"
#include "rlcs/infra_sched.hpp"
#include "rlcs/reward.hpp"
#include "rlcs/rollout_sim.hpp"
#include "rlcs/vision_geom.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace rlcs;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_mismatch = 1;
constexpr int exit_error = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(Errc::io_error, "write failed for " + path.string());
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty())
        std::cout << content << '\n';
    else
        write_file(out_path, content + "\n");
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

ExperimentConfig load_common(const Common& c) {
    ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    return cfg;
}

std::string config_dir(const Common& c) {
    if (c.config.empty()) return ".";
    auto dir = fs::path(c.config).parent_path();
    return dir.empty() ? "." : dir.string();
}

// verify

struct FixtureCase {
    std::size_t line = 0;
    std::string id;
    RewardRequest req;
    double expect = 0.0;
    double tol = 1e-9;
    RewardConfig reward;
};

std::vector<FixtureCase> parse_fixtures(const std::string& path, const RewardConfig& base) {
    const std::string content = read_file(path);
    std::vector<FixtureCase> cases;
    std::istringstream in(content);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            FixtureCase fc;
            fc.line = n;
            fc.id = j.value("id", "line" + std::to_string(n));
            fc.req.domain = parse_domain(j.at("domain").get<std::string>());
            fc.req.question = j.value("question", std::string{});
            fc.req.reference = j.at("reference").get<std::string>();
            fc.req.candidate = j.at("candidate").get<std::string>();
            fc.req.verifiable = j.value("verifiable", true);
            fc.expect = j.at("expect_score").get<double>();
            fc.tol = j.value("tol", 1e-9);
            // per-case overrides of the reward config
            fc.reward = base;
            fc.reward.rtol_math = j.value("rtol_math", base.rtol_math);
            fc.reward.rtol_chart = j.value("rtol_chart", base.rtol_chart);
            fc.reward.tau = j.value("tau", base.tau);
            if (j.contains("grounding_match"))
                fc.reward.grounding_match =
                    j["grounding_match"].get<std::string>() == "optimal" ? GroundingMatch::optimal : GroundingMatch::greedy;
            cases.push_back(std::move(fc));
        } catch (const json::exception& e) {
            throw Error(Errc::config_invalid, path + ":" + std::to_string(n) + ": parse error: " + e.what());
        } catch (const Error& e) {
            throw Error(e.code(), path + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return cases;
}

int cmd_verify(const std::string& fixtures, const Common& common) {
    const ExperimentConfig cfg = load_common(common);
    const auto judge = make_judge(cfg.judge, config_dir(common));
    const auto cases = parse_fixtures(fixtures, cfg.reward);

    std::map<std::string, std::pair<std::size_t, std::size_t>> per_domain;  // pass, total
    std::size_t failures = 0;
    json failed = json::array();
    for (const auto& fc : cases) {
        auto& [pass, total] = per_domain[std::string(domain_name(fc.req.domain))];
        ++total;
        const RewardResult r = score(fc.req, *judge, fc.reward);
        if (std::abs(r.score - fc.expect) <= fc.tol) {
            ++pass;
            continue;
        }
        if (failures++ == 0)
            std::cerr << "first failure: " << fixtures << ":" << fc.line << " id=" << fc.id << " expected "
                      << fc.expect << " got " << r.score << " (" << r.diagnostic << ")\n";
        failed.push_back({{"id", fc.id}, {"line", fc.line}, {"expected", fc.expect}, {"score", r.score}});
    }
    json report = {{"cases", cases.size()}, {"failures", failures}, {"domains", json::object()}, {"failed", failed}};
    for (const auto& [dom, pt] : per_domain) {
        std::cout << dom << ": " << pt.first << "/" << pt.second << " passed\n";
        report["domains"][dom] = {{"passed", pt.first}, {"total", pt.second}};
    }
    std::cout << "total: " << (cases.size() - failures) << "/" << cases.size() << " passed\n";
    if (!common.out.empty()) write_file(common.out, report.dump(2) + "\n");
    return failures == 0 ? exit_ok : exit_mismatch;
}

// simulate

int cmd_simulate(const std::string& dataset_path, const Common& common, const std::string& curriculum,
                 const std::string& expansion, std::optional<int> iterations, std::optional<int> threads) {
    ExperimentConfig cfg = load_common(common);
    if (curriculum != "config") cfg.curriculum_enabled = curriculum == "on";
    if (expansion != "config") cfg.expansion_enabled = expansion == "on";
    if (iterations) cfg.iterations = *iterations;
    if (threads) cfg.threads = *threads;
    cfg.validate();
    if (common.out.empty()) throw Error(Errc::invalid_argument, "simulate needs --out <dir>");

    Dataset ds = dataset_path.empty() ? synthesize_dataset(cfg) : load_dataset(dataset_path, cfg.curriculum);
    const auto judge = make_judge(cfg.judge, config_dir(common));
    const auto res = run_experiment(cfg, std::move(ds), cfg.iterations, *judge);

    std::error_code ec;
    fs::create_directories(common.out, ec);
    if (ec) throw Error(Errc::io_error, "cannot create " + common.out + ": " + ec.message());
    const fs::path dir(common.out);
    write_file(dir / "metrics.csv", res.log.to_csv());
    write_file(dir / "events.jsonl", res.log.to_jsonl());
    write_file(dir / "final_state.json", res.final_state_json() + "\n");
    if (!res.log.records.empty()) {
        const auto& last = res.log.records.back();
        std::printf("iterations %d  mean_skill %.6f  ema %.4f  valid_fill %.3f\n", last.iteration + 1,
                    last.mean_skill, last.ema, last.valid_fill);
    } else {
        std::printf("iterations 0\n");
    }
    return exit_ok;
}

// schedule

int cmd_schedule(const std::string& items_path, const Common& common, std::optional<int> ranks,
                 std::optional<std::int64_t> capacity, std::optional<std::string> cost) {
    ExperimentConfig cfg = load_common(common);
    const int r = ranks.value_or(cfg.scheduler.ranks);
    const std::int64_t cap = capacity.value_or(cfg.scheduler.capacity);
    CostMode mode = cfg.scheduler.cost_mode;
    if (cost) {
        if (*cost == "linear")
            mode = CostMode::linear;
        else if (*cost == "quadratic")
            mode = CostMode::quadratic;
        else
            throw Error(Errc::invalid_argument, "cost must be linear or quadratic");
    }

    std::vector<std::pair<std::string, std::int64_t>> raw;
    std::istringstream in(read_file(items_path));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            raw.emplace_back(j.at("id").get<std::string>(), j.at("length").get<std::int64_t>());
        } catch (const json::exception& e) {
            throw Error(Errc::config_invalid, items_path + ":" + std::to_string(n) + ": parse error: " + e.what());
        }
    }
    const auto items = make_items(raw, mode);
    const auto assign = balance_ranks(items, r);
    const auto plan = pack_microsteps(items, cap);

    json rank_of = json::object();
    for (std::size_t i = 0; i < items.size(); ++i) rank_of[items[i].id] = assign.rank_of[i];
    std::int64_t total_tokens = 0;
    for (const auto& it : items) total_tokens += it.length;
    // one sample per micro-step is what you get without packing
    const double naive_padding =
        items.empty() ? 0.0 : 1.0 - static_cast<double>(total_tokens) / (static_cast<double>(cap) * items.size());
    json out = {{"ranks", {{"count", r}, {"rank_of", rank_of}, {"loads", assign.loads}, {"max_load", assign.max_load()}}},
                {"microsteps",
                 {{"capacity", plan.capacity},
                  {"bins", plan.bins},
                  {"fill", plan.fill},
                  {"count", plan.bins.size()},
                  {"padding_fraction", plan.padding_fraction()}}},
                {"baseline", {{"microsteps", items.size()}, {"padding_fraction", naive_padding}}}};
    emit(common.out, out.dump(2));
    return exit_ok;
}

// geom

EmbeddingTable table_from_json(const json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
        throw Error(Errc::invalid_argument, "table must be a nonempty [H][W][D] array");
    const std::size_t h = j.size(), w = j[0].size();
    const std::size_t d = j[0][0].is_array() ? j[0][0].size() : 1;
    std::vector<double> values;
    values.reserve(h * w * d);
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != w) throw Error(Errc::invalid_argument, "ragged table rows");
        for (const auto& cell : row) {
            if (cell.is_number()) {
                if (d != 1) throw Error(Errc::invalid_argument, "inconsistent embedding dims");
                values.push_back(cell.get<double>());
                continue;
            }
            if (!cell.is_array() || cell.size() != d) throw Error(Errc::invalid_argument, "inconsistent embedding dims");
            for (const auto& v : cell) values.push_back(v.get<double>());
        }
    }
    return EmbeddingTable(h, w, d, std::move(values));
}

json table_to_json(const EmbeddingTable& t) {
    json rows = json::array();
    for (std::size_t h = 0; h < t.height(); ++h) {
        json row = json::array();
        for (std::size_t w = 0; w < t.width(); ++w) {
            const auto v = t.at(h, w);
            row.push_back(json(std::vector<double>(v.begin(), v.end())));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

int cmd_geom(const std::string& table_path, const Common& common, std::size_t height, std::size_t width, double a) {
    json j;
    try {
        j = json::parse(read_file(table_path));
    } catch (const json::exception& e) {
        throw Error(Errc::invalid_argument, table_path + ": parse error: " + e.what());
    }
    if (j.is_object()) j = j.at("table");
    const auto table = table_from_json(j);
    if (height == 0 || width == 0) throw Error(Errc::invalid_argument, "target height and width must be >= 1");
    const auto out = adapt_table(table, PatchGrid{height, width}, a);
    emit(common.out, table_to_json(out).dump());
    return exit_ok;
}

// selftest

int cmd_selftest() {
    int failed = 0;
    auto check = [&](const char* name, bool ok) {
        std::printf("%s %s\n", ok ? "ok  " : "FAIL", name);
        failed += ok ? 0 : 1;
    };
    FallbackJudge judge;
    RewardConfig rc;
    auto s = [&](Domain d, const char* ref, const char* cand) {
        return score({d, "", ref, cand, true}, judge, rc).score;
    };
    check("math 43 vs 43.0", s(Domain::math, "43", "43.0") == 1.0);
    check("ocr 43 vs 43.0", s(Domain::ocr, "43", "43.0") < 1.0);
    check("chart year rule", s(Domain::chart, "2019", "2020") == 0.0);
    check("boxed template",
          s(Domain::math, "7", "<think>add</think><answer><|begin_of_box|>7<|end_of_box|></answer>") == 1.0);
    check("two boxes rejected",
          s(Domain::math, "7",
            "<think>x</think><answer><|begin_of_box|>7<|end_of_box|><|begin_of_box|>7<|end_of_box|></answer>") ==
              0.0);
    const Box a{0, 0, 10, 10}, b{5, 0, 15, 10};
    check("iou half overlap", std::abs(iou(a, b) - 1.0 / 3.0) < 1e-12);

    ExpansionState st;
    for (int i = 0; i < 100; ++i) st = update_ema(st, compute_ratio(0.5, st.cap));
    check("ema converges to 2", std::abs(st.ema - 2.0) < 1e-4);

    const std::vector<WorkItem> items{{"a", 5, 5}, {"b", 4, 4}, {"c", 3, 3}, {"d", 3, 3}};
    check("lpt loads", balance_ranks(items, 2).max_load() == 8.0);
    check("ffd bins", pack_microsteps(items, 8).bins.size() == 2);

    const std::vector<double> rewards{1, 0, 1, 0};
    const auto adv = group_advantages(rewards);
    check("advantages centred", std::abs(adv[0] + adv[1] + adv[2] + adv[3]) < 1e-12);

    const auto c = normalize_coords({4, 4}, 1, 2);
    check("normalized coords", c.x == -0.25 && c.y == 0.25);
    EmbeddingTable t(3, 3, 1, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const auto same = adapt_table(t, {3, 3}).values();
    double worst = 0.0;
    for (std::size_t i = 0; i < same.size(); ++i) worst = std::max(worst, std::abs(same[i] - t.values()[i]));
    check("bicubic identity", worst < 1e-9);

    std::printf("%s\n", failed == 0 ? "selftest passed" : "selftest FAILED");
    return failed == 0 ? exit_ok : exit_mismatch;
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON config file");
    sub->add_option("--seed", c.seed, "override the config seed");
    sub->add_option("--out", c.out, "output path");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rlcs: verifiers, curriculum sampling and rollout simulation"};
    app.require_subcommand(1);

    Common verify_c, sim_c, sched_c, geom_c;

    std::string fixtures;
    auto* verify = app.add_subcommand("verify", "score a fixture corpus and report per-domain pass counts");
    verify->add_option("fixtures", fixtures, "fixture JSON Lines file")->required();
    add_common(verify, verify_c);

    std::string dataset, curriculum = "config", expansion = "config";
    std::optional<int> iterations, threads;
    auto* simulate = app.add_subcommand("simulate", "run the closed-loop simulator");
    simulate->add_option("--dataset", dataset, "dataset JSON Lines file (synthetic when omitted)");
    simulate->add_option("--curriculum", curriculum, "on | off | config")
        ->check(CLI::IsMember({"on", "off", "config"}));
    simulate->add_option("--expansion", expansion, "on | off | config")->check(CLI::IsMember({"on", "off", "config"}));
    simulate->add_option("--iterations", iterations, "override the config iteration count");
    simulate->add_option("--threads", threads, "rollout worker threads");
    add_common(simulate, sim_c);

    std::string items;
    std::optional<int> ranks;
    std::optional<std::int64_t> capacity;
    std::optional<std::string> cost;
    auto* schedule = app.add_subcommand("schedule", "balance items over ranks and pack micro-steps");
    schedule->add_option("items", items, "items JSON Lines file ({\"id\",\"length\"})")->required();
    schedule->add_option("--ranks", ranks, "data-parallel ranks");
    schedule->add_option("--capacity", capacity, "micro-step token capacity");
    schedule->add_option("--cost", cost, "linear | quadratic");
    add_common(schedule, sched_c);

    std::string table;
    std::size_t height = 0, width = 0;
    double kernel_a = -0.5;
    auto* geom = app.add_subcommand("geom", "resample a position-embedding table");
    geom->add_option("table", table, "JSON [H][W][D] array")->required();
    geom->add_option("--height", height, "target patch rows")->required();
    geom->add_option("--width", width, "target patch columns")->required();
    geom->add_option("-a,--kernel-a", kernel_a, "cubic kernel parameter");
    add_common(geom, geom_c);

    auto* selftest = app.add_subcommand("selftest", "run built-in sanity checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*verify) return cmd_verify(fixtures, verify_c);
        if (*simulate) return cmd_simulate(dataset, sim_c, curriculum, expansion, iterations, threads);
        if (*schedule) return cmd_schedule(items, sched_c, ranks, capacity, cost);
        if (*geom) return cmd_geom(table, geom_c, height, width, kernel_a);
        if (*selftest) return cmd_selftest();
    } catch (const Error& e) {
        std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << '\n';
        return exit_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_error;
    }
    return exit_error;
}
