#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rlcs/config.hpp"
#include "rlcs/curriculum.hpp"
#include "rlcs/error.hpp"
#include "rlcs/expansion.hpp"
#include "rlcs/infra_sched.hpp"
#include "rlcs/response_parser.hpp"
#include "rlcs/reward.hpp"
#include "rlcs/rollout_sim.hpp"
#include "rlcs/text.hpp"
#include "rlcs/vision_geom.hpp"

namespace py = pybind11;
using namespace rlcs;

namespace {

using BoxTuple = std::tuple<double, double, double, double>;

Box to_box(const BoxTuple& t) { return {std::get<0>(t), std::get<1>(t), std::get<2>(t), std::get<3>(t)}; }

std::vector<Box> to_boxes(const std::vector<BoxTuple>& v) {
    std::vector<Box> out;
    for (const auto& t : v) out.push_back(to_box(t));
    return out;
}

ExperimentConfig config_from(const std::optional<std::string>& json_text) {
    return json_text ? parse_config(*json_text) : ExperimentConfig{};
}

py::dict result_dict(const RewardResult& r) {
    py::dict d;
    d["score"] = r.score;
    d["binary"] = r.binary;
    d["source"] = std::string(source_name(r.source));
    d["diagnostic"] = r.diagnostic;
    return d;
}

}  // namespace

PYBIND11_MODULE(_rlcs, m) {
    m.doc() = "Reward verification, curriculum sampling and scheduling primitives";

    PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
    error_type.call_once_and_store_result(
        [&]() { return py::exception<Error>(m, "RlcsError", PyExc_ValueError); });
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error_type.get_stored(), (std::string(errc_name(e.code())) + ": " + e.what()).c_str());
        }
    });

    m.def(
        "parse_response",
        [](const std::string& raw, bool thinking) {
            const auto r = parse_response(raw, thinking ? ResponseMode::thinking : ResponseMode::non_thinking);
            py::dict d;
            d["think"] = r.think_content;
            d["answer"] = r.answer_content;
            d["boxed"] = extract_boxed(r.answer_content);
            d["tokens"] = surrogate_token_count(raw);
            return d;
        },
        py::arg("raw"), py::arg("thinking") = true);
    m.def("render_response", &render_response, py::arg("think"), py::arg("answer"), py::arg("answer_tags") = true);
    m.def("extract_boxed", &extract_boxed, py::arg("answer"));

    m.def(
        "score",
        [](const std::string& domain, const std::string& reference, const std::string& candidate,
           const std::string& question, bool verifiable, const std::optional<std::string>& config_json) {
            const auto cfg = config_from(config_json);
            const auto judge = make_judge(cfg.judge);
            const RewardRequest req{parse_domain(domain), question, reference, candidate, verifiable};
            RewardResult r;
            {
                py::gil_scoped_release release;
                r = score(req, *judge, cfg.reward);
            }
            return result_dict(r);
        },
        py::arg("domain"), py::arg("reference"), py::arg("candidate"), py::arg("question") = "",
        py::arg("verifiable") = true, py::arg("config_json") = py::none());
    m.def(
        "edit_distance",
        [](const std::string& a, const std::string& b) { return edit_distance(text::decode_utf8(a), text::decode_utf8(b)); },
        py::arg("a"), py::arg("b"));
    m.def(
        "verify_ocr", [](const std::string& c, const std::string& r) { return verify_ocr(c, r).score; },
        py::arg("candidate"), py::arg("reference"));
    m.def(
        "iou", [](const BoxTuple& a, const BoxTuple& b) { return iou(to_box(a), to_box(b)); }, py::arg("a"),
        py::arg("b"));
    m.def(
        "verify_grounding",
        [](const std::vector<BoxTuple>& pred, const std::vector<BoxTuple>& gt, double tau, bool optimal) {
            return verify_grounding(to_boxes(pred), to_boxes(gt), tau,
                                    optimal ? GroundingMatch::optimal : GroundingMatch::greedy)
                .score;
        },
        py::arg("pred"), py::arg("gt"), py::arg("tau") = 0.5, py::arg("optimal") = false);

    m.def("compute_ratio", &compute_ratio, py::arg("not_valid_rate"), py::arg("cap") = 4.0);
    m.def(
        "update_ema",
        [](double ema, double ratio, double beta, double cap) {
            ExpansionState st;
            st.ema = ema;
            st.beta = beta;
            st.cap = cap;
            st.validate();
            return update_ema(st, ratio).ema;
        },
        py::arg("ema"), py::arg("ratio"), py::arg("beta") = 0.9, py::arg("cap") = 4.0);
    m.def(
        "group_advantages", [](const std::vector<double>& r, double eps) { return group_advantages(r, eps); },
        py::arg("rewards"), py::arg("eps") = 1e-6);
    m.def(
        "reweight",
        [](const std::vector<std::size_t>& populations) { return reweight(CurriculumState{}, populations).tier_weights; },
        py::arg("populations"));

    m.def(
        "balance_ranks",
        [](const std::vector<double>& costs, int ranks) {
            std::vector<WorkItem> items;
            for (std::size_t i = 0; i < costs.size(); ++i) items.push_back({std::to_string(i), 1, costs[i]});
            const auto a = balance_ranks(items, ranks);
            return std::make_pair(a.rank_of, a.loads);
        },
        py::arg("costs"), py::arg("ranks"));
    m.def(
        "pack_microsteps",
        [](const std::vector<std::int64_t>& lengths, std::int64_t capacity) {
            std::vector<WorkItem> items;
            for (std::size_t i = 0; i < lengths.size(); ++i)
                items.push_back({std::to_string(i), lengths[i], static_cast<double>(lengths[i])});
            std::vector<std::vector<std::size_t>> bins;
            for (const auto& b : pack_microsteps(items, capacity).bins) {
                auto& out = bins.emplace_back();
                for (const auto& id : b) out.push_back(std::stoul(id));
            }
            return bins;
        },
        py::arg("lengths"), py::arg("capacity") = default_context_length);
    m.def(
        "weighted_gradient",
        [](const std::vector<std::pair<double, std::int64_t>>& micro) {
            std::vector<MicroValue> v;
            for (const auto& [value, n] : micro) v.push_back({value, n});
            return weighted_gradient(v);
        },
        py::arg("micro_values"));

    m.def(
        "adapt_table",
        [](const std::vector<std::vector<std::vector<double>>>& table, std::size_t height, std::size_t width, double a) {
            if (table.empty() || table[0].empty()) throw Error(Errc::invalid_argument, "table must be nonempty");
            const std::size_t h = table.size(), w = table[0].size(), d = table[0][0].size();
            std::vector<double> flat;
            for (const auto& row : table) {
                if (row.size() != w) throw Error(Errc::invalid_argument, "ragged table rows");
                for (const auto& cell : row) {
                    if (cell.size() != d) throw Error(Errc::invalid_argument, "ragged table cells");
                    flat.insert(flat.end(), cell.begin(), cell.end());
                }
            }
            const auto out = adapt_table(EmbeddingTable(h, w, d, std::move(flat)), PatchGrid{height, width}, a);
            std::vector<std::vector<std::vector<double>>> res(height, std::vector<std::vector<double>>(width));
            for (std::size_t i = 0; i < height; ++i)
                for (std::size_t j = 0; j < width; ++j) {
                    const auto v = out.at(i, j);
                    res[i][j].assign(v.begin(), v.end());
                }
            return res;
        },
        py::arg("table"), py::arg("height"), py::arg("width"), py::arg("a") = -0.5);

    m.def(
        "simulate",
        [](const std::optional<std::string>& config_json, std::optional<int> iterations,
           std::optional<std::uint64_t> seed) {
            auto cfg = config_from(config_json);
            if (seed) cfg.seed = *seed;
            const int iters = iterations.value_or(cfg.iterations);
            const auto judge = make_judge(cfg.judge);
            ExperimentResult res;
            {
                py::gil_scoped_release release;
                res = run_experiment(cfg, synthesize_dataset(cfg), iters, *judge);
            }
            py::dict d;
            d["metrics_csv"] = res.log.to_csv();
            d["events_jsonl"] = res.log.to_jsonl();
            d["final_state_json"] = res.final_state_json();
            d["final_mean_skill"] = res.log.records.empty() ? 0.0 : res.log.records.back().mean_skill;
            return d;
        },
        py::arg("config_json") = py::none(), py::arg("iterations") = py::none(), py::arg("seed") = py::none());
}
