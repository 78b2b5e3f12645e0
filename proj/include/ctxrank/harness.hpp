#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ctxrank/avf.hpp"
#include "ctxrank/comprex.hpp"
#include "ctxrank/context.hpp"
#include "ctxrank/errors.hpp"
#include "ctxrank/fpof.hpp"
#include "ctxrank/io.hpp"
#include "ctxrank/krimp.hpp"
#include "ctxrank/metrics.hpp"
#include "ctxrank/od.hpp"
#include "ctxrank/rng.hpp"
#include "ctxrank/synth.hpp"

namespace ctxrank {

struct ContextSource {
    std::string name;
    std::string path;        // context CSV; empty when synthetic
    std::string truth_path;  // ground truth; empty when synthetic
    std::optional<SyntheticSpec> synthetic;
    std::uint64_t synth_seed = 0;  // 0 means derive from the plan seed
};

struct AlgoSpec {
    std::string name;              // avf | avf-naive | avf-stream | fpof | od | oc3 | comprex
    std::vector<double> minsupp;   // parameter grid where applicable
    std::vector<double> minconf;
};

struct ExperimentPlan {
    std::uint64_t seed = 42;
    double timeout_s = 180.0;
    std::uint64_t itemset_cap = 5'000'000;
    std::uint32_t jobs = 1;
    std::uint32_t shuffles = 10;
    std::vector<double> block_fractions{0.01, 0.05, 0.10, 0.25};
    std::string out_dir;
    std::vector<ContextSource> contexts;
    std::vector<AlgoSpec> algorithms;
};

struct CellResult {
    std::string cell_id;
    std::string context;
    std::string algorithm;
    std::string params;      // "-" when none
    std::string block;       // block size/fraction for streaming cells, "" otherwise
    std::string status;      // ok | dnf | error
    std::string reason;      // DNF/error detail
    double ndcg = std::nan("");
    double auc = std::nan("");
    std::uint64_t n = 0, m = 0, attacks = 0;
    std::uint32_t shuffles = 0;
    bool median_based = false;
    std::uint64_t wall_ms = 0;
};

/// Row permutation for shuffle `shuffle_index` of context `ctx_index` under
/// the plan seed. Exposed so tests can reproduce a harness run exactly.
inline std::vector<std::size_t> shuffle_order(std::uint64_t seed, std::size_t ctx_index,
                                              std::size_t shuffle_index, std::size_t n) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(mix_seed(mix_seed(seed, ctx_index), 0x5151 + shuffle_index));
    rng.shuffle(order);
    return order;
}

inline Context permute_rows(const Context& ctx, const std::vector<std::size_t>& order) {
    Context out;
    out.name = ctx.name;
    out.attributes = ctx.attributes;
    out.row_ids.reserve(ctx.row_count());
    out.rows.reserve(ctx.row_count());
    for (std::size_t i : order) {
        out.row_ids.push_back(ctx.row_ids[i]);
        out.rows.push_back(ctx.rows[i]);
    }
    return out;
}

namespace detail {

struct LoadedContext {
    std::string name;
    Context ctx;
    GroundTruth truth;
};

inline LoadedContext materialize(const ContextSource& src, std::uint64_t plan_seed,
                                 std::size_t index) {
    LoadedContext out;
    if (src.synthetic) {
        std::uint64_t seed =
            src.synth_seed != 0 ? src.synth_seed : mix_seed(plan_seed, 0xdada + index);
        auto data = generate_synthetic(*src.synthetic, seed);
        out.ctx = std::move(data.context);
        out.truth = std::move(data.truth);
    } else {
        out.ctx = load_context(src.path);
        if (!src.truth_path.empty()) out.truth = load_ground_truth(src.truth_path);
    }
    out.name = src.name.empty() ? out.ctx.name : src.name;
    out.ctx.name = out.name;
    return out;
}

inline std::string format_params(std::optional<double> minsupp, std::optional<double> minconf) {
    std::ostringstream os;
    if (minsupp) os << "minsupp=" << *minsupp;
    if (minconf) os << (minsupp ? "," : "") << "minconf=" << *minconf;
    auto s = os.str();
    return s.empty() ? "-" : s;
}

template <class Fn>
void parallel_cells(std::size_t count, std::uint32_t jobs, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::uint32_t spawn = std::min<std::uint32_t>(jobs, static_cast<std::uint32_t>(count));
    for (std::uint32_t w = 0; w < spawn; ++w) {
        workers.emplace_back([&]() {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& w : workers) w.join();
}

}  // namespace detail

/// Runs one scorer cell. Timeouts and resource caps surface as DNF, metric
/// degeneracies as error cells; neither aborts the suite.
inline CellResult run_batch_cell(const Context& ctx, const GroundTruth& truth,
                                 const std::string& algo, std::optional<double> minsupp,
                                 std::optional<double> minconf, double timeout_s,
                                 std::uint64_t itemset_cap) {
    CellResult cell;
    cell.context = ctx.name;
    cell.algorithm = algo;
    cell.params = detail::format_params(minsupp, minconf);
    cell.cell_id = ctx.name + "|" + algo + "|" + cell.params;
    cell.n = ctx.row_count();
    cell.m = ctx.attribute_count();

    RunLimits limits = RunLimits::with_timeout(timeout_s, itemset_cap);
    auto start = std::chrono::steady_clock::now();
    try {
        ScoreVector scores;
        if (algo == "avf") {
            scores = avf_batch(ctx, limits);
        } else if (algo == "avf-naive") {
            scores = avf_naive_stream(ctx, limits);
        } else if (algo == "fpof") {
            scores = fpof_scores(ctx, minsupp.value_or(0.5), limits);
        } else if (algo == "od") {
            scores = od_scores(ctx, minsupp.value_or(0.5), minconf.value_or(0.97), limits);
        } else if (algo == "oc3") {
            KrimpOptions opt;
            opt.limits = limits;
            scores = oc3_scores(ctx, opt);
        } else if (algo == "comprex") {
            ComprexOptions opt;
            opt.krimp.limits = limits;
            scores = comprex_scores(ctx, opt);
        } else {
            throw ConfigError("unknown algorithm: '" + algo + "'");
        }
        Ranking ranking = rank(scores, truth, TiePolicy::average_rank);
        cell.attacks = ranking.attack_count;
        cell.ndcg = ndcg(ranking);
        cell.auc = auc(ranking);
        cell.status = "ok";
    } catch (const TimeoutError& e) {
        cell.status = "dnf";
        cell.reason = std::string("timeout: ") + e.what();
    } catch (const ResourceLimitError& e) {
        cell.status = "dnf";
        cell.reason = std::string("resource cap: ") + e.what();
    } catch (const std::exception& e) {
        cell.status = "error";
        cell.reason = e.what();
    }
    cell.wall_ms = static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                  std::chrono::steady_clock::now() - start)
                                                  .count());
    return cell;
}

/// Streaming protocol for one (context, block fraction) cell: score each
/// seeded shuffle with streaming AVF, take each attack's lower-median rank
/// across shuffles, and compute nDCG/AUC on the median-rank ordering.
inline CellResult run_stream_cell(const Context& ctx, const GroundTruth& truth,
                                  std::size_t ctx_index, double block_fraction,
                                  std::uint32_t shuffles, std::uint64_t seed,
                                  double timeout_s) {
    CellResult cell;
    cell.context = ctx.name;
    cell.algorithm = "avf-stream";
    cell.params = "-";
    {
        std::ostringstream os;
        os << block_fraction;
        cell.block = os.str();
    }
    cell.cell_id = ctx.name + "|avf-stream|block=" + cell.block;
    cell.n = ctx.row_count();
    cell.m = ctx.attribute_count();
    cell.shuffles = shuffles;
    cell.median_based = true;

    auto start = std::chrono::steady_clock::now();
    try {
        std::uint64_t block_size =
            block_fraction >= 1.0
                ? static_cast<std::uint64_t>(block_fraction)
                : static_cast<std::uint64_t>(
                      std::ceil(block_fraction * static_cast<double>(ctx.row_count())));
        block_size = std::max<std::uint64_t>(1, block_size);

        std::unordered_map<std::string, std::vector<std::uint64_t>> ranks_per_attack;
        for (std::uint32_t s = 0; s < shuffles; ++s) {
            Context shuffled =
                permute_rows(ctx, shuffle_order(seed, ctx_index, s, ctx.row_count()));
            AvfStreamOptions opt;
            opt.block_size = block_size;
            opt.limits = RunLimits::with_timeout(timeout_s);
            ScoreVector scores = avf_stream(shuffled, opt);
            Ranking ranking = rank(scores, truth, TiePolicy::average_rank);
            cell.attacks = ranking.attack_count;
            for (std::size_t i = 0; i < ranking.ordered_ids.size(); ++i)
                if (ranking.labels[i]) ranks_per_attack[ranking.ordered_ids[i]].push_back(i + 1);
        }
        std::vector<std::uint64_t> medians;
        for (const auto& id : truth.attack_ids) {
            auto it = ranks_per_attack.find(id);
            if (it != ranks_per_attack.end()) medians.push_back(lower_median(it->second));
        }
        auto metrics = metrics_from_attack_positions(medians, ctx.row_count());
        cell.ndcg = metrics.ndcg;
        cell.auc = metrics.auc;
        cell.status = "ok";
    } catch (const TimeoutError& e) {
        cell.status = "dnf";
        cell.reason = std::string("timeout: ") + e.what();
    } catch (const std::exception& e) {
        cell.status = "error";
        cell.reason = e.what();
    }
    cell.wall_ms = static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                  std::chrono::steady_clock::now() - start)
                                                  .count());
    return cell;
}

/// Hooks for resumable runs: `skip` returns a cached result for a cell id,
/// `sink` observes each freshly computed cell (called under a lock).
struct SuiteHooks {
    std::function<std::optional<CellResult>(const std::string&)> skip;
    std::function<void(const CellResult&)> sink;
};

namespace detail {

inline std::string batch_cell_id(const std::string& ctx, const std::string& algo,
                                 const std::string& params) {
    return ctx + "|" + algo + "|" + params;
}

template <class Runner>
std::vector<CellResult> run_cells(std::size_t count, std::uint32_t jobs,
                                  const SuiteHooks& hooks,
                                  const std::vector<std::string>& ids, Runner&& runner) {
    std::vector<CellResult> results(count);
    std::mutex sink_mutex;
    parallel_cells(count, jobs, [&](std::size_t i) {
        if (hooks.skip) {
            if (auto cached = hooks.skip(ids[i])) {
                results[i] = *cached;
                return;
            }
        }
        results[i] = runner(i);
        if (hooks.sink) {
            std::lock_guard<std::mutex> lock(sink_mutex);
            hooks.sink(results[i]);
        }
    });
    return results;
}

}  // namespace detail

/// Every (context, algorithm, params) cell of the plan's batch algorithms.
inline std::vector<CellResult> run_batch_suite(const ExperimentPlan& plan,
                                               const SuiteHooks& hooks = {}) {
    std::vector<detail::LoadedContext> loaded;
    for (std::size_t i = 0; i < plan.contexts.size(); ++i)
        loaded.push_back(detail::materialize(plan.contexts[i], plan.seed, i));

    struct Job {
        std::size_t ctx;
        std::string algo;
        std::optional<double> minsupp, minconf;
    };
    std::vector<Job> jobs;
    std::vector<std::string> ids;
    for (std::size_t c = 0; c < loaded.size(); ++c) {
        for (const auto& algo : plan.algorithms) {
            if (algo.name == "avf-stream") continue;  // handled by the stream suite
            if (algo.name == "od") {
                auto sups = algo.minsupp.empty() ? std::vector<double>{0.5} : algo.minsupp;
                auto confs = algo.minconf.empty() ? std::vector<double>{0.97} : algo.minconf;
                for (double s : sups)
                    for (double cf : confs) jobs.push_back({c, algo.name, s, cf});
            } else if (algo.name == "fpof") {
                auto sups = algo.minsupp.empty() ? std::vector<double>{0.5} : algo.minsupp;
                for (double s : sups) jobs.push_back({c, algo.name, s, std::nullopt});
            } else {
                jobs.push_back({c, algo.name, std::nullopt, std::nullopt});
            }
        }
    }
    ids.reserve(jobs.size());
    for (const auto& job : jobs)
        ids.push_back(detail::batch_cell_id(loaded[job.ctx].name, job.algo,
                                            detail::format_params(job.minsupp, job.minconf)));

    return detail::run_cells(jobs.size(), plan.jobs, hooks, ids, [&](std::size_t i) {
        const Job& job = jobs[i];
        return run_batch_cell(loaded[job.ctx].ctx, loaded[job.ctx].truth, job.algo, job.minsupp,
                              job.minconf, plan.timeout_s, plan.itemset_cap);
    });
}

/// Streaming suite: every (context, block fraction) median-rank cell plus
/// one batch AVF reference cell per context.
inline std::vector<CellResult> run_stream_suite(const ExperimentPlan& plan,
                                                const SuiteHooks& hooks = {}) {
    std::vector<detail::LoadedContext> loaded;
    for (std::size_t i = 0; i < plan.contexts.size(); ++i)
        loaded.push_back(detail::materialize(plan.contexts[i], plan.seed, i));

    struct Job {
        std::size_t ctx;
        double fraction = 0.0;
        bool batch_reference = false;
    };
    std::vector<Job> jobs;
    std::vector<std::string> ids;
    for (std::size_t c = 0; c < loaded.size(); ++c) {
        for (double f : plan.block_fractions) {
            jobs.push_back({c, f, false});
            std::ostringstream os;
            os << f;
            ids.push_back(detail::batch_cell_id(loaded[c].name, "avf-stream",
                                                "block=" + os.str()));
        }
        jobs.push_back({c, 0.0, true});
        ids.push_back(detail::batch_cell_id(loaded[c].name, "avf", "-"));
    }

    return detail::run_cells(jobs.size(), plan.jobs, hooks, ids, [&](std::size_t i) {
        const Job& job = jobs[i];
        const auto& lc = loaded[job.ctx];
        if (job.batch_reference)
            return run_batch_cell(lc.ctx, lc.truth, "avf", std::nullopt, std::nullopt,
                                  plan.timeout_s, plan.itemset_cap);
        return run_stream_cell(lc.ctx, lc.truth, job.ctx, job.fraction, plan.shuffles, plan.seed,
                               plan.timeout_s);
    });
}

inline nlohmann::json cell_to_json(const CellResult& cell) {
    nlohmann::json obj;
    obj["cell_id"] = cell.cell_id;
    obj["context"] = cell.context;
    obj["algorithm"] = cell.algorithm;
    obj["params"] = cell.params;
    obj["block"] = cell.block;
    obj["status"] = cell.status;
    obj["reason"] = cell.reason;
    if (!std::isnan(cell.ndcg)) obj["ndcg"] = cell.ndcg;
    if (!std::isnan(cell.auc)) obj["auc"] = cell.auc;
    obj["n"] = cell.n;
    obj["m"] = cell.m;
    obj["attacks"] = cell.attacks;
    obj["shuffles"] = cell.shuffles;
    obj["median_based"] = cell.median_based;
    obj["wall_ms"] = cell.wall_ms;
    return obj;
}

inline CellResult cell_from_json(const nlohmann::json& obj) {
    CellResult cell;
    cell.cell_id = obj.value("cell_id", "");
    cell.context = obj.value("context", "");
    cell.algorithm = obj.value("algorithm", "");
    cell.params = obj.value("params", "-");
    cell.block = obj.value("block", "");
    cell.status = obj.value("status", "");
    cell.reason = obj.value("reason", "");
    cell.ndcg = obj.contains("ndcg") ? obj["ndcg"].get<double>() : std::nan("");
    cell.auc = obj.contains("auc") ? obj["auc"].get<double>() : std::nan("");
    cell.n = obj.value("n", 0ULL);
    cell.m = obj.value("m", 0ULL);
    cell.attacks = obj.value("attacks", 0ULL);
    cell.shuffles = obj.value("shuffles", 0U);
    cell.median_based = obj.value("median_based", false);
    cell.wall_ms = obj.value("wall_ms", 0ULL);
    return cell;
}

inline void write_report_csv(const std::vector<CellResult>& results, std::ostream& out) {
    out << "context,algorithm,params,ndcg,auc,n,m,attacks,block_size,shuffles,median_based,"
           "wall_ms,status\n";
    auto num = [](double v) {
        if (std::isnan(v)) return std::string();
        std::ostringstream os;
        os.precision(10);
        os << v;
        return os.str();
    };
    for (const auto& c : results) {
        out << c.context << ',' << c.algorithm << ',' << c.params << ',' << num(c.ndcg) << ','
            << num(c.auc) << ',' << c.n << ',' << c.m << ',' << c.attacks << ',' << c.block << ','
            << c.shuffles << ',' << (c.median_based ? "true" : "false") << ',' << c.wall_ms << ','
            << c.status << '\n';
    }
}

/// Executes a plan with per-cell resume: cells already present in the
/// append-only JSONL report are not rerun. Writes report.jsonl and
/// report.csv under out_dir when set.
inline std::vector<CellResult> run_plan(const ExperimentPlan& plan) {
    std::unordered_map<std::string, CellResult> done;
    std::string jsonl_path =
        plan.out_dir.empty() ? std::string() : plan.out_dir + "/report.jsonl";
    if (!jsonl_path.empty()) {
        std::ifstream in(jsonl_path);
        std::string line;
        while (in && std::getline(in, line)) {
            if (line.empty()) continue;
            auto obj = nlohmann::json::parse(line, nullptr, false);
            if (obj.is_discarded()) continue;
            CellResult cell = cell_from_json(obj);
            if (!cell.cell_id.empty()) done[cell.cell_id] = cell;
        }
    }

    bool has_stream = false, has_batch = false;
    for (const auto& a : plan.algorithms)
        (a.name == "avf-stream" ? has_stream : has_batch) = true;

    std::ofstream jsonl;
    if (!jsonl_path.empty()) jsonl.open(jsonl_path, std::ios::app);

    SuiteHooks hooks;
    hooks.skip = [&](const std::string& id) -> std::optional<CellResult> {
        auto it = done.find(id);
        if (it == done.end()) return std::nullopt;
        return it->second;
    };
    hooks.sink = [&](const CellResult& cell) {
        if (jsonl.is_open()) {
            jsonl << cell_to_json(cell).dump() << '\n';
            jsonl.flush();
        }
    };

    std::vector<CellResult> results;
    if (has_batch)
        for (auto& cell : run_batch_suite(plan, hooks)) results.push_back(std::move(cell));
    if (has_stream)
        for (auto& cell : run_stream_suite(plan, hooks)) results.push_back(std::move(cell));

    if (!plan.out_dir.empty()) {
        std::ofstream csv(plan.out_dir + "/report.csv");
        if (!csv) throw IoError("cannot write report under " + plan.out_dir);
        write_report_csv(results, csv);
    }
    return results;
}

/// Declarative plan file (JSON).
inline ExperimentPlan plan_from_json(const nlohmann::json& obj) {
    ExperimentPlan plan;
    plan.seed = obj.value("seed", plan.seed);
    plan.timeout_s = obj.value("timeout_s", plan.timeout_s);
    plan.itemset_cap = obj.value("itemset_cap", plan.itemset_cap);
    plan.jobs = obj.value("jobs", plan.jobs);
    plan.shuffles = obj.value("shuffles", plan.shuffles);
    plan.out_dir = obj.value("out_dir", plan.out_dir);
    if (obj.contains("block_fractions"))
        plan.block_fractions = obj["block_fractions"].get<std::vector<double>>();
    if (!obj.contains("contexts") || !obj["contexts"].is_array())
        throw ParseError("plan needs a 'contexts' array");
    for (const auto& c : obj["contexts"]) {
        ContextSource src;
        src.name = c.value("name", "");
        if (c.contains("synthetic")) {
            const auto& s = c["synthetic"];
            SyntheticSpec spec;
            spec.n = s.value("n", spec.n);
            spec.m = s.value("m", spec.m);
            spec.num_patterns = s.value("patterns", spec.num_patterns);
            spec.support_lo = s.value("support_lo", spec.support_lo);
            spec.support_hi = s.value("support_hi", spec.support_hi);
            spec.num_anomalies = s.value("anomalies", spec.num_anomalies);
            spec.noise_prob = s.value("noise_prob", spec.noise_prob);
            if (s.contains("style"))
                spec.style = anomaly_style_from_string(s["style"].get<std::string>());
            src.synthetic = spec;
            src.synth_seed = s.value("seed", 0ULL);
        } else {
            if (!c.contains("path")) throw ParseError("plan context needs 'path' or 'synthetic'");
            src.path = c["path"].get<std::string>();
            src.truth_path = c.value("truth", "");
        }
        plan.contexts.push_back(std::move(src));
    }
    if (!obj.contains("algorithms") || !obj["algorithms"].is_array())
        throw ParseError("plan needs an 'algorithms' array");
    for (const auto& a : obj["algorithms"]) {
        AlgoSpec algo;
        algo.name = a.at("name").get<std::string>();
        if (a.contains("minsupp")) {
            if (a["minsupp"].is_array())
                algo.minsupp = a["minsupp"].get<std::vector<double>>();
            else
                algo.minsupp = {a["minsupp"].get<double>()};
        }
        if (a.contains("minconf")) {
            if (a["minconf"].is_array())
                algo.minconf = a["minconf"].get<std::vector<double>>();
            else
                algo.minconf = {a["minconf"].get<double>()};
        }
        plan.algorithms.push_back(std::move(algo));
    }
    return plan;
}

inline ExperimentPlan load_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open plan file: " + path);
    nlohmann::json obj = nlohmann::json::parse(in, nullptr, false);
    if (obj.is_discarded()) throw ParseError("plan file is not valid JSON: " + path);
    return plan_from_json(obj);
}

}  // namespace ctxrank
