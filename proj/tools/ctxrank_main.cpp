// ctxrank: extract Boolean behavioral contexts from process event logs and
// rank processes by anomaly with unsupervised categorical detectors.
//
// Exit codes: 0 success, 2 input/parse errors, 3 resource cap or timeout,
// 4 contract violations and usage errors.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctxrank/avf.hpp"
#include "ctxrank/comprex.hpp"
#include "ctxrank/context.hpp"
#include "ctxrank/errors.hpp"
#include "ctxrank/events.hpp"
#include "ctxrank/fpof.hpp"
#include "ctxrank/harness.hpp"
#include "ctxrank/io.hpp"
#include "ctxrank/itemset.hpp"
#include "ctxrank/krimp.hpp"
#include "ctxrank/metrics.hpp"
#include "ctxrank/od.hpp"
#include "ctxrank/rational.hpp"
#include "ctxrank/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitResource = 3;
constexpr int kExitContract = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string render_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

int cmd_extract(const std::string& events_path, const std::string& kind,
                const std::string& out_dir) {
    auto events = ctxrank::read_events_jsonl(events_path);
    std::filesystem::create_directories(out_dir);

    std::vector<ctxrank::Context> written;
    auto write_one = [&](const ctxrank::Context& ctx) {
        std::string path = out_dir + "/" + ctx.name + ".csv";
        ctxrank::save_context(ctx, path);
        std::cout << ctx.name << ',' << ctx.row_count() << ',' << ctx.attribute_count() << ','
                  << path << '\n';
    };

    if (kind == "all") {
        for (auto k : {ctxrank::ContextKind::pe, ctxrank::ContextKind::px,
                       ctxrank::ContextKind::pp, ctxrank::ContextKind::pn})
            written.push_back(ctxrank::extract_context(events, k));
        for (const auto& ctx : written) write_one(ctx);
        auto joined = ctxrank::join_contexts(written, "PA");
        write_one(joined);
    } else {
        write_one(ctxrank::extract_context(events, ctxrank::context_kind_from_string(kind)));
    }
    return kExitOk;
}

int cmd_score(const std::string& context_path, const std::string& algo,
              std::optional<double> minsupp, std::optional<double> minconf, double block,
              const std::string& precision, const std::string& out_path, double timeout_s,
              std::uint64_t itemset_cap) {
    if (precision != "float" && precision != "rational")
        throw UsageError("--precision must be float or rational");
    auto ctx = ctxrank::load_context(context_path);

    ctxrank::RunLimits limits;
    limits.itemset_cap = itemset_cap;
    if (timeout_s > 0) limits = ctxrank::RunLimits::with_timeout(timeout_s, itemset_cap);

    const bool rational = precision == "rational";
    std::uint64_t block_size =
        block >= 1.0 ? static_cast<std::uint64_t>(block)
                     : std::max<std::uint64_t>(
                           1, static_cast<std::uint64_t>(
                                  std::ceil(block * static_cast<double>(ctx.row_count()))));

    ctxrank::Polarity polarity = ctxrank::Polarity::low_is_anomalous;
    std::vector<std::string> rendered;
    std::vector<std::string> params;

    auto render_values = [&](auto&& values) {
        for (const auto& v : values) {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, ctxrank::Rational>)
                rendered.push_back(v.to_string());
            else
                rendered.push_back(render_double(v));
        }
    };

    if (algo == "avf") {
        if (rational)
            render_values(ctxrank::avf_batch_values<ctxrank::Rational>(ctx, limits));
        else
            render_values(ctxrank::avf_batch_values<double>(ctx, limits));
    } else if (algo == "avf-naive") {
        if (rational)
            render_values(ctxrank::avf_naive_stream_values<ctxrank::Rational>(ctx, limits));
        else
            render_values(ctxrank::avf_naive_stream_values<double>(ctx, limits));
    } else if (algo == "avf-stream") {
        ctxrank::AvfStreamOptions opt;
        opt.block_size = block_size;
        opt.limits = limits;
        params.push_back("block=" + std::to_string(block_size));
        if (rational)
            render_values(ctxrank::avf_stream_values<ctxrank::Rational>(ctx, opt));
        else
            render_values(ctxrank::avf_stream_values<double>(ctx, opt));
    } else if (algo == "fpof") {
        if (!minsupp) throw UsageError("fpof requires --minsupp (fraction in (0,1])");
        params.push_back("minsupp=" + render_double(*minsupp));
        auto frequents = ctxrank::mine_frequent(ctx, *minsupp, limits);
        if (frequents.empty())
            std::cerr << "warning: no frequent itemsets; all scores are 0\n";
        if (rational)
            render_values(
                ctxrank::fpof_values<ctxrank::Rational>(ctx, *minsupp, frequents, limits));
        else
            render_values(ctxrank::fpof_values<double>(ctx, *minsupp, frequents, limits));
    } else if (algo == "od") {
        if (!minsupp) throw UsageError("od requires --minsupp (fraction in (0,1])");
        if (!minconf) throw UsageError("od requires --minconf (fraction in (0,1])");
        polarity = ctxrank::Polarity::high_is_anomalous;
        params.push_back("minsupp=" + render_double(*minsupp));
        params.push_back("minconf=" + render_double(*minconf));
        auto rules = ctxrank::mine_rules(ctxrank::mine_frequent(ctx, *minsupp, limits),
                                         *minconf, limits);
        if (rules.empty()) std::cerr << "warning: no rules mined; all scores are 0\n";
        if (rational)
            render_values(ctxrank::od_values<ctxrank::Rational>(ctx, rules, limits));
        else
            render_values(ctxrank::od_values<double>(ctx, rules, limits));
    } else if (algo == "oc3") {
        if (rational) throw UsageError("oc3 scores are code lengths; only --precision float");
        polarity = ctxrank::Polarity::high_is_anomalous;
        if (minsupp) params.push_back("minsupp=" + render_double(*minsupp));
        ctxrank::KrimpOptions opt;
        opt.minsupp = minsupp.value_or(0.0);
        opt.limits = limits;
        auto scores = ctxrank::oc3_scores(ctx, opt);
        for (const auto& w : scores.warnings) std::cerr << "warning: " << w << '\n';
        render_values(scores.scores);
    } else if (algo == "comprex") {
        if (rational) throw UsageError("comprex scores are code lengths; only --precision float");
        polarity = ctxrank::Polarity::high_is_anomalous;
        ctxrank::ComprexOptions opt;
        opt.krimp.limits = limits;
        auto scores = ctxrank::comprex_scores(ctx, opt);
        for (const auto& w : scores.warnings) std::cerr << "warning: " << w << '\n';
        render_values(scores.scores);
    } else {
        throw UsageError("unknown --algo '" + algo +
                         "' (expected avf, avf-stream, avf-naive, fpof, od, oc3, comprex)");
    }

    std::string joined_params;
    for (std::size_t i = 0; i < params.size(); ++i)
        joined_params += (i ? "," : "") + params[i];

    if (out_path.empty() || out_path == "-") {
        ctxrank::save_scores(std::cout, ctx.row_ids, rendered, polarity, algo, joined_params,
                             precision);
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw ctxrank::IoError("cannot write scores file: " + out_path);
        ctxrank::save_scores(out, ctx.row_ids, rendered, polarity, algo, joined_params,
                             precision);
    }
    return kExitOk;
}

int cmd_evaluate(const std::string& scores_path, const std::string& truth_path,
                 const std::string& tie, const std::string& curve_out,
                 const std::string& bands_out) {
    auto scores = ctxrank::load_scores(scores_path);
    auto truth = ctxrank::load_ground_truth(truth_path);
    ctxrank::TiePolicy policy =
        tie == "stable" ? ctxrank::TiePolicy::stable : ctxrank::TiePolicy::average_rank;

    ctxrank::Ranking ranking;
    if (scores.all_exact) {
        ranking = ctxrank::rank_exact(scores.row_ids, scores.exact, scores.polarity, truth,
                                      policy);
    } else {
        ctxrank::ScoreVector sv;
        sv.polarity = scores.polarity;
        sv.row_ids = scores.row_ids;
        sv.scores = scores.values;
        ranking = ctxrank::rank(sv, truth, policy);
    }

    nlohmann::json out;
    out["n"] = ranking.labels.size();
    out["attacks"] = ranking.attack_count;
    out["tie_policy"] = tie;
    out["unmatched_truth_ids"] = ranking.unmatched_truth;
    try {
        out["ndcg"] = ctxrank::ndcg(ranking);
        out["auc"] = ctxrank::auc(ranking);
    } catch (const ctxrank::UndefinedMetricError& e) {
        throw ctxrank::ParseError(std::string("metrics undefined: ") + e.what());
    }
    if (!ranking.unmatched_truth.empty())
        out["warnings"] = {"ground truth ids missing from the scored rows"};

    if (!curve_out.empty()) {
        std::ofstream c(curve_out);
        if (!c) throw ctxrank::IoError("cannot write " + curve_out);
        c << "fraction_inspected,fraction_attacks_found\n";
        for (auto [x, y] : ctxrank::tp_curve(ranking)) c << x << ',' << y << '\n';
    }
    if (!bands_out.empty()) {
        std::ofstream b(bands_out);
        if (!b) throw ctxrank::IoError("cannot write " + bands_out);
        b << "attack_rank\n";
        for (auto pos : ctxrank::band_positions(ranking)) b << pos << '\n';
    }
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

int cmd_bench(const std::string& plan_path, const std::string& out_dir, unsigned jobs) {
    auto plan = ctxrank::load_plan(plan_path);
    if (!out_dir.empty()) plan.out_dir = out_dir;
    if (jobs > 0) plan.jobs = jobs;
    if (!plan.out_dir.empty()) std::filesystem::create_directories(plan.out_dir);
    auto results = ctxrank::run_plan(plan);
    ctxrank::write_report_csv(results, std::cout);
    return kExitOk;
}

int cmd_synth(std::uint64_t n, std::uint64_t m, unsigned patterns, std::uint64_t anomalies,
              const std::string& style, double lo, double hi, double noise, std::uint64_t seed,
              const std::string& out_path, const std::string& truth_path) {
    ctxrank::SyntheticSpec spec;
    spec.n = n;
    spec.m = m;
    spec.num_patterns = patterns;
    spec.num_anomalies = anomalies;
    spec.style = ctxrank::anomaly_style_from_string(style);
    spec.support_lo = lo;
    spec.support_hi = hi;
    spec.noise_prob = noise;
    auto data = ctxrank::generate_synthetic(spec, seed);
    ctxrank::save_context(data.context, out_path);
    if (!truth_path.empty()) {
        std::ofstream t(truth_path);
        if (!t) throw ctxrank::IoError("cannot write " + truth_path);
        for (const auto& id : data.truth.attack_ids) t << id << '\n';
    }
    std::cout << "synthetic," << data.context.row_count() << ','
              << data.context.attribute_count() << ',' << data.truth.attack_ids.size() << ','
              << out_path << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"context extraction and categorical anomaly ranking for process event logs"};
    app.require_subcommand(1);

    std::string events_path, kind = "all", out_dir = ".";
    auto* extract = app.add_subcommand("extract", "build PE/PX/PP/PN (and PA) context CSVs");
    extract->add_option("--events", events_path, "JSON-lines event log")->required();
    extract->add_option("--kind", kind, "pe|px|pp|pn|all");
    extract->add_option("--out-dir", out_dir, "output directory");

    std::string context_path, algo, precision = "float", score_out;
    std::optional<double> minsupp, minconf;
    double block = 1.0, timeout_s = 0.0;
    std::uint64_t itemset_cap = 5'000'000;
    auto* score = app.add_subcommand("score", "score a context CSV with one algorithm");
    score->add_option("context", context_path, "context CSV path")->required();
    score->add_option("--algo", algo, "avf|avf-stream|avf-naive|fpof|od|oc3|comprex")->required();
    score->add_option("--minsupp", minsupp, "support threshold in (0,1]");
    score->add_option("--minconf", minconf, "confidence threshold in (0,1]");
    score->add_option("--block", block, "streaming block: fraction (<1) or absolute size")
        ->envname("CTXRANK_BLOCK");
    score->add_option("--precision", precision, "float|rational");
    score->add_option("--out", score_out, "scores CSV (default stdout)");
    score->add_option("--timeout-s", timeout_s, "cooperative timeout, 0 = off")
        ->envname("CTXRANK_TIMEOUT_S");
    score->add_option("--itemset-cap", itemset_cap, "mining resource cap");

    std::string scores_path, truth_path, tie = "average", curve_out, bands_out;
    auto* evaluate = app.add_subcommand("evaluate", "compute nDCG/AUC for a scores file");
    evaluate->add_option("--scores", scores_path, "scores CSV from `score`")->required();
    evaluate->add_option("--truth", truth_path, "ground truth id list")->required();
    evaluate->add_option("--tie-policy", tie, "stable|average");
    evaluate->add_option("--curve-out", curve_out, "write detection curve CSV");
    evaluate->add_option("--bands-out", bands_out, "write attack rank list CSV");

    std::string plan_path, bench_out;
    unsigned bench_jobs = 0;
    auto* bench = app.add_subcommand("bench", "run an experiment plan (JSON)");
    bench->add_option("--plan", plan_path, "plan JSON file")->required();
    bench->add_option("--out-dir", bench_out, "report directory (overrides plan)");
    bench->add_option("--jobs", bench_jobs, "worker count (overrides plan)")
        ->envname("CTXRANK_JOBS");

    std::uint64_t sy_n = 1000, sy_m = 20, sy_anomalies = 0, sy_seed = 42;
    unsigned sy_patterns = 4;
    double sy_lo = 0.1, sy_hi = 0.4, sy_noise = 0.05;
    std::string sy_style = "rare-singleton", sy_out = "synthetic.csv", sy_truth;
    auto* synth = app.add_subcommand("synth", "generate a planted-anomaly synthetic context");
    synth->add_option("--n", sy_n, "rows");
    synth->add_option("--m", sy_m, "attributes");
    synth->add_option("--patterns", sy_patterns, "background patterns");
    synth->add_option("--anomalies", sy_anomalies, "planted anomalies (0 = n/1000)");
    synth->add_option("--style", sy_style, "rare-singleton|rare-combination|missing-expected");
    synth->add_option("--support-lo", sy_lo, "pattern weight range low");
    synth->add_option("--support-hi", sy_hi, "pattern weight range high");
    synth->add_option("--noise", sy_noise, "leftover-column noise probability");
    synth->add_option("--seed", sy_seed, "generator seed")->envname("CTXRANK_SEED");
    synth->add_option("--out", sy_out, "context CSV path");
    synth->add_option("--truth-out", sy_truth, "ground truth path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitContract;
    }

    try {
        if (extract->parsed()) return cmd_extract(events_path, kind, out_dir);
        if (score->parsed())
            return cmd_score(context_path, algo, minsupp, minconf, block, precision, score_out,
                             timeout_s, itemset_cap);
        if (evaluate->parsed())
            return cmd_evaluate(scores_path, truth_path, tie, curve_out, bands_out);
        if (bench->parsed()) return cmd_bench(plan_path, bench_out, bench_jobs);
        if (synth->parsed())
            return cmd_synth(sy_n, sy_m, sy_patterns, sy_anomalies, sy_style, sy_lo, sy_hi,
                             sy_noise, sy_seed, sy_out, sy_truth);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitContract;
    } catch (const ctxrank::TimeoutError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitResource;
    } catch (const ctxrank::ResourceLimitError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitResource;
    } catch (const ctxrank::ContractViolation& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitContract;
    } catch (const ctxrank::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitContract;
    } catch (const ctxrank::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ctxrank::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitOk;
}
