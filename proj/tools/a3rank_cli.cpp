// a3rank command-line interface.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 insufficient data for
// a detector when --strict is given.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "a3rank/a3rank.hpp"

namespace fs = std::filesystem;
using namespace a3rank;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInsufficient = 3;

struct GlobalOptions {
    std::uint64_t seed = 42;
    std::size_t parallelism = 1;
    std::string output_dir;
    bool strict = false;
};

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot read " + path);
    return f;
}

Dataset load_path(const std::string& path) {
    auto f = open_in(path);
    return load_dataset(f);
}

// Writes to `path`, or stdout when path is empty or "-". Relative paths land
// under --output-dir when one is given.
class Output {
public:
    Output(const std::string& path, const GlobalOptions& g) {
        if (path.empty() || path == "-") return;
        fs::path p(path);
        if (!g.output_dir.empty() && p.is_relative()) {
            fs::create_directories(g.output_dir);
            p = fs::path(g.output_dir) / p;
        }
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        file_.open(p, std::ios::binary);
        if (!file_) throw Error(ErrorKind::Io, "cannot write " + p.string());
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

std::vector<double> parse_thetas(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const double t = csv::parse_double(item);
        RejectorSpec check(t);
        out.push_back(t);
    }
    if (out.empty()) throw Error(ErrorKind::InvariantViolation, "no theta given");
    return out;
}

Budget budget_or_throw(const std::string& s) {
    auto b = parse_budget(s);
    if (!b) throw CLI::ValidationError("--budget", "expected top:<fraction> or cut, got '" + s + "'");
    return *b;
}

RankMethod method_or_throw(const std::string& s) {
    auto m = parse_rank_method(s);
    if (!m) throw CLI::ValidationError("--method", "expected a3|gini|msp|random, got '" + s + "'");
    return *m;
}

nlohmann::ordered_json eval_report(const RankedList& ranked, const Dataset& d, const std::vector<double>& thetas,
                                   const Budget& budget, const std::string& name) {
    const auto stats = dataset_stats(d, thetas);
    const auto omega = budget.resolve(d);
    nlohmann::ordered_json j;
    j["spec_version"] = kReportVersion;
    j["dataset_size"] = stats.size;
    j["failing_count"] = stats.failing;
    j["failing_ratio"] = stats.failing_ratio;
    auto th = nlohmann::ordered_json::array();
    for (double t : thetas) th.push_back(t);
    j["thetas"] = th;
    nlohmann::ordered_json sc, sr;
    for (const auto& [t, s] : stats.by_theta) {
        sc[csv::format_double(t)] = s.subtle;
        sr[csv::format_double(t)] = s.subtle_ratio;
    }
    j["subtle_count_by_theta"] = sc;
    j["subtle_ratio_by_theta"] = sr;
    nlohmann::ordered_json b;
    b["mode"] = budget.mode() == Budget::Mode::Cut ? "cut" : "top";
    if (budget.mode() == Budget::Mode::Top) b["fraction"] = budget.fraction();
    b["omega"] = omega;
    j["budget"] = b;

    nlohmann::ordered_json m;
    const auto base = discovered_counts(ranked, d, omega, RejectorSpec(thetas.front()));
    m["discovered_failing"] = base.failing;
    m["improvement_over_random"] =
        stats.failing > 0 ? nlohmann::ordered_json(improvement_over_random(base.failing, omega, d)) : nullptr;
    nlohmann::ordered_json by_theta;
    for (double t : thetas) {
        const auto c = discovered_counts(ranked, d, omega, RejectorSpec(t));
        nlohmann::ordered_json e;
        e["discovered_subtle"] = c.subtle;
        e["throughput_ratio"] = stats.failing > 0 ? nlohmann::ordered_json(throughput_ratio(c.subtle, d)) : nullptr;
        by_theta[csv::format_double(t)] = e;
    }
    m["by_theta"] = by_theta;
    nlohmann::ordered_json methods;
    methods[name] = m;
    j["methods"] = methods;
    j["definitions"] = definitions_json();
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"a3rank: prioritize confident failing samples of classifiers with a reject option"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions g;
    app.add_option("--seed", g.seed, "Top-level seed for every random choice")->capture_default_str();
    app.add_option("--parallelism", g.parallelism, "Worker threads for per-record scoring")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--output-dir", g.output_dir, "Directory for outputs");
    app.add_flag("--strict", g.strict, "Exit with code 3 when too few subtle samples exist for a detector");

    // score
    auto* score = app.add_subcommand("score", "Per-record alignment breakdown as CSV");
    std::string score_in, score_out;
    score->add_option("--input,input", score_in, "Records (JSONL)")->required();
    score->add_option("--output", score_out, "CSV output (default stdout)");

    // rank
    auto* rank_cmd = app.add_subcommand("rank", "Rank records; a3 and msp ascending, gini descending");
    std::string rank_in, rank_out, rank_method = "a3";
    std::optional<std::uint64_t> rank_seed;
    rank_cmd->add_option("--input,input", rank_in, "Records (JSONL)")->required();
    rank_cmd->add_option("--method", rank_method, "a3|gini|msp|random")->capture_default_str();
    rank_cmd->add_option("--seed", rank_seed, "Seed for --method random (defaults to the global seed)");
    rank_cmd->add_option("--output", rank_out, "CSV output (default stdout)");

    // select
    auto* select = app.add_subcommand("select", "Label the top-omega samples that pass R and keep the failing ones");
    std::string sel_ranked, sel_dataset, sel_labels, sel_out, sel_budget = "top:0.1";
    double sel_theta = 0.9;
    select->add_option("--ranked", sel_ranked, "Ranking CSV")->required();
    select->add_option("--dataset", sel_dataset, "Records (JSONL)")->required();
    select->add_option("--theta", sel_theta, "Rejector threshold; confidence < theta is rejected")->capture_default_str();
    select->add_option("--budget", sel_budget, "top:<fraction> or cut")->capture_default_str();
    select->add_option("--labels", sel_labels, "CSV sample_id,label (default: labels in the records)");
    select->add_option("--output", sel_out, "Subtle set JSONL (default stdout)");

    // decide
    auto* decide = app.add_subcommand("decide", "Two-stage reject decision per record (rejects iff confidence < theta)");
    std::string dec_in, dec_detector, dec_out;
    double dec_theta = 0.9;
    decide->add_option("--input,input", dec_in, "Records (JSONL)")->required();
    decide->add_option("--theta", dec_theta, "Rejector threshold; a sample whose confidence equals theta passes")->required();
    decide->add_option("--detector", dec_detector, "Detector model JSON");
    decide->add_option("--output", dec_out, "CSV output (default stdout)");

    // detector fit|eval
    auto* detector = app.add_subcommand("detector", "Fit or evaluate a one-class detector");
    detector->require_subcommand(1);
    auto* fit = detector->add_subcommand("fit", "Fit on a subtle set");
    std::string fit_in, fit_out, fit_features = "auto";
    double fit_quantile = 0.95;
    std::size_t fit_min = kDefaultMinTrain;
    fit->add_option("--input,input", fit_in, "Subtle set (JSONL)")->required();
    fit->add_option("--quantile", fit_quantile, "Radius quantile in (0, 1]")->capture_default_str();
    fit->add_option("--min-train", fit_min, "Minimum training samples")->capture_default_str();
    fit->add_option("--features", fit_features, "auto|external|derived")->capture_default_str();
    fit->add_option("--output", fit_out, "Model JSON (default stdout)");
    auto* deval = detector->add_subcommand("eval", "Defense success rate on a labeled benchmark");
    std::string deval_model, deval_bench, deval_out;
    double deval_theta = 0.9;
    deval->add_option("--model", deval_model, "Detector model JSON")->required();
    deval->add_option("--benchmark", deval_bench, "Labeled records (JSONL)")->required();
    deval->add_option("--theta", deval_theta, "Rejector threshold")->capture_default_str();
    deval->add_option("--output", deval_out, "JSON output (default stdout)");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Metrics of a ranking on a labeled dataset");
    std::string ev_ranked, ev_dataset, ev_thetas = "0.7,0.8,0.9", ev_budget = "top:0.1", ev_out, ev_conf, ev_name;
    std::size_t ev_topk = 50;
    evaluate->add_option("--ranked", ev_ranked, "Ranking CSV")->required();
    evaluate->add_option("--dataset", ev_dataset, "Labeled records (JSONL)")->required();
    evaluate->add_option("--theta", ev_thetas, "Comma-separated thresholds")->capture_default_str();
    evaluate->add_option("--budget", ev_budget, "top:<fraction> or cut")->capture_default_str();
    evaluate->add_option("--name", ev_name, "Method name in the report (default: ranking file stem)");
    evaluate->add_option("--top-k", ev_topk, "Failing samples in the confidence distribution")->capture_default_str();
    evaluate->add_option("--confidence-out", ev_conf, "confidence-distribution CSV path");
    evaluate->add_option("--output", ev_out, "JSON output (default stdout)");

    // compare
    auto* compare = app.add_subcommand("compare", "Wilcoxon signed-rank test between paired value columns");
    std::string cmp_a, cmp_b, cmp_column = "value", cmp_out;
    compare->add_option("--a", cmp_a, "CSV with a header")->required();
    compare->add_option("--b", cmp_b, "CSV with a header, same row count")->required();
    compare->add_option("--column", cmp_column, "Numeric column to pair by row")->capture_default_str();
    compare->add_option("--output", cmp_out, "JSON output (default stdout)");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate the seeded synthetic world");
    synth::WorldConfig wc;
    std::string synth_out = "world";
    synth_cmd->add_option("--classes", wc.num_classes, "Number of classes")->capture_default_str();
    synth_cmd->add_option("--per-class", wc.per_class, "Points per class in train and eval")->capture_default_str();
    synth_cmd->add_option("--dim", wc.dim, "Input dimension (>= 4 enables the context plane)")->capture_default_str();
    synth_cmd->add_option("--epochs", wc.epochs, "Training epochs")->capture_default_str();
    synth_cmd->add_option("--out", synth_out, "Output directory")->capture_default_str();

    // run
    auto* run = app.add_subcommand("run", "Rank, label, fit the detector, and report");
    std::string run_in, run_method = "a3", run_budget = "top:0.1", run_labels, run_bench;
    double run_theta = 0.9, run_quantile = 0.95;
    std::optional<double> run_holdout;
    std::size_t run_min = kDefaultMinTrain, run_topk = 50;
    run->add_option("--input,input", run_in, "Natural samples (JSONL)")->required();
    run->add_option("--method", run_method, "a3|gini|msp|random")->capture_default_str();
    run->add_option("--budget", run_budget, "top:<fraction> or cut")->capture_default_str();
    run->add_option("--theta", run_theta, "Rejector threshold")->capture_default_str();
    run->add_option("--quantile", run_quantile, "Detector radius quantile")->capture_default_str();
    run->add_option("--min-train", run_min, "Minimum subtle samples for a detector")->capture_default_str();
    run->add_option("--labels", run_labels, "CSV sample_id,label (default: labels in the records)");
    run->add_option("--top-k", run_topk, "Failing samples in the confidence distribution")->capture_default_str();
    auto* bench_opt = run->add_option("--benchmark", run_bench, "Labeled benchmark (JSONL)");
    run->add_option("--holdout", run_holdout, "Hold out this seeded fraction of the input as the benchmark")
        ->excludes(bench_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*score) {
            const auto d = load_path(score_in);
            auto b = parallel_map(d.size(), g.parallelism, [&](std::size_t i) { return a3_score(d[i]); });
            Output out(score_out, g);
            write_breakdown_csv(out.stream(), d, b);
        } else if (*rank_cmd) {
            const auto d = load_path(rank_in);
            const auto method = method_or_throw(rank_method);
            const auto ranked = rank(d, RankerSpec::of(method, rank_seed.value_or(g.seed)), g.parallelism);
            Output out(rank_out, g);
            write_ranked_csv(out.stream(), ranked);
        } else if (*select) {
            const auto d = load_path(sel_dataset);
            auto rf = open_in(sel_ranked);
            const auto ranked = read_ranked_csv(rf);
            LabelMap labels;
            if (!sel_labels.empty()) {
                auto lf = open_in(sel_labels);
                labels = read_labels_csv(lf);
            } else {
                labels = embedded_labels(d);
            }
            const auto budget = budget_or_throw(sel_budget);
            std::size_t omega = 0;
            if (budget.mode() == Budget::Mode::Cut) {
                Dataset labeled;
                for (const auto& r : d) {
                    auto it = labels.find(r.sample_id);
                    if (it == labels.end()) throw Error(ErrorKind::MissingLabel, "CUT budget needs every label", r.sample_id);
                    auto copy = r;
                    copy.label = it->second;
                    labeled.push_back(std::move(copy));
                }
                omega = budget.resolve(labeled);
            } else {
                omega = budget.resolve(d);
            }
            const auto t_sub = label_subtle(ranked, d, omega, RejectorSpec(sel_theta), labels);
            Output out(sel_out, g);
            write_dataset(out.stream(), t_sub);
            std::cerr << "selected " << t_sub.size() << " subtle samples from top " << omega << '\n';
            if (g.strict && t_sub.size() < kDefaultMinTrain) {
                std::cerr << "InsufficientSubtleSamples: fewer than " << kDefaultMinTrain << " subtle samples\n";
                return kExitInsufficient;
            }
        } else if (*decide) {
            const auto d = load_path(dec_in);
            const RejectorSpec spec(dec_theta);
            std::optional<DetectorModel> model;
            if (!dec_detector.empty()) {
                auto f = open_in(dec_detector);
                model = load_detector(f);
            }
            auto decisions = parallel_map(d.size(), g.parallelism, [&](std::size_t i) {
                return two_stage_decide(d[i], spec, model ? &*model : nullptr);
            });
            Output out(dec_out, g);
            auto& os = out.stream();
            os << "sample_id,outcome,predicted_class\n";
            for (std::size_t i = 0; i < d.size(); ++i) {
                os << csv::field(d[i].sample_id) << ',' << to_string(decisions[i].outcome) << ',';
                if (decisions[i].predicted) os << *decisions[i].predicted;
                os << '\n';
            }
        } else if (*fit) {
            const auto t_sub = load_path(fit_in);
            FeatureSchema schema;
            if (fit_features == "auto") schema = choose_schema(t_sub);
            else if (fit_features == "external") schema = FeatureSchema::External;
            else if (fit_features == "derived") schema = FeatureSchema::Derived;
            else throw CLI::ValidationError("--features", "expected auto|external|derived");
            if (t_sub.size() < fit_min) {
                std::cerr << "InsufficientSubtleSamples: " << t_sub.size() << " samples, need " << fit_min << '\n';
                return g.strict ? kExitInsufficient : kExitData;
            }
            std::vector<FeatureVector> features;
            for (const auto& r : t_sub) features.push_back(features_for(r, schema));
            const auto model = fit_detector(features, fit_quantile, schema, fit_min);
            Output out(fit_out, g);
            save_detector(out.stream(), model);
        } else if (*deval) {
            auto mf = open_in(deval_model);
            const auto model = load_detector(mf);
            const auto bench = load_path(deval_bench);
            const RejectorSpec spec(deval_theta);
            const auto s = defense_stats(model, bench, spec);
            nlohmann::ordered_json j;
            j["spec_version"] = kReportVersion;
            j["theta"] = deval_theta;
            j["subtle_total"] = s.subtle_total;
            j["subtle_rejected"] = s.subtle_rejected;
            j["defense_success_rate"] = s.success_rate();
            j["correct_total"] = s.correct_total;
            j["correct_rejected"] = s.correct_rejected;
            j["false_rejection_rate"] =
                s.correct_total > 0 ? nlohmann::ordered_json(s.false_rejection_rate()) : nullptr;
            j["H"] = quadrants_json(quadrant_counts(bench, spec, nullptr));
            j["H_prime"] = quadrants_json(quadrant_counts(bench, spec, &model));
            Output out(deval_out, g);
            out.stream() << j.dump(2) << '\n';
        } else if (*evaluate) {
            const auto d = load_path(ev_dataset);
            auto rf = open_in(ev_ranked);
            const auto ranked = read_ranked_csv(rf);
            const auto name = ev_name.empty() ? fs::path(ev_ranked).stem().string() : ev_name;
            auto report = eval_report(ranked, d, parse_thetas(ev_thetas), budget_or_throw(ev_budget), name);
            if (!ev_conf.empty()) {
                Output conf(ev_conf, g);
                write_confidence_csv(conf.stream(), top_failing_confidences(ranked, d, ev_topk));
            }
            Output out(ev_out, g);
            out.stream() << report.dump(2) << '\n';
        } else if (*compare) {
            auto fa = open_in(cmp_a);
            auto fb = open_in(cmp_b);
            const auto ta = csv::read_table(fa);
            const auto tb = csv::read_table(fb);
            if (ta.rows.size() != tb.rows.size())
                throw Error(ErrorKind::InvariantViolation, "compare inputs differ in row count");
            std::vector<double> a, b;
            const auto ca = ta.column(cmp_column);
            const auto cb = tb.column(cmp_column);
            for (const auto& row : ta.rows) a.push_back(csv::parse_double(row[ca]));
            for (const auto& row : tb.rows) b.push_back(csv::parse_double(row[cb]));
            const auto w = wilcoxon_signed_rank(a, b);
            nlohmann::ordered_json j;
            j["spec_version"] = kReportVersion;
            j["test"] = "wilcoxon_signed_rank";
            j["zero_handling"] = "wilcox";
            j["n_pairs"] = a.size();
            j["n_nonzero"] = w.n;
            j["w_plus"] = w.w_plus;
            j["w_minus"] = w.w_minus;
            j["statistic"] = w.statistic;
            j["z"] = w.z;
            j["p_two_sided"] = w.p_two_sided;
            Output out(cmp_out, g);
            out.stream() << j.dump(2) << '\n';
        } else if (*synth_cmd) {
            wc.seed = g.seed;
            const auto world = synth::build_world(wc, g.parallelism);
            fs::path dir = g.output_dir.empty() ? fs::path(synth_out) : fs::path(g.output_dir) / synth_out;
            fs::create_directories(dir);
            {
                std::ofstream f(dir / "train.jsonl", std::ios::binary);
                write_dataset(f, world.train);
            }
            {
                std::ofstream f(dir / "eval.jsonl", std::ios::binary);
                write_dataset(f, world.eval);
            }
            const std::vector<double> thetas{0.7, 0.8, 0.9};
            const auto stats = dataset_stats(world.eval, thetas);
            nlohmann::ordered_json m;
            m["spec_version"] = kReportVersion;
            m["config"] = synth::config_json(wc);
            nlohmann::ordered_json achieved;
            achieved["train_accuracy"] = world.train_accuracy;
            achieved["eval_accuracy"] = world.eval_accuracy;
            achieved["eval_failing_ratio"] = stats.failing_ratio;
            nlohmann::ordered_json sc;
            for (const auto& [t, s] : stats.by_theta) sc[csv::format_double(t)] = s.subtle;
            achieved["eval_subtle_count_by_theta"] = sc;
            achieved["train_digest"] = dataset_digest(world.train);
            achieved["eval_digest"] = dataset_digest(world.eval);
            m["achieved"] = achieved;
            std::ofstream f(dir / "manifest.json", std::ios::binary);
            f << m.dump(2) << '\n';
            std::cerr << "wrote " << dir.string() << '\n';
        } else if (*run) {
            const auto input = load_path(run_in);
            PipelineConfig cfg;
            cfg.ranker = RankerSpec::of(method_or_throw(run_method), g.seed);
            cfg.budget = budget_or_throw(run_budget);
            cfg.theta = run_theta;
            cfg.detector_quantile = run_quantile;
            cfg.min_train = run_min;
            cfg.parallelism = g.parallelism;
            cfg.seed = g.seed;
            cfg.top_k_confidences = run_topk;
            if (!run_labels.empty()) {
                auto lf = open_in(run_labels);
                cfg.labels = read_labels_csv(lf);
            }
            Dataset ranked_part;
            std::optional<Dataset> bench;
            if (run_holdout) {
                auto [r, b] = holdout_split(input, *run_holdout, g.seed);
                ranked_part = std::move(r);
                bench = std::move(b);
            } else {
                ranked_part = input;
                if (!run_bench.empty()) bench = load_path(run_bench);
            }
            auto res = run_full(ranked_part, cfg, bench ? &*bench : nullptr);
            if (run_holdout) res.report["holdout"] = *run_holdout;
            const fs::path dir = g.output_dir.empty() ? fs::path("a3rank_out") : fs::path(g.output_dir);
            write_artifacts(dir, ranked_part, res, run_topk);
            std::cerr << "wrote " << dir.string() << " (t_sub " << res.t_sub.size() << ", detector "
                      << (res.bundle.detector ? "fitted" : "not fitted") << ")\n";
            for (const auto& w : res.warnings) std::cerr << to_string(w.kind) << ": " << w.message << '\n';
            if (g.strict && !res.warnings.empty()) return kExitInsufficient;
        }
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
