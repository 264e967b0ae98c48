#pragma once
// End-to-end prioritization workflow:
//   rank the natural samples, take the top omega, drop what the rejector
//   already rejects, label the rest, keep the failing ones (the subtle set),
//   fit a detector on them, and compose it behind the rejector.
//
// Every artifact written here is a deterministic function of the inputs and
// the seed; the parallelism degree never changes a byte.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "a3rank/alignment.hpp"
#include "a3rank/baselines.hpp"
#include "a3rank/csv.hpp"
#include "a3rank/detector.hpp"
#include "a3rank/error.hpp"
#include "a3rank/evaluation.hpp"
#include "a3rank/parallel.hpp"
#include "a3rank/record.hpp"
#include "a3rank/rejection.hpp"
#include "a3rank/two_stage.hpp"

namespace a3rank {

inline constexpr const char* kReportVersion = "1.0";

// sample_id -> ground-truth label. Stands in for the manual labeling step;
// labels are trusted.
using LabelMap = std::unordered_map<std::string, ClassIndex>;

inline LabelMap embedded_labels(const Dataset& d) {
    LabelMap m;
    for (const auto& r : d)
        if (r.label) m.emplace(r.sample_id, *r.label);
    return m;
}

// Reads `sample_id,label`.
inline LabelMap read_labels_csv(std::istream& in) {
    auto table = csv::read_table(in);
    const auto id_col = table.column("sample_id");
    const auto label_col = table.column("label");
    LabelMap m;
    for (const auto& row : table.rows) {
        const double v = csv::parse_double(row[label_col]);
        if (v < 0 || v != static_cast<double>(static_cast<ClassIndex>(v)))
            throw Error(ErrorKind::SchemaViolation, "label is not a non-negative integer", row[id_col]);
        m[row[id_col]] = static_cast<ClassIndex>(v);
    }
    return m;
}

// FNV-1a over the canonical serialization; identifies the ranked dataset in reports.
inline std::string dataset_digest(const Dataset& d) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& r : d)
        for (unsigned char c : serialize_record(r)) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct RankOutput {
    RankedList ranked;
    std::vector<AlignmentBreakdown> breakdowns;  // dataset order; A3 only
};

inline RankOutput run_rank(const Dataset& d, const RankerSpec& ranker, std::size_t parallelism) {
    RankOutput out;
    if (ranker.method() != RankMethod::A3) {
        out.ranked = rank(d, ranker, parallelism);
        return out;
    }
    out.breakdowns = parallel_map(d.size(), parallelism, [&](std::size_t i) { return a3_score(d[i]); });
    RankedList entries;
    entries.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) entries.push_back({d[i].sample_id, out.breakdowns[i].score});
    out.ranked = order_by_key(std::move(entries), false);
    return out;
}

// The subtle set: top-omega samples that pass R and turn out failing once
// labeled. Rejected samples are dropped before labeling, so only passing
// samples need a label.
inline Dataset label_subtle(const RankedList& ranked, const Dataset& d, std::size_t omega, const RejectorSpec& spec,
                            const LabelMap& labels) {
    if (omega > ranked.size())
        throw Error(ErrorKind::BudgetExceedsDataset, "budget exceeds ranked list");
    Dataset t_sub;
    for (std::size_t i = 0; i < omega; ++i) {
        const auto& r = lookup(d, ranked[i].sample_id);
        if (confidence_reject(r, spec)) continue;
        auto it = labels.find(r.sample_id);
        if (it == labels.end()) throw Error(ErrorKind::MissingLabel, "no label for selected sample", r.sample_id);
        PredictionRecord labeled = r;
        labeled.label = it->second;
        validate(labeled);
        if (*is_failing(labeled)) t_sub.push_back(std::move(labeled));
    }
    return t_sub;
}

struct Provenance {
    std::string ranker;
    std::string budget;
    std::size_t omega = 0;
    std::size_t subtle_count = 0;
    std::string dataset_digest;
};

struct EnhancedModelBundle {
    RejectorSpec rejector{0.5};
    std::optional<DetectorModel> detector;
    Provenance provenance;
};

struct Warning {
    ErrorKind kind;
    std::string message;
};

// External features are used when every subtle sample carries them; otherwise
// features are derived from the prediction vectors.
inline FeatureSchema choose_schema(const Dataset& t_sub) {
    if (t_sub.empty()) return FeatureSchema::Derived;
    for (const auto& r : t_sub)
        if (!r.features) return FeatureSchema::Derived;
    return FeatureSchema::External;
}

inline EnhancedModelBundle build_enhanced(const RejectorSpec& rejector, const Dataset& t_sub, double quantile,
                                          Provenance provenance, std::vector<Warning>& warnings,
                                          std::size_t min_train = kDefaultMinTrain) {
    EnhancedModelBundle bundle{rejector, std::nullopt, std::move(provenance)};
    bundle.provenance.subtle_count = t_sub.size();
    if (t_sub.size() < min_train) {
        warnings.push_back({ErrorKind::InsufficientSubtleSamples,
                            std::to_string(t_sub.size()) + " subtle samples, detector needs " +
                                std::to_string(min_train)});
        return bundle;
    }
    const auto schema = choose_schema(t_sub);
    std::vector<FeatureVector> features;
    features.reserve(t_sub.size());
    for (const auto& r : t_sub) features.push_back(features_for(r, schema));
    bundle.detector = fit_detector(features, quantile, schema, min_train);
    return bundle;
}

inline QuadrantCounts quadrant_counts(const Dataset& d, const RejectorSpec& spec, const DetectorModel* detector) {
    QuadrantCounts q;
    for (const auto& r : d) {
        auto failing = is_failing(r);
        if (!failing) throw Error(ErrorKind::UnlabeledRecords, "record has no label", r.sample_id);
        switch (two_stage_decide(r, spec, detector).outcome) {
            case Outcome::RejectedByR: (*failing ? q.d : q.c)++; break;
            case Outcome::RejectedByD:
                (*failing ? q.failing_rejected_by_detector : q.correct_rejected_by_detector)++;
                break;
            case Outcome::Predicted: (*failing ? q.b : q.a)++; break;
        }
    }
    return q;
}

// Seeded split into (ranked part, held-out benchmark); both keep input order.
// `holdout` is the benchmark fraction.
inline std::pair<Dataset, Dataset> holdout_split(const Dataset& d, double holdout, std::uint64_t seed) {
    if (!(holdout > 0.0 && holdout < 1.0))
        throw Error(ErrorKind::InvariantViolation, "holdout fraction must lie in (0, 1)");
    const auto keys = random_keys(d.size(), seed);
    std::vector<std::size_t> order(d.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return keys[a] != keys[b] ? keys[a] < keys[b] : a < b; });
    const auto n_bench = static_cast<std::size_t>(std::llround(holdout * static_cast<double>(d.size())));
    std::vector<bool> in_bench(d.size(), false);
    for (std::size_t i = 0; i < n_bench; ++i) in_bench[order[i]] = true;
    Dataset ranked_part, bench;
    for (std::size_t i = 0; i < d.size(); ++i) (in_bench[i] ? bench : ranked_part).push_back(d[i]);
    return {std::move(ranked_part), std::move(bench)};
}

struct PipelineConfig {
    RankerSpec ranker = RankerSpec::a3();
    Budget budget = Budget::top(0.1);
    double theta = 0.9;
    double detector_quantile = 0.95;
    std::size_t min_train = kDefaultMinTrain;
    std::optional<LabelMap> labels;  // empty: labels embedded in the records
    std::size_t parallelism = 1;
    std::uint64_t seed = 42;
    std::size_t top_k_confidences = 50;
};

struct DefenseReport {
    DefenseStats stats;
    QuadrantCounts h;
    QuadrantCounts h_prime;
};

struct PipelineResult {
    RankOutput rank;
    std::size_t omega = 0;
    Dataset t_sub;
    EnhancedModelBundle bundle;
    std::vector<Warning> warnings;
    std::optional<DiscoveredCounts> discovered;  // when the ranked dataset is fully labeled
    std::optional<DefenseReport> defense;
    nlohmann::ordered_json report;
};

inline nlohmann::ordered_json quadrants_json(const QuadrantCounts& q) {
    nlohmann::ordered_json j;
    j["A"] = q.a;
    j["B"] = q.b;
    j["C"] = q.c;
    j["D"] = q.d;
    j["correct_rejected_by_detector"] = q.correct_rejected_by_detector;
    j["failing_rejected_by_detector"] = q.failing_rejected_by_detector;
    if (auto acc = q.accepted_accuracy()) j["accepted_accuracy"] = *acc;
    else j["accepted_accuracy"] = nullptr;
    j["model_accuracy"] = q.model_accuracy();
    return j;
}

inline nlohmann::ordered_json definitions_json() {
    nlohmann::ordered_json j;
    j["passes_rejector"] = "confidence >= theta (rejection iff confidence < theta)";
    j["throughput_ratio"] = "discovered subtle samples / failing samples in the ranked dataset";
    j["improvement_over_random"] = "discovered failing samples / (omega * failing_ratio)";
    j["ranking_direction"] = "a3 ascending, msp ascending, gini descending, random ascending key; ties by sample_id";
    j["detector"] = "z-scored closed ball, nearest-rank quantile radius";
    j["wilcoxon_zero_handling"] = "wilcox (zero differences dropped)";
    return j;
}

inline PipelineResult run_full(const Dataset& d, const PipelineConfig& cfg, const Dataset* benchmark = nullptr) {
    const RejectorSpec rejector(cfg.theta);
    PipelineResult res;
    res.rank = run_rank(d, cfg.ranker, cfg.parallelism);
    const LabelMap labels = cfg.labels ? *cfg.labels : embedded_labels(d);

    if (cfg.budget.mode() == Budget::Mode::Cut) {
        // CUT needs the failing count, so it needs labels for the whole set.
        Dataset labeled;
        for (const auto& r : d) {
            auto it = labels.find(r.sample_id);
            if (it == labels.end()) throw Error(ErrorKind::MissingLabel, "CUT budget needs every label", r.sample_id);
            PredictionRecord copy = r;
            copy.label = it->second;
            labeled.push_back(std::move(copy));
        }
        res.omega = d.empty() ? 0 : cfg.budget.resolve(labeled);
    } else {
        res.omega = cfg.budget.resolve(d);
    }

    res.t_sub = label_subtle(res.rank.ranked, d, res.omega, rejector, labels);
    Provenance prov{std::string(to_string(cfg.ranker.method())), cfg.budget.describe(), res.omega, 0,
                    dataset_digest(d)};
    res.bundle = build_enhanced(rejector, res.t_sub, cfg.detector_quantile, prov, res.warnings, cfg.min_train);

    bool fully_labeled = !d.empty();
    for (const auto& r : d) fully_labeled = fully_labeled && labels.contains(r.sample_id);
    Dataset labeled_view;
    if (fully_labeled) {
        for (const auto& r : d) {
            PredictionRecord copy = r;
            copy.label = labels.at(r.sample_id);
            labeled_view.push_back(std::move(copy));
        }
    }

    auto& j = res.report;
    j["spec_version"] = kReportVersion;
    j["seed"] = cfg.seed;
    nlohmann::ordered_json ranker;
    ranker["method"] = std::string(to_string(cfg.ranker.method()));
    if (cfg.ranker.seed()) ranker["seed"] = *cfg.ranker.seed();
    ranker["direction"] = cfg.ranker.descending() ? "descending" : "ascending";
    j["ranker"] = ranker;
    nlohmann::ordered_json budget;
    budget["mode"] = cfg.budget.mode() == Budget::Mode::Cut ? "cut" : "top";
    if (cfg.budget.mode() == Budget::Mode::Top) budget["fraction"] = cfg.budget.fraction();
    budget["omega"] = res.omega;
    j["budget"] = budget;
    j["theta"] = cfg.theta;
    nlohmann::ordered_json ds;
    ds["size"] = d.size();
    ds["num_classes"] = d.num_classes();
    ds["digest"] = res.bundle.provenance.dataset_digest;
    if (fully_labeled) {
        const auto failing = failing_count(labeled_view);
        ds["failing_count"] = failing;
        ds["failing_ratio"] = static_cast<double>(failing) / static_cast<double>(d.size());
    }
    j["dataset"] = ds;

    if (fully_labeled && res.omega > 0) {
        res.discovered = discovered_counts(res.rank.ranked, labeled_view, res.omega, rejector);
        nlohmann::ordered_json disc;
        disc["failing"] = res.discovered->failing;
        disc["subtle"] = res.discovered->subtle;
        if (failing_count(labeled_view) > 0) {
            disc["throughput_ratio"] = throughput_ratio(res.discovered->subtle, labeled_view);
            disc["improvement_over_random"] = improvement_over_random(res.discovered->failing, res.omega, labeled_view);
        }
        j["discovered"] = disc;
        nlohmann::ordered_json conf = nlohmann::ordered_json::array();
        for (const auto& fc : top_failing_confidences(res.rank.ranked, labeled_view, cfg.top_k_confidences))
            conf.push_back(fc.confidence);
        j["top_failing_confidences"] = conf;
    }

    j["t_sub_size"] = res.t_sub.size();
    nlohmann::ordered_json det;
    det["fitted"] = res.bundle.detector.has_value();
    if (res.bundle.detector) {
        det["feature_schema"] = std::string(to_string(res.bundle.detector->feature_schema));
        det["dim"] = res.bundle.detector->dim;
        det["radius"] = res.bundle.detector->radius;
        det["quantile"] = res.bundle.detector->quantile;
        det["train_count"] = res.bundle.detector->train_count;
    }
    j["detector"] = det;

    if (benchmark) {
        DefenseReport def;
        def.h = quadrant_counts(*benchmark, rejector, nullptr);
        const DetectorModel* model = res.bundle.detector ? &*res.bundle.detector : nullptr;
        def.h_prime = quadrant_counts(*benchmark, rejector, model);
        nlohmann::ordered_json dj;
        dj["benchmark_size"] = benchmark->size();
        if (model) {
            def.stats = defense_stats(*model, *benchmark, rejector);
            dj["subtle_total"] = def.stats.subtle_total;
            dj["subtle_rejected"] = def.stats.subtle_rejected;
            dj["correct_total"] = def.stats.correct_total;
            dj["correct_rejected"] = def.stats.correct_rejected;
            if (def.stats.subtle_total > 0) dj["defense_success_rate"] = def.stats.success_rate();
            else dj["defense_success_rate"] = nullptr;
            if (def.stats.correct_total > 0) dj["false_rejection_rate"] = def.stats.false_rejection_rate();
            else dj["false_rejection_rate"] = nullptr;
        }
        dj["H"] = quadrants_json(def.h);
        dj["H_prime"] = quadrants_json(def.h_prime);
        j["defense"] = dj;
        res.defense = def;
    }

    auto warnings = nlohmann::ordered_json::array();
    for (const auto& w : res.warnings) {
        nlohmann::ordered_json wj;
        wj["kind"] = std::string(to_string(w.kind));
        wj["message"] = w.message;
        warnings.push_back(wj);
    }
    j["warnings"] = warnings;
    j["definitions"] = definitions_json();
    return res;
}

inline void write_breakdown_csv(std::ostream& out, const Dataset& d, const std::vector<AlignmentBreakdown>& b) {
    out << "sample_id,predicted_class,confidence,majority_class,sum_g1,sum_g2,sum_g3,score\n";
    for (std::size_t i = 0; i < b.size(); ++i) {
        out << csv::field(d[i].sample_id) << ',' << b[i].predicted_class << ','
            << csv::format_double(b[i].confidence) << ',' << b[i].majority_class << ','
            << csv::format_double(b[i].sum_g1) << ',' << csv::format_double(b[i].sum_g2) << ','
            << csv::format_double(b[i].sum_g3) << ',' << csv::format_double(b[i].score) << '\n';
    }
}

inline void write_confidence_csv(std::ostream& out, const std::vector<FailingConfidence>& rows) {
    out << "rank,sample_id,confidence\n";
    for (const auto& r : rows) out << r.rank << ',' << csv::field(r.sample_id) << ',' << csv::format_double(r.confidence) << '\n';
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + p.string());
    return f;
}

}  // namespace detail

// Writes ranking.csv, breakdown.csv (A3), t_sub.jsonl, detector.json (when
// fitted), confidence_distribution.csv (labeled input) and report.json.
inline void write_artifacts(const std::filesystem::path& dir, const Dataset& d, const PipelineResult& res,
                            std::size_t top_k = 50) {
    std::filesystem::create_directories(dir);
    {
        auto f = detail::open_out(dir / "ranking.csv");
        write_ranked_csv(f, res.rank.ranked);
    }
    if (!res.rank.breakdowns.empty()) {
        auto f = detail::open_out(dir / "breakdown.csv");
        write_breakdown_csv(f, d, res.rank.breakdowns);
    }
    {
        auto f = detail::open_out(dir / "t_sub.jsonl");
        write_dataset(f, res.t_sub);
    }
    if (res.bundle.detector) {
        auto f = detail::open_out(dir / "detector.json");
        save_detector(f, *res.bundle.detector);
    }
    if (d.all_labeled() && !d.empty()) {
        auto f = detail::open_out(dir / "confidence_distribution.csv");
        write_confidence_csv(f, top_failing_confidences(res.rank.ranked, d, top_k));
    }
    {
        auto f = detail::open_out(dir / "report.json");
        f << res.report.dump(2) << '\n';
    }
}

}  // namespace a3rank
