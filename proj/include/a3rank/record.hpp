#pragma once
// Prediction records, datasets, and their JSONL wire format.
//
// One record per line:
//   {"sample_id": str, "probs": [float x C],
//    "variants": [{"op_id": str, "probs": [float x C]}],
//    "label": int?, "features": [float]?}
//
// Probabilities are stored exactly as read. Nothing is renormalized, so every
// score downstream is computed from the exporter's values.

#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "a3rank/error.hpp"

namespace a3rank {

using ClassIndex = std::size_t;

inline constexpr double kProbSumTolerance = 1e-4;

// Per-class probabilities of one prediction. Construction validates: C >= 2,
// finite components in [0, 1], sum within kProbSumTolerance of 1.
class PredictionVector {
public:
    PredictionVector() = default;

    explicit PredictionVector(std::vector<double> probs) : probs_(std::move(probs)) {
        if (auto problem = check(probs_)) throw Error(ErrorKind::InvariantViolation, *problem);
    }

    // Returns a description of the first violated invariant, if any.
    static std::optional<std::string> check(std::span<const double> probs) {
        if (probs.size() < 2) return "prediction vector needs at least 2 classes";
        double sum = 0.0;
        for (double p : probs) {
            if (!std::isfinite(p)) return "non-finite probability";
            if (p < 0.0 || p > 1.0) return "probability outside [0, 1]: " + std::to_string(p);
            sum += p;
        }
        if (std::abs(sum - 1.0) > kProbSumTolerance)
            return "probabilities sum to " + std::to_string(sum) + ", expected 1";
        return std::nullopt;
    }

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](ClassIndex i) const { return probs_[i]; }
    std::span<const double> values() const noexcept { return probs_; }
    const std::vector<double>& vector() const noexcept { return probs_; }

    friend bool operator==(const PredictionVector&, const PredictionVector&) = default;

private:
    std::vector<double> probs_;
};

struct VariantPrediction {
    std::string op_id;
    PredictionVector probs;

    friend bool operator==(const VariantPrediction&, const VariantPrediction&) = default;
};

struct PredictionRecord {
    std::string sample_id;
    PredictionVector probs;
    std::vector<VariantPrediction> variants;
    std::optional<ClassIndex> label;
    std::optional<std::vector<double>> features;

    std::size_t num_classes() const noexcept { return probs.size(); }

    friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

// Checks the cross-field invariants of an assembled record.
inline void validate(const PredictionRecord& r) {
    if (r.sample_id.empty()) throw Error(ErrorKind::SchemaViolation, "empty sample_id");
    if (auto problem = PredictionVector::check(r.probs.values()))
        throw Error(ErrorKind::InvariantViolation, *problem, r.sample_id);
    const std::size_t c = r.num_classes();
    for (const auto& v : r.variants) {
        if (v.op_id.empty())
            throw Error(ErrorKind::InvariantViolation, "variant with empty op_id", r.sample_id);
        if (v.probs.size() != c)
            throw Error(ErrorKind::InvariantViolation,
                        "variant '" + v.op_id + "' has " + std::to_string(v.probs.size()) +
                            " classes, sample has " + std::to_string(c),
                        r.sample_id);
    }
    if (r.label && *r.label >= c)
        throw Error(ErrorKind::InvariantViolation,
                    "label " + std::to_string(*r.label) + " outside [0, " + std::to_string(c) + ")",
                    r.sample_id);
    if (r.features) {
        for (double f : *r.features)
            if (!std::isfinite(f))
                throw Error(ErrorKind::InvariantViolation, "non-finite feature", r.sample_id);
    }
}

// Ordered, immutable-after-load collection of records sharing one class count.
class Dataset {
public:
    Dataset() = default;

    explicit Dataset(std::vector<PredictionRecord> records) {
        for (auto& r : records) push_back(std::move(r));
    }

    void push_back(PredictionRecord r) {
        if (records_.empty()) {
            num_classes_ = r.num_classes();
        } else if (r.num_classes() != num_classes_) {
            throw Error(ErrorKind::InconsistentClassCount,
                        "record has " + std::to_string(r.num_classes()) + " classes, dataset has " +
                            std::to_string(num_classes_),
                        r.sample_id);
        }
        if (index_.contains(r.sample_id))
            throw Error(ErrorKind::DuplicateSampleId, "sample_id already present", r.sample_id);
        index_.emplace(r.sample_id, records_.size());
        records_.push_back(std::move(r));
    }

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    std::size_t num_classes() const noexcept { return num_classes_; }
    const std::vector<PredictionRecord>& records() const noexcept { return records_; }
    const PredictionRecord& operator[](std::size_t i) const { return records_[i]; }
    auto begin() const { return records_.begin(); }
    auto end() const { return records_.end(); }

    const PredictionRecord* find(const std::string& sample_id) const {
        auto it = index_.find(sample_id);
        return it == index_.end() ? nullptr : &records_[it->second];
    }

    bool all_labeled() const {
        for (const auto& r : records_)
            if (!r.label) return false;
        return true;
    }

private:
    std::vector<PredictionRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t num_classes_ = 0;
};

namespace detail {

inline std::vector<double> number_array(const nlohmann::json& j, const char* field,
                                        const std::optional<std::string>& id) {
    if (!j.is_array())
        throw Error(ErrorKind::SchemaViolation, std::string("'") + field + "' must be an array", id);
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& x : j) {
        if (!x.is_number())
            throw Error(ErrorKind::SchemaViolation,
                        std::string("'") + field + "' must contain only numbers", id);
        out.push_back(x.get<double>());
    }
    return out;
}

inline PredictionVector prediction_vector(const nlohmann::json& j, const char* field,
                                          const std::optional<std::string>& id) {
    auto values = number_array(j, field, id);
    if (auto problem = PredictionVector::check(values))
        throw Error(ErrorKind::InvariantViolation, std::string(field) + ": " + *problem, id);
    return PredictionVector(std::move(values));
}

}  // namespace detail

inline PredictionRecord parse_record(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::MalformedJson, e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::SchemaViolation, "record must be a JSON object");

    std::optional<std::string> id;
    if (auto it = j.find("sample_id"); it != j.end() && it->is_string()) id = it->get<std::string>();
    if (!id) throw Error(ErrorKind::SchemaViolation, "missing or non-string 'sample_id'");
    if (id->empty()) throw Error(ErrorKind::SchemaViolation, "empty sample_id");

    PredictionRecord r;
    r.sample_id = *id;

    auto probs = j.find("probs");
    if (probs == j.end()) throw Error(ErrorKind::SchemaViolation, "missing 'probs'", id);
    r.probs = detail::prediction_vector(*probs, "probs", id);

    if (auto vs = j.find("variants"); vs != j.end() && !vs->is_null()) {
        if (!vs->is_array()) throw Error(ErrorKind::SchemaViolation, "'variants' must be an array", id);
        r.variants.reserve(vs->size());
        for (const auto& v : *vs) {
            if (!v.is_object())
                throw Error(ErrorKind::SchemaViolation, "variant must be an object", id);
            auto op = v.find("op_id");
            if (op == v.end() || !op->is_string())
                throw Error(ErrorKind::SchemaViolation, "variant missing string 'op_id'", id);
            auto vp = v.find("probs");
            if (vp == v.end()) throw Error(ErrorKind::SchemaViolation, "variant missing 'probs'", id);
            r.variants.push_back({op->get<std::string>(), detail::prediction_vector(*vp, "variant probs", id)});
        }
    }

    if (auto lab = j.find("label"); lab != j.end() && !lab->is_null()) {
        if (lab->is_number_unsigned()) {
            r.label = lab->get<std::size_t>();
        } else if (lab->is_number_integer()) {
            // Negative integers land here.
            throw Error(ErrorKind::InvariantViolation, "negative label", id);
        } else {
            throw Error(ErrorKind::SchemaViolation, "'label' must be an integer", id);
        }
    }

    if (auto f = j.find("features"); f != j.end() && !f->is_null())
        r.features = detail::number_array(*f, "features", id);

    validate(r);
    return r;
}

// One JSON line, newline-terminated. Doubles are written in shortest
// round-trip form, so parse_record(serialize_record(r)) == r.
inline std::string serialize_record(const PredictionRecord& r) {
    nlohmann::ordered_json j;
    j["sample_id"] = r.sample_id;
    j["probs"] = r.probs.vector();
    auto variants = nlohmann::ordered_json::array();
    for (const auto& v : r.variants) {
        nlohmann::ordered_json vj;
        vj["op_id"] = v.op_id;
        vj["probs"] = v.probs.vector();
        variants.push_back(std::move(vj));
    }
    j["variants"] = std::move(variants);
    if (r.label) j["label"] = *r.label;
    if (r.features) j["features"] = *r.features;
    return j.dump() + "\n";
}

inline Dataset load_dataset(std::istream& in) {
    Dataset d;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            d.push_back(parse_record(line));
        } catch (const Error& e) {
            throw e.at_line(line_no);
        }
    }
    return d;
}

inline void write_dataset(std::ostream& out, const Dataset& d) {
    for (const auto& r : d) out << serialize_record(r);
}

}  // namespace a3rank
