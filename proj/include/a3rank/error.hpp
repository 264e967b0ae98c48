#pragma once
// Typed errors shared by every a3rank module.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace a3rank {

enum class ErrorKind {
    MalformedJson,
    SchemaViolation,
    InvariantViolation,
    DuplicateSampleId,
    InconsistentClassCount,
    FeatureSchemaMismatch,
    InsufficientSubtleSamples,
    EmptyEvaluationSet,
    UnlabeledRecords,
    BudgetExceedsDataset,
    NoFailingSamples,
    TooFewPairs,
    MissingLabel,
    DivergedTraining,
    Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedJson: return "MalformedJson";
        case ErrorKind::SchemaViolation: return "SchemaViolation";
        case ErrorKind::InvariantViolation: return "InvariantViolation";
        case ErrorKind::DuplicateSampleId: return "DuplicateSampleId";
        case ErrorKind::InconsistentClassCount: return "InconsistentClassCount";
        case ErrorKind::FeatureSchemaMismatch: return "FeatureSchemaMismatch";
        case ErrorKind::InsufficientSubtleSamples: return "InsufficientSubtleSamples";
        case ErrorKind::EmptyEvaluationSet: return "EmptyEvaluationSet";
        case ErrorKind::UnlabeledRecords: return "UnlabeledRecords";
        case ErrorKind::BudgetExceedsDataset: return "BudgetExceedsDataset";
        case ErrorKind::NoFailingSamples: return "NoFailingSamples";
        case ErrorKind::TooFewPairs: return "TooFewPairs";
        case ErrorKind::MissingLabel: return "MissingLabel";
        case ErrorKind::DivergedTraining: return "DivergedTraining";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message,
          std::optional<std::string> sample_id = std::nullopt,
          std::optional<std::size_t> line = std::nullopt)
        : std::runtime_error(format(kind, message, sample_id, line)),
          kind_(kind), message_(message), sample_id_(std::move(sample_id)), line_(line) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& message() const noexcept { return message_; }
    const std::optional<std::string>& sample_id() const noexcept { return sample_id_; }
    std::optional<std::size_t> line() const noexcept { return line_; }

    // Same error annotated with a 1-based input line number.
    Error at_line(std::size_t line_no) const {
        return Error(kind_, message_, sample_id_, line_no);
    }

private:
    static std::string format(ErrorKind kind, const std::string& message,
                              const std::optional<std::string>& sample_id,
                              std::optional<std::size_t> line) {
        std::string out(to_string(kind));
        if (line) out += " (line " + std::to_string(*line) + ")";
        if (sample_id) out += " [" + *sample_id + "]";
        out += ": " + message;
        return out;
    }

    ErrorKind kind_;
    std::string message_;
    std::optional<std::string> sample_id_;
    std::optional<std::size_t> line_;
};

}  // namespace a3rank
