#pragma once
// Two-stage rejection: the confidence rejector first, then an optional
// detector that only sees samples the rejector let through.

#include <optional>
#include <string_view>

#include "a3rank/detector.hpp"
#include "a3rank/rejection.hpp"

namespace a3rank {

enum class Outcome { Predicted, RejectedByR, RejectedByD };

constexpr std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::Predicted: return "predicted";
        case Outcome::RejectedByR: return "rejected_r";
        case Outcome::RejectedByD: return "rejected_d";
    }
    return "?";
}

struct Decision {
    Outcome outcome = Outcome::Predicted;
    std::optional<ClassIndex> predicted;  // set only for Outcome::Predicted

    friend bool operator==(const Decision&, const Decision&) = default;
};

inline Decision two_stage_decide(const PredictionRecord& r, const RejectorSpec& spec,
                                 const DetectorModel* detector = nullptr) {
    if (confidence_reject(r, spec)) return {Outcome::RejectedByR, std::nullopt};
    if (detector && detector_decide(*detector, r)) return {Outcome::RejectedByD, std::nullopt};
    return {Outcome::Predicted, predicted_class(r.probs)};
}

}  // namespace a3rank
