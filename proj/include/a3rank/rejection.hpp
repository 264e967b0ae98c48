#pragma once
// Confidence-threshold rejector and subtle-sample classification.
//
// A sample is rejected when its confidence is strictly lower than theta, so a
// sample sitting exactly on the threshold passes.

#include <optional>
#include <string>

#include "a3rank/alignment.hpp"
#include "a3rank/error.hpp"
#include "a3rank/record.hpp"

namespace a3rank {

class RejectorSpec {
public:
    explicit RejectorSpec(double theta) : theta_(theta) {
        if (!(theta > 0.0 && theta < 1.0))
            throw Error(ErrorKind::InvariantViolation, "theta must lie in (0, 1), got " + std::to_string(theta));
    }
    double theta() const noexcept { return theta_; }

    friend bool operator==(const RejectorSpec&, const RejectorSpec&) = default;

private:
    double theta_;
};

inline bool confidence_reject(const PredictionRecord& r, const RejectorSpec& spec) {
    return max_component(r.probs) < spec.theta();
}

inline bool passes(const PredictionRecord& r, const RejectorSpec& spec) { return !confidence_reject(r, spec); }

inline std::optional<bool> is_failing(const PredictionRecord& r) {
    if (!r.label) return std::nullopt;
    return predicted_class(r.probs) != *r.label;
}

// Failing and not rejected. Empty when the record carries no label.
inline std::optional<bool> subtle_flag(const PredictionRecord& r, const RejectorSpec& spec) {
    auto failing = is_failing(r);
    if (!failing) return std::nullopt;
    return *failing && passes(r, spec);
}

}  // namespace a3rank
