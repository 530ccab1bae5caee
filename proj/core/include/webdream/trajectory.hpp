#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "webdream/acctree.hpp"
#include "webdream/action.hpp"

namespace webdream {

struct Task;

/// One token of the action grammar  ActType (ElemRef)? (Content Flag?)? End.
struct ActionToken {
    enum class Kind { ActType, ElemRef, Content, Flag, End };
    Kind kind = Kind::End;
    int value = 0;

    bool operator==(const ActionToken&) const = default;

    static ActionToken act(ActionType t) { return {Kind::ActType, static_cast<int>(t)}; }
    static ActionToken elem(int slot) { return {Kind::ElemRef, slot}; }
    static ActionToken content(int index) { return {Kind::Content, index}; }
    static ActionToken flag(bool on) { return {Kind::Flag, on ? 1 : 0}; }
    static ActionToken end() { return {Kind::End, 0}; }
};

struct TrajectoryStep {
    AccessibilityTree obs;
    Action action;
    std::vector<ActionToken> tokens;
    /// Per-token log-probabilities under the snapshot that produced the group.
    std::vector<double> logprobs_old;
    /// Free-text note; never enters likelihoods.
    std::optional<std::string> annotation;
};

enum class Provenance { Real, Imagined, Expert };

std::string_view provenance_name(Provenance p);

struct Trajectory {
    std::shared_ptr<const Task> task;
    std::vector<TrajectoryStep> steps;
    int return_value = 0;
    Provenance provenance = Provenance::Real;
    bool truncated = false;
    uint64_t theta_old_version = 0;
    /// World-model predictions that failed to apply and degraded to no-ops.
    size_t wm_recoveries = 0;

    size_t token_count() const;
    bool ended_with_stop() const;
    double old_logprob_total() const;
};

}  // namespace webdream
