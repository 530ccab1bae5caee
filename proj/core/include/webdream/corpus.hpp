#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "webdream/acctree.hpp"
#include "webdream/action.hpp"
#include "webdream/common.hpp"
#include "webdream/edit_script.hpp"
#include "webdream/env.hpp"
#include "webdream/task.hpp"

namespace webdream {

struct Transition {
    AccessibilityTree obs;
    Action action;
    AccessibilityTree next_obs;
    EditScript delta;
    bool terminal = false;
    bool operator==(const Transition&) const = default;
};

struct TransitionCorpus {
    std::string instructions = kInstructions;
    std::vector<Transition> transitions;
    std::string provenance;
    bool operator==(const TransitionCorpus&) const = default;
};

/// One corpus line before validation; fields are kept as stored.
struct CorpusRecord {
    std::string obs;
    nlohmann::json action;
    nlohmann::json delta;
    std::string next_obs;
    bool terminal = false;
};

struct RawCorpus {
    std::string instructions = kInstructions;
    std::string provenance;
    std::vector<CorpusRecord> records;
};

inline constexpr const char* kDropMissingObservation = "missing observation";
inline constexpr const char* kDropInvalidAction = "invalid action";
inline constexpr const char* kDropInconsistent = "inconsistent state transition";

struct CleanResult {
    TransitionCorpus corpus;
    std::map<std::string, size_t> drops;
    /// Indices of dropped records, ascending.
    std::vector<size_t> dropped;
};

/// Builds the transition for (obs, action) -> next_obs with the canonical delta.
Transition make_transition(const AccessibilityTree& obs, const Action& action, const AccessibilityTree& next_obs);

/// Replays each task's witness, then explores uniformly at random from a
/// random state along it, until n_transitions are gathered. Deterministic.
TransitionCorpus collect_corpus(const WebEnv& env, const std::vector<GeneratedTask>& tasks, size_t n_transitions,
                                uint64_t seed);

/// Keeps records whose observations parse, whose action targets exist, and
/// whose delta is canonical and maps obs to next_obs. Order is preserved.
CleanResult clean_corpus(const RawCorpus& raw);
CleanResult clean_corpus(const TransitionCorpus& corpus);

RawCorpus to_raw(const TransitionCorpus& corpus);
CorpusRecord to_record(const Transition& t);

/// JSON Lines: a header object, then one record per line.
void write_corpus(std::ostream& out, const TransitionCorpus& corpus);
RawCorpus read_corpus(std::istream& in);

/// Deterministic split into (train, heldout) with heldout_fraction of records.
std::pair<TransitionCorpus, TransitionCorpus> split_corpus(const TransitionCorpus& corpus, double heldout_fraction,
                                                           uint64_t seed);

}  // namespace webdream
