#include "webdream/trajectory.hpp"

namespace webdream {

std::string_view provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Real: return "real";
        case Provenance::Imagined: return "imagined";
        case Provenance::Expert: return "expert";
    }
    return "?";
}

size_t Trajectory::token_count() const {
    size_t n = 0;
    for (const auto& s : steps) n += s.tokens.size();
    return n;
}

bool Trajectory::ended_with_stop() const { return !steps.empty() && steps.back().action.type == ActionType::Stop; }

double Trajectory::old_logprob_total() const {
    double total = 0.0;
    for (const auto& s : steps) {
        for (double lp : s.logprobs_old) total += lp;
    }
    return total;
}

}  // namespace webdream
