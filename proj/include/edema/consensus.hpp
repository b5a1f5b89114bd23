#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "edema/common.hpp"

namespace edema::consensus {

struct Vote {
    std::string rater_id;
    Severity label = Severity::none;
};

/// Recorded votes for one image across the staged consensus process.
/// Stages beyond the point where a decision falls may be absent.
struct VoteLog {
    std::string image_id;
    std::vector<Vote> initial;            // exactly 3 resident votes
    std::optional<Vote> attending;        // added when the residents disagree
    std::vector<std::vector<Vote>> rounds;  // discussion rounds, 4 votes each
};

enum class ConsensusPath { unanimous3, majority4, discussion_round, no_consensus };

struct ConsensusOutcome {
    OptionalSeverity label;  // absent iff path == no_consensus
    ConsensusPath path = ConsensusPath::no_consensus;
    int round = 0;        // 1-based round index when path == discussion_round
    int rounds_used = 0;  // discussion rounds consumed
};

std::string path_to_string(const ConsensusOutcome& outcome);

/// Staged reduction:
///   1. three equal initial votes -> unanimous3;
///   2. otherwise the attending vote is required; a label with >= 3 of the
///      4 votes wins as majority4 (a 2-2 split never decides);
///   3. otherwise discussion rounds are consumed in order; the first round
///      where some label reaches >= 3 of its 4 votes decides;
///   4. after max_rounds undecided rounds the image has no consensus.
/// Stages past the decision point are never read or validated.
ConsensusOutcome reduce_consensus(const VoteLog& log, int max_rounds = 3);

/// Fleiss' kappa over n items x r raters with votes in [0, categories).
/// Every item must carry the same number of votes (r >= 2). If chance
/// agreement is degenerate (all votes one category) the result is 1.0 when
/// agreement is perfect and an error otherwise.
double fleiss_kappa(const std::vector<std::vector<int>>& item_votes, int categories);

/// Vote logs as JSONL:
/// {"image_id":..., "initial":[[rater,label]x3],
///  "attending":[rater,label]?, "rounds":[[[rater,label]x4],...]}
std::vector<VoteLog> load_votes_jsonl(const std::filesystem::path& path);
void write_votes_jsonl(const std::filesystem::path& path, const std::vector<VoteLog>& logs);

}  // namespace edema::consensus
