#pragma once

#include <vector>

#include "sampcf/common.hpp"
#include "sampcf/graph.hpp"
#include "sampcf/model.hpp"

namespace sampcf {

struct RecallResult {
  std::vector<std::pair<NodeId, double>> per_user;  // eligible users, ascending id
  double mean = 0.0;
  Count users_evaluated = 0;
};

// recall@M over the held-out item pool: each user with at least one held-out
// positive ranks every pool item by score (ties broken by lower item id) and
// recall is the retrieved fraction of their held-out items. Users whose
// held-out set is empty are excluded from the mean.
RecallResult recall_at_m(const EmbeddingModel& model, const std::vector<NodeId>& test_pool,
                         const std::vector<Link>& test_links, Count m, bool parallel);

void write_recall_csv(const RecallResult& result, const std::string& path);

}  // namespace sampcf
