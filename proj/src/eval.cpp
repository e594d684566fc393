#include "sampcf/eval.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace sampcf {

RecallResult recall_at_m(const EmbeddingModel& model, const std::vector<NodeId>& test_pool,
                         const std::vector<Link>& test_links, Count m, bool parallel) {
  if (m == 0) throw ConfigError("eval.m must be >= 1");
  if (test_pool.empty()) throw DataError("empty test item pool");

  // Held-out positives per user, restricted to the pool.
  std::map<NodeId, std::vector<NodeId>> held;
  for (const Link& l : test_links) held[l.user].push_back(l.item);

  std::vector<NodeId> users;
  users.reserve(held.size());
  for (auto& [user, items] : held) {
    std::sort(items.begin(), items.end());
    users.push_back(user);
  }

  const Matrix pool_emb = model.embed_items(test_pool, parallel);
  const Matrix user_emb = model.embed_users(users);
  const std::size_t top = std::min<std::size_t>(m, test_pool.size());

  RecallResult result;
  result.per_user.resize(users.size());
  const auto n_users = static_cast<std::int64_t>(users.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t ui = 0; ui < n_users; ++ui) {
    const auto u = static_cast<std::size_t>(ui);
    const double* f = user_emb.row(u);
    std::vector<std::pair<double, NodeId>> ranked(test_pool.size());
    for (std::size_t p = 0; p < test_pool.size(); ++p) {
      const double* g = pool_emb.row(p);
      double score = 0.0;
      for (std::size_t c = 0; c < user_emb.cols; ++c) score += f[c] * g[c];
      ranked[p] = {score, test_pool[p]};
    }
    // Descending score, ascending item id on ties.
    std::partial_sort(ranked.begin(), ranked.begin() + top, ranked.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    const auto& positives = held.at(users[u]);
    Count hits = 0;
    for (std::size_t r = 0; r < top; ++r)
      if (std::binary_search(positives.begin(), positives.end(), ranked[r].second)) ++hits;
    result.per_user[u] = {users[u], static_cast<double>(hits) / static_cast<double>(positives.size())};
  }

  double acc = 0.0;
  for (const auto& [user, recall] : result.per_user) acc += recall;
  result.users_evaluated = result.per_user.size();
  result.mean = result.per_user.empty() ? 0.0 : acc / static_cast<double>(result.per_user.size());
  return result;
}

void write_recall_csv(const RecallResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write recall csv: " + path);
  out << "user_id,recall\n";
  char buf[64];
  for (const auto& [user, recall] : result.per_user) {
    std::snprintf(buf, sizeof buf, "%.17g", recall);
    out << user << ',' << buf << '\n';
  }
  std::snprintf(buf, sizeof buf, "%.17g", result.mean);
  out << "mean," << buf << '\n';
}

}  // namespace sampcf
