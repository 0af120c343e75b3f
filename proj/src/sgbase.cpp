#include "sga/sgbase.hpp"

#include <algorithm>

#include "sga/error.hpp"

namespace sga {

std::size_t SgBase::real_count() const {
  std::size_t n = 0;
  for (bool m : mask)
    if (m) ++n;
  return n;
}

SgBase build_sg(const std::string& annotator_id, const Corpus& dplus, const ClusterModel& clusters,
                const StaticEmbedder& embedder, const MoralLexicon& lexicon, int per_cluster) {
  struct Scored {
    const Comment* comment;
    int score;
  };
  std::vector<std::vector<Scored>> per_topic(static_cast<std::size_t>(clusters.k));

  for (const auto& c : dplus.comments) {
    if (c.annotator_id != annotator_id) continue;
    const Situation* s = dplus.find_situation(c.situation_id);
    if (!s || s->split != Split::Train) continue;  // training comments only
    int cluster;
    auto it = clusters.assignments.find(s->id);
    if (it != clusters.assignments.end())
      cluster = it->second;
    else
      cluster = assign(embedder.embed(s->text), clusters);
    per_topic[static_cast<std::size_t>(cluster)].push_back({&c, mf_score(c.text, lexicon)});
  }

  std::size_t eligible = 0;
  for (const auto& v : per_topic) eligible += v.size();
  if (eligible == 0)
    throw validation_error("annotator " + annotator_id +
                           " has no eligible comments in the DPlus training split");

  SgBase base;
  base.annotator_id = annotator_id;
  base.clusters = clusters.k;
  base.per_cluster = per_cluster;
  base.slots.resize(static_cast<std::size_t>(base.total_slots()));
  base.mask.assign(static_cast<std::size_t>(base.total_slots()), false);

  for (int t = 0; t < clusters.k; ++t) {
    auto& pool = per_topic[static_cast<std::size_t>(t)];
    std::sort(pool.begin(), pool.end(), [](const Scored& a, const Scored& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.comment->text.size() != b.comment->text.size())
        return a.comment->text.size() > b.comment->text.size();
      return a.comment->id < b.comment->id;
    });
    int keep = std::min<int>(per_cluster, static_cast<int>(pool.size()));
    for (int r = 0; r < keep; ++r) {
      auto slot = static_cast<std::size_t>(t * per_cluster + r);
      base.slots[slot].comment_id = pool[static_cast<std::size_t>(r)].comment->id;
      base.slots[slot].text = pool[static_cast<std::size_t>(r)].comment->text;
      base.slots[slot].score = pool[static_cast<std::size_t>(r)].score;
      base.mask[slot] = true;
    }
  }
  return base;
}

std::vector<SgBase> build_all_sg(const Roster& roster, const Corpus& dplus,
                                 const ClusterModel& clusters, const StaticEmbedder& embedder,
                                 const MoralLexicon& lexicon, int per_cluster) {
  std::vector<SgBase> bases;
  bases.reserve(roster.annotator_ids.size());
  for (const auto& id : roster.annotator_ids)
    bases.push_back(build_sg(id, dplus, clusters, embedder, lexicon, per_cluster));
  return bases;
}

}  // namespace sga
