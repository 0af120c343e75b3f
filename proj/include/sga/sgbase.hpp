#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sga/cluster.hpp"
#include "sga/corpus.hpp"
#include "sga/encoder.hpp"
#include "sga/lexicon.hpp"

namespace sga {

// One annotator's subjective ground: per cluster, the top comments by
// moral-foundations score, flattened to G = k * per_cluster slots.
// slot = cluster * per_cluster + rank; unfilled slots carry empty text and a
// false mask bit.
struct SgBase {
  struct Slot {
    std::optional<std::string> comment_id;  // nullopt for padding
    std::string text;                       // empty for padding
    int score = 0;                          // mf_score of the kept comment
  };

  std::string annotator_id;
  int clusters = 0;
  int per_cluster = 0;
  std::vector<Slot> slots;    // length G
  std::vector<bool> mask;     // true = real comment

  int total_slots() const { return clusters * per_cluster; }
  std::size_t real_count() const;
};

// Builds the base from the annotator's DPlus training-split comments only.
// Within a cluster, comments rank by descending mf_score, ties by descending
// text length, then ascending comment id. Throws when the annotator has no
// eligible comment at all.
SgBase build_sg(const std::string& annotator_id, const Corpus& dplus, const ClusterModel& clusters,
                const StaticEmbedder& embedder, const MoralLexicon& lexicon, int per_cluster = 6);

std::vector<SgBase> build_all_sg(const Roster& roster, const Corpus& dplus,
                                 const ClusterModel& clusters, const StaticEmbedder& embedder,
                                 const MoralLexicon& lexicon, int per_cluster = 6);

}  // namespace sga
