#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "xlie/projection_types.hpp"
#include "xlie/sample.hpp"

namespace xlie {

class MetricsError : public std::runtime_error {
 public:
  explicit MetricsError(const std::string& what) : std::runtime_error(what) {}
};

struct ScoreCard {
  std::size_t true_positives = 0;
  std::size_t predicted_count = 0;
  std::size_t gold_count = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static ScoreCard from_counts(std::size_t tp, std::size_t predicted,
                               std::size_t gold);
};

// Span-based offset micro-F1 scorers. `pred` and `gold` are aligned by
// sample id (same id sets, unique within each corpus); offsets are
// code-point intervals in the original sentence. Predictions are
// deduplicated per sample before matching and each gold item matches at
// most once. A prediction whose span offsets are unresolved never matches.

// Entity correct iff offset interval and concept match.
ScoreCard score_ner(const std::vector<Sample>& pred,
                    const std::vector<Sample>& gold);

// Relation correct iff relation concept plus subject and object
// (interval, concept) all match.
ScoreCard score_re(const std::vector<Sample>& pred,
                   const std::vector<Sample>& gold);

// Event correct iff trigger interval and event concept match.
ScoreCard score_ed(const std::vector<Sample>& pred,
                   const std::vector<Sample>& gold);

// Given event type and trigger, an argument is correct iff its span interval
// and role match; arguments are the scored units.
ScoreCard score_eae(const std::vector<Sample>& pred,
                    const std::vector<Sample>& gold);

// Fraction of records whose projected spans all occur verbatim in the
// projected sentence. Throws MetricsError on empty input.
double score_faithfulness(const std::vector<ProjectionRecord>& records);

}  // namespace xlie
