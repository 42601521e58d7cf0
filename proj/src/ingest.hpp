#pragma once
//
// Rating-stream replay: items become tasks at their first review, ratings
// become bounded observations x = rating - 3 in [-2, 2], and an item's truth is
// A when its mean rating exceeds 3.
//

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "engine.hpp"

namespace sava {

struct ReviewRecord {
  std::string item_id;
  std::string user_id;
  int rating = 0;
  Time timestamp = 0;
};

enum class ParseMode { Strict, Skip };

struct ParseIssue {
  std::size_t line = 0;
  std::string message;
};

struct ParseResult {
  std::vector<ReviewRecord> records;
  std::vector<ParseIssue> skipped;
};

// Comma- or tab-delimited (detected from the first non-empty line), optional
// header, columns item_id, user_id, rating, timestamp. Strict mode throws on the
// first bad row; skip mode records it and moves on.
ParseResult parse_records(std::istream& in, ParseMode mode = ParseMode::Strict);

inline constexpr std::size_t kDefaultMinReviews = 50;

// Keeps items with strictly more than min_reviews reviews.
std::vector<ReviewRecord> filter_items(const std::vector<ReviewRecord>& records,
                                       std::size_t min_reviews = kDefaultMinReviews);

inline double center_rating(int rating) { return static_cast<double>(rating) - 3.0; }

struct Replay {
  DecisionGrid grid;
  std::vector<std::string> item_ids;  // task j = item_ids[j - 1]
  std::vector<Arm> truths;
  std::vector<double> mean_ratings;
  // Per task: (timestamp, centered rating), ascending in time.
  std::vector<std::vector<std::pair<Time, double>>> events;
  bool first_review_ties = false;  // some items share a first-review time
};

// Tasks in first-review order (ties by item_id); grid = {first review - 1 for
// tasks 2, 3, ...} u {last timestamp}, deduplicated.
Replay build_streams(const std::vector<ReviewRecord>& records);

// Serves ratings with timestamps in (from, to].
class ReplaySource : public StreamSource {
 public:
  explicit ReplaySource(const Replay& replay) : replay_(replay) {}
  TaskBatch collect(std::size_t task, Time from_exclusive, Time to_inclusive) override;

 private:
  const Replay& replay_;
};

}  // namespace sava
