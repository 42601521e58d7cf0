#include "ingest.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <numeric>

#include "error.hpp"

namespace sava {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
bool parse_int(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end && !s.empty();
}

}  // namespace

ParseResult parse_records(std::istream& in, ParseMode mode) {
  ParseResult result;
  std::string line;
  std::size_t lineno = 0;
  char delim = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (!delim) delim = line.find('\t') != std::string::npos ? '\t' : ',';
    const auto fields = split(line, delim);

    auto bad = [&](const std::string& why) {
      const std::string msg = "line " + std::to_string(lineno) + ": " + why;
      if (mode == ParseMode::Strict) fail(ErrorCode::Parse, msg);
      result.skipped.push_back({lineno, msg});
    };

    ReviewRecord r;
    const bool rating_ok = fields.size() == 4 && parse_int(fields[2], r.rating);
    if (first_row) {
      first_row = false;
      // A header is a first row whose rating column is not a number.
      if (fields.size() == 4 && !rating_ok) continue;
    }
    if (fields.size() != 4) {
      bad("expected 4 fields, found " + std::to_string(fields.size()));
      continue;
    }
    if (!rating_ok) {
      bad("rating '" + std::string(fields[2]) + "' is not an integer");
      continue;
    }
    if (r.rating < 1 || r.rating > 5) {
      bad("rating " + std::to_string(r.rating) + " outside 1..5");
      continue;
    }
    if (!parse_int(fields[3], r.timestamp) || r.timestamp <= 0) {
      bad("timestamp '" + std::string(fields[3]) + "' is not a positive integer");
      continue;
    }
    if (fields[0].empty()) {
      bad("empty item id");
      continue;
    }
    r.item_id = std::string(fields[0]);
    r.user_id = std::string(fields[1]);
    result.records.push_back(std::move(r));
  }
  return result;
}

std::vector<ReviewRecord> filter_items(const std::vector<ReviewRecord>& records,
                                       std::size_t min_reviews) {
  if (min_reviews < 1) fail(ErrorCode::InvalidArgument, "min_reviews must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) ++counts[r.item_id];
  std::vector<ReviewRecord> out;
  for (const auto& r : records)
    if (counts[r.item_id] > min_reviews) out.push_back(r);
  return out;
}

Replay build_streams(const std::vector<ReviewRecord>& records) {
  struct Item {
    Time first = 0;
    std::vector<std::pair<Time, int>> ratings;
  };
  std::map<std::string, Item> items;
  Time last = 0;
  for (const auto& r : records) {
    auto [it, inserted] = items.try_emplace(r.item_id);
    if (inserted || r.timestamp < it->second.first) it->second.first = r.timestamp;
    it->second.ratings.emplace_back(r.timestamp, r.rating);
    last = std::max(last, r.timestamp);
  }
  if (items.size() < 2) fail(ErrorCode::InvalidArgument, "replay needs at least two items");

  // std::map iterates by item_id, so a stable sort on first review breaks ties by id.
  std::vector<std::pair<std::string, Item*>> order;
  for (auto& [id, item] : items) order.emplace_back(id, &item);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& x, const auto& y) { return x.second->first < y.second->first; });

  Replay replay;
  for (const auto& [id, item] : order) {
    std::stable_sort(item->ratings.begin(), item->ratings.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    double sum = 0.0;
    std::vector<std::pair<Time, double>> ev;
    for (const auto& [t, rating] : item->ratings) {
      sum += rating;
      ev.emplace_back(t, center_rating(rating));
    }
    const double mean = sum / static_cast<double>(item->ratings.size());
    replay.item_ids.push_back(id);
    replay.mean_ratings.push_back(mean);
    replay.truths.push_back(mean > 3.0 ? Arm::A : Arm::B);
    replay.events.push_back(std::move(ev));
    replay.grid.arrivals.push_back(item->first);
  }
  replay.first_review_ties = replay.grid.has_arrival_ties();

  auto& times = replay.grid.times;
  for (std::size_t j = 1; j < replay.grid.arrivals.size(); ++j)
    times.push_back(replay.grid.arrivals[j] - 1);
  times.push_back(last);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  replay.grid.validate();
  return replay;
}

TaskBatch ReplaySource::collect(std::size_t task, Time from_exclusive, Time to_inclusive) {
  if (task == 0 || task > replay_.events.size()) fail(ErrorCode::InvalidArgument, "unknown task");
  const auto& ev = replay_.events[task - 1];
  auto lo = std::upper_bound(ev.begin(), ev.end(), from_exclusive,
                             [](Time t, const auto& e) { return t < e.first; });
  auto hi = std::upper_bound(ev.begin(), ev.end(), to_inclusive,
                             [](Time t, const auto& e) { return t < e.first; });
  TaskBatch batch;
  batch.task = task;
  for (auto it = lo; it < hi; ++it) batch.samples.push_back(it->second);
  return batch;
}

}  // namespace sava
