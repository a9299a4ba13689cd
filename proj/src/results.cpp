#include "hamlet/results.hpp"

#include <sstream>

namespace hamlet {

static std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

void AggOutcome::merge(const AggOutcome& o) {
  payload.add(o.payload);
  if (o.any_agg_event) {
    if (!any_agg_event) {
      min_value = o.min_value;
      max_value = o.max_value;
      any_agg_event = true;
    } else {
      if (o.min_value < min_value) min_value = o.min_value;
      if (o.max_value > max_value) max_value = o.max_value;
    }
  }
}

void AggOutcome::note_agg_event(const Rat& v) {
  if (!any_agg_event) {
    min_value = v;
    max_value = v;
    any_agg_event = true;
  } else {
    if (v < min_value) min_value = v;
    if (v > max_value) max_value = v;
  }
}

std::optional<ResultCell> finalize_cell(const Query& q, Time window_end, const AggOutcome& out) {
  ResultCell cell;
  cell.window_end = window_end;
  cell.aggregate = aggregate_to_string(q.agg);
  switch (q.agg.kind) {
    case AggKind::CountStar:
      cell.value = Rat(out.payload.cnt);
      return cell;
    case AggKind::CountType:
      cell.value = Rat(out.payload.ecnt);
      return cell;
    case AggKind::Sum:
      cell.value = out.payload.esum;
      return cell;
    case AggKind::Avg:
      if (out.payload.ecnt == 0) return std::nullopt;
      cell.value = out.payload.esum / Rat(out.payload.ecnt);
      return cell;
    case AggKind::Min:
      if (!out.any_agg_event) return std::nullopt;
      cell.value = out.min_value;
      return cell;
    case AggKind::Max:
      if (!out.any_agg_event) return std::nullopt;
      cell.value = out.max_value;
      return cell;
  }
  return std::nullopt;
}

std::string result_csv(const ResultTable& table) {
  std::ostringstream out;
  out << "query,window_start,window_end,group,aggregate,value\n";
  for (const auto& [key, cell] : table) {
    out << csv_field(key.query) << ',' << key.window_start << ',' << cell.window_end << ','
        << csv_field(key.group) << ',' << csv_field(cell.aggregate) << ',' << format_rat(cell.value)
        << '\n';
  }
  return out.str();
}

}  // namespace hamlet
