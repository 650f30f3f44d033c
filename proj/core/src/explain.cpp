#include <algorithm>

#include "stockmem/backtest.hpp"
#include "stockmem/errors.hpp"

namespace stockmem {
namespace {

std::optional<Reflection> find_reflection(const Store& store, const std::string& id) {
  auto at = id.rfind('@');
  if (at == std::string::npos) return std::nullopt;
  for (auto& r : store.reflections({RecordKind::reflections, id.substr(0, at), Date::max()})) {
    if (r.reflection_id == id) return r;
  }
  return std::nullopt;
}

std::string event_line(const Event& e) {
  return "[" + e.group.name + " / " + e.type.name + "] " + e.description;
}

}  // namespace

std::string report_explainability(const BacktestRecord& record, const Store& store) {
  std::string out;
  out += "Prediction " + record.record_id + "\n";
  out += "  predicted: " + (record.predicted ? std::string(to_string(*record.predicted)) : "abstained") +
         "\n";
  out += "  actual:    " + std::string(to_string(record.actual)) +
         (record.scored ? "" : " (not scored)") + "\n";
  out += "  series:    " + record.series_ref + "\n";
  out += "  model reason: " + record.reason + "\n";

  out += "\nEvents on " + record.date.str() + ":\n";
  if (record.event_ids.empty()) out += "  (none)\n";
  for (const auto& id : record.event_ids) {
    auto e = store.event(id);
    out += "  - " + (e ? event_line(*e) : id) + "  {" + id + "}\n";
    auto chain = std::find_if(record.chains.begin(), record.chains.end(),
                              [&](const EventChain& c) { return c.head == id; });
    if (chain == record.chains.end()) continue;
    if (chain->predecessors.empty()) {
      out += "      chain: first occurrence\n";
    } else {
      for (std::size_t i = 0; i < chain->predecessors.size(); ++i) {
        auto p = store.event(chain->predecessors[i]);
        out += "      <- " + chain->predecessor_dates[i].str() + " " +
               (p ? p->description : chain->predecessors[i]) + "\n";
      }
    }
    out += "      delta (" + std::string(to_string(chain->delta_polarity)) + "): " + chain->delta_info + "\n";
  }

  out += "\nHistorical references:\n";
  if (record.reference_ids.empty()) {
    out += "  no historical analog found";
    out += record.candidate_ids.empty() ? "\n" : " (" + std::to_string(record.candidate_ids.size()) +
                                                     " candidates screened, none kept)\n";
  }
  for (const auto& id : record.reference_ids) {
    auto r = find_reflection(store, id);
    if (!r) {
      out += "  - " + id + " (reflection not found)\n";
      continue;
    }
    out += "  - " + id + " realized " + std::string(to_string(r->realized_move)) + "\n";
    out += "      reason: " + r->reason + "\n";
    out += "      key events: " + r->key_events + "\n";
  }
  return out;
}

std::string report_explainability(std::span<const BacktestRecord> records,
                                  std::string_view record_id, const Store& store) {
  for (const auto& r : records) {
    if (r.record_id == record_id) return report_explainability(r, store);
  }
  throw PreconditionError("no prediction record " + std::string(record_id));
}

}  // namespace stockmem
