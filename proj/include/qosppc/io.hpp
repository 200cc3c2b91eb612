#pragma once

// Document formats: scenario and schedule (JSON), mission trace (CSV with a
// parallel per-edge CSV), certificate report (JSON).

#include "qosppc/diagnostics.hpp"
#include "qosppc/scenario.hpp"
#include "qosppc/scheduler.hpp"
#include "qosppc/simulator.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace qosppc {

inline constexpr const char* kToolVersion = "0.1.0";

/// Parses a scenario document. Agent positions may be omitted when an
/// `initial_box` is given; they are then drawn with `seed`. Throws ParseError.
ScenarioDescription parse_scenario(const nlohmann::json& doc, std::uint64_t seed);
ScenarioDescription load_scenario(const std::filesystem::path& path, std::uint64_t seed);

/// Canonical document of a resolved description (explicit positions).
nlohmann::json scenario_to_json(const ScenarioDescription& description);
/// 64-bit FNV-1a of the canonical document, as 16 hex digits.
std::string scenario_hash(const ScenarioDescription& description);

struct ScheduleDocument {
  Schedule schedule;
  SchedulerConfig config;
  std::string scenario_hash;
  std::uint64_t seed = 0;
  std::string version = kToolVersion;
};

nlohmann::json schedule_to_json(const ScheduleDocument& doc);
ScheduleDocument schedule_from_json(const nlohmann::json& doc);
ScheduleDocument load_schedule(const std::filesystem::path& path);
std::string schedule_summary(const ScheduleDocument& doc, const Scenario& scenario);

struct TraceDocument {
  MissionTrace trace;
  std::string scenario_hash;
  std::uint64_t seed = 0;
  std::string version = kToolVersion;
};

/// Path of the per-edge companion file: trace.csv -> trace_edges.csv.
std::filesystem::path edge_file_for(const std::filesystem::path& trace_csv);

/// Writes the agent CSV and its edge companion. Numbers use the shortest
/// round-trip representation.
void write_trace(const TraceDocument& doc, const CommGraph& graph, const std::filesystem::path& trace_csv);
/// Reads both files back. Throws ParseError.
TraceDocument read_trace(const std::filesystem::path& trace_csv);
std::string mission_summary(const TraceDocument& doc);

nlohmann::json report_to_json(const CertificateReport& report, const std::string& scenario_hash);

}  // namespace qosppc
