#include "qosppc/io.hpp"

#include "qosppc/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace qosppc {

using nlohmann::json;

namespace {

[[noreturn]] void parse_error(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

Vector to_vector(const json& j, const std::string& what) {
  if (!j.is_array()) parse_error(what + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) parse_error(what + " must be an array of numbers");
    v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  }
  return v;
}

json from_vector(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

template <typename T>
T required(const json& doc, const char* key) {
  if (!doc.contains(key)) parse_error(std::string("missing key '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    parse_error(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::string fmt(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    parse_error("bad number '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) parse_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    parse_error(path.string() + ": " + e.what());
  }
}

}  // namespace

ScenarioDescription parse_scenario(const json& doc, std::uint64_t seed) {
  if (!doc.is_object()) parse_error("scenario document must be an object");
  ScenarioDescription d;
  d.dimension = required<int>(doc, "dimension");
  d.r_min = required<double>(doc, "r_min");
  d.r_max = required<double>(doc, "r_max");
  d.alpha = required<double>(doc, "alpha");

  const json agents = required<json>(doc, "agents");
  if (!agents.is_array() || agents.empty()) parse_error("'agents' must be a nonempty list");
  std::size_t with_position = 0;
  for (const auto& a : agents) {
    if (!a.is_object()) parse_error("each agent must be an object");
    if (a.contains("position")) {
      d.positions.push_back(to_vector(a.at("position"), "agent position"));
      ++with_position;
    } else {
      d.positions.emplace_back();
    }
    d.velocities.push_back(a.contains("velocity") ? to_vector(a.at("velocity"), "agent velocity")
                                                  : Vector::Zero(d.dimension));
  }

  const json edges = doc.value("edges", json::array());
  for (const auto& e : edges) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
      parse_error("each edge must be a pair of agent numbers");
    }
    d.edges.emplace_back(e[0].get<int>() - 1, e[1].get<int>() - 1);
  }
  for (const auto& a : required<json>(doc, "active")) {
    if (!a.is_number_integer()) parse_error("'active' must list agent numbers");
    d.active.push_back(a.get<int>() - 1);
  }

  const json tasks = required<json>(doc, "tasks");
  if (!tasks.is_array()) parse_error("'tasks' must be a list");
  for (std::size_t l = 0; l < tasks.size(); ++l) {
    const json& t = tasks[l];
    TaskSpec task;
    task.id = static_cast<int>(l + 1);
    task.region.center = to_vector(required<json>(t, "center"), "task center");
    task.region.radius = required<double>(t, "radius");
    task.deadline = required<double>(t, "deadline");
    task.boundaries = required<std::vector<double>>(t, "boundaries");
    task.rewards = required<std::vector<double>>(t, "rewards");
    d.tasks.push_back(std::move(task));
  }

  if (with_position != d.positions.size()) {
    if (with_position != 0) parse_error("give either every agent position or none");
    if (!doc.contains("initial_box")) parse_error("agent positions omitted without an 'initial_box'");
    const json& box = doc.at("initial_box");
    randomize_initial_positions(d, to_vector(required<json>(box, "lower"), "initial_box.lower"),
                                to_vector(required<json>(box, "upper"), "initial_box.upper"), seed);
  }
  return d;
}

ScenarioDescription load_scenario(const std::filesystem::path& path, std::uint64_t seed) {
  return parse_scenario(read_json_file(path), seed);
}

json scenario_to_json(const ScenarioDescription& d) {
  json doc;
  doc["dimension"] = d.dimension;
  doc["r_min"] = d.r_min;
  doc["r_max"] = d.r_max;
  doc["alpha"] = d.alpha;
  json agents = json::array();
  for (std::size_t i = 0; i < d.positions.size(); ++i) {
    json a;
    a["position"] = from_vector(d.positions[i]);
    a["velocity"] = from_vector(i < d.velocities.size() ? d.velocities[i] : Vector::Zero(d.dimension));
    agents.push_back(a);
  }
  doc["agents"] = agents;
  json edges = json::array();
  for (const auto& [i, j] : d.edges) edges.push_back({i + 1, j + 1});
  doc["edges"] = edges;
  json active = json::array();
  for (int i : d.active) active.push_back(i + 1);
  doc["active"] = active;
  json tasks = json::array();
  for (const auto& t : d.tasks) {
    tasks.push_back({{"center", from_vector(t.region.center)},
                     {"radius", t.region.radius},
                     {"deadline", t.deadline},
                     {"boundaries", t.boundaries},
                     {"rewards", t.rewards}});
  }
  doc["tasks"] = tasks;
  return doc;
}

std::string scenario_hash(const ScenarioDescription& d) {
  const std::string canonical = scenario_to_json(d).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json schedule_to_json(const ScheduleDocument& doc) {
  const Schedule& s = doc.schedule;
  json out;
  out["version"] = doc.version;
  out["scenario_hash"] = doc.scenario_hash;
  out["seed"] = doc.seed;
  out["alpha"] = doc.config.alpha;
  out["include_initial_leg"] = doc.config.include_initial_leg;
  out["epsilon"] = s.epsilon;
  out["order"] = s.order;
  json assignments = json::array();
  for (int id : s.order) {
    assignments.push_back({{"task", id}, {"qos", s.qos_of(id)}, {"ee", s.ee_of(id)}});
  }
  out["assignments"] = assignments;
  out["reward"] = s.reward;
  out["cost"] = s.cost;
  out["objective"] = s.objective;
  return out;
}

ScheduleDocument schedule_from_json(const json& doc) {
  if (!doc.is_object()) parse_error("schedule document must be an object");
  ScheduleDocument out;
  out.version = doc.value("version", std::string(kToolVersion));
  out.scenario_hash = required<std::string>(doc, "scenario_hash");
  out.seed = required<std::uint64_t>(doc, "seed");
  out.config.alpha = required<double>(doc, "alpha");
  out.config.include_initial_leg = required<bool>(doc, "include_initial_leg");
  Schedule& s = out.schedule;
  s.epsilon = required<double>(doc, "epsilon");
  s.order = required<std::vector<int>>(doc, "order");
  const std::size_t m = s.order.size();
  s.qos.assign(m, -1);
  s.ee.assign(m, std::numeric_limits<double>::quiet_NaN());
  for (const auto& a : required<json>(doc, "assignments")) {
    const int id = required<int>(a, "task");
    if (id < 1 || static_cast<std::size_t>(id) > m) parse_error("assignment for unknown task " + std::to_string(id));
    s.qos[static_cast<std::size_t>(id - 1)] = required<int>(a, "qos");
    s.ee[static_cast<std::size_t>(id - 1)] = required<double>(a, "ee");
  }
  for (std::size_t l = 0; l < m; ++l) {
    if (s.qos[l] < 0) parse_error("task " + std::to_string(l + 1) + " has no assignment");
  }
  s.reward = required<double>(doc, "reward");
  s.cost = required<double>(doc, "cost");
  s.objective = required<double>(doc, "objective");
  return out;
}

ScheduleDocument load_schedule(const std::filesystem::path& path) { return schedule_from_json(read_json_file(path)); }

std::string schedule_summary(const ScheduleDocument& doc, const Scenario& scenario) {
  std::ostringstream out;
  const Schedule& s = doc.schedule;
  out << "scenario " << doc.scenario_hash << " (qosppc " << doc.version << ")\n";
  out << "alpha " << doc.config.alpha << ", initial leg " << (doc.config.include_initial_leg ? "on" : "off")
      << ", epsilon " << s.epsilon << "\n";
  for (int id : s.order) {
    const int k = s.qos_of(id);
    const TaskSpec& task = scenario.task(id);
    out << "  task " << id << ": ";
    if (k == 0) {
      out << "rejected (reward " << task.rewards[0] << ")\n";
    } else {
      out << "QoS " << k << ", window (" << task.boundaries[static_cast<std::size_t>(k)] << ", "
          << task.boundaries[static_cast<std::size_t>(k - 1)] << "], reward " << task.rewards[static_cast<std::size_t>(k)]
          << "\n";
    }
  }
  out << "reward " << s.reward << ", cost " << s.cost << ", objective " << s.objective << "\n";
  return out.str();
}

std::filesystem::path edge_file_for(const std::filesystem::path& trace_csv) {
  std::filesystem::path out = trace_csv;
  out.replace_filename(trace_csv.stem().string() + "_edges" + trace_csv.extension().string());
  return out;
}

namespace {

std::string header_block(const TraceDocument& doc) {
  const MissionTrace& t = doc.trace;
  const SimConfig& c = t.config;
  std::ostringstream out;
  out << "# version=" << doc.version << "\n";
  out << "# scenario_hash=" << doc.scenario_hash << "\n";
  out << "# seed=" << doc.seed << "\n";
  out << "# config dt=" << fmt(c.dt) << " refine_events=" << (c.refine_events ? 1 : 0)
      << " event_tolerance=" << fmt(c.event_tolerance) << " deadline_guard=" << fmt(c.deadline_guard)
      << " settle_horizon=" << fmt(c.settle_horizon) << "\n";
  const SynthesisParams& p = c.synthesis;
  out << "# synthesis margin=" << fmt(p.margin) << " gain_margin=" << fmt(p.gain_margin)
      << " delta_frac=" << fmt(p.delta_frac) << " sigma_frac=" << fmt(p.sigma_frac) << " idle_kp=" << fmt(p.idle_kp)
      << " idle_kv=" << fmt(p.idle_kv)
      << " edge_width=" << (p.edge_width == EdgeWidth::Uniform ? "uniform" : "tight") << "\n";
  out << "# status=" << to_string(t.status) << " failed_task=" << t.failed_task
      << " failure_time=" << fmt(t.failure_time) << "\n";
  out << "# achieved";
  for (int k : t.achieved) out << " " << k;
  out << "\n";
  for (const auto& e : t.executions) {
    out << "# execution task=" << e.task << " start=" << fmt(e.start) << " lower=" << fmt(e.lower)
        << " upper=" << fmt(e.upper) << " case=" << to_string(e.kind)
        << " completion=" << (e.completion ? fmt(*e.completion) : std::string("none"))
        << " assigned_qos=" << e.assigned_qos << " achieved_qos=" << e.achieved_qos
        << " max_input=" << fmt(e.max_input) << "\n";
  }
  if (!t.message.empty()) out << "# message=" << t.message << "\n";
  return out.str();
}

std::map<std::string, std::string> key_values(std::string_view rest) {
  std::map<std::string, std::string> out;
  for (std::string_view token : split(rest, ' ')) {
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) continue;
    out.emplace(std::string(token.substr(0, eq)), std::string(token.substr(eq + 1)));
  }
  return out;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) parse_error("trace header lacks '" + key + "'");
  return it->second;
}

ControlCase parse_case(const std::string& text) {
  if (text == "CaseI") return ControlCase::CaseI;
  if (text == "CaseII") return ControlCase::CaseII;
  if (text == "Idle") return ControlCase::Idle;
  parse_error("unknown controller case '" + text + "'");
}

RunStatus parse_status(const std::string& text) {
  for (RunStatus s : {RunStatus::Completed, RunStatus::BoundViolation, RunStatus::DeadlinePassed,
                      RunStatus::NonFiniteState}) {
    if (text == to_string(s)) return s;
  }
  parse_error("unknown status '" + text + "'");
}

}  // namespace

void write_trace(const TraceDocument& doc, const CommGraph& graph, const std::filesystem::path& trace_csv) {
  std::ofstream out(trace_csv);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + trace_csv.string());
  const auto& samples = doc.trace.samples;
  const long n = samples.empty() ? 0 : samples.front().x.cols();
  out << "# qosppc trace\n" << header_block(doc);
  out << "t,agent";
  for (const char* prefix : {"x", "v", "u"}) {
    for (long d = 1; d <= n; ++d) out << "," << prefix << d;
  }
  out << ",xi_track,lower_bound,upper_bound\n";
  for (const Sample& s : samples) {
    const std::string t = fmt(s.t);
    for (long i = 0; i < s.x.rows(); ++i) {
      out << t << "," << (i + 1);
      for (const Matrix* m : {&s.x, &s.v, &s.u}) {
        for (long d = 0; d < n; ++d) out << "," << fmt((*m)(i, d));
      }
      out << "," << fmt(s.xi_track(i)) << "," << fmt(s.lower(i)) << "," << fmt(s.upper(i)) << "\n";
    }
  }

  std::ofstream edges(edge_file_for(trace_csv));
  if (!edges) throw Error(ErrorCode::ParseError, "cannot write " + edge_file_for(trace_csv).string());
  edges << "# qosppc edges\n# scenario_hash=" << doc.scenario_hash << "\n";
  edges << "t,edge,dist,xi_edge,gamma_bound\n";
  for (const Sample& s : samples) {
    const std::string t = fmt(s.t);
    for (std::size_t e = 0; e < graph.edge_count(); ++e) {
      const Edge& edge = graph.edges()[e];
      const auto k = static_cast<Eigen::Index>(e);
      edges << t << "," << (edge.i + 1) << "-" << (edge.j + 1) << "," << fmt(s.edge_dist(k)) << ","
            << fmt(s.xi_edge(k)) << "," << fmt(s.gamma(k)) << "\n";
    }
  }
}

TraceDocument read_trace(const std::filesystem::path& trace_csv) {
  std::ifstream in(trace_csv);
  if (!in) parse_error("cannot open " + trace_csv.string());
  TraceDocument doc;
  MissionTrace& trace = doc.trace;
  doc.version.clear();

  std::string line;
  long n = -1;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> times;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string_view body = std::string_view(line).substr(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      if (body.rfind("message=", 0) == 0) {
        trace.message = std::string(body.substr(8));
        continue;
      }
      if (body.rfind("version=", 0) == 0) {
        doc.version = std::string(body.substr(8));
      } else if (body.rfind("scenario_hash=", 0) == 0) {
        doc.scenario_hash = std::string(body.substr(14));
      } else if (body.rfind("seed=", 0) == 0) {
        doc.seed = std::stoull(std::string(body.substr(5)));
      } else if (body.rfind("config ", 0) == 0) {
        const auto kv = key_values(body.substr(7));
        trace.config.dt = parse_double(need(kv, "dt"));
        trace.config.refine_events = need(kv, "refine_events") == "1";
        trace.config.event_tolerance = parse_double(need(kv, "event_tolerance"));
        trace.config.deadline_guard = parse_double(need(kv, "deadline_guard"));
        trace.config.settle_horizon = parse_double(need(kv, "settle_horizon"));
        trace.config.seed = doc.seed;
      } else if (body.rfind("synthesis ", 0) == 0) {
        const auto kv = key_values(body.substr(10));
        SynthesisParams& p = trace.config.synthesis;
        p.margin = parse_double(need(kv, "margin"));
        p.gain_margin = parse_double(need(kv, "gain_margin"));
        p.delta_frac = parse_double(need(kv, "delta_frac"));
        p.sigma_frac = parse_double(need(kv, "sigma_frac"));
        p.idle_kp = parse_double(need(kv, "idle_kp"));
        p.idle_kv = parse_double(need(kv, "idle_kv"));
        const std::string width = need(kv, "edge_width");
        if (width != "uniform" && width != "tight") throw Error(ErrorCode::ParseError, "bad edge_width " + width);
        p.edge_width = width == "uniform" ? EdgeWidth::Uniform : EdgeWidth::Tight;
      } else if (body.rfind("status=", 0) == 0) {
        const auto kv = key_values(body);
        trace.status = parse_status(need(kv, "status"));
        trace.failed_task = std::stoi(need(kv, "failed_task"));
        trace.failure_time = parse_double(need(kv, "failure_time"));
      } else if (body.rfind("achieved", 0) == 0) {
        trace.achieved.clear();
        for (std::string_view tok : split(body.substr(8), ' ')) {
          if (!tok.empty()) trace.achieved.push_back(std::stoi(std::string(tok)));
        }
      } else if (body.rfind("execution ", 0) == 0) {
        const auto kv = key_values(body.substr(10));
        ExecutionRecord e;
        e.task = std::stoi(need(kv, "task"));
        e.start = parse_double(need(kv, "start"));
        e.lower = parse_double(need(kv, "lower"));
        e.upper = parse_double(need(kv, "upper"));
        e.kind = parse_case(need(kv, "case"));
        const std::string& completion = need(kv, "completion");
        if (completion != "none") e.completion = parse_double(completion);
        e.assigned_qos = std::stoi(need(kv, "assigned_qos"));
        e.achieved_qos = std::stoi(need(kv, "achieved_qos"));
        e.max_input = parse_double(need(kv, "max_input"));
        trace.executions.push_back(e);
      }
      continue;
    }
    const auto cells = split(line, ',');
    if (n < 0) {
      if (cells.size() < 5 || cells[0] != "t" || cells[1] != "agent" || (cells.size() - 5) % 3 != 0) {
        parse_error("unexpected trace column header");
      }
      n = static_cast<long>((cells.size() - 5) / 3);
      continue;
    }
    if (static_cast<long>(cells.size()) != 5 + 3 * n) parse_error("trace row with wrong column count: " + line);
    std::vector<double> row;
    row.reserve(cells.size());
    for (auto cell : cells) row.push_back(parse_double(cell));
    rows.push_back(std::move(row));
    times.emplace_back(cells[0]);
  }
  if (n < 0) parse_error(trace_csv.string() + " has no column header");

  // Rows sharing a time stamp form one sample; agents numbered 1..N.
  for (std::size_t r = 0; r < rows.size();) {
    std::size_t end = r;
    while (end < rows.size() && times[end] == times[r]) ++end;
    const long agents = static_cast<long>(end - r);
    Sample s;
    s.t = rows[r][0];
    s.x.resize(agents, n);
    s.v.resize(agents, n);
    s.u.resize(agents, n);
    s.xi_track.resize(agents);
    s.lower.resize(agents);
    s.upper.resize(agents);
    for (long i = 0; i < agents; ++i) {
      const auto& row = rows[r + static_cast<std::size_t>(i)];
      if (static_cast<long>(row[1]) != i + 1) parse_error("agent rows out of order at t=" + times[r]);
      for (long d = 0; d < n; ++d) {
        s.x(i, d) = row[static_cast<std::size_t>(2 + d)];
        s.v(i, d) = row[static_cast<std::size_t>(2 + n + d)];
        s.u(i, d) = row[static_cast<std::size_t>(2 + 2 * n + d)];
      }
      s.xi_track(i) = row[static_cast<std::size_t>(2 + 3 * n)];
      s.lower(i) = row[static_cast<std::size_t>(3 + 3 * n)];
      s.upper(i) = row[static_cast<std::size_t>(4 + 3 * n)];
    }
    trace.samples.push_back(std::move(s));
    r = end;
  }

  // Edge companion.
  std::vector<std::vector<std::array<double, 3>>> edge_rows(trace.samples.size());
  std::ifstream edges(edge_file_for(trace_csv));
  if (!edges) parse_error("cannot open " + edge_file_for(trace_csv).string());
  std::size_t sample = 0;
  std::string last_time;
  bool header_seen = false;
  while (std::getline(edges, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (!header_seen) {
      if (cells.size() != 5 || cells[0] != "t") parse_error("unexpected edge column header");
      header_seen = true;
      continue;
    }
    if (cells.size() != 5) parse_error("edge row with wrong column count: " + line);
    const std::string time(cells[0]);
    if (!last_time.empty() && time != last_time) ++sample;
    last_time = time;
    if (sample >= trace.samples.size() || parse_double(time) != trace.samples[sample].t) {
      parse_error("edge file does not line up with the trace at t=" + time);
    }
    edge_rows[sample].push_back({parse_double(cells[2]), parse_double(cells[3]), parse_double(cells[4])});
  }
  for (std::size_t s = 0; s < trace.samples.size(); ++s) {
    Sample& smp = trace.samples[s];
    const auto m = static_cast<Eigen::Index>(edge_rows[s].size());
    smp.edge_dist.resize(m);
    smp.xi_edge.resize(m);
    smp.gamma.resize(m);
    for (Eigen::Index e = 0; e < m; ++e) {
      smp.edge_dist(e) = edge_rows[s][static_cast<std::size_t>(e)][0];
      smp.xi_edge(e) = edge_rows[s][static_cast<std::size_t>(e)][1];
      smp.gamma(e) = edge_rows[s][static_cast<std::size_t>(e)][2];
    }
  }

  // Segment of each sample from the execution log.
  for (Sample& s : trace.samples) {
    s.segment = -1;
    for (std::size_t k = 0; k < trace.executions.size(); ++k) {
      const auto& e = trace.executions[k];
      if (s.t >= e.start && (!e.completion || s.t < *e.completion)) s.segment = static_cast<int>(k);
    }
  }
  return doc;
}

std::string mission_summary(const TraceDocument& doc) {
  std::ostringstream out;
  const MissionTrace& t = doc.trace;
  out << "scenario " << doc.scenario_hash << " (qosppc " << doc.version << "), seed " << doc.seed << ", dt "
      << t.config.dt << "\n";
  out << "status " << to_string(t.status) << "\n";
  for (const auto& e : t.executions) {
    out << "  task " << e.task << ": " << to_string(e.kind) << ", start " << e.start << ", window (" << e.lower
        << ", " << e.upper << "], ";
    if (e.completion) {
      out << "completed at " << *e.completion << ", QoS " << e.achieved_qos << " (assigned " << e.assigned_qos
          << "), max |u| " << e.max_input << "\n";
    } else {
      out << "not completed\n";
    }
  }
  if (!t.message.empty()) out << "failure: " << t.message << "\n";
  out << t.samples.size() << " samples\n";
  return out.str();
}

json report_to_json(const CertificateReport& report, const std::string& hash) {
  json out;
  out["version"] = kToolVersion;
  out["scenario_hash"] = hash;
  out["pass"] = report.pass;
  out["integrity_ok"] = report.integrity_ok;
  out["monotone_tolerance"] = report.monotone_tolerance;
  out["max_v_increment"] = report.max_v_increment;
  const auto margin_list = [](const std::vector<double>& values) {
    json arr = json::array();
    for (double v : values) arr.push_back(std::isnan(v) ? json(nullptr) : json(v));
    return arr;
  };
  out["agent_margin"] = margin_list(report.agent_margin);
  out["edge_margin"] = margin_list(report.edge_margin);
  json tasks = json::array();
  for (const auto& c : report.tasks) {
    json t;
    t["task"] = c.task;
    t["case"] = to_string(c.kind);
    t["start"] = c.start ? json(*c.start) : json(nullptr);
    t["completion"] = c.completion ? json(*c.completion) : json(nullptr);
    t["window"] = {c.lower, c.upper};
    t["assigned_qos"] = c.assigned_qos;
    t["achieved_qos"] = c.achieved_qos;
    t["qos_match"] = c.qos_match;
    t["min_tracking_margin"] = c.min_tracking_margin;
    t["min_edge_margin"] = c.min_edge_margin;
    t["funnels_ok"] = c.funnels_ok;
    t["c1"] = c.c1 ? json(*c.c1) : json(nullptr);
    t["c2"] = c.c2;
    t["gains_ok"] = c.gains_ok;
    t["max_input"] = c.max_input;
    t["lyapunov"] = {{"samples", c.v_series.size()},
                     {"worst_increment", c.monotone.worst_increment},
                     {"pass", c.monotone.pass}};
    if (c.kind == ControlCase::CaseII) {
      t["lyapunov_closing"] = {{"samples", c.v_series_closing.size()},
                               {"worst_increment", c.monotone_closing.worst_increment},
                               {"pass", c.monotone_closing.pass}};
      if (c.v_at_lower) t["v_at_lower"] = {c.v_at_lower->first, c.v_at_lower->second};
    }
    tasks.push_back(t);
  }
  out["tasks"] = tasks;
  out["failures"] = report.failures;
  return out;
}

}  // namespace qosppc
