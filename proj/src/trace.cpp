#include "lqropt/trace.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lqropt {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::MaxIters: return "MaxIters";
    case RunStatus::RestartBudgetExceeded: return "RestartBudgetExceeded";
    case RunStatus::LeftFeasibleSet: return "LeftFeasibleSet";
  }
  return "MaxIters";
}

namespace {

RunStatus status_from_string(const std::string& s) {
  if (s == "Converged") return RunStatus::Converged;
  if (s == "MaxIters") return RunStatus::MaxIters;
  if (s == "RestartBudgetExceeded") return RunStatus::RestartBudgetExceeded;
  if (s == "LeftFeasibleSet") return RunStatus::LeftFeasibleSet;
  throw std::invalid_argument("unknown trace status: " + s);
}

const char* header_for(TraceKind kind) {
  switch (kind) {
    case TraceKind::Solver:
      return "iter,f,grad_norm,restart,wall_ms,lyap_solves";
    case TraceKind::Olqr:
      return "iter,f,grad_norm,restart,wall_ms,lyap_solves,phase,min_eig_est,"
             "ncd_steps,nag_restarts";
    case TraceKind::Hybrid:
      return "iter,f,grad_norm,restart,wall_ms,lyap_solves,energy,dfdt";
  }
  return "";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_real(const std::string& s) { return std::strtod(s.c_str(), nullptr); }
long parse_int(const std::string& s) { return std::strtol(s.c_str(), nullptr, 10); }

}  // namespace

void Trace::add_config(const std::string& key, const std::string& value) {
  config.emplace_back(key, value);
}

void Trace::add_config(const std::string& key, double value) {
  config.emplace_back(key, fmt17(value));
}

void Trace::add_config(const std::string& key, long value) {
  config.emplace_back(key, std::to_string(value));
}

std::string Trace::to_csv() const {
  std::ostringstream os;
  for (const auto& [k, v] : config) os << "# " << k << "=" << v << "\n";
  os << "# status=" << to_string(status) << "\n";
  os << header_for(kind) << "\n";
  for (const TraceRow& r : rows) {
    os << r.iter << ',' << fmt17(r.f) << ',' << fmt17(r.grad_norm) << ','
       << r.restart << ',' << fmt17(r.wall_ms) << ',' << r.lyap_solves;
    if (kind == TraceKind::Olqr) {
      os << ',' << r.phase << ',' << fmt17(r.min_eig_est) << ',' << r.ncd_steps
         << ',' << r.nag_restarts;
    } else if (kind == TraceKind::Hybrid) {
      os << ',' << fmt17(r.energy) << ',' << fmt17(r.dfdt);
    }
    os << "\n";
  }
  return os.str();
}

void Trace::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open trace file " + path);
  out << to_csv();
}

Trace Trace::from_csv_text(const std::string& text) {
  Trace t;
  std::istringstream is(text);
  std::string line;
  bool saw_header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const std::string body = line.substr(2);
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument("malformed trace comment: " + line);
      }
      const std::string key = body.substr(0, eq);
      const std::string value = body.substr(eq + 1);
      if (key == "status") {
        t.status = status_from_string(value);
      } else {
        t.config.emplace_back(key, value);
      }
      continue;
    }
    if (!saw_header) {
      if (line == header_for(TraceKind::Solver)) {
        t.kind = TraceKind::Solver;
      } else if (line == header_for(TraceKind::Olqr)) {
        t.kind = TraceKind::Olqr;
      } else if (line == header_for(TraceKind::Hybrid)) {
        t.kind = TraceKind::Hybrid;
      } else {
        throw std::invalid_argument("unknown trace header: " + line);
      }
      saw_header = true;
      continue;
    }
    const auto f = split_csv(line);
    const size_t expected = t.kind == TraceKind::Solver  ? 6u
                            : t.kind == TraceKind::Olqr  ? 10u
                                                         : 8u;
    if (f.size() != expected) {
      throw std::invalid_argument("trace row has wrong arity: " + line);
    }
    TraceRow r;
    r.iter = parse_int(f[0]);
    r.f = parse_real(f[1]);
    r.grad_norm = parse_real(f[2]);
    r.restart = parse_int(f[3]);
    r.wall_ms = parse_real(f[4]);
    r.lyap_solves = parse_int(f[5]);
    if (t.kind == TraceKind::Olqr) {
      r.phase = f[6];
      r.min_eig_est = parse_real(f[7]);
      r.ncd_steps = parse_int(f[8]);
      r.nag_restarts = parse_int(f[9]);
    } else if (t.kind == TraceKind::Hybrid) {
      r.energy = parse_real(f[6]);
      r.dfdt = parse_real(f[7]);
    }
    t.rows.push_back(std::move(r));
  }
  if (!saw_header) throw std::invalid_argument("trace text has no header row");
  return t;
}

Trace Trace::read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_csv_text(buf.str());
}

}  // namespace lqropt
