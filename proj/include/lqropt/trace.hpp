#pragma once

#include <string>
#include <utility>
#include <vector>

namespace lqropt {

// Formats a double as decimal with 17 significant digits ("%.17g"), enough to
// round-trip any double exactly.
std::string fmt17(double x);

enum class TraceKind { Solver, Olqr, Hybrid };

enum class RunStatus {
  Converged,
  MaxIters,
  RestartBudgetExceeded,
  LeftFeasibleSet,
};

std::string to_string(RunStatus s);

struct TraceRow {
  long iter = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  long restart = 0;  // restart / jump events folded into this accepted row
  double wall_ms = 0.0;
  long lyap_solves = 0;
  // Olqr columns
  std::string phase;
  double min_eig_est = 0.0;
  long ncd_steps = 0;
  long nag_restarts = 0;
  // Hybrid columns
  double energy = 0.0;
  double dfdt = 0.0;
};

// Per-iteration record of a solver run. The CSV layout is
//   # key=value            (config echo, one line per entry)
//   # status=<status>
//   iter,f,grad_norm,restart,wall_ms,lyap_solves[,phase,min_eig_est,
//       ncd_steps,nag_restarts][,energy,dfdt]
// with one row per accepted iterate and all reals in 17-significant-digit
// decimal.
struct Trace {
  TraceKind kind = TraceKind::Solver;
  std::vector<std::pair<std::string, std::string>> config;
  RunStatus status = RunStatus::MaxIters;
  std::vector<TraceRow> rows;

  void add_config(const std::string& key, const std::string& value);
  void add_config(const std::string& key, double value);
  void add_config(const std::string& key, long value);

  std::string to_csv() const;
  void write_csv(const std::string& path) const;

  static Trace from_csv_text(const std::string& text);
  static Trace read_csv(const std::string& path);
};

}  // namespace lqropt
