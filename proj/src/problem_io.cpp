#include "lqropt/problem_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lqropt/trace.hpp"

namespace lqropt {

namespace {

void emit_matrix(std::ostringstream& os, const Matrix& M) {
  os << "[";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    if (i) os << ",";
    os << "[";
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) os << ",";
      os << fmt17(M(i, j));
    }
    os << "]";
  }
  os << "]";
}

Matrix parse_matrix(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].empty()) {
    throw std::invalid_argument("problem json: missing matrix " + key);
  }
  const auto& rows = j[key];
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = static_cast<Eigen::Index>(rows[0].size());
  Matrix M(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != c) {
      throw std::invalid_argument("problem json: ragged matrix " + key);
    }
    for (Eigen::Index jj = 0; jj < c; ++jj) {
      M(i, jj) = rows[i][jj].get<double>();
    }
  }
  return M;
}

}  // namespace

std::string problem_to_json(const LqrProblem& P, const std::string& meta) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"kind\": \""
     << (P.kind == ProblemKind::SLQR ? "SLQR" : "OLQR") << "\",\n";
  const std::pair<const char*, const Matrix*> fields[] = {
      {"A", &P.A}, {"B", &P.B}, {"C", &P.C},
      {"Q", &P.Q}, {"R", &P.R}, {"Sigma", &P.Sigma}};
  for (const auto& [name, M] : fields) {
    os << "  \"" << name << "\": ";
    emit_matrix(os, *M);
    os << ",\n";
  }
  if (!meta.empty()) {
    os << "  \"meta\": " << meta << ",\n";
  }
  std::string body = os.str();
  body.erase(body.size() - 2, 1);  // drop the trailing comma
  return body + "}\n";
}

void write_problem(const LqrProblem& P, const std::string& path,
                   const std::string& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open problem file " + path);
  out << problem_to_json(P, meta);
}

LqrProblem problem_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  LqrProblem P = LqrProblem::make(
      parse_matrix(j, "A"), parse_matrix(j, "B"), parse_matrix(j, "C"),
      parse_matrix(j, "Q"), parse_matrix(j, "R"), parse_matrix(j, "Sigma"));
  if (j.contains("kind")) {
    const std::string kind = j["kind"].get<std::string>();
    const ProblemKind want =
        kind == "SLQR" ? ProblemKind::SLQR
        : kind == "OLQR"
            ? ProblemKind::OLQR
            : throw std::invalid_argument("problem json: unknown kind " + kind);
    if (want != P.kind) {
      throw std::invalid_argument(
          "problem json: declared kind does not match C");
    }
  }
  return P;
}

LqrProblem read_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open problem file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return problem_from_json(buf.str());
}

}  // namespace lqropt
