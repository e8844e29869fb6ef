#include "divergence/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace divergence::report {

namespace {

const char* status_name(schema::CheckStatus s) {
  switch (s) {
    case schema::CheckStatus::Pass: return "pass";
    case schema::CheckStatus::Fail: return "fail";
    case schema::CheckStatus::ExpectedFail: return "expected_fail";
  }
  return "fail";
}

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void put(std::ostream& os, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, res.ptr - buf);
}

}  // namespace

bool VerificationReport::passed() const {
  for (const auto& c : checks)
    if (c.mandatory && !c.passed()) return false;
  return true;
}

Json to_json(const schema::ConditionReport& r) {
  return Json{{"check_id", r.check_id},
              {"k_range", {r.k_lo, r.k_hi}},
              {"lhs", number(r.lhs)},
              {"relation", r.relation},
              {"rhs", number(r.rhs)},
              {"tolerance", number(r.tolerance)},
              {"status", status_name(r.status)},
              {"witness", r.witness},
              {"note", r.note},
              {"mandatory", r.mandatory}};
}

Json to_json(const interval::MooreCertificate& c) {
  return Json{{"center", c.center},
              {"radius", number(c.radius)},
              {"a_bound", number(c.a_bound)},
              {"b_bound", number(c.b_bound)},
              {"solution_radius", number(c.solution_radius)},
              {"certified", c.certified},
              {"failure", c.failure}};
}

Json to_json(const replay::ReplayTrace& t) {
  Json metric = Json::array();
  for (const auto& m : t.metric)
    metric.push_back({{"k", m.k}, {"min_eigenvalue", number(m.min_eigenvalue)}, {"max_eigenvalue", number(m.max_eigenvalue)}});
  return Json{{"method", t.method},
              {"objective", t.objective},
              {"steps", t.steps},
              {"converged", t.converged},
              {"final_grad_norm", number(t.final_grad_norm)},
              {"min_grad_norm", number(t.min_grad_norm)},
              {"max_step_residual", number(t.max_step_residual)},
              {"first_step_residual_above_1e_6", t.first_step_residual_above_1e_6},
              {"max_mmt_residual", number(t.max_mmt_residual)},
              {"wolfe_violations", t.wolfe_violations},
              {"min_alpha", number(t.min_alpha)},
              {"max_alpha", number(t.max_alpha)},
              {"newton_fallbacks", t.newton_fallbacks},
              {"bfgs_skipped_updates", t.bfgs_skipped_updates},
              {"metric_samples", metric},
              {"failure", t.failure}};
}

Json to_json(const VerificationReport& r) {
  Json checks = Json::array();
  long failed = 0;
  for (const auto& c : r.checks) {
    checks.push_back(to_json(c));
    if (c.mandatory && !c.passed()) ++failed;
  }
  return Json{{"artifact_version", kArtifactVersion},
              {"command", r.command},
              {"config", r.config},
              {"checks", checks},
              {"certificates", r.certificates},
              {"summary", r.summary},
              {"failed_mandatory", failed},
              {"status", r.passed() ? "pass" : "fail"}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

Json solution_to_json(const bfgs::RhoSolution& s, std::uint64_t seed,
                      const std::vector<std::vector<std::string>>& gamma0) {
  std::vector<std::string> free;
  for (const auto& v : s.free) free.push_back(to_string_exact(v));
  std::vector<double> fixed_values(s.system.fixed_values.begin(), s.system.fixed_values.end());
  return Json{{"artifact_version", kArtifactVersion},
              {"kind", "bfgs_rho_solution"},
              {"seed", seed},
              {"free_rho", free},
              {"fixed_slots", s.system.fixed_slots},
              {"fixed_values", fixed_values},
              {"residual_double", number(s.residual_double)},
              {"residual_real", number(s.residual_real)},
              {"spread", number(s.spread)},
              {"start_index", s.start_index},
              {"certify_requested", s.certify_requested},
              {"certificate", to_json(s.certificate)},
              {"gamma0", gamma0}};
}

bfgs::RhoSolution solution_from_json(const Json& j) {
  try {
    if (j.at("kind").get<std::string>() != "bfgs_rho_solution") throw std::runtime_error("not a rho solution");
    if (j.at("artifact_version").get<int>() != kArtifactVersion) throw std::runtime_error("unsupported artifact version");
    bfgs::RhoSolution s;
    for (const auto& v : j.at("free_rho")) s.free.emplace_back(v.get<std::string>());
    if (s.free.size() != bfgs::kFree) throw std::runtime_error("free_rho needs 11 entries");
    const auto slots = j.at("fixed_slots").get<std::vector<int>>();
    const auto values = j.at("fixed_values").get<std::vector<double>>();
    if (slots.size() != 4 || values.size() != 4) throw std::runtime_error("fixed_slots and fixed_values need 4 entries");
    for (int i = 0; i < 4; ++i) {
      if (slots[i] < 0 || slots[i] >= bfgs::kFree) throw std::runtime_error("fixed slot out of range");
      s.system.fixed_slots[i] = slots[i];
      s.system.fixed_values[i] = values[i];
    }
    s.start_index = j.value("start_index", -1);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed solution file: ") + e.what());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string("malformed solution file: ") + e.what());
  }
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_vertices_csv(std::ostream& os, const std::vector<schema::Vector>& vertices, int a) {
  os << "j";
  for (int i = 0; i < a; ++i) os << ",v" << i;
  os << '\n';
  for (std::size_t j = 0; j < vertices.size(); ++j) {
    os << j;
    for (int i = 0; i < a; ++i) {
      os << ',';
      put(os, vertices[j](i));
    }
    os << '\n';
  }
}

}  // namespace divergence::report
