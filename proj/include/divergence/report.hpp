#pragma once

// JSON verification reports, the BFGS solution artifact, and CSV dumps.
// Object keys are sorted, doubles use the shortest round-trip form and
// non-finite numbers are written as null, so identical runs give identical
// bytes.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "divergence/bfgs_solve.hpp"
#include "divergence/moore.hpp"
#include "divergence/optimizer.hpp"
#include "divergence/schema_checks.hpp"

namespace divergence::report {

using Json = nlohmann::json;

inline constexpr int kArtifactVersion = 1;

struct VerificationReport {
  std::string command;
  Json config = Json::object();
  schema::ReportBundle checks;
  Json certificates = Json::array();
  Json summary = Json::object();

  // Every mandatory check passes.
  bool passed() const;
};

Json to_json(const schema::ConditionReport& r);
Json to_json(const interval::MooreCertificate& c);
// Counters and extremes of a trace; the per-step entries go to CSV instead.
Json to_json(const replay::ReplayTrace& t);
Json to_json(const VerificationReport& r);

std::string dump(const Json& j);
// Throws std::runtime_error when the file cannot be written.
void write_file(const std::filesystem::path& path, const std::string& text);

// Solution artifact: the free rho values as exact decimal strings, the
// reduced system, residuals and certificate, Gamma_0 for reference.
Json solution_to_json(const bfgs::RhoSolution& s, std::uint64_t seed, const std::vector<std::vector<std::string>>& gamma0);
// Reads the free values and the reduced system; residuals and certificate
// are not trusted and must be recomputed. Throws std::runtime_error on
// malformed input.
bfgs::RhoSolution solution_from_json(const Json& j);
Json read_json(const std::filesystem::path& path);

// Non-contracting projections of the period vertices: columns j, v0..v{a-1}.
void write_vertices_csv(std::ostream& os, const std::vector<schema::Vector>& vertices, int a);

}  // namespace divergence::report
