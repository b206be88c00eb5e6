#ifndef BTK_REPORT_HPP
#define BTK_REPORT_HPP

/* Check/report plumbing shared by the library verifiers and the CLI.
 * A Report is a named list of pass/fail checks with optional witnesses;
 * serialization is ordered so reports are byte-stable given (config, seed). */

#include <json.hpp>

#include <string>
#include <vector>

namespace btk {

using Json = nlohmann::ordered_json;

struct Check {
  std::string name;
  bool pass = false;
  Json witness;  // null unless there is something to show

  static Check ok(std::string n) { return {std::move(n), true, nullptr}; }
  static Check failed(std::string n, Json w = nullptr) { return {std::move(n), false, std::move(w)}; }
  static Check of(std::string n, bool pass, Json w = nullptr) {
    return {std::move(n), pass, pass ? Json(nullptr) : std::move(w)};
  }
};

struct Report {
  std::string command;
  Json config;
  std::vector<Check> checks;
  long timing_ms = 0;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  void add(Check c) { checks.push_back(std::move(c)); }
  void add(const std::string& name, bool pass, Json witness = nullptr) {
    checks.push_back(Check::of(name, pass, std::move(witness)));
  }
  void merge(const Report& other, const std::string& prefix) {
    for (const auto& c : other.checks)
      checks.push_back({prefix + "." + c.name, c.pass, c.witness});
  }

  Json to_json(bool with_timing = true) const {
    Json j;
    j["command"] = command;
    j["config"] = config;
    j["checks"] = Json::array();
    for (const auto& c : checks) {
      Json cj;
      cj["name"] = c.name;
      cj["status"] = c.pass ? "pass" : "fail";
      if (!c.witness.is_null()) cj["witness"] = c.witness;
      j["checks"].push_back(cj);
    }
    j["timing_ms"] = with_timing ? timing_ms : 0;
    return j;
  }
};

}  // namespace btk

#endif
