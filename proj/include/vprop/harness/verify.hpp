#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vprop {

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::vector<std::string> lines;  // one line per check
};

std::vector<std::string> suite_names();  // graph, grad, consensus, rate, oracle

/// Throws std::invalid_argument for an unknown suite name.
SuiteResult run_suite(const std::string& name);

/// Runs one suite or "all", printing a line per check. True if everything passed.
bool run_verify(const std::string& which, std::ostream& out);

}  // namespace vprop
