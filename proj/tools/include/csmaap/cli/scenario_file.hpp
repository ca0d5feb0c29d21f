#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "csmaap/sim.hpp"

namespace csmaap::cli {

/// A problem in a scenario file. what() reads "<source>:<line>: <message>";
/// line is 0 when the problem is not tied to one line.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& source, std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Replaces (or adds) `key` in section `section` before the scenario is built.
/// A terminal section is addressed by the terminal name.
struct Override {
  std::string section;
  std::string key;
  std::string value;
};

/// Parses "section.key" as used on the command line.
Override parse_override(const std::string& dotted, const std::string& value);

sim::Scenario parse_scenario(std::istream& in, const std::string& source = "<scenario>",
                             const std::vector<Override>& overrides = {});
sim::Scenario load_scenario(const std::filesystem::path& path, const std::vector<Override>& overrides = {});

/// Canonical text form; parse_scenario reads it back to an identical scenario.
void write_scenario(std::ostream& out, const sim::Scenario& s);

}  // namespace csmaap::cli
