#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

/// Run configuration and the pipeline commands behind the madv executable.
namespace madv::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kContractViolation = 3,
};

/// Raised for malformed configuration text, unknown keys or bad values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeyInfo {
  std::string key;
  std::string default_value;
  std::string help;
};

/// Every recognised key with its default, in documentation order.
const std::vector<KeyInfo>& config_keys();

/// Flat key=value configuration. Lines are `key = value`; blank lines and
/// lines starting with '#' are ignored. Unknown keys are rejected.
class RunConfig {
 public:
  RunConfig();

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);

  /// Applies one `key=value` override.
  void set(const std::string& key, const std::string& value);
  void set_assignment(const std::string& assignment);

  const std::string& get(const std::string& key) const;
  std::string str(const std::string& key) const { return get(key); }
  std::int64_t integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t seed(const std::string& key) const;
  double real(const std::string& key) const;
  bool flag(const std::string& key) const;

  /// Canonical text: every key in documentation order.
  std::string serialize() const;
  /// FNV-1a 64 of serialize(), as 16 hex digits.
  std::string hash() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Run directory: the `run_dir` key when set, otherwise
/// $MADV_RUN_ROOT/<run_name>, otherwise ./runs/<run_name>.
std::filesystem::path run_directory(const RunConfig& config);

const std::vector<std::string>& command_names();

/// Executes one pipeline command. Library errors surface as exceptions;
/// run_cli maps them onto exit codes.
void run_command(const std::string& command, const RunConfig& config, std::ostream& out);

/// Full command-line entry point; returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace madv::cli
