#pragma once

#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>

namespace percol::cli {

using Json = nlohmann::json;

enum class Command { Solve, Continue, Converge };

Command parse_command(std::string_view name);
std::string_view to_string(Command command);

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Reads a JSON config file. Throws ConfigError on I/O or syntax errors.
Json load_config(const std::string& path);

/// Applies "dotted.key=value". The value is parsed as JSON when possible and
/// taken as a plain string otherwise.
void apply_override(Json& config, std::string_view assignment);

/// Fills in defaults, rejects unknown keys and ill-typed values, and checks
/// every range the command depends on. Throws ConfigError.
Json effective_config(Command command, const Json& user);

/// Shortest decimal that reads back to the same double.
std::string format_double(double value);

/// Runs a validated command and writes its files under output.directory.
/// Numerical failures propagate as exceptions.
void run(Command command, const Json& effective);

/// Validation, run and error reporting. Returns the process exit status;
/// errors are reported on err as a one-line JSON record.
int execute(Command command, const Json& user, std::ostream& err);

}  // namespace percol::cli
