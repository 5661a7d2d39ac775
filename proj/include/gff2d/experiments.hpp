#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

namespace gff2d {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

/// Commands understood by the runner.
const std::vector<std::string>& experiment_commands();

/// Itemized schema errors for a whole configuration (empty when valid).
std::vector<std::string> validate_config(const json& config);
std::vector<std::string> validate_task(const json& task, const std::string& where = "task");

/// Fills defaults into a task object (after validation).
json normalize_task(const json& task, std::uint64_t default_seed, std::size_t index);

struct TaskOutcome {
  std::string name;
  std::string command;
  std::string status = "ok";  // ok | failed | check_failed
  std::string error;
  json metrics = json::object();
  json record = json::object();  // full JSON record of the task
  std::vector<std::filesystem::path> outputs;
  json checks = json::array();
  double wall_seconds = 0;
};

/// Runs one normalized task, writing its files under dir (created on
/// demand; an empty dir suppresses file outputs where they are optional).
TaskOutcome run_task(const json& task, const std::filesystem::path& dir);

struct RunOutcome {
  json manifest;
  bool ok = true;  // false iff some task failed or a check failed
};

/// Runs every experiment of the configuration and writes
/// out_dir/manifest.json. A manifest may be passed instead of a
/// configuration; its stored configuration is rerun.
RunOutcome run_config(const json& config, const std::filesystem::path& out_dir, const std::string& command_line = "");

json library_versions();

void write_csv(const std::filesystem::path& p, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Plot script (python + matplotlib) for a scaling CSV.
std::string scaling_plot_script(const std::string& csv_name);

}  // namespace gff2d
