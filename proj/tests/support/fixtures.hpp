#pragma once

#include "scenegen/scene_model.hpp"

#include <string>
#include <vector>

namespace scenegen::testing {

std::string source_path(const std::string& relative);
std::string read_text(const std::string& path);

/// The worked example used throughout the appendix transcripts.
inline constexpr const char* kWorkedExample =
    "One Welding Table for spot welding, with a Turntable at [1500, 2500, 0], is equipped with an ABB Robot "
    "IRB6600, positioned 2.6 meters to the right and 2.5 meters back from the Turntable.";

/// Instances in the order the worked example introduces them.
std::vector<ObjectInstance> worked_objects();
/// The extracted facts of the worked example.
LayoutInfo worked_layout();

Placement place(const ObjectInstance& object, std::int64_t x, std::int64_t y, double dir = 0.0);
/// Looks up `name` among `objects`; throws when missing.
const ObjectInstance& named(const std::vector<ObjectInstance>& objects, const std::string& name);
const Placement& named(const std::vector<Placement>& placements, const std::string& name);

/// Runs the command-line tool with `args` (shell-quoted here) and returns
/// its exit status; standard output goes to `stdout_path` when non-empty.
int run_cli(const std::string& args, const std::string& stdout_path = "");

/// Fresh directory under the system temporary directory.
std::string temp_dir(const std::string& label);

} // namespace scenegen::testing
