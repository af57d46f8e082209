#include "fixtures.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <sys/wait.h>
#include <unistd.h>

namespace scenegen::testing {

std::string source_path(const std::string& relative) {
    return std::string(SCENEGEN_SOURCE_DIR) + "/" + relative;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path);
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<ObjectInstance> worked_objects() {
    return number_instances({"Welding Table", "Turntable", "ABB Robot IRB6600"});
}

LayoutInfo worked_layout() {
    LayoutInfo info;
    PositionRecord turntable;
    turntable.name = "Turntable";
    turntable.coord = Coordinate{1500, 2500};
    turntable.dir = Direction(0);
    info.positions.push_back(turntable);
    info.relations.push_back({"ABB Robot IRB6600", "Turntable", "2.6 meters to the right and 2.5 meters back"});
    return info;
}

Placement place(const ObjectInstance& object, std::int64_t x, std::int64_t y, double dir) {
    return {object, {x, y}, Direction(dir)};
}

const ObjectInstance& named(const std::vector<ObjectInstance>& objects, const std::string& name) {
    for (const auto& o : objects) {
        if (o.display_name == name) {
            return o;
        }
    }
    throw std::runtime_error("no object named " + name);
}

const Placement& named(const std::vector<Placement>& placements, const std::string& name) {
    for (const auto& p : placements) {
        if (p.name() == name) {
            return p;
        }
    }
    throw std::runtime_error("no placement named " + name);
}

int run_cli(const std::string& args, const std::string& stdout_path) {
    std::string command = std::string(SCENEGEN_CLI_PATH) + " " + args;
    command += stdout_path.empty() ? " > /dev/null" : " > '" + stdout_path + "'";
    command += " 2>/dev/null";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string temp_dir(const std::string& label) {
    static std::atomic<int> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     ("scenegen-test-" + label + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

} // namespace scenegen::testing
