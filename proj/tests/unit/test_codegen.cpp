#include "doctest.h"

#include "fixtures.hpp"
#include "scenegen/codegen/codegen.hpp"
#include "scenegen/error.hpp"
#include "scenegen/llm/scripted.hpp"
#include "scenegen/rng.hpp"
#include "scenegen/text.hpp"

#include <cmath>
#include <regex>

using namespace scenegen;
using namespace scenegen::codegen;
using namespace scenegen::testing;

namespace {

std::vector<Placement> worked_placements(double abb_dir = 0.0) {
    const auto objects = worked_objects();
    return {place(objects[0], 0, 4500), place(objects[1], 1500, 2500), place(objects[2], -1000, -100, abb_dir)};
}

std::size_t count_of(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) {
        ++n;
    }
    return n;
}

std::vector<double> numbers_after(const std::string& code, const std::string& prefix) {
    std::vector<double> out;
    const std::regex re("double " + prefix + R"(\d+ = ([-0-9.e]+);)");
    for (std::sregex_iterator it(code.begin(), code.end(), re), end; it != end; ++it) {
        out.push_back(std::stod((*it)[1].str()));
    }
    return out;
}

std::vector<Placement> random_scene(Rng& rng) {
    const auto& names = ObjectLibrary::standard().names();
    std::vector<std::string> kinds;
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 8));
    for (std::size_t i = 0; i < n; ++i) {
        kinds.push_back(names[rng.index(names.size())]);
    }
    std::vector<Placement> out;
    for (const auto& o : number_instances(kinds)) {
        out.push_back(place(o, rng.uniform_int(-5000, 5000), rng.uniform_int(-5000, 5000),
                            static_cast<double>(rng.uniform_int(0, 359))));
    }
    return out;
}

} // namespace

TEST_CASE("template skeleton holds each fill marker once") {
    const auto& tmpl = CodeTemplate::standard();
    CHECK(count_of(tmpl.skeleton, std::string(kMarkerModelList)) == 1);
    CHECK(count_of(tmpl.skeleton, std::string(kMarkerLoadModels)) == 1);
    CHECK(count_of(tmpl.skeleton, std::string(kMarkerAddObjects)) == 1);
    CHECK(model_list_name("ABB Robot IRB6600") == "abb_robot_irb6600Models");
    CHECK(model_list_name("Welding Table") == "welding_tableModels");
}

TEST_CASE("deterministic C# for the worked example") {
    const auto code = emit_csharp(worked_placements(), ObjectLibrary::standard());
    for (const auto& keyword : required_keywords()) {
        CHECK(code.find(keyword) != std::string::npos);
    }
    CHECK(count_of(code, "new TxInsertComponentCreationData(") == 3);
    CHECK(code.find("double transXValue3 = -1000;") != std::string::npos);
    CHECK(code.find("double transYValue3 = -100;") != std::string::npos);
    CHECK(code.find("double rotValue1 = 0;") != std::string::npos);
    CHECK(code.find("new TxVector(transXValue1, transYValue1, 0.0)") != std::string::npos);
    CHECK(code.find("/*") == std::string::npos);
    CHECK(validate_code(code, worked_placements()).ok);
}

TEST_CASE("rotation is emitted in radians") {
    const auto code = emit_csharp(worked_placements(90.0), ObjectLibrary::standard());
    const auto rot = numbers_after(code, "rotValue");
    REQUIRE(rot.size() == 3);
    CHECK(rot[2] == doctest::Approx(1.5708).epsilon(1e-4));
    CHECK(rot[2] / (M_PI / 180.0) == doctest::Approx(90.0).epsilon(1e-12));
}

TEST_CASE("empty placements still resolve every marker") {
    const auto code = emit_csharp({}, ObjectLibrary::standard());
    CHECK(code.find("/*") == std::string::npos);
    CHECK(code.find("TxApplication.RefreshDisplay") != std::string::npos);
}

TEST_CASE("validation finds fabricated methods, custom definitions and uncovered objects") {
    const auto placements = worked_placements();
    const auto code = emit_csharp(placements, ObjectLibrary::standard());

    const auto fabricated = validate_code(text::replace_all(code, "InsertComponent(", "PlaceComponentAt("), placements);
    CHECK_FALSE(fabricated.ok);
    CHECK(std::find(fabricated.missing_keywords.begin(), fabricated.missing_keywords.end(), "InsertComponent") !=
          fabricated.missing_keywords.end());

    const auto custom = validate_code(code + "\npublic class Helper { }\n", placements);
    CHECK_FALSE(custom.ok);
    CHECK_FALSE(custom.forbidden_constructs.empty());

    const auto partial = emit_csharp({placements[0], placements[1]}, ObjectLibrary::standard());
    const auto report = validate_code(partial, placements);
    CHECK_FALSE(report.ok);
    CHECK(report.per_object_coverage.at("Welding Table"));
    CHECK(report.per_object_coverage.at("Turntable"));
    CHECK_FALSE(report.per_object_coverage.at("ABB Robot IRB6600"));
    CHECK(to_json(report)["ok"] == false);
    CHECK_FALSE(report.describe().empty());
}

TEST_CASE("generator and validator agree on random scenes") {
    Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const auto placements = random_scene(rng);
        const auto code = emit_csharp(placements, ObjectLibrary::standard());
        const auto report = validate_code(code, placements);
        CHECK(report.ok);
        CHECK(report.insertions == placements.size());
        const auto rot = numbers_after(code, "rotValue");
        REQUIRE(rot.size() == placements.size());
        for (std::size_t i = 0; i < rot.size(); ++i) {
            CHECK(std::abs(rot[i] / (M_PI / 180.0) - placements[i].dir.degrees()) <= 1e-9);
        }
    }
}

TEST_CASE("model-written code goes through validation feedback") {
    llm::Gateway gateway(llm::make_scripted_backend());
    const Scene scene{kWorkedExample, worked_placements()};
    const auto code = emit_csharp_llm(scene, ObjectLibrary::standard(), gateway);
    CHECK(validate_code(code, scene.placements).ok);

    auto scripted = llm::make_scripted_backend();
    for (int i = 0; i < 3; ++i) {
        scripted->prime(llm::TemplateId::code_generation, "```csharp\nTxApplication.RefreshDisplay();\n```");
    }
    llm::Gateway failing(scripted);
    CHECK_THROWS_AS(emit_csharp_llm(scene, ObjectLibrary::standard(), failing, 2), CodegenError);
    CHECK(failing.calls() == 3);
}

TEST_CASE("scene JSON") {
    const Scene scene{kWorkedExample, worked_placements()};
    const auto text = emit_scene_json(scene);
    const auto j = nlohmann::json::parse(text);
    CHECK(j["objects"][2]["position"] == nlohmann::json::array({-1000, -100, 0}));
    CHECK(j["objects"][2]["model"] == "ABB Robot IRB6600");
    CHECK(text.back() == '\n');
    CHECK(emit_scene_json(parse_scene_json(text)) == text);

    const auto empty = nlohmann::json::parse(emit_scene_json({"nothing here", {}}));
    CHECK(empty["description"] == "nothing here");
    CHECK(empty["objects"].empty());

    CHECK_THROWS_AS(parse_scene_json("{"), ParseError);
    CHECK_THROWS_AS(parse_scene_json(R"({"description": "", "objects": [{"name": "F", "model": "Forklift",
                                       "position": [0, 0, 0], "orientation": 0}]})"),
                    ParseError);
}

TEST_CASE("scene JSON round-trips random scenes byte for byte") {
    Rng rng(43);
    for (int trial = 0; trial < 100; ++trial) {
        const Scene scene{"scene " + std::to_string(trial), random_scene(rng)};
        const auto text = emit_scene_json(scene);
        const auto back = parse_scene_json(text);
        CHECK(back.placements == scene.placements);
        CHECK(emit_scene_json(back) == text);
    }
}

TEST_CASE("SVG plan view") {
    const auto svg = emit_svg(worked_placements());
    CHECK(count_of(svg, "class=\"object\"") == 3);
    CHECK(count_of(svg, "class=\"heading\"") == 3);
    CHECK(svg.find("class=\"grid\"") != std::string::npos);
    CHECK(svg.find("ABB Robot IRB6600") != std::string::npos);

    const auto empty = emit_svg({});
    CHECK(count_of(empty, "class=\"object\"") == 0);
    CHECK(empty.find("class=\"grid\"") != std::string::npos);

    const auto corner = emit_svg({place(number_instances({"Cabinet"})[0], 5000, -5000)});
    std::smatch box;
    REQUIRE(std::regex_search(corner, box, std::regex(R"re(viewBox="0 0 ([0-9.]+) ([0-9.]+)")re")));
    const double width = std::stod(box[1].str());
    const double height = std::stod(box[2].str());
    std::smatch glyph;
    REQUIRE(std::regex_search(corner, glyph, std::regex(R"re(<circle class="object" cx="([-0-9.]+)" cy="([-0-9.]+)")re")));
    const double cx = std::stod(glyph[1].str());
    const double cy = std::stod(glyph[2].str());
    CHECK(cx >= 0.0);
    CHECK(cx <= width);
    CHECK(cy >= 0.0);
    CHECK(cy <= height);
}
