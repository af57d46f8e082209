#include "scenegen/codegen/codegen.hpp"

#include "scenegen/error.hpp"
#include "scenegen/layout/formats.hpp"
#include "scenegen/llm/structured.hpp"
#include "scenegen/text.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <regex>
#include <sstream>

namespace scenegen::codegen {

namespace {

std::string file_name(std::string_view model_path) {
    const auto slash = model_path.find_last_of('/');
    return std::string(slash == std::string_view::npos ? model_path : model_path.substr(slash + 1));
}

std::vector<std::string> kinds_in_order(const std::vector<ObjectInstance>& objects) {
    std::vector<std::string> kinds;
    for (const auto& o : objects) {
        if (std::find(kinds.begin(), kinds.end(), o.library_name) == kinds.end()) {
            kinds.push_back(o.library_name);
        }
    }
    return kinds;
}

const LibraryEntry& entry_for(const ObjectLibrary& library, const std::string& kind) {
    const auto* e = library.find(kind);
    if (!e) {
        throw CodegenError("object kind '" + kind + "' is not in the library");
    }
    return *e;
}

std::string radians_literal(double degrees) {
    if (degrees == 0.0) {
        return "0";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", degrees * std::numbers::pi / 180.0);
    return buf;
}

// Replaces the marker line, indenting every emitted line like the marker.
std::string fill(const std::string& skeleton, std::string_view marker, const std::vector<std::string>& lines) {
    const auto pos = skeleton.find(marker);
    if (pos == std::string::npos) {
        throw CodegenError("template has no marker " + std::string(marker));
    }
    const auto line_start = skeleton.rfind('\n', pos) == std::string::npos ? 0 : skeleton.rfind('\n', pos) + 1;
    const std::string indent = skeleton.substr(line_start, pos - line_start);
    std::string body;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i > 0) {
            body += '\n';
        }
        if (!lines[i].empty()) {
            body += (i == 0 ? "" : indent) + lines[i];
        }
    }
    std::string out = skeleton;
    out.replace(pos, marker.size(), body);
    return out;
}

std::vector<std::string> insertion_block(std::size_t i, const Placement& p, const std::string& list) {
    const std::string k = std::to_string(i);
    return {
        "DirectoryInfo objModel" + k + " = " + list + "[rand.Next(0, " + list + ".Count)];",
        "string obj" + k + "Name = Path.GetFileNameWithoutExtension(objModel" + k +
            ".Name) + \"_\" + DateTime.Now.ToString(\"yyyy-MM-dd-HH-mm-ss\");",
        "TxInsertComponentCreationData txInsertDataObj" + k + " = new TxInsertComponentCreationData(obj" + k +
            "Name, objModel" + k + ".FullName);",
        "ITxComponent txComponentObject" + k + " = txPhysicalRoot.InsertComponent(txInsertDataObj" + k + ");",
        "",
        "double transXValue" + k + " = " + std::to_string(p.coord.x) + ";",
        "double transYValue" + k + " = " + std::to_string(p.coord.y) + ";",
        "double rotValue" + k + " = " + radians_literal(p.dir.degrees()) + ";",
        "TxTransformation txTransTransXYRotZ" + k + " = new TxTransformation(new TxVector(transXValue" + k +
            ", transYValue" + k + ", 0.0), new TxVector(0.0, 0.0, rotValue" + k +
            "), TxTransformation.TxRotationType.RPY_ZYX);",
        "ITxLocatableObject obj" + k + " = (ITxLocatableObject)txComponentObject" + k + ";",
        "obj" + k + ".AbsoluteLocation *= txTransTransXYRotZ" + k + ";",
    };
}

std::size_t count_matches(std::string_view code, const std::regex& re) {
    const std::string s(code);
    return static_cast<std::size_t>(std::distance(std::sregex_iterator(s.begin(), s.end(), re), std::sregex_iterator()));
}

} // namespace

const CodeTemplate& CodeTemplate::standard() {
    static const CodeTemplate tmpl = [] {
        const std::string prompt(llm::template_text(llm::TemplateId::code_generation));
        const std::string open = "```csharp\n";
        const auto b = prompt.find(open);
        const auto e = b == std::string::npos ? b : prompt.find("\n```", b + open.size());
        if (e == std::string::npos) {
            throw CodegenError("code-generation template has no C# skeleton");
        }
        CodeTemplate t;
        t.skeleton = prompt.substr(b + open.size(), e - b - open.size() + 1);
        t.guidance =
            "Check the file name of `directoryInfo` against the model file of each kind and add matches to the "
            "list of that kind.";
        return t;
    }();
    return tmpl;
}

std::string model_list_name(std::string_view library_name) {
    return text::snake_case(library_name) + "Models";
}

std::string loading_guidance(const std::vector<ObjectInstance>& objects, const ObjectLibrary& library) {
    std::ostringstream out;
    for (const auto& kind : kinds_in_order(objects)) {
        const auto& e = entry_for(library, kind);
        const auto list = model_list_name(kind);
        out << "- " << kind << ": models are stored as \"" << file_name(e.model_path) << "\".\n"
            << "```csharp\n"
            << "if (directoryInfo.Name == \"" << file_name(e.model_path) << "\")\n"
            << "{\n"
            << "    " << list << ".Add(directoryInfo);\n"
            << "}\n"
            << "```\n";
    }
    return text::trim(out.str());
}

std::string emit_csharp(const std::vector<Placement>& placements, const ObjectLibrary& library,
                        const CodeTemplate& tmpl) {
    std::vector<ObjectInstance> objects;
    for (const auto& p : placements) {
        objects.push_back(p.object);
    }
    const auto kinds = kinds_in_order(objects);

    std::vector<std::string> lists;
    std::vector<std::string> loads;
    for (const auto& kind : kinds) {
        const auto& e = entry_for(library, kind);
        const auto list = model_list_name(kind);
        lists.push_back("List<DirectoryInfo> " + list + " = new List<DirectoryInfo>();");
        for (const auto& line : {"if (directoryInfo.Name == \"" + file_name(e.model_path) + "\")", std::string("{"),
                                 "    " + list + ".Add(directoryInfo);", std::string("}")}) {
            loads.push_back(line);
        }
    }

    std::vector<std::string> adds;
    for (std::size_t i = 0; i < placements.size(); ++i) {
        if (i > 0) {
            adds.emplace_back();
        }
        for (auto& line : insertion_block(i + 1, placements[i], model_list_name(placements[i].object.library_name))) {
            adds.push_back(std::move(line));
        }
    }

    std::string code = fill(tmpl.skeleton, kMarkerModelList, lists);
    code = fill(code, kMarkerLoadModels, loads);
    return fill(code, kMarkerAddObjects, adds);
}

const std::vector<std::string>& required_keywords() {
    static const std::vector<std::string> keywords{
        "TxApplication.SystemRootDirectory", "TxInsertComponentCreationData", "InsertComponent",
        "TxTransformation",                  "AbsoluteLocation",              "RefreshDisplay",
    };
    return keywords;
}

std::string CodeReport::describe() const {
    std::vector<std::string> lines;
    for (const auto& k : missing_keywords) {
        lines.push_back("- The code does not use " + k + ".");
    }
    for (const auto& f : forbidden_constructs) {
        lines.push_back("- The code defines a custom class or function: " + f);
    }
    for (const auto& [name, covered] : per_object_coverage) {
        if (!covered) {
            lines.push_back("- The code does not place " + name + " at its assigned coordinate.");
        }
    }
    if (ok) {
        return "The code uses every required API and places every object.";
    }
    return text::join(lines, "\n");
}

nlohmann::json to_json(const CodeReport& report) {
    return {{"ok", report.ok},
            {"missing_keywords", report.missing_keywords},
            {"forbidden_constructs", report.forbidden_constructs},
            {"per_object_coverage", report.per_object_coverage},
            {"insertions", report.insertions}};
}

CodeReport validate_code(std::string_view code, const std::vector<Placement>& placements) {
    CodeReport report;
    const std::string s(code);

    for (const auto& k : required_keywords()) {
        const std::regex re("\\b" + std::regex_replace(k, std::regex("\\."), "\\.") + "\\b");
        if (!std::regex_search(s, re)) {
            report.missing_keywords.push_back(k);
        }
    }

    static const std::vector<std::regex> forbidden{
        std::regex(R"(\b(?:class|struct|interface|enum)\s+[A-Za-z_]\w*)"),
        std::regex(R"(\b(?:public|private|protected|internal|static)\b[^;{}=\n]*\([^;{}]*\)\s*\{)"),
        std::regex(R"(\b(?:void|int|double|float|bool|string|object|var)\s+[A-Za-z_]\w*\s*\([^;{}()]*\)\s*\{)"),
    };
    for (const auto& re : forbidden) {
        for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
            report.forbidden_constructs.push_back(text::trim(it->str()));
        }
    }

    report.insertions = count_matches(s, std::regex(R"(\bInsertComponent\s*\()"));

    // Coordinates the program places, by variable suffix and by literal vectors.
    std::map<std::string, double> xs;
    std::map<std::string, double> ys;
    static const std::regex xre(R"(transXValue(\w*)\s*=\s*(-?\d+(?:\.\d+)?)\s*;)");
    static const std::regex yre(R"(transYValue(\w*)\s*=\s*(-?\d+(?:\.\d+)?)\s*;)");
    for (auto it = std::sregex_iterator(s.begin(), s.end(), xre); it != std::sregex_iterator(); ++it) {
        xs[(*it)[1]] = std::stod((*it)[2]);
    }
    for (auto it = std::sregex_iterator(s.begin(), s.end(), yre); it != std::sregex_iterator(); ++it) {
        ys[(*it)[1]] = std::stod((*it)[2]);
    }
    std::vector<std::pair<double, double>> placed;
    for (const auto& [suffix, x] : xs) {
        if (auto y = ys.find(suffix); y != ys.end()) {
            placed.emplace_back(x, y->second);
        }
    }
    static const std::regex vre(R"(new\s+TxVector\(\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*,)");
    for (auto it = std::sregex_iterator(s.begin(), s.end(), vre); it != std::sregex_iterator(); ++it) {
        placed.emplace_back(std::stod((*it)[1]), std::stod((*it)[2]));
    }

    std::vector<bool> used(placed.size(), false);
    for (const auto& p : placements) {
        bool covered = false;
        for (std::size_t i = 0; i < placed.size() && !covered; ++i) {
            if (!used[i] && std::fabs(placed[i].first - static_cast<double>(p.coord.x)) < 0.5 &&
                std::fabs(placed[i].second - static_cast<double>(p.coord.y)) < 0.5) {
                used[i] = true;
                covered = true;
            }
        }
        report.per_object_coverage[p.name()] = covered;
    }

    bool all_covered = true;
    for (const auto& [_, c] : report.per_object_coverage) {
        all_covered = all_covered && c;
    }
    report.ok = report.missing_keywords.empty() && report.forbidden_constructs.empty() && all_covered &&
                report.insertions >= placements.size();
    if (report.insertions < placements.size() && report.missing_keywords.empty()) {
        report.missing_keywords.push_back("InsertComponent (" + std::to_string(report.insertions) + " of " +
                                          std::to_string(placements.size()) + " insertions)");
    }
    // Empty scenes need no insertion, so the keyword is not required there.
    if (placements.empty()) {
        std::erase_if(report.missing_keywords, [](const std::string& k) {
            return k == "InsertComponent" || k == "TxInsertComponentCreationData" || k == "TxTransformation" ||
                   k == "AbsoluteLocation";
        });
        report.ok = report.missing_keywords.empty() && report.forbidden_constructs.empty();
    }
    return report;
}

std::string emit_csharp_llm(const Scene& scene, const ObjectLibrary& library, llm::Gateway& gateway,
                            int feedback_rounds) {
    llm::PromptRequest req;
    req.template_id = llm::TemplateId::code_generation;
    req.bindings = {
        {"prompt", scene.description},
        {"objects", layout::name_list(scene.objects())},
        {"placements", layout::pretty(layout::placements_to_json(scene.placements))},
        {"guidance for loading object models", loading_guidance(scene.objects(), library)},
    };
    llm::Conversation conversation;
    std::string answer = gateway.chat(conversation, req);
    CodeReport report;
    for (int round = 0;; ++round) {
        const auto parsed = llm::parse_structured(answer, llm::TemplateId::code_generation);
        const std::string code = parsed.at(0).payload.get<std::string>();
        report = validate_code(code, scene.placements);
        if (report.ok) {
            return code;
        }
        if (round >= feedback_rounds) {
            break;
        }
        answer = gateway.follow_up(conversation, req,
                                   "Your code has the following problems:\n" + report.describe() +
                                       "\nPlease write the complete code again, fixing the problems. Only generate "
                                       "the complete code.");
    }
    throw CodegenError("generated code failed validation:\n" + report.describe());
}

} // namespace scenegen::codegen
