#include "filmagent/crew.hpp"

#include "filmagent/errors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace filmagent {

using ojson = nlohmann::ordered_json;

namespace {

bool identifier_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw ParseError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

std::vector<std::string> scan_placeholders(const std::string& body) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] != '{') continue;
        std::size_t j = i + 1;
        while (j < body.size() && identifier_char(body[j])) ++j;
        if (j == i + 1 || j >= body.size() || body[j] != '}') continue;
        const std::string name = body.substr(i + 1, j - i - 1);
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
        i = j;
    }
    return names;
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw ParseError("template directory not found: " + dir.string());
    TemplateLibrary library;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    for (const auto& path : files) {
        if (path.extension() == ".txt") {
            PromptTemplate tpl;
            tpl.id = path.stem().string();
            tpl.body = read_file(path);
            tpl.required_vars = scan_placeholders(tpl.body);
            library.templates_[tpl.id] = std::move(tpl);
        } else if (path.extension() == ".json") {
            std::string stem = path.stem().string(); // "<id>.schema"
            const std::string suffix = ".schema";
            if (stem.size() > suffix.size() &&
                stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0) {
                ojson doc = ojson::parse(read_file(path), nullptr, false);
                if (doc.is_discarded())
                    throw ParseError("invalid schema descriptor: " + path.string());
                library.schemas_[stem.substr(0, stem.size() - suffix.size())] = std::move(doc);
            }
        }
    }
    return library;
}

const PromptTemplate& TemplateLibrary::get(const std::string& id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw UnknownTemplate("no template named '" + id + "'");
    return it->second;
}

bool TemplateLibrary::contains(const std::string& id) const {
    return templates_.count(id) > 0;
}

std::vector<std::string> TemplateLibrary::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, tpl] : templates_) out.push_back(id);
    return out;
}

std::optional<ojson> TemplateLibrary::schema(const std::string& id) const {
    auto it = schemas_.find(id);
    if (it == schemas_.end()) return std::nullopt;
    return it->second;
}

SchemaCheck TemplateLibrary::schema_check(const std::string& id) const {
    auto descriptor = schema(id);
    if (!descriptor) return nullptr;
    return build_schema_check(*descriptor);
}

std::string render(const PromptTemplate& tpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tpl.body.size());
    const std::string& body = tpl.body;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] != '{') {
            out += body[i];
            continue;
        }
        std::size_t j = i + 1;
        while (j < body.size() && identifier_char(body[j])) ++j;
        if (j == i + 1 || j >= body.size() || body[j] != '}') {
            out += body[i];
            continue;
        }
        const std::string name = body.substr(i + 1, j - i - 1);
        auto it = vars.find(name);
        if (it == vars.end())
            throw MissingVariable("template '" + tpl.id + "' needs variable '" + name + "'");
        out += it->second;
        i = j;
    }
    return out;
}

std::string pretty_json(const ojson& value) {
    return value.dump(2);
}

SchemaCheck build_schema_check(const ojson& descriptor) {
    return [descriptor](const ojson& doc) -> std::optional<std::string> {
        const std::string kind = descriptor.value("kind", "any");
        if (kind == "array") {
            if (!doc.is_array()) return "expected a JSON array";
            if (descriptor.contains("min_items") &&
                doc.size() < descriptor["min_items"].get<std::size_t>())
                return "expected at least " + descriptor["min_items"].dump() + " items";
            if (descriptor.contains("max_items") &&
                doc.size() > descriptor["max_items"].get<std::size_t>())
                return "expected at most " + descriptor["max_items"].dump() + " items, got " +
                       std::to_string(doc.size());
            if (descriptor.contains("item_required")) {
                for (std::size_t i = 0; i < doc.size(); ++i) {
                    if (!doc[i].is_object())
                        return "item " + std::to_string(i) + " must be an object";
                    for (const auto& key : descriptor["item_required"])
                        if (!doc[i].contains(key.get<std::string>()))
                            return "item " + std::to_string(i) + " is missing key '" +
                                   key.get<std::string>() + "'";
                }
            }
        } else if (kind == "object") {
            if (!doc.is_object()) return "expected a JSON object";
            if (descriptor.contains("required"))
                for (const auto& key : descriptor["required"])
                    if (!doc.contains(key.get<std::string>()))
                        return "missing key '" + key.get<std::string>() + "'";
            if (descriptor.contains("min_properties") &&
                doc.size() < descriptor["min_properties"].get<std::size_t>())
                return "expected at least " + descriptor["min_properties"].dump() + " keys";
        }
        return std::nullopt;
    };
}

std::string to_string(CrewRole role) {
    switch (role) {
    case CrewRole::Director: return "director";
    case CrewRole::Screenwriter: return "screenwriter";
    case CrewRole::Actor: return "actor";
    default: return "cinematographer";
    }
}

ojson invoke(const RoleAgent& agent, ChatProvider& provider, const TemplateLibrary& library,
             const std::string& template_id, const std::map<std::string, std::string>& vars,
             const SchemaCheck& extra_check, int attempts) {
    const PromptTemplate& tpl = library.get(template_id);
    const std::string prompt = render(tpl, vars);

    const SchemaCheck shipped = library.schema_check(template_id);
    SchemaCheck combined = [shipped, extra_check](const ojson& doc) -> std::optional<std::string> {
        if (shipped)
            if (auto err = shipped(doc)) return err;
        if (extra_check)
            if (auto err = extra_check(doc)) return err;
        return std::nullopt;
    };

    try {
        return complete_json(provider, {{Role::User, prompt}}, agent.tag, combined, attempts);
    } catch (const SchemaRetriesExhausted& e) {
        throw SchemaRetriesExhausted(to_string(agent.role) + "/" + template_id + ": " + e.what(),
                                     e.last_raw());
    }
}

} // namespace filmagent
