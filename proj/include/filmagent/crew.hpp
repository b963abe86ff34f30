#pragma once

#include "filmagent/provider.hpp"
#include "filmagent/script_model.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace filmagent {

struct PromptTemplate {
    std::string id;   // file stem, e.g. "plan_1"
    std::string body; // text with {placeholder} variables
    std::vector<std::string> required_vars;
};

/// Loads every top-level "<id>.txt" as a template (placeholders scanned from
/// the body) and any "<id>.schema.json" as that template's structural output
/// descriptor. Files under subdirectories are left alone.
class TemplateLibrary {
public:
    static TemplateLibrary load(const std::filesystem::path& dir);

    const PromptTemplate& get(const std::string& id) const; // throws UnknownTemplate
    bool contains(const std::string& id) const;
    std::vector<std::string> ids() const;

    /// The structural descriptor shipped next to the template, if any.
    std::optional<nlohmann::ordered_json> schema(const std::string& id) const;

    /// A SchemaCheck built from the descriptor; always-pass when none exists.
    SchemaCheck schema_check(const std::string& id) const;

private:
    std::map<std::string, PromptTemplate> templates_;
    std::map<std::string, nlohmann::ordered_json> schemas_;
};

/// Placeholder names appearing in a template body. A placeholder is
/// `{identifier}` where the identifier is letters, digits and underscores;
/// anything else (JSON braces in output examples, for instance) is literal.
std::vector<std::string> scan_placeholders(const std::string& body);

/// Pure substitution of every placeholder. Unknown extra vars are ignored;
/// a placeholder without a value raises MissingVariable naming it.
std::string render(const PromptTemplate& tpl, const std::map<std::string, std::string>& vars);

/// Deterministic pretty-printing for JSON values injected into prompts.
std::string pretty_json(const nlohmann::ordered_json& value);

/// Builds a SchemaCheck from a descriptor object. Supported keys:
///   kind: "array" | "object"
///   min_items / max_items          (arrays)
///   item_required: [keys...]       (arrays of objects)
///   required: [keys...]            (objects)
///   min_properties                 (objects)
SchemaCheck build_schema_check(const nlohmann::ordered_json& descriptor);

enum class CrewRole { Director, Screenwriter, Actor, Cinematographer };

std::string to_string(CrewRole role);

/// A crew member: a tag for the transcript plus, for actors, the character
/// they play. Stateless between invocations.
struct RoleAgent {
    CrewRole role = CrewRole::Director;
    std::string tag;
    std::optional<CharacterProfile> character; // actors only

    static RoleAgent director() { return {CrewRole::Director, "director", std::nullopt}; }
    static RoleAgent screenwriter() { return {CrewRole::Screenwriter, "screenwriter", std::nullopt}; }
    static RoleAgent actor(CharacterProfile profile) {
        std::string tag = "actor-" + profile.name;
        return {CrewRole::Actor, std::move(tag), std::move(profile)};
    }
    static RoleAgent cinematographer(int index) {
        return {CrewRole::Cinematographer, "cinematographer-" + std::to_string(index),
                std::nullopt};
    }
};

/// render + complete_json under the agent's tag; the template's shipped
/// schema descriptor is checked first, then `extra_check` when given.
nlohmann::ordered_json invoke(const RoleAgent& agent, ChatProvider& provider,
                              const TemplateLibrary& library, const std::string& template_id,
                              const std::map<std::string, std::string>& vars,
                              const SchemaCheck& extra_check = nullptr, int attempts = 3);

} // namespace filmagent
