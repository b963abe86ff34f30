// Python bindings for the core operations: environment loading and catalog
// lookups, script parse/serialize/validate/fix, JSON extraction, duration
// estimation, storyboards, and offline replay production runs.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "filmagent/errors.hpp"
#include "filmagent/provider.hpp"
#include "filmagent/script_model.hpp"
#include "filmagent/validator.hpp"
#include "filmagent/workflow.hpp"

namespace py = pybind11;
using namespace filmagent;

namespace {

py::object json_to_py(const nlohmann::ordered_json& value) {
    switch (value.type()) {
    case nlohmann::ordered_json::value_t::null: return py::none();
    case nlohmann::ordered_json::value_t::boolean: return py::bool_(value.get<bool>());
    case nlohmann::ordered_json::value_t::number_integer:
        return py::int_(value.get<std::int64_t>());
    case nlohmann::ordered_json::value_t::number_unsigned:
        return py::int_(value.get<std::uint64_t>());
    case nlohmann::ordered_json::value_t::number_float:
        return py::float_(value.get<double>());
    case nlohmann::ordered_json::value_t::string: return py::str(value.get<std::string>());
    case nlohmann::ordered_json::value_t::array: {
        py::list out;
        for (const auto& item : value) out.append(json_to_py(item));
        return out;
    }
    case nlohmann::ordered_json::value_t::object: {
        py::dict out;
        for (const auto& [key, item] : value.items()) out[py::str(key)] = json_to_py(item);
        return out;
    }
    default: return py::none();
    }
}

} // namespace

PYBIND11_MODULE(_filmagent, m) {
    m.doc() = "Film-crew agent pipeline: environment catalog, script model, "
              "rule validator, and replay-driven production runs.";

    py::register_exception<Error>(m, "FilmagentError");

    py::class_<EnvironmentSpec>(m, "Environment")
        .def_property_readonly("location_count",
                               [](const EnvironmentSpec& env) { return env.locations.size(); })
        .def_property_readonly("position_count", &EnvironmentSpec::position_count)
        .def_property_readonly("sittable_count", &EnvironmentSpec::sittable_count)
        .def_property_readonly("action_count",
                               [](const EnvironmentSpec& env) { return env.actions.size(); })
        .def_property_readonly("shot_count",
                               [](const EnvironmentSpec& env) { return env.shots.size(); })
        .def("locations", [](const EnvironmentSpec& env) {
            py::dict out;
            for (const auto& loc : env.locations) out[py::str(loc.name)] = loc.capacity;
            return out;
        })
        .def("resolve_action",
             [](const EnvironmentSpec& env, const std::string& name) {
                 return resolve_action(name, env).canonical_name;
             })
        .def("resolve_shot", [](const EnvironmentSpec& env, const std::string& name) {
            return resolve_shot(name, env).canonical_name;
        });

    m.def("load_environment", &load_environment, py::arg("path"),
          py::arg("strict_counts") = false);

    m.def("parse_script", [](const std::string& text) {
        return json_to_py(script_to_json(parse_script(text)));
    });
    m.def("normalize_script", [](const std::string& text) {
        return serialize_script(parse_script(text));
    });

    m.def(
        "validate_script",
        [](const std::string& text, const std::filesystem::path& env_path) {
            const auto env = load_environment(env_path);
            const auto script = parse_script(text);
            py::list out;
            for (const auto& d : validate(script, env)) out.append(json_to_py(diagnostic_to_json(d)));
            return out;
        },
        py::arg("script_text"), py::arg("environment_path"));

    m.def(
        "apply_suggestions",
        [](const std::string& text, const std::filesystem::path& env_path) {
            const auto env = load_environment(env_path);
            auto script = parse_script(text);
            return serialize_script(apply_suggestions(script, validate(script, env)));
        },
        py::arg("script_text"), py::arg("environment_path"),
        "Validate, substitute every suggested fix, and return the new script text.");

    m.def("extract_json", [](const std::string& raw) { return json_to_py(extract_json(raw)); });

    m.def(
        "estimate_durations",
        [](const std::string& text, double rate, double floor_s, double move_s) {
            DurationConfig config{rate, floor_s, move_s};
            py::list out;
            for (const auto& t : estimate_durations(parse_script(text), config)) {
                py::dict entry;
                entry["scene"] = t.scene_index;
                entry["event"] = t.event_index;
                entry["seconds"] = t.seconds;
                out.append(entry);
            }
            return out;
        },
        py::arg("script_text"), py::arg("rate") = 2.5, py::arg("floor") = 1.5,
        py::arg("move_duration") = 3.0);

    m.def(
        "render_storyboard",
        [](const std::string& text, double rate, double floor_s, double move_s) {
            return render_storyboard(parse_script(text), DurationConfig{rate, floor_s, move_s});
        },
        py::arg("script_text"), py::arg("rate") = 2.5, py::arg("floor") = 1.5,
        py::arg("move_duration") = 3.0);

    m.def(
        "produce_replay",
        [](const std::string& topic, const std::filesystem::path& fixture,
           const std::filesystem::path& run_dir, const std::filesystem::path& environment,
           const std::filesystem::path& templates, int debate_rounds) {
            WorkflowConfig config;
            config.environment_path = environment;
            config.template_dir = templates;
            config.run_dir = run_dir;
            config.debate_rounds = debate_rounds;
            Transcript transcript;
            std::filesystem::create_directories(run_dir);
            transcript.attach_sink(run_dir / "transcript.jsonl");
            auto fixture_path = std::filesystem::is_directory(fixture)
                                    ? fixture / "transcript.jsonl"
                                    : fixture;
            ReplayProvider provider(Transcript::load_jsonl(fixture_path), transcript);
            FilmRun run(config, provider, transcript);
            const RunState state = run.run_all(topic);
            py::dict out;
            out["run_dir"] = run_dir.string();
            out["completed"] = state.completed ? to_string(*state.completed) : "";
            out["warnings"] = state.warnings;
            return out;
        },
        py::arg("topic"), py::arg("fixture"), py::arg("run_dir"), py::arg("environment"),
        py::arg("templates"), py::arg("debate_rounds") = 2,
        "Run the whole pipeline offline against a recorded fixture.");
}
