#pragma once

#include "filmagent/collaboration.hpp"
#include "filmagent/crew.hpp"
#include "filmagent/provider.hpp"
#include "filmagent/script_model.hpp"
#include "filmagent/validator.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace filmagent {

enum class Stage { Idea, Script1, Script2, Script3, Cinema, Assembled };

std::string to_string(Stage stage);
std::optional<Stage> stage_from_string(std::string_view name);

struct WorkflowConfig {
    std::filesystem::path environment_path;
    std::filesystem::path template_dir;
    std::filesystem::path run_dir;
    ProviderConfig provider;
    int ccv_max_rounds = 3;
    int debate_rounds = 2;
    int schema_attempts = 3;
    bool literal_loop_guard = false;
    bool strict_counts = false;
    DurationConfig durations;
};

/// Progress of one production run; persisted as state.json inside the run
/// directory so an interrupted run can resume.
struct RunState {
    std::string run_id;
    std::string topic;
    std::optional<Stage> completed; // last finished stage
    std::vector<std::string> warnings;
    std::map<std::string, std::uint64_t> stage_call_counts;

    nlohmann::ordered_json to_json() const;
    static RunState from_json(const nlohmann::ordered_json& doc);
};

struct IdeaResult {
    std::vector<CharacterProfile> profiles;
    std::vector<SceneOutline> outlines;
};

struct CameraAnnotation {
    std::string shot;
    std::string reasoning;
};

/// One cinematographer's per-event shot choices, one annotation per script
/// event in order.
struct CameraAnnotationSet {
    std::string author_tag;
    std::vector<std::vector<CameraAnnotation>> scenes;

    /// Wire shape: {"scene 1": {"selected-shot-1": {...}, ...}, ...}.
    nlohmann::ordered_json to_wire() const;
    static CameraAnnotationSet from_wire(const nlohmann::ordered_json& doc,
                                         std::string author_tag);
};

/// Fills each event's `current position` snapshot from the replayed state
/// trace, ordered like the scene's initial positions.
void recompute_snapshots(AnnotatedScript& script, const EnvironmentSpec& env);

/// Renders a storyboard: a header per scene, then one
/// "[t=..s] SHOT — speaker: line — actions" row per event, with per-scene
/// timelines accumulated from the duration estimator.
std::string render_storyboard(const AnnotatedScript& script, const DurationConfig& durations);

/// One film production run: idea development, the three scriptwriting
/// stages, cinematography, and final assembly. Stages persist their
/// artifacts under the run directory as they complete.
class FilmRun {
public:
    FilmRun(WorkflowConfig config, ChatProvider& provider, Transcript& transcript);

    IdeaResult develop_idea(const std::string& topic);
    AnnotatedScript draft_script(const std::vector<SceneOutline>& outlines,
                                 const std::vector<CharacterProfile>& profiles);
    AnnotatedScript revise_with_director(const AnnotatedScript& script);
    AnnotatedScript revise_with_actors(const AnnotatedScript& script,
                                       const std::vector<CharacterProfile>& profiles);
    AnnotatedScript annotate_cameras(const AnnotatedScript& script);
    AnnotatedScript assemble(const AnnotatedScript& script);

    /// Runs every remaining stage. With `resume`, previously completed
    /// stages are reloaded from their artifacts instead of re-run.
    RunState run_all(const std::string& topic, bool resume = false);

    const EnvironmentSpec& environment() const { return environment_; }
    const TemplateLibrary& templates() const { return templates_; }
    const RunState& state() const { return state_; }
    const WorkflowConfig& config() const { return config_; }

    std::function<void(const std::string&)> log = [](const std::string&) {};

private:
    void mark_complete(Stage stage);
    void save_state() const;
    std::filesystem::path artifact(const std::string& name) const;
    void write_artifact(const std::string& name, const std::string& text) const;

    std::map<std::string, std::string> base_vars() const;
    std::string position_description(const std::vector<std::string>& locations) const;
    std::string initial_position_text(const Scene& scene) const;

    AnnotatedScript run_correction_cycle(const AnnotatedScript& script,
                                         const std::string& first_critique,
                                         const std::string& verify_template,
                                         const std::string& stage_label);

    WorkflowConfig config_;
    ChatProvider& provider_;
    Transcript& transcript_;
    EnvironmentSpec environment_;
    TemplateLibrary templates_;
    std::string action_list_;
    std::string shot_list_;
    std::string shot_requirements_;
    RunState state_;
};

/// Per-tag record counts in an existing transcript, used to fast-forward a
/// replay provider when resuming a crashed run.
std::map<std::string, std::size_t> consumed_calls_per_tag(const std::filesystem::path& jsonl);

} // namespace filmagent
