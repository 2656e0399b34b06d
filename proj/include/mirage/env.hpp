#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mirage::env {

// Logical coordinate space shared by all screens (portrait phone).
inline constexpr int kScreenWidth = 1080;
inline constexpr int kScreenHeight = 2400;

enum class ElementRole { button, text_field, list_item, toggle, label };

std::string element_role_name(ElementRole r);
ElementRole parse_element_role(const std::string& name);

struct Rect {
    int x = 0, y = 0, w = 0, h = 0;
    bool contains(int px, int py) const {
        return px >= x && px < x + w && py >= y && py < y + h;
    }
    std::pair<int, int> center() const { return {x + w / 2, y + h / 2}; }
};

struct Element {
    std::string id;
    ElementRole role = ElementRole::label;
    std::string text;
    Rect bounds;
};

struct Observation {
    int step_index = 0;
    std::string screen_id;
    std::string app_name;
    std::vector<Element> elements;  // document order; later elements are on top
    std::optional<std::string> focused_element;
    std::string digest;  // pure function of the other fields

    nlohmann::json to_json() const;
    static Observation from_json(const nlohmann::json& j);

    // Stable textual rendering used in prompts.
    std::string render() const;
};

std::string observation_digest(const Observation& obs);

// ---------------------------------------------------------------------------
// Actions (mobile action space)

enum class ActionKind {
    click,
    double_tap,
    long_press,
    input_text,
    navigate_home,
    navigate_back,
    scroll,
    swipe,
    open_app,
    wait,
    keyboard_enter,
    clear_text,
    status,
    answer,
};

std::string action_kind_name(ActionKind k);
ActionKind parse_action_kind(const std::string& name);

enum class Direction { up, down, left, right };
std::string direction_name(Direction d);
Direction parse_direction(const std::string& name);

enum class StatusValue { in_progress, complete, infeasible };
std::string status_name(StatusValue s);
StatusValue parse_status(const std::string& name);

struct Action {
    ActionKind kind = ActionKind::wait;
    std::optional<std::pair<int, int>> coord;  // click/double_tap/long_press
    std::string text;                          // input_text / answer
    Direction direction = Direction::down;     // scroll / swipe
    std::string app_name;                      // open_app
    StatusValue status = StatusValue::in_progress;

    bool is_interactive() const {
        return kind == ActionKind::click || kind == ActionKind::double_tap ||
               kind == ActionKind::long_press;
    }

    nlohmann::json to_json() const;
    static Action from_json(const nlohmann::json& j);

    static Action click_at(int x, int y);
    static Action type(std::string text);
    static Action open(std::string app);
    static Action make_status(StatusValue s);
};

// ---------------------------------------------------------------------------
// App machines

struct EnvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SideEffect {
    std::string op;          // set | append | increment | toggle | clear_fields
    std::string var;         // dot path inside the app's state vars
    nlohmann::json value;    // strings may interpolate ${field:<element_id>}
};

struct Transition {
    std::string screen_id;
    std::string element_id;  // empty = keyed on the action kind alone
    ActionKind action = ActionKind::click;
    std::string target_screen;  // empty = stay; "@back" pops the screen stack
    std::vector<SideEffect> effects;
};

struct ScreenDef {
    std::string id;
    std::vector<Element> elements;
};

// Declarative app state machine loaded from JSON.
struct AppMachine {
    std::string app_name;
    std::string initial_screen;
    nlohmann::json state_var_defaults;  // object
    std::map<std::string, ScreenDef> screens;
    std::vector<Transition> transitions;

    void check_valid() const;  // every transition target exists, etc.
    nlohmann::json to_json() const;
    static AppMachine from_json(const nlohmann::json& j);
};

// ---------------------------------------------------------------------------
// Tasks

struct Checkpoint {
    std::string name;
    std::string app;
    std::string var;   // dot path
    std::string op;    // eq | ne | ge | le | contains | size_ge | size_eq | truthy
    nlohmann::json value;

    nlohmann::json to_json() const;
    static Checkpoint from_json(const nlohmann::json& j);
};

struct TaskSpec {
    std::string task_id;
    std::string template_name;
    std::string instruction;
    std::vector<std::string> apps_involved;
    std::vector<Checkpoint> checkpoints;
    nlohmann::json initial_state = nlohmann::json::object();  // app -> var overrides
    int max_steps = 80;

    void check_valid() const;
    nlohmann::json to_json() const;
    static TaskSpec from_json(const nlohmann::json& j);
};

struct TaskTemplate {
    std::string template_name;
    std::string instruction;  // may contain {placeholders}
    std::vector<std::string> apps_involved;
    std::vector<Checkpoint> checkpoints;  // values may contain {placeholders}
    nlohmann::json initial_state = nlohmann::json::object();
    int max_steps = 80;

    nlohmann::json to_json() const;
    static TaskTemplate from_json(const nlohmann::json& j);
};

enum class TerminalReason { status_complete, max_steps, infeasible_declared, env_error };
std::string terminal_reason_name(TerminalReason r);
TerminalReason parse_terminal_reason(const std::string& name);

struct EpisodeOutcome {
    bool success = false;
    int checkpoints_completed = 0;
    int checkpoints_total = 0;
    int steps_taken = 0;
    TerminalReason terminal_reason = TerminalReason::status_complete;

    nlohmann::json to_json() const;
    static EpisodeOutcome from_json(const nlohmann::json& j);
};

// Deterministic expansion of templates against a binding table. Each
// composite's checkpoints are its constituents' checkpoints in order (the
// templates are authored that way); placeholders resolve from the binding
// row. Unbound placeholder -> EnvError.
std::vector<TaskSpec> generate_composite_tasks(
    const std::vector<TaskTemplate>& templates,
    const std::vector<std::map<std::string, std::string>>& bindings, std::uint64_t seed);

// Match a concrete instruction back to a template (placeholders become
// capture groups). Returns the expanded TaskSpec when exactly matched.
std::optional<TaskSpec> resolve_instruction(const std::string& instruction,
                                            const std::vector<TaskTemplate>& templates,
                                            const std::string& task_id);

// ---------------------------------------------------------------------------
// Environment

class GuiEnv {
public:
    explicit GuiEnv(std::map<std::string, AppMachine> apps);

    // Resets every app's state vars (plus task overrides) and returns the
    // home-screen observation. Deterministic in seed.
    Observation reset(const TaskSpec& task, std::uint64_t seed);

    // Applies the first matching transition; unmatched actions advance
    // step_index only. Throws EnvError once the episode is terminal.
    Observation step(const Action& action);

    EpisodeOutcome verify(const TaskSpec& task) const;

    Observation observe() const;
    bool terminal() const { return terminal_; }
    int steps_taken() const { return step_index_; }
    std::optional<StatusValue> declared_status() const { return declared_status_; }

    std::string state_digest() const;  // over all apps' state vars
    const nlohmann::json& state_vars() const { return state_; }

    const std::map<std::string, AppMachine>& apps() const { return apps_; }

    static const std::string kHomeApp;  // launcher pseudo-app
    static const std::string kHomeScreen;

private:
    const AppMachine& current_app() const;
    const ScreenDef& current_screen() const;
    Observation build_observation() const;
    const Element* element_at(int x, int y) const;  // topmost by document order
    void apply_effects(const std::vector<Transition>& fired);
    void apply_effect(const std::string& app, const SideEffect& effect);
    nlohmann::json interpolate(const nlohmann::json& value) const;

    std::map<std::string, AppMachine> apps_;
    nlohmann::json state_ = nlohmann::json::object();  // app -> vars
    std::vector<std::pair<std::string, std::string>> screen_stack_;  // (app, screen)
    std::map<std::string, std::string> field_values_;  // "app/screen/element" -> text
    std::optional<std::string> focused_field_;
    int step_index_ = 0;
    bool active_ = false;
    bool terminal_ = false;
    std::optional<StatusValue> declared_status_;
    std::string last_answer_;
};

// ---------------------------------------------------------------------------
// Suite loading

struct Suite {
    std::map<std::string, AppMachine> apps;
    std::vector<TaskTemplate> templates;                      // template_name order
    std::vector<std::map<std::string, std::string>> bindings; // shared rows
    std::vector<TaskSpec> tasks;                              // expanded, task_id order
};

// Reads every *.json in the directory (sorted by filename). Files declare
// their kind: {"kind": "app" | "task_template" | "bindings"}.
Suite load_suite(const std::string& dir, std::uint64_t seed);

}  // namespace mirage::env
