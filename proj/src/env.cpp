#include "mirage/env.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "mirage/util.hpp"

namespace fs = std::filesystem;

namespace mirage::env {

const std::string GuiEnv::kHomeApp = "home";
const std::string GuiEnv::kHomeScreen = "home";

// ---------------------------------------------------------------------------
// enums

std::string element_role_name(ElementRole r) {
    switch (r) {
        case ElementRole::button: return "button";
        case ElementRole::text_field: return "text_field";
        case ElementRole::list_item: return "list_item";
        case ElementRole::toggle: return "toggle";
        case ElementRole::label: return "label";
    }
    return "label";
}

ElementRole parse_element_role(const std::string& name) {
    if (name == "button") return ElementRole::button;
    if (name == "text_field") return ElementRole::text_field;
    if (name == "list_item") return ElementRole::list_item;
    if (name == "toggle") return ElementRole::toggle;
    if (name == "label") return ElementRole::label;
    throw EnvError("unknown element role: " + name);
}

std::string action_kind_name(ActionKind k) {
    switch (k) {
        case ActionKind::click: return "click";
        case ActionKind::double_tap: return "double_tap";
        case ActionKind::long_press: return "long_press";
        case ActionKind::input_text: return "input_text";
        case ActionKind::navigate_home: return "navigate_home";
        case ActionKind::navigate_back: return "navigate_back";
        case ActionKind::scroll: return "scroll";
        case ActionKind::swipe: return "swipe";
        case ActionKind::open_app: return "open_app";
        case ActionKind::wait: return "wait";
        case ActionKind::keyboard_enter: return "keyboard_enter";
        case ActionKind::clear_text: return "clear_text";
        case ActionKind::status: return "status";
        case ActionKind::answer: return "answer";
    }
    return "wait";
}

ActionKind parse_action_kind(const std::string& name) {
    static const std::map<std::string, ActionKind> table = {
        {"click", ActionKind::click},
        {"double_tap", ActionKind::double_tap},
        {"long_press", ActionKind::long_press},
        {"input_text", ActionKind::input_text},
        {"navigate_home", ActionKind::navigate_home},
        {"navigate_back", ActionKind::navigate_back},
        {"scroll", ActionKind::scroll},
        {"swipe", ActionKind::swipe},
        {"open_app", ActionKind::open_app},
        {"wait", ActionKind::wait},
        {"keyboard_enter", ActionKind::keyboard_enter},
        {"clear_text", ActionKind::clear_text},
        {"status", ActionKind::status},
        {"answer", ActionKind::answer},
    };
    auto it = table.find(name);
    if (it == table.end()) throw EnvError("unknown action kind: " + name);
    return it->second;
}

std::string direction_name(Direction d) {
    switch (d) {
        case Direction::up: return "up";
        case Direction::down: return "down";
        case Direction::left: return "left";
        case Direction::right: return "right";
    }
    return "down";
}

Direction parse_direction(const std::string& name) {
    if (name == "up") return Direction::up;
    if (name == "down") return Direction::down;
    if (name == "left") return Direction::left;
    if (name == "right") return Direction::right;
    throw EnvError("unknown direction: " + name);
}

std::string status_name(StatusValue s) {
    switch (s) {
        case StatusValue::in_progress: return "in_progress";
        case StatusValue::complete: return "complete";
        case StatusValue::infeasible: return "infeasible";
    }
    return "in_progress";
}

StatusValue parse_status(const std::string& name) {
    if (name == "in_progress") return StatusValue::in_progress;
    if (name == "complete") return StatusValue::complete;
    if (name == "infeasible") return StatusValue::infeasible;
    throw EnvError("unknown status: " + name);
}

std::string terminal_reason_name(TerminalReason r) {
    switch (r) {
        case TerminalReason::status_complete: return "status_complete";
        case TerminalReason::max_steps: return "max_steps";
        case TerminalReason::infeasible_declared: return "infeasible_declared";
        case TerminalReason::env_error: return "env_error";
    }
    return "env_error";
}

TerminalReason parse_terminal_reason(const std::string& name) {
    if (name == "status_complete") return TerminalReason::status_complete;
    if (name == "max_steps") return TerminalReason::max_steps;
    if (name == "infeasible_declared") return TerminalReason::infeasible_declared;
    if (name == "env_error") return TerminalReason::env_error;
    throw EnvError("unknown terminal reason: " + name);
}

// ---------------------------------------------------------------------------
// Observation

nlohmann::json Observation::to_json() const {
    nlohmann::json elems = nlohmann::json::array();
    for (const auto& e : elements) {
        elems.push_back({{"id", e.id},
                         {"role", element_role_name(e.role)},
                         {"text", e.text},
                         {"bounds", {e.bounds.x, e.bounds.y, e.bounds.w, e.bounds.h}}});
    }
    nlohmann::json j{{"step_index", step_index},
                     {"screen_id", screen_id},
                     {"app_name", app_name},
                     {"elements", elems},
                     {"focused_element", focused_element ? nlohmann::json(*focused_element)
                                                         : nlohmann::json(nullptr)}};
    j["digest"] = digest;
    return j;
}

Observation Observation::from_json(const nlohmann::json& j) {
    Observation o;
    o.step_index = j.at("step_index").get<int>();
    o.screen_id = j.at("screen_id").get<std::string>();
    o.app_name = j.at("app_name").get<std::string>();
    for (const auto& e : j.at("elements")) {
        Element el;
        el.id = e.at("id").get<std::string>();
        el.role = parse_element_role(e.at("role").get<std::string>());
        el.text = e.at("text").get<std::string>();
        auto b = e.at("bounds");
        el.bounds = Rect{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(),
                         b.at(3).get<int>()};
        o.elements.push_back(std::move(el));
    }
    if (!j.at("focused_element").is_null())
        o.focused_element = j.at("focused_element").get<std::string>();
    o.digest = j.value("digest", "");
    if (o.digest.empty()) o.digest = observation_digest(o);
    return o;
}

std::string observation_digest(const Observation& obs) {
    Observation copy = obs;
    copy.digest.clear();
    nlohmann::json j = copy.to_json();
    j.erase("digest");
    return util::json_digest(j);
}

std::string Observation::render() const {
    std::ostringstream out;
    out << "screen: " << screen_id << "\n";
    out << "app: " << app_name << "\n";
    out << "elements:\n";
    for (const auto& e : elements)
        out << "  - [" << element_role_name(e.role) << "] " << e.id << " \"" << e.text << "\"\n";
    out << "focused: " << (focused_element ? *focused_element : "(none)") << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Action

nlohmann::json Action::to_json() const {
    nlohmann::json j{{"kind", action_kind_name(kind)}};
    switch (kind) {
        case ActionKind::click:
        case ActionKind::double_tap:
        case ActionKind::long_press:
            if (coord) {
                j["x"] = coord->first;
                j["y"] = coord->second;
            }
            break;
        case ActionKind::input_text:
        case ActionKind::answer:
            j["text"] = text;
            break;
        case ActionKind::scroll:
        case ActionKind::swipe:
            j["direction"] = direction_name(direction);
            break;
        case ActionKind::open_app:
            j["app_name"] = app_name;
            break;
        case ActionKind::status:
            j["status"] = status_name(status);
            break;
        default:
            break;
    }
    return j;
}

Action Action::from_json(const nlohmann::json& j) {
    Action a;
    a.kind = parse_action_kind(j.at("kind").get<std::string>());
    switch (a.kind) {
        case ActionKind::click:
        case ActionKind::double_tap:
        case ActionKind::long_press:
            if (j.contains("x") && j.contains("y"))
                a.coord = {j.at("x").get<int>(), j.at("y").get<int>()};
            break;
        case ActionKind::input_text:
        case ActionKind::answer:
            a.text = j.at("text").get<std::string>();
            break;
        case ActionKind::scroll:
        case ActionKind::swipe:
            a.direction = parse_direction(j.at("direction").get<std::string>());
            break;
        case ActionKind::open_app:
            a.app_name = j.at("app_name").get<std::string>();
            break;
        case ActionKind::status:
            a.status = parse_status(j.at("status").get<std::string>());
            break;
        default:
            break;
    }
    return a;
}

Action Action::click_at(int x, int y) {
    Action a;
    a.kind = ActionKind::click;
    a.coord = {x, y};
    return a;
}

Action Action::type(std::string text) {
    Action a;
    a.kind = ActionKind::input_text;
    a.text = std::move(text);
    return a;
}

Action Action::open(std::string app) {
    Action a;
    a.kind = ActionKind::open_app;
    a.app_name = std::move(app);
    return a;
}

Action Action::make_status(StatusValue s) {
    Action a;
    a.kind = ActionKind::status;
    a.status = s;
    return a;
}

// ---------------------------------------------------------------------------
// AppMachine

void AppMachine::check_valid() const {
    if (app_name.empty()) throw EnvError("app machine needs a name");
    if (!screens.count(initial_screen))
        throw EnvError("app " + app_name + ": initial screen '" + initial_screen + "' not defined");
    if (!state_var_defaults.is_object())
        throw EnvError("app " + app_name + ": state_vars must be an object");
    for (const auto& [sid, screen] : screens) {
        std::set<std::string> ids;
        for (const auto& e : screen.elements) {
            if (!ids.insert(e.id).second)
                throw EnvError("app " + app_name + ": duplicate element id '" + e.id +
                               "' on screen " + sid);
            if (e.bounds.x < 0 || e.bounds.y < 0 || e.bounds.x + e.bounds.w > kScreenWidth ||
                e.bounds.y + e.bounds.h > kScreenHeight)
                throw EnvError("app " + app_name + ": element '" + e.id +
                               "' bounds outside the logical space");
        }
    }
    for (const auto& t : transitions) {
        auto it = screens.find(t.screen_id);
        if (it == screens.end())
            throw EnvError("app " + app_name + ": transition on unknown screen " + t.screen_id);
        if (!t.element_id.empty()) {
            bool found = false;
            for (const auto& e : it->second.elements)
                if (e.id == t.element_id) { found = true; break; }
            if (!found)
                throw EnvError("app " + app_name + ": transition names unknown element '" +
                               t.element_id + "' on screen " + t.screen_id);
        }
        if (!t.target_screen.empty() && t.target_screen != "@back" &&
            !screens.count(t.target_screen))
            throw EnvError("app " + app_name + ": transition target '" + t.target_screen +
                           "' not defined");
    }
}

nlohmann::json AppMachine::to_json() const {
    nlohmann::json screens_json = nlohmann::json::object();
    for (const auto& [sid, screen] : screens) {
        nlohmann::json elems = nlohmann::json::array();
        for (const auto& e : screen.elements)
            elems.push_back({{"id", e.id},
                             {"role", element_role_name(e.role)},
                             {"text", e.text},
                             {"bounds", {e.bounds.x, e.bounds.y, e.bounds.w, e.bounds.h}}});
        screens_json[sid] = {{"elements", elems}};
    }
    nlohmann::json trans = nlohmann::json::array();
    for (const auto& t : transitions) {
        nlohmann::json effects = nlohmann::json::array();
        for (const auto& ef : t.effects)
            effects.push_back({{"op", ef.op}, {"var", ef.var}, {"value", ef.value}});
        trans.push_back({{"screen", t.screen_id},
                         {"element", t.element_id},
                         {"action", action_kind_name(t.action)},
                         {"target", t.target_screen},
                         {"effects", effects}});
    }
    return {{"kind", "app"},
            {"app_name", app_name},
            {"initial_screen", initial_screen},
            {"state_vars", state_var_defaults},
            {"screens", screens_json},
            {"transitions", trans}};
}

AppMachine AppMachine::from_json(const nlohmann::json& j) {
    AppMachine m;
    m.app_name = j.at("app_name").get<std::string>();
    m.initial_screen = j.at("initial_screen").get<std::string>();
    m.state_var_defaults = j.at("state_vars");
    for (const auto& [sid, sdef] : j.at("screens").items()) {
        ScreenDef screen;
        screen.id = sid;
        for (const auto& e : sdef.at("elements")) {
            Element el;
            el.id = e.at("id").get<std::string>();
            el.role = parse_element_role(e.at("role").get<std::string>());
            el.text = e.at("text").get<std::string>();
            auto b = e.at("bounds");
            el.bounds = Rect{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(),
                             b.at(3).get<int>()};
            screen.elements.push_back(std::move(el));
        }
        m.screens[sid] = std::move(screen);
    }
    for (const auto& t : j.at("transitions")) {
        Transition tr;
        tr.screen_id = t.at("screen").get<std::string>();
        tr.element_id = t.value("element", "");
        tr.action = parse_action_kind(t.at("action").get<std::string>());
        tr.target_screen = t.value("target", "");
        if (t.contains("effects"))
            for (const auto& ef : t.at("effects"))
                tr.effects.push_back(SideEffect{ef.at("op").get<std::string>(),
                                                ef.value("var", ""), ef.value("value", nlohmann::json())});
        m.transitions.push_back(std::move(tr));
    }
    m.check_valid();
    return m;
}

// ---------------------------------------------------------------------------
// Checkpoints and tasks

nlohmann::json Checkpoint::to_json() const {
    return {{"name", name}, {"app", app}, {"var", var}, {"op", op}, {"value", value}};
}

Checkpoint Checkpoint::from_json(const nlohmann::json& j) {
    Checkpoint c;
    c.name = j.at("name").get<std::string>();
    c.app = j.at("app").get<std::string>();
    c.var = j.at("var").get<std::string>();
    c.op = j.at("op").get<std::string>();
    c.value = j.value("value", nlohmann::json());
    return c;
}

void TaskSpec::check_valid() const {
    if (task_id.empty()) throw EnvError("task needs an id");
    if (instruction.empty()) throw EnvError("task " + task_id + ": empty instruction");
    if (checkpoints.empty()) throw EnvError("task " + task_id + ": needs at least one checkpoint");
    if (max_steps < 1) throw EnvError("task " + task_id + ": max_steps must be positive");
}

nlohmann::json TaskSpec::to_json() const {
    nlohmann::json cps = nlohmann::json::array();
    for (const auto& c : checkpoints) cps.push_back(c.to_json());
    return {{"task_id", task_id},
            {"template_name", template_name},
            {"instruction", instruction},
            {"apps_involved", apps_involved},
            {"checkpoints", cps},
            {"initial_state", initial_state},
            {"max_steps", max_steps}};
}

TaskSpec TaskSpec::from_json(const nlohmann::json& j) {
    TaskSpec t;
    t.task_id = j.at("task_id").get<std::string>();
    t.template_name = j.value("template_name", "");
    t.instruction = j.at("instruction").get<std::string>();
    t.apps_involved = j.at("apps_involved").get<std::vector<std::string>>();
    for (const auto& c : j.at("checkpoints")) t.checkpoints.push_back(Checkpoint::from_json(c));
    t.initial_state = j.value("initial_state", nlohmann::json::object());
    t.max_steps = j.value("max_steps", 80);
    t.check_valid();
    return t;
}

nlohmann::json TaskTemplate::to_json() const {
    nlohmann::json cps = nlohmann::json::array();
    for (const auto& c : checkpoints) cps.push_back(c.to_json());
    return {{"kind", "task_template"},
            {"template_name", template_name},
            {"instruction", instruction},
            {"apps_involved", apps_involved},
            {"checkpoints", cps},
            {"initial_state", initial_state},
            {"max_steps", max_steps}};
}

TaskTemplate TaskTemplate::from_json(const nlohmann::json& j) {
    TaskTemplate t;
    t.template_name = j.at("template_name").get<std::string>();
    t.instruction = j.at("instruction").get<std::string>();
    t.apps_involved = j.at("apps_involved").get<std::vector<std::string>>();
    for (const auto& c : j.at("checkpoints")) t.checkpoints.push_back(Checkpoint::from_json(c));
    t.initial_state = j.value("initial_state", nlohmann::json::object());
    t.max_steps = j.value("max_steps", 80);
    return t;
}

nlohmann::json EpisodeOutcome::to_json() const {
    return {{"success", success},
            {"checkpoints_completed", checkpoints_completed},
            {"checkpoints_total", checkpoints_total},
            {"steps_taken", steps_taken},
            {"terminal_reason", terminal_reason_name(terminal_reason)}};
}

EpisodeOutcome EpisodeOutcome::from_json(const nlohmann::json& j) {
    EpisodeOutcome o;
    o.success = j.at("success").get<bool>();
    o.checkpoints_completed = j.at("checkpoints_completed").get<int>();
    o.checkpoints_total = j.at("checkpoints_total").get<int>();
    o.steps_taken = j.at("steps_taken").get<int>();
    o.terminal_reason = parse_terminal_reason(j.at("terminal_reason").get<std::string>());
    return o;
}

namespace {

nlohmann::json substitute_json_placeholders(
    const nlohmann::json& value, const std::vector<std::pair<std::string, std::string>>& row) {
    if (value.is_string())
        return util::substitute_placeholders(value.get<std::string>(), row);
    if (value.is_object()) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [k, v] : value.items()) out[k] = substitute_json_placeholders(v, row);
        return out;
    }
    if (value.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : value) out.push_back(substitute_json_placeholders(v, row));
        return out;
    }
    return value;
}

}  // namespace

std::vector<TaskSpec> generate_composite_tasks(
    const std::vector<TaskTemplate>& templates,
    const std::vector<std::map<std::string, std::string>>& bindings, std::uint64_t seed) {
    (void)seed;  // expansion is order-deterministic; the seed names the suite
    std::vector<TaskSpec> out;
    for (const auto& templ : templates) {
        auto needed = util::placeholder_names(templ.instruction);
        std::vector<std::vector<std::pair<std::string, std::string>>> rows;
        if (needed.empty() && bindings.empty()) {
            rows.push_back({});
        } else {
            for (const auto& binding : bindings) {
                std::vector<std::pair<std::string, std::string>> row(binding.begin(), binding.end());
                rows.push_back(std::move(row));
            }
            if (rows.empty()) continue;  // placeholders but no rows: expands to nothing
        }
        int index = 0;
        for (const auto& row : rows) {
            for (const auto& name : needed) {
                bool bound = false;
                for (const auto& [k, v] : row)
                    if (k == name) { bound = true; break; }
                if (!bound)
                    throw EnvError("template " + templ.template_name + ": unbound placeholder {" +
                                   name + "}");
            }
            TaskSpec task;
            task.template_name = templ.template_name;
            task.task_id = templ.template_name + "#" + std::to_string(index);
            task.instruction = util::substitute_placeholders(templ.instruction, row);
            task.apps_involved = templ.apps_involved;
            for (const auto& cp : templ.checkpoints) {
                Checkpoint c = cp;
                c.value = substitute_json_placeholders(cp.value, row);
                c.name = util::substitute_placeholders(cp.name, row);
                task.checkpoints.push_back(std::move(c));
            }
            task.initial_state = substitute_json_placeholders(templ.initial_state, row);
            task.max_steps = templ.max_steps;
            task.check_valid();
            out.push_back(std::move(task));
            ++index;
        }
    }
    return out;
}

std::optional<TaskSpec> resolve_instruction(const std::string& instruction,
                                            const std::vector<TaskTemplate>& templates,
                                            const std::string& task_id) {
    for (const auto& templ : templates) {
        // Build a regex from the instruction template: literal text escaped,
        // {placeholder} -> lazy capture.
        std::string pattern;
        std::vector<std::string> names;
        const std::string& t = templ.instruction;
        for (std::size_t i = 0; i < t.size();) {
            if (t[i] == '{') {
                auto close = t.find('}', i);
                if (close != std::string::npos) {
                    names.push_back(t.substr(i + 1, close - i - 1));
                    pattern += "(.+?)";
                    i = close + 1;
                    continue;
                }
            }
            static const std::string special = R"(\^$.|?*+()[]{})";
            if (special.find(t[i]) != std::string::npos) pattern += '\\';
            pattern += t[i];
            ++i;
        }
        std::smatch m;
        if (!std::regex_match(instruction, m, std::regex("^" + pattern + "$"))) continue;
        std::map<std::string, std::string> row;
        for (std::size_t g = 0; g < names.size(); ++g) row[names[g]] = m[g + 1].str();
        auto tasks = generate_composite_tasks({templ}, {row}, 0);
        if (tasks.empty()) continue;
        TaskSpec task = tasks.front();
        task.task_id = task_id;
        return task;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// GuiEnv

GuiEnv::GuiEnv(std::map<std::string, AppMachine> apps) : apps_(std::move(apps)) {
    for (const auto& [name, machine] : apps_) {
        if (name != machine.app_name)
            throw EnvError("app registered under wrong key: " + name);
        machine.check_valid();
    }
    // Synthesize the launcher: one button per app, laid out top to bottom.
    AppMachine home;
    home.app_name = kHomeApp;
    home.initial_screen = kHomeScreen;
    home.state_var_defaults = nlohmann::json::object();
    ScreenDef screen;
    screen.id = kHomeScreen;
    int y = 100;
    screen.elements.push_back(Element{"home_title", ElementRole::label, "Home", {40, 20, 1000, 60}});
    for (const auto& [name, machine] : apps_) {
        screen.elements.push_back(
            Element{"launch_" + name, ElementRole::button, name, {40, y, 1000, 90}});
        y += 110;
        if (y + 90 > kScreenHeight) y = 100;  // wrap; fixture app counts stay small
    }
    home.screens[kHomeScreen] = std::move(screen);
    apps_[kHomeApp] = std::move(home);
}

Observation GuiEnv::reset(const TaskSpec& task, std::uint64_t seed) {
    (void)seed;  // fixtures are fully declarative; the seed keeps the interface stable
    for (const auto& app : task.apps_involved)
        if (!apps_.count(app)) throw EnvError("task " + task.task_id + ": unknown app '" + app + "'");
    state_ = nlohmann::json::object();
    for (const auto& [name, machine] : apps_) state_[name] = machine.state_var_defaults;
    for (const auto& [app, overrides] : task.initial_state.items()) {
        if (!apps_.count(app)) throw EnvError("task " + task.task_id + ": unknown app '" + app + "'");
        for (const auto& [k, v] : overrides.items()) state_[app][k] = v;
    }
    screen_stack_ = {{kHomeApp, kHomeScreen}};
    field_values_.clear();
    focused_field_.reset();
    step_index_ = 0;
    active_ = true;
    terminal_ = false;
    declared_status_.reset();
    last_answer_.clear();
    return build_observation();
}

const AppMachine& GuiEnv::current_app() const {
    return apps_.at(screen_stack_.back().first);
}

const ScreenDef& GuiEnv::current_screen() const {
    return current_app().screens.at(screen_stack_.back().second);
}

Observation GuiEnv::build_observation() const {
    Observation obs;
    obs.step_index = step_index_;
    obs.app_name = screen_stack_.back().first;
    obs.screen_id = screen_stack_.back().second;
    for (const auto& e : current_screen().elements) {
        Element el = e;
        if (el.role == ElementRole::text_field) {
            auto key = obs.app_name + "/" + obs.screen_id + "/" + el.id;
            auto it = field_values_.find(key);
            if (it != field_values_.end() && !it->second.empty()) el.text = it->second;
        }
        obs.elements.push_back(std::move(el));
    }
    if (focused_field_) {
        // Focus only renders while the focused field is on this screen.
        for (const auto& e : obs.elements)
            if (obs.app_name + "/" + obs.screen_id + "/" + e.id == *focused_field_)
                obs.focused_element = e.id;
    }
    obs.digest = observation_digest(obs);
    return obs;
}

const Element* GuiEnv::element_at(int x, int y) const {
    const Element* hit = nullptr;
    for (const auto& e : current_screen().elements)
        if (e.bounds.contains(x, y)) hit = &e;  // later in document order = on top
    return hit;
}

nlohmann::json GuiEnv::interpolate(const nlohmann::json& value) const {
    if (value.is_string()) {
        std::string s = value.get<std::string>();
        std::string out;
        for (std::size_t i = 0; i < s.size();) {
            if (s.compare(i, 2, "${") == 0) {
                auto close = s.find('}', i);
                if (close != std::string::npos) {
                    std::string expr = s.substr(i + 2, close - i - 2);
                    if (expr.rfind("field:", 0) == 0) {
                        std::string elem = expr.substr(6);
                        auto key = screen_stack_.back().first + "/" + screen_stack_.back().second +
                                   "/" + elem;
                        auto it = field_values_.find(key);
                        out += (it != field_values_.end()) ? it->second : "";
                        i = close + 1;
                        continue;
                    }
                }
            }
            out.push_back(s[i]);
            ++i;
        }
        return out;
    }
    if (value.is_object()) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [k, v] : value.items()) out[k] = interpolate(v);
        return out;
    }
    if (value.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : value) out.push_back(interpolate(v));
        return out;
    }
    return value;
}

void GuiEnv::apply_effect(const std::string& app, const SideEffect& effect) {
    if (effect.op == "clear_fields") {
        auto prefix = screen_stack_.back().first + "/" + screen_stack_.back().second + "/";
        for (auto it = field_values_.begin(); it != field_values_.end();) {
            if (it->first.rfind(prefix, 0) == 0)
                it = field_values_.erase(it);
            else
                ++it;
        }
        focused_field_.reset();
        return;
    }
    // Walk the dot path, creating objects along the way.
    nlohmann::json* node = &state_[app];
    std::string path = effect.var;
    std::size_t pos = 0;
    std::string last;
    while (true) {
        auto dot = path.find('.', pos);
        std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (dot == std::string::npos) {
            last = key;
            break;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
    nlohmann::json value = interpolate(effect.value);
    if (effect.op == "set") {
        (*node)[last] = value;
    } else if (effect.op == "append") {
        if (!(*node)[last].is_array()) (*node)[last] = nlohmann::json::array();
        (*node)[last].push_back(value);
    } else if (effect.op == "increment") {
        double cur = (*node)[last].is_number() ? (*node)[last].get<double>() : 0.0;
        double by = value.is_number() ? value.get<double>() : 1.0;
        (*node)[last] = cur + by;
    } else if (effect.op == "toggle") {
        bool cur = (*node)[last].is_boolean() ? (*node)[last].get<bool>() : false;
        (*node)[last] = !cur;
    } else {
        throw EnvError("unknown side-effect op: " + effect.op);
    }
}

Observation GuiEnv::step(const Action& action) {
    if (!active_) throw EnvError("step before reset");
    if (terminal_) throw EnvError("episode already terminal");
    ++step_index_;

    const std::string app = screen_stack_.back().first;
    const std::string screen = screen_stack_.back().second;

    // Global actions first.
    switch (action.kind) {
        case ActionKind::navigate_home:
            screen_stack_ = {{kHomeApp, kHomeScreen}};
            focused_field_.reset();
            return build_observation();
        case ActionKind::navigate_back:
            if (screen_stack_.size() > 1) screen_stack_.pop_back();
            focused_field_.reset();
            return build_observation();
        case ActionKind::open_app: {
            auto it = apps_.find(action.app_name);
            if (it == apps_.end()) return build_observation();  // unknown app: nothing happens
            screen_stack_.push_back({action.app_name, it->second.initial_screen});
            focused_field_.reset();
            return build_observation();
        }
        case ActionKind::status:
            terminal_ = true;
            declared_status_ = action.status;
            return build_observation();
        case ActionKind::answer:
            last_answer_ = action.text;
            return build_observation();
        default:
            break;
    }

    // Element resolution for pointer actions.
    const Element* hit = nullptr;
    if (action.is_interactive()) {
        if (!action.coord) throw EnvError("interactive action without coordinates");
        auto [x, y] = *action.coord;
        if (x < 0 || y < 0 || x >= kScreenWidth || y >= kScreenHeight)
            throw EnvError("coordinates outside the logical space");
        hit = element_at(x, y);
        if (hit && action.kind == ActionKind::click && hit->role == ElementRole::text_field)
            focused_field_ = app + "/" + screen + "/" + hit->id;
    }

    if (action.kind == ActionKind::input_text || action.kind == ActionKind::clear_text ||
        action.kind == ActionKind::keyboard_enter) {
        bool focused_here =
            focused_field_ && focused_field_->rfind(app + "/" + screen + "/", 0) == 0;
        if (action.kind == ActionKind::input_text) {
            if (focused_here)
                field_values_[*focused_field_] += action.text;
            // No focused field: no-op, mirrors a real device. Flagged by the
            // trace layer, not an error.
        } else if (action.kind == ActionKind::clear_text) {
            if (focused_here) field_values_[*focused_field_].clear();
        }
    }

    // Transition lookup: exact (screen, element, kind) match; element-less
    // rules match on kind alone.
    const Transition* fired = nullptr;
    for (const auto& t : current_app().transitions) {
        if (t.screen_id != screen) continue;
        if (t.action != action.kind) continue;
        if (!t.element_id.empty()) {
            if (!hit || hit->id != t.element_id) continue;
        }
        fired = &t;
        break;
    }
    if (fired) {
        // Effects run against the pre-transition screen (field interpolation).
        for (const auto& effect : fired->effects) apply_effect(app, effect);
        if (fired->target_screen == "@back") {
            if (screen_stack_.size() > 1) screen_stack_.pop_back();
            focused_field_.reset();
        } else if (!fired->target_screen.empty()) {
            screen_stack_.back().second = fired->target_screen;
            focused_field_.reset();
        }
    }
    return build_observation();
}

namespace {

const nlohmann::json* walk_path(const nlohmann::json& root, const std::string& path) {
    const nlohmann::json* node = &root;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        auto dot = path.find('.', pos);
        std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (!node->is_object() || !node->contains(key)) return nullptr;
        node = &node->at(key);
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return node;
}

bool json_number_ge(const nlohmann::json& a, const nlohmann::json& b) {
    return a.is_number() && b.is_number() && a.get<double>() >= b.get<double>();
}

bool checkpoint_holds(const Checkpoint& cp, const nlohmann::json& state) {
    if (!state.contains(cp.app)) return false;
    const nlohmann::json* node = walk_path(state.at(cp.app), cp.var);
    if (!node) return false;
    if (cp.op == "eq") return *node == cp.value;
    if (cp.op == "ne") return *node != cp.value;
    if (cp.op == "ge") return json_number_ge(*node, cp.value);
    if (cp.op == "le") return json_number_ge(cp.value, *node);
    if (cp.op == "truthy")
        return (node->is_boolean() && node->get<bool>()) ||
               (node->is_number() && node->get<double>() != 0.0);
    if (cp.op == "contains") {
        if (node->is_array()) {
            for (const auto& v : *node)
                if (v == cp.value) return true;
            return false;
        }
        if (node->is_string() && cp.value.is_string())
            return node->get<std::string>().find(cp.value.get<std::string>()) != std::string::npos;
        return false;
    }
    if (cp.op == "size_ge")
        return node->is_array() &&
               static_cast<long long>(node->size()) >= cp.value.get<long long>();
    if (cp.op == "size_eq")
        return node->is_array() &&
               static_cast<long long>(node->size()) == cp.value.get<long long>();
    throw EnvError("unknown checkpoint op: " + cp.op);
}

}  // namespace

EpisodeOutcome GuiEnv::verify(const TaskSpec& task) const {
    if (!active_) throw EnvError("verify before reset");
    EpisodeOutcome out;
    out.checkpoints_total = static_cast<int>(task.checkpoints.size());
    for (const auto& cp : task.checkpoints)
        if (checkpoint_holds(cp, state_)) ++out.checkpoints_completed;
    out.success = out.checkpoints_completed == out.checkpoints_total;
    out.steps_taken = step_index_;
    if (declared_status_) {
        out.terminal_reason = (*declared_status_ == StatusValue::infeasible)
                                  ? TerminalReason::infeasible_declared
                                  : TerminalReason::status_complete;
    } else if (step_index_ >= task.max_steps) {
        out.terminal_reason = TerminalReason::max_steps;
    } else {
        out.terminal_reason = TerminalReason::status_complete;
    }
    return out;
}

Observation GuiEnv::observe() const {
    if (!active_) throw EnvError("observe before reset");
    return build_observation();
}

std::string GuiEnv::state_digest() const { return util::json_digest(state_); }

// ---------------------------------------------------------------------------
// Suite loading

Suite load_suite(const std::string& dir, std::uint64_t seed) {
    if (!fs::is_directory(dir)) throw EnvError("suite directory not found: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    Suite suite;
    for (const auto& path : files) {
        std::ifstream in(path);
        if (!in) throw EnvError("cannot read " + path.string());
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw EnvError("malformed JSON in " + path.string() + ": " + e.what());
        }
        std::string kind = doc.value("kind", "");
        if (kind == "app") {
            AppMachine machine = AppMachine::from_json(doc);
            suite.apps[machine.app_name] = std::move(machine);
        } else if (kind == "task_template") {
            suite.templates.push_back(TaskTemplate::from_json(doc));
        } else if (kind == "bindings") {
            for (const auto& row : doc.at("rows")) {
                std::map<std::string, std::string> r;
                for (const auto& [k, v] : row.items()) r[k] = v.get<std::string>();
                suite.bindings.push_back(std::move(r));
            }
        } else if (kind == "mock_script") {
            // Mock scripts may live beside a suite; they are loaded by the
            // provider layer, not here.
        } else {
            throw EnvError("file " + path.string() + " has unknown kind '" + kind + "'");
        }
    }
    std::sort(suite.templates.begin(), suite.templates.end(),
              [](const TaskTemplate& a, const TaskTemplate& b) {
                  return a.template_name < b.template_name;
              });
    suite.tasks = generate_composite_tasks(suite.templates, suite.bindings, seed);
    std::sort(suite.tasks.begin(), suite.tasks.end(),
              [](const TaskSpec& a, const TaskSpec& b) { return a.task_id < b.task_id; });
    return suite;
}

}  // namespace mirage::env
