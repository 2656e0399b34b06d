#include "mirage/fixtures.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "mirage/agent.hpp"
#include "mirage/util.hpp"

namespace fs = std::filesystem;

namespace mirage::fixtures {

namespace {

using env::ActionKind;
using env::ElementRole;
using llm::MockRule;
using llm::Role;
using nlohmann::json;

// ---------------------------------------------------------------------------
// template <-> regex helpers

const std::string kRegexSpecial = R"rx(\^$.|?*+()[]{})rx";

std::string escape_regex(const std::string& text) {
    std::string out;
    for (char c : text) {
        if (kRegexSpecial.find(c) != std::string::npos) out += '\\';
        out += c;
    }
    return out;
}

struct TemplatePattern {
    std::string regex;
    std::map<std::string, int> group_of;  // param -> first capture group (1-based)
};

TemplatePattern pattern_from(const std::string& templ) {
    TemplatePattern out;
    int group = 0;
    for (std::size_t i = 0; i < templ.size();) {
        if (templ[i] == '{') {
            auto close = templ.find('}', i);
            if (close != std::string::npos) {
                std::string name = templ.substr(i + 1, close - i - 1);
                out.regex += "(.+?)";
                ++group;
                if (!out.group_of.count(name)) out.group_of[name] = group;
                i = close + 1;
                continue;
            }
        }
        if (kRegexSpecial.find(templ[i]) != std::string::npos) out.regex += '\\';
        out.regex += templ[i];
        ++i;
    }
    return out;
}

// "{name}" -> "$1" style references for reply templates.
std::string with_refs(const std::string& templ, const std::map<std::string, int>& group_of) {
    std::vector<std::pair<std::string, std::string>> bindings;
    for (const auto& [param, group] : group_of)
        bindings.emplace_back(param, "$" + std::to_string(group));
    std::vector<std::string> missing;
    return util::substitute_placeholders(templ, bindings, &missing);
}

json subgoal_entry(const std::string& text, const std::string& kind, const std::string& core,
                   const std::vector<std::pair<std::string, std::string>>& args) {
    json args_json = json::object();
    for (const auto& [k, v] : args) args_json[k] = v;
    return {{"text", text}, {"kind", kind}, {"core_skill", core}, {"args", args_json}};
}

json plan_reply(const std::string& meta, std::vector<json> subgoals) {
    return {{"selected_meta", meta}, {"subgoals", subgoals}};
}

json action_reply(const json& action, const std::string& description, bool done) {
    return {{"action", action}, {"description", description}, {"subgoal_done", done}};
}

MockRule rule(Role role, std::vector<std::string> contains, std::string pattern, json reply,
              std::vector<std::string> not_contains = {}) {
    MockRule r;
    r.role = role;
    r.contains = std::move(contains);
    r.not_contains = std::move(not_contains);
    r.pattern = std::move(pattern);
    r.reply = std::move(reply);
    return r;
}

// ---------------------------------------------------------------------------
// app machines

env::Element element(const std::string& id, ElementRole role, const std::string& text, int slot) {
    return env::Element{id, role, text, env::Rect{40, 140 + slot * 130, 1000, 110}};
}

env::Transition transition(const std::string& screen, const std::string& elem,
                           const std::string& target, std::vector<env::SideEffect> effects = {}) {
    env::Transition t;
    t.screen_id = screen;
    t.element_id = elem;
    t.action = ActionKind::click;
    t.target_screen = target;
    t.effects = std::move(effects);
    return t;
}

env::SideEffect effect(const std::string& op, const std::string& var, json value = {}) {
    return env::SideEffect{op, var, std::move(value)};
}

env::AppMachine make_app(const std::string& name, const std::string& initial, json vars,
                         std::vector<env::ScreenDef> screens,
                         std::vector<env::Transition> transitions) {
    env::AppMachine app;
    app.app_name = name;
    app.initial_screen = initial;
    app.state_var_defaults = std::move(vars);
    for (auto& s : screens) app.screens[s.id] = std::move(s);
    app.transitions = std::move(transitions);
    app.check_valid();
    return app;
}

env::ScreenDef screen(const std::string& id, std::vector<env::Element> elements) {
    env::ScreenDef s;
    s.id = id;
    s.elements = std::move(elements);
    return s;
}

}  // namespace

std::map<std::string, env::AppMachine> builtin_apps() {
    std::map<std::string, env::AppMachine> apps;

    apps["contacts"] = make_app(
        "contacts", "contacts_home", {{"entries", json::array()}, {"calls", json::array()}},
        {screen("contacts_home", {element("contacts_title", ElementRole::label, "Contacts", 0),
                                  element("add_contact", ElementRole::button, "Add contact", 1),
                                  element("dial", ElementRole::button, "Dial", 2)}),
         screen("contact_edit", {element("name_field", ElementRole::text_field, "Name", 0),
                                 element("number_field", ElementRole::text_field, "Number", 1),
                                 element("save", ElementRole::button, "Save", 2),
                                 element("discard", ElementRole::button, "Discard", 3)}),
         screen("dial_pad", {element("dial_number", ElementRole::text_field, "Phone number", 0),
                             element("call", ElementRole::button, "Call", 1)})},
        {transition("contacts_home", "add_contact", "contact_edit"),
         transition("contacts_home", "dial", "dial_pad"),
         transition("contact_edit", "save", "contacts_home",
                    {effect("append", "entries",
                            {{"name", "${field:name_field}"}, {"number", "${field:number_field}"}}),
                     effect("clear_fields", "")}),
         transition("contact_edit", "discard", "contacts_home", {effect("clear_fields", "")}),
         transition("dial_pad", "call", "contacts_home",
                    {effect("append", "calls", "${field:dial_number}"),
                     effect("clear_fields", "")})});

    apps["messenger"] = make_app(
        "messenger", "sms_home", {{"messages", json::array()}},
        {screen("sms_home", {element("sms_title", ElementRole::label, "Messages", 0),
                             element("new_message", ElementRole::button, "New message", 1)}),
         screen("sms_compose", {element("recipient_field", ElementRole::text_field, "Recipient", 0),
                                element("message_field", ElementRole::text_field, "Message", 1),
                                element("send", ElementRole::button, "Send", 2)})},
        {transition("sms_home", "new_message", "sms_compose"),
         transition("sms_compose", "send", "sms_home",
                    {effect("append", "messages",
                            {{"to", "${field:recipient_field}"}, {"text", "${field:message_field}"}}),
                     effect("clear_fields", "")})});

    apps["notes"] = make_app(
        "notes", "notes_home", {{"notes", json::array()}},
        {screen("notes_home", {element("notes_title", ElementRole::label, "Notes", 0),
                               element("new_note", ElementRole::button, "New note", 1)}),
         screen("note_edit", {element("title_field", ElementRole::text_field, "Title", 0),
                              element("content_field", ElementRole::text_field, "Content", 1),
                              element("save_note", ElementRole::button, "Save note", 2),
                              element("discard_note", ElementRole::button, "Discard note", 3)})},
        {transition("notes_home", "new_note", "note_edit"),
         transition("note_edit", "save_note", "notes_home",
                    {effect("append", "notes",
                            {{"title", "${field:title_field}"}, {"content", "${field:content_field}"}}),
                     effect("clear_fields", "")}),
         transition("note_edit", "discard_note", "notes_home", {effect("clear_fields", "")})});

    apps["settings"] = make_app(
        "settings", "settings_home",
        {{"wifi", false}, {"bluetooth", false}, {"brightness", 50}},
        {screen("settings_home", {element("settings_title", ElementRole::label, "Settings", 0),
                                  element("wifi_toggle", ElementRole::toggle, "Wi-Fi", 1),
                                  element("bluetooth_toggle", ElementRole::toggle, "Bluetooth", 2),
                                  element("brightness_up", ElementRole::button, "Brightness up", 3)})},
        {transition("settings_home", "wifi_toggle", "", {effect("toggle", "wifi")}),
         transition("settings_home", "bluetooth_toggle", "", {effect("toggle", "bluetooth")}),
         transition("settings_home", "brightness_up", "", {effect("set", "brightness", 100)})});

    apps["clock"] = make_app(
        "clock", "clock_home",
        {{"stopwatch_running", false}, {"stopwatch_was_run", false}, {"stopwatch_paused", false}},
        {screen("clock_home", {element("clock_title", ElementRole::label, "Clock", 0),
                               element("stopwatch", ElementRole::button, "Stopwatch", 1)}),
         screen("stopwatch_screen", {element("start", ElementRole::button, "Start", 0),
                                     element("pause", ElementRole::button, "Pause", 1)})},
        {transition("clock_home", "stopwatch", "stopwatch_screen"),
         transition("stopwatch_screen", "start", "",
                    {effect("set", "stopwatch_running", true),
                     effect("set", "stopwatch_was_run", true)}),
         transition("stopwatch_screen", "pause", "",
                    {effect("set", "stopwatch_running", false),
                     effect("set", "stopwatch_paused", true)})});

    apps["camera"] = make_app(
        "camera", "camera_home", {{"photos", 0}, {"videos", 0}},
        {screen("camera_home", {element("camera_title", ElementRole::label, "Camera", 0),
                                element("take_photo", ElementRole::button, "Take photo", 1),
                                element("record_video", ElementRole::button, "Record video", 2)})},
        {transition("camera_home", "take_photo", "", {effect("increment", "photos", 1)}),
         transition("camera_home", "record_video", "", {effect("increment", "videos", 1)})});

    apps["calendar"] = make_app(
        "calendar", "calendar_home", {{"events", json::array()}},
        {screen("calendar_home", {element("calendar_title", ElementRole::label, "Calendar", 0),
                                  element("add_event", ElementRole::button, "Add event", 1)}),
         screen("event_edit", {element("event_title_field", ElementRole::text_field, "Event title", 0),
                               element("save_event", ElementRole::button, "Save event", 1)})},
        {transition("calendar_home", "add_event", "event_edit"),
         transition("event_edit", "save_event", "calendar_home",
                    {effect("append", "events", {{"title", "${field:event_title_field}"}}),
                     effect("clear_fields", "")})});

    apps["music"] = make_app(
        "music", "music_home", {{"playing", false}},
        {screen("music_home", {element("music_title", ElementRole::label, "Music", 0),
                               element("play", ElementRole::button, "Play", 1)})},
        {transition("music_home", "play", "", {effect("set", "playing", true)})});

    apps["recorder"] = make_app(
        "recorder", "recorder_home", {{"recordings", 0}},
        {screen("recorder_home", {element("recorder_title", ElementRole::label, "Recorder", 0),
                                  element("record", ElementRole::button, "Record", 1)}),
         screen("recording_screen", {element("recording_label", ElementRole::label, "Recording", 0),
                                     element("stop_save", ElementRole::button, "Stop and save", 1)})},
        {transition("recorder_home", "record", "recording_screen"),
         transition("recording_screen", "stop_save", "recorder_home",
                    {effect("increment", "recordings", 1)})});

    apps["browser"] = make_app(
        "browser", "browser_home", {{"submitted", false}},
        {screen("browser_home", {element("browser_title", ElementRole::label, "Browser", 0),
                                 element("open_task", ElementRole::button, "Open task page", 1)}),
         screen("task_page", {element("page_title", ElementRole::label, "Task page", 0),
                              element("submit", ElementRole::button, "Submit", 1)})},
        {transition("browser_home", "open_task", "task_page"),
         transition("task_page", "submit", "", {effect("set", "submitted", true)})});

    apps["expense"] = make_app(
        "expense", "expense_home", {{"expenses", json::array()}},
        {screen("expense_home", {element("expense_title", ElementRole::label, "Expenses", 0),
                                 element("add_expense", ElementRole::button, "Add expense", 1)}),
         screen("expense_edit", {element("desc_field", ElementRole::text_field, "Description", 0),
                                 element("amount_field", ElementRole::text_field, "Amount", 1),
                                 element("save_expense", ElementRole::button, "Save expense", 2)})},
        {transition("expense_home", "add_expense", "expense_edit"),
         transition("expense_edit", "save_expense", "expense_home",
                    {effect("append", "expenses",
                            {{"desc", "${field:desc_field}"}, {"amount", "${field:amount_field}"}}),
                     effect("clear_fields", "")})});

    apps["draw"] = make_app(
        "draw", "draw_home", {{"drawings", json::array()}},
        {screen("draw_home", {element("draw_title", ElementRole::label, "Draw", 0),
                              element("new_drawing", ElementRole::button, "New drawing", 1)}),
         screen("draw_edit", {element("drawing_name_field", ElementRole::text_field, "Drawing name", 0),
                              element("save_drawing", ElementRole::button, "Save drawing", 1)})},
        {transition("draw_home", "new_drawing", "draw_edit"),
         transition("draw_edit", "save_drawing", "draw_home",
                    {effect("append", "drawings", "${field:drawing_name_field}"),
                     effect("clear_fields", "")})});

    return apps;
}

// ---------------------------------------------------------------------------
// primitive catalog

namespace {

env::Checkpoint checkpoint(const std::string& name, const std::string& app, const std::string& var,
                           const std::string& op, json value) {
    return env::Checkpoint{name, app, var, op, std::move(value)};
}

std::vector<PrimitiveSpec> build_primitives() {
    std::vector<PrimitiveSpec> out;

    out.push_back(PrimitiveSpec{
        "add_contact", "add_contact",
        {{"name", "contact name"}, {"number", "phone number"}},
        "Add a new contact with the given name and number.",
        {"open the contacts app", "click the Add contact button", "click the Name field",
         "type \"{name}\"", "click the Number field", "type \"{number}\"",
         "click the Save button"},
        "Create a new contact for {name} in the contacts app. His number is {number}.",
        "add a contact named {name} with number {number}",
        "contacts",
        {checkpoint("contact_saved", "contacts", "entries", "contains",
                    {{"name", "{name}"}, {"number", "{number}"}})},
        json::object(), "communication", "contacts, calls and messaging"});

    out.push_back(PrimitiveSpec{
        "call_number", "call_number",
        {{"number", "phone number to dial"}},
        "Dial a phone number from the contacts dialer.",
        {"open the contacts app", "click the Dial button", "click the Phone number field",
         "type \"{number}\"", "click the Call button"},
        "Call the number {number} from the contacts app.",
        "dial the number {number}",
        "contacts",
        {checkpoint("call_placed", "contacts", "calls", "contains", "{number}")},
        json::object(), "communication", "contacts, calls and messaging"});

    out.push_back(PrimitiveSpec{
        "send_sms", "send_sms",
        {{"number", "recipient phone number"}, {"text", "message body"}},
        "Send a text message to a number.",
        {"open the messenger app", "click the New message button", "click the Recipient field",
         "type \"{number}\"", "click the Message field", "type \"{text}\"",
         "click the Send button"},
        "Send a text message to {number} saying {text} with the messenger app.",
        "send a text message to {number} saying {text}",
        "messenger",
        {checkpoint("sms_sent", "messenger", "messages", "contains",
                    {{"to", "{number}"}, {"text", "{text}"}})},
        json::object(), "communication", "contacts, calls and messaging"});

    out.push_back(PrimitiveSpec{
        "create_note", "create_note",
        {{"file_name", "note title"}, {"text", "note body"}},
        "Create a note with a title and body text.",
        {"open the notes app", "click the New note button", "click the Title field",
         "type \"{file_name}\"", "click the Content field", "type \"{text}\"",
         "click the Save note button"},
        "Create a new note named {file_name} in the notes app with the following text: {text}",
        "create a note titled {file_name} with text {text}",
        "notes",
        {checkpoint("note_saved", "notes", "notes", "contains",
                    {{"title", "{file_name}"}, {"content", "{text}"}})},
        json::object(), "productivity", "notes, events, expenses and files"});

    out.push_back(PrimitiveSpec{
        "wifi_on", "set_wifi",
        {{"state", "desired wifi state"}},
        "Switch wifi on or off from settings.",
        {"open the settings app", "click the Wi-Fi toggle"},
        "Turn on wifi using the settings app.",
        "turn on the wifi",
        "settings",
        {checkpoint("wifi_on", "settings", "wifi", "eq", true)},
        json::object(), "device_settings", "system toggles and device configuration"});

    out.push_back(PrimitiveSpec{
        "wifi_off", "set_wifi",
        {{"state", "desired wifi state"}},
        "Switch wifi on or off from settings.",
        {"open the settings app", "click the Wi-Fi toggle"},
        "Turn off wifi using the settings app.",
        "turn off the wifi",
        "settings",
        {checkpoint("wifi_off", "settings", "wifi", "eq", false)},
        {{"settings", {{"wifi", true}}}}, "device_settings",
        "system toggles and device configuration"});

    out.push_back(PrimitiveSpec{
        "bluetooth_on", "set_bluetooth",
        {{"state", "desired bluetooth state"}},
        "Switch bluetooth on or off from settings.",
        {"open the settings app", "click the Bluetooth toggle"},
        "Turn on bluetooth using the settings app.",
        "turn on the bluetooth",
        "settings",
        {checkpoint("bluetooth_on", "settings", "bluetooth", "eq", true)},
        json::object(), "device_settings", "system toggles and device configuration"});

    out.push_back(PrimitiveSpec{
        "bluetooth_off", "set_bluetooth",
        {{"state", "desired bluetooth state"}},
        "Switch bluetooth on or off from settings.",
        {"open the settings app", "click the Bluetooth toggle"},
        "Turn off bluetooth using the settings app.",
        "turn off the bluetooth",
        "settings",
        {checkpoint("bluetooth_off", "settings", "bluetooth", "eq", false)},
        {{"settings", {{"bluetooth", true}}}}, "device_settings",
        "system toggles and device configuration"});

    out.push_back(PrimitiveSpec{
        "max_brightness", "set_max_brightness",
        {},
        "Raise the screen brightness to its maximum.",
        {"open the settings app", "click the Brightness up button"},
        "Turn the screen brightness up to the maximum using the settings app.",
        "set the brightness to maximum",
        "settings",
        {checkpoint("brightness_max", "settings", "brightness", "eq", 100)},
        json::object(), "device_settings", "system toggles and device configuration"});

    out.push_back(PrimitiveSpec{
        "take_photo", "take_photo",
        {},
        "Take a photo with the camera.",
        {"open the camera app", "click the Take photo button"},
        "Take a photo with the camera app.",
        "take a photo",
        "camera",
        {checkpoint("photo_taken", "camera", "photos", "ge", 1)},
        json::object(), "media_capture", "camera, audio and media playback"});

    out.push_back(PrimitiveSpec{
        "record_video", "record_video",
        {},
        "Record a video with the camera.",
        {"open the camera app", "click the Record video button"},
        "Record a video with the camera app.",
        "record a video",
        "camera",
        {checkpoint("video_recorded", "camera", "videos", "ge", 1)},
        json::object(), "media_capture", "camera, audio and media playback"});

    out.push_back(PrimitiveSpec{
        "run_stopwatch", "run_stopwatch",
        {},
        "Start the stopwatch in the clock app.",
        {"open the clock app", "click the Stopwatch button", "click the Start button"},
        "Run the stopwatch in the clock app.",
        "start the stopwatch",
        "clock",
        {checkpoint("stopwatch_started", "clock", "stopwatch_was_run", "eq", true)},
        json::object(), "utilities", "timers and small tools"});

    out.push_back(PrimitiveSpec{
        "pause_stopwatch", "pause_stopwatch",
        {},
        "Pause the running stopwatch.",
        {"open the clock app", "click the Stopwatch button", "click the Pause button"},
        "Pause the stopwatch in the clock app.",
        "pause the stopwatch",
        "clock",
        {checkpoint("stopwatch_paused", "clock", "stopwatch_paused", "eq", true)},
        json::object(), "utilities", "timers and small tools"});

    out.push_back(PrimitiveSpec{
        "add_event", "add_event",
        {{"event_title", "calendar event title"}},
        "Create a calendar event with the given title.",
        {"open the calendar app", "click the Add event button", "click the Event title field",
         "type \"{event_title}\"", "click the Save event button"},
        "Create a calendar event titled {event_title} in the calendar app.",
        "add a calendar event titled {event_title}",
        "calendar",
        {checkpoint("event_added", "calendar", "events", "contains", {{"title", "{event_title}"}})},
        json::object(), "productivity", "notes, events, expenses and files"});

    out.push_back(PrimitiveSpec{
        "play_music", "play_music",
        {},
        "Open the music player and start playback.",
        {"open the music app", "click the Play button"},
        "Open the music app and play some music.",
        "play some music",
        "music",
        {checkpoint("music_playing", "music", "playing", "eq", true)},
        json::object(), "media_capture", "camera, audio and media playback"});

    out.push_back(PrimitiveSpec{
        "record_audio", "record_audio",
        {},
        "Record and save an audio clip.",
        {"open the recorder app", "click the Record button", "click the Stop and save button"},
        "Record an audio clip using the recorder app and save it.",
        "record an audio clip",
        "recorder",
        {checkpoint("audio_recorded", "recorder", "recordings", "ge", 1)},
        json::object(), "media_capture", "camera, audio and media playback"});

    out.push_back(PrimitiveSpec{
        "browse_submit", "submit_task_page",
        {},
        "Open the browser task page and submit the form.",
        {"open the browser app", "click the Open task page button", "click the Submit button"},
        "Open the task page in the browser app and hit submit.",
        "open the task page and submit",
        "browser",
        {checkpoint("page_submitted", "browser", "submitted", "eq", true)},
        json::object(), "utilities", "timers and small tools"});

    out.push_back(PrimitiveSpec{
        "add_expense", "add_expense",
        {{"expense_desc", "what the expense was for"}, {"amount", "expense amount"}},
        "Record an expense with a description and amount.",
        {"open the expense app", "click the Add expense button", "click the Description field",
         "type \"{expense_desc}\"", "click the Amount field", "type \"{amount}\"",
         "click the Save expense button"},
        "Add an expense {expense_desc} costing {amount} in the expense app.",
        "add an expense {expense_desc} costing {amount}",
        "expense",
        {checkpoint("expense_added", "expense", "expenses", "contains",
                    {{"desc", "{expense_desc}"}, {"amount", "{amount}"}})},
        json::object(), "productivity", "notes, events, expenses and files"});

    out.push_back(PrimitiveSpec{
        "create_drawing", "create_drawing",
        {{"drawing_name", "name for the drawing"}},
        "Create and save a named drawing.",
        {"open the draw app", "click the New drawing button", "click the Drawing name field",
         "type \"{drawing_name}\"", "click the Save drawing button"},
        "Create a new drawing named {drawing_name} in the draw app.",
        "create a drawing named {drawing_name}",
        "draw",
        {checkpoint("drawing_saved", "draw", "drawings", "contains", "{drawing_name}")},
        json::object(), "productivity", "notes, events, expenses and files"});

    return out;
}

}  // namespace

const std::vector<PrimitiveSpec>& primitives() {
    static const std::vector<PrimitiveSpec> catalog = build_primitives();
    return catalog;
}

const PrimitiveSpec& primitive(const std::string& family) {
    for (const auto& p : primitives())
        if (p.family == family) return p;
    throw std::invalid_argument("unknown primitive family: " + family);
}

std::vector<std::string> direct_covered_families() {
    return {"take_photo", "play_music", "record_video", "max_brightness", "wifi_on", "wifi_off"};
}

std::vector<std::string> mcts_covered_families() {
    auto out = direct_covered_families();
    for (const auto& f : {"bluetooth_on", "bluetooth_off", "run_stopwatch", "record_audio",
                          "browse_submit", "pause_stopwatch"})
        out.push_back(f);
    return out;
}

std::vector<std::string> sa_covered_families() {
    auto out = mcts_covered_families();
    for (const auto& f : {"add_contact", "send_sms", "call_number"}) out.push_back(f);
    return out;
}

std::vector<std::string> online_only_families() { return {"pause_stopwatch", "browse_submit"}; }

// ---------------------------------------------------------------------------
// task templates

namespace {

env::TaskTemplate template_from_primitives(const std::string& name,
                                           const std::vector<std::string>& families) {
    env::TaskTemplate t;
    t.template_name = name;
    std::vector<std::string> clauses;
    int position = 0;
    std::set<std::string> apps_seen;
    for (const auto& family : families) {
        const PrimitiveSpec& p = primitive(family);
        clauses.push_back(p.instruction_template);
        if (apps_seen.insert(p.app).second) t.apps_involved.push_back(p.app);
        for (const auto& cp : p.checkpoints) {
            env::Checkpoint c = cp;
            c.name = family + "_" + std::to_string(position);
            t.checkpoints.push_back(std::move(c));
        }
        for (const auto& [app, overrides] : p.initial_state.items())
            for (const auto& [k, v] : overrides.items()) t.initial_state[app][k] = v;
        ++position;
    }
    std::string instruction;
    for (std::size_t i = 0; i < clauses.size(); ++i) {
        if (i) instruction += " ";
        instruction += clauses[i];
    }
    t.instruction = instruction;
    return t;
}

const std::vector<std::pair<std::string, std::vector<std::string>>>& bench_composition() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> table = {
        {"add_contact_and_call", {"add_contact", "call_number"}},
        {"add_contact_and_sms", {"add_contact", "send_sms"}},
        {"add_contact_call_sms", {"add_contact", "call_number", "send_sms"}},
        {"add_contact_note_sms", {"add_contact", "create_note", "send_sms"}},
        {"note_and_sms", {"create_note", "send_sms"}},
        {"brightness_photo", {"max_brightness", "take_photo"}},
        {"brightness_video", {"max_brightness", "record_video"}},
        {"wifi_off_record_audio", {"wifi_off", "record_audio"}},
        {"wifi_off_bt_off_audio", {"wifi_off", "bluetooth_off", "record_audio"}},
        {"wifi_on_browser_submit", {"wifi_on", "browse_submit"}},
        {"bt_on_music", {"bluetooth_on", "play_music"}},
        {"wifi_off_bt_on_music", {"wifi_off", "bluetooth_on", "play_music"}},
        {"wifi_on_photo", {"wifi_on", "take_photo"}},
        {"wifi_off_bt_on", {"wifi_off", "bluetooth_on"}},
        {"wifi_off_bt_off", {"wifi_off", "bluetooth_off"}},
        {"stopwatch_run_pause", {"run_stopwatch", "pause_stopwatch"}},
        {"stopwatch_browser", {"run_stopwatch", "browse_submit"}},
        {"stopwatch_browser_pause", {"run_stopwatch", "browse_submit", "pause_stopwatch"}},
        {"stopwatch_draw", {"run_stopwatch", "create_drawing"}},
        {"photo_drawing", {"take_photo", "create_drawing"}},
        {"event_note", {"add_event", "create_note"}},
        {"event_sms", {"add_event", "send_sms"}},
        {"expense_note", {"add_expense", "create_note"}},
        {"expense_sms", {"add_expense", "send_sms"}},
        {"note_browser", {"create_note", "browse_submit"}},
        {"audio_note", {"record_audio", "create_note"}},
        {"photo_sms", {"take_photo", "send_sms"}},
        {"music_video", {"play_music", "record_video"}},
        {"brightness_drawing", {"max_brightness", "create_drawing"}},
        {"contact_expense", {"add_contact", "add_expense"}},
    };
    return table;
}

env::TaskTemplate concrete_template(const std::string& name, const std::string& family,
                                    const std::map<std::string, std::string>& binding) {
    env::TaskTemplate t = template_from_primitives(name, {family});
    std::vector<std::pair<std::string, std::string>> row(binding.begin(), binding.end());
    t.instruction = util::substitute_placeholders(t.instruction, row);
    for (auto& cp : t.checkpoints) {
        std::function<json(const json&)> subst = [&](const json& v) -> json {
            if (v.is_string()) return util::substitute_placeholders(v.get<std::string>(), row);
            if (v.is_object()) {
                json out = json::object();
                for (const auto& [k, val] : v.items()) out[k] = subst(val);
                return out;
            }
            return v;
        };
        cp.value = subst(cp.value);
    }
    return t;
}

}  // namespace

std::vector<env::TaskTemplate> primitive_templates() {
    std::vector<env::TaskTemplate> out;
    for (const auto& p : primitives()) out.push_back(template_from_primitives(p.family, {p.family}));
    return out;
}

std::vector<env::TaskTemplate> bench_templates() {
    std::vector<env::TaskTemplate> out;
    for (const auto& [name, families] : bench_composition())
        out.push_back(template_from_primitives(name, families));
    return out;
}

std::vector<std::map<std::string, std::string>> bench_bindings() {
    return {{{"name", "Oliver Hart"},
             {"number", "555-0142"},
             {"text", "nice to meet you"},
             {"file_name", "meeting_notes"},
             {"event_title", "dentist visit"},
             {"expense_desc", "groceries"},
             {"amount", "42"},
             {"drawing_name", "sunset_sketch"}}};
}

namespace {

struct ExplorationTask {
    std::string family;
    std::map<std::string, std::string> binding;
};

const std::vector<ExplorationTask>& exploration_tasks() {
    static const std::vector<ExplorationTask> tasks = [] {
        std::vector<ExplorationTask> out;
        for (const char* f : {"wifi_on", "wifi_off", "bluetooth_on", "bluetooth_off",
                              "max_brightness", "take_photo", "record_video", "run_stopwatch",
                              "pause_stopwatch", "play_music", "record_audio", "browse_submit"})
            out.push_back({f, {}});
        const char* names[] = {"Zara Quinn", "Miles Beck", "Ira Sol", "Nova Lane", "Remy Cole"};
        for (int i = 0; i < 5; ++i)
            out.push_back({"add_contact",
                           {{"name", names[i]}, {"number", "555-02" + std::to_string(10 + i)}}});
        const char* texts[] = {"running late", "see you soon", "call me back", "happy birthday"};
        for (int i = 0; i < 4; ++i)
            out.push_back({"send_sms",
                           {{"number", "555-03" + std::to_string(20 + i)}, {"text", texts[i]}}});
        for (int i = 0; i < 4; ++i)
            out.push_back({"call_number", {{"number", "555-04" + std::to_string(30 + i)}}});
        const char* titles[] = {"team sync", "gym session", "flight checkin"};
        for (int i = 0; i < 3; ++i)
            out.push_back({"add_event", {{"event_title", titles[i]}}});
        const char* drawings[] = {"blue_harbor", "red_canyon"};
        for (int i = 0; i < 2; ++i)
            out.push_back({"create_drawing", {{"drawing_name", drawings[i]}}});
        return out;
    }();
    return tasks;
}

}  // namespace

std::vector<env::TaskTemplate> exploration_templates() {
    std::vector<env::TaskTemplate> out;
    int index = 0;
    for (const auto& task : exploration_tasks()) {
        char name[48];
        std::snprintf(name, sizeof(name), "explore_%02d_%s", index++, task.family.c_str());
        out.push_back(concrete_template(name, task.family, task.binding));
    }
    return out;
}

std::vector<std::string> exploration_instructions() {
    std::vector<std::string> out;
    for (const auto& t : exploration_templates()) out.push_back(t.instruction);
    return out;
}

namespace {

const std::string kTrapSuffix = " Be careful with the editor.";

env::TaskTemplate trap_template(const std::string& name,
                                const std::map<std::string, std::string>& binding) {
    env::TaskTemplate t = concrete_template(name, "create_note", binding);
    t.instruction += kTrapSuffix;
    return t;
}

}  // namespace

std::vector<env::TaskTemplate> ablation_templates() {
    std::vector<env::TaskTemplate> out;
    // A class: solvable with no skills at all.
    out.push_back(concrete_template("abl_a0_take_photo", "take_photo", {}));
    out.push_back(concrete_template("abl_a1_play_music", "play_music", {}));
    out.push_back(concrete_template("abl_a2_max_brightness", "max_brightness", {}));
    // B class: needs a core skill that only the offline corpus provides.
    out.push_back(concrete_template("abl_b0_add_event", "add_event", {{"event_title", "tax review"}}));
    out.push_back(concrete_template("abl_b1_add_expense", "add_expense",
                                    {{"expense_desc", "parking"}, {"amount", "12"}}));
    out.push_back(
        concrete_template("abl_b2_create_drawing", "create_drawing", {{"drawing_name", "green_field"}}));
    // B' class: needs a core skill acquired only through online exploration.
    out.push_back(concrete_template("abl_c0_pause_stopwatch", "pause_stopwatch", {}));
    out.push_back(concrete_template("abl_c1_browse_submit", "browse_submit", {}));
    // C class: a trap step that only the reflector with note exemplars catches.
    out.push_back(trap_template("abl_d0_note_trap",
                                {{"file_name", "trap_note_one"}, {"text", "be thorough"}}));
    out.push_back(trap_template("abl_d1_note_trap",
                                {{"file_name", "trap_note_two"}, {"text", "double check"}}));
    out.push_back(trap_template("abl_d2_note_trap",
                                {{"file_name", "trap_note_three"}, {"text", "stay sharp"}}));
    return out;
}

std::vector<env::TaskTemplate> adversarial_templates() {
    std::vector<env::TaskTemplate> out;
    out.push_back(trap_template("adv_0_note_trap", {{"file_name", "adv_note_one"}, {"text", "mind the buttons"}}));
    out.push_back(trap_template("adv_1_note_trap", {{"file_name", "adv_note_two"}, {"text", "save not discard"}}));
    out.push_back(trap_template("adv_2_note_trap", {{"file_name", "adv_note_three"}, {"text", "check twice"}}));
    return out;
}

// ---------------------------------------------------------------------------
// step-goal grammar

std::optional<StepActionProto> action_for_step_goal(const std::string& step_goal) {
    auto starts = [&](const char* prefix) { return step_goal.rfind(prefix, 0) == 0; };
    auto after = [&](const char* prefix) { return step_goal.substr(std::string(prefix).size()); };

    if (starts("open the ") && step_goal.size() > 13 &&
        step_goal.compare(step_goal.size() - 4, 4, " app") == 0) {
        std::string app = step_goal.substr(9, step_goal.size() - 13);
        return StepActionProto{{{"kind", "open_app"}, {"app_name", app}}, step_goal};
    }
    if (starts("click the ")) {
        std::string target = after("click the ");
        return StepActionProto{{{"kind", "click"}}, "the " + target};
    }
    if (starts("type \"") && step_goal.back() == '"') {
        std::string text = step_goal.substr(6, step_goal.size() - 7);
        return StepActionProto{{{"kind", "input_text"}, {"text", text}}, step_goal};
    }
    if (step_goal == "press enter") return StepActionProto{{{"kind", "keyboard_enter"}}, step_goal};
    if (starts("scroll ")) {
        std::string dir = after("scroll ");
        return StepActionProto{{{"kind", "scroll"}, {"direction", dir}}, step_goal};
    }
    if (step_goal == "navigate back") return StepActionProto{{{"kind", "navigate_back"}}, step_goal};
    if (step_goal == "navigate home") return StepActionProto{{{"kind", "navigate_home"}}, step_goal};
    if (step_goal == "wait") return StepActionProto{{{"kind", "wait"}}, step_goal};
    if (step_goal == "mark the task complete")
        return StepActionProto{{{"kind", "status"}, {"status", "complete"}}, step_goal};
    if (starts("answer \"") && step_goal.back() == '"') {
        std::string text = step_goal.substr(8, step_goal.size() - 9);
        return StepActionProto{{{"kind", "answer"}, {"text", text}}, step_goal};
    }
    return std::nullopt;
}

std::vector<std::pair<env::Observation, env::Action>> run_scripted(
    env::GuiEnv& environment, const env::TaskSpec& task,
    const std::vector<std::string>& step_goals, std::uint64_t seed) {
    std::vector<std::pair<env::Observation, env::Action>> pairs;
    env::Observation obs = environment.reset(task, seed);
    for (const auto& goal : step_goals) {
        auto proto = action_for_step_goal(goal);
        if (!proto) throw std::invalid_argument("unscriptable step goal: " + goal);
        env::Action action = env::Action::from_json(proto->action);
        if (action.is_interactive() && !action.coord)
            action.coord = agent::ground(proto->description, obs, 0.5);
        pairs.emplace_back(obs, action);
        obs = environment.step(action);
    }
    return pairs;
}

// ---------------------------------------------------------------------------
// mock rules

namespace {

std::vector<MockRule> generic_action_rules() {
    std::vector<MockRule> rules;
    rules.push_back(rule(Role::action_decision, {}, R"rx(Step-goal: open the ([a-z0-9_]+) app\n)rx",
                         action_reply({{"kind", "open_app"}, {"app_name", "$1"}},
                                      "open the $1 app", true)));
    rules.push_back(rule(Role::action_decision, {}, R"rx(Step-goal: click the (.+?)\n)rx",
                         action_reply({{"kind", "click"}}, "the $1", true)));
    rules.push_back(rule(Role::action_decision, {}, R"rx(Step-goal: type "([^"]*)"\n)rx",
                         action_reply({{"kind", "input_text"}, {"text", "$1"}}, "type \"$1\"", true)));
    rules.push_back(rule(Role::action_decision, {"Step-goal: press enter\n"}, "",
                         action_reply({{"kind", "keyboard_enter"}}, "press enter", true)));
    rules.push_back(rule(Role::action_decision, {}, R"rx(Step-goal: scroll (up|down|left|right)\n)rx",
                         action_reply({{"kind", "scroll"}, {"direction", "$1"}}, "scroll $1", true)));
    rules.push_back(rule(Role::action_decision, {"Step-goal: navigate back\n"}, "",
                         action_reply({{"kind", "navigate_back"}}, "navigate back", true)));
    rules.push_back(rule(Role::action_decision, {"Step-goal: navigate home\n"}, "",
                         action_reply({{"kind", "navigate_home"}}, "navigate home", true)));
    rules.push_back(rule(Role::action_decision, {"Step-goal: wait\n"}, "",
                         action_reply({{"kind", "wait"}}, "wait", true)));
    rules.push_back(rule(Role::action_decision, {"Step-goal: mark the task complete\n"}, "",
                         action_reply({{"kind", "status"}, {"status", "complete"}},
                                      "mark the task complete", true)));
    return rules;
}

json nl_action_reply_for_step(const PrimitiveSpec& p, std::size_t step_index,
                              const std::map<std::string, int>& groups) {
    std::string step_goal = with_refs(p.body[step_index], groups);
    auto proto = action_for_step_goal(step_goal);
    if (!proto) throw std::logic_error("fixture body step not in grammar: " + p.body[step_index]);
    return action_reply(proto->action, proto->description, step_index + 1 == p.body.size());
}

// Per-family rules that walk a natural-language sub-goal through the same
// steps a core-skill body would take.
std::vector<MockRule> nl_subgoal_rules() {
    std::vector<MockRule> rules;
    for (const auto& p : primitives()) {
        TemplatePattern phrase = pattern_from(p.nl_phrase_template);
        for (std::size_t i = 0; i < p.body.size(); ++i) {
            rules.push_back(rule(Role::action_decision,
                                 {"subgoal_kind: natural_language",
                                  "subgoal_step: " + std::to_string(i) + "\n"},
                                 "Sub-goal: " + phrase.regex + "\n",
                                 nl_action_reply_for_step(p, i, phrase.group_of)));
        }
    }
    // Junk sub-goals used by exploration fallbacks: they complete but achieve
    // nothing.
    rules.push_back(rule(Role::action_decision, {"Sub-goal: scroll around the screen\n"}, "",
                         action_reply({{"kind", "scroll"}, {"direction", "down"}},
                                      "scroll around the screen", true)));
    rules.push_back(rule(Role::action_decision, {"Sub-goal: wait for a moment\n"}, "",
                         action_reply({{"kind", "wait"}}, "wait for a moment", true)));
    rules.push_back(rule(Role::action_decision, {"Sub-goal: go back home first\n"}, "",
                         action_reply({{"kind", "navigate_home"}}, "go back home first", true)));
    rules.push_back(rule(Role::action_decision, {"Sub-goal: wait around\n"}, "",
                         action_reply({{"kind", "wait"}}, "wait around", true)));
    return rules;
}

// The note-editor trap: the first candidate clicks Discard; the reflector
// (given note exemplars) scores it below 5 and the regenerated candidate
// saves instead.
std::vector<MockRule> trap_rules() {
    std::vector<MockRule> rules;
    json discard = action_reply({{"kind", "click"}}, "the Discard note button", false);
    rules.push_back(rule(Role::action_decision,
                         {"Be careful with the editor", "Step-goal: click the Save note button\n"},
                         "", discard, {"rejected:"}));
    rules.push_back(rule(Role::action_decision,
                         {"Be careful with the editor", "subgoal_kind: natural_language",
                          "subgoal_step: 6\n"},
                         "", discard, {"rejected:"}));
    rules.push_back(rule(Role::reflection,
                         {"Proposed description: the Discard note button",
                          "- past skill: Create a new note"},
                         "",
                         {{"caption", "note editor with discard pending"},
                          {"reason", "discarding loses the typed note"},
                          {"state_change", "the note would be lost"},
                          {"score", 3}}));
    return rules;
}

std::vector<MockRule> generic_reflection_rules() {
    return {rule(Role::reflection, {}, "",
                 {{"caption", "screen under evaluation"},
                  {"reason", "the action matches the current step"},
                  {"state_change", "the expected screen transition"},
                  {"score", 7}})};
}

std::vector<MockRule> labeling_rules() {
    std::vector<MockRule> rules;
    rules.push_back(rule(Role::step_goal_extraction, {"\"kind\":\"open_app\""},
                         R"rx("app_name":"([a-z0-9_]+)")rx", {{"step_goal", "open the $1 app"}}));
    rules.push_back(rule(Role::step_goal_extraction, {"\"kind\":\"click\""},
                         R"rx(clicked_element: (.+?) \(button\))rx",
                         {{"step_goal", "click the $1 button"}}));
    rules.push_back(rule(Role::step_goal_extraction, {"\"kind\":\"click\""},
                         R"rx(clicked_element: (.+?) \(text_field\))rx",
                         {{"step_goal", "click the $1 field"}}));
    rules.push_back(rule(Role::step_goal_extraction, {"\"kind\":\"click\""},
                         R"rx(clicked_element: (.+?) \(toggle\))rx",
                         {{"step_goal", "click the $1 toggle"}}));
    rules.push_back(rule(Role::step_goal_extraction, {"\"kind\":\"input_text\""},
                         R"rx("text":"([^"]*)")rx", {{"step_goal", "type \"$1\""}}));
    rules.push_back(rule(Role::step_goal_extraction, {"\"kind\":\"keyboard_enter\""}, "",
                         {{"step_goal", "press enter"}}));
    rules.push_back(rule(Role::step_goal_extraction, {"\"kind\":\"scroll\""},
                         R"rx("direction":"(up|down|left|right)")rx", {{"step_goal", "scroll $1"}}));
    rules.push_back(rule(Role::step_goal_extraction, {"\"kind\":\"navigate_back\""}, "",
                         {{"step_goal", "navigate back"}}));
    rules.push_back(rule(Role::step_goal_extraction, {"\"kind\":\"navigate_home\""}, "",
                         {{"step_goal", "navigate home"}}));
    rules.push_back(
        rule(Role::step_goal_extraction, {"\"kind\":\"wait\""}, "", {{"step_goal", "wait"}}));
    rules.push_back(rule(Role::step_goal_extraction, {"\"kind\":\"status\""}, "",
                         {{"step_goal", "mark the task complete"}}));
    rules.push_back(rule(Role::step_goal_extraction, {"\"kind\":\"answer\""},
                         R"rx("text":"([^"]*)")rx", {{"step_goal", "answer \"$1\""}}));
    // Clicks that hit nothing still need a label.
    rules.push_back(rule(Role::step_goal_extraction, {"\"kind\":\"click\""}, "",
                         {{"step_goal", "click the screen"}}));
    return rules;
}

std::string family_task_marker(const PrimitiveSpec& p) {
    // A stable prefix of the primitive instruction, used to recognize the
    // family in classification/synthesis prompts.
    auto cut = p.instruction_template.find('{');
    std::string prefix =
        cut == std::string::npos ? p.instruction_template : p.instruction_template.substr(0, cut);
    return "Task: " + util::trim(prefix);
}

std::vector<MockRule> induction_family_rules() {
    std::vector<MockRule> reuse, create;
    for (const auto& p : primitives()) {
        std::string marker = family_task_marker(p);
        reuse.push_back(rule(Role::meta_classification, {marker, "- " + p.meta_name + ":"}, "",
                             {{"is_new", false},
                              {"category", p.meta_name},
                              {"name", ""},
                              {"description", ""}}));
        create.push_back(rule(Role::meta_classification, {marker}, "",
                              {{"is_new", true},
                               {"category", ""},
                               {"name", p.meta_name},
                               {"description", p.meta_description}}));

        json params = json::array();
        for (const auto& [name, description] : p.params)
            params.push_back({{"name", name}, {"description", description}});
        reuse.push_back(rule(Role::core_skill_synthesis,
                             {marker, "- existing_skill: " + p.core_name + "("}, "",
                             {{"decision", "reuse"},
                              {"name", p.core_name},
                              {"params", json::array()},
                              {"docstring", ""},
                              {"body", json::array()}}));
        create.push_back(rule(Role::core_skill_synthesis, {marker}, "",
                              {{"decision", "create"},
                               {"name", p.core_name},
                               {"params", params},
                               {"docstring", p.docstring},
                               {"body", p.body}}));
    }
    std::vector<MockRule> rules = std::move(reuse);
    for (auto& r : create) rules.push_back(std::move(r));
    // Consolidation during merge passes keeps the first skill's name.
    rules.push_back(rule(Role::core_skill_synthesis, {"Consolidate two similar core skills"},
                         R"rx(first: ([a-z0-9_]+)\()rx",
                         {{"decision", "reuse"},
                          {"name", "$1"},
                          {"params", json::array()},
                          {"docstring", ""},
                          {"body", json::array()}}));
    return rules;
}

// Plan reply walking a primitive's own body as plain natural-language
// sub-goals; works with an empty store.
json nl_plan_reply(const PrimitiveSpec& p, const std::map<std::string, int>& groups) {
    std::vector<json> subgoals;
    for (const auto& step : p.body)
        subgoals.push_back(subgoal_entry(with_refs(step, groups), "natural_language", "", {}));
    return plan_reply(p.meta_name, subgoals);
}

json skill_plan_reply(const std::vector<std::string>& families,
                      const std::map<std::string, int>& groups) {
    std::vector<json> subgoals;
    for (const auto& family : families) {
        const PrimitiveSpec& p = primitive(family);
        std::vector<std::pair<std::string, std::string>> args;
        for (const auto& [param, description] : p.params) {
            auto it = groups.find(param);
            args.emplace_back(param,
                              it == groups.end() ? param : "$" + std::to_string(it->second));
        }
        subgoals.push_back(subgoal_entry(with_refs(p.nl_phrase_template, groups), "skill_call",
                                         p.core_name, args));
    }
    return plan_reply(primitive(families.front()).meta_name, subgoals);
}

const json kJunkPlan = plan_reply("", {subgoal_entry("wait around", "natural_language", "", {})});

std::vector<MockRule> plan_rules() {
    std::vector<MockRule> rules;
    const std::string kPlanMarker = "Generate an ordered plan";

    // Trap tasks plan like ordinary note tasks.
    {
        const PrimitiveSpec& note = primitive("create_note");
        TemplatePattern pattern =
            pattern_from("Task: " + note.instruction_template + kTrapSuffix + "\n");
        rules.push_back(
            rule(Role::subgoal_planning, {kPlanMarker, "Be careful with the editor"}, pattern.regex,
                 skill_plan_reply({"create_note"}, pattern.group_of)));
    }

    // Composite benchmark templates: skill_call plans.
    for (const auto& [name, families] : bench_composition()) {
        env::TaskTemplate t = template_from_primitives(name, families);
        TemplatePattern pattern = pattern_from("Task: " + t.instruction + "\n");
        rules.push_back(rule(Role::subgoal_planning, {kPlanMarker}, pattern.regex,
                             skill_plan_reply(families, pattern.group_of)));
    }

    // Primitive tasks. Direct-covered families plan as generic step lists
    // that need no skills; the rest split on whether the family's core skill
    // function shows up in the prompt.
    auto direct = direct_covered_families();
    for (const auto& p : primitives()) {
        TemplatePattern pattern = pattern_from("Task: " + p.instruction_template + "\n");
        bool covered = std::find(direct.begin(), direct.end(), p.family) != direct.end();
        if (covered) {
            rules.push_back(rule(Role::subgoal_planning, {kPlanMarker}, pattern.regex,
                                 nl_plan_reply(p, pattern.group_of)));
        } else {
            rules.push_back(rule(Role::subgoal_planning,
                                 {kPlanMarker, "- " + p.core_name + "("}, pattern.regex,
                                 skill_plan_reply({p.family}, pattern.group_of)));
            rules.push_back(
                rule(Role::subgoal_planning, {kPlanMarker}, pattern.regex, kJunkPlan));
        }
    }

    // Anything else gets a harmless plan rather than a script gap.
    rules.push_back(rule(Role::subgoal_planning, {kPlanMarker}, "", kJunkPlan));
    return rules;
}

json junk_expansion_reply() {
    return plan_reply("", {subgoal_entry("scroll around the screen", "natural_language", "", {}),
                           subgoal_entry("wait for a moment", "natural_language", "", {}),
                           subgoal_entry("go back home first", "natural_language", "", {})});
}

json covered_expansion_reply(const PrimitiveSpec& p, const std::map<std::string, int>& groups,
                             bool as_skill_call) {
    std::vector<std::pair<std::string, std::string>> args;
    if (as_skill_call)
        for (const auto& [param, description] : p.params) {
            auto it = groups.find(param);
            args.emplace_back(param, it == groups.end() ? param : "$" + std::to_string(it->second));
        }
    return plan_reply("", {subgoal_entry(with_refs(p.nl_phrase_template, groups),
                                         as_skill_call ? "skill_call" : "natural_language",
                                         as_skill_call ? p.core_name : "", args),
                           subgoal_entry("scroll around the screen", "natural_language", "", {}),
                           subgoal_entry("wait for a moment", "natural_language", "", {})});
}

std::vector<MockRule> exploration_rules() {
    std::vector<MockRule> rules;
    const std::string kExpandMarker = "Propose candidate next sub-goals";
    const std::string kSkillsMarker = "Available skills:";

    auto sa = sa_covered_families();
    auto mcts = mcts_covered_families();
    for (const auto& p : primitives()) {
        TemplatePattern pattern = pattern_from("Task: " + p.instruction_template + "\n");
        if (std::find(sa.begin(), sa.end(), p.family) != sa.end())
            rules.push_back(rule(Role::subgoal_planning, {kExpandMarker, kSkillsMarker},
                                 pattern.regex,
                                 covered_expansion_reply(p, pattern.group_of, true)));
        if (std::find(mcts.begin(), mcts.end(), p.family) != mcts.end())
            rules.push_back(rule(Role::subgoal_planning, {kExpandMarker}, pattern.regex,
                                 covered_expansion_reply(p, pattern.group_of, false),
                                 {kSkillsMarker}));
    }
    rules.push_back(rule(Role::subgoal_planning, {kExpandMarker}, "", junk_expansion_reply()));

    // Expansion replies always carry three candidates, correct-first.
    rules.push_back(
        rule(Role::subgoal_ranking, {"Rank the candidate sub-goals"}, "", {{"ranking", {0, 1, 2}}}));
    return rules;
}

std::vector<MockRule> task_generation_rules() {
    json tasks = json::array();
    for (const auto& instruction : exploration_instructions()) tasks.push_back(instruction);
    return {rule(Role::task_generation, {"Generate distinct task instructions"}, "",
                 {{"tasks", tasks}})};
}

}  // namespace

std::vector<MockRule> solver_rules() {
    std::vector<MockRule> rules;
    auto extend = [&rules](std::vector<MockRule> more) {
        for (auto& r : more) rules.push_back(std::move(r));
    };
    extend(trap_rules());
    extend(nl_subgoal_rules());
    extend(generic_action_rules());
    extend(generic_reflection_rules());
    extend(labeling_rules());
    extend(induction_family_rules());
    extend(plan_rules());
    extend(exploration_rules());
    extend(task_generation_rules());
    return rules;
}

llm::MockProvider solver_provider() { return llm::MockProvider(solver_rules()); }

// ---------------------------------------------------------------------------
// emitters

namespace {

void write_json(const fs::path& path, const json& doc) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(2) << "\n";
}

void write_templates(const std::string& dir, const std::vector<env::TaskTemplate>& templates) {
    int index = 0;
    for (const auto& t : templates) {
        char name[96];
        std::snprintf(name, sizeof(name), "task_%02d_%s.json", index++, t.template_name.c_str());
        write_json(fs::path(dir) / name, t.to_json());
    }
}

}  // namespace

void write_apps(const std::string& dir) {
    for (const auto& [name, app] : builtin_apps())
        write_json(fs::path(dir) / ("app_" + name + ".json"), app.to_json());
}

void write_bench_suite(const std::string& dir) {
    write_apps(dir);
    write_templates(dir, bench_templates());
    json rows = json::array();
    for (const auto& row : bench_bindings()) {
        json r = json::object();
        for (const auto& [k, v] : row) r[k] = v;
        rows.push_back(r);
    }
    write_json(fs::path(dir) / "bindings.json", {{"kind", "bindings"}, {"rows", rows}});
}

void write_exploration_suite(const std::string& dir) {
    write_apps(dir);
    write_templates(dir, exploration_templates());
}

void write_ablation_suite(const std::string& dir) {
    write_apps(dir);
    write_templates(dir, ablation_templates());
}

void write_adversarial_suite(const std::string& dir) {
    write_apps(dir);
    write_templates(dir, adversarial_templates());
}

void write_mock_script(const std::string& path) {
    json rules = json::array();
    for (const auto& r : solver_rules()) rules.push_back(r.to_json());
    write_json(path, {{"kind", "mock_script"}, {"rules", rules}});
}

void write_corpus(const std::string& dir, std::uint64_t seed) {
    struct FamilyPlan {
        std::string family;
        int variants;
    };
    const std::vector<FamilyPlan> plan = {
        {"add_contact", 8}, {"call_number", 6},  {"send_sms", 8},      {"create_note", 9},
        {"add_event", 7},   {"add_expense", 7},  {"create_drawing", 5}, {"wifi_on", 1},
        {"wifi_off", 1},    {"bluetooth_on", 1}, {"bluetooth_off", 1},  {"max_brightness", 1},
        {"take_photo", 1},  {"record_video", 1}, {"run_stopwatch", 1},  {"play_music", 1},
        {"record_audio", 1},
    };
    const char* names[] = {"Bob Ray",  "Ann Lee",  "Kim Fox",  "Joe Dunn", "Max Ito",
                           "Ada King", "Tom Chu",  "Eva Marsh", "Ben Ford"};
    const char* words[] = {"agenda items", "pack the bags", "water the plants", "budget draft",
                           "ship the order", "renew the lease", "pick up keys", "book flights",
                           "weekly digest"};
    const char* titles[] = {"meeting_notes", "trip_plan",   "shopping_list", "ideas_dump",
                            "daily_log",     "inventory",   "draft_letter",  "recipe_box",
                            "study_plan"};

    auto apps = builtin_apps();
    fs::create_directories(dir);
    int file_index = 0;
    for (const auto& family_plan : plan) {
        const PrimitiveSpec& p = primitive(family_plan.family);
        for (int variant = 0; variant < family_plan.variants; ++variant) {
            std::map<std::string, std::string> row;
            std::uint64_t mix =
                util::split_seed(seed, p.family + "#" + std::to_string(variant));
            row["name"] = names[mix % 9];
            row["number"] = "555-01" + std::to_string(10 + (mix % 80));
            row["text"] = words[(mix >> 8) % 9];
            row["file_name"] = std::string(titles[(mix >> 16) % 9]) + "_" + std::to_string(variant);
            row["event_title"] = std::string(words[(mix >> 24) % 9]) + " " + std::to_string(variant);
            row["expense_desc"] = std::string(titles[(mix >> 32) % 9]);
            row["amount"] = std::to_string(5 + (mix % 90));
            // Drawing names must be identifiers-ish but are free strings.
            row["drawing_name"] = std::string(titles[(mix >> 40) % 9]) + "_sketch" +
                                  std::to_string(variant);

            env::TaskTemplate templ = template_from_primitives(p.family, {p.family});
            auto tasks = env::generate_composite_tasks({templ}, {row}, seed);
            env::TaskSpec task = tasks.front();
            task.task_id = "corpus_" + std::to_string(file_index) + "_" + p.family;

            std::vector<std::string> steps;
            std::vector<std::pair<std::string, std::string>> bindings(row.begin(), row.end());
            for (const auto& templ_step : p.body)
                steps.push_back(util::substitute_placeholders(templ_step, bindings));

            env::GuiEnv environment(apps);
            auto pairs = run_scripted(environment, task, steps,
                                      util::split_seed(seed, task.task_id));
            auto outcome = environment.verify(task);
            if (!outcome.success)
                throw std::logic_error("corpus trajectory failed verification: " + task.task_id);

            json record{{"format_version", 1},
                        {"goal", task.instruction},
                        {"source", "offline_corpus"},
                        {"steps", json::array()}};
            for (const auto& [obs, action] : pairs)
                record["steps"].push_back(
                    {{"observation", obs.to_json()}, {"action", action.to_json()}});
            char name[64];
            std::snprintf(name, sizeof(name), "t%03d_%s.json", file_index, p.family.c_str());
            write_json(fs::path(dir) / name, record);
            ++file_index;
        }
    }
}

void write_all(const std::string& root, std::uint64_t seed) {
    fs::path base(root);
    write_bench_suite((base / "bench").string());
    write_exploration_suite((base / "explore").string());
    write_ablation_suite((base / "ablation").string());
    write_adversarial_suite((base / "adversarial").string());
    write_mock_script((base / "mock" / "solver.json").string());
    write_corpus((base / "corpus").string(), seed);
}

}  // namespace mirage::fixtures
