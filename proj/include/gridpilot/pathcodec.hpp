#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "gridworld.hpp"

namespace gridpilot {

enum class MovePrimitive { Forward, TurnLeft, TurnRight };

inline const char* primitive_name(MovePrimitive p) noexcept {
    switch (p) {
    case MovePrimitive::Forward: return "FORWARD";
    case MovePrimitive::TurnLeft: return "TURN_LEFT";
    case MovePrimitive::TurnRight: return "TURN_RIGHT";
    }
    return "?";
}

// {"array":["1","2"]}: one key, digits as quoted single-character strings.
inline std::string encode_wire(const PathPlan& plan) {
    std::string out = R"({"array":[)";
    for (std::size_t i = 0; i < plan.size(); ++i) {
        if (i) out += ',';
        out += '"';
        out += static_cast<char>('0' + code(plan[i]));
        out += '"';
    }
    out += "]}";
    return out;
}

inline PathPlan decode_wire(std::string_view bytes) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("malformed", e.what());
    }
    if (!doc.is_object() || doc.size() != 1 || !doc.contains("array"))
        throw Error("schema", R"(expected an object with the single key "array")");
    const auto& arr = doc["array"];
    if (!arr.is_array()) throw Error("schema", R"("array" must be a JSON array)");
    if (arr.empty()) throw Error("empty-plan", "the plan array is empty");

    std::vector<Action> dirs;
    dirs.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& item = arr[i];
        if (!item.is_string()) throw Error("invalid-direction", "entry " + std::to_string(i) + " is not a string");
        const auto& s = item.get_ref<const std::string&>();
        if (s.size() != 1 || s[0] < '0' || s[0] > '3')
            throw Error("invalid-direction", "entry " + std::to_string(i) + " is \"" + s + "\"");
        dirs.push_back(static_cast<Action>(s[0] - '0'));
    }
    return PathPlan(std::move(dirs));
}

// Decodes a plan into motion primitives, starting from `initial_heading`.
// Each consecutive pair (prev, next) of [initial_heading, plan...] yields
// d = prev − next:
//   0        -> FORWARD
//   −1 or 3  -> TURN_RIGHT, FORWARD
//   1 or −3  -> TURN_LEFT, FORWARD
//   ±2       -> TURN_LEFT, TURN_LEFT, FORWARD
inline std::vector<MovePrimitive> decode_moves(const PathPlan& plan, Action initial_heading) {
    std::vector<MovePrimitive> out;
    out.reserve(plan.size() * 2);
    int prev = code(initial_heading);
    for (Action a : plan) {
        const int next = code(a);
        const int d = prev - next;
        if (d == 0) {
            out.push_back(MovePrimitive::Forward);
        } else if (d == -1 || d == 3) {
            out.push_back(MovePrimitive::TurnRight);
            out.push_back(MovePrimitive::Forward);
        } else if (d == 1 || d == -3) {
            out.push_back(MovePrimitive::TurnLeft);
            out.push_back(MovePrimitive::Forward);
        } else {
            out.push_back(MovePrimitive::TurnLeft);
            out.push_back(MovePrimitive::TurnLeft);
            out.push_back(MovePrimitive::Forward);
        }
        prev = next;
    }
    return out;
}

// Heading codes are cyclic in LEFT -> UP -> RIGHT -> DOWN order, so a right
// turn adds one and a left turn subtracts one (mod 4).
constexpr Action turned(Action heading, MovePrimitive p) noexcept {
    switch (p) {
    case MovePrimitive::TurnRight: return static_cast<Action>((code(heading) + 1) % 4);
    case MovePrimitive::TurnLeft: return static_cast<Action>((code(heading) + 3) % 4);
    case MovePrimitive::Forward: break;
    }
    return heading;
}

inline Action fold_heading(Action initial_heading, std::span<const MovePrimitive> moves) {
    Action h = initial_heading;
    for (auto p : moves) h = turned(h, p);
    return h;
}

inline Action simulate_headings(const PathPlan& plan, Action initial_heading) {
    return fold_heading(initial_heading, decode_moves(plan, initial_heading));
}

// Cells visited when the primitives are replayed on the grid: FORWARD moves
// one cell along the current heading. No bounds or obstacle checks.
inline std::vector<Cell> fold_positions(Cell start, Action initial_heading, std::span<const MovePrimitive> moves) {
    std::vector<Cell> cells{start};
    Action h = initial_heading;
    for (auto p : moves) {
        if (p == MovePrimitive::Forward) cells.push_back(moved(cells.back(), h));
        else h = turned(h, p);
    }
    return cells;
}

}  // namespace gridpilot
