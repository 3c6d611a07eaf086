#include "imrdmd/layout.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

namespace imrdmd {
namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

[[noreturn]] void fail(std::size_t pos, const std::string& token, const std::string& what) {
    throw Error("layout token " + std::to_string(pos + 1) + " '" + token + "': " + what);
}

int parse_alignment(const std::string& token, std::size_t pos) {
    static const std::regex number(R"(^[+-]?\d+$)");
    if (!std::regex_match(token, number)) fail(pos, token, "expected an alignment code");
    const int v = std::stoi(token);
    if (v != kRightToLeft && v != kLeftToRight && v != kBottomToTop) {
        fail(pos, token, "illegal alignment code (expected -1, 1 or 2)");
    }
    return v;
}

TierRange make_range(const std::string& lo, const std::string& hi, const std::string& token, std::size_t pos) {
    TierRange r;
    r.lo = std::stoi(lo);
    r.hi = hi.empty() ? r.lo : std::stoi(hi);
    if (r.hi < r.lo) fail(pos, token, "reversed range");
    return r;
}

TierRange parse_tier(const std::string& token, std::size_t pos, const std::vector<std::string>& names) {
    static const std::regex shape(R"(^([A-Za-z]+):(\d+)(?:-(\d+))?$)");
    std::smatch m;
    if (!std::regex_match(token, m, shape)) fail(pos, token, "unknown token shape");
    const std::string name = lower(m[1].str());
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        fail(pos, token, "expected tier '" + names.front() + ":'");
    }
    return make_range(m[2].str(), m[3].str(), token, pos);
}

std::string range_text(const TierRange& r) {
    return r.lo == r.hi ? std::to_string(r.lo) : std::to_string(r.lo) + "-" + std::to_string(r.hi);
}

int place(int index, int count, bool mirrored) { return mirrored ? count - 1 - index : index; }

} // namespace

std::string NodeAddress::id() const {
    return "r" + std::to_string(row) + "-" + std::to_string(rack) + "c" + std::to_string(cabinet) + "s" +
           std::to_string(slot) + "b" + std::to_string(blade) + "n" + std::to_string(node);
}

LayoutSpec parse_layout(std::string_view spec) {
    std::vector<std::string> tokens;
    {
        std::istringstream in{std::string(spec)};
        std::string t;
        while (in >> t) tokens.push_back(t);
    }
    if (tokens.empty()) throw Error("layout string is empty");
    if (tokens.size() != 11) {
        throw Error("layout string needs 11 tokens (name, 2 rack codes, rows, then code+tier for "
                    "cabinets, slots and blades, then nodes), got " + std::to_string(tokens.size()));
    }

    LayoutSpec out;
    out.system_name = tokens[0];
    out.row_alignment = parse_alignment(tokens[1], 1);
    out.column_alignment = parse_alignment(tokens[2], 2);

    static const std::regex rows(R"(^(?:[Rr]ows?)(\d+)(?:-(\d+))?:(\d+)(?:-(\d+))?$)");
    std::smatch m;
    if (!std::regex_match(tokens[3], m, rows)) fail(3, tokens[3], "unknown token shape");
    out.rows = make_range(m[1].str(), m[2].str(), tokens[3], 3);
    out.racks = make_range(m[3].str(), m[4].str(), tokens[3], 3);

    out.cabinet_alignment = parse_alignment(tokens[4], 4);
    out.cabinets = parse_tier(tokens[5], 5, {"c", "cab", "cabinet", "cabinets", "cage", "cages"});
    out.slot_alignment = parse_alignment(tokens[6], 6);
    out.slots = parse_tier(tokens[7], 7, {"s", "slot", "slots"});
    out.blade_alignment = parse_alignment(tokens[8], 8);
    out.blades = parse_tier(tokens[9], 9, {"b", "blade", "blades"});
    out.nodes = parse_tier(tokens[10], 10, {"n", "node", "nodes"});
    return out;
}

std::string render_layout_string(const LayoutSpec& s) {
    std::ostringstream out;
    out << s.system_name << ' ' << s.row_alignment << ' ' << s.column_alignment << " row"
        << range_text(s.rows) << ':' << range_text(s.racks) << ' ' << s.cabinet_alignment << " c:"
        << range_text(s.cabinets) << ' ' << s.slot_alignment << " s:" << range_text(s.slots) << ' '
        << s.blade_alignment << " b:" << range_text(s.blades) << " n:" << range_text(s.nodes);
    return out.str();
}

GridSize grid_size(const LayoutSpec& s) {
    const int rack_w = s.slots.size() * s.blades.size();
    const int rack_h = s.cabinets.size() * s.nodes.size();
    return {s.racks.size() * rack_w + (s.racks.size() - 1), s.rows.size() * rack_h + (s.rows.size() - 1)};
}

std::vector<PlacedNode> enumerate_nodes(const LayoutSpec& s) {
    const bool racks_mirrored = s.row_alignment == kRightToLeft || s.column_alignment == kRightToLeft;
    const bool rows_mirrored = s.row_alignment == kBottomToTop || s.column_alignment == kBottomToTop;
    const bool cabinets_mirrored = s.cabinet_alignment == kBottomToTop;
    const bool slots_mirrored = s.slot_alignment == kRightToLeft;
    const bool blades_mirrored = s.blade_alignment == kRightToLeft;

    const int nodes_h = s.nodes.size();
    const int blade_w = 1;
    const int slot_w = s.blades.size() * blade_w;
    const int rack_w = s.slots.size() * slot_w;
    const int rack_h = s.cabinets.size() * nodes_h;

    std::vector<PlacedNode> out;
    out.reserve(static_cast<std::size_t>(s.node_count()));
    for (int row = s.rows.lo; row <= s.rows.hi; ++row) {
        const int y_row = place(row - s.rows.lo, s.rows.size(), rows_mirrored) * (rack_h + 1);
        for (int rack = s.racks.lo; rack <= s.racks.hi; ++rack) {
            const int x_rack = place(rack - s.racks.lo, s.racks.size(), racks_mirrored) * (rack_w + 1);
            for (int cab = s.cabinets.lo; cab <= s.cabinets.hi; ++cab) {
                const int y_cab = place(cab - s.cabinets.lo, s.cabinets.size(), cabinets_mirrored) * nodes_h;
                for (int slot = s.slots.lo; slot <= s.slots.hi; ++slot) {
                    const int x_slot = place(slot - s.slots.lo, s.slots.size(), slots_mirrored) * slot_w;
                    for (int blade = s.blades.lo; blade <= s.blades.hi; ++blade) {
                        const int x_blade =
                            place(blade - s.blades.lo, s.blades.size(), blades_mirrored) * blade_w;
                        for (int node = s.nodes.lo; node <= s.nodes.hi; ++node) {
                            PlacedNode p;
                            p.address = NodeAddress{row, rack, cab, slot, blade, node};
                            p.id = p.address.id();
                            p.x = x_rack + x_slot + x_blade;
                            p.y = y_row + y_cab + (node - s.nodes.lo);
                            out.push_back(std::move(p));
                        }
                    }
                }
            }
        }
    }
    return out;
}

NodeAddress parse_node_id(std::string_view id) {
    static const std::regex grammar(R"(^r(\d+)-(\d+)c(\d+)s(\d+)b(\d+)n(\d+)$)");
    std::string text(id);
    std::smatch m;
    if (!std::regex_match(text, m, grammar)) throw Error("malformed node id '" + text + "'");
    try {
        return NodeAddress{std::stoi(m[1].str()), std::stoi(m[2].str()), std::stoi(m[3].str()),
                           std::stoi(m[4].str()), std::stoi(m[5].str()), std::stoi(m[6].str())};
    } catch (const std::out_of_range&) {
        throw Error("node id '" + text + "' has an index out of range");
    }
}

NodeAddress parse_node_id(std::string_view id, const LayoutSpec& s) {
    const NodeAddress a = parse_node_id(id);
    auto check = [&](const TierRange& r, int v, const char* tier) {
        if (!r.contains(v)) {
            throw Error("node id '" + std::string(id) + "': " + tier + " " + std::to_string(v) +
                        " outside " + range_text(r));
        }
    };
    check(s.rows, a.row, "row");
    check(s.racks, a.rack, "rack");
    check(s.cabinets, a.cabinet, "cabinet");
    check(s.slots, a.slot, "slot");
    check(s.blades, a.blade, "blade");
    check(s.nodes, a.node, "node");
    return a;
}

} // namespace imrdmd
