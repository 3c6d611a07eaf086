#pragma once

#include "imrdmd/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace imrdmd {

/// Inclusive index range of one hierarchy tier.
struct TierRange {
    int lo = 0;
    int hi = 0;
    int size() const { return hi - lo + 1; }
    bool contains(int v) const { return v >= lo && v <= hi; }
    bool operator==(const TierRange&) const = default;
};

/// Alignment codes: -1 right-to-left, 1 left-to-right, 2 bottom-to-top.
/// Top-to-bottom is the vertical default.
inline constexpr int kRightToLeft = -1;
inline constexpr int kLeftToRight = 1;
inline constexpr int kBottomToTop = 2;

/// Parsed rack layout string, e.g. "xc40 1 2 row0-1:0-10 2 c:0-7 1 s:0-7 1 b:0 n:0".
///
/// Racks run horizontally inside a row and rows stack vertically; the two
/// rack-tier codes are read as direction flags (-1 mirrors x, 2 mirrors y).
/// Cabinets stack vertically in a rack, slots and blades run horizontally,
/// nodes stack vertically inside a blade.
struct LayoutSpec {
    std::string system_name;
    int row_alignment = kLeftToRight;
    int column_alignment = kLeftToRight;
    TierRange rows;
    TierRange racks;
    int cabinet_alignment = kLeftToRight;
    TierRange cabinets;
    int slot_alignment = kLeftToRight;
    TierRange slots;
    int blade_alignment = kLeftToRight;
    TierRange blades;
    TierRange nodes;

    Index node_count() const {
        return static_cast<Index>(rows.size()) * racks.size() * cabinets.size() * slots.size() *
               blades.size() * nodes.size();
    }
    bool operator==(const LayoutSpec&) const = default;
};

struct NodeAddress {
    int row = 0;
    int rack = 0;
    int cabinet = 0;
    int slot = 0;
    int blade = 0;
    int node = 0;

    /// Canonical id "r<row>-<rack>c<cabinet>s<slot>b<blade>n<node>".
    std::string id() const;
    bool operator==(const NodeAddress&) const = default;
};

struct PlacedNode {
    NodeAddress address;
    std::string id;
    int x = 0; ///< grid column, 0 at the left
    int y = 0; ///< grid row, 0 at the top
};

struct GridSize {
    int width = 0;
    int height = 0;
};

LayoutSpec parse_layout(std::string_view spec);

/// Canonical string form; parse_layout(render_layout_string(s)) == s.
std::string render_layout_string(const LayoutSpec& spec);

/// Every leaf node in (row, rack, cabinet, slot, blade, node) order with its grid cell.
std::vector<PlacedNode> enumerate_nodes(const LayoutSpec& spec);

GridSize grid_size(const LayoutSpec& spec);

NodeAddress parse_node_id(std::string_view id);

/// Parses and checks every index against the layout ranges.
NodeAddress parse_node_id(std::string_view id, const LayoutSpec& spec);

} // namespace imrdmd
