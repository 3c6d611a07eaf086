#include "imrdmd/layout.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace imrdmd;

namespace {
const char* kXc40Layout = "xc40 1 2 row0-1:0-10 2 c:0-7 1 s:0-7 1 b:0 n:0";
}

TEST(Layout, Xc40StringParses) {
    const auto s = parse_layout(kXc40Layout);
    EXPECT_EQ(s.system_name, "xc40");
    EXPECT_EQ(s.row_alignment, 1);
    EXPECT_EQ(s.column_alignment, 2);
    EXPECT_EQ(s.rows, (TierRange{0, 1}));
    EXPECT_EQ(s.racks, (TierRange{0, 10}));
    EXPECT_EQ(s.cabinet_alignment, 2);
    EXPECT_EQ(s.cabinets, (TierRange{0, 7}));
    EXPECT_EQ(s.slot_alignment, 1);
    EXPECT_EQ(s.slots, (TierRange{0, 7}));
    EXPECT_EQ(s.blade_alignment, 1);
    EXPECT_EQ(s.blades, (TierRange{0, 0}));
    EXPECT_EQ(s.nodes, (TierRange{0, 0}));
    EXPECT_EQ(s.node_count(), 1408);
}

TEST(Layout, EnumerationUniqueAndComplete) {
    const auto s = parse_layout(kXc40Layout);
    const auto nodes = enumerate_nodes(s);
    // brute-force count: 2 rows * 11 racks * 8 cabinets * 8 slots * 1 blade * 1 node
    ASSERT_EQ(nodes.size(), 2u * 11 * 8 * 8);
    std::set<std::string> ids;
    std::set<std::pair<int, int>> cells;
    const auto g = grid_size(s);
    for (const auto& n : nodes) {
        ids.insert(n.id);
        cells.insert({n.x, n.y});
        EXPECT_GE(n.x, 0);
        EXPECT_GE(n.y, 0);
        EXPECT_LT(n.x, g.width);
        EXPECT_LT(n.y, g.height);
    }
    EXPECT_EQ(ids.size(), nodes.size());
    EXPECT_EQ(cells.size(), nodes.size());
}

TEST(Layout, IdRoundTrip) {
    const auto s = parse_layout(kXc40Layout);
    for (const auto& n : enumerate_nodes(s)) {
        const auto a = parse_node_id(n.id, s);
        EXPECT_EQ(a, n.address);
        EXPECT_EQ(a.id(), n.id);
    }
    EXPECT_EQ(parse_node_id("r1-10c7s7b0n0").rack, 10);
    EXPECT_THROW(parse_node_id("r2-0c0s0b0n0", s), Error);
    EXPECT_THROW(parse_node_id("node17"), Error);
}

TEST(Layout, SingletonLayout) {
    const auto s = parse_layout("sys 1 1 row0-0:0-0 1 c:0-0 1 s:0-0 1 b:0 n:0");
    const auto nodes = enumerate_nodes(s);
    ASSERT_EQ(nodes.size(), 1u);
    EXPECT_EQ(nodes[0].id, "r0-0c0s0b0n0");
    EXPECT_EQ(nodes[0].x, 0);
    EXPECT_EQ(nodes[0].y, 0);
}

TEST(Layout, IllegalAlignmentRejected) {
    EXPECT_THROW(parse_layout("sys 3 1 row0-0:0-0 1 c:0-0 1 s:0-0 1 b:0 n:0"), Error);
    EXPECT_THROW(parse_layout("sys 1 1 row0-0:0-0 0 c:0-0 1 s:0-0 1 b:0 n:0"), Error);
    EXPECT_THROW(parse_layout("sys 1 1 row0-0:0-0 1 c:0-0 -2 s:0-0 1 b:0 n:0"), Error);
}

TEST(Layout, ReversedRangesRejected) {
    EXPECT_THROW(parse_layout("sys 1 1 row1-0:0-0 1 c:0-0 1 s:0-0 1 b:0 n:0"), Error);
    EXPECT_THROW(parse_layout("sys 1 1 row0-0:5-2 1 c:0-0 1 s:0-0 1 b:0 n:0"), Error);
    EXPECT_THROW(parse_layout("sys 1 1 row0-0:0-0 1 c:7-0 1 s:0-0 1 b:0 n:0"), Error);
    EXPECT_THROW(parse_layout("sys 1 1 row0-0:0-0 1 c:0-0 1 s:0-0 1 b:0 n:3-1"), Error);
}

TEST(Layout, MalformedStrings) {
    EXPECT_THROW(parse_layout(""), Error);
    EXPECT_THROW(parse_layout("xc40 1 2 row0-1:0-10 2 c:0-7 1 s:0-7 1 b:0"), Error);
    EXPECT_THROW(parse_layout("xc40 1 2 rows:0-10 2 c:0-7 1 s:0-7 1 b:0 n:0"), Error);
    EXPECT_THROW(parse_layout("xc40 1 2 row0-1:0-10 2 q:0-7 1 s:0-7 1 b:0 n:0"), Error);
}

TEST(Layout, RenderRoundTrip) {
    for (const char* text : {kXc40Layout, "sys -1 1 row0-2:3-5 1 cab:0-1 -1 slots:0-3 2 b:0-1 n:0-3"}) {
        const auto s = parse_layout(text);
        EXPECT_EQ(parse_layout(render_layout_string(s)), s);
    }
}

TEST(Layout, AlignmentMirrors) {
    const auto ltr = enumerate_nodes(parse_layout("sys 1 1 row0-0:0-2 1 c:0-0 1 s:0-0 1 b:0 n:0"));
    const auto rtl = enumerate_nodes(parse_layout("sys -1 1 row0-0:0-2 1 c:0-0 1 s:0-0 1 b:0 n:0"));
    ASSERT_EQ(ltr.size(), 3u);
    EXPECT_LT(ltr[0].x, ltr[2].x);
    EXPECT_GT(rtl[0].x, rtl[2].x);
    const auto ttb = enumerate_nodes(parse_layout("sys 1 1 row0-0:0-0 1 c:0-3 1 s:0-0 1 b:0 n:0"));
    const auto btt = enumerate_nodes(parse_layout("sys 1 1 row0-0:0-0 2 c:0-3 1 s:0-0 1 b:0 n:0"));
    EXPECT_LT(ttb[0].y, ttb[3].y);
    EXPECT_GT(btt[0].y, btt[3].y);
}
