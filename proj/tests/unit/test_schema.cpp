#include <algorithm>
#include <set>

#include "doctest.h"
#include "flowpix/dataset.hpp"
#include "flowpix/error.hpp"
#include "flowpix/schema.hpp"
#include "flowpix/util.hpp"

using namespace flowpix;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected flowpix::Error");
    return ErrorKind::io;
}

LabeledTable csv(std::string_view text) { return parse_csv(text, "mini.csv", LoadOptions{}); }

}  // namespace

TEST_CASE("infer_schema computes ranges and vocabularies from training rows") {
    const auto table = synth_fixture(4, 30, 3);
    const auto schema = infer_schema(table, unsw_schema_options());
    CHECK(schema.features.size() == 9);
    CHECK(schema.numeric_count() == 6);
    CHECK(schema.categorical_count() == 3);
    CHECK(schema.label_column == "attack_cat");
    CHECK(schema.class_names == std::vector<std::string>{"Normal", "Analysis", "Backdoor"});

    // Independent recomputation of every range and vocabulary.
    const auto& names = table.header->names();
    for (const auto& f : schema.features) {
        const auto col = static_cast<std::size_t>(std::find(names.begin(), names.end(), f.name) - names.begin());
        if (f.is_categorical()) {
            std::set<std::string> seen;
            for (const auto& r : table.records) seen.insert(r.values[col]);
            CHECK(f.vocab == std::vector<std::string>(seen.begin(), seen.end()));
        } else {
            double lo = 1e300, hi = -1e300;
            for (const auto& r : table.records) {
                lo = std::min(lo, *parse_double(r.values[col]));
                hi = std::max(hi, *parse_double(r.values[col]));
            }
            CHECK(f.min == lo);
            CHECK(f.max == hi);
        }
    }
    CHECK_FALSE(schema.find("id"));
    CHECK_FALSE(schema.find("label"));
}

TEST_CASE("vocabularies sort byte-wise") {
    const auto t = csv("id,proto,service,state,x,attack_cat,label\n"
                       "1,udp,http,INT,1,Normal,0\n"
                       "2,UDP,-,CON,2,Normal,0\n"
                       "3,a/n,dns,con,3,Exploits,1\n");
    const auto schema = infer_schema(t, unsw_schema_options());
    CHECK(schema.features[*schema.find("proto")].vocab == std::vector<std::string>{"UDP", "a/n", "udp"});
    CHECK(schema.features[*schema.find("service")].vocab == std::vector<std::string>{"-", "dns", "http"});
    CHECK(schema.features[*schema.find("state")].vocab == std::vector<std::string>{"CON", "INT", "con"});
}

TEST_CASE("infer_schema errors") {
    const auto empty = csv("id,proto,service,state,x,attack_cat,label\n");
    CHECK(kind_of([&] { infer_schema(empty, unsw_schema_options()); }) == ErrorKind::schema_empty);

    const auto bad = csv("id,proto,service,state,x,attack_cat,label\n"
                         "1,tcp,-,FIN,1.5,Normal,0\n"
                         "2,tcp,-,FIN,oops,Normal,0\n");
    try {
        infer_schema(bad, unsw_schema_options());
        FAIL("expected malformed_cell");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::malformed_cell);
        const std::string msg = e.what();
        CHECK(msg.find("mini-1") != std::string::npos);
        CHECK(msg.find("'x'") != std::string::npos);
    }

    const auto no_state = csv("id,proto,service,x,attack_cat,label\n1,tcp,-,1,Normal,0\n");
    CHECK(kind_of([&] { infer_schema(no_state, unsw_schema_options()); }) == ErrorKind::invalid_argument);
}

TEST_CASE("schema serialization round-trips and digests are content-based") {
    const auto schema = infer_schema(synth_fixture(1, 20, 4), unsw_schema_options());
    const auto text = serialize_schema(schema);
    const auto back = parse_schema(text);
    CHECK(back == schema);
    CHECK(back.digest() == schema.digest());
    CHECK(serialize_schema(back) == text);

    auto other = schema;
    other.features[0].max += 1.0;
    CHECK(other.digest() != schema.digest());
    CHECK_THROWS_AS(parse_schema("not a schema"), Error);
}

TEST_CASE("expand_columns orders numerics then service, proto, state") {
    const auto schema = infer_schema(synth_fixture(2, 10, 2), unsw_schema_options());
    const auto cols = expand_columns(schema);
    REQUIRE(cols.size() == 6 + 4 + 5 + 3);
    for (int i = 0; i < 6; ++i) CHECK(cols[i].name == "f" + std::to_string(i));
    CHECK(cols[6].name == "service_-");
    CHECK(cols[9].name == "service_http");
    CHECK(cols[10].name == "proto_icmp");
    CHECK(cols[12].name == "proto_tcp");
    CHECK(cols[15].name == "state_CON");
    CHECK(cols[12].source == "proto");
    CHECK(cols[12].category == "tcp");
    CHECK_FALSE(cols[0].category);
}

TEST_CASE("UNSW-shaped layout anchors service_http at row 3, column 13") {
    // The fixture carries the release column order and every service value,
    // so this mirrors the layout produced from the real training file.
    const auto table = synth_fixture(0, 40, 10, FixtureShape::unsw());
    const auto schema = infer_schema(table, unsw_schema_options());
    CHECK(schema.numeric_count() == 39);
    const auto layout = build_layout(schema);
    CHECK(layout.content({3, 8}) == "service_-");
    CHECK(layout.content({3, 13}) == "service_http");
    CHECK(layout.content({1, 1}) == "dur");
    CHECK(layout.cell_of("service_http") == cell_index({3, 13}));
    CHECK(layout.content({16, 16}) == "PAD");
}

TEST_CASE("build_layout fills row-major and pads the suffix") {
    const auto schema = infer_schema(synth_fixture(3, 10, 2), unsw_schema_options());
    const auto cols = expand_columns(schema);
    const auto layout = build_layout(schema);
    for (std::size_t i = 0; i < kCanvasCells; ++i) {
        if (i < cols.size()) {
            CHECK(layout.cells()[i] == cols[i].name);
        } else {
            CHECK(layout.is_pad(i));
        }
    }
    CHECK(layout.pad_count() == kCanvasCells - cols.size());
    CHECK(layout.schema_digest() == schema.digest());
}

TEST_CASE("layout overflow past 256 columns") {
    std::vector<EncodedColumn> cols;
    for (int i = 0; i < 256; ++i) cols.push_back({"c" + std::to_string(i), "c" + std::to_string(i), std::nullopt});
    CHECK(build_layout(cols, "d").pad_count() == 0);
    cols.push_back({"c256", "c256", std::nullopt});
    CHECK(kind_of([&] { build_layout(cols, "d"); }) == ErrorKind::layout_overflow);
}

TEST_CASE("manifest round-trip, validation and staleness") {
    const auto schema = infer_schema(synth_fixture(5, 10, 3), unsw_schema_options());
    const auto layout = build_layout(schema);
    const auto text = serialize_manifest(layout);
    CHECK(text.starts_with("flowpix-layout v1 " + schema.digest() + "\n"));
    CHECK(parse_manifest(text) == layout);
    CHECK_NOTHROW(check_manifest_matches(layout, schema));

    // Duplicate cell.
    auto dup = text;
    dup.replace(dup.find("\n1,2,"), 5, "\n1,1,");
    CHECK(kind_of([&] { parse_manifest(dup); }) == ErrorKind::format);
    // Missing cell.
    auto lines = split(text, '\n');
    lines.erase(lines.begin() + 5);
    CHECK(kind_of([&] { parse_manifest(join(lines, "\n")); }) == ErrorKind::format);

    auto changed = schema;
    changed.features[0].min -= 1.0;
    CHECK(kind_of([&] { check_manifest_matches(layout, changed); }) == ErrorKind::stale_manifest);
}

TEST_CASE("permute_layout is a seeded bijection") {
    const auto schema = infer_schema(synth_fixture(6, 10, 2), unsw_schema_options());
    const auto layout = build_layout(schema);
    const auto a = permute_layout(layout, 7);
    CHECK(a == permute_layout(layout, 7));
    CHECK_FALSE(a == layout);
    CHECK_FALSE(a == permute_layout(layout, 8));
    auto x = std::vector<std::string>(a.cells().begin(), a.cells().end());
    auto y = std::vector<std::string>(layout.cells().begin(), layout.cells().end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    CHECK(x == y);
    CHECK_NOTHROW(check_manifest_matches(a, schema));
}
