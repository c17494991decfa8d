#include "gesdispatch/scenario_io.hpp"
#include "gesdispatch/fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ges;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("gesdispatch_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// Every file of two scenario directories, compared byte for byte.
void expect_same_tree(const fs::path& a, const fs::path& b) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    std::size_t count_b = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(b)) ++count_b;
    EXPECT_EQ(names.size(), count_b);
    for (const auto& n : names) EXPECT_EQ(slurp(a / n), slurp(b / n)) << n;
}

} // namespace

TEST(FormatNumber, RoundTripsExactly) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) EXPECT_EQ(parse_double(format_number(v), "x"), v);
    EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(parse_double("-inf", "x"), -std::numeric_limits<double>::infinity());
    try {
        parse_double("1.5kW", "units.csv:3");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ParseError);
        EXPECT_NE(std::string(e.what()).find("units.csv:3"), std::string::npos);
    }
}

TEST(Csv, QuotedCellsRoundTrip) {
    const fs::path dir = scratch("quoted");
    const std::vector<std::vector<std::string>> rows = {
        {"balance[3]", "1.5", "plain"},
        {"soc_hi[bes_01,7]", "-0.25", "say \"hi\", twice"},
    };
    write_csv(dir / "t.csv", {"row", "value", "note"}, rows);
    const std::string text = slurp(dir / "t.csv");
    EXPECT_NE(text.find("\"soc_hi[bes_01,7]\""), std::string::npos);
    EXPECT_NE(text.find("\"say \"\"hi\"\", twice\""), std::string::npos);
    const CsvTable t = read_csv(dir / "t.csv");
    EXPECT_EQ(t.header, (std::vector<std::string>{"row", "value", "note"}));
    EXPECT_EQ(t.rows, rows);
    EXPECT_EQ(t.cell(1, "note"), "say \"hi\", twice");
    EXPECT_EQ(t.cell(0, "missing"), "");
    EXPECT_THROW(write_csv(dir / "bad.csv", {"a"}, {{"two\nlines"}}), Error);
}

TEST(Csv, UnquotedCellsAreTrimmed) {
    const fs::path dir = scratch("trim");
    write_file(dir / "t.csv", "a, b\n 1 ,\" 2 \"\n\n3,4\n");
    const CsvTable t = read_csv(dir / "t.csv");
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.cell(0, "a"), "1");
    EXPECT_EQ(t.cell(0, "b"), " 2 ");
    EXPECT_EQ(t.lines, (std::vector<std::size_t>{2, 4}));
}

TEST(Csv, RaggedRowNamesFileAndLine) {
    const fs::path dir = scratch("ragged");
    write_file(dir / "units.csv", "unit_id,kind\nbes_01,BES\ntcl_01\n");
    try {
        read_csv(dir / "units.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ParseError);
        EXPECT_NE(std::string(e.what()).find("units.csv:3"), std::string::npos) << e.what();
    }
    write_file(dir / "empty.csv", "\n\n");
    EXPECT_THROW(read_csv(dir / "empty.csv"), Error);
    EXPECT_THROW(read_csv(dir / "absent.csv"), Error);
}

TEST(Scenario, SaveLoadSaveIsStable) {
    const fs::path a = scratch("stable_a"), b = scratch("stable_b");
    const ScenarioBundle scn = smoke_fleet();
    save_scenario(scn, a);
    const ScenarioBundle back = load_scenario(a);
    save_scenario(back, b);
    expect_same_tree(a, b);

    ASSERT_EQ(back.units.size(), scn.units.size());
    for (std::size_t i = 0; i < scn.units.size(); ++i) {
        EXPECT_EQ(back.units[i].device.unit_id, scn.units[i].device.unit_id);
        EXPECT_EQ(back.units[i].price_c, scn.units[i].price_c);
        EXPECT_EQ(back.units[i].price_d, scn.units[i].price_d);
        EXPECT_EQ(back.units[i].device.on_prob, scn.units[i].device.on_prob);
    }
    EXPECT_EQ(back.horizon, scn.horizon);
    EXPECT_EQ(back.tou_price, scn.tou_price);
    EXPECT_EQ(back.gamma, scn.gamma);
    EXPECT_EQ(back.grid_cap, scn.grid_cap);
    EXPECT_EQ(back.reserve.upper, scn.reserve.upper);
    ASSERT_EQ(back.load.size(), scn.load.size());
    for (std::size_t t = 0; t < scn.load.size(); ++t) EXPECT_EQ(mean(back.load[t]), mean(scn.load[t]));
}

TEST(Scenario, BundledFixturesMatchGenerators) {
    for (const auto& [name, scn] : {std::pair{std::string("smoke3"), smoke_fleet()},
                                    std::pair{std::string("synthetic_100tcl"), synthetic_100tcl()}}) {
        const fs::path bundled = fs::path(GES_FIXTURE_DIR) / name;
        const ScenarioBundle loaded = load_scenario(bundled);
        EXPECT_TRUE(validation_issues(loaded).empty()) << name;
        const fs::path fresh = scratch("fresh_" + name);
        save_scenario(scn, fresh);
        expect_same_tree(bundled, fresh);
    }
}

TEST(Scenario, MissingDirectory) {
    try {
        load_scenario(fs::temp_directory_path() / "gesdispatch_io_does_not_exist");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    }
}

TEST(Scenario, BadNumberNamesCell) {
    const fs::path dir = scratch("badnum");
    save_scenario(smoke_fleet(), dir);
    CsvTable units = read_csv(dir / "units.csv");
    const auto col = units.column("capacity");
    ASSERT_GE(col, 0);
    units.rows[0][static_cast<std::size_t>(col)] = "ten";
    write_csv(dir / "units.csv", units.header, units.rows);
    try {
        load_scenario(dir);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ParseError);
        EXPECT_NE(std::string(e.what()).find("units.csv:2"), std::string::npos) << e.what();
    }
}

TEST(Scenario, PriceViolationNamesUnitAndStep) {
    const fs::path dir = scratch("price");
    ScenarioBundle scn = smoke_fleet();
    const std::string id = scn.units[0].device.unit_id;
    scn.units[0].price_c.assign(scn.horizon, scn.units[0].price_c[0]);
    scn.units[0].price_d.assign(scn.horizon, scn.units[0].price_d[0]);
    scn.units[0].price_c[5] = scn.units[0].price_d[5] + 0.1;
    save_scenario(scn, dir);
    try {
        load_scenario(dir);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ValidationError);
        bool named = false;
        for (const auto& d : e.details()) named = named || d.find("unit " + id + " step 5") != std::string::npos;
        EXPECT_TRUE(named);
    }
    EXPECT_NO_THROW(read_scenario(dir));
}

TEST(Scenario, EmptyFleetIsRejected) {
    ScenarioBundle scn = smoke_fleet();
    scn.units.clear();
    const auto issues = validation_issues(scn);
    ASSERT_FALSE(issues.empty());
    EXPECT_NE(issues[0].find("EmptyFleet"), std::string::npos);
    EXPECT_THROW(require_valid(scn), Error);
}
