#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hsks/io.hpp"

using namespace hsks;

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / ("hsks_io_" + name);
    std::filesystem::remove_all(d);
    return d;
}

std::string config_error(const std::string& text) {
    try {
        FlatConfig::parse(text, "cfg");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(FlatConfig, DottedKeyInsideSectionIsPrefixed) {
    EXPECT_NE(config_error("[grid]\nn_r = 48\ntime.dt = 1e-3\n").find("cfg:3: unknown key 'grid.time.dt'"), std::string::npos);
}

TEST(FlatConfig, ParsesValues) {
    const auto c = FlatConfig::parse(
        "# header\n"
        "preset = \"fig2\"   # trailing\n"
        "time.dt = 1e-3\n"
        "\n"
        "[params]\n"
        "zeta = 2.5\n"
        "[init]\n"
        "kind = perturbed\n"
        "mode=2",
        "cfg");
    EXPECT_EQ(c.text("preset"), "fig2");
    EXPECT_DOUBLE_EQ(c.number("params.zeta", 0.0), 2.5);
    EXPECT_DOUBLE_EQ(c.number("time.dt", 0.0), 1e-3);
    EXPECT_EQ(c.text("init.kind"), "perturbed");
    EXPECT_EQ(c.integer("init.mode", -1), 2);
    EXPECT_EQ(c.integer("grid.n_r", 17), 17);
    EXPECT_FALSE(c.has("grid.n_phi"));
}

TEST(FlatConfig, DiagnosticsCarryLineNumbers) {
    EXPECT_NE(config_error("grid.n_r = 4\nbogus = 1\n").find("cfg:2: unknown key 'bogus'"), std::string::npos);
    EXPECT_NE(config_error("\n\n[params\n").find("cfg:3: unterminated section"), std::string::npos);
    EXPECT_NE(config_error("params.zeta\n").find("cfg:1: expected 'key = value'"), std::string::npos);
    EXPECT_NE(config_error("params.zeta = 1\nparams.zeta = 2\n").find("cfg:2: duplicate"), std::string::npos);
    EXPECT_NE(config_error("preset = \"fig1\n").find("unterminated string"), std::string::npos);
    EXPECT_NE(config_error("params.zeta =\n").find("missing value"), std::string::npos);
    EXPECT_NE(config_error("init.kind = a b\n").find("whitespace"), std::string::npos);

    const auto c = FlatConfig::parse("params.zeta = abc\ngrid.n_r = 3.5\n", "cfg");
    EXPECT_THROW(c.number("params.zeta", 0.0), ConfigError);
    EXPECT_THROW(c.integer("grid.n_r", 0), ConfigError);
}

TEST(FlatConfig, HashIgnoresOrderAndFormatting) {
    const auto a = FlatConfig::parse("params.zeta = 2\n[grid]\nn_r = 32\n");
    const auto b = FlatConfig::parse("# x\ngrid.n_r=32\n  params.zeta   =   \"2\"\n");
    EXPECT_EQ(a.canonical(), b.canonical());
    EXPECT_EQ(config_hash(a.canonical()), config_hash(b.canonical()));
    const auto d = FlatConfig::parse("params.zeta = 2\ngrid.n_r = 33\n");
    EXPECT_NE(config_hash(a.canonical()), config_hash(d.canonical()));
}

TEST(ConfigHash, KnownVectors) {
    // FNV-1a 64 reference values
    EXPECT_EQ(config_hash(""), "cbf29ce484222325");
    EXPECT_EQ(config_hash("a"), "af63dc4c8601ec8c");
    EXPECT_EQ(config_hash("foobar"), "85944171f73967e8");
}

TEST(SimConfigFromFile, PresetAndOverrides) {
    auto c = FlatConfig::parse("preset = fig2\ngrid.n_r = 24\ngrid.n_phi = 32\ntime.t_end = 2\n");
    const auto s = sim_config(c);
    const auto pr = fig2_preset();
    EXPECT_DOUBLE_EQ(s.params.zeta, 2.1);
    EXPECT_DOUBLE_EQ(s.params.gamma, 0.75);
    EXPECT_DOUBLE_EQ(s.params.p_h, pr.params().p_h);
    EXPECT_DOUBLE_EQ(s.radius, pr.critical_R());
    EXPECT_EQ(s.n_r, 24);
    EXPECT_EQ(s.init, InitKind::Steady);
}

TEST(SimConfigFromFile, DensityRetunesPressureAtRadius) {
    const auto s = sim_config(FlatConfig::parse("preset = fig1\ninit.radius = 0.9\n"));
    EXPECT_NEAR(steady_density(0.9, s.params), 3.0, 1e-13);
    const auto t = sim_config(FlatConfig::parse("params.zeta = 5\nparams.m0 = 2\ninit.radius = 1.5\n"));
    EXPECT_NEAR(steady_density(1.5, t.params), 2.0, 1e-13);
    EXPECT_THROW(sim_config(FlatConfig::parse("params.m0 = 2\nparams.p_h = 1\n")), ConfigError);
}

TEST(SimConfigFromFile, RejectsBadValues) {
    EXPECT_THROW(sim_config(FlatConfig::parse("preset = fig9\n")), ConfigError);
    EXPECT_THROW(sim_config(FlatConfig::parse("init.kind = spiral\n")), ConfigError);
    EXPECT_THROW(sim_config(FlatConfig::parse("grid.n_phi = 31\n")), ConfigError);
    EXPECT_THROW(sim_config(FlatConfig::parse("time.dt = -1\n")), ConfigError);
    EXPECT_THROW(sim_config(FlatConfig::parse("params.zeta = 0\n")), ConfigError);
}

TEST(Table, CsvRoundTripIsExact) {
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    Table t;
    t.header = {"a", "b", "c"};
    for (int k = 0; k < 50; ++k) t.add({u(gen), u(gen) * 1e-9, static_cast<double>(k)});
    const auto text = t.csv();
    const auto back = parse_csv(text);
    ASSERT_EQ(back.header, t.header);
    ASSERT_EQ(back.rows.size(), t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(back.rows[i][j], t.rows[i][j]);
    EXPECT_EQ(back.csv(), text);
    EXPECT_THROW(t.add({1.0}), std::invalid_argument);
}

TEST(Table, JsonColumns) {
    Table t;
    t.header = {"V", "M"};
    t.add({0.0, 1.5});
    t.add({0.1, 1.25});
    const auto j = t.json();
    EXPECT_EQ(j["V"].size(), 2u);
    EXPECT_DOUBLE_EQ(j["M"][1].get<double>(), 1.25);
}

TEST(Svg, ColormapEndpointsAndClamp) {
    EXPECT_EQ(colormap(0.0).hex(), "#440154");
    EXPECT_EQ(colormap(1.0).hex(), "#fde725");
    EXPECT_EQ(colormap(-3.0).hex(), colormap(0.0).hex());
    EXPECT_EQ(colormap(7.0).hex(), colormap(1.0).hex());
}

TEST(Svg, ShapeFieldPlotStructure) {
    const BoundaryShape shape(1.0, {0.0, 0.0, 0.05});
    PolarField f(RadialGrid(6, 1.0), 8);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 8; ++j) f.at(i, j) = i + 0.1 * j;
    const auto svg = shape_field_svg(shape, MapKind::BoundaryFitted, f, "m");
    auto count = [&](const std::string& s) {
        std::size_t n = 0;
        for (auto p = svg.find(s); p != std::string::npos; p = svg.find(s, p + 1)) ++n;
        return n;
    };
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_EQ(count("<circle"), 48u);
    EXPECT_EQ(count("<polyline"), 1u);
    EXPECT_EQ(count("<rect"), 33u);  // background + colour bar
    EXPECT_EQ(svg, shape_field_svg(shape, MapKind::BoundaryFitted, f, "m"));
}

TEST(ShapeFieldTable, RowsAndBoundaryMarker) {
    const BoundaryShape shape(2.0, {0.1}, 0.5);
    PolarField f(RadialGrid(4, 2.0), 8, 1.0);
    const auto t = shape_field_table(shape, MapKind::RadialScaling, {{"m", &f}}, std::vector<double>(16, 3.0));
    ASSERT_EQ(t.rows.size(), 32u + 16u);
    EXPECT_EQ(t.header.back(), "on_boundary");
    for (std::size_t k = 32; k < t.rows.size(); ++k) {
        const auto& r = t.rows[k];
        EXPECT_NEAR(std::hypot(r[0] - 0.5, r[1]), 2.1, 1e-12);
        EXPECT_EQ(r[3], 1.0);
    }
    EXPECT_NEAR(std::hypot(t.rows[0][0] - 0.5, t.rows[0][1]), 0.25 * 2.1 / 2.0 * 1.0, 1e-12);
}

TEST(OutputDir, ManifestListsEveryFile) {
    const auto dir = scratch_dir("manifest");
    {
        OutputDir out(dir, "steady", "0123456789abcdef");
        out.write("b.csv", "x\n1\n");
        out.write_json("a.json", {{"k", 1}});
        out.finish();
    }
    const auto m = nlohmann::json::parse(read_file(dir / "manifest.json"));
    EXPECT_EQ(m["config_hash"], "0123456789abcdef");
    EXPECT_EQ(m["toolkit_version"], kToolkitVersion);
    ASSERT_EQ(m["files"].size(), 2u);
    EXPECT_EQ(m["files"][0]["file"], "a.json");
    EXPECT_EQ(m["files"][1]["config_hash"], "0123456789abcdef");
    EXPECT_EQ(read_file(dir / "b.csv"), "x\n1\n");
    std::filesystem::remove_all(dir);
}
