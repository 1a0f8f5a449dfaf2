#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "anasizer/run_io.hpp"

using namespace anasizer;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("anasizer_run_io_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST(RunDir, LayoutAndUniqueNames) {
    const fs::path base = fresh_dir("layout");
    const fs::path a = create_run_dir(base, "train");
    const fs::path b = create_run_dir(base, "train");
    EXPECT_NE(a, b);
    EXPECT_TRUE(fs::is_directory(a / "reports"));
    EXPECT_TRUE(fs::is_directory(b / "reports"));
    EXPECT_NE(a.filename().string().find("-train"), std::string::npos);
}

TEST(Manifest, RoundTrip) {
    const fs::path dir = create_run_dir(fresh_dir("manifest"), "fom");
    RunManifest m;
    m.command = "fom";
    m.config = {{"benchmark", "rfpa"}, {"budget", 6000}};
    m.seed = 42;
    m.benchmark = "rfpa";
    m.started = utc_timestamp(false);
    m.outputs = {"fom_curve.csv"};
    m.wall_seconds = 1.5;
    m.status = "ok";
    write_manifest(dir, m);
    const RunManifest back = read_manifest(dir);
    EXPECT_EQ(to_json(back), to_json(m));
    EXPECT_EQ(to_json(back).at("code_version").get<std::string>(), std::string(code_version()));
}

TEST(EmitMetrics, HeaderAndOneRowPerPoint) {
    const fs::path p = fresh_dir("emit") / "curve.csv";
    emit_metrics({"episode", "mean_fom", "best_fom"}, {{1, 2.5, 2.75}, {2, 2.625, 3}}, p);
    EXPECT_EQ(slurp(p), "episode,mean_fom,best_fom\n1,2.5,2.75\n2,2.625,3\n");
}

TEST(EmitMetrics, IdenticalInputGivesIdenticalBytes) {
    const fs::path d = fresh_dir("bytes");
    const std::vector<std::vector<double>> rows{{1, 0.1 + 0.2, 1.0 / 3.0}, {2, 1e-17, 123456789.125}};
    emit_metrics({"a", "b", "c"}, rows, d / "x.csv");
    emit_metrics({"a", "b", "c"}, rows, d / "y.csv");
    EXPECT_EQ(slurp(d / "x.csv"), slurp(d / "y.csv"));
    // Full precision: values parse back exactly.
    std::istringstream in(slurp(d / "x.csv"));
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    EXPECT_EQ(std::stod(line.substr(line.find(',') + 1)), 0.1 + 0.2);
}

TEST(EmitMetrics, Errors) {
    const fs::path d = fresh_dir("errors");
    EXPECT_ANY_THROW(emit_metrics({"a", "b"}, {}, d / "empty.csv"));
    EXPECT_ANY_THROW(emit_metrics({"a", "b"}, {{1.0}}, d / "ragged.csv"));
    EXPECT_THROW(emit_metrics({"a"}, {{1.0}}, "/nonexistent-dir/x.csv"), std::runtime_error);
    EXPECT_THROW(write_text("/nonexistent-dir/x.txt", "x"), std::runtime_error);
}
