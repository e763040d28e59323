#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <etsync/gains.hpp>
#include <etsync/graph.hpp>
#include <etsync/reports.hpp>
#include <etsync/rng.hpp>
#include <etsync/simulator.hpp>

#include "support.hpp"

using etsync::Matrix;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

struct Fixture {
    etsync::Topology topology;
    etsync::LaplacianSpectrum spectrum;
    etsync::ControlDesign design;
    etsync::ModeSet modes;
    etsync::GainParameters gains;
    etsync::SimulationRun run;
};

Fixture make_fixture(int snapshot_stride) {
    Fixture f;
    f.topology = etsync::Topology::two_nearest_neighbour(10);
    f.spectrum = etsync::spectral_decompose(etsync::build_laplacian(f.topology));
    f.design = testsupport::demo_design();
    f.modes = etsync::build_modes(f.design, f.spectrum);
    f.gains = etsync::compute_gain_parameters(f.modes, f.design, f.spectrum, 0.9);

    etsync::SplitMix64 rng(1);
    Matrix states(10, 2);
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t d = 0; d < 2; ++d) states(i, d) = rng.next_uniform(-1.0, 1.0);

    etsync::SimulationOptions options;
    options.dt = 1e-4;
    options.t_end = 0.2;
    options.snapshot_stride = snapshot_stride;
    f.run = etsync::simulate(f.design, f.topology, f.spectrum, f.modes,
                             etsync::DwellTimeRule{f.gains.rho, f.gains.tau_star}, states,
                             options);
    return f;
}

} // namespace

TEST_CASE("trajectory table layout and lossless values", "[reports]") {
    const auto f = make_fixture(50);
    const std::string path = temp_path("etsync_trajectory.csv");
    etsync::write_trajectory_csv(path, f.run);

    const auto lines = read_lines(path);
    REQUIRE(lines.size() == f.run.snapshots() + 1);

    std::string header = "t";
    for (int i = 0; i < 10; ++i)
        for (int d = 0; d < 2; ++d) header += ",x" + std::to_string(i) + "_" + std::to_string(d);
    header += ",sync_norm,lyapunov_v,error_norm,zhat_norm";
    CHECK(lines[0] == header);

    for (std::size_t row = 1; row < lines.size(); ++row) {
        const auto fields = split_csv(lines[row]);
        REQUIRE(fields.size() == 1 + 20 + 4);
        // Every written value reparses to the exact double it came from.
        const std::size_t s = row - 1;
        CHECK(std::stod(fields[0]) == f.run.snapshot_time[s]);
        for (std::size_t c = 0; c < 20; ++c)
            CHECK(std::stod(fields[1 + c]) == f.run.snap_x[s * 20 + c]);
        const std::size_t k = s * 50;
        CHECK(std::stod(fields[21]) == f.run.traces.sync_norm[k]);
        CHECK(std::stod(fields[22]) == f.run.traces.lyapunov_v[k]);
        CHECK(std::stod(fields[23]) == f.run.traces.error_norm[k]);
        CHECK(std::stod(fields[24]) == f.run.traces.zhat_norm[k]);
    }

    std::filesystem::remove(path);
}

TEST_CASE("trajectory table requires snapshots", "[reports]") {
    const auto f = make_fixture(0);
    CHECK_THROWS_AS(etsync::write_trajectory_csv(temp_path("etsync_none.csv"), f.run),
                    etsync::config_error);
}

TEST_CASE("event table carries one row per event", "[reports]") {
    const auto f = make_fixture(0);
    const std::string path = temp_path("etsync_events.csv");
    etsync::write_events_csv(path, f.run);

    const auto lines = read_lines(path);
    REQUIRE(lines.size() == f.run.events.size() + 1);
    CHECK(lines[0] == "t,node,error_norm,threshold");

    // The first ten rows are the initial broadcasts at t = 0.
    for (int i = 0; i < 10; ++i) {
        const auto fields = split_csv(lines[1 + i]);
        REQUIRE(fields.size() == 4);
        CHECK(std::stod(fields[0]) == 0.0);
        CHECK(std::stoi(fields[1]) == i);
        CHECK(std::stod(fields[2]) == f.run.events[i].trigger_norm);
        CHECK(std::stod(fields[3]) == f.run.events[i].threshold);
    }

    std::filesystem::remove(path);
}

TEST_CASE("identical runs produce byte-identical tables", "[reports]") {
    const auto f = make_fixture(50);
    const std::string a = temp_path("etsync_rewrite_a.csv");
    const std::string b = temp_path("etsync_rewrite_b.csv");
    etsync::write_trajectory_csv(a, f.run);
    etsync::write_trajectory_csv(b, f.run);
    CHECK(slurp(a) == slurp(b));

    etsync::write_events_csv(a, f.run);
    etsync::write_events_csv(b, f.run);
    CHECK(slurp(a) == slurp(b));

    std::filesystem::remove(a);
    std::filesystem::remove(b);
}

TEST_CASE("gain report carries the full parameter set", "[reports]") {
    const auto f = make_fixture(0);
    const auto j = etsync::gains_report_json(f.spectrum, f.gains);

    CHECK(j.at("lambda2").get<double>() == f.spectrum.lambda2());
    CHECK(j.at("lambda_max").get<double>() == f.spectrum.lambda_max());
    CHECK(j.at("alpha").get<double>() == f.gains.alpha);
    CHECK(j.at("delta").get<double>() == 0.9);
    CHECK(j.at("rho").get<double>() == f.gains.rho);
    CHECK(j.at("rho1").get<double>() == f.gains.rho1);
    CHECK(j.at("a").get<double>() == f.gains.a);
    CHECK(j.at("b").get<double>() == f.gains.b);
    CHECK(j.at("tau_star").get<double>() == f.gains.tau_star);
    CHECK(j.at("det_defaults").at("c0").get<double>() == f.gains.det_c0);
    CHECK(j.at("det_defaults").at("c1").get<double>() == f.gains.det_c1);
    CHECK(j.at("det_defaults").at("gamma").get<double>() == f.gains.det_gamma);
    CHECK(j.at("feasible").get<bool>());

    const std::string path = temp_path("etsync_gains.json");
    etsync::write_gains_report(path, f.spectrum, f.gains);
    const auto reloaded = etsync::json::parse(slurp(path));
    CHECK(reloaded == j);
    std::filesystem::remove(path);
}

TEST_CASE("comparison report aggregates the per-seed outcomes", "[reports]") {
    auto row = [](std::uint64_t seed, int ddt_events, int det_events) {
        etsync::SeedComparison r;
        r.seed = seed;
        r.ddt.rule = "ddt";
        r.ddt.total_events = ddt_events;
        r.det.rule = "det";
        r.det.total_events = det_events;
        r.initial_sync_norm = 2.0;
        return r;
    };

    const auto winning = etsync::comparison_report_json(
        {row(1, 5, 6), row(2, 10, 10), row(3, 7, 6)});
    CHECK(winning.at("per_seed").size() == 3);
    CHECK(winning.at("aggregate").at("seeds").get<int>() == 3);
    CHECK(winning.at("aggregate").at("ddt_not_worse").get<int>() == 2);
    CHECK(winning.at("aggregate").at("verdict").get<std::string>() == "ddt_samples_no_more");
    CHECK(winning.at("per_seed")[0].at("ddt").at("total_events").get<int>() == 5);
    CHECK(winning.at("per_seed")[0].at("seed").get<std::uint64_t>() == 1);

    const auto losing = etsync::comparison_report_json(
        {row(1, 10, 5), row(2, 10, 5), row(3, 3, 3)});
    CHECK(losing.at("aggregate").at("ddt_not_worse").get<int>() == 1);
    CHECK(losing.at("aggregate").at("verdict").get<std::string>() == "det_samples_fewer");
}

TEST_CASE("invariant report serialises each check", "[reports]") {
    etsync::InvariantReport report;
    report.checks.push_back({"first", true, -0.5, 0.0, ""});
    report.checks.push_back({"second", false, 0.25, 1e-9, "worst at t=1"});

    const auto j = etsync::invariant_report_json(report);
    REQUIRE(j.at("checks").size() == 2);
    CHECK_FALSE(j.at("all_passed").get<bool>());
    CHECK(j.at("checks")[0].at("name").get<std::string>() == "first");
    CHECK(j.at("checks")[0].at("passed").get<bool>());
    CHECK(j.at("checks")[1].at("worst").get<double>() == 0.25);
    CHECK(j.at("checks")[1].at("detail").get<std::string>() == "worst at t=1");
}

TEST_CASE("unwritable output paths are reported", "[reports]") {
    const auto f = make_fixture(0);
    CHECK_THROWS_AS(etsync::write_events_csv("/nonexistent_dir/etsync.csv", f.run),
                    etsync::config_error);
}
