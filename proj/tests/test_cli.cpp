#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"

using popdyn::cli::run_cli;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "popdyn");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / ("popdyn_test_" + name); }

}  // namespace

TEST_CASE("list parsing") {
    CHECK(popdyn::cli::parse_real_list("0:1:0.25") == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
    CHECK(popdyn::cli::parse_real_list("0.5") == std::vector<double>{0.5});
    CHECK(popdyn::cli::parse_real_list("1,2.5,4") == std::vector<double>{1, 2.5, 4});
    CHECK(popdyn::cli::parse_int_list("3:6") == std::vector<int>{3, 4, 5, 6});
    CHECK(popdyn::cli::parse_int_list("5,10") == std::vector<int>{5, 10});
}

TEST_CASE("winprob rows") {
    auto r = run({"winprob", "--n", "4", "--k", "2", "--alpha", "0"});
    REQUIRE(r.code == 0);
    auto rows = csv(r.out);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"item_id", "b"});
    const double expect[] = {0, 1.0 / 6, 2.0 / 6, 3.0 / 6};
    for (int i = 0; i < 4; ++i) CHECK(std::stod(rows[static_cast<std::size_t>(i + 1)][1]) == doctest::Approx(expect[i]).epsilon(1e-14));

    r = run({"winprob", "--n", "3", "--k", "2", "--alpha", "1", "--mode", "with-rep"});
    rows = csv(r.out);
    CHECK(std::stod(rows[1][1]) == doctest::Approx(4.0 / 121));
    CHECK(std::stod(rows[2][1]) == doctest::Approx(21.0 / 121));
    CHECK(std::stod(rows[3][1]) == doctest::Approx(96.0 / 121));

    r = run({"winprob", "--n", "3", "--k", "2", "--alpha", "1", "--mode", "with-rep", "--perm", "1,3,2"});
    rows = csv(r.out);
    CHECK(std::stod(rows[2][1]) == doctest::Approx(60.0 / 121));
    CHECK(std::stod(rows[3][1]) == doctest::Approx(57.0 / 121));
}

TEST_CASE("usage errors are machine readable") {
    auto r = run({"winprob", "--k", "2", "--alpha", "0"});
    CHECK(r.code == 2);
    const auto j = nlohmann::json::parse(r.err);
    CHECK(j.at("error") == "usage");

    r = run({"simulate", "--n", "3", "--k", "2", "--alpha", "1", "--rounds", "0"});
    CHECK(r.code == 2);
    r = run({"optimize", "--n", "20", "--k", "5", "--mode", "without-rep", "--beta", "-1"});
    CHECK(r.code == 2);
    r = run({"winprob", "--n", "3", "--k", "5", "--alpha", "1"});
    CHECK(r.code != 0);
    CHECK(nlohmann::json::parse(r.err).at("error") == "invalid_config");
    r = run({"nonsense"});
    CHECK(r.code == 2);
}

TEST_CASE("equilibria") {
    auto r = run({"equilibria", "--n", "10", "--k", "2", "--alpha", "1", "--mode", "without-rep", "--strategy", "exhaustive", "--format", "json"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j.at("points").size() == 4);
    CHECK(j.at("points")[0].at("permutation") == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    CHECK(j.at("points")[3].at("permutation") == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 10, 9, 8});
    CHECK(j.at("exact") == true);

    const std::vector<std::string> rnd{"equilibria", "--n", "7", "--k", "2", "--alpha", "1", "--strategy", "randomized", "--trials", "1000", "--seed", "7"};
    const auto a = run(rnd), b = run(rnd);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);

    r = run({"equilibria", "--n", "12", "--k", "2", "--alpha", "1", "--strategy", "exhaustive", "--cap", "10"});
    CHECK(r.code == 1);
    CHECK(nlohmann::json::parse(r.err).at("error") == "cap_exceeded");
}

TEST_CASE("equilibria with attractiveness and edges") {
    const auto edges = temp_file("edges.txt");
    auto r = run({"equilibria", "--n", "4", "--k", "2", "--alpha", "1", "--mode", "with-rep", "--strategy", "exhaustive", "--attractiveness", "--edges", edges.string(), "--format", "json"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    // the remaining sixth of the graph drains into fixed points with tied b
    REQUIRE(j.at("points").size() == 2);
    CHECK(j.at("points")[0].at("attractiveness").get<double>() == doctest::Approx(0.5));
    CHECK(j.at("points")[1].at("attractiveness").get<double>() == doctest::Approx(1.0 / 3));
    std::ifstream in(edges);
    int lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == 24);
    std::filesystem::remove(edges);
}

TEST_CASE("kmin sweeps") {
    auto r = run({"kmin", "--n", "10", "--alpha", "0,0.5,1,2", "--mode", "with-rep"});
    REQUIRE(r.code == 0);
    auto rows = csv(r.out);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].back() == "k_min");
    CHECK(rows[1].back() == "2");
    CHECK(rows[2].back() == "3");
    CHECK(rows[3].back() == "4");
    CHECK(rows[4].back() == "4");

    r = run({"kmin", "--n", "50", "--alpha", "1", "--mode", "without-rep", "--method", "approx"});
    CHECK(csv(r.out)[1].back() == "4");
    r = run({"kmin", "--n", "10", "--alpha", "1", "--fm", "0.5"});
    CHECK(csv(r.out)[1].back() == "none");
    r = run({"kmin", "--n", "3:8", "--alpha", "1", "--method", "exact"});
    CHECK(csv(r.out).size() == 7);
}

TEST_CASE("optimize") {
    auto r = run({"optimize", "--n", "20", "--k", "5", "--mode", "without-rep", "--beta", "2", "--alpha", "0:1.2:0.1", "--format", "json"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("quality").at("alpha_star").get<double>() == doctest::Approx(0.40).epsilon(0.05));
    CHECK(j.at("distance_minima").at("hellinger").at("alpha_star").get<double>() == doctest::Approx(0.58).epsilon(0.04));

    r = run({"optimize", "--n", "20", "--k", "5", "--mode", "without-rep", "--beta", "0", "--alpha", "0:1:0.5", "--format", "json"});
    REQUIRE(r.code == 0);
    const auto flat = nlohmann::json::parse(r.out);
    // q-tilde at beta = 0 is below q-min, so the search stops at alpha = 0
    CHECK(flat.at("quality").at("alpha_star").get<double>() == 0.0);

    r = run({"optimize", "--n", "6", "--k", "2", "--beta", "1", "--alpha", "0:1:0.5"});
    REQUIRE(r.code == 0);
    const auto rows = csv(r.out);
    CHECK(rows[0] == std::vector<std::string>{"alpha", "q_bar", "delta_q", "hellinger", "rel_entropy", "bhattacharyya"});
    CHECK(rows.size() == 4);
}

TEST_CASE("simulate is reproducible and writes files") {
    const auto f1 = temp_file("trace1.csv"), f2 = temp_file("trace2.csv");
    const std::vector<std::string> base{"simulate", "--config", std::string(POPDYN_SOURCE_DIR) + "/configs/classes1.json", "--task", "trace", "--rounds", "2000", "--seed", "5"};
    auto a = base, b = base;
    a.insert(a.end(), {"--out", f1.string()});
    b.insert(b.end(), {"--out", f2.string()});
    REQUIRE(run(a).code == 0);
    REQUIRE(run(b).code == 0);
    std::ifstream x(f1), y(f2);
    std::stringstream sx, sy;
    sx << x.rdbuf();
    sy << y.rdbuf();
    CHECK(!sx.str().empty());
    CHECK(sx.str() == sy.str());
    CHECK(sx.str().rfind("round,item_id,weight,normalized_weight", 0) == 0);
    std::filesystem::remove(f1);
    std::filesystem::remove(f2);

    auto r = run({"simulate", "--n", "5", "--k", "2", "--alpha", "0", "--task", "frequencies", "--rounds", "1000", "--runs", "20", "--format", "json"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out).at("runs") == 20);

    r = run({"simulate", "--config", std::string(POPDYN_SOURCE_DIR) + "/configs/classes1.json", "--task", "time-to-stable", "--alpha", "0,1", "--rounds", "2000", "--runs", "5", "--strategy", "randomized", "--trials", "200"});
    REQUIRE(r.code == 0);
    CHECK(csv(r.out).size() == 3);

    r = run({"simulate", "--n", "5", "--k", "2", "--alpha", "0", "--fm", "0.3", "--task", "naive", "--rounds", "1000", "--runs", "10", "--leader", "4", "--format", "json"});
    CHECK(r.code == 0);
}
